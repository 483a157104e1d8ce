#include <catch2/catch_amalgamated.hpp>

#include "oblifsm/fsm.hpp"
#include "testutil.hpp"

using namespace oblifsm;
using testutil::oracle_walk;
using testutil::parity_machine;
using testutil::random_input;
using testutil::random_machine;

TEST_CASE("validate accepts the parity machine", "[fsm]") {
  CHECK(validate(parity_machine()).empty());
}

TEST_CASE("validate reports out-of-range transitions with coordinates", "[fsm]") {
  Fsm m = parity_machine();
  m.transitions[0][1] = 5;
  auto v = validate(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "transitions");
  CHECK(v[0].row == 0);
  CHECK(v[0].col == 1);
}

TEST_CASE("validate reports a malformed mealy outputs matrix", "[fsm]") {
  SecureRng rng(1);
  Fsm m = random_machine(rng, 3, 2, OutputMode::mealy);
  m.outputs.pop_back();
  auto v = validate(m);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].field == "outputs");

  Fsm m2 = random_machine(rng, 3, 2, OutputMode::mealy);
  m2.outputs[1][0].push_back(0);  // wrong arity at (1,0)
  auto v2 = validate(m2);
  REQUIRE_FALSE(v2.empty());
  CHECK(v2[0].field == "outputs");
  CHECK(v2[0].row == 1);
  CHECK(v2[0].col == 0);
}

TEST_CASE("parity machine accepts strings with an even number of ones", "[fsm]") {
  Fsm m = parity_machine();
  std::vector<std::uint32_t> input{1, 0, 1};
  EvalResult r = evaluate_plain(m, input);
  CHECK(r.final_state == 0);
  CHECK(r.accept_bit == 1);

  input = {1, 1, 1};
  CHECK(evaluate_plain(m, input).accept_bit == 0);
}

TEST_CASE("single-symbol input applies delta once", "[fsm]") {
  SecureRng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Fsm m = random_machine(rng, 5, 3, OutputMode::accept);
    std::uint32_t s = static_cast<std::uint32_t>(rng.uniform_below(3));
    std::vector<std::uint32_t> input{s};
    CHECK(evaluate_plain(m, input).final_state == m.transitions[m.initial_state][s]);
  }
}

TEST_CASE("evaluate_plain matches the table-walk oracle", "[fsm]") {
  SecureRng rng(3);
  Fsm m = random_machine(rng, 8, 4, OutputMode::accept);
  auto input = random_input(rng, 16, 4);
  EvalResult r = evaluate_plain(m, input);
  auto w = oracle_walk(m, input);
  CHECK(r.final_state == w.final_state);
  CHECK(r.accept_bit == w.accept_bit);

  for (int trial = 0; trial < 50; ++trial) {
    OutputMode mode = rng.next_bit() ? OutputMode::mealy : OutputMode::accept;
    Fsm rm = random_machine(rng, 2 + rng.uniform_below(10), 2 + rng.uniform_below(5), mode);
    auto in = random_input(rng, 1 + rng.uniform_below(20), rm.alphabet_size);
    EvalResult got = evaluate_plain(rm, in);
    auto want = oracle_walk(rm, in);
    CHECK(got.final_state == want.final_state);
    CHECK(got.accept_bit == want.accept_bit);
    CHECK(got.step_outputs == want.step_outputs);
  }
}

TEST_CASE("empty input and out-of-range symbols are rejected", "[fsm]") {
  Fsm m = parity_machine();
  std::vector<std::uint32_t> empty;
  CHECK_THROWS_AS(evaluate_plain(m, empty), Error);
  std::vector<std::uint32_t> bad{2};
  CHECK_THROWS_AS(evaluate_plain(m, bad), Error);
}

TEST_CASE("mealy step outputs line up with pre-transition states", "[fsm]") {
  SecureRng rng(4);
  Fsm m = random_machine(rng, 4, 3, OutputMode::mealy);
  auto input = random_input(rng, 10, 3);
  EvalResult r = evaluate_plain(m, input);
  REQUIRE(r.step_outputs.size() == input.size());
  std::uint32_t q = m.initial_state;
  for (std::size_t i = 0; i < input.size(); ++i) {
    CHECK(r.step_outputs[i] == m.outputs[q][input[i]]);
    q = m.transitions[q][input[i]];
  }
}

TEST_CASE("serialize/deserialize round-trips random machines", "[fsm]") {
  SecureRng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    OutputMode mode = rng.next_bit() ? OutputMode::mealy : OutputMode::accept;
    Fsm m = random_machine(rng, 1 + rng.uniform_below(12), 1 + rng.uniform_below(6), mode);
    Fsm back = deserialize(serialize(m));
    CHECK(back.num_states == m.num_states);
    CHECK(back.initial_state == m.initial_state);
    CHECK(back.alphabet_size == m.alphabet_size);
    CHECK(back.transitions == m.transitions);
    CHECK(back.output_mode == m.output_mode);
    CHECK(back.accept_states == m.accept_states);
    CHECK(back.output_arity == m.output_arity);
    CHECK(back.output_alphabet_size == m.output_alphabet_size);
    CHECK(back.outputs == m.outputs);
  }
}

TEST_CASE("deserialize rejects missing fields and domain violations", "[fsm]") {
  CHECK_THROWS_AS(deserialize(R"({"num_states":2,"initial_state":0,"alphabet_size":2,)"
                              R"("output_mode":"accept","accept_states":[]})"),
                  Error);  // no transitions
  CHECK_THROWS_AS(deserialize(R"({"num_states":2,"initial_state":0,"alphabet_size":2,)"
                              R"("transitions":[[0,-1],[1,0]],)"
                              R"("output_mode":"accept","accept_states":[]})"),
                  Error);  // negative state index
  CHECK_THROWS_AS(deserialize("not json at all"), Error);
}

TEST_CASE("determinism: repeated evaluation gives identical results", "[fsm]") {
  SecureRng rng(6);
  Fsm m = random_machine(rng, 6, 4, OutputMode::mealy);
  auto input = random_input(rng, 12, 4);
  EvalResult a = evaluate_plain(m, input);
  EvalResult b = evaluate_plain(m, input);
  CHECK(a.final_state == b.final_state);
  CHECK(a.step_outputs == b.step_outputs);
}

TEST_CASE("prefix consistency: one more symbol equals one more delta step", "[fsm]") {
  SecureRng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Fsm m = random_machine(rng, 2 + rng.uniform_below(8), 2 + rng.uniform_below(4),
                           OutputMode::accept);
    auto input = random_input(rng, 1 + rng.uniform_below(15), m.alphabet_size);
    std::uint32_t s = static_cast<std::uint32_t>(rng.uniform_below(m.alphabet_size));
    std::uint32_t prefix_final = evaluate_plain(m, input).final_state;
    auto extended = input;
    extended.push_back(s);
    CHECK(evaluate_plain(m, extended).final_state == m.transitions[prefix_final][s]);
  }
}

TEST_CASE("symbol line parsing", "[fsm]") {
  CHECK(parse_symbol_line("1,0,2") == std::vector<std::uint32_t>{1, 0, 2});
  CHECK(parse_symbol_line(" 3 , 4 ") == std::vector<std::uint32_t>{3, 4});
  CHECK_THROWS_AS(parse_symbol_line(""), Error);
  CHECK_THROWS_AS(parse_symbol_line("1,,2"), Error);
  CHECK_THROWS_AS(parse_symbol_line("1,x"), Error);
}

TEST_CASE("raw byte inputs map through the declared table", "[fsm]") {
  std::array<std::int32_t, 256> table{};
  table.fill(-1);
  table['a'] = 0;
  table['b'] = 1;
  const std::uint8_t raw[] = {'a', 'b', 'a'};
  CHECK(map_raw_bytes(std::span<const std::uint8_t>(raw, 3), table) ==
        std::vector<std::uint32_t>{0, 1, 0});
  const std::uint8_t bad[] = {'a', 'z'};
  CHECK_THROWS_AS(map_raw_bytes(std::span<const std::uint8_t>(bad, 2), table), Error);
}
