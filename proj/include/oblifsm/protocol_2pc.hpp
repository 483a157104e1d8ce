#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oblifsm/garbling.hpp"
#include "oblifsm/ot.hpp"
#include "oblifsm/wire.hpp"

namespace oblifsm {

// Public parameters of one session. Both roles hold the same values:
// dimensions, input length and field layout are public, only the machine's
// transitions/outputs and the input string are private.
struct SessionParams {
  std::uint32_t num_states = 0;
  std::uint32_t alphabet_size = 0;
  GarblingParams garbling;
  OutputSpec output;
  std::uint32_t he_bits = 2048;
  std::uint64_t session_id = 0;

  std::uint32_t input_length() const { return garbling.input_length; }

  static SessionParams for_machine(const Fsm& m, std::uint32_t n, std::uint32_t he_bits = 2048,
                                   std::uint32_t key_bits = 128, std::uint32_t w_out = 1) {
    require_valid(m);
    SessionParams p;
    p.num_states = m.num_states;
    p.alphabet_size = m.alphabet_size;
    p.garbling = GarblingParams::for_machine(m, n, key_bits, w_out);
    p.output = OutputSpec::of(m);
    p.he_bits = he_bits;
    return p;
  }

  void check() const {
    if (num_states == 0 || alphabet_size == 0)
      fail(Errc::input_domain, "machine dimensions must be positive");
    garbling.check();
    if (garbling.state_field_bytes != GarblingParams::state_bytes_for(num_states))
      fail(Errc::input_domain, "state field width does not match |Q|");
  }
};

enum class Phase : std::uint8_t { init, await_answer, await_query, done };

struct ClientSession {
  SessionParams params;
  Phase phase = Phase::init;
  std::vector<std::uint32_t> input;
  paillier::KeyPair keys;
  std::vector<OtReceiverState> ot_states;
};

struct ServerSession {
  SessionParams params;
  Phase phase = Phase::init;
  GarblingSecrets secrets;  // the output masks in here are the server's share
  GarbledFsm garbled;
};

// Round 1: the client encodes each input symbol as a one-hot OT query. The
// public key rides in the same message, keeping the session self-contained
// at two flows.
inline std::pair<ClientSession, Msg1> client_start(std::span<const std::uint32_t> input,
                                                   const SessionParams& params, SecureRng& rng) {
  params.check();
  if (input.size() != params.input_length())
    fail(Errc::input_domain, "input length does not match the session");
  for (std::uint32_t x : input)
    if (x >= params.alphabet_size) fail(Errc::input_domain, "input symbol out of range");

  ClientSession s;
  s.params = params;
  s.input.assign(input.begin(), input.end());
  s.keys = paillier::keygen(params.he_bits, rng);

  Msg1 m;
  m.pk = s.keys.pk;
  m.queries.reserve(input.size());
  for (std::uint32_t x : input) {
    auto [q, st] = ot_query(x, params.alphabet_size, s.keys.pk, rng);
    m.queries.push_back(std::move(q));
    s.ot_states.push_back(st);
  }
  s.phase = Phase::await_answer;
  return {std::move(s), std::move(m)};
}

// Garbling step, exposed separately so a server can precompute offline.
// Fresh secrets are drawn per session.
inline ServerSession server_prepare(const Fsm& machine, const SessionParams& params,
                                    SecureRng& rng) {
  params.check();
  require_valid(machine);
  if (machine.num_states != params.num_states || machine.alphabet_size != params.alphabet_size)
    fail(Errc::size_mismatch, "machine dimensions do not match the session");
  ServerSession s;
  s.params = params;
  s.secrets = gen_secrets(machine, params.garbling, rng);
  s.garbled = garble(machine, params.garbling, s.secrets);
  s.phase = Phase::await_query;
  return s;
}

// Round 2: answer every OT with the columns of the matching garbled matrix
// and attach the permuted initial index and its key.
inline Msg2 server_answer(ServerSession& s, const Msg1& msg1, SecureRng& rng) {
  if (s.phase != Phase::await_query)
    fail(Errc::protocol_failure, "server session is not awaiting a query");
  const SessionParams& params = s.params;
  if (msg1.queries.size() != params.input_length())
    fail(Errc::malformed_message, "expected one OT query per input position");
  for (const OtQuery& q : msg1.queries) {
    if (q.branch_count != params.alphabet_size || q.ciphertexts.size() != q.branch_count)
      fail(Errc::malformed_message, "query branch count does not match |Sigma|");
    for (const auto& c : q.ciphertexts) paillier::check_same_key(c, msg1.pk);
  }

  Msg2 m;
  m.answers.reserve(params.input_length());
  for (std::uint32_t i = 0; i < params.input_length(); ++i)
    m.answers.push_back(ot_answer(msg1.pk, msg1.queries[i], s.garbled.matrices.columns[i], rng));
  m.initial_index = s.garbled.initial_index;
  m.initial_key = s.garbled.initial_key;
  s.phase = Phase::done;
  return m;
}

// The default schedule garbles lazily at message arrival.
inline std::pair<ServerSession, Msg2> server_respond(const Fsm& machine,
                                                     const SessionParams& params,
                                                     const Msg1& msg1, SecureRng& rng) {
  ServerSession s = server_prepare(machine, params, rng);
  Msg2 m = server_answer(s, msg1, rng);
  return {std::move(s), std::move(m)};
}

// Round 2 received: decode the selected columns and walk the garbled chain.
inline OutputShare client_finish(ClientSession& session, const Msg2& msg2) {
  if (session.phase != Phase::await_answer)
    fail(Errc::protocol_failure, "client session is not awaiting an answer");
  const SessionParams& p = session.params;
  if (msg2.answers.size() != p.input_length())
    fail(Errc::malformed_message, "expected one OT answer per input position");
  if (msg2.initial_key.size() != p.garbling.key_bytes())
    fail(Errc::malformed_message, "initial key width mismatch");

  std::vector<GarbledColumn> columns;
  columns.reserve(p.input_length());
  for (std::uint32_t i = 0; i < p.input_length(); ++i) {
    const std::size_t len = column_bytes(p.garbling, p.output, p.num_states, i);
    GarbledColumn col;
    col.round_index = i;
    col.num_states = p.num_states;
    col.data = ot_decode(session.keys, session.ot_states[i], msg2.answers[i], len);
    columns.push_back(std::move(col));
  }
  OutputShare share = evaluate_garbled(columns, session.input, msg2.initial_index,
                                       msg2.initial_key, p.garbling, p.output, p.num_states);
  session.phase = Phase::done;
  return share;
}

// Opening: identical math to reconstruct_output; `to` only names who is meant
// to learn the result once the counterpart forwards its share.
inline OpenedOutput open_output(Role to, const OutputShare& client_share,
                                const GarblingSecrets& server_share, const SessionParams& params) {
  if (to == Role::helper) fail(Errc::input_domain, "outputs open to client or server only");
  return reconstruct_output(client_share, server_share, params.garbling, params.output);
}

// Mask fields in opening-message order (what a server forwards when the
// client is meant to learn the result).
inline std::vector<std::uint64_t> opening_fields_of_masks(const GarblingSecrets& s,
                                                          const OutputSpec& out) {
  if (out.mode == OutputMode::accept) return {s.final_mask};
  std::vector<std::uint64_t> fields;
  for (const auto& step : s.step_masks) fields.insert(fields.end(), step.begin(), step.end());
  return fields;
}

inline std::vector<std::uint64_t> opening_fields_of_share(const OutputShare& s) {
  if (s.mode == OutputMode::accept) return {s.accept_share};
  std::vector<std::uint64_t> fields;
  for (const auto& step : s.step_shares) fields.insert(fields.end(), step.begin(), step.end());
  return fields;
}

// Rebuild the counterpart structures from forwarded opening fields.
inline GarblingSecrets masks_from_opening(const std::vector<std::uint64_t>& fields,
                                          const SessionParams& params) {
  GarblingSecrets s;
  const std::uint32_t n = params.input_length();
  if (params.output.mode == OutputMode::accept) {
    if (fields.size() != 1) fail(Errc::malformed_message, "expected one mask field");
    s.final_mask = fields[0];
    return s;
  }
  if (fields.size() != static_cast<std::size_t>(n) * params.output.arity)
    fail(Errc::malformed_message, "mask field count mismatch");
  s.step_masks.assign(n, std::vector<std::uint64_t>(params.output.arity));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t k = 0; k < params.output.arity; ++k)
      s.step_masks[i][k] = fields[static_cast<std::size_t>(i) * params.output.arity + k];
  return s;
}

inline OutputShare share_from_opening(const std::vector<std::uint64_t>& fields,
                                      const SessionParams& params) {
  OutputShare s;
  s.mode = params.output.mode;
  const std::uint32_t n = params.input_length();
  if (s.mode == OutputMode::accept) {
    if (fields.size() != 1) fail(Errc::malformed_message, "expected one share field");
    s.accept_share = fields[0];
    return s;
  }
  if (fields.size() != static_cast<std::size_t>(n) * params.output.arity)
    fail(Errc::malformed_message, "share field count mismatch");
  s.step_shares.assign(n, std::vector<std::uint64_t>(params.output.arity));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t k = 0; k < params.output.arity; ++k)
      s.step_shares[i][k] = fields[static_cast<std::size_t>(i) * params.output.arity + k];
  return s;
}

}  // namespace oblifsm
