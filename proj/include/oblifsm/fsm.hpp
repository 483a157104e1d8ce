#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oblifsm/errors.hpp"

namespace oblifsm {

enum class OutputMode { accept, mealy };

// Deterministic machine over dense 0-based state and symbol indices. Labeled
// machines must be mapped to indices before they get here; the matrix form
// keeps wire encodings compact.
struct Fsm {
  std::uint32_t num_states = 0;
  std::uint32_t initial_state = 0;
  std::uint32_t alphabet_size = 0;
  std::vector<std::vector<std::uint32_t>> transitions;  // [Q][Sigma] -> state

  OutputMode output_mode = OutputMode::accept;
  std::vector<std::uint32_t> accept_states;  // accept mode

  std::uint32_t output_arity = 0;          // rho, mealy mode
  std::uint32_t output_alphabet_size = 0;  // |Gamma|, mealy mode
  std::vector<std::vector<std::vector<std::uint32_t>>> outputs;  // [Q][Sigma][rho]

  bool is_accepting(std::uint32_t q) const {
    return std::find(accept_states.begin(), accept_states.end(), q) != accept_states.end();
  }
};

struct Violation {
  std::string field;
  int row = -1;  // -1 when not coordinate-shaped
  int col = -1;
  std::string message;
};

// Violations are data, not failures: callers decide what to do with them.
inline std::vector<Violation> validate(const Fsm& m) {
  std::vector<Violation> v;
  auto add = [&](std::string field, int row, int col, std::string msg) {
    v.push_back({std::move(field), row, col, std::move(msg)});
  };

  if (m.num_states == 0) add("num_states", -1, -1, "must be positive");
  if (m.alphabet_size == 0) add("alphabet_size", -1, -1, "must be positive");
  if (m.num_states > 0 && m.initial_state >= m.num_states)
    add("initial_state", -1, -1, "initial state out of range");

  if (m.transitions.size() != m.num_states) {
    add("transitions", -1, -1, "expected " + std::to_string(m.num_states) + " rows, got " +
                                   std::to_string(m.transitions.size()));
  } else {
    for (std::size_t q = 0; q < m.transitions.size(); ++q) {
      if (m.transitions[q].size() != m.alphabet_size) {
        add("transitions", static_cast<int>(q), -1, "row has wrong width");
        continue;
      }
      for (std::size_t s = 0; s < m.transitions[q].size(); ++s)
        if (m.transitions[q][s] >= m.num_states)
          add("transitions", static_cast<int>(q), static_cast<int>(s), "target state out of range");
    }
  }

  if (m.output_mode == OutputMode::accept) {
    for (std::size_t i = 0; i < m.accept_states.size(); ++i)
      if (m.accept_states[i] >= m.num_states)
        add("accept_states", static_cast<int>(i), -1, "accept state out of range");
  } else {
    if (m.output_arity == 0) add("output_arity", -1, -1, "must be at least 1");
    if (m.output_alphabet_size < 2) add("output_alphabet_size", -1, -1, "must be at least 2");
    if (m.outputs.size() != m.num_states) {
      add("outputs", -1, -1, "expected " + std::to_string(m.num_states) + " rows, got " +
                                 std::to_string(m.outputs.size()));
    } else {
      for (std::size_t q = 0; q < m.outputs.size(); ++q) {
        if (m.outputs[q].size() != m.alphabet_size) {
          add("outputs", static_cast<int>(q), -1, "row has wrong width");
          continue;
        }
        for (std::size_t s = 0; s < m.outputs[q].size(); ++s) {
          if (m.outputs[q][s].size() != m.output_arity) {
            add("outputs", static_cast<int>(q), static_cast<int>(s), "entry has wrong arity");
            continue;
          }
          for (std::uint32_t val : m.outputs[q][s])
            if (val >= m.output_alphabet_size)
              add("outputs", static_cast<int>(q), static_cast<int>(s), "output value out of range");
        }
      }
    }
  }
  return v;
}

inline void require_valid(const Fsm& m) {
  auto v = validate(m);
  if (!v.empty()) {
    std::ostringstream os;
    os << "invalid machine: " << v.front().field;
    if (v.front().row >= 0) os << "[" << v.front().row << "]";
    if (v.front().col >= 0) os << "[" << v.front().col << "]";
    os << " " << v.front().message << " (" << v.size() << " violation(s))";
    fail(Errc::input_domain, os.str());
  }
}

struct EvalResult {
  std::uint32_t final_state = 0;
  int accept_bit = -1;  // 0/1 in accept mode, -1 otherwise
  std::vector<std::vector<std::uint32_t>> step_outputs;  // mealy mode, one vector per step
};

inline EvalResult evaluate_plain(const Fsm& m, std::span<const std::uint32_t> input) {
  require_valid(m);
  if (input.empty()) fail(Errc::input_domain, "empty input string");

  EvalResult r;
  std::uint32_t q = m.initial_state;
  for (std::uint32_t x : input) {
    if (x >= m.alphabet_size) fail(Errc::input_domain, "input symbol out of range");
    if (m.output_mode == OutputMode::mealy) r.step_outputs.push_back(m.outputs[q][x]);
    q = m.transitions[q][x];
  }
  r.final_state = q;
  if (m.output_mode == OutputMode::accept) r.accept_bit = m.is_accepting(q) ? 1 : 0;
  return r;
}

inline std::string serialize(const Fsm& m) {
  require_valid(m);
  nlohmann::json j;
  j["num_states"] = m.num_states;
  j["initial_state"] = m.initial_state;
  j["alphabet_size"] = m.alphabet_size;
  j["transitions"] = m.transitions;
  if (m.output_mode == OutputMode::accept) {
    j["output_mode"] = "accept";
    j["accept_states"] = m.accept_states;
  } else {
    j["output_mode"] = "mealy";
    j["output_arity"] = m.output_arity;
    j["output_alphabet_size"] = m.output_alphabet_size;
    j["outputs"] = m.outputs;
  }
  return j.dump(2);
}

inline Fsm deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("bad json: ") + e.what());
  }

  Fsm m;
  try {
    j.at("num_states").get_to(m.num_states);
    j.at("initial_state").get_to(m.initial_state);
    j.at("alphabet_size").get_to(m.alphabet_size);
    j.at("transitions").get_to(m.transitions);
    std::string mode = j.at("output_mode").get<std::string>();
    if (mode == "accept") {
      m.output_mode = OutputMode::accept;
      j.at("accept_states").get_to(m.accept_states);
    } else if (mode == "mealy") {
      m.output_mode = OutputMode::mealy;
      j.at("output_arity").get_to(m.output_arity);
      j.at("output_alphabet_size").get_to(m.output_alphabet_size);
      j.at("outputs").get_to(m.outputs);
    } else {
      fail(Errc::parse, "output_mode must be \"accept\" or \"mealy\"");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("bad fsm document: ") + e.what());
  }
  require_valid(m);
  return m;
}

// One line of comma-separated symbol indices, e.g. "1,0,2".
inline std::vector<std::uint32_t> parse_symbol_line(const std::string& line) {
  std::vector<std::uint32_t> out;
  std::string tok;
  std::istringstream in(line);
  while (std::getline(in, tok, ',')) {
    std::size_t first = tok.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) fail(Errc::parse, "empty symbol token");
    std::size_t last = tok.find_last_not_of(" \t\r\n");
    tok = tok.substr(first, last - first + 1);
    try {
      unsigned long v = std::stoul(tok);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      fail(Errc::parse, "bad symbol token: " + tok);
    }
  }
  if (out.empty()) fail(Errc::parse, "no symbols in input line");
  return out;
}

// Raw-byte inputs come with a 256-entry byte -> symbol table; -1 marks bytes
// that the machine's alphabet does not cover.
inline std::vector<std::uint32_t> map_raw_bytes(std::span<const std::uint8_t> raw,
                                                const std::array<std::int32_t, 256>& table) {
  std::vector<std::uint32_t> out;
  out.reserve(raw.size());
  for (std::uint8_t b : raw) {
    std::int32_t s = table[b];
    if (s < 0) fail(Errc::input_domain, "byte 0x" + std::to_string(b) + " has no symbol mapping");
    out.push_back(static_cast<std::uint32_t>(s));
  }
  if (out.empty()) fail(Errc::input_domain, "empty raw input");
  return out;
}

}  // namespace oblifsm
