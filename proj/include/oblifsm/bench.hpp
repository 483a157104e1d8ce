#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oblifsm/session.hpp"

namespace oblifsm {

// Deterministic throwaway machine for benchmarks: random transitions and a
// random accept set, derived from the grid point and seed.
inline Fsm random_accept_machine(std::uint32_t num_states, std::uint32_t alphabet_size,
                                 SecureRng& rng) {
  Fsm m;
  m.num_states = num_states;
  m.alphabet_size = alphabet_size;
  m.initial_state = static_cast<std::uint32_t>(rng.uniform_below(num_states));
  m.transitions.assign(num_states, std::vector<std::uint32_t>(alphabet_size));
  for (auto& row : m.transitions)
    for (auto& t : row) t = static_cast<std::uint32_t>(rng.uniform_below(num_states));
  for (std::uint32_t q = 0; q < num_states; ++q)
    if (rng.next_bit()) m.accept_states.push_back(q);
  return m;
}

struct GridSpec {
  std::vector<Protocol> protocols{Protocol::two_party, Protocol::three_party};
  std::vector<std::uint32_t> input_lengths{16, 32};
  std::vector<std::uint32_t> alphabet_sizes{8, 16};
  std::vector<std::uint32_t> state_counts{8, 16};
  std::vector<std::uint32_t> key_bits{512};
};

// Grid strings look like "protocol=2pc,3pc;n=16,32;sigma=8,16;q=8,16;key_bits=512".
// Omitted dimensions keep their defaults.
inline GridSpec parse_grid(const std::string& spec) {
  GridSpec g;
  if (spec.empty()) return g;
  std::istringstream in(spec);
  std::string clause;
  while (std::getline(in, clause, ';')) {
    const std::size_t eq = clause.find('=');
    if (eq == std::string::npos) fail(Errc::parse, "grid clause missing '=': " + clause);
    const std::string key = clause.substr(0, eq);
    std::vector<std::string> values;
    std::string v;
    std::istringstream vs(clause.substr(eq + 1));
    while (std::getline(vs, v, ',')) values.push_back(v);
    if (values.empty()) fail(Errc::parse, "grid clause has no values: " + clause);

    auto as_u32 = [&](const std::string& s) {
      try {
        return static_cast<std::uint32_t>(std::stoul(s));
      } catch (const std::exception&) {
        fail(Errc::parse, "bad grid value: " + s);
      }
    };
    if (key == "protocol") {
      std::vector<Protocol> ps;
      for (const auto& s : values) {
        if (s == "2pc")
          ps.push_back(Protocol::two_party);
        else if (s == "3pc")
          ps.push_back(Protocol::three_party);
        else
          fail(Errc::parse, "unknown protocol: " + s);
      }
      g.protocols = std::move(ps);
    } else if (key == "n") {
      g.input_lengths.clear();
      for (const auto& s : values) g.input_lengths.push_back(as_u32(s));
    } else if (key == "sigma") {
      g.alphabet_sizes.clear();
      for (const auto& s : values) g.alphabet_sizes.push_back(as_u32(s));
    } else if (key == "q") {
      g.state_counts.clear();
      for (const auto& s : values) g.state_counts.push_back(as_u32(s));
    } else if (key == "key_bits") {
      g.key_bits.clear();
      for (const auto& s : values) g.key_bits.push_back(as_u32(s));
    } else {
      fail(Errc::parse, "unknown grid dimension: " + key);
    }
  }
  return g;
}

struct BenchRow {
  Protocol protocol{};
  std::uint32_t n = 0, sigma = 0, q = 0, key_bits = 0;
  std::uint64_t bytes_c2s = 0;   // online bytes sent by the client
  std::uint64_t bytes_s2c = 0;   // online bytes received by the client
  std::uint64_t bytes_offline = 0;
  std::uint32_t rounds_online = 0;
  double ms_garble = 0, ms_ot = 0, ms_eval = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

// One session per grid point, shares left unopened so the online counters
// carry protocol traffic only.
inline BenchReport bench_scaling(const GridSpec& grid, std::uint64_t seed) {
  BenchReport report;
  std::uint64_t point = 0;
  for (Protocol protocol : grid.protocols) {
    for (std::uint32_t kb : grid.key_bits) {
      for (std::uint32_t q : grid.state_counts) {
        for (std::uint32_t sigma : grid.alphabet_sizes) {
          for (std::uint32_t n : grid.input_lengths) {
            SecureRng rng(seed ^ (0x9e3779b97f4a7c15ULL * ++point));
            Fsm machine = random_accept_machine(q, sigma, rng);
            std::vector<std::uint32_t> input(n);
            for (auto& x : input) x = static_cast<std::uint32_t>(rng.uniform_below(sigma));

            SessionParams params = SessionParams::for_machine(machine, n, kb);
            RunResult r = run_session(protocol, machine, input, params, OpenTo::none,
                                      rng.next_u64());

            BenchRow row;
            row.protocol = protocol;
            row.n = n;
            row.sigma = sigma;
            row.q = q;
            row.key_bits = kb;
            row.bytes_c2s = r.comm.bytes_from_client;
            row.bytes_s2c = r.comm.bytes_to_client;
            row.bytes_offline = r.comm.bytes_offline;
            row.rounds_online = r.comm.rounds_online;
            row.ms_garble = r.times.ms_garble;
            row.ms_ot = r.times.ms_ot;
            row.ms_eval = r.times.ms_eval;
            report.rows.push_back(row);
          }
        }
      }
    }
  }
  return report;
}

inline void write_csv(const BenchReport& report, std::ostream& out) {
  out << "protocol,n,sigma,q,key_bits,bytes_c2s,bytes_s2c,bytes_offline,rounds_online,"
         "ms_garble,ms_ot,ms_eval\n";
  for (const BenchRow& r : report.rows) {
    out << protocol_name(r.protocol) << ',' << r.n << ',' << r.sigma << ',' << r.q << ','
        << r.key_bits << ',' << r.bytes_c2s << ',' << r.bytes_s2c << ',' << r.bytes_offline
        << ',' << r.rounds_online << ',' << r.ms_garble << ',' << r.ms_ot << ',' << r.ms_eval
        << '\n';
  }
}

}  // namespace oblifsm
