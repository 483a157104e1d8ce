#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "oblifsm/bytes.hpp"
#include "oblifsm/fsm.hpp"
#include "oblifsm/hash.hpp"
#include "oblifsm/rng.hpp"

namespace oblifsm {

// Public shape of the protocol result: everything a client needs to parse
// entry layouts and reduce opened outputs. No secrets in here.
struct OutputSpec {
  OutputMode mode = OutputMode::accept;
  std::uint32_t arity = 0;     // rho, mealy mode
  std::uint32_t alphabet = 2;  // |Gamma|, mealy mode

  static OutputSpec of(const Fsm& m) {
    OutputSpec s;
    s.mode = m.output_mode;
    if (m.output_mode == OutputMode::mealy) {
      s.arity = m.output_arity;
      s.alphabet = m.output_alphabet_size;
    }
    return s;
  }
};

struct GarblingParams {
  std::uint32_t key_bits = 128;          // kappa
  std::uint32_t state_field_bytes = 1;   // bytes for a permuted state index
  std::uint32_t output_field_bytes = 1;  // w_out, output shares mod 2^(8*w_out)
  std::uint32_t input_length = 0;        // n

  std::size_t key_bytes() const { return key_bits / 8; }

  static std::uint32_t state_bytes_for(std::uint32_t num_states) {
    if (num_states <= 1) return 0;
    unsigned bits = std::bit_width(num_states - 1);
    return (bits + 7) / 8;
  }

  static GarblingParams for_machine(const Fsm& m, std::uint32_t n, std::uint32_t key_bits = 128,
                                    std::uint32_t w_out = 1) {
    GarblingParams p;
    p.key_bits = key_bits;
    p.state_field_bytes = state_bytes_for(m.num_states);
    p.output_field_bytes = w_out;
    p.input_length = n;
    p.check();
    return p;
  }

  void check() const {
    if (key_bits == 0 || key_bits % 8 != 0)
      fail(Errc::input_domain, "key_bits must be a positive multiple of 8");
    if (output_field_bytes == 0 || output_field_bytes > 8)
      fail(Errc::input_domain, "output_field_bytes must be in [1,8]");
    if (input_length == 0) fail(Errc::input_domain, "input length must be at least 1");
  }
};

// Width schedule, rounds 0-based. Rounds before the last carry the permuted
// next state and its key (plus masked step outputs for transducers); the
// last round carries only the masked output payload.
inline std::size_t output_fields_per_step(const OutputSpec& s) {
  return s.mode == OutputMode::mealy ? s.arity : 0;
}

inline std::size_t final_output_fields(const OutputSpec& s) {
  return s.mode == OutputMode::mealy ? s.arity : 1;
}

inline std::size_t entry_bytes(const GarblingParams& p, const OutputSpec& s, std::uint32_t round) {
  if (round + 1 < p.input_length)
    return p.state_field_bytes + p.key_bytes() + output_fields_per_step(s) * p.output_field_bytes;
  return final_output_fields(s) * p.output_field_bytes;
}

inline std::size_t column_bytes(const GarblingParams& p, const OutputSpec& s,
                                std::uint32_t num_states, std::uint32_t round) {
  return static_cast<std::size_t>(num_states) * entry_bytes(p, s, round);
}

// Server-side secrets for one session: per-round per-row keys, the row
// rotations, and the additive output masks that form the server's share.
// Strictly single-use.
struct GarblingSecrets {
  std::vector<std::vector<Bytes>> state_keys;  // [n][Q], row index = permuted state
  std::vector<std::uint32_t> rotations;        // n+1 values; the last one is never consumed
  std::uint64_t final_mask = 0;                // r, accept mode
  std::vector<std::vector<std::uint64_t>> step_masks;  // [n][rho], mealy mode
};

inline GarblingSecrets gen_secrets(const Fsm& m, const GarblingParams& p, SecureRng& rng) {
  p.check();
  const std::uint32_t n = p.input_length;
  GarblingSecrets s;
  s.state_keys.resize(n);
  for (auto& round_keys : s.state_keys) {
    round_keys.resize(m.num_states);
    for (auto& k : round_keys) k = rng.bytes(p.key_bytes());
  }
  s.rotations.resize(n + 1);
  for (auto& r : s.rotations) r = static_cast<std::uint32_t>(rng.uniform_below(m.num_states));
  const std::uint64_t mask = field_mask(p.output_field_bytes);
  if (m.output_mode == OutputMode::accept) {
    s.final_mask = rng.next_u64() & mask;
  } else {
    s.step_masks.resize(n);
    for (auto& step : s.step_masks) {
      step.resize(m.output_arity);
      for (auto& z : step) z = rng.next_u64() & mask;
    }
  }
  return s;
}

// The n garbled matrices. Columns are stored contiguously (|Q| entries of the
// round's width back to back) because both the OT items and the three-party
// column XOR operate on whole columns.
struct GarbledMatrices {
  std::uint32_t num_states = 0;
  std::uint32_t alphabet_size = 0;
  GarblingParams params;
  OutputSpec out;
  std::vector<std::vector<Bytes>> columns;  // [n][Sigma], each |Q| * entry_bytes(round)

  std::size_t entry_width(std::uint32_t round) const { return entry_bytes(params, out, round); }
  std::size_t column_width(std::uint32_t round) const {
    return column_bytes(params, out, num_states, round);
  }
  ByteView entry(std::uint32_t round, std::uint32_t row, std::uint32_t symbol) const {
    const std::size_t w = entry_width(round);
    return ByteView(columns[round][symbol]).subspan(row * w, w);
  }
};

struct GarbledFsm {
  GarbledMatrices matrices;
  std::uint32_t initial_index = 0;  // q0 + r_1 mod |Q|
  Bytes initial_key;                // k^1 at the permuted initial row
};

// One selected column, as the client reassembles it.
struct GarbledColumn {
  std::uint32_t round_index = 0;
  std::uint32_t num_states = 0;
  Bytes data;

  ByteView entry(std::uint32_t row, std::size_t width) const {
    return ByteView(data).subspan(row * width, width);
  }
};

namespace detail {

inline void check_secrets_shape(const Fsm& m, const GarblingParams& p,
                                const GarblingSecrets& s) {
  const std::uint32_t n = p.input_length;
  if (s.state_keys.size() != n) fail(Errc::size_mismatch, "state_keys round count");
  for (const auto& round_keys : s.state_keys) {
    if (round_keys.size() != m.num_states) fail(Errc::size_mismatch, "state_keys row count");
    for (const auto& k : round_keys)
      if (k.size() != p.key_bytes()) fail(Errc::size_mismatch, "state key width");
  }
  if (s.rotations.size() != n + 1) fail(Errc::size_mismatch, "rotation count");
  for (std::uint32_t r : s.rotations)
    if (r >= m.num_states) fail(Errc::size_mismatch, "rotation out of range");
  if (m.output_mode == OutputMode::mealy) {
    if (s.step_masks.size() != n) fail(Errc::size_mismatch, "step mask count");
    for (const auto& step : s.step_masks)
      if (step.size() != m.output_arity) fail(Errc::size_mismatch, "step mask arity");
  }
}

// Unmasked output value(s) attached to the transition (q', sigma). Accept
// mode is lowered to a single 0/1 output on the final transition.
inline std::uint64_t final_accept_value(const Fsm& m, std::uint32_t q_true, std::uint32_t sym) {
  return m.is_accepting(m.transitions[q_true][sym]) ? 1 : 0;
}

}  // namespace detail

inline GarbledFsm garble(const Fsm& m, const GarblingParams& p, const GarblingSecrets& secrets) {
  require_valid(m);
  p.check();
  if (p.state_field_bytes != GarblingParams::state_bytes_for(m.num_states))
    fail(Errc::size_mismatch, "state_field_bytes does not match |Q|");
  if (m.output_mode == OutputMode::mealy &&
      m.output_alphabet_size - 1 > field_mask(p.output_field_bytes))
    fail(Errc::size_mismatch, "output alphabet does not fit the output field");
  detail::check_secrets_shape(m, p, secrets);

  const std::uint32_t n = p.input_length;
  const std::uint32_t q_count = m.num_states;
  const OutputSpec out = OutputSpec::of(m);
  const std::size_t w_out = p.output_field_bytes;

  GarbledFsm g;
  g.matrices.num_states = q_count;
  g.matrices.alphabet_size = m.alphabet_size;
  g.matrices.params = p;
  g.matrices.out = out;
  g.matrices.columns.resize(n);

  for (std::uint32_t i = 0; i < n; ++i) {
    const bool last = (i + 1 == n);
    const std::size_t width = entry_bytes(p, out, i);
    g.matrices.columns[i].assign(m.alphabet_size, Bytes{});
    for (std::uint32_t sym = 0; sym < m.alphabet_size; ++sym) {
      Bytes& col = g.matrices.columns[i][sym];
      col.reserve(width * q_count);
      for (std::uint32_t q = 0; q < q_count; ++q) {
        // Row q holds the transition of the true state q' = q - r_i.
        const std::uint32_t q_true = (q + q_count - secrets.rotations[i] % q_count) % q_count;
        Bytes plain;
        plain.reserve(width);
        if (!last) {
          const std::uint32_t next_true = m.transitions[q_true][sym];
          const std::uint32_t next_perm = (next_true + secrets.rotations[i + 1]) % q_count;
          be_put(plain, next_perm, p.state_field_bytes);
          const Bytes& next_key = secrets.state_keys[i + 1][next_perm];
          plain.insert(plain.end(), next_key.begin(), next_key.end());
          if (out.mode == OutputMode::mealy)
            for (std::uint32_t k = 0; k < out.arity; ++k)
              be_put(plain,
                     add_mod_field(secrets.step_masks[i][k], m.outputs[q_true][sym][k], w_out),
                     w_out);
        } else if (out.mode == OutputMode::accept) {
          be_put(plain,
                 add_mod_field(secrets.final_mask, detail::final_accept_value(m, q_true, sym),
                               w_out),
                 w_out);
        } else {
          for (std::uint32_t k = 0; k < out.arity; ++k)
            be_put(plain,
                   add_mod_field(secrets.step_masks[i][k], m.outputs[q_true][sym][k], w_out),
                   w_out);
        }
        Bytes pad = expand_pad(secrets.state_keys[i][q], sym, width, kTagEntryPad);
        xor_into(plain, pad);
        col.insert(col.end(), plain.begin(), plain.end());
      }
    }
  }

  g.initial_index = (m.initial_state + secrets.rotations[0]) % q_count;
  g.initial_key = secrets.state_keys[0][g.initial_index];
  return g;
}

// Decrypted fields of one entry. Rounds before the last populate
// permuted_state/next_key (and masked_outputs for transducers); the final
// round populates masked_outputs only. Wrong keys yield garbage fields, not
// errors: there is no integrity tag inside an entry.
struct EntryFields {
  std::uint64_t permuted_state = 0;
  Bytes next_key;
  std::vector<std::uint64_t> masked_outputs;
};

inline EntryFields decrypt_entry(ByteView entry, ByteView key, std::uint32_t symbol,
                                 std::uint32_t round, const GarblingParams& p,
                                 const OutputSpec& out) {
  const std::size_t width = entry_bytes(p, out, round);
  if (entry.size() != width)
    fail(Errc::malformed_entry, "entry width does not match the round schedule");

  Bytes plain(entry.begin(), entry.end());
  Bytes pad = expand_pad(key, symbol, width, kTagEntryPad);
  xor_into(plain, pad);

  EntryFields f;
  ByteReader r{ByteView(plain)};
  if (round + 1 < p.input_length) {
    f.permuted_state = be_get(r.read_view(p.state_field_bytes));
    f.next_key = r.read_bytes(p.key_bytes());
    for (std::size_t k = 0; k < output_fields_per_step(out); ++k)
      f.masked_outputs.push_back(be_get(r.read_view(p.output_field_bytes)));
  } else {
    for (std::size_t k = 0; k < final_output_fields(out); ++k)
      f.masked_outputs.push_back(be_get(r.read_view(p.output_field_bytes)));
  }
  return f;
}

// The client's additive share of the result.
struct OutputShare {
  OutputMode mode = OutputMode::accept;
  std::uint64_t accept_share = 0;                        // accept mode
  std::vector<std::vector<std::uint64_t>> step_shares;   // mealy mode, [n][rho]
};

inline OutputShare evaluate_garbled(const std::vector<GarbledColumn>& columns,
                                    std::span<const std::uint32_t> input,
                                    std::uint32_t initial_index, const Bytes& initial_key,
                                    const GarblingParams& p, const OutputSpec& out,
                                    std::uint32_t num_states) {
  p.check();
  const std::uint32_t n = p.input_length;
  if (columns.size() != n || input.size() != n)
    fail(Errc::size_mismatch, "column/input count does not match the session length");
  if (initial_index >= num_states) fail(Errc::corrupt_chain, "initial index out of range");
  if (initial_key.size() != p.key_bytes()) fail(Errc::size_mismatch, "initial key width");

  OutputShare share;
  share.mode = out.mode;
  std::uint32_t index = initial_index;
  Bytes key = initial_key;
  for (std::uint32_t i = 0; i < n; ++i) {
    const GarbledColumn& col = columns[i];
    const std::size_t width = entry_bytes(p, out, i);
    if (col.round_index != i || col.num_states != num_states ||
        col.data.size() != width * num_states)
      fail(Errc::malformed_entry, "column does not match the round schedule");
    EntryFields f = decrypt_entry(col.entry(index, width), key, input[i], i, p, out);
    if (i + 1 < n) {
      if (f.permuted_state >= num_states)
        fail(Errc::corrupt_chain, "decoded permuted state out of range");
      index = static_cast<std::uint32_t>(f.permuted_state);
      key = std::move(f.next_key);
      if (out.mode == OutputMode::mealy) share.step_shares.push_back(std::move(f.masked_outputs));
    } else if (out.mode == OutputMode::accept) {
      share.accept_share = f.masked_outputs.at(0);
    } else {
      share.step_shares.push_back(std::move(f.masked_outputs));
    }
  }
  return share;
}

// Reconstructed result. The protocol never reveals the final state, only the
// output attached to the final transition.
struct OpenedOutput {
  OutputMode mode = OutputMode::accept;
  int accept_bit = -1;
  std::vector<std::vector<std::uint32_t>> step_outputs;
};

inline OpenedOutput reconstruct_output(const OutputShare& client_share,
                                       const GarblingSecrets& server_share,
                                       const GarblingParams& p, const OutputSpec& out) {
  const std::size_t w = p.output_field_bytes;
  OpenedOutput o;
  o.mode = out.mode;
  if (out.mode == OutputMode::accept) {
    std::uint64_t bit = sub_mod_field(client_share.accept_share, server_share.final_mask, w);
    if (bit > 1) fail(Errc::protocol_failure, "reconstructed accept value outside {0,1}");
    o.accept_bit = static_cast<int>(bit);
    return o;
  }
  if (client_share.step_shares.size() != server_share.step_masks.size())
    fail(Errc::size_mismatch, "share/mask step count mismatch");
  o.step_outputs.reserve(client_share.step_shares.size());
  for (std::size_t i = 0; i < client_share.step_shares.size(); ++i) {
    const auto& shares = client_share.step_shares[i];
    const auto& masks = server_share.step_masks[i];
    if (shares.size() != masks.size()) fail(Errc::size_mismatch, "share/mask arity mismatch");
    std::vector<std::uint32_t> step;
    step.reserve(shares.size());
    for (std::size_t k = 0; k < shares.size(); ++k)
      step.push_back(
          static_cast<std::uint32_t>(sub_mod_field(shares[k], masks[k], w) % out.alphabet));
    o.step_outputs.push_back(std::move(step));
  }
  return o;
}

}  // namespace oblifsm
