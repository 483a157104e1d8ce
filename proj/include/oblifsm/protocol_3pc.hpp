#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oblifsm/protocol_2pc.hpp"

namespace oblifsm {

// Helper-assisted variant: the client XOR-shares the one-hot encoding of each
// input symbol between server and helper, each of whom returns the XOR of the
// selected garbled columns masked with a pad derived from a key the two of
// them share. XORing both replies leaves exactly the column at the client's
// symbol. No public-key operation anywhere on this path.

// Everything the helper holds. By construction there is no state key, no
// rotation and no output mask in here.
struct HelperSetup {
  Bytes mask_key;  // k_SH, kappa bits, shared between server and helper
  GarbledMatrices matrices;
};

// One party's half of the XOR-shared one-hot selection bits.
struct InputShares {
  std::uint32_t input_length = 0;
  std::uint32_t alphabet_size = 0;
  std::vector<std::uint8_t> bits;  // n * |Sigma| values in {0,1}, row-major by round

  std::uint8_t at(std::uint32_t round, std::uint32_t symbol) const {
    return bits[static_cast<std::size_t>(round) * alphabet_size + symbol];
  }

  Bytes pack() const {
    Bytes out(packed_bit_bytes(input_length, alphabet_size), 0);
    for (std::size_t pos = 0; pos < bits.size(); ++pos)
      if (bits[pos]) out[pos / 8] |= static_cast<std::uint8_t>(0x80u >> (pos % 8));
    return out;
  }

  static InputShares unpack(const ShareHalfMsg& m) {
    InputShares s;
    s.input_length = m.input_length;
    s.alphabet_size = m.alphabet_size;
    s.bits.resize(static_cast<std::size_t>(m.input_length) * m.alphabet_size);
    for (std::size_t pos = 0; pos < s.bits.size(); ++pos)
      s.bits[pos] = (m.packed_bits[pos / 8] >> (7 - pos % 8)) & 1;
    return s;
  }
};

inline std::pair<InputShares, InputShares> client_share_input(
    std::span<const std::uint32_t> input, std::uint32_t alphabet_size, SecureRng& rng) {
  if (input.empty()) fail(Errc::input_domain, "empty input string");
  if (alphabet_size == 0) fail(Errc::input_domain, "alphabet must be non-empty");
  for (std::uint32_t x : input)
    if (x >= alphabet_size) fail(Errc::input_domain, "input symbol out of range");

  const std::uint32_t n = static_cast<std::uint32_t>(input.size());
  InputShares server_half{n, alphabet_size, {}};
  InputShares helper_half{n, alphabet_size, {}};
  server_half.bits.resize(static_cast<std::size_t>(n) * alphabet_size);
  helper_half.bits.resize(server_half.bits.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < alphabet_size; ++j) {
      const std::uint8_t onehot = (j == input[i]) ? 1 : 0;
      const std::uint8_t r = rng.next_bit();
      const std::size_t pos = static_cast<std::size_t>(i) * alphabet_size + j;
      server_half.bits[pos] = r;
      helper_half.bits[pos] = onehot ^ r;
    }
  }
  return {std::move(server_half), std::move(helper_half)};
}

// XOR of the columns whose share bit is 1, masked with the round pad
// H'(k_SH, round). Serves both server and helper; an empty selection set
// yields the pad alone. Round numbers are 1-based in the pad derivation.
inline std::vector<Bytes> party_partial(const GarbledMatrices& matrices,
                                        const InputShares& half, ByteView mask_key) {
  if (half.input_length != matrices.params.input_length ||
      half.alphabet_size != matrices.alphabet_size)
    fail(Errc::size_mismatch, "share grid does not match the garbled matrices");
  if (half.bits.size() != static_cast<std::size_t>(half.input_length) * half.alphabet_size)
    fail(Errc::size_mismatch, "share bit count");

  std::vector<Bytes> out;
  out.reserve(half.input_length);
  for (std::uint32_t i = 0; i < half.input_length; ++i) {
    Bytes acc = expand_pad(mask_key, i + 1, matrices.column_width(i), kTagPartialMask);
    for (std::uint32_t j = 0; j < half.alphabet_size; ++j)
      if (half.at(i, j)) xor_into(acc, matrices.columns[i][j]);
    out.push_back(std::move(acc));
  }
  return out;
}

// The pads cancel; what remains per round is the column at the client's
// symbol.
inline std::vector<GarbledColumn> client_combine(const std::vector<Bytes>& partial_server,
                                                 const std::vector<Bytes>& partial_helper,
                                                 const SessionParams& params) {
  params.check();
  const std::uint32_t n = params.input_length();
  if (partial_server.size() != n || partial_helper.size() != n)
    fail(Errc::malformed_message, "partial answer count does not match the session");

  std::vector<GarbledColumn> columns;
  columns.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t want = column_bytes(params.garbling, params.output, params.num_states, i);
    if (partial_server[i].size() != want || partial_helper[i].size() != want)
      fail(Errc::malformed_message, "partial column width mismatch");
    GarbledColumn col;
    col.round_index = i;
    col.num_states = params.num_states;
    col.data = partial_server[i];
    xor_into(col.data, partial_helper[i]);
    columns.push_back(std::move(col));
  }
  return columns;
}

// Server-side state for one three-party session.
struct Server3pcSession {
  SessionParams params;
  GarblingSecrets secrets;
  GarbledFsm garbled;
  Bytes mask_key;
};

// Offline phase: garble and hand matrices + k_SH to the helper. May happen
// any time before the client shows up.
inline std::pair<Server3pcSession, OfflineSetup> server_offline_setup(const Fsm& machine,
                                                                      const SessionParams& params,
                                                                      SecureRng& rng) {
  params.check();
  require_valid(machine);
  if (machine.num_states != params.num_states || machine.alphabet_size != params.alphabet_size)
    fail(Errc::size_mismatch, "machine dimensions do not match the session");

  Server3pcSession s;
  s.params = params;
  s.secrets = gen_secrets(machine, params.garbling, rng);
  s.garbled = garble(machine, params.garbling, s.secrets);
  s.mask_key = rng.bytes(params.garbling.key_bytes());
  return {std::move(s), OfflineSetup{s.mask_key, s.garbled.matrices}};
}

inline PartialReplyMsg server_partial_reply(const Server3pcSession& s, const ShareHalfMsg& half) {
  if (half.input_length != s.params.input_length() ||
      half.alphabet_size != s.params.alphabet_size)
    fail(Errc::malformed_message, "share grid does not match the session");
  PartialReplyMsg m;
  m.masked_columns = party_partial(s.garbled.matrices, InputShares::unpack(half), s.mask_key);
  m.has_initial = true;
  m.initial_index = s.garbled.initial_index;
  m.initial_key = s.garbled.initial_key;
  return m;
}

inline PartialReplyMsg helper_partial_reply(const HelperSetup& setup, const ShareHalfMsg& half) {
  if (half.input_length != setup.matrices.params.input_length ||
      half.alphabet_size != setup.matrices.alphabet_size)
    fail(Errc::malformed_message, "share grid does not match the setup");
  PartialReplyMsg m;
  m.masked_columns =
      party_partial(setup.matrices, InputShares::unpack(half), setup.mask_key);
  m.has_initial = false;
  return m;
}

inline OutputShare client_finish_3pc(std::span<const std::uint32_t> input,
                                     const SessionParams& params,
                                     const PartialReplyMsg& from_server,
                                     const PartialReplyMsg& from_helper) {
  if (!from_server.has_initial)
    fail(Errc::malformed_message, "server reply is missing the initial index/key");
  if (from_server.initial_key.size() != params.garbling.key_bytes())
    fail(Errc::malformed_message, "initial key width mismatch");
  auto columns = client_combine(from_server.masked_columns, from_helper.masked_columns, params);
  return evaluate_garbled(columns, input, from_server.initial_index, from_server.initial_key,
                          params.garbling, params.output, params.num_states);
}

}  // namespace oblifsm
