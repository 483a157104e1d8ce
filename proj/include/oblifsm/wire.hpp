#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oblifsm/garbling.hpp"
#include "oblifsm/ot.hpp"
#include "oblifsm/paillier.hpp"

namespace oblifsm {

// Protocol roles, used for channel labeling, metering and error attribution.
enum class Role : std::uint8_t { client, server, helper };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::client: return "client";
    case Role::server: return "server";
    case Role::helper: return "helper";
  }
  return "?";
}

// Frame = 4-byte big-endian payload length || 1-byte message type || payload.
// Identical framing for both protocols and every transport.
enum class MsgType : std::uint8_t {
  msg1 = 0x01,           // client -> server: public key + OT queries
  msg2 = 0x02,           // server -> client: OT answers + initial index/key
  offline_setup = 0x11,  // server -> helper: mask key + garbled matrices
  share_half = 0x12,     // client -> server/helper: packed input-share bits
  partial_reply = 0x13,  // server/helper -> client: masked partial columns
  opening = 0x21,        // output-share forwarding for the chosen opening
  error = 0x7F,
};

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::size_t kMaxFramePayload = std::size_t{1} << 28;

// Desk-scale sanity caps applied while decoding, so a flipped count byte is
// rejected before it can drive an allocation.
inline constexpr std::uint32_t kMaxDimension = 1u << 20;

struct Frame {
  MsgType type{};
  Bytes payload;
  // Round-depth stamp used by in-process metering; never serialized.
  std::uint32_t meter_depth = 0;

  std::size_t framed_size() const { return kFrameHeaderBytes + payload.size(); }
};

inline bool known_msg_type(std::uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::msg1:
    case MsgType::msg2:
    case MsgType::offline_setup:
    case MsgType::share_half:
    case MsgType::partial_reply:
    case MsgType::opening:
    case MsgType::error:
      return true;
  }
  return false;
}

inline Bytes frame_encode(const Frame& f) {
  if (f.payload.size() > kMaxFramePayload) fail(Errc::size_mismatch, "payload too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(f.payload.size()));
  w.u8(static_cast<std::uint8_t>(f.type));
  w.raw(f.payload);
  return w.take();
}

// Incremental parser for stream transports: bytes go in as they arrive,
// whole frames come out.
class FrameReader {
 public:
  void feed(ByteView data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

  std::optional<Frame> next() {
    if (buf_.size() < kFrameHeaderBytes) return std::nullopt;
    const std::size_t len = be_get(ByteView(buf_.data(), 4));
    if (len > kMaxFramePayload) fail(Errc::malformed_message, "frame length out of range");
    const std::uint8_t type = buf_[4];
    if (!known_msg_type(type)) fail(Errc::malformed_message, "unknown message type");
    if (buf_.size() < kFrameHeaderBytes + len) return std::nullopt;
    Frame f;
    f.type = static_cast<MsgType>(type);
    f.payload.assign(buf_.begin() + kFrameHeaderBytes, buf_.begin() + kFrameHeaderBytes + len);
    buf_.erase(buf_.begin(), buf_.begin() + kFrameHeaderBytes + len);
    return f;
  }

  std::size_t buffered() const { return buf_.size(); }

 private:
  Bytes buf_;
};

// ---- two-party messages ----------------------------------------------------

struct Msg1 {
  paillier::PublicKey pk;
  std::vector<OtQuery> queries;  // one per input position, t = |Sigma| each
};

struct Msg2 {
  std::vector<OtAnswer> answers;
  std::uint32_t initial_index = 0;
  Bytes initial_key;
};

inline Bytes encode_msg1(const Msg1& m) {
  ByteWriter w;
  paillier::encode_public_key(w, m.pk);
  w.u32(static_cast<std::uint32_t>(m.queries.size()));
  for (const OtQuery& q : m.queries) {
    w.u32(q.branch_count);
    for (const auto& c : q.ciphertexts) paillier::encode_ciphertext(w, m.pk, c);
  }
  return w.take();
}

inline Msg1 decode_msg1(ByteView payload) {
  ByteReader r{payload};
  Msg1 m;
  m.pk = paillier::decode_public_key(r);
  const std::uint32_t n = r.read_count(4, "query list");
  if (n == 0 || n > kMaxDimension) fail(Errc::malformed_message, "query count out of range");
  m.queries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    OtQuery q;
    q.branch_count = r.read_count(4, "query ciphertexts");
    if (q.branch_count == 0 || q.branch_count > kMaxDimension)
      fail(Errc::malformed_message, "branch count out of range");
    q.ciphertexts.reserve(q.branch_count);
    for (std::uint32_t j = 0; j < q.branch_count; ++j)
      q.ciphertexts.push_back(paillier::decode_ciphertext(r, m.pk));
    m.queries.push_back(std::move(q));
  }
  r.expect_end();
  return m;
}

inline Bytes encode_msg2(const Msg2& m, const paillier::PublicKey& pk) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.answers.size()));
  for (const OtAnswer& a : m.answers) {
    w.u32(static_cast<std::uint32_t>(a.chunks.size()));
    for (const auto& c : a.chunks) paillier::encode_ciphertext(w, pk, c);
  }
  w.u32(m.initial_index);
  w.u32(static_cast<std::uint32_t>(m.initial_key.size()));
  w.raw(m.initial_key);
  return w.take();
}

inline Msg2 decode_msg2(ByteView payload, const paillier::PublicKey& pk) {
  ByteReader r{payload};
  Msg2 m;
  const std::uint32_t n = r.read_count(4, "answer list");
  if (n == 0 || n > kMaxDimension) fail(Errc::malformed_message, "answer count out of range");
  m.answers.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    OtAnswer a;
    const std::uint32_t chunks = r.read_count(4, "answer chunks");
    if (chunks == 0 || chunks > kMaxDimension)
      fail(Errc::malformed_message, "chunk count out of range");
    a.chunks.reserve(chunks);
    for (std::uint32_t j = 0; j < chunks; ++j)
      a.chunks.push_back(paillier::decode_ciphertext(r, pk));
    m.answers.push_back(std::move(a));
  }
  m.initial_index = r.read_u32();
  const std::uint32_t key_len = r.read_count(1, "initial key");
  if (key_len == 0 || key_len > 1024) fail(Errc::malformed_message, "initial key width");
  m.initial_key = r.read_bytes(key_len);
  r.expect_end();
  return m;
}

// ---- garbled-matrix serialization (offline setup body, garble dumps) ------

inline void encode_matrices(ByteWriter& w, const GarbledMatrices& g) {
  w.u32(g.params.input_length);
  w.u32(g.num_states);
  w.u32(g.alphabet_size);
  w.u8(g.out.mode == OutputMode::mealy ? 1 : 0);
  w.u32(g.out.arity);
  w.u32(g.out.alphabet);
  w.u32(g.params.output_field_bytes);
  w.u32(g.params.key_bits);
  for (std::uint32_t i = 0; i < g.params.input_length; ++i) {
    w.u32(static_cast<std::uint32_t>(g.entry_width(i)));
    for (const Bytes& col : g.columns[i]) w.raw(col);
  }
}

inline GarbledMatrices decode_matrices(ByteReader& r) {
  GarbledMatrices g;
  const std::uint32_t n = r.read_u32();
  g.num_states = r.read_u32();
  g.alphabet_size = r.read_u32();
  const std::uint8_t mode = r.read_u8();
  g.out.arity = r.read_u32();
  g.out.alphabet = r.read_u32();
  const std::uint32_t w_out = r.read_u32();
  const std::uint32_t key_bits = r.read_u32();

  if (n == 0 || n > kMaxDimension || g.num_states == 0 || g.num_states > kMaxDimension ||
      g.alphabet_size == 0 || g.alphabet_size > kMaxDimension || mode > 1 ||
      g.out.arity > 4096 || w_out == 0 || w_out > 8 || key_bits == 0 || key_bits % 8 != 0 ||
      key_bits > 4096)
    fail(Errc::malformed_message, "implausible garbled-matrix header");
  g.out.mode = mode == 1 ? OutputMode::mealy : OutputMode::accept;
  if (g.out.mode == OutputMode::mealy && (g.out.arity == 0 || g.out.alphabet < 2))
    fail(Errc::malformed_message, "bad transducer output header");

  g.params.key_bits = key_bits;
  g.params.state_field_bytes = GarblingParams::state_bytes_for(g.num_states);
  g.params.output_field_bytes = w_out;
  g.params.input_length = n;

  g.columns.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t width = r.read_u32();
    if (width != g.entry_width(i))
      fail(Errc::malformed_message, "entry width does not match the round schedule");
    const std::size_t col_len = static_cast<std::size_t>(width) * g.num_states;
    g.columns[i].reserve(g.alphabet_size);
    for (std::uint32_t s = 0; s < g.alphabet_size; ++s)
      g.columns[i].push_back(r.read_bytes(col_len));
  }
  return g;
}

// ---- three-party messages --------------------------------------------------

struct OfflineSetup {
  Bytes mask_key;  // k_SH; no state key, rotation or output mask travels here
  GarbledMatrices matrices;
};

inline Bytes encode_offline_setup(const OfflineSetup& s) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(s.mask_key.size()));
  w.raw(s.mask_key);
  encode_matrices(w, s.matrices);
  return w.take();
}

inline OfflineSetup decode_offline_setup(ByteView payload) {
  ByteReader r{payload};
  OfflineSetup s;
  const std::uint32_t key_len = r.read_count(1, "mask key");
  if (key_len == 0 || key_len > 1024) fail(Errc::malformed_message, "mask key width");
  s.mask_key = r.read_bytes(key_len);
  s.matrices = decode_matrices(r);
  r.expect_end();
  return s;
}

// Input-share bits, row-major by round: bit (i, j) of the n x |Sigma| grid
// sits at position i*|Sigma| + j, packed 8 per byte, most significant first.
struct ShareHalfMsg {
  std::uint32_t input_length = 0;
  std::uint32_t alphabet_size = 0;
  Bytes packed_bits;

  std::uint8_t bit(std::uint32_t round, std::uint32_t symbol) const {
    const std::size_t pos = static_cast<std::size_t>(round) * alphabet_size + symbol;
    return (packed_bits[pos / 8] >> (7 - pos % 8)) & 1;
  }
};

inline std::size_t packed_bit_bytes(std::uint32_t n, std::uint32_t sigma) {
  return (static_cast<std::size_t>(n) * sigma + 7) / 8;
}

inline Bytes encode_share_half(const ShareHalfMsg& m) {
  ByteWriter w;
  w.u32(m.input_length);
  w.u32(m.alphabet_size);
  w.raw(m.packed_bits);
  return w.take();
}

inline ShareHalfMsg decode_share_half(ByteView payload) {
  ByteReader r{payload};
  ShareHalfMsg m;
  m.input_length = r.read_u32();
  m.alphabet_size = r.read_u32();
  if (m.input_length == 0 || m.input_length > kMaxDimension || m.alphabet_size == 0 ||
      m.alphabet_size > kMaxDimension)
    fail(Errc::malformed_message, "share grid out of range");
  m.packed_bits = r.read_bytes(packed_bit_bytes(m.input_length, m.alphabet_size));
  r.expect_end();
  return m;
}

struct PartialReplyMsg {
  std::vector<Bytes> masked_columns;  // one per round
  bool has_initial = false;           // the server's reply also carries these
  std::uint32_t initial_index = 0;
  Bytes initial_key;
};

inline Bytes encode_partial_reply(const PartialReplyMsg& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.masked_columns.size()));
  for (const Bytes& col : m.masked_columns) {
    w.u32(static_cast<std::uint32_t>(col.size()));
    w.raw(col);
  }
  if (m.has_initial) {
    w.u32(m.initial_index);
    w.u32(static_cast<std::uint32_t>(m.initial_key.size()));
    w.raw(m.initial_key);
  }
  return w.take();
}

// Whether the trailer is present is decided by which link the reply arrived
// on, not by a flag byte.
inline PartialReplyMsg decode_partial_reply(ByteView payload, bool expect_initial) {
  ByteReader r{payload};
  PartialReplyMsg m;
  const std::uint32_t n = r.read_count(4, "partial columns");
  if (n == 0 || n > kMaxDimension) fail(Errc::malformed_message, "round count out of range");
  m.masked_columns.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t len = r.read_count(1, "masked column");
    if (len == 0) fail(Errc::malformed_message, "empty masked column");
    m.masked_columns.push_back(r.read_bytes(len));
  }
  if (expect_initial) {
    m.has_initial = true;
    m.initial_index = r.read_u32();
    const std::uint32_t key_len = r.read_count(1, "initial key");
    if (key_len == 0 || key_len > 1024) fail(Errc::malformed_message, "initial key width");
    m.initial_key = r.read_bytes(key_len);
  }
  r.expect_end();
  return m;
}

// ---- opening and error frames ----------------------------------------------

struct OpeningMsg {
  std::vector<std::uint64_t> fields;  // masked output fields, w_out bytes each
};

inline Bytes encode_opening(const OpeningMsg& m, std::uint32_t field_bytes) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.fields.size()));
  for (std::uint64_t v : m.fields) w.field(v, field_bytes);
  return w.take();
}

inline OpeningMsg decode_opening(ByteView payload, std::uint32_t field_bytes) {
  ByteReader r{payload};
  OpeningMsg m;
  const std::uint32_t count = r.read_count(field_bytes, "opening fields");
  m.fields.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) m.fields.push_back(be_get(r.read_view(field_bytes)));
  r.expect_end();
  return m;
}

struct ErrorMsg {
  std::uint32_t code = 0;
  std::string message;
};

inline Bytes encode_error(const ErrorMsg& m) {
  ByteWriter w;
  w.u32(m.code);
  w.u32(static_cast<std::uint32_t>(m.message.size()));
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(m.message.data()), m.message.size()));
  return w.take();
}

inline ErrorMsg decode_error(ByteView payload) {
  ByteReader r{payload};
  ErrorMsg m;
  m.code = r.read_u32();
  const std::uint32_t len = r.read_count(1, "error message");
  Bytes b = r.read_bytes(len);
  m.message.assign(b.begin(), b.end());
  r.expect_end();
  return m;
}

}  // namespace oblifsm
