#pragma once

#include <cstdint>
#include <vector>

#include "oblifsm/paillier.hpp"

namespace oblifsm {

// 1-out-of-t OT from additively homomorphic encryption of a one-hot choice
// vector. Upload is t ciphertexts regardless of item size; download is one
// ciphertext per plaintext-sized slice of the selected item, with the same t
// query ciphertexts reused for every slice.

struct OtQuery {
  std::uint32_t branch_count = 0;  // t
  std::vector<paillier::Ciphertext> ciphertexts;
};

struct OtReceiverState {
  std::uint32_t choice = 0;  // u
  std::uint32_t branch_count = 0;
  std::uint64_t key_id = 0;
};

struct OtAnswer {
  std::vector<paillier::Ciphertext> chunks;
};

// Two bytes of headroom keep the homomorphic sum of one selected slice below
// n: a slice is < 2^(8*chunk_bytes) <= 2^(key_bits-16) < n.
inline std::size_t ot_chunk_bytes(unsigned key_bits) { return (key_bits - 16) / 8; }

inline std::size_t ot_chunk_count(std::size_t item_len, unsigned key_bits) {
  std::size_t cb = ot_chunk_bytes(key_bits);
  return (item_len + cb - 1) / cb;
}

inline std::pair<OtQuery, OtReceiverState> ot_query(std::uint32_t choice, std::uint32_t branches,
                                                    const paillier::PublicKey& pk,
                                                    SecureRng& rng) {
  if (branches == 0) fail(Errc::input_domain, "branch count must be positive");
  if (choice >= branches) fail(Errc::input_domain, "OT choice out of range");
  OtQuery q;
  q.branch_count = branches;
  q.ciphertexts.reserve(branches);
  for (std::uint32_t i = 0; i < branches; ++i)
    q.ciphertexts.push_back(paillier::encrypt(pk, i == choice ? 1 : 0, rng));
  return {std::move(q), OtReceiverState{choice, branches, pk.id}};
}

inline OtAnswer ot_answer(const paillier::PublicKey& pk, const OtQuery& query,
                          const std::vector<Bytes>& items, SecureRng& rng) {
  if (query.ciphertexts.size() != query.branch_count || query.branch_count == 0)
    fail(Errc::malformed_message, "query ciphertext count mismatch");
  if (items.size() != query.branch_count)
    fail(Errc::size_mismatch, "item count does not match branch count");
  const std::size_t len = items.front().size();
  for (const Bytes& b : items)
    if (b.size() != len) fail(Errc::size_mismatch, "OT items must have equal length");
  if (len == 0) fail(Errc::size_mismatch, "OT items must be non-empty");
  for (const auto& c : query.ciphertexts) paillier::check_same_key(c, pk);

  const std::size_t cb = ot_chunk_bytes(pk.bits);
  OtAnswer ans;
  ans.chunks.reserve(ot_chunk_count(len, pk.bits));
  for (std::size_t off = 0; off < len; off += cb) {
    const std::size_t slice = std::min(cb, len - off);
    paillier::Ciphertext acc;
    bool have = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
      mpz_class v = mpz_from_bytes_be(ByteView(items[i].data() + off, slice));
      paillier::Ciphertext term = paillier::he_scalar_mul(pk, query.ciphertexts[i], v);
      acc = have ? paillier::he_add(pk, acc, term) : term;
      have = true;
    }
    ans.chunks.push_back(paillier::rerandomize(pk, acc, rng));
  }
  return ans;
}

inline Bytes ot_decode(const paillier::KeyPair& kp, const OtReceiverState& state,
                       const OtAnswer& answer, std::size_t item_len) {
  if (state.key_id != kp.pk.id) fail(Errc::key_mismatch, "answer under a different key");
  const std::size_t cb = ot_chunk_bytes(kp.pk.bits);
  const std::size_t expected = ot_chunk_count(item_len, kp.pk.bits);
  if (answer.chunks.size() != expected) fail(Errc::corrupt_answer, "unexpected chunk count");

  Bytes out;
  out.reserve(item_len);
  for (std::size_t j = 0; j < answer.chunks.size(); ++j) {
    const std::size_t slice = std::min(cb, item_len - j * cb);
    mpz_class v = paillier::decrypt(kp, answer.chunks[j]);
    if (mpz_sizeinbase(v.get_mpz_t(), 2) > slice * 8 || (v != 0 && slice == 0))
      fail(Errc::corrupt_answer, "chunk plaintext exceeds its slice range");
    Bytes sb = mpz_to_bytes_be(v, slice);
    out.insert(out.end(), sb.begin(), sb.end());
  }
  return out;
}

}  // namespace oblifsm
