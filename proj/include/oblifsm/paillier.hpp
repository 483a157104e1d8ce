#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>

#include "oblifsm/bigint.hpp"
#include "oblifsm/bytes.hpp"
#include "oblifsm/hash.hpp"
#include "oblifsm/rng.hpp"

namespace oblifsm::paillier {

// Process-wide tally of public-key operations. The three-party protocol is
// required to stay HE-free; tests snapshot this around a session to prove it.
struct OpCounts {
  std::uint64_t keygen = 0, encrypt = 0, decrypt = 0, add = 0, scalar_mul = 0, add_const = 0,
                rerandomize = 0;
  std::uint64_t total() const {
    return keygen + encrypt + decrypt + add + scalar_mul + add_const + rerandomize;
  }
};

namespace detail {
struct AtomicOps {
  std::atomic<std::uint64_t> keygen{0}, encrypt{0}, decrypt{0}, add{0}, scalar_mul{0},
      add_const{0}, rerandomize{0};
};
inline AtomicOps& ops() {
  static AtomicOps o;
  return o;
}
}  // namespace detail

inline OpCounts op_counts() {
  auto& o = detail::ops();
  return {o.keygen.load(),     o.encrypt.load(),   o.decrypt.load(),    o.add.load(),
          o.scalar_mul.load(), o.add_const.load(), o.rerandomize.load()};
}

struct PublicKey {
  mpz_class n;
  mpz_class n_squared;
  unsigned bits = 0;        // bit length of n
  std::uint64_t id = 0;     // first 8 bytes of sha256(n), big-endian

  std::size_t modulus_bytes() const { return (bits + 7) / 8; }
  std::size_t ciphertext_bytes() const { return (2 * bits + 7) / 8; }
};

struct SecretKey {
  mpz_class lambda;  // lcm(p-1, q-1)
  mpz_class mu;      // lambda^-1 mod n
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;
};

struct Ciphertext {
  mpz_class value;       // element of Z_{n^2}
  std::uint64_t key_id = 0;
};

inline std::uint64_t key_id_of(const mpz_class& n, unsigned bits) {
  Digest d = sha256(mpz_to_bytes_be(n, (bits + 7) / 8));
  return be_get(ByteView(d.data(), 8));
}

inline bool insecure_small_keys_allowed() {
  const char* v = std::getenv("OBLIFSM_INSECURE_SMALL_KEYS");
  return v != nullptr && v[0] == '1';
}

inline void check_key_bits(unsigned bits) {
  if (bits != 512 && bits != 1024 && bits != 2048)
    fail(Errc::input_domain, "HE key size must be 512, 1024 or 2048 bits");
  if (bits < 1024 && !insecure_small_keys_allowed())
    fail(Errc::insecure_key_size,
         "sub-1024-bit keys require OBLIFSM_INSECURE_SMALL_KEYS=1 (test use only)");
}

inline KeyPair from_primes(const mpz_class& p, const mpz_class& q, unsigned bits) {
  KeyPair kp;
  kp.pk.n = p * q;
  kp.pk.n_squared = kp.pk.n * kp.pk.n;
  kp.pk.bits = bits;
  kp.pk.id = key_id_of(kp.pk.n, bits);
  mpz_class pm1 = p - 1, qm1 = q - 1;
  mpz_lcm(kp.sk.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
  kp.sk.mu = mpz_invert(kp.sk.lambda % kp.pk.n, kp.pk.n);
  return kp;
}

inline KeyPair keygen(unsigned bits, SecureRng& rng) {
  check_key_bits(bits);
  detail::ops().keygen.fetch_add(1, std::memory_order_relaxed);
  for (;;) {
    mpz_class p = random_prime(bits / 2, rng);
    mpz_class q = random_prime(bits / 2, rng);
    if (p == q) continue;
    return from_primes(p, q, bits);
  }
}

inline void check_same_key(const Ciphertext& c, const PublicKey& pk) {
  if (c.key_id != pk.id) fail(Errc::key_mismatch, "ciphertext under a different public key");
}

// Enc(m) = (1 + m*n) * r^n mod n^2 with explicit nonce r, the g = n+1 form.
inline Ciphertext encrypt_with_nonce(const PublicKey& pk, const mpz_class& m, const mpz_class& r) {
  if (m < 0 || m >= pk.n) fail(Errc::input_domain, "plaintext outside Z_n");
  mpz_class c = (1 + m * pk.n) % pk.n_squared;
  c = c * mpz_powm(r, pk.n, pk.n_squared) % pk.n_squared;
  return {c, pk.id};
}

inline mpz_class random_nonce(const PublicKey& pk, SecureRng& rng) {
  for (;;) {
    mpz_class r = mpz_uniform_below(pk.n, rng);
    if (r == 0) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
    if (g == 1) return r;
  }
}

inline Ciphertext encrypt(const PublicKey& pk, const mpz_class& m, SecureRng& rng) {
  detail::ops().encrypt.fetch_add(1, std::memory_order_relaxed);
  return encrypt_with_nonce(pk, m, random_nonce(pk, rng));
}

inline mpz_class decrypt(const PublicKey& pk, const SecretKey& sk, const Ciphertext& c) {
  detail::ops().decrypt.fetch_add(1, std::memory_order_relaxed);
  check_same_key(c, pk);
  mpz_class u = mpz_powm(c.value, sk.lambda, pk.n_squared);
  mpz_class l = (u - 1) / pk.n;
  return l * sk.mu % pk.n;
}

inline mpz_class decrypt(const KeyPair& kp, const Ciphertext& c) {
  return decrypt(kp.pk, kp.sk, c);
}

inline Ciphertext he_add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  detail::ops().add.fetch_add(1, std::memory_order_relaxed);
  check_same_key(a, pk);
  check_same_key(b, pk);
  return {a.value * b.value % pk.n_squared, pk.id};
}

inline Ciphertext he_scalar_mul(const PublicKey& pk, const Ciphertext& c, const mpz_class& m) {
  detail::ops().scalar_mul.fetch_add(1, std::memory_order_relaxed);
  check_same_key(c, pk);
  if (m < 0) fail(Errc::input_domain, "scalar must be non-negative");
  return {mpz_powm(c.value, m, pk.n_squared), pk.id};
}

inline Ciphertext he_add_const(const PublicKey& pk, const Ciphertext& c, const mpz_class& m) {
  detail::ops().add_const.fetch_add(1, std::memory_order_relaxed);
  check_same_key(c, pk);
  if (m < 0 || m >= pk.n) fail(Errc::input_domain, "constant outside Z_n");
  return {c.value * ((1 + m * pk.n) % pk.n_squared) % pk.n_squared, pk.id};
}

inline Ciphertext rerandomize(const PublicKey& pk, const Ciphertext& c, SecureRng& rng) {
  detail::ops().rerandomize.fetch_add(1, std::memory_order_relaxed);
  check_same_key(c, pk);
  mpz_class r = random_nonce(pk, rng);
  return {c.value * mpz_powm(r, pk.n, pk.n_squared) % pk.n_squared, pk.id};
}

// Wire forms: 4-byte big-endian length, then the big-endian magnitude padded
// to the fixed modulus width.
inline void encode_public_key(ByteWriter& w, const PublicKey& pk) {
  Bytes nb = mpz_to_bytes_be(pk.n, pk.modulus_bytes());
  w.u32(static_cast<std::uint32_t>(nb.size()));
  w.raw(nb);
}

inline PublicKey decode_public_key(ByteReader& r) {
  std::uint32_t len = r.read_count(1, "public key");
  if (len == 0) fail(Errc::malformed_message, "empty public key");
  Bytes nb = r.read_bytes(len);
  PublicKey pk;
  pk.n = mpz_from_bytes_be(nb);
  if (pk.n <= 1) fail(Errc::malformed_message, "degenerate public key modulus");
  pk.n_squared = pk.n * pk.n;
  pk.bits = static_cast<unsigned>(len * 8);
  pk.id = key_id_of(pk.n, pk.bits);
  return pk;
}

inline void encode_ciphertext(ByteWriter& w, const PublicKey& pk, const Ciphertext& c) {
  check_same_key(c, pk);
  Bytes vb = mpz_to_bytes_be(c.value, pk.ciphertext_bytes());
  w.u32(static_cast<std::uint32_t>(vb.size()));
  w.raw(vb);
}

inline Ciphertext decode_ciphertext(ByteReader& r, const PublicKey& pk) {
  std::uint32_t len = r.read_count(1, "ciphertext");
  if (len != pk.ciphertext_bytes()) fail(Errc::malformed_message, "ciphertext width mismatch");
  Bytes vb = r.read_bytes(len);
  Ciphertext c{mpz_from_bytes_be(vb), pk.id};
  if (c.value >= pk.n_squared) fail(Errc::malformed_message, "ciphertext outside Z_{n^2}");
  return c;
}

}  // namespace oblifsm::paillier
