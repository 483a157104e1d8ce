#pragma once

#include <gmpxx.h>

#include <cstdint>

#include "oblifsm/bytes.hpp"
#include "oblifsm/rng.hpp"

namespace oblifsm {

inline mpz_class mpz_from_bytes_be(ByteView in) {
  mpz_class z;
  if (!in.empty()) mpz_import(z.get_mpz_t(), in.size(), 1, 1, 1, 0, in.data());
  return z;
}

// Big-endian magnitude zero-padded on the left to exactly `width` bytes.
// Fixed widths keep every wire message size deterministic.
inline Bytes mpz_to_bytes_be(const mpz_class& z, std::size_t width) {
  if (sgn(z) < 0) fail(Errc::size_mismatch, "negative value has no magnitude encoding");
  std::size_t need = (mpz_sizeinbase(z.get_mpz_t(), 2) + 7) / 8;
  if (z == 0) need = 0;
  if (need > width) fail(Errc::size_mismatch, "value wider than its field");
  Bytes out(width, 0);
  if (need > 0) {
    std::size_t written = 0;
    mpz_export(out.data() + (width - need), &written, 1, 1, 1, 0, z.get_mpz_t());
  }
  return out;
}

inline mpz_class mpz_powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class r;
  ::mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline mpz_class mpz_invert(const mpz_class& a, const mpz_class& mod) {
  mpz_class r;
  if (::mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    fail(Errc::protocol_failure, "value not invertible");
  return r;
}

inline mpz_class mpz_random_bits(unsigned bits, SecureRng& rng) {
  Bytes buf = rng.bytes((bits + 7) / 8);
  unsigned drop = static_cast<unsigned>(buf.size() * 8 - bits);
  if (drop > 0) buf[0] &= static_cast<std::uint8_t>(0xff >> drop);
  return mpz_from_bytes_be(buf);
}

inline mpz_class mpz_uniform_below(const mpz_class& m, SecureRng& rng) {
  unsigned bits = static_cast<unsigned>(mpz_sizeinbase(m.get_mpz_t(), 2));
  for (;;) {
    mpz_class v = mpz_random_bits(bits, rng);
    if (v < m) return v;
  }
}

// Random prime of exactly `bits` bits with the top two bits set, so a product
// of two of them has exactly 2*bits bits. Miller-Rabin with 64 rounds.
inline mpz_class random_prime(unsigned bits, SecureRng& rng) {
  if (bits < 16) fail(Errc::input_domain, "prime size too small");
  for (;;) {
    mpz_class cand = mpz_random_bits(bits, rng);
    mpz_setbit(cand.get_mpz_t(), bits - 1);
    mpz_setbit(cand.get_mpz_t(), bits - 2);
    mpz_setbit(cand.get_mpz_t(), 0);
    if (mpz_probab_prime_p(cand.get_mpz_t(), 64) > 0) return cand;
  }
}

}  // namespace oblifsm
