#pragma once

#include <openssl/rand.h>

#include <array>
#include <cstdint>

#include "oblifsm/bytes.hpp"
#include "oblifsm/hash.hpp"

namespace oblifsm {

// Hash-counter DRBG over SHA-256. All protocol randomness flows through one
// of these, injected at the session boundary: the default constructor seeds
// from OS entropy, the seeded constructors give reproducible streams for
// tests and benchmarks.
class SecureRng {
 public:
  SecureRng() {
    if (RAND_bytes(key_.data(), static_cast<int>(key_.size())) != 1)
      fail(Errc::protocol_failure, "OS entropy unavailable");
  }

  explicit SecureRng(std::uint64_t seed) {
    Bytes s;
    be_put(s, seed, 8);
    key_ = sha256(s);
  }

  explicit SecureRng(const std::array<std::uint8_t, 32>& seed) : key_(seed) {}

  void fill(std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      if (avail_ == 0) refill();
      std::size_t take = n < avail_ ? n : avail_;
      std::memcpy(p, block_.data() + (block_.size() - avail_), take);
      avail_ -= take;
      p += take;
      n -= take;
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
  }

  std::uint64_t next_u64() {
    std::uint8_t b[8];
    fill(b, 8);
    return be_get(ByteView(b, 8));
  }

  std::uint8_t next_bit() {
    std::uint8_t b;
    fill(&b, 1);
    return b & 1;
  }

  // Uniform in [0, m) by rejection.
  std::uint64_t uniform_below(std::uint64_t m) {
    if (m == 0) fail(Errc::input_domain, "uniform_below(0)");
    if (m == 1) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % m);
    for (;;) {
      std::uint64_t v = next_u64();
      if (v < limit) return v % m;
    }
  }

  // Independent child stream, e.g. one per protocol role.
  SecureRng fork() {
    std::array<std::uint8_t, 32> child{};
    fill(child.data(), child.size());
    return SecureRng(child);
  }

 private:
  void refill() {
    Bytes msg(key_.begin(), key_.end());
    be_put(msg, counter_++, 8);
    block_ = sha256(msg);
    avail_ = block_.size();
  }

  std::array<std::uint8_t, 32> key_{};
  std::array<std::uint8_t, 32> block_{};
  std::uint64_t counter_ = 0;
  std::size_t avail_ = 0;
};

}  // namespace oblifsm
