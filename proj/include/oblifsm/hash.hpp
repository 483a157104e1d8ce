#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>

#include "oblifsm/bytes.hpp"

namespace oblifsm {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size())
    fail(Errc::protocol_failure, "sha256 failed");
  return out;
}

// Domain tags keep the two random-oracle uses apart: H encrypts garbled
// entries, H' masks the three-party partial answers.
inline constexpr std::uint8_t kTagEntryPad = 0x01;
inline constexpr std::uint8_t kTagPartialMask = 0x02;

// Counter-mode expansion of SHA-256 into a pad of arbitrary width:
//   Hash(tag || key || symbol_be32 || counter_be32) for counter = 0,1,...
// truncated to `width`. Prefixes agree across widths for fixed inputs.
inline Bytes expand_pad(ByteView key, std::uint32_t symbol, std::size_t width, std::uint8_t tag) {
  if (width == 0) fail(Errc::size_mismatch, "pad width must be positive");
  Bytes msg;
  msg.reserve(1 + key.size() + 8);
  msg.push_back(tag);
  msg.insert(msg.end(), key.begin(), key.end());
  be_put(msg, symbol, 4);
  be_put(msg, 0, 4);

  Bytes pad;
  pad.reserve(width + 32);
  for (std::uint32_t counter = 0; pad.size() < width; ++counter) {
    const std::size_t ctr_at = msg.size() - 4;
    msg[ctr_at] = static_cast<std::uint8_t>(counter >> 24);
    msg[ctr_at + 1] = static_cast<std::uint8_t>(counter >> 16);
    msg[ctr_at + 2] = static_cast<std::uint8_t>(counter >> 8);
    msg[ctr_at + 3] = static_cast<std::uint8_t>(counter);
    Digest d = sha256(msg);
    pad.insert(pad.end(), d.begin(), d.end());
  }
  pad.resize(width);
  return pad;
}

}  // namespace oblifsm
