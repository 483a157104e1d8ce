#pragma once

#include <stdexcept>
#include <string>

namespace oblifsm {

enum class Errc {
  input_domain,      // caller data outside the declared domain
  malformed_message, // wire bytes that do not parse
  malformed_entry,   // garbled entry with the wrong width for its round
  corrupt_answer,    // OT answer chunk outside its slice range
  corrupt_chain,     // decoded permuted state outside [0,|Q|)
  key_mismatch,      // ciphertexts under different public keys
  size_mismatch,     // secrets/params/machine dimensions disagree
  protocol_failure,  // reconstructed value outside its domain, phase misuse
  transport,         // channel/socket failure
  insecure_key_size, // sub-1024-bit HE key without the insecure-mode gate
  parse,             // malformed FSM document or CLI input
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::input_domain: return "input-domain";
    case Errc::malformed_message: return "malformed-message";
    case Errc::malformed_entry: return "malformed-entry";
    case Errc::corrupt_answer: return "corrupt-answer";
    case Errc::corrupt_chain: return "corrupt-chain";
    case Errc::key_mismatch: return "key-mismatch";
    case Errc::size_mismatch: return "size-mismatch";
    case Errc::protocol_failure: return "protocol-failure";
    case Errc::transport: return "transport";
    case Errc::insecure_key_size: return "insecure-key-size";
    case Errc::parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace oblifsm
