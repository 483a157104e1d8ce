#pragma once

#include <algorithm>
#include <cstdint>
#include <mutex>
#include <string>

#include "oblifsm/wire.hpp"

namespace oblifsm {

// Online messages are the ones on the critical path of a session; offline
// setup (server -> helper) and output-share openings are tracked separately
// so the online round/byte counts state exactly what the protocols cost.
enum class MsgClass : std::uint8_t { online, offline, opening, control };

inline MsgClass classify(MsgType t) {
  switch (t) {
    case MsgType::offline_setup:
      return MsgClass::offline;
    case MsgType::opening:
      return MsgClass::opening;
    case MsgType::error:
      return MsgClass::control;
    default:
      return MsgClass::online;
  }
}

// Byte, message and round counters for one session. Byte counts are exact
// framed sizes, recorded once per message.
//
// Rounds follow the concurrent-flow rule: messages a role can send without
// waiting on a reply share a round, and a reply is one round deeper than the
// deepest message its sender had received. Depths are tracked per role and
// stamped onto in-process frames, so concurrent role drivers cannot skew the
// count no matter how their sends interleave in wall time. Stamp-less frames
// (anything that crossed a socket) fall back to the local alternation of the
// receiving endpoint, which is well-ordered per process.
class CommMeter {
 public:
  struct Snapshot {
    std::uint64_t bytes_from_client = 0;  // online, client -> server/helper
    std::uint64_t bytes_to_client = 0;    // online, server/helper -> client
    std::uint64_t bytes_c2s = 0;          // online, client -> server link only
    std::uint64_t bytes_s2c = 0;          // online, server -> client link only
    std::uint64_t bytes_c2h = 0;
    std::uint64_t bytes_h2c = 0;
    std::uint64_t bytes_offline = 0;
    std::uint64_t bytes_opening = 0;
    std::uint64_t msgs_online = 0;
    std::uint32_t rounds_online = 0;
  };

  // Records a send and returns the round depth to stamp onto the frame.
  std::uint32_t on_send(Role from, Role to, MsgType type, std::size_t framed_bytes) {
    std::scoped_lock lk(mu_);
    count_bytes(from, to, type, framed_bytes);
    if (classify(type) != MsgClass::online) return 0;
    RoleState& st = state_[index(from)];
    if (!st.sending) {
      st.depth += 1;
      st.sending = true;
    }
    snap_.rounds_online = std::max(snap_.rounds_online, st.depth);
    return st.depth;
  }

  void on_recv(Role receiver, Role sender, MsgType type, std::size_t framed_bytes,
               std::uint32_t depth_stamp, bool count_bytes_too) {
    std::scoped_lock lk(mu_);
    if (count_bytes_too) count_bytes(sender, receiver, type, framed_bytes);
    if (classify(type) != MsgClass::online) return;
    RoleState& st = state_[index(receiver)];
    std::uint32_t inferred = (st.sending || st.depth == 0) ? st.depth + 1 : st.depth;
    st.depth = std::max(inferred, depth_stamp);
    st.sending = false;
    snap_.rounds_online = std::max(snap_.rounds_online, st.depth);
  }

  Snapshot snapshot() const {
    std::scoped_lock lk(mu_);
    return snap_;
  }

  void reset() {
    std::scoped_lock lk(mu_);
    snap_ = {};
    for (auto& st : state_) st = {};
  }

 private:
  struct RoleState {
    std::uint32_t depth = 0;
    bool sending = false;
  };

  static std::size_t index(Role r) { return static_cast<std::size_t>(r); }

  void count_bytes(Role from, Role to, MsgType type, std::size_t framed_bytes) {
    switch (classify(type)) {
      case MsgClass::offline:
        snap_.bytes_offline += framed_bytes;
        return;
      case MsgClass::opening:
        snap_.bytes_opening += framed_bytes;
        return;
      case MsgClass::control:
        return;  // error frames appear only in failed sessions
      case MsgClass::online:
        break;
    }
    snap_.msgs_online += 1;
    if (from == Role::client) {
      snap_.bytes_from_client += framed_bytes;
      if (to == Role::server) snap_.bytes_c2s += framed_bytes;
      if (to == Role::helper) snap_.bytes_c2h += framed_bytes;
    } else {
      snap_.bytes_to_client += framed_bytes;
      if (from == Role::server) snap_.bytes_s2c += framed_bytes;
      if (from == Role::helper) snap_.bytes_h2c += framed_bytes;
    }
  }

  mutable std::mutex mu_;
  Snapshot snap_;
  RoleState state_[3];
};

}  // namespace oblifsm
