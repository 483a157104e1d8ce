#pragma once

#include <chrono>
#include <exception>
#include <optional>
#include <thread>

#include "oblifsm/channel.hpp"
#include "oblifsm/protocol_2pc.hpp"
#include "oblifsm/protocol_3pc.hpp"

namespace oblifsm {

enum class Protocol : std::uint8_t { two_party, three_party };
enum class OpenTo : std::uint8_t { client, server, none };

inline const char* protocol_name(Protocol p) {
  return p == Protocol::two_party ? "2pc" : "3pc";
}

struct PhaseTimes {
  double ms_garble = 0;  // secrets + matrices (server)
  double ms_ot = 0;      // OT answering / partial-column computation
  double ms_eval = 0;    // column recovery + garbled-chain walk (client)
};

namespace detail {

class StopwatchMs {
 public:
  StopwatchMs() : start_(std::chrono::steady_clock::now()) {}
  double elapsed() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline Frame expect_frame(Channel& ch, MsgType want) {
  Frame f = ch.recv();
  if (f.type == MsgType::error) {
    ErrorMsg e = decode_error(f.payload);
    fail(Errc::protocol_failure,
         std::string(role_name(ch.peer_role())) + " reported: " + e.message);
  }
  if (f.type != want) fail(Errc::protocol_failure, "unexpected message type");
  return f;
}

// Best-effort courtesy frame so the peer fails with a reason instead of a
// closed channel.
inline void report_error(Channel& ch, const Error& e) {
  try {
    ch.send({MsgType::error, encode_error({static_cast<std::uint32_t>(e.code()), e.what()})});
  } catch (...) {
  }
}

}  // namespace detail

// ---- per-role drivers. Each runs one role over already-connected channels;
// ---- the CLI uses them over sockets, run_session over in-memory pairs.

struct ClientOutcome {
  OutputShare share;
  std::optional<OpenedOutput> opened;  // set when the session opened to the client
  PhaseTimes times;
};

struct ServerOutcome {
  GarblingSecrets secrets;             // the server's output share
  std::optional<OpenedOutput> opened;  // set when the session opened to the server
  PhaseTimes times;
};

inline ClientOutcome drive_client_2pc(Channel& to_server, std::span<const std::uint32_t> input,
                                      const SessionParams& params, OpenTo open_to,
                                      SecureRng& rng) {
  ClientOutcome out;
  auto [session, msg1] = client_start(input, params, rng);
  to_server.send({MsgType::msg1, encode_msg1(msg1)});

  Frame f = detail::expect_frame(to_server, MsgType::msg2);
  Msg2 msg2 = decode_msg2(f.payload, session.keys.pk);
  detail::StopwatchMs sw;
  out.share = client_finish(session, msg2);
  out.times.ms_eval = sw.elapsed();

  if (open_to == OpenTo::client) {
    Frame o = detail::expect_frame(to_server, MsgType::opening);
    OpeningMsg masks = decode_opening(o.payload, params.garbling.output_field_bytes);
    out.opened = open_output(Role::client, out.share,
                             masks_from_opening(masks.fields, params), params);
  } else if (open_to == OpenTo::server) {
    to_server.send({MsgType::opening, encode_opening({opening_fields_of_share(out.share)},
                                                     params.garbling.output_field_bytes)});
  }
  return out;
}

inline ServerOutcome drive_server_2pc(Channel& to_client, const Fsm& machine,
                                      const SessionParams& params, OpenTo open_to,
                                      SecureRng& rng) {
  ServerOutcome out;
  Frame f = detail::expect_frame(to_client, MsgType::msg1);
  Msg1 msg1 = decode_msg1(f.payload);
  if (msg1.pk.bits != params.he_bits) fail(Errc::malformed_message, "unexpected HE key size");

  detail::StopwatchMs sw_g;
  ServerSession session = server_prepare(machine, params, rng);
  out.times.ms_garble = sw_g.elapsed();

  detail::StopwatchMs sw_ot;
  Msg2 msg2 = server_answer(session, msg1, rng);
  out.times.ms_ot = sw_ot.elapsed();
  to_client.send({MsgType::msg2, encode_msg2(msg2, msg1.pk)});

  out.secrets = std::move(session.secrets);
  if (open_to == OpenTo::client) {
    to_client.send({MsgType::opening,
                    encode_opening({opening_fields_of_masks(out.secrets, params.output)},
                                   params.garbling.output_field_bytes)});
  } else if (open_to == OpenTo::server) {
    Frame o = detail::expect_frame(to_client, MsgType::opening);
    OpeningMsg share = decode_opening(o.payload, params.garbling.output_field_bytes);
    out.opened = open_output(Role::server, share_from_opening(share.fields, params),
                             out.secrets, params);
  }
  return out;
}

inline ClientOutcome drive_client_3pc(Channel& to_server, Channel& to_helper,
                                      std::span<const std::uint32_t> input,
                                      const SessionParams& params, OpenTo open_to,
                                      SecureRng& rng) {
  ClientOutcome out;
  auto [server_half, helper_half] = client_share_input(input, params.alphabet_size, rng);
  ShareHalfMsg to_s{server_half.input_length, server_half.alphabet_size, server_half.pack()};
  ShareHalfMsg to_h{helper_half.input_length, helper_half.alphabet_size, helper_half.pack()};
  to_server.send({MsgType::share_half, encode_share_half(to_s)});
  to_helper.send({MsgType::share_half, encode_share_half(to_h)});

  Frame fs = detail::expect_frame(to_server, MsgType::partial_reply);
  Frame fh = detail::expect_frame(to_helper, MsgType::partial_reply);
  PartialReplyMsg from_server = decode_partial_reply(fs.payload, true);
  PartialReplyMsg from_helper = decode_partial_reply(fh.payload, false);

  detail::StopwatchMs sw;
  out.share = client_finish_3pc(input, params, from_server, from_helper);
  out.times.ms_eval = sw.elapsed();

  if (open_to == OpenTo::client) {
    Frame o = detail::expect_frame(to_server, MsgType::opening);
    OpeningMsg masks = decode_opening(o.payload, params.garbling.output_field_bytes);
    out.opened = open_output(Role::client, out.share,
                             masks_from_opening(masks.fields, params), params);
  } else if (open_to == OpenTo::server) {
    to_server.send({MsgType::opening, encode_opening({opening_fields_of_share(out.share)},
                                                     params.garbling.output_field_bytes)});
  }
  return out;
}

inline ServerOutcome drive_server_3pc(Channel& to_client, Channel& to_helper, const Fsm& machine,
                                      const SessionParams& params, OpenTo open_to,
                                      SecureRng& rng) {
  ServerOutcome out;
  detail::StopwatchMs sw_g;
  auto [session, setup] = server_offline_setup(machine, params, rng);
  out.times.ms_garble = sw_g.elapsed();
  to_helper.send({MsgType::offline_setup, encode_offline_setup(setup)});

  Frame f = detail::expect_frame(to_client, MsgType::share_half);
  ShareHalfMsg half = decode_share_half(f.payload);
  detail::StopwatchMs sw_ot;
  PartialReplyMsg reply = server_partial_reply(session, half);
  out.times.ms_ot = sw_ot.elapsed();
  to_client.send({MsgType::partial_reply, encode_partial_reply(reply)});

  out.secrets = std::move(session.secrets);
  if (open_to == OpenTo::client) {
    to_client.send({MsgType::opening,
                    encode_opening({opening_fields_of_masks(out.secrets, params.output)},
                                   params.garbling.output_field_bytes)});
  } else if (open_to == OpenTo::server) {
    Frame o = detail::expect_frame(to_client, MsgType::opening);
    OpeningMsg share = decode_opening(o.payload, params.garbling.output_field_bytes);
    out.opened = open_output(Role::server, share_from_opening(share.fields, params),
                             out.secrets, params);
  }
  return out;
}

// The helper is stateless across sessions: offline setup in, one partial
// reply out. It never sees a state key, rotation, output mask or the input.
inline void drive_helper_3pc(Channel& to_server, Channel& to_client) {
  Frame fs = detail::expect_frame(to_server, MsgType::offline_setup);
  OfflineSetup setup_msg = decode_offline_setup(fs.payload);
  HelperSetup setup{std::move(setup_msg.mask_key), std::move(setup_msg.matrices)};

  Frame fc = detail::expect_frame(to_client, MsgType::share_half);
  ShareHalfMsg half = decode_share_half(fc.payload);
  PartialReplyMsg reply = helper_partial_reply(setup, half);
  to_client.send({MsgType::partial_reply, encode_partial_reply(reply)});
}

// ---- in-process orchestration ------------------------------------------------

struct RunResult {
  OpenedOutput opened;
  OutputShare client_share;
  CommMeter::Snapshot comm;
  PhaseTimes times;
};

// Drives a complete session over in-memory channels, all roles in this
// process. With open_to == none the shares stay with their roles and the
// returned result is combined locally for the caller's benefit.
inline RunResult run_session(Protocol protocol, const Fsm& machine,
                             std::span<const std::uint32_t> input, const SessionParams& params,
                             OpenTo open_to, std::uint64_t seed) {
  CommMeter meter;
  SecureRng root(seed);
  SecureRng client_rng = root.fork();
  SecureRng server_rng = root.fork();

  RunResult result;
  std::exception_ptr client_err, server_err, helper_err;
  std::optional<ClientOutcome> client_out;
  std::optional<ServerOutcome> server_out;

  if (protocol == Protocol::two_party) {
    auto pair_cs = InMemoryChannel::make_pair(Role::client, Role::server, &meter);
    std::unique_ptr<InMemoryChannel> client_ch = std::move(pair_cs.first);
    // The thread owns its endpoint so a failing server closes the link and
    // unblocks a waiting client.
    std::thread server_thread([&, ch = std::move(pair_cs.second)]() {
      try {
        server_out = drive_server_2pc(*ch, machine, params, open_to, server_rng);
      } catch (const Error& e) {
        server_err = std::current_exception();
        detail::report_error(*ch, e);
      } catch (...) {
        server_err = std::current_exception();
      }
    });
    try {
      client_out = drive_client_2pc(*client_ch, input, params, open_to, client_rng);
    } catch (...) {
      client_err = std::current_exception();
    }
    // Closing the client endpoint unblocks a peer still waiting on a frame.
    client_ch.reset();
    server_thread.join();
  } else {
    auto pair_cs = InMemoryChannel::make_pair(Role::client, Role::server, &meter);
    auto pair_ch = InMemoryChannel::make_pair(Role::client, Role::helper, &meter);
    auto pair_sh = InMemoryChannel::make_pair(Role::server, Role::helper, &meter);
    std::unique_ptr<InMemoryChannel> c_to_s = std::move(pair_cs.first);
    std::unique_ptr<InMemoryChannel> s_to_c = std::move(pair_cs.second);
    std::unique_ptr<InMemoryChannel> c_to_h = std::move(pair_ch.first);
    std::unique_ptr<InMemoryChannel> h_to_c = std::move(pair_ch.second);
    std::unique_ptr<InMemoryChannel> s_to_h = std::move(pair_sh.first);
    std::unique_ptr<InMemoryChannel> h_to_s = std::move(pair_sh.second);

    // Threads own their endpoints so a failing role closes its links and
    // unblocks the others.
    std::thread helper_thread([&, hs = std::move(h_to_s), hc = std::move(h_to_c)]() {
      try {
        drive_helper_3pc(*hs, *hc);
      } catch (const Error& e) {
        helper_err = std::current_exception();
        detail::report_error(*hc, e);
      } catch (...) {
        helper_err = std::current_exception();
      }
    });
    std::thread server_thread([&, sc = std::move(s_to_c), sh = std::move(s_to_h)]() {
      try {
        server_out = drive_server_3pc(*sc, *sh, machine, params, open_to, server_rng);
      } catch (const Error& e) {
        server_err = std::current_exception();
        detail::report_error(*sc, e);
      } catch (...) {
        server_err = std::current_exception();
      }
    });
    try {
      client_out = drive_client_3pc(*c_to_s, *c_to_h, input, params, open_to, client_rng);
    } catch (...) {
      client_err = std::current_exception();
    }
    c_to_s.reset();
    c_to_h.reset();
    server_thread.join();
    helper_thread.join();
  }
  // Transport errors are usually fallout from the peer's failure; surface the
  // root cause when one exists.
  auto is_transport = [](const std::exception_ptr& ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      return e.code() == Errc::transport;
    } catch (...) {
      return false;
    }
  };
  for (const auto* ep : {&client_err, &server_err, &helper_err})
    if (*ep && !is_transport(*ep)) std::rethrow_exception(*ep);
  for (const auto* ep : {&client_err, &server_err, &helper_err})
    if (*ep) std::rethrow_exception(*ep);

  result.client_share = client_out->share;
  result.times = client_out->times;
  result.times.ms_garble = server_out->times.ms_garble;
  result.times.ms_ot = server_out->times.ms_ot;
  if (client_out->opened) {
    result.opened = *client_out->opened;
  } else if (server_out->opened) {
    result.opened = *server_out->opened;
  } else {
    result.opened = reconstruct_output(client_out->share, server_out->secrets, params.garbling,
                                       params.output);
  }
  result.comm = meter.snapshot();
  return result;
}

}  // namespace oblifsm
