#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "oblifsm/meter.hpp"
#include "oblifsm/wire.hpp"

namespace oblifsm {

// Framed, ordered, whole-message transport between two roles. Implementations
// must deliver frames exactly once and in order.
class Channel {
 public:
  virtual ~Channel() = default;

  void send(Frame f) {
    if (meter_)
      f.meter_depth = meter_->on_send(local_role_, peer_role_, f.type, f.framed_size());
    if (transcript_) transcript_->push_back(f);
    send_impl(std::move(f));
  }

  Frame recv() {
    Frame f = recv_impl();
    if (meter_)
      meter_->on_recv(local_role_, peer_role_, f.type, f.framed_size(), f.meter_depth,
                      meter_on_recv_);
    return f;
  }

  void attach_meter(CommMeter* meter, bool meter_on_recv) {
    meter_ = meter;
    meter_on_recv_ = meter_on_recv;
  }
  void set_roles(Role local, Role peer) {
    local_role_ = local;
    peer_role_ = peer;
  }
  void record_transcript(std::vector<Frame>* sink) { transcript_ = sink; }

  Role local_role() const { return local_role_; }
  Role peer_role() const { return peer_role_; }

 protected:
  virtual void send_impl(Frame) = 0;
  virtual Frame recv_impl() = 0;

 private:
  Role local_role_ = Role::client;
  Role peer_role_ = Role::server;
  CommMeter* meter_ = nullptr;
  // In-process pairs share one meter and record at send time only; socket
  // endpoints each own a meter and also record what they receive.
  bool meter_on_recv_ = false;
  std::vector<Frame>* transcript_ = nullptr;
};

// ---- in-memory transport ----------------------------------------------------

namespace detail {
struct FrameQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> q;
  bool closed = false;

  void push(Frame f) {
    {
      std::scoped_lock lk(mu);
      if (closed) fail(Errc::transport, "channel closed");
      q.push_back(std::move(f));
    }
    cv.notify_one();
  }

  Frame pop() {
    std::unique_lock lk(mu);
    cv.wait(lk, [&] { return !q.empty() || closed; });
    if (q.empty()) fail(Errc::transport, "channel closed");
    Frame f = std::move(q.front());
    q.pop_front();
    return f;
  }

  void close() {
    {
      std::scoped_lock lk(mu);
      closed = true;
    }
    cv.notify_all();
  }
};
}  // namespace detail

class InMemoryChannel final : public Channel {
 public:
  // Two connected endpoints; frames sent on one side arrive on the other.
  static std::pair<std::unique_ptr<InMemoryChannel>, std::unique_ptr<InMemoryChannel>> make_pair(
      Role a, Role b, CommMeter* meter = nullptr) {
    auto a_to_b = std::make_shared<detail::FrameQueue>();
    auto b_to_a = std::make_shared<detail::FrameQueue>();
    auto ea = std::unique_ptr<InMemoryChannel>(new InMemoryChannel(a_to_b, b_to_a));
    auto eb = std::unique_ptr<InMemoryChannel>(new InMemoryChannel(b_to_a, a_to_b));
    ea->set_roles(a, b);
    eb->set_roles(b, a);
    if (meter) {
      ea->attach_meter(meter, false);
      eb->attach_meter(meter, false);
    }
    return {std::move(ea), std::move(eb)};
  }

  ~InMemoryChannel() override {
    out_->close();
    in_->close();
  }

 protected:
  void send_impl(Frame f) override { out_->push(std::move(f)); }
  Frame recv_impl() override { return in_->pop(); }

 private:
  InMemoryChannel(std::shared_ptr<detail::FrameQueue> out, std::shared_ptr<detail::FrameQueue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  std::shared_ptr<detail::FrameQueue> out_;
  std::shared_ptr<detail::FrameQueue> in_;
};

// ---- TCP transport -----------------------------------------------------------

class SocketChannel final : public Channel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {}
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;
  ~SocketChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  static std::unique_ptr<SocketChannel> connect(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
      fail(Errc::transport, "cannot resolve " + host);
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) fail(Errc::transport, "cannot connect to " + host + ":" + std::to_string(port));
    return std::make_unique<SocketChannel>(fd);
  }

 protected:
  void send_impl(Frame f) override {
    Bytes wire = frame_encode(f);
    std::size_t sent = 0;
    while (sent < wire.size()) {
      ssize_t k = ::send(fd_, wire.data() + sent, wire.size() - sent, 0);
      if (k <= 0) fail(Errc::transport, "socket send failed");
      sent += static_cast<std::size_t>(k);
    }
  }

  Frame recv_impl() override {
    std::uint8_t buf[4096];
    for (;;) {
      if (auto f = reader_.next()) return *f;
      ssize_t k = ::recv(fd_, buf, sizeof buf, 0);
      if (k <= 0) fail(Errc::transport, "peer closed the connection");
      reader_.feed(ByteView(buf, static_cast<std::size_t>(k)));
    }
  }

 private:
  int fd_;
  FrameReader reader_;
};

// Listening socket that accepts framed peers.
class SocketListener {
 public:
  SocketListener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) fail(Errc::transport, "cannot create socket");
    int one = 1;
    setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
      addr.sin_addr.s_addr = INADDR_ANY;
    } else if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      fail(Errc::transport, "bad listen address " + host);
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      fail(Errc::transport, "cannot bind " + host + ":" + std::to_string(port));
    if (::listen(fd_, 8) != 0) fail(Errc::transport, "cannot listen");
  }

  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;
  ~SocketListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint16_t port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
      fail(Errc::transport, "getsockname failed");
    return ntohs(addr.sin_port);
  }

  std::unique_ptr<SocketChannel> accept() {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) fail(Errc::transport, "accept failed");
    return std::make_unique<SocketChannel>(fd);
  }

 private:
  int fd_ = -1;
};

}  // namespace oblifsm
