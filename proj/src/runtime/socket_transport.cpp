#include "channel.hpp"
#include "wcadmm/errors.hpp"
#include "wcadmm/runtime/transport.hpp"
#include "wcadmm/runtime/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace wcadmm::runtime {

namespace {

[[noreturn]] void sys_fail(const std::string& what) {
  throw RuntimeFault("socket transport: " + what + ": " + std::strerror(errno));
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

void write_all(int fd, const std::vector<std::uint8_t>& bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t k = ::send(fd, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("send");
    }
    done += static_cast<std::size_t>(k);
  }
}

// False on a clean EOF before the first byte.
bool read_exact(int fd, std::uint8_t* out, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t k = ::recv(fd, out + done, n - done, 0);
    if (k == 0) {
      if (done == 0) return false;
      throw RuntimeFault("socket transport: connection closed mid-frame");
    }
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_fail("recv");
    }
    done += static_cast<std::size_t>(k);
  }
  return true;
}

// Body of the next frame, or nullopt at EOF.
std::optional<std::vector<std::uint8_t>> read_frame(int fd) {
  std::uint8_t prefix[4];
  if (!read_exact(fd, prefix, 4)) return std::nullopt;
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(prefix[i]) << (8 * i);
  if (len == 0 || len > wire::kMaxFrame) throw RuntimeFault("socket transport: bad frame length");
  std::vector<std::uint8_t> body(len);
  if (!read_exact(fd, body.data(), len)) throw RuntimeFault("socket transport: missing frame body");
  return body;
}

class SocketAgentLink final : public AgentLink {
 public:
  SocketAgentLink(Fd fd, std::uint32_t id) : fd_(std::move(fd)), id_(id) {}

  CoordinatorMessage receive() override {
    auto body = read_frame(fd_.get());
    if (!body) throw RuntimeFault("socket link to agent " + std::to_string(id_) + " closed");
    return wire::decode_coordinator(*body);
  }

  void send(const AgentMessage& m) override { write_all(fd_.get(), wire::encode(m)); }

 private:
  Fd fd_;
  std::uint32_t id_;
};

class SocketCoordinatorLink final : public CoordinatorLink {
 public:
  explicit SocketCoordinatorLink(std::map<std::uint32_t, Fd> conns) : conns_(std::move(conns)) {
    for (auto& [id, fd] : conns_) {
      const int raw = fd.get();
      const std::uint32_t agent = id;
      readers_.emplace_back([this, raw, agent] {
        try {
          while (auto body = read_frame(raw)) inbox_.push(wire::decode_agent(*body));
        } catch (const std::exception& e) {
          inbox_.push(Fault{agent, 0, std::string("transport: ") + e.what()});
        }
      });
    }
  }

  ~SocketCoordinatorLink() override {
    for (auto& [id, fd] : conns_) ::shutdown(fd.get(), SHUT_RDWR);
    readers_.clear();  // joins
    inbox_.close();
  }

  void send(std::uint32_t agent, const CoordinatorMessage& m) override {
    const auto bytes = wire::encode(m);
    std::lock_guard lock(send_mutex_);
    if (agent == kAllAgents) {
      for (auto& [id, fd] : conns_) write_all(fd.get(), bytes);
    } else {
      auto it = conns_.find(agent);
      if (it == conns_.end()) throw RuntimeFault("socket transport: no agent " + std::to_string(agent));
      write_all(it->second.get(), bytes);
    }
  }

  std::optional<AgentMessage> receive(std::chrono::milliseconds timeout) override {
    return inbox_.pop_for(timeout);
  }

 private:
  std::map<std::uint32_t, Fd> conns_;
  detail::Channel<AgentMessage> inbox_;
  std::mutex send_mutex_;
  std::vector<std::jthread> readers_;
};

class SocketTransport final : public Transport {
 public:
  explicit SocketTransport(std::size_t n) : n_(n) {
    listener_ = Fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (listener_.get() < 0) sys_fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listener_.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
      sys_fail("bind");
    if (::listen(listener_.get(), static_cast<int>(n + 8)) < 0) sys_fail("listen");
    socklen_t len = sizeof addr;
    if (::getsockname(listener_.get(), reinterpret_cast<sockaddr*>(&addr), &len) < 0)
      sys_fail("getsockname");
    port_ = ntohs(addr.sin_port);
  }

  std::size_t agents() const override { return n_; }

  std::unique_ptr<AgentLink> agent_link(std::uint32_t id) override {
    if (id >= n_) throw RuntimeFault("no agent " + std::to_string(id));
    Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (fd.get() < 0) sys_fail("socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port_);
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
      sys_fail("connect");
    const int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    write_all(fd.get(), wire::encode_handshake(id));
    return std::make_unique<SocketAgentLink>(std::move(fd), id);
  }

  std::unique_ptr<CoordinatorLink> coordinator_link() override {
    std::map<std::uint32_t, Fd> conns;
    while (conns.size() < n_) {
      Fd fd(::accept(listener_.get(), nullptr, nullptr));
      if (fd.get() < 0) {
        if (errno == EINTR) continue;
        sys_fail("accept");
      }
      const int one = 1;
      ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::uint8_t hs[wire::kHandshakeSize];
      if (!read_exact(fd.get(), hs, sizeof hs))
        throw RuntimeFault("socket transport: agent disconnected during handshake");
      const std::uint32_t id = wire::decode_handshake(hs);
      if (id >= n_ || conns.count(id))
        throw RuntimeFault("socket transport: unexpected agent id " + std::to_string(id));
      conns.emplace(id, std::move(fd));
    }
    return std::make_unique<SocketCoordinatorLink>(std::move(conns));
  }

 private:
  std::size_t n_;
  Fd listener_;
  std::uint16_t port_ = 0;
};

}  // namespace

std::unique_ptr<Transport> make_socket_transport(std::size_t agents) {
  return std::make_unique<SocketTransport>(agents);
}

}  // namespace wcadmm::runtime
