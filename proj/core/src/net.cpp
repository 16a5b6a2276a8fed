#include "iidetect/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <cstring>

#include "iidetect/error.hpp"

namespace iidetect::net {

namespace {

[[noreturn]] void transport_error(const std::string& what) {
  throw Error(ErrorCode::kTransportError, what + ": " + std::strerror(errno));
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

AddrInfo lookup(const Address& address, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo info;
  const std::string port = std::to_string(address.port);
  const char* host = address.host.empty() ? nullptr : address.host.c_str();
  if (const int rc = getaddrinfo(host, port.c_str(), &hints, &info.head); rc != 0) {
    throw Error(ErrorCode::kTransportError,
                "cannot resolve " + address.str() + ": " + gai_strerror(rc));
  }
  return info;
}

}  // namespace

Address Address::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "address must be host:port, got '" +
                                                 std::string(text) + "'");
  }
  Address out;
  out.host = std::string(text.substr(0, colon));
  const auto port_text = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in '" + std::string(text) + "'");
  }
  out.port = static_cast<std::uint16_t>(value);
  return out;
}

Address resolve_address(const std::string& flag) {
  if (!flag.empty()) return Address::parse(flag);
  if (const char* env = std::getenv(kAddressEnv); env && *env) return Address::parse(env);
  return Address::parse(kDefaultAddress);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.release();
  }
  return *this;
}

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

int Socket::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::write_all(std::span<const std::uint8_t> bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_error("send failed");
    }
    bytes = bytes.subspan(static_cast<std::size_t>(n));
  }
}

bool Socket::read_exact(std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_error("recv failed");
    }
    if (n == 0) {
      if (got == 0) return false;
      throw Error(ErrorCode::kTransportError, "connection closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket connect_to(const Address& address) {
  AddrInfo info = lookup(address, false);
  for (addrinfo* ai = info.head; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      const int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
  }
  transport_error("cannot connect to " + address.str());
}

void write_frame(Socket& socket, const wire::Frame& frame) {
  socket.write_all(wire::encode_frame(frame));
}

wire::Frame read_frame(Socket& socket) {
  std::array<std::uint8_t, wire::kHeaderSize> header{};
  if (!socket.read_exact(header)) {
    throw Error(ErrorCode::kTransportError, "connection closed by peer");
  }
  const wire::FrameHeader h = wire::decode_header(header);
  wire::Frame frame{h.type, wire::Bytes(h.length)};
  if (h.length > 0 && !socket.read_exact(frame.payload)) {
    throw Error(ErrorCode::kTransportError, "connection closed mid-frame");
  }
  return frame;
}

Server::Server(const Address& address) {
  AddrInfo info = lookup(address, true);
  for (addrinfo* ai = info.head; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), 16) == 0) {
      listener_ = std::move(s);
      break;
    }
  }
  if (!listener_.valid()) transport_error("cannot listen on " + address.str());
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Server::~Server() {
  stop();
  workers_.clear();  // joins
}

void Server::stop() {
  stopping_ = true;
  std::lock_guard lock(mutex_);
  for (const int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
}

void Server::run() {
  while (!stopping_) {
    pollfd pfd{listener_.fd(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 100);
    if (ready < 0) {
      if (errno == EINTR) continue;
      transport_error("poll failed");
    }
    if (ready == 0) continue;
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    live_fds_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  Socket socket(fd);
  wire::RemoteSession session;
  try {
    while (!session.closed()) {
      std::array<std::uint8_t, wire::kHeaderSize> header{};
      if (!socket.read_exact(header)) break;
      wire::Bytes raw(header.begin(), header.end());
      std::optional<wire::Frame> reply;
      if (!wire::is_known_type(header[0])) {
        reply = wire::make_error(wire::WireErrorCode::kBadFrame, "unknown message type");
      } else {
        const auto length = static_cast<std::uint32_t>(header[1] | header[2] << 8 |
                                                       header[3] << 16 |
                                                       static_cast<std::uint32_t>(header[4]) << 24);
        if (length > wire::kMaxPayload) {
          reply = wire::make_error(wire::WireErrorCode::kBadFrame, "frame too large");
        } else {
          raw.resize(wire::kHeaderSize + length);
          if (length > 0 &&
              !socket.read_exact(std::span(raw).subspan(wire::kHeaderSize))) {
            break;
          }
          reply = session.handle_bytes(raw);
        }
      }
      if (reply) write_frame(socket, *reply);
      if (reply && reply->type == wire::MsgType::kError) break;
    }
  } catch (const Error&) {
    // Peer vanished; nothing to report to.
  }
  std::lock_guard lock(mutex_);
  live_fds_.erase(fd);
}

}  // namespace iidetect::net
