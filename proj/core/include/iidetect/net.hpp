#pragma once

// POSIX TCP transport and a thread-per-connection server for the wire
// protocol.  One session per connection.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "iidetect/wire.hpp"

namespace iidetect::net {

inline constexpr const char* kAddressEnv = "II_DETECT_ADDR";
inline constexpr const char* kDefaultAddress = "127.0.0.1:7878";

struct Address {
  std::string host;
  std::uint16_t port = 0;

  /// "host:port"; throws kInvalidArgument.
  static Address parse(std::string_view text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Explicit flag value if non-empty, else $II_DETECT_ADDR, else the default.
Address resolve_address(const std::string& flag);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release();

  void write_all(std::span<const std::uint8_t> bytes);
  /// False on clean EOF before the first byte; throws kTransportError on
  /// EOF mid-buffer or socket errors.
  bool read_exact(std::span<std::uint8_t> out);
  void shutdown();

 private:
  int fd_ = -1;
};

Socket connect_to(const Address& address);

void write_frame(Socket& socket, const wire::Frame& frame);
wire::Frame read_frame(Socket& socket);

class TcpTransport : public wire::Transport {
 public:
  explicit TcpTransport(const Address& address) : socket_(connect_to(address)) {}

  void send(const wire::Frame& frame) override { write_frame(socket_, frame); }
  wire::Frame receive() override { return read_frame(socket_); }

  /// Sends raw bytes, bypassing the codec (for protocol tests).
  void send_raw(std::span<const std::uint8_t> bytes) { socket_.write_all(bytes); }

 private:
  Socket socket_;
};

class Server {
 public:
  /// Binds and listens immediately; port 0 picks an ephemeral port.
  explicit Server(const Address& address);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const { return port_; }

  /// Accepts connections until stop() is called.
  void run();
  void stop();

 private:
  void serve_connection(int fd);

  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex mutex_;
  std::unordered_set<int> live_fds_;
  std::vector<std::jthread> workers_;
};

}  // namespace iidetect::net
