#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

// Minimal blocking TCP over POSIX sockets. Serial-port transport would slot
// in beside Socket as another byte source.
namespace aquasonde::net {

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const;
};

// "host:port" or "tcp://host:port".
Endpoint parse_endpoint(std::string_view text);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  // Returns 0 at end of stream.
  std::size_t read_some(std::span<std::uint8_t> buffer);
  void write_all(std::span<const std::uint8_t> data);
  void close();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  // Port 0 picks an ephemeral port; see port().
  static TcpListener bind(const Endpoint& endpoint);

  std::uint16_t port() const { return port_; }
  Socket accept();

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

Socket connect(const Endpoint& endpoint);

}  // namespace aquasonde::net
