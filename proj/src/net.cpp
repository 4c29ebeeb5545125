#include "aquasonde/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <utility>

#include <fmt/format.h>

namespace aquasonde::net {

namespace {

[[noreturn]] void throw_errno(std::string_view what) {
  throw NetError(fmt::format("{}: {}", what, std::strerror(errno)));
}

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const auto host = ep.host.empty() ? std::string("0.0.0.0") : ep.host;
  if (int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &result); rc != 0 || !result) {
    throw NetError(fmt::format("cannot resolve '{}': {}", host, ::gai_strerror(rc)));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, result->ai_addr, sizeof(addr));
  ::freeaddrinfo(result);
  addr.sin_port = htons(ep.port);
  return addr;
}

}  // namespace

std::string Endpoint::to_string() const {
  return fmt::format("{}:{}", host, port);
}

Endpoint parse_endpoint(std::string_view text) {
  if (text.starts_with("tcp://")) text.remove_prefix(6);
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) {
    throw NetError(fmt::format("endpoint '{}' must be host:port", text));
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const auto port = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
    throw NetError(fmt::format("endpoint '{}' has an invalid port", text));
  }
  ep.port = static_cast<std::uint16_t>(value);
  if (ep.host.empty()) ep.host = "127.0.0.1";
  return ep;
}

Socket::Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

Socket::~Socket() {
  close();
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::size_t Socket::read_some(std::span<std::uint8_t> buffer) {
  for (;;) {
    const auto n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return 0;
    throw_errno("recv");
  }
}

void Socket::write_all(std::span<const std::uint8_t> data) {
  while (!data.empty()) {
    const auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    data = data.subspan(static_cast<std::size_t>(n));
  }
}

TcpListener TcpListener::bind(const Endpoint& endpoint) {
  TcpListener listener;
  listener.socket_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!listener.socket_.valid()) throw_errno("socket");
  int one = 1;
  ::setsockopt(listener.socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  auto addr = resolve(endpoint);
  if (::bind(listener.socket_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno(fmt::format("bind {}", endpoint.to_string()));
  }
  if (::listen(listener.socket_.fd(), 8) != 0) throw_errno("listen");
  socklen_t len = sizeof(addr);
  ::getsockname(listener.socket_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  listener.port_ = ntohs(addr.sin_port);
  return listener;
}

Socket TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(socket_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno != EINTR) throw_errno("accept");
  }
}

Socket connect(const Endpoint& endpoint) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw_errno("socket");
  auto addr = resolve(endpoint);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw_errno(fmt::format("connect {}", endpoint.to_string()));
  }
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

}  // namespace aquasonde::net
