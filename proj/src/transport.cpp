#include "fedboost/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include <spdlog/spdlog.h>

#include "fedboost/error.hpp"
#include "fedboost/site_node.hpp"

namespace fedboost {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw Error(ErrorCode::kTransport, what + ": " + std::strerror(errno));
}

bool read_exact(int fd, char* buf, std::size_t len, bool allow_eof) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t r = ::recv(fd, buf + got, len - got, 0);
    if (r == 0) {
      if (allow_eof && got == 0) return false;
      throw Error(ErrorCode::kMalformedFrame, "connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      fail("recv");
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

std::optional<std::string> read_frame(int fd) {
  char header[protocol::kHeaderBytes];
  if (!read_exact(fd, header, sizeof header, true)) return std::nullopt;
  const auto length = protocol::read_length({header, sizeof header});
  std::string frame(protocol::kHeaderBytes + length, '\0');
  std::memcpy(frame.data(), header, sizeof header);
  read_exact(fd, frame.data() + protocol::kHeaderBytes, length, false);
  return frame;
}

void write_frame(int fd, const std::string& frame) {
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t r = ::send(fd, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    sent += static_cast<std::size_t>(r);
  }
}

InProcessChannel::InProcessChannel(SiteNode& node, std::string name)
    : node_(node), name_(std::move(name)) {}

protocol::Response InProcessChannel::call(const protocol::Request& request) {
  return protocol::decode_response(node_.handle_frame(protocol::encode(request)));
}

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw Error(ErrorCode::kConfig, "address must be host:port, got '" + text + "'");
  Endpoint e;
  e.host = text.substr(0, colon);
  const long port = std::strtol(text.c_str() + colon + 1, nullptr, 10);
  if (port < 0 || port > 65535) throw Error(ErrorCode::kConfig, "bad port in '" + text + "'");
  e.port = static_cast<std::uint16_t>(port);
  return e;
}

TcpChannel::TcpChannel(Endpoint endpoint) : endpoint_(std::move(endpoint)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto port = std::to_string(endpoint_.port);
  if (::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
    throw Error(ErrorCode::kTransport, "cannot resolve " + endpoint_.str());
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    fail("socket");
  }
  const int rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    errno = err;
    fail("connect " + endpoint_.str());
  }
  set_nodelay(fd_);
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

protocol::Response TcpChannel::call(const protocol::Request& request) {
  write_frame(fd_, protocol::encode(request));
  auto frame = read_frame(fd_);
  if (!frame) throw Error(ErrorCode::kTransport, endpoint_.str() + " closed the connection");
  return protocol::decode_response(*frame);
}

void serve(const ListenConfig& config, SiteNode& node) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) fail("socket");
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config.endpoint.port);
  const std::string host = config.endpoint.host == "localhost" ? "127.0.0.1" : config.endpoint.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listener);
    throw Error(ErrorCode::kConfig, "listen address must be an IPv4 literal: " + host);
  }
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(listener);
    fail("bind " + config.endpoint.str());
  }
  if (::listen(listener, 16) != 0) {
    ::close(listener);
    fail("listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  const auto port = ntohs(addr.sin_port);
  spdlog::info("site listening on {}:{}", host, port);
  if (config.port_file) {
    const auto tmp = config.port_file->string() + ".tmp";
    std::ofstream(tmp) << port << '\n';
    std::filesystem::rename(tmp, *config.port_file);
  }

  std::size_t served = 0;
  while (!config.max_connections || served < *config.max_connections) {
    const int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) {
      if (errno == EINTR) continue;
      spdlog::error("accept failed: {}", std::strerror(errno));
      continue;
    }
    ++served;
    set_nodelay(conn);
    try {
      while (auto frame = read_frame(conn)) write_frame(conn, node.handle_frame(*frame));
    } catch (const std::exception& e) {
      spdlog::warn("connection dropped: {}", e.what());
    }
    ::close(conn);
  }
  ::close(listener);
}

}  // namespace fedboost
