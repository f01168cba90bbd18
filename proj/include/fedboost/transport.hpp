#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "fedboost/protocol.hpp"

namespace fedboost {

class SiteNode;

// One coordinator-side connection to a site. Both implementations move the
// same encoded frames; only the carrier differs.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual protocol::Response call(const protocol::Request& request) = 0;
  virtual std::string address() const = 0;
  // Remote channels may be called from several threads at once (one per site).
  virtual bool concurrent() const { return false; }
};

// Calls straight into a SiteNode owned elsewhere, through encode/decode.
class InProcessChannel : public Channel {
 public:
  InProcessChannel(SiteNode& node, std::string name);

  protocol::Response call(const protocol::Request& request) override;
  std::string address() const override { return name_; }

 private:
  SiteNode& node_;
  std::string name_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& text);  // "host:port"
  std::string str() const { return host + ":" + std::to_string(port); }
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(Endpoint endpoint);
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  protocol::Response call(const protocol::Request& request) override;
  std::string address() const override { return endpoint_.str(); }
  bool concurrent() const override { return true; }

 private:
  Endpoint endpoint_;
  int fd_ = -1;
};

struct ListenConfig {
  Endpoint endpoint;
  // When set, the bound port is written here once the socket listens
  // (useful with port 0).
  std::optional<std::filesystem::path> port_file;
  // Stop after this many connections; unlimited when empty.
  std::optional<std::size_t> max_connections;
};

// Accept loop. Connections are served one after another; a broken
// connection is logged and dropped, the site keeps its data.
void serve(const ListenConfig& config, SiteNode& node);

// Blocking frame IO over a connected socket. read_frame returns nullopt on a
// clean EOF before any header byte.
std::optional<std::string> read_frame(int fd);
void write_frame(int fd, const std::string& frame);

}  // namespace fedboost
