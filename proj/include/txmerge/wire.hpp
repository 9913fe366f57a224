#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "txmerge/service.hpp"

namespace txmerge {

// Framing: 4-byte big-endian payload length, then that many bytes of UTF-8
// JSON.  Requests are {"id", "method", "params"}; responses are {"id",
// "status": "ok"|"retry"|"error", "data", "message"}.  Oversized or
// malformed frames poison only their connection.

constexpr size_t kMaxFrameBytes = 16u * 1024u * 1024u;

void write_frame(int fd, const nlohmann::json& payload);  // ServiceUnreachable
nlohmann::json read_frame(int fd);  // ServiceUnreachable on EOF, ParseError

std::pair<std::string, uint16_t> parse_endpoint(const std::string& endpoint);

// TCP front end for a MergerService.  Each connection gets a reader thread;
// invoke responses are written asynchronously from worker threads when
// their batch completes, so a connection can keep many invocations in
// flight and interleave control calls between them.
class WireServer {
 public:
  // port 0 binds an ephemeral port (see port()).
  WireServer(MergerService& service, const std::string& host, uint16_t port);
  ~WireServer();

  WireServer(const WireServer&) = delete;
  WireServer& operator=(const WireServer&) = delete;

  uint16_t port() const { return port_; }
  std::string endpoint() const;
  void stop();

 private:
  struct Conn {
    int fd = -1;
    std::mutex write_mtx;
    bool closed = false;  // guarded by write_mtx
  };

  void accept_loop();
  void serve(std::shared_ptr<Conn> conn);
  void respond(const std::shared_ptr<Conn>& conn, const nlohmann::json& payload);

  MergerService& service_;
  std::string host_;
  uint16_t port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex conns_mtx_;
  std::set<std::shared_ptr<Conn>> conns_;
  std::vector<std::thread> threads_;
};

}  // namespace txmerge
