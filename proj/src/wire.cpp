#include "txmerge/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace txmerge {

using json = nlohmann::json;

namespace {

void send_all(int fd, const char* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      raise(Errc::ServiceUnreachable, "connection write failed");
    }
    off += static_cast<size_t>(n);
  }
}

bool recv_all(int fd, char* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::recv(fd, data + off, len - off, 0);
    if (n == 0) return false;  // orderly EOF
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

void write_frame(int fd, const json& payload) {
  std::string body = payload.dump();
  if (body.size() > kMaxFrameBytes)
    raise(Errc::ValidationError, "frame exceeds 16MB limit");
  char header[4];
  uint32_t len = static_cast<uint32_t>(body.size());
  header[0] = static_cast<char>((len >> 24) & 0xff);
  header[1] = static_cast<char>((len >> 16) & 0xff);
  header[2] = static_cast<char>((len >> 8) & 0xff);
  header[3] = static_cast<char>(len & 0xff);
  send_all(fd, header, 4);
  send_all(fd, body.data(), body.size());
}

json read_frame(int fd) {
  char header[4];
  if (!recv_all(fd, header, 4))
    raise(Errc::ServiceUnreachable, "connection closed");
  uint32_t len = (static_cast<uint32_t>(static_cast<unsigned char>(header[0])) << 24) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(header[1])) << 16) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(header[2])) << 8) |
                 static_cast<uint32_t>(static_cast<unsigned char>(header[3]));
  if (len > kMaxFrameBytes) raise(Errc::ParseError, "frame exceeds 16MB limit");
  std::string body(len, '\0');
  if (len > 0 && !recv_all(fd, body.data(), len))
    raise(Errc::ServiceUnreachable, "connection closed mid-frame");
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded()) raise(Errc::ParseError, "frame is not valid JSON");
  return parsed;
}

std::pair<std::string, uint16_t> parse_endpoint(const std::string& endpoint) {
  size_t colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon + 1 >= endpoint.size())
    raise(Errc::ValidationError, "endpoint must be host:port");
  std::string host = endpoint.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(colon + 1));
  } catch (const std::exception&) {
    raise(Errc::ValidationError, "endpoint port is not a number");
  }
  if (port < 0 || port > 65535)
    raise(Errc::ValidationError, "endpoint port out of range");
  return {host.empty() ? "0.0.0.0" : host, static_cast<uint16_t>(port)};
}

WireServer::WireServer(MergerService& service, const std::string& host,
                       uint16_t port)
    : service_(service), host_(host.empty() ? "127.0.0.1" : host) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) raise(Errc::InternalError, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    raise(Errc::ValidationError, "listen host must be an IPv4 address");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    ::close(listen_fd_);
    raise(Errc::InternalError, std::string("bind/listen failed: ") +
                                   std::strerror(errno));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread(&WireServer::accept_loop, this);
}

WireServer::~WireServer() { stop(); }

std::string WireServer::endpoint() const {
  return host_ + ":" + std::to_string(port_);
}

void WireServer::accept_loop() {
  for (;;) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      return;  // listener shut down
    }
    if (stopping_.load()) {
      ::close(fd);
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    auto conn = std::make_shared<Conn>();
    conn->fd = fd;
    std::lock_guard guard(conns_mtx_);
    conns_.insert(conn);
    threads_.emplace_back(&WireServer::serve, this, conn);
  }
}

void WireServer::respond(const std::shared_ptr<Conn>& conn,
                         const json& payload) {
  std::lock_guard guard(conn->write_mtx);
  if (conn->closed) return;
  try {
    write_frame(conn->fd, payload);
  } catch (const Error&) {
    // Peer went away; its pending responses have nowhere to go.
  }
}

void WireServer::serve(std::shared_ptr<Conn> conn) {
  for (;;) {
    json req;
    try {
      req = read_frame(conn->fd);
    } catch (const Error&) {
      break;  // EOF or unrecoverable framing problem
    }

    int64_t id = req.contains("id") && req["id"].is_number_integer()
                     ? req["id"].get<int64_t>()
                     : -1;
    std::string method = req.value("method", "");
    json params = req.contains("params") ? req["params"] : json::object();

    try {
      if (method == "invoke") {
        std::string txn = params.at("txn").get<std::string>();
        json args = params.contains("args") ? params["args"] : json::object();
        service_.submit(txn, std::move(args), [this, conn, id](InvokeOutcome o) {
          json resp{{"id", id}};
          switch (o.status) {
            case InvokeOutcome::Status::Ok:
              resp["status"] = "ok";
              resp["data"] = std::move(o.data);
              break;
            case InvokeOutcome::Status::Retry:
              resp["status"] = "retry";
              resp["message"] = o.message;
              break;
            case InvokeOutcome::Status::Error:
              resp["status"] = "error";
              resp["message"] = o.message;
              break;
          }
          respond(conn, resp);
        });
      } else if (method == "set_config") {
        service_.set_config(ServiceConfig::from_json(params));
        respond(conn, json{{"id", id},
                           {"status", "ok"},
                           {"data", service_.config().to_json()}});
      } else if (method == "set_policy") {
        service_.set_policy(PartitionPolicy::from_json(params));
        respond(conn, json{{"id", id},
                           {"status", "ok"},
                           {"data", json{{"version", service_.policy().version}}}});
      } else if (method == "get_stats") {
        respond(conn,
                json{{"id", id}, {"status", "ok"}, {"data", service_.stats().to_json()}});
      } else if (method == "health") {
        respond(conn, json{{"id", id}, {"status", "ok"}, {"data", json{{"up", true}}}});
      } else {
        respond(conn, json{{"id", id},
                           {"status", "error"},
                           {"message", "unknown method: " + method}});
      }
    } catch (const Error& e) {
      respond(conn, json{{"id", id}, {"status", "error"}, {"message", e.what()}});
    } catch (const std::exception& e) {
      respond(conn, json{{"id", id},
                         {"status", "error"},
                         {"message", std::string("bad request: ") + e.what()}});
    }
  }

  std::lock_guard guard(conn->write_mtx);
  conn->closed = true;
  ::close(conn->fd);
}

void WireServer::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) return;

  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);

  std::vector<std::thread> to_join;
  {
    std::lock_guard guard(conns_mtx_);
    for (const auto& conn : conns_) ::shutdown(conn->fd, SHUT_RDWR);
    to_join.swap(threads_);
  }
  for (std::thread& t : to_join)
    if (t.joinable()) t.join();
  std::lock_guard guard(conns_mtx_);
  conns_.clear();
}

}  // namespace txmerge
