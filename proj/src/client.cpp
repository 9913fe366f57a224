#include "txmerge/client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>

#include "txmerge/wire.hpp"

namespace txmerge {

using json = nlohmann::json;

WireClient::WireClient(const std::string& host, uint16_t port)
    : rng_(std::random_device{}()) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) raise(Errc::ServiceUnreachable, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    raise(Errc::ServiceUnreachable, "host must be an IPv4 address");
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    fd_ = -1;
    raise(Errc::ServiceUnreachable,
          std::string("connect failed: ") + std::strerror(errno));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

WireClient::~WireClient() {
  if (fd_ >= 0) ::close(fd_);
}

void WireClient::reseed(uint64_t seed) {
  std::lock_guard guard(mtx_);
  rng_.seed(seed);
}

json WireClient::call(const std::string& method, json params) {
  std::lock_guard guard(mtx_);
  int64_t id = next_id_++;
  write_frame(fd_, json{{"id", id}, {"method", method}, {"params", std::move(params)}});
  json resp = read_frame(fd_);
  if (!resp.contains("id") || resp["id"].get<int64_t>() != id)
    raise(Errc::InternalError, "response id does not match request");
  return resp;
}

InvokeOutcome WireClient::invoke(const std::string& txn, json args) {
  json resp = call("invoke", json{{"txn", txn}, {"args", std::move(args)}});
  std::string status = resp.value("status", "error");
  if (status == "ok")
    return InvokeOutcome::ok(resp.contains("data") ? resp["data"] : json());
  if (status == "retry") return InvokeOutcome::retry(resp.value("message", ""));
  return InvokeOutcome::error(resp.value("message", ""));
}

InvokeOutcome WireClient::invoke_with_retry(const std::string& txn, json args,
                                            int max_attempts,
                                            int* attempts_out) {
  InvokeOutcome outcome;
  int attempt = 0;
  for (; attempt < max_attempts; ++attempt) {
    outcome = invoke(txn, args);
    if (outcome.status != InvokeOutcome::Status::Retry) break;
    // Exponential backoff with jitter, capped; keeps retry storms apart.
    double base = std::min(50.0, 1.0 * static_cast<double>(1u << std::min(attempt, 10)));
    double jitter;
    {
      std::lock_guard guard(mtx_);
      jitter = std::uniform_real_distribution<double>(0.5, 1.5)(rng_);
    }
    std::this_thread::sleep_for(
        std::chrono::duration<double, std::milli>(base * jitter));
  }
  if (attempts_out) *attempts_out = std::min(attempt + 1, max_attempts);
  return outcome;
}

void WireClient::set_config(const ServiceConfig& cfg) {
  json resp = call("set_config", cfg.to_json());
  if (resp.value("status", "") != "ok")
    raise(Errc::ValidationError, resp.value("message", "set_config rejected"));
}

void WireClient::set_policy(const PartitionPolicy& policy) {
  json resp = call("set_policy", policy.to_json());
  if (resp.value("status", "") != "ok")
    raise(Errc::StaleVersion, resp.value("message", "set_policy rejected"));
}

json WireClient::get_stats() {
  json resp = call("get_stats", json::object());
  if (resp.value("status", "") != "ok")
    raise(Errc::InternalError, resp.value("message", "get_stats failed"));
  return resp["data"];
}

bool WireClient::health() {
  json resp = call("health", json::object());
  return resp.value("status", "") == "ok";
}

}  // namespace txmerge
