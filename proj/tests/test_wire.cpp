#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>
#include <set>
#include <thread>

#include "doctest.h"
#include "txmerge/client.hpp"
#include "txmerge/rewriter.hpp"
#include "txmerge/wire.hpp"

using namespace txmerge;
using json = nlohmann::json;

namespace {

Schema micro_schema() {
  return Schema({TableDef("t", {{"id", Value::Type::Integer, true},
                                {"value", Value::Type::Integer, false}})});
}

Statement point_delta(int64_t id, int64_t d) {
  Statement s;
  s.kind = StatementKind::Update;
  s.table = "t";
  s.assignments = {{"value", AssignExpr::plus("value", Operand::lit(Value::integer(d)))}};
  s.predicate = Predicate::eq("id", Operand::lit(Value::integer(id)));
  s.reads = {"id"};
  s.writes = {"value"};
  return s;
}

TemplateExec add_template() {
  TemplateExec te;
  te.name = "add";
  te.key_of = [](const json& args) {
    return PartitionKey{{Value::integer(args.at("id").get<int64_t>())}};
  };
  te.original = [](ExecSession& sess, const json& args) {
    sess.run(point_delta(args.at("id").get<int64_t>(), args.at("n").get<int64_t>()));
    return json{{"applied", true}};
  };
  te.merged = [](ExecSession& sess, const std::vector<json>& args) {
    std::vector<SourceStatement> deltas;
    for (size_t i = 0; i < args.size(); ++i)
      deltas.push_back({static_cast<int>(i),
                        point_delta(args[i].at("id").get<int64_t>(),
                                    args[i].at("n").get<int64_t>())});
    std::map<int64_t, std::vector<SourceStatement>> per_row;
    for (SourceStatement& d : deltas)
      per_row[d.stmt.predicate->operand.literal.as_integer()].push_back(d);
    for (auto& [id, group] : per_row)
      sess.run(group.size() > 1 ? aggregate_delta_updates(group)
                                : group.front().stmt);
    return std::vector<json>(args.size(), json{{"applied", true}});
  };
  return te;
}

struct Fixture {
  std::unique_ptr<Engine> engine;
  std::unique_ptr<MergerService> service;
  std::unique_ptr<WireServer> server;

  explicit Fixture(int batch = 4, int timeout_ms = 15) {
    engine = std::make_unique<Engine>(micro_schema());
    for (int i = 1; i <= 16; ++i)
      engine->load_row("t", {Value::integer(i), Value::integer(0)});
    ServiceConfig cfg;
    cfg.workers = 2;
    cfg.batch_size = batch;
    cfg.batch_timeout = std::chrono::milliseconds(timeout_ms);
    service = std::make_unique<MergerService>(*engine, cfg);
    service->register_template(add_template());
    server = std::make_unique<WireServer>(*service, "127.0.0.1", 0);
  }
};

}  // namespace

TEST_CASE("frame codec round trips over a socketpair") {
  int fds[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) == 0);
  json sent{{"id", 7}, {"method", "health"}, {"params", {{"deep", {1, 2, 3}}}}};
  write_frame(fds[0], sent);
  CHECK(read_frame(fds[1]) == sent);

  // A frame advertising an absurd length is rejected without allocation.
  const char bad[4] = {0x7f, 0x00, 0x00, 0x00};
  REQUIRE(::send(fds[0], bad, 4, 0) == 4);
  CHECK_THROWS_AS(read_frame(fds[1]), Error);

  ::close(fds[0]);
  ::close(fds[1]);
}

TEST_CASE("endpoint strings parse") {
  auto [host, port] = parse_endpoint("127.0.0.1:8443");
  CHECK(host == "127.0.0.1");
  CHECK(port == 8443);
  CHECK(parse_endpoint(":9000").first == "0.0.0.0");
  CHECK_THROWS_AS(parse_endpoint("nohost"), Error);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), Error);
}

TEST_CASE("health, stats and invoke round trip") {
  Fixture fx(1);
  WireClient client("127.0.0.1", fx.server->port());
  CHECK(client.health());
  CHECK(client.get_stats().at("completed").get<uint64_t>() == 0);

  InvokeOutcome o = client.invoke("add", json{{"id", 3}, {"n", 5}});
  CHECK(o.status == InvokeOutcome::Status::Ok);
  CHECK(o.data.at("applied").get<bool>());
  CHECK(fx.engine->row("t", {Value::integer(3)})->at(1) == Value::integer(5));
  CHECK(client.get_stats().at("completed").get<uint64_t>() == 1);

  InvokeOutcome bad = client.invoke("missing", json::object());
  CHECK(bad.status == InvokeOutcome::Status::Error);
  CHECK(bad.message.find("UnknownTransaction") != std::string::npos);
}

TEST_CASE("one connection can pipeline invocations that batch together") {
  Fixture fx(3, 40);
  auto [host, port] = parse_endpoint(fx.server->endpoint());

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  REQUIRE(::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);

  for (int id = 1; id <= 3; ++id)
    write_frame(fd, json{{"id", id},
                         {"method", "invoke"},
                         {"params", {{"txn", "add"},
                                     {"args", {{"id", 7}, {"n", 1}}}}}});
  std::set<int64_t> ids;
  for (int k = 0; k < 3; ++k) {
    json resp = read_frame(fd);
    CHECK(resp.at("status") == "ok");
    ids.insert(resp.at("id").get<int64_t>());
  }
  CHECK(ids == std::set<int64_t>{1, 2, 3});
  CHECK(fx.engine->row("t", {Value::integer(7)})->at(1) == Value::integer(3));
  CHECK(fx.service->stats().merged_batches == 1);
  // merged: the three same-row deltas aggregated into one statement
  CHECK(fx.engine->stats().statements_executed == 1);
  ::close(fd);
}

TEST_CASE("config and policy management over the wire") {
  Fixture fx;
  WireClient client("127.0.0.1", fx.server->port());

  ServiceConfig next = fx.service->config();
  next.batch_size = 9;
  client.set_config(next);
  CHECK(fx.service->config().batch_size == 9);

  ServiceConfig bad = next;
  bad.workers = 0;
  CHECK_THROWS_AS(client.set_config(bad), Error);

  PartitionPolicy pol;
  pol.version = 5;
  pol.rules = {{0, 100, 0}};
  pol.fallback = 1;
  client.set_policy(pol);
  CHECK(fx.service->policy().version == 5);
  CHECK_THROWS_AS(client.set_policy(pol), Error);  // stale version
}

TEST_CASE("client retry loop resubmits after an injected abort") {
  Fixture fx(2, 10);
  WireClient client("127.0.0.1", fx.server->port());
  client.reseed(42);

  fx.engine->arm_fault(1);
  std::thread peer([&] {
    WireClient other("127.0.0.1", fx.server->port());
    other.reseed(43);
    InvokeOutcome o = other.invoke_with_retry("add", json{{"id", 5}, {"n", 1}});
    CHECK(o.status == InvokeOutcome::Status::Ok);
  });
  int attempts = 0;
  InvokeOutcome o = client.invoke_with_retry("add", json{{"id", 5}, {"n", 1}}, 8,
                                             &attempts);
  peer.join();
  CHECK(o.status == InvokeOutcome::Status::Ok);
  CHECK(fx.engine->row("t", {Value::integer(5)})->at(1) == Value::integer(2));
  CHECK(fx.service->stats().retried >= 1);
}

TEST_CASE("many concurrent clients keep counts exact") {
  Fixture fx(4, 5);
  const int clients = 6, per_client = 25;
  std::vector<std::thread> threads;
  for (int c = 0; c < clients; ++c)
    threads.emplace_back([&, c] {
      WireClient cl("127.0.0.1", fx.server->port());
      cl.reseed(static_cast<uint64_t>(c));
      for (int i = 0; i < per_client; ++i) {
        InvokeOutcome o = cl.invoke_with_retry(
            "add", json{{"id", 1 + ((c + i) % 4)}, {"n", 1}}, 16);
        CHECK(o.status == InvokeOutcome::Status::Ok);
      }
    });
  for (auto& t : threads) t.join();

  int64_t total = 0;
  for (int id = 1; id <= 4; ++id)
    total += fx.engine->row("t", {Value::integer(id)})->at(1).as_integer();
  CHECK(total == clients * per_client);
  CHECK(fx.service->stats().completed == clients * per_client);
}

TEST_CASE("server shutdown answers cleanly and frees the port") {
  auto fx = std::make_unique<Fixture>(1);
  uint16_t port = fx->server->port();
  WireClient client("127.0.0.1", port);
  CHECK(client.health());
  fx->server->stop();
  CHECK_THROWS_AS(client.call("health", json::object()), Error);
  fx.reset();

  // Port is reusable immediately.
  Fixture again(1);
  CHECK(again.server->port() != 0);
}
