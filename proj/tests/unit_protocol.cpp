#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <filesystem>
#include <future>
#include <thread>

#include "qmix/protocol.hpp"

using namespace qmix;
using namespace qmix::protocol;

namespace {

GlobalState sample_global_state(std::uint64_t seed, int n_qubits = 2, int label = 1,
                                int size = 5, double weight = 1.0) {
  Rng rng(seed);
  return GlobalState{random_density_hs(Index{1} << n_qubits, rng), label, size, weight};
}

TrainRequest small_request(int n_qubits = 2, int reps = 1) {
  TrainRequest req;
  req.config.n_qubits = n_qubits;
  req.config.reps = reps;
  req.config.max_epochs = 3;
  req.config.maxiter_per_epoch = 60;
  req.config.patience = 2;
  req.config.seed = 11;
  req.config.observable = Observable::last_qubit(n_qubits);
  return req;
}

std::vector<GlobalState> toy_states(int count, std::uint64_t seed0) {
  std::vector<GlobalState> out;
  for (int i = 0; i < count; ++i)
    out.push_back(sample_global_state(seed0 + i, 2, i % 2, 4 + i, 1.0));
  return out;
}

}  // namespace

TEST_CASE("global state frame layout") {
  const GlobalState g = sample_global_state(1);
  const wire::Bytes bytes = serialize_global_state(g);
  CHECK(bytes.size() == 284);  // 4+2+1+1+1+3+4+8+16*16+4
  CHECK(bytes[0] == 'Q');
  CHECK(bytes[1] == 'G');
  CHECK(bytes[2] == 'S');
  CHECK(bytes[3] == '1');
}

TEST_CASE("round trip is bit exact") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    GlobalState g{random_density_hs(8, rng), t % 2, 3 + t, 1.0 + t};
    const wire::Bytes bytes = serialize_global_state(g);
    const GlobalState back = deserialize_global_state(bytes);
    CHECK((back.state.entries() - g.state.entries()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.label == g.label);
    CHECK(back.size == g.size);
    CHECK(back.weight == g.weight);
    const wire::Bytes again = serialize_global_state(back);
    CHECK(again == bytes);
  }
}

TEST_CASE("every corrupted byte is rejected") {
  const GlobalState g = sample_global_state(3);
  const wire::Bytes bytes = serialize_global_state(g);
  // flip one bit in every byte position; magic bytes surface as BadMagic,
  // everything else must fail the checksum (or version gate)
  int checksum_rejects = 0, other_rejects = 0;
  for (std::size_t pos = 0; pos < bytes.size(); ++pos) {
    wire::Bytes corrupted = bytes;
    corrupted[pos] ^= 0x01;
    bool threw = true;
    try {
      (void)deserialize_global_state(corrupted);
      threw = false;
    } catch (const ChecksumMismatch&) {
      ++checksum_rejects;
    } catch (const ProtocolError&) {
      ++other_rejects;
    }
    CHECK(threw);
  }
  CHECK(checksum_rejects > 0);
  CHECK(other_rejects >= 4);  // at least the magic bytes
}

TEST_CASE("truncated frames fail as framing errors") {
  const wire::Bytes bytes = serialize_global_state(sample_global_state(4));
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() - 1}) {
    wire::Bytes cut(bytes.begin(), bytes.begin() + len);
    CHECK_THROWS_AS((void)deserialize_global_state(cut), ProtocolError);
  }
}

TEST_CASE("invariant-violating states are rejected after transport") {
  GlobalState g = sample_global_state(5);
  CMat scaled = g.state.entries() * 0.9;  // trace 0.9
  wire::Bytes bytes;
  wire::put_bytes(bytes, kStateMagic, 4);
  wire::put<std::uint16_t>(bytes, kProtocolVersion);
  bytes.push_back(2);
  bytes.push_back(0);
  bytes.push_back(1);
  for (int i = 0; i < 3; ++i) bytes.push_back(0);
  wire::put<std::uint32_t>(bytes, 5);
  wire::put<double>(bytes, 1.0);
  wire::put_cmat(bytes, scaled);
  wire::put<std::uint32_t>(bytes, wire::crc32(bytes));
  CHECK_THROWS_AS((void)deserialize_global_state(bytes), StateInvariantViolation);
}

TEST_CASE("train request and model result json round trips") {
  TrainRequest req = small_request(3, 2);
  req.config.loss = LossSpec{LossKind::L1Sigmoid, 7.5};
  req.config.observable = Observable::parity(3);
  const TrainRequest back = TrainRequest::from_json(req.to_json());
  CHECK(back.config.n_qubits == 3);
  CHECK(back.config.reps == 2);
  CHECK(back.config.loss.kind == LossKind::L1Sigmoid);
  CHECK(back.config.loss.sigmoid_k == 7.5);
  CHECK(back.config.observable.mode == Observable::Mode::Parity);

  ModelResult res;
  res.params = {0.1, -0.2, 0.3};
  res.final_loss = 0.25;
  res.eval_count = 1234;
  const ModelResult rback = ModelResult::from_json(res.to_json());
  CHECK(rback.params == res.params);
  CHECK(rback.final_loss == res.final_loss);
  CHECK(rback.eval_count == res.eval_count);
}

TEST_CASE("offline client writes valid qgs files") {
  const std::string dir =
      (std::filesystem::temp_directory_path() / "qmix_qgs_test").string();
  std::filesystem::remove_all(dir);

  ClientConfig cfg;
  cfg.offline = true;
  cfg.offline_dir = dir;
  cfg.client_id = 7;
  cfg.states = toy_states(2, 100);
  cfg.request = small_request();
  const ClientTranscript t = client_run(cfg);
  CHECK(t.states_sent == 2);
  REQUIRE(t.files_written.size() == 2);
  for (const auto& f : t.files_written)
    CHECK_NOTHROW((void)deserialize_global_state(wire::read_file(f)));

  const auto loaded = load_qgs_directory(dir);
  CHECK(loaded.size() == 2);
}

TEST_CASE("single client delegation matches local training") {
  std::promise<int> port_promise;
  auto port_future = port_promise.get_future();

  ServerConfig scfg;
  scfg.expected_clients = 1;
  scfg.timeout_ms = 20000;
  scfg.on_listening = [&](int port) { port_promise.set_value(port); };

  auto server = std::async(std::launch::async, [&] { return server_run(scfg); });
  const int port = port_future.get();

  ClientConfig ccfg;
  ccfg.port = port;
  ccfg.client_id = 1;
  ccfg.states = toy_states(4, 200);
  ccfg.request = small_request();
  const ClientTranscript t = client_run(ccfg);
  const ServerOutcome outcome = server.get();

  CHECK(t.states_sent == 4);
  CHECK(outcome.clients_served == 1);
  CHECK(outcome.states_received == 4);

  // local training on the same aggregate and seed
  TrainConfig cfg = small_request().config;
  TrainingObjective obj = make_global_objective(toy_states(4, 200), cfg.n_qubits, cfg.reps,
                                                cfg.observable, cfg.loss);
  Rng init_rng(cfg.seed);
  const TrainedModel local =
      train(obj, random_initial_params((cfg.reps + 1) * cfg.n_qubits, init_rng), cfg);
  REQUIRE(t.result.params.size() == static_cast<std::size_t>(local.params.theta.size()));
  for (std::size_t i = 0; i < t.result.params.size(); ++i)
    CHECK(t.result.params[i] == local.params.theta(static_cast<Index>(i)));
  CHECK(t.result.final_loss == local.final_loss);
}

TEST_CASE("two clients equal one client sending the union") {
  auto run_two_clients = [&] {
    std::promise<int> pp;
    auto pf = pp.get_future();
    ServerConfig scfg;
    scfg.expected_clients = 2;
    scfg.timeout_ms = 20000;
    scfg.on_listening = [&](int port) { pp.set_value(port); };
    auto server = std::async(std::launch::async, [&] { return server_run(scfg); });
    const int port = pf.get();

    auto client = [&](std::uint32_t id, std::vector<GlobalState> states) {
      ClientConfig c;
      c.port = port;
      c.client_id = id;
      c.states = std::move(states);
      c.request = small_request();
      return client_run(c);
    };
    auto c1 = std::async(std::launch::async, client, 1u, toy_states(2, 300));
    auto c2 = std::async(std::launch::async, client, 2u, toy_states(3, 400));
    const ClientTranscript t1 = c1.get();
    const ClientTranscript t2 = c2.get();
    const ServerOutcome outcome = server.get();
    CHECK(outcome.states_received == 5);
    CHECK(t1.result.params == t2.result.params);
    return t1.result;
  };

  auto run_one_client = [&] {
    std::promise<int> pp;
    auto pf = pp.get_future();
    ServerConfig scfg;
    scfg.expected_clients = 1;
    scfg.timeout_ms = 20000;
    scfg.on_listening = [&](int port) { pp.set_value(port); };
    auto server = std::async(std::launch::async, [&] { return server_run(scfg); });
    const int port = pf.get();
    std::vector<GlobalState> all = toy_states(2, 300);
    for (auto& g : toy_states(3, 400)) all.push_back(g);
    ClientConfig c;
    c.port = port;
    c.client_id = 1;
    c.states = std::move(all);
    c.request = small_request();
    const ClientTranscript t = client_run(c);
    server.get();
    return t.result;
  };

  const ModelResult two = run_two_clients();
  const ModelResult one = run_one_client();
  CHECK(two.params == one.params);
  CHECK(two.final_loss == one.final_loss);
  CHECK(two.eval_count == one.eval_count);
}

TEST_CASE("offline pipeline matches the online result") {
  const std::string dir =
      (std::filesystem::temp_directory_path() / "qmix_offline_test").string();
  std::filesystem::remove_all(dir);

  ClientConfig c;
  c.offline = true;
  c.offline_dir = dir;
  c.client_id = 1;
  c.states = toy_states(4, 500);
  c.request = small_request();
  client_run(c);

  const ServerOutcome offline = server_run_offline(dir, small_request());
  TrainConfig cfg = small_request().config;
  TrainingObjective obj = make_global_objective(toy_states(4, 500), cfg.n_qubits, cfg.reps,
                                                cfg.observable, cfg.loss);
  Rng init_rng(cfg.seed);
  const TrainedModel local =
      train(obj, random_initial_params((cfg.reps + 1) * cfg.n_qubits, init_rng), cfg);
  for (std::size_t i = 0; i < offline.result.params.size(); ++i)
    CHECK(offline.result.params[i] == local.params.theta(static_cast<Index>(i)));
}

TEST_CASE("configuration errors") {
  ServerConfig bad;
  bad.expected_clients = 0;
  CHECK_THROWS_AS(server_run(bad), ConfigError);

  ClientConfig empty;
  empty.request = small_request();
  CHECK_THROWS_AS(client_run(empty), ConfigError);
}

TEST_CASE("server rejects unknown frame types") {
  std::promise<int> pp;
  auto pf = pp.get_future();
  ServerConfig scfg;
  scfg.expected_clients = 1;
  scfg.timeout_ms = 5000;
  scfg.on_listening = [&](int port) { pp.set_value(port); };
  auto server = std::async(std::launch::async, [&] { return server_run(scfg); });
  const int port = pf.get();

  // hand-rolled client: HELLO, then a frame type outside the grammar
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  auto send_frame_raw = [&](std::uint8_t type, const std::vector<std::uint8_t>& body) {
    std::uint32_t len = htonl(static_cast<std::uint32_t>(body.size() + 1));
    ::send(fd, &len, 4, MSG_NOSIGNAL);
    ::send(fd, &type, 1, MSG_NOSIGNAL);
    if (!body.empty()) ::send(fd, body.data(), body.size(), MSG_NOSIGNAL);
  };
  std::vector<std::uint8_t> hello;
  const std::uint16_t version = kProtocolVersion;
  const std::uint32_t cid = 9, nstates = 1;
  hello.insert(hello.end(), reinterpret_cast<const std::uint8_t*>(&version),
               reinterpret_cast<const std::uint8_t*>(&version) + 2);
  hello.insert(hello.end(), reinterpret_cast<const std::uint8_t*>(&cid),
               reinterpret_cast<const std::uint8_t*>(&cid) + 4);
  hello.insert(hello.end(), reinterpret_cast<const std::uint8_t*>(&nstates),
               reinterpret_cast<const std::uint8_t*>(&nstates) + 4);
  send_frame_raw(1, hello);               // HELLO
  send_frame_raw(99, {0x01, 0x02});       // outside the grammar
  CHECK_THROWS_AS(server.get(), ProtocolError);
  ::close(fd);
}

TEST_CASE("server aborts on client timeout by default") {
  ServerConfig scfg;
  scfg.expected_clients = 1;
  scfg.timeout_ms = 60;
  CHECK_THROWS_AS(server_run(scfg), TransportError);
}

TEST_CASE("client retries then aborts when no server listens") {
  ClientConfig c;
  c.port = 1;  // privileged port nothing listens on
  c.client_id = 1;
  c.states = toy_states(1, 600);
  c.request = small_request();
  c.max_retries = 2;
  c.backoff_initial_ms = 1;
  CHECK_THROWS_AS(client_run(c), TransportError);
}
