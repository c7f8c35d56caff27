#include "qmix/protocol.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <json.hpp>

namespace qmix::protocol {

using nlohmann::json;

// ---------------------------------------------------------------- codec

wire::Bytes serialize_global_state(const GlobalState& g) {
  wire::Bytes out;
  wire::put_bytes(out, kStateMagic, 4);
  wire::put<std::uint16_t>(out, kProtocolVersion);
  out.push_back(static_cast<std::uint8_t>(g.state.n_qubits()));
  out.push_back(0);  // reserved
  out.push_back(static_cast<std::uint8_t>(g.label));
  out.push_back(0);
  out.push_back(0);
  out.push_back(0);
  wire::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.size));
  wire::put<double>(out, g.weight);
  wire::put_cmat(out, g.state.entries());
  wire::put<std::uint32_t>(out, wire::crc32(out));
  return out;
}

GlobalState deserialize_global_state(const wire::Bytes& bytes) {
  if (bytes.size() < 4) throw FramingError("frame shorter than the magic");
  if (std::memcmp(bytes.data(), kStateMagic, 4) != 0)
    throw BadMagic("bad global-state magic");

  wire::Reader rd(bytes);
  rd.skip(4);
  const auto version = rd.get<std::uint16_t>();
  if (version != kProtocolVersion) throw UnsupportedVersion("unsupported state version");

  const int n_qubits = rd.get<std::uint8_t>();
  rd.skip(1);
  const int label = rd.get<std::uint8_t>();
  rd.skip(3);
  const auto batch_size = rd.get<std::uint32_t>();
  const double weight = rd.get<double>();
  const Index dim = Index{1} << n_qubits;
  const CMat m = wire::get_cmat(rd, dim, dim);

  if (rd.remaining() != sizeof(std::uint32_t))
    throw FramingError("global-state frame has the wrong length");
  const auto stored_crc = rd.get<std::uint32_t>();
  const auto computed = wire::crc32(bytes.data(), bytes.size() - sizeof(std::uint32_t));
  if (stored_crc != computed) throw ChecksumMismatch("global-state checksum mismatch");

  // transport-level invariant gate (1e-8 after the exact f64 round trip)
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-8)
    throw StateInvariantViolation("transported state is not Hermitian");
  if (std::abs(m.trace().real() - 1.0) > 1e-8 || std::abs(m.trace().imag()) > 1e-8)
    throw StateInvariantViolation("transported state trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw StateInvariantViolation("transported state is not PSD");
  if (batch_size < 1 || weight <= 0.0)
    throw StateInvariantViolation("non-positive batch size or weight");

  GlobalState g{DensityMatrix::unchecked(m), label, static_cast<int>(batch_size), weight};
  return g;
}

std::string TrainRequest::to_json() const {
  json j;
  j["n_qubits"] = config.n_qubits;
  j["reps"] = config.reps;
  j["maxiter_per_epoch"] = config.maxiter_per_epoch;
  j["max_epochs"] = config.max_epochs;
  j["patience"] = config.patience;
  j["seed"] = config.seed;
  j["loss"] = config.loss.kind == LossKind::L1Rescaled ? "l1-rescaled"
              : config.loss.kind == LossKind::L1Sigmoid ? "l1-sigmoid"
                                                        : "l2";
  j["sigmoid_k"] = config.loss.sigmoid_k;
  j["observable"] =
      config.observable.mode == Observable::Mode::Parity ? -1 : config.observable.qubit_index;
  j["optimizer"] = config.optimizer == OptimizerKind::Cobyla ? "cobyla" : "nelder-mead";
  j["rho_begin"] = config.rho_begin;
  return j.dump();
}

TrainRequest TrainRequest::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad train request: ") + e.what());
  }
  TrainRequest r;
  r.config.n_qubits = j.at("n_qubits").get<int>();
  r.config.reps = j.at("reps").get<int>();
  r.config.maxiter_per_epoch = j.value("maxiter_per_epoch", 200);
  r.config.max_epochs = j.value("max_epochs", 50);
  r.config.patience = j.value("patience", 10);
  r.config.seed = j.value("seed", std::uint64_t{1});
  const std::string loss = j.value("loss", "l1-rescaled");
  r.config.loss.kind = loss == "l1-rescaled" ? LossKind::L1Rescaled
                       : loss == "l1-sigmoid" ? LossKind::L1Sigmoid
                       : loss == "l2"         ? LossKind::L2
                                              : throw ProtocolError("unknown loss kind " + loss);
  r.config.loss.sigmoid_k = j.value("sigmoid_k", 10.0);
  const int obs = j.value("observable", r.config.n_qubits - 1);
  r.config.observable = obs < 0 ? Observable::parity(r.config.n_qubits)
                                : Observable{obs, r.config.n_qubits, Observable::Mode::SingleQubit};
  r.config.optimizer =
      j.value("optimizer", "cobyla") == std::string("nelder-mead") ? OptimizerKind::NelderMead
                                                                   : OptimizerKind::Cobyla;
  r.config.rho_begin = j.value("rho_begin", 0.5);
  r.config.validate();
  return r;
}

std::string ModelResult::to_json() const {
  json j;
  j["params"] = params;
  j["final_loss"] = final_loss;
  j["eval_count"] = eval_count;
  return j.dump();
}

ModelResult ModelResult::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad model result: ") + e.what());
  }
  ModelResult r;
  r.params = j.at("params").get<std::vector<double>>();
  r.final_loss = j.at("final_loss").get<double>();
  r.eval_count = j.at("eval_count").get<long long>();
  return r;
}

// ------------------------------------------------------------ transport

namespace {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void set_recv_timeout(int ms) {
    timeval tv{ms / 1000, (ms % 1000) * 1000};
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

void send_all(const Socket& s, const std::uint8_t* data, std::size_t len) {
  std::size_t sent = 0;
  while (sent < len) {
    const ssize_t n = ::send(s.fd(), data + sent, len - sent, MSG_NOSIGNAL);
    if (n <= 0) throw TransportError("send failed");
    sent += static_cast<std::size_t>(n);
  }
}

void recv_all(const Socket& s, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(s.fd(), data + got, len - got, 0);
    if (n == 0) throw TransportError("peer closed the connection");
    if (n < 0) throw TransportError("recv failed or timed out");
    got += static_cast<std::size_t>(n);
  }
}

// Length-prefixed frame: u32 length big-endian, then type byte + body.
void send_frame(const Socket& s, FrameType type, const wire::Bytes& body) {
  wire::Bytes frame;
  const std::uint32_t len = static_cast<std::uint32_t>(body.size() + 1);
  const std::uint32_t be = htonl(len);
  wire::put_bytes(frame, &be, 4);
  frame.push_back(static_cast<std::uint8_t>(type));
  wire::put_bytes(frame, body.data(), body.size());
  send_all(s, frame.data(), frame.size());
}

std::pair<FrameType, wire::Bytes> recv_frame(const Socket& s) {
  std::uint32_t be = 0;
  recv_all(s, reinterpret_cast<std::uint8_t*>(&be), 4);
  const std::uint32_t len = ntohl(be);
  if (len < 1 || len > (1u << 30)) throw FramingError("implausible frame length");
  wire::Bytes payload(len);
  recv_all(s, payload.data(), len);
  const auto type = static_cast<FrameType>(payload[0]);
  payload.erase(payload.begin());
  return {type, std::move(payload)};
}

wire::Bytes string_body(const std::string& text) {
  return wire::Bytes(text.begin(), text.end());
}

std::string body_string(const wire::Bytes& body) {
  return std::string(body.begin(), body.end());
}

Socket connect_to(const std::string& host, int port) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw TransportError("cannot create socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw TransportError("bad host address " + host);
  if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw TransportError("cannot connect to " + host);
  return s;
}

}  // namespace

// --------------------------------------------------------------- client

ClientTranscript client_run(const ClientConfig& cfg) {
  if (cfg.states.empty()) throw ConfigError("client has no global states to send");
  ClientTranscript out;

  if (cfg.offline) {
    if (cfg.offline_dir.empty()) throw ConfigError("offline mode needs an output directory");
    std::filesystem::create_directories(cfg.offline_dir);
    int index = 0;
    for (const auto& g : cfg.states) {
      const std::string name = cfg.offline_dir + "/client" + std::to_string(cfg.client_id) +
                               "_batch" + std::to_string(index++) + ".qgs";
      wire::write_file(name, serialize_global_state(g));
      out.files_written.push_back(name);
      ++out.states_sent;
    }
    return out;
  }

  int backoff = cfg.backoff_initial_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      Socket sock = connect_to(cfg.host, cfg.port);
      sock.set_recv_timeout(60000);

      wire::Bytes hello;
      wire::put<std::uint16_t>(hello, kProtocolVersion);
      wire::put<std::uint32_t>(hello, cfg.client_id);
      wire::put<std::uint32_t>(hello, static_cast<std::uint32_t>(cfg.states.size()));
      send_frame(sock, FrameType::Hello, hello);

      const auto [ack_type, ack] = recv_frame(sock);
      if (ack_type == FrameType::Error)
        throw ProtocolError("server rejected the handshake: " + body_string(ack));
      if (ack_type != FrameType::Hello) throw ProtocolError("unexpected handshake reply");
      {
        wire::Reader rd(ack);
        const auto server_version = rd.get<std::uint16_t>();
        if (server_version != kProtocolVersion)
          throw UnsupportedVersion("server speaks protocol version " +
                                   std::to_string(server_version));
      }

      send_frame(sock, FrameType::TrainRequest, string_body(cfg.request.to_json()));
      out.states_sent = 0;
      for (const auto& g : cfg.states) {
        send_frame(sock, FrameType::GlobalState, serialize_global_state(g));
        ++out.states_sent;
      }
      send_frame(sock, FrameType::Done, {});

      const auto [res_type, res] = recv_frame(sock);
      if (res_type == FrameType::Error)
        throw ProtocolError("server error: " + body_string(res));
      if (res_type != FrameType::ModelResult)
        throw ProtocolError("expected a model result");
      out.result = ModelResult::from_json(body_string(res));
      return out;
    } catch (const TransportError&) {
      if (attempt >= cfg.max_retries) throw;
      ++out.retries_used;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
  }
}

// --------------------------------------------------------------- server

namespace {

struct ClientSession {
  std::uint32_t client_id = 0;
  Socket sock;
  std::vector<GlobalState> states;
  std::string request_json;
};

ModelResult train_on_states(std::vector<GlobalState> states, const TrainRequest& request) {
  TrainConfig cfg = request.config;
  cfg.validate();
  for (const auto& g : states)
    if (g.state.n_qubits() != cfg.n_qubits)
      throw ProtocolError("state dimension does not match the requested ansatz");

  TrainingObjective obj =
      make_global_objective(std::move(states), cfg.n_qubits, cfg.reps, cfg.observable, cfg.loss);
  Rng rng(cfg.seed);
  const RVec init = random_initial_params((cfg.reps + 1) * cfg.n_qubits, rng);
  const TrainedModel model = train(obj, init, cfg);

  ModelResult res;
  res.params.assign(model.params.theta.data(),
                    model.params.theta.data() + model.params.theta.size());
  res.final_loss = model.final_loss;
  res.eval_count = model.eval_count;
  return res;
}

}  // namespace

ServerOutcome server_run(const ServerConfig& cfg) {
  if (cfg.expected_clients < 1)
    throw ConfigError("server needs at least one expected client");

  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (!listener.valid()) throw TransportError("cannot create listening socket");
  int opt = 1;
  setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &opt, sizeof(opt));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(cfg.port));
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw TransportError("cannot bind server port");
  if (::listen(listener.fd(), 16) != 0) throw TransportError("cannot listen");

  socklen_t alen = sizeof(addr);
  getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &alen);
  const int port = ntohs(addr.sin_port);
  if (cfg.on_listening) cfg.on_listening(port);

  std::vector<ClientSession> sessions;
  while (static_cast<int>(sessions.size()) < cfg.expected_clients) {
    pollfd pf{listener.fd(), POLLIN, 0};
    const int pr = ::poll(&pf, 1, cfg.timeout_ms);
    if (pr == 0) {
      if (cfg.on_timeout == TimeoutPolicy::Proceed && !sessions.empty()) break;
      throw TransportError("timed out waiting for clients");
    }
    if (pr < 0) throw TransportError("poll failed");

    ClientSession session;
    session.sock = Socket(::accept(listener.fd(), nullptr, nullptr));
    if (!session.sock.valid()) throw TransportError("accept failed");
    session.sock.set_recv_timeout(cfg.timeout_ms);

    try {
      const auto [hello_type, hello] = recv_frame(session.sock);
      if (hello_type != FrameType::Hello) throw ProtocolError("expected HELLO");
      wire::Reader rd(hello);
      const auto version = rd.get<std::uint16_t>();
      session.client_id = rd.get<std::uint32_t>();
      if (version != kProtocolVersion) {
        send_frame(session.sock, FrameType::Error,
                   string_body("unsupported protocol version"));
        throw UnsupportedVersion("client protocol version mismatch");
      }
      wire::Bytes ack;
      wire::put<std::uint16_t>(ack, kProtocolVersion);
      send_frame(session.sock, FrameType::Hello, ack);

      for (;;) {
        const auto [type, body] = recv_frame(session.sock);
        if (type == FrameType::Done) break;
        if (type == FrameType::TrainRequest) {
          session.request_json = body_string(body);
          continue;
        }
        if (type == FrameType::GlobalState) {
          session.states.push_back(deserialize_global_state(body));
          continue;
        }
        throw ProtocolError("unexpected frame type during transfer");
      }
    } catch (const ProtocolError& e) {
      if (session.sock.valid())
        send_frame(session.sock, FrameType::Error, string_body(e.what()));
      throw;
    }
    sessions.push_back(std::move(session));
  }

  // all clients must request the same training spec
  std::string request_json;
  for (const auto& s : sessions) {
    if (s.request_json.empty()) continue;
    if (request_json.empty()) {
      request_json = s.request_json;
    } else if (request_json != s.request_json) {
      for (auto& t : sessions)
        send_frame(t.sock, FrameType::Error, string_body("conflicting train requests"));
      throw ProtocolError("clients sent conflicting train requests");
    }
  }
  if (request_json.empty()) throw ProtocolError("no client sent a train request");

  std::stable_sort(sessions.begin(), sessions.end(),
                   [](const ClientSession& a, const ClientSession& b) {
                     return a.client_id < b.client_id;
                   });
  std::vector<GlobalState> aggregate;
  for (const auto& s : sessions)
    aggregate.insert(aggregate.end(), s.states.begin(), s.states.end());

  ServerOutcome outcome;
  outcome.clients_served = static_cast<int>(sessions.size());
  outcome.states_received = static_cast<int>(aggregate.size());
  outcome.result = train_on_states(std::move(aggregate), TrainRequest::from_json(request_json));

  const wire::Bytes result_body = string_body(outcome.result.to_json());
  for (auto& s : sessions) send_frame(s.sock, FrameType::ModelResult, result_body);
  return outcome;
}

std::vector<GlobalState> load_qgs_directory(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".qgs")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  std::vector<GlobalState> states;
  states.reserve(files.size());
  for (const auto& f : files) states.push_back(deserialize_global_state(wire::read_file(f)));
  return states;
}

ServerOutcome server_run_offline(const std::string& dir, const TrainRequest& request) {
  std::vector<GlobalState> states = load_qgs_directory(dir);
  if (states.empty()) throw ConfigError("no .qgs files in " + dir);
  ServerOutcome outcome;
  outcome.clients_served = 0;
  outcome.states_received = static_cast<int>(states.size());
  outcome.result = train_on_states(std::move(states), request);
  return outcome;
}

}  // namespace qmix::protocol
