#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qmix/classifier.hpp"
#include "qmix/wire.hpp"

namespace qmix::protocol {

constexpr std::uint16_t kProtocolVersion = 1;
constexpr char kStateMagic[4] = {'Q', 'G', 'S', '1'};

// Frame grammar. There is no frame type that can carry an individual
// record; only aggregated global states travel on the wire.
enum class FrameType : std::uint8_t {
  Hello = 1,
  GlobalState = 2,
  Done = 3,
  TrainRequest = 4,
  ModelResult = 5,
  Error = 6,
};

// GlobalStateMessage layout, little-endian:
//   magic "QGS1" | version u16 | n_qubits u8 | reserved u8 | label u8 |
//   pad u8[3] | batch_size u32 | weight f64 | dim^2 x (re f64, im f64)
//   row-major | crc32 u32 over all preceding bytes
wire::Bytes serialize_global_state(const GlobalState& g);
GlobalState deserialize_global_state(const wire::Bytes& bytes);

// Ansatz, loss and schedule requested of the server; JSON on the wire.
struct TrainRequest {
  TrainConfig config;

  std::string to_json() const;
  static TrainRequest from_json(const std::string& text);
};

struct ModelResult {
  std::vector<double> params;
  double final_loss = 0.0;
  long long eval_count = 0;

  std::string to_json() const;
  static ModelResult from_json(const std::string& text);
};

struct ClientConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  std::uint32_t client_id = 1;
  std::vector<GlobalState> states;
  TrainRequest request;
  int max_retries = 3;          // transport retries, exponential backoff
  int backoff_initial_ms = 100;
  // offline mode: write one .qgs file per state instead of connecting
  bool offline = false;
  std::string offline_dir;
};

struct ClientTranscript {
  int states_sent = 0;
  int retries_used = 0;
  std::vector<std::string> files_written;  // offline mode
  ModelResult result;                      // online mode
};

ClientTranscript client_run(const ClientConfig& cfg);

enum class TimeoutPolicy { Abort, Proceed };

struct ServerConfig {
  int port = 0;  // 0 picks an ephemeral port
  int expected_clients = 1;
  int timeout_ms = 30000;
  TimeoutPolicy on_timeout = TimeoutPolicy::Abort;
  // invoked once the listening socket is bound (reports the actual port)
  std::function<void(int)> on_listening;
};

struct ServerOutcome {
  ModelResult result;
  int clients_served = 0;
  int states_received = 0;
};

// Accepts connections until every expected client has completed
// HELLO + transfers + DONE, aggregates the global states sorted by
// (client id, batch index), trains, and pushes the ModelResult back to
// every client. The training path consumes only GlobalStateMessages.
ServerOutcome server_run(const ServerConfig& cfg);

// Offline variants of both roles: states move as .qgs files.
std::vector<GlobalState> load_qgs_directory(const std::string& dir);
ServerOutcome server_run_offline(const std::string& dir, const TrainRequest& request);

}  // namespace qmix::protocol
