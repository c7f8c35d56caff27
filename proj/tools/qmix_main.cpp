#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmix/dataset_io.hpp"
#include "qmix/privacy.hpp"
#include "qmix/protocol.hpp"

using namespace qmix;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 success, 2 usage, 3 domain error, 4 transport error
constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitTransport = 4;

std::string g_command_line;

void write_manifest(const std::string& primary_output, std::uint64_t seed,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  json m;
  m["command"] = g_command_line;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["outputs"] = outputs;
  m["wall_clock_seconds"] = wall_seconds;
  std::ofstream out(primary_output + ".manifest.json", std::ios::trunc);
  out << m.dump(2) << "\n";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

LossSpec parse_loss(const std::string& name, double k) {
  LossSpec spec;
  spec.sigmoid_k = k;
  if (name == "l1-rescaled")
    spec.kind = LossKind::L1Rescaled;
  else if (name == "l1-sigmoid")
    spec.kind = LossKind::L1Sigmoid;
  else if (name == "l2")
    spec.kind = LossKind::L2;
  else
    throw CLI::ValidationError("--loss", "expected l1-rescaled, l1-sigmoid or l2");
  return spec;
}

Observable parse_observable(int z_qubit, int n_qubits) {
  if (z_qubit == -1) return Observable::parity(n_qubits);
  if (z_qubit == -2) return Observable::last_qubit(n_qubits);
  if (z_qubit < 0 || z_qubit >= n_qubits) throw DomainError("--z-qubit outside the qubit range");
  return Observable{z_qubit, n_qubits, Observable::Mode::SingleQubit};
}

// training options shared by `train` and the protocol roles
struct TrainCliOpts {
  int layers = 2;
  std::string loss = "l1-rescaled";
  double sigmoid_k = 10.0;
  int maxiter = 200;
  int epochs = 50;
  int patience = 10;
  std::uint64_t seed = 1;
  int z_qubit = -2;  // -2: last qubit, -1: parity
  std::string optimizer = "cobyla";

  void attach(CLI::App* cmd) {
    cmd->add_option("--layers", layers, "ansatz repetitions (entanglement blocks)");
    cmd->add_option("--loss", loss, "l1-rescaled | l1-sigmoid | l2");
    cmd->add_option("--k", sigmoid_k, "sigmoid temperature");
    cmd->add_option("--maxiter", maxiter, "objective evaluations per epoch");
    cmd->add_option("--epochs", epochs, "maximum optimizer epochs");
    cmd->add_option("--patience", patience, "epochs without improvement before stopping");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--z-qubit", z_qubit, "measured qubit index; -1 measures the full parity");
    cmd->add_option("--optimizer", optimizer, "cobyla | nelder-mead");
  }

  TrainConfig to_config(int n_qubits) const {
    TrainConfig cfg;
    cfg.n_qubits = n_qubits;
    cfg.reps = layers;
    cfg.maxiter_per_epoch = maxiter;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.seed = seed;
    cfg.loss = parse_loss(loss, sigmoid_k);
    cfg.observable = parse_observable(z_qubit, n_qubits);
    cfg.optimizer =
        optimizer == "nelder-mead" ? OptimizerKind::NelderMead : OptimizerKind::Cobyla;
    return cfg;
  }
};

std::vector<GlobalState> build_globals(const LabeledDataset& ds, int batches_per_class,
                                       const std::string& batching, Rng& rng,
                                       std::vector<Batch>* batches_out = nullptr) {
  std::vector<GlobalState> globals;
  const WeightMode weight_mode = batching == "smart" ? WeightMode::BatchSize : WeightMode::Unit;
  const std::vector<DensityMatrix> all = ds.all_densities();
  for (int label : {0, 1}) {
    const std::vector<int> idx = ds.indices_of_class(label);
    if (idx.empty()) throw DomainError("dataset is missing a class");
    std::vector<Batch> batches;
    if (batching == "smart") {
      std::vector<DensityMatrix> states = ds.densities_for(idx);
      batches = smart_batches(states, batches_per_class, rng, label, label);
      for (auto& b : batches)  // remap subset positions to dataset indices
        for (int& m : b.member_indices) m = idx[m];
    } else if (batching == "random") {
      batches = random_batches(idx, batches_per_class, rng, label, label);
    } else {
      throw CLI::ValidationError("--batching", "expected random or smart");
    }
    for (const auto& b : batches) globals.push_back(build_global_state(b, all, weight_mode));
    if (batches_out) batches_out->insert(batches_out->end(), batches.begin(), batches.end());
  }
  return globals;
}

void export_batches_csv(const std::vector<Batch>& batches, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << "sample_index,class,batch_id\n";
  int batch_id = 0;
  for (const auto& b : batches) {
    for (int m : b.member_indices) out << m << "," << b.class_id << "," << batch_id << "\n";
    ++batch_id;
  }
}

struct EvalScores {
  double auc = 0.0;
  double accuracy = 0.0;
};

EvalScores evaluate(const AnsatzParams& params, const Observable& obs, const LabeledDataset& ds) {
  const Predictor pred(params, obs);
  RVec scores(ds.size());
  const auto densities = ds.all_densities();
  for (int i = 0; i < ds.size(); ++i) scores(i) = pred.predict(densities[i]);
  return {auc(scores, ds.labels), threshold_accuracy(scores, ds.labels)};
}

struct TrainRunResult {
  TrainedModel model;
  EvalScores train_scores;
  EvalScores test_scores;
  long long objective_evals = 0;
  int states_per_eval = 0;
};

TrainRunResult run_training(const LabeledDataset& train_ds, const LabeledDataset& test_ds,
                            const std::string& mode, int batches_per_class,
                            const std::string& batching, const TrainCliOpts& opts,
                            const std::string& history_csv = "",
                            const std::string& batches_csv = "") {
  const int n_qubits = train_ds.n_qubits();
  TrainConfig cfg = opts.to_config(n_qubits);

  TrainingObjective objective;
  if (mode == "global") {
    Rng batch_rng = Rng(opts.seed).derive(17);
    std::vector<Batch> batches;
    const std::vector<GlobalState> globals =
        build_globals(train_ds, batches_per_class, batching, batch_rng, &batches);
    if (!batches_csv.empty()) export_batches_csv(batches, batches_csv);
    objective = make_global_objective(globals, n_qubits, cfg.reps, cfg.observable, cfg.loss);
  } else if (mode == "instance") {
    objective = make_instance_objective(train_ds.all_densities(), train_ds.labels, n_qubits,
                                        cfg.reps, cfg.observable, cfg.loss);
  } else {
    throw CLI::ValidationError("--mode", "expected instance or global");
  }

  Rng init_rng(opts.seed);
  const RVec init = random_initial_params((cfg.reps + 1) * n_qubits, init_rng);
  TrainRunResult out;
  out.model = train(objective, init, cfg);
  out.objective_evals = objective.counter->objective_evaluations;
  out.states_per_eval = objective.states_per_evaluation;
  out.train_scores = evaluate(out.model.params, cfg.observable, train_ds);
  out.test_scores = evaluate(out.model.params, cfg.observable, test_ds);

  if (!history_csv.empty()) {
    std::ofstream h(history_csv, std::ios::trunc);
    h << "epoch,loss,eval_count\n";
    for (std::size_t e = 0; e < out.model.history.size(); ++e)
      h << e + 1 << "," << out.model.history[e] << "," << out.model.history_evals[e] << "\n";
  }
  return out;
}

json metrics_json(const TrainRunResult& r, const std::string& mode, const TrainCliOpts& opts,
                  int batches_per_class, const std::string& batching) {
  json j;
  j["mode"] = mode;
  j["loss"] = opts.loss;
  j["layers"] = opts.layers;
  j["seed"] = opts.seed;
  j["batches_per_class"] = batches_per_class;
  j["batching"] = batching;
  j["final_loss"] = r.model.final_loss;
  j["epochs_run"] = r.model.epochs_run;
  j["eval_count"] = r.model.eval_count;
  j["objective_evaluations"] = r.objective_evals;
  j["states_per_evaluation"] = r.states_per_eval;
  j["train_auc"] = r.train_scores.auc;
  j["test_auc"] = r.test_scores.auc;
  j["train_accuracy"] = r.train_scores.accuracy;
  j["test_accuracy"] = r.test_scores.accuracy;
  j["params"] = std::vector<double>(r.model.params.theta.data(),
                                    r.model.params.theta.data() + r.model.params.theta.size());
  return j;
}

RMat dataset_overlaps(const LabeledDataset& ds, const std::vector<int>& idx) {
  // pure payloads admit the fast Gram route
  if (ds.kind == PayloadKind::Pure || ds.kind == PayloadKind::Genotype) {
    std::vector<PureState> pures;
    pures.reserve(idx.size());
    for (int i : idx) {
      if (ds.kind == PayloadKind::Pure)
        pures.push_back(ds.pures[i]);
      else
        pures.push_back(amplitude_encode(ds.genotypes[i], ds.n_qubits()));
    }
    return pairwise_state_overlaps(pures);
  }
  std::vector<DensityMatrix> states = ds.densities_for(idx);
  return pairwise_trace_overlaps(states);
}

PrivacyReport audit_epsilon(const LabeledDataset& ds, int batch_size, double delta,
                            const std::string& scheme, std::uint64_t seed,
                            ProjectionSamples* samples_out = nullptr) {
  ProjectionSamples pooled;
  Rng rng(seed);
  for (int label : {0, 1}) {
    const auto idx = ds.indices_of_class(label);
    if (static_cast<int>(idx.size()) < batch_size)
      throw AuditError("class population smaller than the batch size");
    const RMat overlaps = dataset_overlaps(ds, idx);
    ProjectionSamples s;
    if (scheme == "random") {
      Rng class_rng = rng.derive(label + 1);
      s = membership_projections_random(overlaps, batch_size, class_rng);
    } else if (scheme == "smart") {
      Rng class_rng = rng.derive(label + 100);
      const int n_batches = std::max(1, static_cast<int>(idx.size()) / batch_size);
      const auto batches =
          smart_batches_from_affinity(overlaps, n_batches, class_rng, label, label);
      s = membership_projections_smart(overlaps, batches);
    } else {
      throw CLI::ValidationError("--scheme", "expected random or smart");
    }
    pooled.adjacent.insert(pooled.adjacent.end(), s.adjacent.begin(), s.adjacent.end());
    pooled.including.insert(pooled.including.end(), s.including.begin(), s.including.end());
    pooled.n_excluded += s.n_excluded;
  }
  Rng eval_rng = rng.derive(777);
  PrivacyReport rep = epsilon_from_samples(pooled, delta, 10000, eval_rng);
  rep.scheme = scheme + " (N_i=" + std::to_string(batch_size) + ")";
  if (samples_out) *samples_out = std::move(pooled);
  return rep;
}

json report_json(const PrivacyReport& rep) {
  json j;
  j["mu1"] = rep.mu1;
  j["std1"] = rep.std1;
  j["mu2"] = rep.mu2;
  j["std2"] = rep.std2;
  j["delta"] = rep.delta;
  if (std::isinf(rep.epsilon))
    j["epsilon"] = rep.epsilon > 0 ? "inf" : "-inf";
  else
    j["epsilon"] = rep.epsilon;
  j["n_excluded"] = rep.n_excluded;
  j["n_eval_excluded"] = rep.n_eval_excluded;
  j["n_adjacent"] = rep.n_adjacent;
  j["n_including"] = rep.n_including;
  j["scheme"] = rep.scheme;
  if (!rep.diagnostic.empty()) j["diagnostic"] = rep.diagnostic;
  return j;
}

// ----------------------------------------------------------------- gen

int cmd_gen(const std::string& kind, double e_s, double e_shift, int n_per_class, int snps,
            int cases, int controls, int panel, std::uint64_t seed, const std::string& out,
            const std::string& csv) {
  const Stopwatch watch;
  Rng rng(seed);
  LabeledDataset ds;
  if (kind == "toy-pure") {
    ds = gen_toy_pure(ToyParams{e_s, e_shift, n_per_class}, rng);
  } else if (kind == "toy-mixed") {
    ds = gen_toy_mixed(ToyParams{e_s, e_shift, n_per_class}, rng);
  } else if (kind == "snp") {
    SnpModelParams p;
    p.n_snps = snps;
    p.n_cases = cases;
    p.n_controls = controls;
    p.panel_snps = panel;
    ds = gen_snp(p, rng);
  } else {
    throw CLI::ValidationError("kind", "expected toy-pure, toy-mixed or snp");
  }
  save_dataset(ds, out);
  std::vector<std::string> outputs{out};
  if (!csv.empty()) {
    export_genotypes_csv(ds, csv);
    outputs.push_back(csv);
  }
  std::cout << "wrote " << out << " (" << ds.size() << " records, "
            << payload_kind_name(ds.kind) << ")";
  if (ds.kind != PayloadKind::Genotype)
    std::cout << " class-global fidelity " << class_global_fidelity(ds);
  std::cout << "\n";
  write_manifest(out, seed, outputs, watch.seconds());
  return 0;
}

// --------------------------------------------------------------- train

int cmd_train(const std::string& input, const std::string& test_input, double split,
              std::uint64_t split_seed, const std::string& mode, int batches_per_class,
              const std::string& batching, const TrainCliOpts& opts, const std::string& out,
              const std::string& history_csv, const std::string& batches_csv) {
  const Stopwatch watch;
  LabeledDataset full = load_dataset(input);
  LabeledDataset train_ds, test_ds;
  if (!test_input.empty()) {
    train_ds = std::move(full);
    test_ds = load_dataset(test_input);
  } else {
    Rng split_rng(split_seed);
    std::tie(train_ds, test_ds) = stratified_split(full, split, split_rng);
  }
  train_ds.ensure_densities();
  test_ds.ensure_densities();

  const TrainRunResult r = run_training(train_ds, test_ds, mode, batches_per_class, batching,
                                        opts, history_csv, batches_csv);
  json j = metrics_json(r, mode, opts, batches_per_class, batching);
  j["input"] = input;
  j["n_train"] = train_ds.size();
  j["n_test"] = test_ds.size();
  write_json(out, j);
  std::cout << "test AUC " << r.test_scores.auc << ", test accuracy " << r.test_scores.accuracy
            << ", final loss " << r.model.final_loss << ", circuit executions "
            << r.model.eval_count << "\n";
  std::vector<std::string> outputs{out};
  if (!history_csv.empty()) outputs.push_back(history_csv);
  if (!batches_csv.empty()) outputs.push_back(batches_csv);
  write_manifest(out, opts.seed, outputs, watch.seconds());
  return 0;
}

// --------------------------------------------------------------- audit

int cmd_audit_epsilon(const std::string& input, int batch_size, double delta,
                      const std::string& scheme, std::uint64_t seed, const std::string& out,
                      const std::string& samples_csv) {
  const Stopwatch watch;
  const LabeledDataset ds = load_dataset(input);
  ProjectionSamples samples;
  const PrivacyReport rep = audit_epsilon(ds, batch_size, delta, scheme, seed, &samples);
  json j = report_json(rep);
  j["input"] = input;
  j["batch_size"] = batch_size;
  write_json(out, j);
  std::vector<std::string> outputs{out};
  if (!samples_csv.empty()) {
    std::ofstream c(samples_csv, std::ios::trunc);
    c << "kind,value\n";
    for (double v : samples.adjacent) c << "adjacent," << v << "\n";
    for (double v : samples.including) c << "including," << v << "\n";
    outputs.push_back(samples_csv);
  }
  std::cout << "epsilon = " << rep.epsilon << " (delta " << delta << ", scheme " << scheme
            << ", N_i " << batch_size << ")\n";
  write_manifest(out, seed, outputs, watch.seconds());
  return 0;
}

std::vector<DensityMatrix> genotype_basis(int n_snp, int alphabet) {
  // all non-zero genotype strings; the zero string cannot be
  // amplitude-encoded
  long long count = 1;
  for (int i = 0; i < n_snp; ++i) count *= alphabet;
  std::vector<DensityMatrix> basis;
  const int nq = std::max(1, qubit_count_for_dim(n_snp));
  for (long long code = 1; code < count; ++code) {
    RVec g(n_snp);
    long long c = code;
    for (int j = 0; j < n_snp; ++j) {
      g(j) = static_cast<double>(c % alphabet);
      c /= alphabet;
    }
    basis.push_back(pure_to_density(amplitude_encode(g, nq)));
  }
  return basis;
}

int cmd_audit_composition(int n_snp, int alphabet, int batch, bool oracle, std::uint64_t seed,
                          const std::string& out) {
  const Stopwatch watch;
  const std::vector<DensityMatrix> basis = genotype_basis(n_snp, alphabet);
  const long long n_state = static_cast<long long>(basis.size());
  const CompositionEstimate est = composition_count_estimate(batch, n_state, n_snp);
  json j;
  j["n_snp"] = n_snp;
  j["alphabet"] = alphabet;
  j["batch_size"] = batch;
  j["n_state"] = est.n_state;
  j["d"] = est.d;
  j["ln_b_all"] = est.ln_b_all;
  j["ln_b"] = est.ln_b;
  j["entropy_proxy"] = est.entropy_proxy;
  j["ln_b_all_stirling"] = est.ln_b_all_stirling;
  j["ln_b_stirling"] = est.ln_b_stirling;
  if (oracle) {
    Rng rng(seed);
    std::vector<DensityMatrix> members;
    for (int i = 0; i < batch; ++i)
      members.push_back(basis[rng.integer(static_cast<std::uint64_t>(basis.size()))]);
    const DensityMatrix glob = mix_uniform(members);
    const long long exact = composition_count_exact(basis, batch, glob);
    j["oracle_exact_count"] = exact;
    j["estimate_over_exact_log10"] =
        (est.ln_b - std::log(static_cast<double>(exact))) / std::log(10.0);
  }
  write_json(out, j);
  std::cout << "ln|B_all| = " << est.ln_b_all << ", ln|B| = " << est.ln_b;
  if (oracle) std::cout << ", exact count = " << j["oracle_exact_count"];
  std::cout << "\n";
  write_manifest(out, seed, {out}, watch.seconds());
  return 0;
}

int cmd_audit_correlation(const std::string& loss, double k, int trials, int batch, int qubits,
                          int depth, std::uint64_t seed, const std::string& out) {
  const Stopwatch watch;
  Rng rng(seed);
  const CorrelationResult r =
      loss_update_correlation(batch, trials, parse_loss(loss, k), qubits, depth, rng);
  json j;
  j["loss"] = loss;
  j["sigmoid_k"] = k;
  j["trials"] = r.trials;
  j["batch_size"] = batch;
  j["qubits"] = qubits;
  j["depth"] = depth;
  j["pcc"] = r.pcc;
  j["sign_pcc"] = r.sign_pcc;
  j["sign_agreement"] = r.sign_agreement;
  write_json(out, j);
  std::cout << "pcc " << r.pcc << ", sign pcc " << r.sign_pcc << ", sign agreement "
            << r.sign_agreement << "\n";
  write_manifest(out, seed, {out}, watch.seconds());
  return 0;
}

// ------------------------------------------------------------ protocol

protocol::TrainRequest request_from_opts(const TrainCliOpts& opts, int n_qubits) {
  protocol::TrainRequest req;
  req.config = opts.to_config(n_qubits);
  return req;
}

int cmd_protocol_server(int port, int clients, int timeout_ms, bool offline,
                        const std::string& in_dir, const TrainCliOpts& opts, int qubits,
                        const std::string& out) {
  const Stopwatch watch;
  protocol::ServerOutcome outcome;
  if (offline) {
    outcome = protocol::server_run_offline(in_dir, request_from_opts(opts, qubits));
  } else {
    protocol::ServerConfig cfg;
    cfg.port = port;
    cfg.expected_clients = clients;
    cfg.timeout_ms = timeout_ms;
    cfg.on_listening = [](int p) { std::cout << "listening on 127.0.0.1:" << p << std::endl; };
    outcome = protocol::server_run(cfg);
  }
  json j;
  j["result"] = json::parse(outcome.result.to_json());
  j["clients_served"] = outcome.clients_served;
  j["states_received"] = outcome.states_received;
  write_json(out, j);
  std::cout << "trained on " << outcome.states_received << " global states, final loss "
            << outcome.result.final_loss << "\n";
  write_manifest(out, opts.seed, {out}, watch.seconds());
  return 0;
}

int cmd_protocol_client(const std::string& server, const std::string& input,
                        int batches_per_class, const std::string& batching,
                        std::uint32_t client_id, bool offline, const std::string& out_dir,
                        const TrainCliOpts& opts, const std::string& result_out) {
  const Stopwatch watch;
  LabeledDataset ds = load_dataset(input);
  ds.ensure_densities();
  Rng batch_rng = Rng(opts.seed).derive(17);
  const std::vector<GlobalState> globals =
      build_globals(ds, batches_per_class, batching, batch_rng);

  protocol::ClientConfig cfg;
  cfg.client_id = client_id;
  cfg.states = globals;
  cfg.request = request_from_opts(opts, ds.n_qubits());
  if (offline) {
    cfg.offline = true;
    cfg.offline_dir = out_dir;
  } else {
    const auto colon = server.rfind(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--server", "expected host:port");
    cfg.host = server.substr(0, colon);
    cfg.port = std::stoi(server.substr(colon + 1));
  }
  const protocol::ClientTranscript t = protocol::client_run(cfg);
  json j;
  j["states_sent"] = t.states_sent;
  j["retries_used"] = t.retries_used;
  if (offline) {
    j["files_written"] = t.files_written;
  } else {
    j["result"] = json::parse(t.result.to_json());
  }
  write_json(result_out, j);
  std::cout << "sent " << t.states_sent << " global states\n";
  write_manifest(result_out, opts.seed, {result_out}, watch.seconds());
  return 0;
}

// --------------------------------------------------------------- repro

LabeledDataset gen_toy(const std::string& kind, double e_s, double e_shift, int n,
                       std::uint64_t seed) {
  Rng rng(seed);
  return kind == "pure" ? gen_toy_pure(ToyParams{e_s, e_shift, n}, rng)
                        : gen_toy_mixed(ToyParams{e_s, e_shift, n}, rng);
}

int cmd_repro_table(const std::string& which, const std::vector<std::uint64_t>& seeds,
                    const std::string& out) {
  const Stopwatch watch;
  const bool pure = which == "table1";
  const std::vector<double> grid = pure
                                       ? std::vector<double>{1.5, 2.0, 2.5, 3.0, 3.5, 4.0}
                                       : std::vector<double>{0.25, 0.26, 0.27, 0.28, 0.29, 0.3};
  const double e_s = pure ? 0.4 : 0.2;

  std::ofstream csv(out, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + out);
  csv << "e_shift,seed,fidelity,fidelity_sq,mode,train_auc,test_auc,train_accuracy,"
         "test_accuracy,final_loss\n";

  for (double e_shift : grid) {
    for (std::uint64_t seed : seeds) {
      const LabeledDataset train_ds = gen_toy(pure ? "pure" : "mixed", e_s, e_shift, 200, seed);
      const LabeledDataset test_ds =
          gen_toy(pure ? "pure" : "mixed", e_s, e_shift, 200, seed + 1000);
      const double fid = class_global_fidelity(train_ds);
      for (const std::string mode : {"instance", "global"}) {
        TrainCliOpts opts;
        opts.seed = seed;
        opts.layers = 2;
        const TrainRunResult r = run_training(train_ds, test_ds, mode, 1, "random", opts);
        csv << e_shift << "," << seed << "," << fid << "," << fid * fid << "," << mode << ","
            << r.train_scores.auc << "," << r.test_scores.auc << "," << r.train_scores.accuracy
            << "," << r.test_scores.accuracy << "," << r.model.final_loss << "\n";
        csv.flush();
      }
    }
  }
  write_manifest(out, seeds.empty() ? 0 : seeds.front(), {out}, watch.seconds());
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_repro_fig3_toy(std::uint64_t seed, const std::string& out) {
  const Stopwatch watch;
  std::ofstream csv(out, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + out);
  csv << "dataset,e_shift,label,z_expectation\n";
  const Observable z = Observable::last_qubit(2);
  for (double e_shift : {1.5, 4.0}) {
    const LabeledDataset ds = gen_toy("pure", 0.4, e_shift, 200, seed);
    for (int i = 0; i < ds.size(); ++i)
      csv << "pure," << e_shift << "," << ds.labels[i] << ","
          << pauli_z_expectation(ds.densities[i], z) << "\n";
  }
  for (double e_shift : {0.25, 0.3}) {
    const LabeledDataset ds = gen_toy("mixed", 0.2, e_shift, 200, seed);
    for (int i = 0; i < ds.size(); ++i)
      csv << "mixed," << e_shift << "," << ds.labels[i] << ","
          << pauli_z_expectation(ds.densities[i], z) << "\n";
  }
  write_manifest(out, seed, {out}, watch.seconds());
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_repro_eps_curve(int snps, std::uint64_t seed, const std::string& out) {
  const Stopwatch watch;
  SnpModelParams p;
  p.n_snps = snps;
  p.n_cases = 465;
  p.n_controls = 465;
  Rng rng(seed);
  const LabeledDataset ds = gen_snp(p, rng);

  std::ofstream csv(out, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + out);
  csv << "batch_size,eps_random,eps_smart\n";
  for (int ni : {8, 16, 32, 65, 93, 155}) {
    const double er = audit_epsilon(ds, ni, 0.05, "random", seed + 1).epsilon;
    const double es = audit_epsilon(ds, ni, 0.05, "smart", seed + 2).epsilon;
    csv << ni << "," << er << "," << es << "\n";
    csv.flush();
    std::cout << "N_i " << ni << ": eps_random " << er << ", eps_smart " << es << "\n";
  }
  write_manifest(out, seed, {out}, watch.seconds());
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  {
    std::ostringstream os;
    for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
    g_command_line = os.str();
  }

  CLI::App app{"density-matrix quantum classifier training and privacy auditing toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // ---- gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->require_subcommand(1);
  struct {
    double e_s = 0.4, e_shift = 1.5;
    int n = 200;
    int snps = 128, cases = 465, controls = 465, panel = 0;
    std::uint64_t seed = 1;
    std::string out, csv;
  } g;
  for (const char* kind : {"toy-pure", "toy-mixed", "snp"}) {
    auto* sub = gen->add_subcommand(kind);
    if (std::string(kind) != "snp") {
      sub->add_option("--e-s", g.e_s, "within-class perturbation scale");
      sub->add_option("--e-shift", g.e_shift, "between-class shift scale");
      sub->add_option("--n", g.n, "samples per class");
    } else {
      sub->add_option("--snps", g.snps, "output feature count");
      sub->add_option("--cases", g.cases, "case count");
      sub->add_option("--controls", g.controls, "control count");
      sub->add_option("--panel", g.panel, "raw simulated panel size (0 means 4x snps)");
      sub->add_option("--csv", g.csv, "also export genotypes as CSV");
    }
    sub->add_option("--seed", g.seed, "generator seed");
    sub->add_option("--out", g.out, "output dataset file")->required();
  }

  // ---- train
  auto* tr = app.add_subcommand("train", "train a classifier on a dataset");
  struct {
    std::string input, test_input;
    double split = 0.3;
    std::uint64_t split_seed = 1000;
    std::string mode = "global";
    int batches = 1;
    std::string batching = "random";
    std::string out, history, batches_csv;
  } t;
  TrainCliOpts train_opts;
  tr->add_option("--input", t.input, "training dataset")->required();
  tr->add_option("--test-input", t.test_input, "separate test dataset");
  tr->add_option("--split", t.split, "test fraction when splitting");
  tr->add_option("--split-seed", t.split_seed, "split seed");
  tr->add_option("--mode", t.mode, "instance | global");
  tr->add_option("--batches", t.batches, "batches per class (global mode)");
  tr->add_option("--batching", t.batching, "random | smart");
  tr->add_option("--out", t.out, "metrics JSON output")->required();
  tr->add_option("--history", t.history, "per-epoch loss CSV");
  tr->add_option("--batches-csv", t.batches_csv, "batch assignment CSV");
  train_opts.attach(tr);

  // ---- audit
  auto* audit = app.add_subcommand("audit", "privacy auditors");
  audit->require_subcommand(1);
  struct {
    std::string input;
    int batch_size = 32;
    double delta = 0.05;
    std::string scheme = "random";
    std::uint64_t seed = 1;
    std::string out, samples_csv;
  } ae;
  auto* aeps = audit->add_subcommand("epsilon", "membership-inference epsilon");
  aeps->add_option("--input", ae.input, "dataset file")->required();
  aeps->add_option("--batch-size", ae.batch_size, "batch size N_i");
  aeps->add_option("--delta", ae.delta, "DP slack delta");
  aeps->add_option("--scheme", ae.scheme, "random | smart");
  aeps->add_option("--seed", ae.seed, "audit seed");
  aeps->add_option("--out", ae.out, "report JSON")->required();
  aeps->add_option("--samples-csv", ae.samples_csv, "projection samples CSV");

  struct {
    int n_snp = 2, alphabet = 3, batch = 2;
    bool oracle = false;
    std::uint64_t seed = 1;
    std::string out;
  } ac;
  auto* acomp = audit->add_subcommand("composition", "composition-recovery counting");
  acomp->add_option("--n-snp", ac.n_snp, "genotype length d");
  acomp->add_option("--alphabet", ac.alphabet, "genotype alphabet size");
  acomp->add_option("--batch", ac.batch, "batch size N_i");
  acomp->add_flag("--oracle", ac.oracle, "run the exhaustive oracle");
  acomp->add_option("--seed", ac.seed, "oracle instance seed");
  acomp->add_option("--out", ac.out, "report JSON")->required();

  struct {
    std::string loss = "l1-sigmoid";
    double k = 10.0;
    int trials = 1000, batch = 16, qubits = 2, depth = 6;
    std::uint64_t seed = 1;
    std::string out;
  } acr;
  auto* acorr = audit->add_subcommand("correlation", "loss-update correlation experiment");
  acorr->add_option("--loss", acr.loss, "l1-sigmoid | l2");
  acorr->add_option("--k", acr.k, "sigmoid temperature");
  acorr->add_option("--trials", acr.trials, "number of trials");
  acorr->add_option("--batch", acr.batch, "batch size");
  acorr->add_option("--qubits", acr.qubits, "qubit count");
  acorr->add_option("--depth", acr.depth, "random circuit depth");
  acorr->add_option("--seed", acr.seed, "seed");
  acorr->add_option("--out", acr.out, "report JSON")->required();

  // ---- protocol
  auto* proto = app.add_subcommand("protocol", "delegated/collaborative training roles");
  proto->require_subcommand(1);
  struct {
    int port = 0, clients = 1, timeout_ms = 30000, qubits = 2;
    bool offline = false;
    std::string in_dir, out;
  } ps;
  TrainCliOpts server_opts;
  auto* psrv = proto->add_subcommand("server", "aggregate and train");
  psrv->add_option("--port", ps.port, "listen port (0 picks an ephemeral port)");
  psrv->add_option("--clients", ps.clients, "expected client count");
  psrv->add_option("--timeout-ms", ps.timeout_ms, "client wait timeout");
  psrv->add_flag("--offline", ps.offline, "read .qgs files instead of listening");
  psrv->add_option("--in", ps.in_dir, "offline input directory");
  psrv->add_option("--qubits", ps.qubits, "qubit count (offline mode)");
  psrv->add_option("--out", ps.out, "result JSON")->required();
  server_opts.attach(psrv);

  struct {
    std::string server = "127.0.0.1:7878", input;
    int batches = 5;
    std::string batching = "random";
    std::uint32_t client_id = 1;
    bool offline = false;
    std::string out_dir, out;
  } pc;
  TrainCliOpts client_opts;
  auto* pcli = proto->add_subcommand("client", "encode, batch and ship global states");
  pcli->add_option("--server", pc.server, "server host:port");
  pcli->add_option("--input", pc.input, "local dataset")->required();
  pcli->add_option("--batches", pc.batches, "batches per class");
  pcli->add_option("--batching", pc.batching, "random | smart");
  pcli->add_option("--client-id", pc.client_id, "client identifier");
  pcli->add_flag("--offline", pc.offline, "write .qgs files instead of connecting");
  pcli->add_option("--out-dir", pc.out_dir, "offline output directory");
  pcli->add_option("--out", pc.out, "transcript JSON")->required();
  client_opts.attach(pcli);

  // ---- repro
  auto* repro = app.add_subcommand("repro", "desk-scale experiment reproductions");
  repro->require_subcommand(1);
  struct {
    std::string seeds = "1,2,3,4,5";
    int snps = 128;
    std::uint64_t seed = 1;
    std::string out;
  } rp;
  for (const char* which : {"table1", "table2", "fig3-toy", "eps-curve"}) {
    auto* sub = repro->add_subcommand(which);
    if (std::string(which) == "table1" || std::string(which) == "table2")
      sub->add_option("--seeds", rp.seeds, "comma-separated seed list");
    if (std::string(which) == "eps-curve") sub->add_option("--snps", rp.snps, "SNP feature count");
    sub->add_option("--seed", rp.seed, "base seed");
    sub->add_option("--out", rp.out, "output CSV")->required();
  }

  try {
    app.parse(argc, argv);

    if (gen->parsed()) {
      const std::string kind = gen->get_subcommands().front()->get_name();
      return cmd_gen(kind, g.e_s, g.e_shift, g.n, g.snps, g.cases, g.controls, g.panel, g.seed,
                     g.out, g.csv);
    }
    if (tr->parsed()) {
      return cmd_train(t.input, t.test_input, t.split, t.split_seed, t.mode, t.batches,
                       t.batching, train_opts, t.out, t.history, t.batches_csv);
    }
    if (audit->parsed()) {
      if (aeps->parsed())
        return cmd_audit_epsilon(ae.input, ae.batch_size, ae.delta, ae.scheme, ae.seed, ae.out,
                                 ae.samples_csv);
      if (acomp->parsed())
        return cmd_audit_composition(ac.n_snp, ac.alphabet, ac.batch, ac.oracle, ac.seed, ac.out);
      if (acorr->parsed())
        return cmd_audit_correlation(acr.loss, acr.k, acr.trials, acr.batch, acr.qubits,
                                     acr.depth, acr.seed, acr.out);
    }
    if (proto->parsed()) {
      if (psrv->parsed())
        return cmd_protocol_server(ps.port, ps.clients, ps.timeout_ms, ps.offline, ps.in_dir,
                                   server_opts, ps.qubits, ps.out);
      if (pcli->parsed())
        return cmd_protocol_client(pc.server, pc.input, pc.batches, pc.batching, pc.client_id,
                                   pc.offline, pc.out_dir, client_opts, pc.out);
    }
    if (repro->parsed()) {
      const std::string which = repro->get_subcommands().front()->get_name();
      if (which == "table1" || which == "table2") {
        std::vector<std::uint64_t> seeds;
        std::stringstream ss(rp.seeds);
        std::string tok;
        while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
        return cmd_repro_table(which, seeds, rp.out);
      }
      if (which == "fig3-toy") return cmd_repro_fig3_toy(rp.seed, rp.out);
      if (which == "eps-curve") return cmd_repro_eps_curve(rp.snps, rp.seed, rp.out);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
