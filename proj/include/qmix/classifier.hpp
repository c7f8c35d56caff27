#pragma once

#include <memory>
#include <vector>

#include "qmix/ansatz.hpp"
#include "qmix/batching.hpp"
#include "qmix/optimize.hpp"

namespace qmix {

enum class LossKind { L1Rescaled, L1Sigmoid, L2 };

struct LossSpec {
  LossKind kind = LossKind::L1Rescaled;
  double sigmoid_k = 10.0;  // temperature for L1Sigmoid

  void validate() const {
    if (sigmoid_k <= 0.0) throw ParamError("sigmoid temperature must be positive");
  }
};

inline double sigmoid(double x, double k) { return 1.0 / (1.0 + std::exp(-k * x)); }

// Per-point loss term. Labels are {0,1}; the L2 variant follows the
// y in {-1,+1} convention on raw outputs (label 0 -> -1).
double loss_term(double raw_prediction, int label, const LossSpec& spec);

// Holds M = U(theta)^dag P_z U(theta) so a parameter point is costed
// once and each state scored in O(dim^2).
class Predictor {
 public:
  Predictor(const AnsatzParams& params, const Observable& obs);
  double predict(const DensityMatrix& rho) const;
  double predict(const PureState& psi) const;  // <psi|M|psi>
  const CMat& measurement() const { return m_; }

 private:
  CMat m_;
};

// Tr(P_z U rho U^dag), one-off.
double predict_raw(const AnsatzParams& params, const DensityMatrix& rho, const Observable& obs);

double loss_instance(const std::vector<DensityMatrix>& states, const std::vector<int>& labels,
                     const AnsatzParams& params, const Observable& obs, const LossSpec& spec);

// Weighted mean of per-batch loss terms on the global predictions;
// weights default to those carried by the GlobalStates.
double loss_global(const std::vector<GlobalState>& globals, const AnsatzParams& params,
                   const Observable& obs, const LossSpec& spec,
                   const RVec* weights_override = nullptr);

struct ExecutionCounter {
  long long circuit_executions = 0;   // one per state scored
  long long objective_evaluations = 0;
};

struct TrainingObjective {
  Objective fn;
  std::shared_ptr<ExecutionCounter> counter;
  int states_per_evaluation = 0;
};

TrainingObjective make_instance_objective(std::vector<DensityMatrix> states,
                                          std::vector<int> labels, int n_qubits, int reps,
                                          Observable obs, LossSpec spec);
TrainingObjective make_global_objective(std::vector<GlobalState> globals, int n_qubits, int reps,
                                        Observable obs, LossSpec spec);

enum class OptimizerKind { Cobyla, NelderMead };

struct TrainConfig {
  int n_qubits = 2;
  int reps = 1;
  int maxiter_per_epoch = 200;
  int max_epochs = 50;
  int patience = 10;
  std::uint64_t seed = 1;
  LossSpec loss;
  Observable observable = Observable::last_qubit(2);
  OptimizerKind optimizer = OptimizerKind::Cobyla;
  double rho_begin = 0.5;

  void validate() const;
};

struct TrainedModel {
  AnsatzParams params;
  std::vector<double> history;            // best training loss after each epoch
  std::vector<long long> history_evals;   // cumulative circuit executions per epoch
  long long eval_count = 0;               // total circuit executions
  double final_loss = 0.0;
  int epochs_run = 0;
};

// Up to max_epochs optimizer rounds of at most maxiter_per_epoch
// objective evaluations, each warm-started from the best point so far.
// Stops once the best loss has failed to improve by >= 1e-9 for
// `patience` consecutive epochs after the first.
TrainedModel train(const TrainingObjective& objective, const RVec& init, const TrainConfig& cfg);

// theta ~ Uniform(-pi, pi]
RVec random_initial_params(int n_params, Rng& rng);

// Exact Mann-Whitney statistic over all (positive, negative) pairs,
// ties at half credit. Both classes must be present.
double auc(const RVec& scores, const std::vector<int>& labels);

// Fraction of correct sign classifications at a raw-score threshold
// (label 1 above, label 0 below). This is the accuracy-style score a
// scikit-style classifier reports.
double threshold_accuracy(const RVec& scores, const std::vector<int>& labels,
                          double raw_threshold = 0.0);

}  // namespace qmix
