#include "qmix/classifier.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace qmix {

double loss_term(double p, int label, const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::L1Rescaled:
      return std::abs((p + 1.0) / 2.0 - label);
    case LossKind::L1Sigmoid:
      return std::abs(sigmoid(p, spec.sigmoid_k) - label);
    case LossKind::L2: {
      const double y = 2.0 * label - 1.0;
      return (p - y) * (p - y);
    }
  }
  throw ParamError("unknown loss kind");
}

Predictor::Predictor(const AnsatzParams& params, const Observable& obs) {
  const UnitaryMatrix u = build_real_amplitudes(params.n_qubits, params.reps, params);
  if (u.dim() != obs.dim()) throw DimensionError("observable/ansatz dimension mismatch");
  const RVec d = obs.diagonal();
  m_ = u.entries().adjoint() * (d.asDiagonal() * u.entries());
}

double Predictor::predict(const DensityMatrix& rho) const {
  if (rho.dim() != m_.rows()) throw DimensionError("state/measurement dimension mismatch");
  const Complex t = (m_.array() * rho.entries().transpose().array()).sum();
  return t.real();
}

double Predictor::predict(const PureState& psi) const {
  if (psi.dim() != m_.rows()) throw DimensionError("state/measurement dimension mismatch");
  const Complex t = psi.amplitudes().dot(m_ * psi.amplitudes());
  return t.real();
}

double predict_raw(const AnsatzParams& params, const DensityMatrix& rho, const Observable& obs) {
  return Predictor(params, obs).predict(rho);
}

double loss_instance(const std::vector<DensityMatrix>& states, const std::vector<int>& labels,
                     const AnsatzParams& params, const Observable& obs, const LossSpec& spec) {
  if (states.empty()) throw EmptyDatasetError("loss over an empty dataset");
  if (states.size() != labels.size())
    throw DimensionError("state/label count mismatch");
  const Predictor pred(params, obs);
  double acc = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    acc += loss_term(pred.predict(states[i]), labels[i], spec);
  return acc / static_cast<double>(states.size());
}

double loss_global(const std::vector<GlobalState>& globals, const AnsatzParams& params,
                   const Observable& obs, const LossSpec& spec, const RVec* weights_override) {
  if (globals.empty()) throw EmptyDatasetError("loss over an empty dataset");
  if (weights_override && weights_override->size() != static_cast<Index>(globals.size()))
    throw WeightError("weight override length mismatch");
  const Predictor pred(params, obs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < globals.size(); ++i) {
    const double w =
        weights_override ? (*weights_override)(static_cast<Index>(i)) : globals[i].weight;
    if (w <= 0.0) throw WeightError("non-positive batch weight");
    num += w * loss_term(pred.predict(globals[i].state), globals[i].label, spec);
    den += w;
  }
  return num / den;
}

TrainingObjective make_instance_objective(std::vector<DensityMatrix> states,
                                          std::vector<int> labels, int n_qubits, int reps,
                                          Observable obs, LossSpec spec) {
  spec.validate();
  auto counter = std::make_shared<ExecutionCounter>();
  const int per_eval = static_cast<int>(states.size());
  auto fn = [states = std::move(states), labels = std::move(labels), n_qubits, reps, obs, spec,
             counter](const RVec& theta) {
    counter->objective_evaluations += 1;
    counter->circuit_executions += static_cast<long long>(states.size());
    return loss_instance(states, labels, AnsatzParams{theta, n_qubits, reps}, obs, spec);
  };
  return {std::move(fn), counter, per_eval};
}

TrainingObjective make_global_objective(std::vector<GlobalState> globals, int n_qubits, int reps,
                                        Observable obs, LossSpec spec) {
  spec.validate();
  auto counter = std::make_shared<ExecutionCounter>();
  const int per_eval = static_cast<int>(globals.size());
  auto fn = [globals = std::move(globals), n_qubits, reps, obs, spec,
             counter](const RVec& theta) {
    counter->objective_evaluations += 1;
    counter->circuit_executions += static_cast<long long>(globals.size());
    return loss_global(globals, AnsatzParams{theta, n_qubits, reps}, obs, spec);
  };
  return {std::move(fn), counter, per_eval};
}

void TrainConfig::validate() const {
  if (n_qubits < 1 || reps < 1 || maxiter_per_epoch < 1 || max_epochs < 1 || patience < 1)
    throw ParamError("training configuration values must be positive");
  loss.validate();
}

TrainedModel train(const TrainingObjective& objective, const RVec& init, const TrainConfig& cfg) {
  cfg.validate();
  const Index n_params = Index(cfg.reps + 1) * cfg.n_qubits;
  if (init.size() != n_params) throw ParamError("initial parameter length mismatch");

  std::unique_ptr<DerivativeFreeOptimizer> opt;
  if (cfg.optimizer == OptimizerKind::Cobyla)
    opt = std::make_unique<CobylaOptimizer>(cfg.rho_begin);
  else
    opt = std::make_unique<NelderMeadOptimizer>(cfg.rho_begin);

  TrainedModel model;
  model.params = AnsatzParams{init, cfg.n_qubits, cfg.reps};

  RVec best_x = init;
  double best_f = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const OptimResult res = opt->minimize(objective.fn, best_x, cfg.maxiter_per_epoch);
    model.epochs_run = epoch + 1;
    if (epoch == 0) {
      best_f = res.fx;
      best_x = res.x;
    } else if (res.fx < best_f - 1e-9) {
      best_f = res.fx;
      best_x = res.x;
      stall = 0;
    } else {
      if (res.fx < best_f) {
        best_f = res.fx;
        best_x = res.x;
      }
      ++stall;
    }
    model.history.push_back(best_f);
    model.history_evals.push_back(objective.counter ? objective.counter->circuit_executions : 0);
    if (stall >= cfg.patience) break;
  }
  model.params.theta = best_x;
  model.final_loss = best_f;
  model.eval_count = objective.counter ? objective.counter->circuit_executions : 0;
  return model;
}

RVec random_initial_params(int n_params, Rng& rng) {
  RVec v(n_params);
  for (Index i = 0; i < v.size(); ++i) v(i) = rng.angle();
  return v;
}

double auc(const RVec& scores, const std::vector<int>& labels) {
  if (scores.size() != static_cast<Index>(labels.size()))
    throw DimensionError("score/label count mismatch");
  long long n_pos = 0, n_neg = 0;
  for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw EvalError("AUC needs both classes present");
  double credit = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (Index j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores(i) > scores(j))
        credit += 1.0;
      else if (scores(i) == scores(j))
        credit += 0.5;
    }
  }
  return credit / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double threshold_accuracy(const RVec& scores, const std::vector<int>& labels,
                          double raw_threshold) {
  if (scores.size() != static_cast<Index>(labels.size()))
    throw DimensionError("score/label count mismatch");
  if (scores.size() == 0) throw EvalError("empty score vector");
  long long hits = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    const int predicted = scores(i) > raw_threshold ? 1 : 0;
    hits += predicted == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

}  // namespace qmix
