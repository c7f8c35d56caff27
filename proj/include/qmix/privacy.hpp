#pragma once

#include <string>
#include <vector>

#include "qmix/batching.hpp"
#include "qmix/classifier.hpp"

namespace qmix {

// Projection samples for the membership audit: Tr(rho* rho_glob-1)
// ("adjacent") and Tr(rho* rho_glob) ("including").
struct ProjectionSamples {
  std::vector<double> adjacent;
  std::vector<double> including;
  int n_excluded = 0;  // singleton batches skipped in the smart scheme
};

struct PrivacyReport {
  double mu1 = 0.0, std1 = 0.0;  // adjacent fit
  double mu2 = 0.0, std2 = 0.0;  // including fit
  double delta = 0.05;
  double epsilon = 0.0;  // may be +-infinity
  int n_excluded = 0;    // singleton-batch exclusions
  int n_eval_excluded = 0;  // sampled points dropped from the max
  int n_adjacent = 0;
  int n_including = 0;
  std::string scheme;
  std::string diagnostic;
};

struct CompositionEstimate {
  long long n_state = 0;
  int d = 0;
  int batch_size = 0;
  double ln_b_all = 0.0;          // exact log-gamma binomial
  double ln_b = 0.0;              // ln_b_all * (n_state - d) / n_state
  double entropy_proxy = 0.0;     // = ln_b
  double ln_b_all_stirling = 0.0; // ratio-of-powers asymptotic form
  double ln_b_stirling = 0.0;
};

struct CorrelationResult {
  double pcc = 0.0;
  double sign_pcc = 0.0;
  double sign_agreement = 0.0;
  int trials = 0;
};

// Pairwise Tr(rho_i rho_j) matrix (diagonal = purities).
RMat pairwise_trace_overlaps(const std::vector<DensityMatrix>& states);
// |<psi_i|psi_j>|^2 for pure ensembles; equal to the trace overlaps.
RMat pairwise_state_overlaps(const std::vector<PureState>& states);

// Random scheme: for each rho*, floor(pop / N_i) non-overlapping batches
// of size N_i - 1 are drawn from the remaining same-class states; each
// yields one (adjacent, including) pair with
// including = ((N_i-1) * adjacent + Tr(rho* rho*)) / N_i.
ProjectionSamples membership_projections_random(const RMat& overlaps, int batch_size, Rng& rng);
ProjectionSamples membership_projections_random(const std::vector<DensityMatrix>& class_states,
                                                int batch_size, Rng& rng);

// Smart scheme: rho_glob is the global state of rho*'s own batch,
// rho_glob-1 that batch with rho* removed. Singletons are skipped and
// counted in n_excluded.
ProjectionSamples membership_projections_smart(const RMat& overlaps,
                                               const std::vector<Batch>& batches);
ProjectionSamples membership_projections_smart(const std::vector<DensityMatrix>& class_states,
                                               const std::vector<Batch>& batches);

// Gaussian moment fits to both sample sets, then
// epsilon = max over n_eval draws p ~ N(mu2, std2) of
// ln((g2(p) - delta) / g1(p)), excluding invalid points.
PrivacyReport epsilon_from_samples(const ProjectionSamples& samples, double delta, int n_eval,
                                   Rng& rng);

// Balls-into-bins count of compositions b with sum b = N_i over N_state
// bins, in log space, and the hyperplane-reduced estimate with exponent
// (N_state - d) / N_state.
CompositionEstimate composition_count_estimate(int batch_size, long long n_state, int d);

// Exhaustive count of compositions b (sum = N_i) whose mixture
// sum_j (b_j / N_i) rho_j matches rho_glob within max-entry tolerance.
// Guarded to at most 10^7 candidate vectors.
long long composition_count_exact(const std::vector<DensityMatrix>& basis, int batch_size,
                                  const DensityMatrix& rho_glob, double tol = 1e-9);

// Single-optimizer-step experiment: per trial draw a batch of
// Hilbert-Schmidt random states and two random circuits, compare the
// instance-level loss delta with the global-state loss delta.
// spec must be L1Sigmoid or L2.
CorrelationResult loss_update_correlation(int batch_size, int n_trials, const LossSpec& spec,
                                          int n_qubits, int depth, Rng& rng);

namespace detail {
// Correlation core over an arbitrary activation applied to raw
// expectations; used by loss_update_correlation and by tests that need
// the identity activation.
CorrelationResult correlation_with_activation(int batch_size, int n_trials, int n_qubits,
                                              int depth, Rng& rng,
                                              const std::function<double(double)>& term);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
}  // namespace detail

}  // namespace qmix
