#pragma once

#include <vector>

#include "qmix/qcore.hpp"

namespace qmix {

// Indices of same-label samples forming one batch C_i.
struct Batch {
  std::vector<int> member_indices;
  int label = 0;
  int class_id = 0;

  int size() const { return static_cast<int>(member_indices.size()); }
};

// Uniform mixture of a batch plus its label, size N_i and loss weight.
struct GlobalState {
  DensityMatrix state;
  int label = 0;
  int size = 1;
  double weight = 1.0;
};

enum class WeightMode { Unit, BatchSize };

// Uniformly random partition into n_batches parts whose sizes differ by
// at most one; the first (population mod n_batches) batches carry the
// extra element.
std::vector<Batch> random_batches(const std::vector<int>& class_samples, int n_batches,
                                  Rng& rng, int label = 0, int class_id = 0);

// Spectral clustering on the pairwise-fidelity affinity matrix:
// symmetric normalized Laplacian, k smallest eigenvectors row-normalized,
// k-means with seeded k-means++ init and 50 restarts.
std::vector<Batch> smart_batches(const std::vector<DensityMatrix>& class_states, int n_batches,
                                 Rng& rng, int label = 0, int class_id = 0);

// Same pipeline with the affinity supplied directly (entries must be the
// pairwise fidelities; for pure states that is |<psi_i|psi_j>|^2).
std::vector<Batch> smart_batches_from_affinity(const RMat& affinity, int n_batches, Rng& rng,
                                               int label = 0, int class_id = 0);

GlobalState build_global_state(const Batch& batch, const std::vector<DensityMatrix>& states,
                               WeightMode weight_mode);

}  // namespace qmix
