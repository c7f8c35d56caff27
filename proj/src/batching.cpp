#include "qmix/batching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qmix {

std::vector<Batch> random_batches(const std::vector<int>& class_samples, int n_batches, Rng& rng,
                                  int label, int class_id) {
  const int pop = static_cast<int>(class_samples.size());
  if (n_batches < 1 || n_batches > pop)
    throw BatchingError("number of batches exceeds the class population");
  std::vector<int> order = class_samples;
  rng.shuffle(order);
  const int base = pop / n_batches;
  const int remainder = pop % n_batches;
  std::vector<Batch> out;
  out.reserve(n_batches);
  int at = 0;
  for (int b = 0; b < n_batches; ++b) {
    const int size = base + (b < remainder ? 1 : 0);
    Batch batch;
    batch.label = label;
    batch.class_id = class_id;
    batch.member_indices.assign(order.begin() + at, order.begin() + at + size);
    at += size;
    out.push_back(std::move(batch));
  }
  return out;
}

namespace {

struct KmeansRun {
  std::vector<int> assign;
  double inertia = std::numeric_limits<double>::infinity();
  bool ok = false;
};

KmeansRun kmeans_once(const RMat& points, int k, Rng& rng) {
  const Index n = points.rows();
  KmeansRun run;

  // k-means++ seeding
  std::vector<Index> centers;
  centers.push_back(static_cast<Index>(rng.integer(static_cast<std::uint64_t>(n))));
  RVec dist2 = (points.rowwise() - points.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = dist2.sum();
    Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Index>(rng.integer(static_cast<std::uint64_t>(n)));
    } else {
      double target = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        target -= dist2(i);
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(pick);
    dist2 = dist2.cwiseMin(
        (points.rowwise() - points.row(pick)).rowwise().squaredNorm());
  }

  RMat mu(k, points.cols());
  for (int c = 0; c < k; ++c) mu.row(c) = points.row(centers[c]);

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = (points.row(i) - mu.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - mu.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    RMat sums = RMat::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) return run;  // empty cluster: caller retries
      mu.row(c) = sums.row(c) / counts[c];
    }
    if (!changed) break;
  }
  double inertia = 0.0;
  for (Index i = 0; i < n; ++i)
    inertia += (points.row(i) - mu.row(assign[i])).squaredNorm();
  run.assign = std::move(assign);
  run.inertia = inertia;
  run.ok = true;
  return run;
}

std::vector<Batch> assignment_to_batches(const std::vector<int>& assign, int k, int label,
                                         int class_id) {
  std::vector<Batch> out(k);
  for (int c = 0; c < k; ++c) {
    out[c].label = label;
    out[c].class_id = class_id;
  }
  for (std::size_t i = 0; i < assign.size(); ++i)
    out[assign[i]].member_indices.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

std::vector<Batch> smart_batches_from_affinity(const RMat& affinity, int n_batches, Rng& rng,
                                               int label, int class_id) {
  const Index n = affinity.rows();
  if (n < 2) throw BatchingError("smart batching needs a population of at least 2");
  if (n_batches < 1 || n_batches > n)
    throw BatchingError("number of batches exceeds the class population");

  if (n_batches == 1) {
    Batch all;
    all.label = label;
    all.class_id = class_id;
    all.member_indices.resize(n);
    std::iota(all.member_indices.begin(), all.member_indices.end(), 0);
    return {all};
  }

  // symmetric normalized Laplacian
  const RVec deg = affinity.rowwise().sum();
  const RVec dinv = deg.cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  RMat lap = RMat::Identity(n, n) - dinv.asDiagonal() * affinity * dinv.asDiagonal();
  lap = 0.5 * (lap + lap.transpose());

  Eigen::SelfAdjointEigenSolver<RMat> es(lap);
  RMat embed = es.eigenvectors().leftCols(n_batches);
  for (Index i = 0; i < n; ++i) {
    const double rn = embed.row(i).norm();
    if (rn > 1e-300) embed.row(i) /= rn;
  }

  // degenerate affinity: all embeddings coincide, assign arbitrarily
  double spread = 0.0;
  for (Index i = 1; i < n; ++i)
    spread = std::max(spread, (embed.row(i) - embed.row(0)).norm());
  if (spread < 1e-9) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<int> assign(n);
    for (Index i = 0; i < n; ++i)
      assign[order[i]] = static_cast<int>(i) % n_batches;
    return assignment_to_batches(assign, n_batches, label, class_id);
  }

  for (int attempt = 0; attempt < 20; ++attempt) {
    Rng attempt_rng = rng.derive(static_cast<std::uint64_t>(attempt));
    KmeansRun best;
    for (int restart = 0; restart < 50; ++restart) {
      KmeansRun run = kmeans_once(embed, n_batches, attempt_rng);
      if (run.ok && run.inertia < best.inertia) best = run;
    }
    if (best.ok) return assignment_to_batches(best.assign, n_batches, label, class_id);
  }
  throw BatchingError("k-means produced an empty cluster in every attempt");
}

std::vector<Batch> smart_batches(const std::vector<DensityMatrix>& class_states, int n_batches,
                                 Rng& rng, int label, int class_id) {
  const Index n = static_cast<Index>(class_states.size());
  if (n < 2) throw BatchingError("smart batching needs a population of at least 2");

  // Pure ensembles admit fidelity = Tr(rho_i rho_j); fall back to the
  // Uhlmann computation when any state is genuinely mixed.
  bool all_pure = true;
  for (const auto& s : class_states) {
    if (std::abs(purity(s) - 1.0) > 1e-6) {
      all_pure = false;
      break;
    }
  }
  RMat affinity(n, n);
  for (Index i = 0; i < n; ++i) {
    affinity(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double f = all_pure ? projection_overlap(class_states[i], class_states[j])
                                : fidelity(class_states[i], class_states[j]);
      affinity(i, j) = f;
      affinity(j, i) = f;
    }
  }
  return smart_batches_from_affinity(affinity, n_batches, rng, label, class_id);
}

GlobalState build_global_state(const Batch& batch, const std::vector<DensityMatrix>& states,
                               WeightMode weight_mode) {
  if (batch.member_indices.empty()) throw BatchingError("empty batch");
  std::vector<DensityMatrix> members;
  members.reserve(batch.member_indices.size());
  for (int idx : batch.member_indices) members.push_back(states.at(idx));
  GlobalState g{mix_uniform(members), batch.label, batch.size(),
                weight_mode == WeightMode::BatchSize ? static_cast<double>(batch.size()) : 1.0};
  return g;
}

}  // namespace qmix
