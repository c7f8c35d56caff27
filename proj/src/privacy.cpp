#include "qmix/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace qmix {

RMat pairwise_trace_overlaps(const std::vector<DensityMatrix>& states) {
  const Index n = static_cast<Index>(states.size());
  RMat g(n, n);
  for (Index i = 0; i < n; ++i) {
    g(i, i) = purity(states[i]);
    for (Index j = i + 1; j < n; ++j) {
      const double t = projection_overlap(states[i], states[j]);
      g(i, j) = t;
      g(j, i) = t;
    }
  }
  return g;
}

RMat pairwise_state_overlaps(const std::vector<PureState>& states) {
  const Index n = static_cast<Index>(states.size());
  if (n == 0) return RMat(0, 0);
  const Index dim = states.front().dim();
  CMat psi(dim, n);
  for (Index i = 0; i < n; ++i) psi.col(i) = states[i].amplitudes();
  return (psi.adjoint() * psi).cwiseAbs2();
}

ProjectionSamples membership_projections_random(const RMat& overlaps, int batch_size, Rng& rng) {
  const int pop = static_cast<int>(overlaps.rows());
  if (batch_size < 2) throw AuditError("random audit needs batch size >= 2");
  if (pop < batch_size) throw AuditError("population smaller than the batch size");
  const int n_batches = pop / batch_size;

  ProjectionSamples out;
  out.adjacent.reserve(static_cast<std::size_t>(pop) * n_batches);
  out.including.reserve(static_cast<std::size_t>(pop) * n_batches);

  std::vector<int> others(pop - 1);
  for (int star = 0; star < pop; ++star) {
    int at = 0;
    for (int i = 0; i < pop; ++i)
      if (i != star) others[at++] = i;
    rng.shuffle(others);
    for (int b = 0; b < n_batches; ++b) {
      double sum = 0.0;
      for (int k = 0; k < batch_size - 1; ++k)
        sum += overlaps(star, others[b * (batch_size - 1) + k]);
      const double adjacent = sum / (batch_size - 1);
      const double including = ((batch_size - 1) * adjacent + overlaps(star, star)) / batch_size;
      out.adjacent.push_back(adjacent);
      out.including.push_back(including);
    }
  }
  return out;
}

ProjectionSamples membership_projections_random(const std::vector<DensityMatrix>& class_states,
                                                int batch_size, Rng& rng) {
  return membership_projections_random(pairwise_trace_overlaps(class_states), batch_size, rng);
}

ProjectionSamples membership_projections_smart(const RMat& overlaps,
                                               const std::vector<Batch>& batches) {
  ProjectionSamples out;
  for (const auto& batch : batches) {
    const int n = batch.size();
    if (n < 2) {
      out.n_excluded += n;  // singleton: infinite privacy loss, excluded
      continue;
    }
    for (int star : batch.member_indices) {
      double sum = 0.0;
      for (int u : batch.member_indices)
        if (u != star) sum += overlaps(star, u);
      const double adjacent = sum / (n - 1);
      const double including = ((n - 1) * adjacent + overlaps(star, star)) / n;
      out.adjacent.push_back(adjacent);
      out.including.push_back(including);
    }
  }
  if (out.adjacent.empty()) throw AuditError("no usable batches in the smart audit");
  return out;
}

ProjectionSamples membership_projections_smart(const std::vector<DensityMatrix>& class_states,
                                               const std::vector<Batch>& batches) {
  return membership_projections_smart(pairwise_trace_overlaps(class_states), batches);
}

namespace {

struct MomentFit {
  double mu = 0.0;
  double std = 0.0;
};

MomentFit fit_moments(const std::vector<double>& xs) {
  MomentFit f;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) f.mu += x;
  f.mu /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - f.mu) * (x - f.mu);
  f.std = std::sqrt(ss / n);
  return f;
}

double normal_pdf(double x, double mu, double std) {
  const double z = (x - mu) / std;
  return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

PrivacyReport epsilon_from_samples(const ProjectionSamples& samples, double delta, int n_eval,
                                   Rng& rng) {
  if (delta <= 0.0 || delta >= 1.0) throw DomainError("delta must lie in (0, 1)");
  if (samples.adjacent.size() < 10 || samples.including.size() < 10)
    throw AuditError("need at least 10 projection samples on each side");

  PrivacyReport rep;
  rep.delta = delta;
  rep.n_excluded = samples.n_excluded;
  rep.n_adjacent = static_cast<int>(samples.adjacent.size());
  rep.n_including = static_cast<int>(samples.including.size());

  const MomentFit g1 = fit_moments(samples.adjacent);
  const MomentFit g2 = fit_moments(samples.including);
  rep.mu1 = g1.mu;
  rep.std1 = g1.std;
  rep.mu2 = g2.mu;
  rep.std2 = g2.std;

  if (g1.std == 0.0 || g2.std == 0.0) {
    rep.epsilon = std::numeric_limits<double>::infinity();
    rep.diagnostic = "degenerate Gaussian fit (zero standard deviation)";
    return rep;
  }

  double best = -std::numeric_limits<double>::infinity();
  int excluded = 0;
  for (int i = 0; i < n_eval; ++i) {
    const double p = rng.normal(g2.mu, g2.std);
    const double num = normal_pdf(p, g2.mu, g2.std) - delta;
    const double den = normal_pdf(p, g1.mu, g1.std);
    if (num <= 0.0 || den <= 0.0) {
      ++excluded;
      continue;
    }
    best = std::max(best, std::log(num / den));
  }
  rep.n_eval_excluded = excluded;
  if (excluded == n_eval) {
    rep.epsilon = -std::numeric_limits<double>::infinity();
    rep.diagnostic = "every sampled point was excluded";
  } else {
    rep.epsilon = best;
  }
  return rep;
}

CompositionEstimate composition_count_estimate(int batch_size, long long n_state, int d) {
  // d == n_state is the fully-constrained boundary (exponent 0, count 1)
  if (n_state < d || d < 1 || batch_size < 1)
    throw DomainError("composition estimate needs N_state >= d >= 1 and N_i >= 1");
  CompositionEstimate est;
  est.n_state = n_state;
  est.d = d;
  est.batch_size = batch_size;

  const double ni = batch_size;
  const double ns = static_cast<double>(n_state);
  est.ln_b_all = std::lgamma(ni + ns) - std::lgamma(ns) - std::lgamma(ni + 1.0);
  const double exponent = (ns - d) / ns;
  est.ln_b = est.ln_b_all * exponent;
  est.entropy_proxy = est.ln_b;

  // asymptotic ratio-of-powers form; (ns-1)ln(ns-1) -> 0 at ns = 1
  const double tail = ns > 1.0 ? (ns - 1.0) * std::log(ns - 1.0) : 0.0;
  est.ln_b_all_stirling =
      (ni + ns - 1.0) * std::log(ni + ns - 1.0) - tail - ni * std::log(ni);
  est.ln_b_stirling = est.ln_b_all_stirling * exponent;
  return est;
}

long long composition_count_exact(const std::vector<DensityMatrix>& basis, int batch_size,
                                  const DensityMatrix& rho_glob, double tol) {
  const int n_state = static_cast<int>(basis.size());
  if (n_state == 0) throw DomainError("empty basis");
  for (const auto& b : basis)
    if (b.dim() != rho_glob.dim()) throw DimensionError("basis/global dimension mismatch");

  // search space size = C(N_i + N_state - 1, N_state - 1)
  const double ln_candidates = std::lgamma(batch_size + static_cast<double>(n_state)) -
                               std::lgamma(static_cast<double>(n_state)) -
                               std::lgamma(batch_size + 1.0);
  if (ln_candidates > std::log(1e7))
    throw OracleTooLargeError("composition oracle search space exceeds 10^7 candidates");

  long long count = 0;
  std::vector<int> b(n_state, 0);
  const Index dim = rho_glob.dim();

  // depth-first enumeration of compositions, mixture accumulated on the way down
  std::vector<CMat> partial(n_state + 1, CMat::Zero(dim, dim));
  std::function<void(int, int)> walk = [&](int slot, int remaining) {
    if (slot == n_state - 1) {
      const CMat mixerr = partial[slot] +
                          (static_cast<double>(remaining) / batch_size) * basis[slot].entries() -
                          rho_glob.entries();
      if (mixerr.cwiseAbs().maxCoeff() <= tol) ++count;
      return;
    }
    for (int take = 0; take <= remaining; ++take) {
      partial[slot + 1] =
          partial[slot] + (static_cast<double>(take) / batch_size) * basis[slot].entries();
      walk(slot + 1, remaining - take);
    }
  };
  walk(0, batch_size);
  return count;
}

namespace detail {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw CorrelationError("zero-variance sample in correlation");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

CorrelationResult correlation_with_activation(int batch_size, int n_trials, int n_qubits,
                                              int depth, Rng& rng,
                                              const std::function<double(double)>& term) {
  if (batch_size < 1) throw DomainError("batch size must be >= 1");
  if (n_trials < 2) throw DomainError("need at least 2 trials");
  const Index dim = Index{1} << n_qubits;
  const Observable obs = Observable::last_qubit(n_qubits);
  const RVec zd = obs.diagonal();

  std::vector<double> d_inst, d_glob;
  d_inst.reserve(n_trials);
  d_glob.reserve(n_trials);

  for (int t = 0; t < n_trials; ++t) {
    std::vector<DensityMatrix> batch;
    batch.reserve(batch_size);
    for (int i = 0; i < batch_size; ++i) batch.push_back(random_density_hs(dim, rng));
    const DensityMatrix glob = mix_uniform(batch);

    const UnitaryMatrix u1 = random_circuit_unitary(n_qubits, depth, rng);
    const UnitaryMatrix u2 = random_circuit_unitary(n_qubits, depth, rng);
    const CMat m1 = u1.entries().adjoint() * (zd.asDiagonal() * u1.entries());
    const CMat m2 = u2.entries().adjoint() * (zd.asDiagonal() * u2.entries());

    auto expect = [](const CMat& m, const DensityMatrix& rho) {
      return (m.array() * rho.entries().transpose().array()).sum().real();
    };

    double inst = 0.0;
    for (const auto& rho : batch)
      inst += term(expect(m2, rho)) - term(expect(m1, rho));
    inst /= batch_size;
    d_inst.push_back(inst);
    d_glob.push_back(term(expect(m2, glob)) - term(expect(m1, glob)));
  }

  CorrelationResult res;
  res.trials = n_trials;
  if (d_inst == d_glob) {
    // identical series (singleton batches): correlation is 1 by identity
    res.pcc = 1.0;
    res.sign_pcc = 1.0;
    res.sign_agreement = 1.0;
    return res;
  }
  res.pcc = pearson(d_inst, d_glob);
  std::vector<double> s_inst(d_inst.size()), s_glob(d_glob.size());
  int agree = 0;
  for (std::size_t i = 0; i < d_inst.size(); ++i) {
    s_inst[i] = d_inst[i] > 0 ? 1.0 : (d_inst[i] < 0 ? -1.0 : 0.0);
    s_glob[i] = d_glob[i] > 0 ? 1.0 : (d_glob[i] < 0 ? -1.0 : 0.0);
    agree += s_inst[i] == s_glob[i] ? 1 : 0;
  }
  res.sign_pcc = pearson(s_inst, s_glob);
  res.sign_agreement = static_cast<double>(agree) / static_cast<double>(n_trials);
  return res;
}

}  // namespace detail

CorrelationResult loss_update_correlation(int batch_size, int n_trials, const LossSpec& spec,
                                          int n_qubits, int depth, Rng& rng) {
  spec.validate();
  std::function<double(double)> term;
  switch (spec.kind) {
    case LossKind::L1Sigmoid:
      term = [k = spec.sigmoid_k](double p) { return sigmoid(p, k); };
      break;
    case LossKind::L2:
      // y_u = -1 convention: (p - y)^2 = (p + 1)^2
      term = [](double p) { return (p + 1.0) * (p + 1.0); };
      break;
    default:
      throw ParamError("correlation experiment expects L1Sigmoid or L2");
  }
  return detail::correlation_with_activation(batch_size, n_trials, n_qubits, depth, rng, term);
}

}  // namespace qmix
