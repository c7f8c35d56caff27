#pragma once

#include <functional>

#include "qmix/errors.hpp"
#include "qmix/types.hpp"

namespace qmix {

using Objective = std::function<double(const RVec&)>;

struct OptimResult {
  RVec x;
  double fx = 0.0;
  int evals = 0;
};

// Deterministic derivative-free minimizers sharing one interface.
// `max_evals` bounds the number of objective evaluations per call; a
// non-finite objective value raises OptimizationError.
class DerivativeFreeOptimizer {
 public:
  virtual ~DerivativeFreeOptimizer() = default;
  virtual OptimResult minimize(const Objective& f, const RVec& x0, int max_evals) const = 0;
};

// Linear-approximation trust-region search: interpolates a linear model
// through a simplex of n+1 points, steps along the model's descent
// direction with step length rho, and halves rho when sufficient
// decrease fails.
class CobylaOptimizer final : public DerivativeFreeOptimizer {
 public:
  explicit CobylaOptimizer(double rho_begin = 0.5, double rho_end = 1e-8)
      : rho_begin_(rho_begin), rho_end_(rho_end) {}
  OptimResult minimize(const Objective& f, const RVec& x0, int max_evals) const override;

 private:
  double rho_begin_;
  double rho_end_;
};

// Standard simplex method (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5) with deterministic ordering.
class NelderMeadOptimizer final : public DerivativeFreeOptimizer {
 public:
  explicit NelderMeadOptimizer(double initial_step = 0.5, double diameter_tol = 1e-12)
      : step_(initial_step), diameter_tol_(diameter_tol) {}
  OptimResult minimize(const Objective& f, const RVec& x0, int max_evals) const override;

 private:
  double step_;
  double diameter_tol_;
};

}  // namespace qmix
