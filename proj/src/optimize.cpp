#include "qmix/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace qmix {

namespace {

class BudgetedObjective {
 public:
  BudgetedObjective(const Objective& f, int max_evals) : f_(f), max_evals_(max_evals) {}

  bool exhausted() const { return evals_ >= max_evals_; }
  int evals() const { return evals_; }
  const RVec& best_x() const { return best_x_; }
  double best_f() const { return best_f_; }

  double operator()(const RVec& x) {
    const double v = f_(x);
    ++evals_;
    if (!std::isfinite(v))
      throw OptimizationError("objective returned a non-finite value",
                              std::vector<double>(x.data(), x.data() + x.size()));
    if (v < best_f_) {
      best_f_ = v;
      best_x_ = x;
    }
    return v;
  }

 private:
  const Objective& f_;
  int max_evals_;
  int evals_ = 0;
  RVec best_x_;
  double best_f_ = std::numeric_limits<double>::infinity();
};

}  // namespace

OptimResult CobylaOptimizer::minimize(const Objective& f, const RVec& x0, int max_evals) const {
  const int n = static_cast<int>(x0.size());
  BudgetedObjective eval(f, max_evals);
  const double f0 = eval(x0);
  if (n == 0 || eval.exhausted())
    return {eval.best_x(), eval.best_f(), eval.evals()};

  std::vector<RVec> xs;
  std::vector<double> fs;
  double rho = rho_begin_;

  auto rebuild = [&](RVec center, double fc) {  // by value: center may alias xs
    xs.assign(1, center);
    fs.assign(1, fc);
    for (int i = 0; i < n && !eval.exhausted(); ++i) {
      RVec p = center;
      p(i) += rho;
      xs.push_back(p);
      fs.push_back(eval(p));
    }
    return xs.size() == static_cast<std::size_t>(n + 1);
  };

  if (!rebuild(x0, f0)) return {eval.best_x(), eval.best_f(), eval.evals()};

  while (!eval.exhausted() && rho > rho_end_) {
    const auto b = static_cast<int>(
        std::min_element(fs.begin(), fs.end()) - fs.begin());
    const auto w = static_cast<int>(
        std::max_element(fs.begin(), fs.end()) - fs.begin());

    // gradient of the interpolating linear model
    RMat a(n, n);
    RVec d(n);
    int r = 0;
    for (int i = 0; i <= n; ++i) {
      if (i == b) continue;
      a.row(r) = (xs[i] - xs[b]).transpose();
      d(r) = fs[i] - fs[b];
      ++r;
    }
    Eigen::FullPivLU<RMat> lu(a);
    RVec g;
    bool usable = lu.isInvertible();
    if (usable) {
      g = lu.solve(d);
      usable = g.allFinite();
    }
    if (!usable) {
      if (!rebuild(xs[b], fs[b])) break;  // degenerate geometry
      continue;
    }
    const double gnorm = g.norm();
    if (gnorm < 1e-14) {  // locally flat at this resolution
      rho *= 0.5;
      if (!rebuild(xs[b], fs[b])) break;
      continue;
    }

    const RVec cand = xs[b] - (rho / gnorm) * g;
    if (eval.exhausted()) break;
    const double fc = eval(cand);
    const bool success = fc < fs[b] - 1e-4 * rho * gnorm;
    if (fc < fs[w]) {
      xs[w] = cand;
      fs[w] = fc;
    }
    if (!success) {
      rho *= 0.5;
      const auto nb = static_cast<int>(
          std::min_element(fs.begin(), fs.end()) - fs.begin());
      if (!rebuild(xs[nb], fs[nb])) break;
    }
  }
  return {eval.best_x(), eval.best_f(), eval.evals()};
}

OptimResult NelderMeadOptimizer::minimize(const Objective& f, const RVec& x0, int max_evals) const {
  const int n = static_cast<int>(x0.size());
  BudgetedObjective eval(f, max_evals);
  const double f0 = eval(x0);
  if (n == 0 || eval.exhausted())
    return {eval.best_x(), eval.best_f(), eval.evals()};

  std::vector<RVec> xs{x0};
  std::vector<double> fs{f0};
  for (int i = 0; i < n && !eval.exhausted(); ++i) {
    RVec p = x0;
    p(i) += step_;
    xs.push_back(p);
    fs.push_back(eval(p));
  }
  if (xs.size() != static_cast<std::size_t>(n + 1))
    return {eval.best_x(), eval.best_f(), eval.evals()};

  std::vector<int> order(n + 1);
  auto sort_order = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return fs[i] < fs[j]; });
  };

  while (!eval.exhausted()) {
    sort_order();
    const int best = order[0], worst = order[n], second_worst = order[n - 1];

    double diameter = 0.0;
    for (int i = 1; i <= n; ++i)
      diameter = std::max(diameter, (xs[order[i]] - xs[best]).norm());
    if (diameter < diameter_tol_) break;

    RVec centroid = RVec::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[order[i]];
    centroid /= n;

    const RVec refl = centroid + (centroid - xs[worst]);
    const double f_refl = eval(refl);
    if (eval.exhausted()) break;

    if (f_refl < fs[best]) {
      const RVec expa = centroid + 2.0 * (centroid - xs[worst]);
      const double f_expa = eval(expa);
      if (f_expa < f_refl) {
        xs[worst] = expa;
        fs[worst] = f_expa;
      } else {
        xs[worst] = refl;
        fs[worst] = f_refl;
      }
      continue;
    }
    if (f_refl < fs[second_worst]) {
      xs[worst] = refl;
      fs[worst] = f_refl;
      continue;
    }
    // contraction
    if (f_refl < fs[worst]) {
      const RVec outside = centroid + 0.5 * (refl - centroid);
      const double f_out = eval(outside);
      if (f_out <= f_refl) {
        xs[worst] = outside;
        fs[worst] = f_out;
        continue;
      }
    } else {
      const RVec inside = centroid - 0.5 * (centroid - xs[worst]);
      const double f_in = eval(inside);
      if (f_in < fs[worst]) {
        xs[worst] = inside;
        fs[worst] = f_in;
        continue;
      }
    }
    // shrink toward the best vertex
    for (int i = 1; i <= n && !eval.exhausted(); ++i) {
      const int v = order[i];
      xs[v] = xs[best] + 0.5 * (xs[v] - xs[best]);
      fs[v] = eval(xs[v]);
    }
  }
  return {eval.best_x(), eval.best_f(), eval.evals()};
}

}  // namespace qmix
