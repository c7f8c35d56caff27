#include "qmix/qcore.hpp"

#include <algorithm>
#include <cmath>

namespace qmix {

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kHermTol = 1e-10;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = 1e-9;

void check_square_pow2(const CMat& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix is not square");
  if (!is_power_of_two(m.rows()))
    throw DimensionError("dimension is not a power of two");
}

}  // namespace

PureState::PureState(CVec amplitudes) : amp_(std::move(amplitudes)) {
  if (!is_power_of_two(amp_.size()))
    throw DimensionError("amplitude vector length is not a power of two");
  const double n = amp_.norm();
  if (std::abs(n - 1.0) > kNormTol)
    throw StateError("amplitude vector is not normalized");
}

PureState PureState::basis(int n_qubits, Index index) {
  CVec v = CVec::Zero(Index{1} << n_qubits);
  v(index) = Complex{1.0, 0.0};
  return PureState(std::move(v));
}

DensityMatrix::DensityMatrix(CMat entries, unchecked_t) : m_(std::move(entries)) {
  check_square_pow2(m_);
  if (std::abs(m_.trace().real() - 1.0) > 1e-8 || std::abs(m_.trace().imag()) > 1e-8)
    throw StateError("density matrix trace is not 1");
}

DensityMatrix::DensityMatrix(CMat entries) : DensityMatrix(std::move(entries), unchecked_t{}) {
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermTol) throw StateError("density matrix is not Hermitian");
  if (std::abs(m_.trace().real() - 1.0) > kTraceTol)
    throw StateError("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<CMat> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kPsdTol)
    throw StateError("density matrix has a negative eigenvalue");
}

DensityMatrix DensityMatrix::unchecked(CMat entries) {
  return DensityMatrix(std::move(entries), unchecked_t{});
}

double Observable::sign(Index basis) const {
  if (mode == Mode::Parity) {
    int bits = 0;
    for (Index b = basis; b != 0; b >>= 1) bits ^= static_cast<int>(b & 1);
    return bits ? -1.0 : 1.0;
  }
  const int shift = n_qubits - 1 - qubit_index;
  return ((basis >> shift) & 1) ? -1.0 : 1.0;
}

RVec Observable::diagonal() const {
  RVec d(dim());
  for (Index b = 0; b < d.size(); ++b) d(b) = sign(b);
  return d;
}

PureState amplitude_encode(const RVec& x, int n_qubits) {
  const Index dim = Index{1} << n_qubits;
  if (x.size() > dim)
    throw DimensionError("input vector longer than 2^n_qubits");
  const double n = x.norm();
  if (n == 0.0) throw EncodingError("cannot amplitude-encode the zero vector");
  CVec amp = CVec::Zero(dim);
  amp.head(x.size()) = (x / n).cast<Complex>();
  return PureState(std::move(amp));
}

DensityMatrix pure_to_density(const PureState& psi) {
  const CVec& a = psi.amplitudes();
  return DensityMatrix::unchecked(a * a.adjoint());
}

DensityMatrix mix(const std::vector<DensityMatrix>& states, const RVec& weights) {
  if (states.empty()) throw EmptyDatasetError("mix of zero states");
  if (weights.size() != static_cast<Index>(states.size()))
    throw WeightError("weight count does not match state count");
  if (weights.minCoeff() < 0.0) throw WeightError("negative mixing weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw WeightError("mixing weights do not sum to 1");
  const Index dim = states.front().dim();
  CMat acc = CMat::Zero(dim, dim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].dim() != dim) throw DimensionError("mixing states of unequal dimension");
    acc += weights(static_cast<Index>(i)) * states[i].entries();
  }
  return DensityMatrix::unchecked(std::move(acc));
}

DensityMatrix mix_uniform(const std::vector<DensityMatrix>& states) {
  return mix(states, RVec::Constant(static_cast<Index>(states.size()),
                                    1.0 / static_cast<double>(states.size())));
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim())
    throw DimensionError("fidelity of states with unequal dimension");

  Eigen::SelfAdjointEigenSolver<CMat> es_rho(rho.entries());
  if (es_rho.eigenvalues().minCoeff() < -1e-6)
    throw StateError("fidelity input is not PSD");
  Eigen::SelfAdjointEigenSolver<CMat> es_sig_check(sigma.entries(), Eigen::EigenvaluesOnly);
  if (es_sig_check.eigenvalues().minCoeff() < -1e-6)
    throw StateError("fidelity input is not PSD");

  RVec ev = es_rho.eigenvalues().cwiseMax(0.0);
  const CMat sqrt_rho =
      es_rho.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es_rho.eigenvectors().adjoint();
  const CMat inner = sqrt_rho * sigma.entries() * sqrt_rho;

  Eigen::SelfAdjointEigenSolver<CMat> es_inner(inner, Eigen::EigenvaluesOnly);
  const RVec mu = es_inner.eigenvalues().cwiseMax(0.0);
  const double root_sum = mu.cwiseSqrt().sum();
  return root_sum * root_sum;
}

DensityMatrix random_density_hs(Index dim, Rng& rng) {
  if (dim < 2) throw DimensionError("random density needs dim >= 2");
  CMat g(dim, dim);
  for (Index r = 0; r < dim; ++r)
    for (Index c = 0; c < dim; ++c) g(r, c) = rng.complex_normal();
  CMat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::unchecked(std::move(rho));
}

double pauli_z_expectation(const DensityMatrix& rho, const Observable& obs) {
  if (rho.dim() != obs.dim())
    throw DimensionError("observable dimension does not match state");
  Complex acc{0.0, 0.0};
  for (Index b = 0; b < rho.dim(); ++b) acc += obs.sign(b) * rho.entries()(b, b);
  if (std::abs(acc.imag()) > 1e-10)
    throw StateError("expectation value has a non-negligible imaginary part");
  return acc.real();
}

double projection_overlap(const DensityMatrix& rho_star, const DensityMatrix& rho) {
  if (rho_star.dim() != rho.dim())
    throw DimensionError("projection overlap of states with unequal dimension");
  // Tr(AB) = sum_ab A_ab B_ba
  const Complex t = (rho_star.entries().array() * rho.entries().transpose().array()).sum();
  return t.real();
}

double purity(const DensityMatrix& rho) { return projection_overlap(rho, rho); }

double state_overlap(const PureState& psi, const PureState& phi) {
  if (psi.dim() != phi.dim())
    throw DimensionError("overlap of states with unequal dimension");
  return std::norm(psi.amplitudes().dot(phi.amplitudes()));
}

}  // namespace qmix
