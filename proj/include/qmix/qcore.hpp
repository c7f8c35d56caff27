#pragma once

#include <vector>

#include "qmix/errors.hpp"
#include "qmix/rng.hpp"
#include "qmix/types.hpp"

namespace qmix {

// Normalized amplitude vector of length 2^n.
class PureState {
 public:
  explicit PureState(CVec amplitudes);

  const CVec& amplitudes() const { return amp_; }
  Index dim() const { return amp_.size(); }
  int n_qubits() const { return qubit_count_for_dim(amp_.size()); }

  static PureState basis(int n_qubits, Index index);

 private:
  CVec amp_;
};

// Hermitian, unit-trace, PSD matrix of dimension 2^n.
class DensityMatrix {
 public:
  // Validating constructor: Hermiticity, trace, dimension and PSD
  // (eigenvalues >= -1e-9) are all checked.
  explicit DensityMatrix(CMat entries);

  // For matrices produced by operations that preserve the invariants
  // algebraically (mixing, conjugation, outer products). Checks only
  // shape and trace.
  static DensityMatrix unchecked(CMat entries);

  const CMat& entries() const { return m_; }
  Index dim() const { return m_.rows(); }
  int n_qubits() const { return qubit_count_for_dim(m_.rows()); }

 private:
  struct unchecked_t {};
  DensityMatrix(CMat entries, unchecked_t);
  CMat m_;
};

// Single-qubit Pauli-Z (identity elsewhere), or full Z parity.
// The induced matrix is diagonal with entries +-1.
struct Observable {
  enum class Mode { SingleQubit, Parity };

  int qubit_index = 0;  // ignored for Parity
  int n_qubits = 1;
  Mode mode = Mode::SingleQubit;

  Index dim() const { return Index{1} << n_qubits; }
  double sign(Index basis) const;
  RVec diagonal() const;

  // Default choice: Z on the last qubit (index n-1).
  static Observable last_qubit(int n_qubits) {
    return Observable{n_qubits - 1, n_qubits, Mode::SingleQubit};
  }
  static Observable parity(int n_qubits) {
    return Observable{0, n_qubits, Mode::Parity};
  }
};

// x padded with zeros to 2^n_qubits and normalized. All-real output.
PureState amplitude_encode(const RVec& x, int n_qubits);

// rho = psi psi^dag
DensityMatrix pure_to_density(const PureState& psi);

// sum_u w_u rho_u; weights nonnegative, summing to 1 within 1e-12.
DensityMatrix mix(const std::vector<DensityMatrix>& states, const RVec& weights);
DensityMatrix mix_uniform(const std::vector<DensityMatrix>& states);

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 via Hermitian
// eigendecomposition, negative eigenvalues above -1e-6 clamped to zero.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

// rho = G G^dag / Tr(G G^dag), G a dim x dim matrix of iid standard
// complex Gaussians (Hilbert-Schmidt ensemble).
DensityMatrix random_density_hs(Index dim, Rng& rng);

// Tr(P_z rho); imaginary residue above 1e-10 rejected.
double pauli_z_expectation(const DensityMatrix& rho, const Observable& obs);

// Tr(rho_star rho), real for Hermitian arguments.
double projection_overlap(const DensityMatrix& rho_star, const DensityMatrix& rho);

// Tr(rho^2)
double purity(const DensityMatrix& rho);

// |<psi|phi>|^2
double state_overlap(const PureState& psi, const PureState& phi);

}  // namespace qmix
