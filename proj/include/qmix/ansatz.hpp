#pragma once

#include <utility>
#include <vector>

#include "qmix/qcore.hpp"

namespace qmix {

// Rotation angles for the Ry ansatz: (reps+1) rotation layers of
// n_qubits angles each, layer-major (layer k occupies
// theta[k*n .. k*n + n - 1]).
struct AnsatzParams {
  RVec theta;
  int n_qubits = 1;
  int reps = 1;

  Index expected_size() const { return Index(reps + 1) * n_qubits; }
  void validate() const;
};

class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(CMat entries);           // checks U U^dag = I
  static UnitaryMatrix unchecked(CMat entries);   // for gate products

  const CMat& entries() const { return m_; }
  Index dim() const { return m_.rows(); }
  int n_qubits() const { return qubit_count_for_dim(m_.rows()); }

 private:
  struct unchecked_t {};
  UnitaryMatrix(CMat entries, unchecked_t) : m_(std::move(entries)) {}
  CMat m_;
};

namespace gates {
CMat h();
CMat x();
CMat y();
CMat z();
CMat s();
CMat t();
CMat rx(double phi);
CMat ry(double phi);
CMat rz(double phi);
}  // namespace gates

// In-place left-multiplication of a gate into a dim x dim matrix
// (G * U), qubit 0 = most significant bit.
void apply_gate_1q(CMat& u, const CMat& gate, int qubit, int n_qubits);
void apply_cnot(CMat& u, int control, int target, int n_qubits);

// Circular pair list [(i, i+1 mod n)], rotated left by (block-1),
// control and target swapped on even blocks. block is 1-based.
std::vector<std::pair<int, int>> sca_pairs(int n_qubits, int block);

// Ry rotation layers alternating with sca CNOT layers; reps entanglement
// blocks and reps+1 rotation layers. Real-valued by construction.
UnitaryMatrix build_real_amplitudes(int n_qubits, int reps, const AnsatzParams& params);

// U rho U^dag
DensityMatrix apply_unitary(const UnitaryMatrix& u, const DensityMatrix& rho);

// `depth` layers; each qubit slot draws uniformly from
// {H, X, Y, Z, S, T, Rx, Ry, Rz, CNOT(to random other qubit)},
// rotation angles uniform on (-pi, pi].
UnitaryMatrix random_circuit_unitary(int n_qubits, int depth, Rng& rng);

}  // namespace qmix
