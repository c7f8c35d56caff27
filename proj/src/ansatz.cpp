#include "qmix/ansatz.hpp"

#include <cmath>
#include <numbers>

namespace qmix {

void AnsatzParams::validate() const {
  if (reps < 1) throw ParamError("ansatz needs reps >= 1");
  if (n_qubits < 1) throw ParamError("ansatz needs n_qubits >= 1");
  if (theta.size() != expected_size())
    throw ParamError("parameter vector length does not match (reps+1)*n_qubits");
  if (!theta.allFinite()) throw ParamError("non-finite rotation angle");
}

UnitaryMatrix::UnitaryMatrix(CMat entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || !is_power_of_two(m_.rows()))
    throw DimensionError("unitary must be square with power-of-two dimension");
  const CMat delta = m_ * m_.adjoint() - CMat::Identity(m_.rows(), m_.cols());
  if (delta.cwiseAbs().maxCoeff() > 1e-9)
    throw StateError("matrix is not unitary");
}

UnitaryMatrix UnitaryMatrix::unchecked(CMat entries) {
  return UnitaryMatrix(std::move(entries), unchecked_t{});
}

namespace gates {

CMat h() {
  CMat m(2, 2);
  const double s = 1.0 / std::numbers::sqrt2;
  m << s, s, s, -s;
  return m;
}
CMat x() {
  CMat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
CMat y() {
  CMat m(2, 2);
  m << Complex{0, 0}, Complex{0, -1}, Complex{0, 1}, Complex{0, 0};
  return m;
}
CMat z() {
  CMat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
CMat s() {
  CMat m(2, 2);
  m << 1, 0, 0, Complex{0, 1};
  return m;
}
CMat t() {
  CMat m(2, 2);
  m << 1, 0, 0, std::polar(1.0, std::numbers::pi / 4);
  return m;
}
CMat rx(double phi) {
  CMat m(2, 2);
  const double c = std::cos(phi / 2), sn = std::sin(phi / 2);
  m << Complex{c, 0}, Complex{0, -sn}, Complex{0, -sn}, Complex{c, 0};
  return m;
}
CMat ry(double phi) {
  CMat m(2, 2);
  const double c = std::cos(phi / 2), sn = std::sin(phi / 2);
  m << c, -sn, sn, c;
  return m;
}
CMat rz(double phi) {
  CMat m(2, 2);
  m << std::polar(1.0, -phi / 2), Complex{0, 0}, Complex{0, 0}, std::polar(1.0, phi / 2);
  return m;
}

}  // namespace gates

void apply_gate_1q(CMat& u, const CMat& gate, int qubit, int n_qubits) {
  const Index dim = Index{1} << n_qubits;
  const Index step = Index{1} << (n_qubits - 1 - qubit);
  for (Index base = 0; base < dim; ++base) {
    if (base & step) continue;
    const Index r0 = base, r1 = base | step;
    for (Index c = 0; c < dim; ++c) {
      const Complex a = u(r0, c), b = u(r1, c);
      u(r0, c) = gate(0, 0) * a + gate(0, 1) * b;
      u(r1, c) = gate(1, 0) * a + gate(1, 1) * b;
    }
  }
}

void apply_cnot(CMat& u, int control, int target, int n_qubits) {
  const Index dim = Index{1} << n_qubits;
  const Index cmask = Index{1} << (n_qubits - 1 - control);
  const Index tmask = Index{1} << (n_qubits - 1 - target);
  for (Index r = 0; r < dim; ++r) {
    if ((r & cmask) && !(r & tmask)) u.row(r).swap(u.row(r | tmask));
  }
}

std::vector<std::pair<int, int>> sca_pairs(int n_qubits, int block) {
  std::vector<std::pair<int, int>> pairs;
  if (n_qubits < 2) return pairs;
  pairs.reserve(n_qubits);
  for (int i = 0; i < n_qubits; ++i) {
    const int a = (i + block - 1) % n_qubits;
    const int b = (a + 1) % n_qubits;
    if (block % 2 == 0)
      pairs.emplace_back(b, a);
    else
      pairs.emplace_back(a, b);
  }
  return pairs;
}

UnitaryMatrix build_real_amplitudes(int n_qubits, int reps, const AnsatzParams& params) {
  params.validate();
  if (params.n_qubits != n_qubits || params.reps != reps)
    throw ParamError("ansatz shape does not match parameters");
  const Index dim = Index{1} << n_qubits;
  CMat u = CMat::Identity(dim, dim);
  Index idx = 0;
  for (int q = 0; q < n_qubits; ++q)
    apply_gate_1q(u, gates::ry(params.theta(idx++)), q, n_qubits);
  for (int k = 1; k <= reps; ++k) {
    for (const auto& [c, t] : sca_pairs(n_qubits, k)) apply_cnot(u, c, t, n_qubits);
    for (int q = 0; q < n_qubits; ++q)
      apply_gate_1q(u, gates::ry(params.theta(idx++)), q, n_qubits);
  }
  return UnitaryMatrix::unchecked(std::move(u));
}

DensityMatrix apply_unitary(const UnitaryMatrix& u, const DensityMatrix& rho) {
  if (u.dim() != rho.dim()) throw DimensionError("unitary/state dimension mismatch");
  return DensityMatrix::unchecked(u.entries() * rho.entries() * u.entries().adjoint());
}

UnitaryMatrix random_circuit_unitary(int n_qubits, int depth, Rng& rng) {
  if (depth < 1) throw ParamError("random circuit needs depth >= 1");
  const Index dim = Index{1} << n_qubits;
  CMat u = CMat::Identity(dim, dim);
  for (int layer = 0; layer < depth; ++layer) {
    for (int q = 0; q < n_qubits; ++q) {
      const auto pick = rng.integer(10);
      switch (pick) {
        case 0: apply_gate_1q(u, gates::h(), q, n_qubits); break;
        case 1: apply_gate_1q(u, gates::x(), q, n_qubits); break;
        case 2: apply_gate_1q(u, gates::y(), q, n_qubits); break;
        case 3: apply_gate_1q(u, gates::z(), q, n_qubits); break;
        case 4: apply_gate_1q(u, gates::s(), q, n_qubits); break;
        case 5: apply_gate_1q(u, gates::t(), q, n_qubits); break;
        case 6: apply_gate_1q(u, gates::rx(rng.angle()), q, n_qubits); break;
        case 7: apply_gate_1q(u, gates::ry(rng.angle()), q, n_qubits); break;
        case 8: apply_gate_1q(u, gates::rz(rng.angle()), q, n_qubits); break;
        default: {
          if (n_qubits < 2) break;  // no partner available
          const int partner =
              static_cast<int>((q + 1 + rng.integer(static_cast<std::uint64_t>(n_qubits - 1))) %
                               n_qubits);
          apply_cnot(u, q, partner, n_qubits);
          break;
        }
      }
    }
  }
  return UnitaryMatrix::unchecked(std::move(u));
}

}  // namespace qmix
