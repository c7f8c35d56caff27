#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace qmix {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

// Basis convention: basis index b is the bitstring q0 q1 ... q_{n-1}
// with qubit 0 as the most significant bit. Serialized formats follow
// the same ordering.
inline int qubit_count_for_dim(Index dim) {
  int n = 0;
  while ((Index{1} << n) < dim) ++n;
  return n;
}

inline bool is_power_of_two(Index x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace qmix
