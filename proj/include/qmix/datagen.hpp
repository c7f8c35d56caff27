#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qmix/qcore.hpp"

namespace qmix {

enum class PayloadKind { Pure, Density, Genotype };

std::string payload_kind_name(PayloadKind k);
PayloadKind payload_kind_from_name(const std::string& name);

// Columnar record store; exactly one payload column is populated,
// matching `kind`. Pure datasets also carry derived densities.
struct LabeledDataset {
  PayloadKind kind = PayloadKind::Pure;
  Index dim = 0;
  std::vector<int> labels;
  std::vector<PureState> pures;
  std::vector<DensityMatrix> densities;  // filled for Pure and Density kinds
  std::vector<RVec> genotypes;

  std::string generator;
  std::string params_json;  // generator parameters, serialized
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int n_qubits() const { return qubit_count_for_dim(dim); }
  std::vector<int> indices_of_class(int label) const;
  // Densities for the given sample indices; genotype payloads are
  // amplitude-encoded on demand.
  std::vector<DensityMatrix> densities_for(const std::vector<int>& idx) const;
  std::vector<DensityMatrix> all_densities() const;
  void ensure_densities();
};

struct ToyParams {
  double e_s = 0.0;
  double e_shift = 0.0;
  int n_per_class = 200;

  void validate_pure() const;
  void validate_mixed() const;  // additionally e_s + e_shift <= 1
};

struct TraitParams {
  double alpha = 0.0;
  double theta1 = 1.0;
  double theta2 = 1.0;
};

struct SnpModelParams {
  std::array<TraitParams, 3> traits{TraitParams{0.006, 5.0, 5.0},
                                    TraitParams{0.004, 6.0, 4.0},
                                    TraitParams{0.003, 7.0, 7.0}};
  // causal SNP positions in the output feature space; pairs (0,1), (2,3),
  // (4,5) feed traits 0..2
  std::array<int, 6> causal_indices{0, 1, 2, 3, 4, 5};
  // heterozygote relative risks used to enrich risk alleles in the case pool
  std::array<double, 6> het_relative_risk{1.5, 1.2, 1.6, 2.0, 1.8, 1.3};
  int n_snps = 128;
  int n_cases = 465;
  int n_controls = 465;
  int panel_snps = 0;  // raw simulated panel; 0 means 4 * n_snps

  void validate() const;
};

// Two-qubit pure states: positive class perturbs basis states (|00>,
// |01>), negative the corresponding +-superpositions. e_s wiggles the
// qubit the initial states differ on; e_shift rotates the other qubit
// for positive labels only.
LabeledDataset gen_toy_pure(const ToyParams& p, Rng& rng);

// Two-qubit mixed states: initial-state densities mixed with
// Hilbert-Schmidt random states, positive class additionally shifted
// toward diag(0, 0, 0.5, 0.5).
LabeledDataset gen_toy_mixed(const ToyParams& p, Rng& rng);

// Case/control genotypes over {0,1,2} from a multiplicative two-locus
// odds model over three trait pairs, balanced by random undersampling,
// reduced to n_snps features (causal SNPs always retained).
LabeledDataset gen_snp(const SnpModelParams& p, Rng& rng);

// Uhlmann fidelity between the two class-global states.
double class_global_fidelity(const LabeledDataset& ds);

// Stratified split; `test_fraction` of each class goes to the second
// result, selection order fixed by the seed.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           double test_fraction, Rng& rng);

}  // namespace qmix
