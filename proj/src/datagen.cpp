#include "qmix/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "qmix/ansatz.hpp"

namespace qmix {

std::string payload_kind_name(PayloadKind k) {
  switch (k) {
    case PayloadKind::Pure: return "pure";
    case PayloadKind::Density: return "density";
    case PayloadKind::Genotype: return "genotype";
  }
  throw DomainError("unknown payload kind");
}

PayloadKind payload_kind_from_name(const std::string& name) {
  if (name == "pure") return PayloadKind::Pure;
  if (name == "density") return PayloadKind::Density;
  if (name == "genotype") return PayloadKind::Genotype;
  throw DomainError("unknown payload kind: " + name);
}

std::vector<int> LabeledDataset::indices_of_class(int label) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

void LabeledDataset::ensure_densities() {
  if (!densities.empty()) return;
  if (kind == PayloadKind::Pure) {
    densities.reserve(pures.size());
    for (const auto& p : pures) densities.push_back(pure_to_density(p));
  } else if (kind == PayloadKind::Genotype) {
    const int n = n_qubits();
    densities.reserve(genotypes.size());
    for (const auto& g : genotypes)
      densities.push_back(pure_to_density(amplitude_encode(g, n)));
  }
}

std::vector<DensityMatrix> LabeledDataset::densities_for(const std::vector<int>& idx) const {
  std::vector<DensityMatrix> out;
  out.reserve(idx.size());
  if (!densities.empty()) {
    for (int i : idx) out.push_back(densities.at(i));
    return out;
  }
  for (int i : idx) {
    if (kind == PayloadKind::Pure) {
      out.push_back(pure_to_density(pures.at(i)));
    } else if (kind == PayloadKind::Genotype) {
      out.push_back(pure_to_density(amplitude_encode(genotypes.at(i), n_qubits())));
    } else {
      out.push_back(densities.at(i));
    }
  }
  return out;
}

std::vector<DensityMatrix> LabeledDataset::all_densities() const {
  std::vector<int> idx(size());
  std::iota(idx.begin(), idx.end(), 0);
  return densities_for(idx);
}

void ToyParams::validate_pure() const {
  if (e_s < 0.0 || e_shift < 0.0) throw ParamError("perturbation scales must be nonnegative");
  if (n_per_class < 1) throw ParamError("need at least one sample per class");
}

void ToyParams::validate_mixed() const {
  validate_pure();
  if (e_s + e_shift > 1.0) throw ParamError("mixing weights exceed 1 (e_s + e_shift > 1)");
}

namespace {

// Initial two-qubit states. The classes differ on the last qubit:
// positive uses the basis pair {|q1=0>, |q1=1>}, negative the
// +-superpositions, with qubit 0 at |0> everywhere.
CVec toy_initial_pure(int which_class, bool second) {
  CVec v = CVec::Zero(4);
  if (which_class == 1) {
    v(second ? 1 : 0) = 1.0;
  } else {
    v(0) = 1.0 / std::numbers::sqrt2;
    v(1) = (second ? -1.0 : 1.0) / std::numbers::sqrt2;
  }
  return v;
}

void apply_ry_vec(CVec& v, double angle, int qubit, int n_qubits) {
  const Index step = Index{1} << (n_qubits - 1 - qubit);
  const double c = std::cos(angle / 2), s = std::sin(angle / 2);
  for (Index base = 0; base < v.size(); ++base) {
    if (base & step) continue;
    const Complex a = v(base), b = v(base | step);
    v(base) = c * a - s * b;
    v(base | step) = s * a + c * b;
  }
}

std::string toy_params_json(const char* generator, const ToyParams& p) {
  std::ostringstream os;
  os << "{\"generator\":\"" << generator << "\",\"e_s\":" << p.e_s
     << ",\"e_shift\":" << p.e_shift << ",\"n_per_class\":" << p.n_per_class << "}";
  return os.str();
}

}  // namespace

LabeledDataset gen_toy_pure(const ToyParams& p, Rng& rng) {
  p.validate_pure();
  LabeledDataset ds;
  ds.kind = PayloadKind::Pure;
  ds.dim = 4;
  ds.generator = "toy-pure";
  ds.params_json = toy_params_json("toy-pure", p);
  ds.seed = rng.seed();

  for (int label : {1, 0}) {
    for (int i = 0; i < p.n_per_class; ++i) {
      CVec v = toy_initial_pure(label, rng.coin());
      apply_ry_vec(v, rng.uniform(-p.e_s, p.e_s), 1, 2);
      if (label == 1) apply_ry_vec(v, rng.uniform(-p.e_shift, p.e_shift), 0, 2);
      ds.pures.emplace_back(std::move(v));
      ds.labels.push_back(label);
    }
  }
  ds.ensure_densities();
  return ds;
}

LabeledDataset gen_toy_mixed(const ToyParams& p, Rng& rng) {
  p.validate_mixed();
  LabeledDataset ds;
  ds.kind = PayloadKind::Density;
  ds.dim = 4;
  ds.generator = "toy-mixed";
  ds.params_json = toy_params_json("toy-mixed", p);
  ds.seed = rng.seed();

  CMat shift = CMat::Zero(4, 4);
  shift(2, 2) = 0.5;
  shift(3, 3) = 0.5;

  for (int label : {1, 0}) {
    for (int i = 0; i < p.n_per_class; ++i) {
      CVec ini = toy_initial_pure(label, rng.coin());
      const CMat rho_ini = ini * ini.adjoint();
      const DensityMatrix noise = random_density_hs(4, rng);
      CMat rho;
      if (label == 1) {
        rho = (1.0 - p.e_s - p.e_shift) * rho_ini + p.e_s * noise.entries() + p.e_shift * shift;
      } else {
        rho = (1.0 - p.e_s) * rho_ini + p.e_s * noise.entries();
      }
      ds.densities.push_back(DensityMatrix::unchecked(std::move(rho)));
      ds.labels.push_back(label);
    }
  }
  return ds;
}

void SnpModelParams::validate() const {
  if (n_snps < 8) throw ParamError("need at least 8 SNP features");
  if (n_cases < 1 || n_controls < 1) throw ParamError("need positive case/control counts");
  std::array<int, 6> sorted = causal_indices;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 6; ++i) {
    if (sorted[i] < 0 || sorted[i] >= n_snps)
      throw ParamError("causal index out of the feature range");
    if (i > 0 && sorted[i] == sorted[i - 1]) throw ParamError("causal indices must be distinct");
  }
  for (const auto& t : traits)
    if (t.alpha <= 0.0 || t.theta1 <= 0.0 || t.theta2 <= 0.0)
      throw ParamError("trait parameters must be positive");
}

LabeledDataset gen_snp(const SnpModelParams& p, Rng& rng) {
  p.validate();
  const int panel = p.panel_snps > 0 ? p.panel_snps : 4 * p.n_snps;
  if (panel < p.n_snps) throw ParamError("panel smaller than the requested feature count");

  RVec mafs(panel);
  for (int j = 0; j < panel; ++j) mafs(j) = rng.uniform(0.1, 0.5);

  // panel columns 0..5 are causal; remapped to the requested output
  // positions after feature selection
  std::vector<RVec> cases, controls;
  const int want_cases = p.n_cases, want_controls = p.n_controls;
  long long attempts = 0;
  const long long max_attempts = 400000;
  while ((static_cast<int>(cases.size()) < want_cases ||
          static_cast<int>(controls.size()) < want_controls) &&
         attempts < max_attempts) {
    ++attempts;
    const bool enriched = rng.coin();
    RVec g(panel);
    for (int j = 0; j < panel; ++j) {
      double maf = mafs(j);
      if (enriched && j < 6) maf = std::min(maf * p.het_relative_risk[j], 0.95);
      g(j) = static_cast<double>(rng.binomial(2, maf));
    }
    bool is_case = false;
    for (int t = 0; t < 3; ++t) {
      const double odds = p.traits[t].alpha * std::pow(p.traits[t].theta1, g(2 * t)) *
                          std::pow(p.traits[t].theta2, g(2 * t + 1));
      if (rng.uniform() < odds / (1.0 + odds)) {
        is_case = true;
        break;
      }
    }
    if (is_case) {
      if (static_cast<int>(cases.size()) < want_cases) cases.push_back(std::move(g));
    } else {
      if (static_cast<int>(controls.size()) < want_controls) controls.push_back(std::move(g));
    }
  }
  if (static_cast<int>(cases.size()) < want_cases)
    throw GenerationError("disease model produced too few cases");
  if (static_cast<int>(controls.size()) < want_controls)
    throw GenerationError("disease model produced too few controls");

  // variance-based feature selection over all samples; causal columns kept
  RVec mean = RVec::Zero(panel), m2 = RVec::Zero(panel);
  const auto accumulate = [&](const RVec& g) {
    mean += g;
    m2 += g.cwiseProduct(g);
  };
  for (const auto& g : cases) accumulate(g);
  for (const auto& g : controls) accumulate(g);
  const double n_total = static_cast<double>(cases.size() + controls.size());
  mean /= n_total;
  const RVec var = m2 / n_total - mean.cwiseProduct(mean);

  std::vector<int> rest(panel - 6);
  std::iota(rest.begin(), rest.end(), 6);
  std::stable_sort(rest.begin(), rest.end(), [&](int a, int b) { return var(a) > var(b); });
  rest.resize(p.n_snps - 6);
  std::sort(rest.begin(), rest.end());

  // output column -> panel column
  std::vector<int> source(p.n_snps, -1);
  for (int k = 0; k < 6; ++k) source[p.causal_indices[k]] = k;
  std::size_t next = 0;
  for (int out = 0; out < p.n_snps; ++out)
    if (source[out] < 0) source[out] = rest[next++];

  LabeledDataset ds;
  ds.kind = PayloadKind::Genotype;
  ds.dim = Index{1} << qubit_count_for_dim(p.n_snps);  // encoding dimension
  ds.generator = "snp";
  ds.seed = rng.seed();
  {
    std::ostringstream os;
    os << "{\"generator\":\"snp\",\"n_snps\":" << p.n_snps << ",\"n_cases\":" << p.n_cases
       << ",\"n_controls\":" << p.n_controls << ",\"panel\":" << panel << "}";
    ds.params_json = os.str();
  }

  const auto reduce = [&](const RVec& g) {
    RVec out(p.n_snps);
    for (int j = 0; j < p.n_snps; ++j) out(j) = g(source[j]);
    return out;
  };
  for (const auto& g : cases) {
    ds.genotypes.push_back(reduce(g));
    ds.labels.push_back(1);
  }
  for (const auto& g : controls) {
    ds.genotypes.push_back(reduce(g));
    ds.labels.push_back(0);
  }
  return ds;
}

double class_global_fidelity(const LabeledDataset& ds) {
  const auto pos = ds.indices_of_class(1);
  const auto neg = ds.indices_of_class(0);
  if (pos.empty() || neg.empty()) throw EvalError("both classes must be present");
  const DensityMatrix gp = mix_uniform(ds.densities_for(pos));
  const DensityMatrix gn = mix_uniform(ds.densities_for(neg));
  return fidelity(gp, gn);
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           double test_fraction, Rng& rng) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0)
    throw ParamError("test fraction must lie in (0, 1)");
  LabeledDataset train, test;
  for (LabeledDataset* part : {&train, &test}) {
    part->kind = ds.kind;
    part->dim = ds.dim;
    part->generator = ds.generator;
    part->params_json = ds.params_json;
    part->seed = ds.seed;
  }

  auto copy_record = [&](LabeledDataset& dst, int i) {
    dst.labels.push_back(ds.labels[i]);
    if (!ds.pures.empty()) dst.pures.push_back(ds.pures[i]);
    if (!ds.densities.empty()) dst.densities.push_back(ds.densities[i]);
    if (!ds.genotypes.empty()) dst.genotypes.push_back(ds.genotypes[i]);
  };

  for (int label : {0, 1}) {
    std::vector<int> idx = ds.indices_of_class(label);
    rng.shuffle(idx);
    const int n_test = static_cast<int>(std::round(test_fraction * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
      copy_record(k < static_cast<std::size_t>(n_test) ? test : train, idx[k]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace qmix
