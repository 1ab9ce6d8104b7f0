#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/rng.hpp"
#include "gg/spin_config.hpp"

namespace gg {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed stream ids for the counter-based disorder/sampler streams.
inline constexpr std::uint64_t kStreamBaseDisorder = 0;
inline constexpr std::uint64_t kStreamPerturbation = 1;
inline constexpr std::uint64_t kStreamReplica = 2;
inline constexpr std::uint64_t kStreamMcmc = 3;
inline constexpr std::uint64_t kStreamProbe = 4;
inline constexpr std::uint64_t kStreamFunctionalProbe = 5;

// Signed monomial over a set of distinct sites: coeff * prod sigma_i.
struct Term {
  std::vector<std::int32_t> sites;
  double coeff = 0.0;

  double eval(const SpinConfig& c) const {
    double v = coeff;
    for (int s : sites) v *= c.spin(s);
    return v;
  }
};

// One f_alpha. Monomial fast path unless a custom evaluator is set, in which
// case `support` declares the sites it depends on.
struct Feature {
  std::string label;
  Term term;  // coeff in [-1,1] for monomials
  std::function<double(const SpinConfig&)> custom;
  std::vector<std::int32_t> support;

  double eval(const SpinConfig& c) const {
    return custom ? custom(c) : term.eval(c);
  }
  const std::vector<std::int32_t>& sites() const {
    return custom ? support : term.sites;
  }
};

// Feature collection (f_alpha)_{alpha in A_N} with its declared size bound.
struct FeatureSet {
  std::vector<Feature> features;
  double size_bound_constant = 4.0;  // |A_N| <= c*N, recorded only

  std::size_t size() const { return features.size(); }
};

// Quenched gaussians with seed provenance. Regeneration from the same
// (master seed, index) pair is bit-for-bit identical.
struct DisorderRealization {
  std::vector<double> perturbation;  // g_alpha, aligned with features
  std::vector<double> base;          // gaussians used inside mu_N (SK g_ij)
  std::uint64_t master_seed = 0;
  std::uint64_t base_index = 0;
  std::uint64_t pert_index = 0;
};

// Fully determines the Hamiltonian: Gibbs weight of sigma is proportional to
//   exp(base log-weight) * exp(gamma * sum_alpha g_alpha f_alpha(sigma)),
// i.e. exp(-energy(sigma)).
class ModelInstance {
 public:
  int n_sites = 0;
  double gamma = 0.0;
  std::vector<Term> base_terms;  // log mu_N up to an additive constant
  std::function<double(const SpinConfig&)> base_log_weight;  // generic base
  FeatureSet features;
  DisorderRealization disorder;
  std::string tag;
  double beta = 0.0;
  double h = 0.0;

  void finalize() {
    site_base_.assign(n_sites, {});
    site_feat_.assign(n_sites, {});
    for (std::size_t t = 0; t < base_terms.size(); ++t)
      for (int s : base_terms[t].sites)
        site_base_[s].push_back(static_cast<std::int32_t>(t));
    for (std::size_t a = 0; a < features.size(); ++a)
      for (int s : features.features[a].sites())
        site_feat_[s].push_back(static_cast<std::int32_t>(a));
  }

  int feature_count() const { return static_cast<int>(features.size()); }

  double base_value(const SpinConfig& c) const {
    double v = 0.0;
    if (base_log_weight) v += base_log_weight(c);
    for (const auto& t : base_terms) v += t.eval(c);
    return v;
  }

  double log_weight(const SpinConfig& c) const {
    if (c.size() != n_sites)
      throw std::invalid_argument("configuration length mismatch");
    double v = base_value(c);
    double p = 0.0;
    for (int a = 0; a < feature_count(); ++a)
      p += disorder.perturbation[a] * features.features[a].eval(c);
    return v + gamma * p;
  }

  // H_N(sigma); Gibbs weight is exp(-energy).
  double energy(const SpinConfig& c) const { return -log_weight(c); }

  // energy(flip(c, site)) - energy(c), touching only incident terms.
  double energy_delta(const SpinConfig& c, int site) const {
    if (site < 0 || site >= n_sites)
      throw std::out_of_range("energy_delta: site out of range");
    double d = 0.0;
    for (std::int32_t t : site_base_[site]) d += 2.0 * base_terms[t].eval(c);
    for (std::int32_t a : site_feat_[site]) {
      const Feature& f = features.features[a];
      double g = disorder.perturbation[a];
      if (f.custom) {
        SpinConfig flipped = c;
        flipped.flip(site);
        d -= gamma * g * (f.eval(flipped) - f.eval(c));
      } else {
        d += 2.0 * gamma * g * f.eval(c);
      }
    }
    if (base_log_weight) {
      SpinConfig flipped = c;
      flipped.flip(site);
      d += base_log_weight(c) - base_log_weight(flipped);
    }
    return d;
  }

  // H = (1/N) sum_alpha g_alpha f_alpha(sigma). Independent of gamma.
  double h_statistic(const SpinConfig& c) const {
    double s = 0.0;
    for (int a = 0; a < feature_count(); ++a)
      s += disorder.perturbation[a] * features.features[a].eval(c);
    return s / n_sites;
  }

  ModelInstance with_gamma(double new_gamma) const {
    ModelInstance m = *this;
    m.gamma = new_gamma;
    return m;
  }

  // Test/finite-difference hooks.
  ModelInstance with_perturbation(int alpha, double g) const {
    ModelInstance m = *this;
    m.disorder.perturbation.at(alpha) = g;
    return m;
  }

  ModelInstance with_all_perturbation(double g) const {
    ModelInstance m = *this;
    std::fill(m.disorder.perturbation.begin(), m.disorder.perturbation.end(),
              g);
    return m;
  }

  ModelInstance with_perturbation_vector(std::vector<double> g) const {
    if (g.size() != disorder.perturbation.size())
      throw std::invalid_argument("perturbation vector size mismatch");
    ModelInstance m = *this;
    m.disorder.perturbation = std::move(g);
    return m;
  }

  // R_{1,1} = (1/N) sum_alpha f_alpha(sigma)^2, probed on a deterministic
  // set of configurations. Throws if the spread exceeds `tolerance`.
  double self_overlap_constant(double tolerance = 1e-9) const {
    std::vector<SpinConfig> probes = {SpinConfig::all_plus(n_sites),
                                      SpinConfig::all_minus(n_sites),
                                      SpinConfig::alternating(n_sites)};
    CounterRng rng(disorder.master_seed, 0, kStreamProbe);
    for (int k = 0; k < 32; ++k)
      probes.push_back(SpinConfig::random(n_sites, rng));
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      double r = 0.0;
      for (const auto& f : features.features) {
        double v = f.eval(probes[k]);
        r += v * v;
      }
      r /= n_sites;
      if (k == 0) {
        lo = hi = r;
      } else {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    }
    if (hi - lo > tolerance)
      throw ModelError("model violates the R_{1,1}-constant assumption");
    return 0.5 * (lo + hi);
  }

 private:
  std::vector<std::vector<std::int32_t>> site_base_;
  std::vector<std::vector<std::int32_t>> site_feat_;
};

namespace detail {

inline void validate_features(const FeatureSet& fs, int n,
                              std::uint64_t master_seed) {
  if (static_cast<double>(fs.size()) > fs.size_bound_constant * n)
    std::fprintf(stderr,
                 "warning: |A_N| = %zu exceeds declared bound %g*N (N=%d)\n",
                 fs.size(), fs.size_bound_constant, n);
  std::vector<SpinConfig> probes = {SpinConfig::all_plus(n),
                                    SpinConfig::all_minus(n),
                                    SpinConfig::alternating(n)};
  CounterRng rng(master_seed, 0, kStreamProbe);
  for (int k = 0; k < 64; ++k) probes.push_back(SpinConfig::random(n, rng));
  for (const auto& f : fs.features)
    for (const auto& p : probes)
      if (std::abs(f.eval(p)) > 1.0 + 1e-12)
        throw ModelError("feature value outside [-1,1]: " + f.label);
}

inline std::vector<double> draw_gaussians(std::size_t count,
                                          std::uint64_t master_seed,
                                          std::uint64_t sample_index,
                                          std::uint64_t stream_id) {
  CounterRng rng(master_seed, sample_index, stream_id);
  std::vector<double> g(count);
  for (auto& x : g) x = rng.gaussian();
  return g;
}

}  // namespace detail

// Site features f_i(sigma) = sigma_i.
inline FeatureSet site_features(int n) {
  FeatureSet fs;
  fs.features.reserve(n);
  for (int i = 0; i < n; ++i)
    fs.features.push_back(
        {"site" + std::to_string(i), Term{{i}, 1.0}, nullptr, {}});
  return fs;
}

// SK with external field: the beta and h terms plus the quenched g_ij live in
// the base weights; the perturbation is gamma * sum g_i sigma_i over site
// features. Separate base/perturbation indices support fixing one disorder
// layer while resampling the other.
inline ModelInstance build_sk(int n, double beta, double gamma, double h,
                              std::uint64_t master_seed,
                              std::uint64_t sample_index,
                              std::uint64_t base_index,
                              std::uint64_t pert_index) {
  if (n < 1) throw std::invalid_argument("build_sk: N must be positive");
  ModelInstance m;
  m.n_sites = n;
  m.gamma = gamma;
  m.beta = beta;
  m.h = h;
  m.tag = "sk";
  m.features = site_features(n);

  std::size_t n_pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  m.disorder.base =
      detail::draw_gaussians(n_pairs, master_seed, base_index,
                             kStreamBaseDisorder);
  m.disorder.perturbation =
      detail::draw_gaussians(n, master_seed, pert_index, kStreamPerturbation);
  m.disorder.master_seed = master_seed;
  m.disorder.base_index = base_index;
  m.disorder.pert_index = pert_index;

  double scale = beta / std::sqrt(static_cast<double>(n));
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      m.base_terms.push_back(Term{{i, j}, scale * m.disorder.base[k++]});
  for (int i = 0; i < n; ++i) m.base_terms.push_back(Term{{i}, h});
  m.finalize();
  return m;
}

inline ModelInstance build_sk(int n, double beta, double gamma, double h,
                              std::uint64_t master_seed,
                              std::uint64_t sample_index) {
  return build_sk(n, beta, gamma, h, master_seed, sample_index, sample_index,
                  sample_index);
}

// Generalized model of the framework: arbitrary base log-weights plus a
// validated feature set carrying fresh perturbation gaussians.
inline ModelInstance build_generalized(
    int n, std::function<double(const SpinConfig&)> base_log_weights,
    FeatureSet features, double gamma, std::uint64_t master_seed,
    std::uint64_t sample_index) {
  if (n < 1)
    throw std::invalid_argument("build_generalized: N must be positive");
  detail::validate_features(features, n, master_seed);
  ModelInstance m;
  m.n_sites = n;
  m.gamma = gamma;
  m.tag = "generalized";
  m.features = std::move(features);
  m.base_log_weight = std::move(base_log_weights);
  m.disorder.perturbation = detail::draw_gaussians(
      m.features.size(), master_seed, sample_index, kStreamPerturbation);
  m.disorder.master_seed = master_seed;
  m.disorder.base_index = sample_index;
  m.disorder.pert_index = sample_index;
  m.finalize();
  return m;
}

// Distinct undirected edges of a hyper-rectangular lattice, simple-graph
// convention (each edge once, wrap only when periodic).
inline std::vector<std::pair<int, int>> lattice_edges(
    const std::vector<int>& dims, bool periodic) {
  int n = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("lattice dimension must be >= 1");
    n *= d;
  }
  std::set<std::pair<int, int>> edges;
  std::vector<int> stride(dims.size());
  int acc = 1;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    stride[k] = acc;
    acc *= dims[k];
  }
  for (int site = 0; site < n; ++site) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      int coord = (site / stride[k]) % dims[k];
      if (coord + 1 < dims[k]) {
        edges.insert(std::minmax(site, site + stride[k]));
      } else if (periodic && dims[k] > 1) {
        edges.insert(std::minmax(site, site - (dims[k] - 1) * stride[k]));
      }
    }
  }
  return {edges.begin(), edges.end()};
}

inline FeatureSet bond_features(const std::vector<std::pair<int, int>>& edges) {
  FeatureSet fs;
  for (auto [i, j] : edges)
    fs.features.push_back({"bond" + std::to_string(i) + "_" + std::to_string(j),
                           Term{{i, j}, 1.0},
                           nullptr,
                           {}});
  return fs;
}

// Edwards-Anderson: uniform base, bond features f_(i,j) = sigma_i sigma_j,
// gamma is the inverse temperature; generalized overlap = bond overlap.
inline ModelInstance build_ea(const std::vector<int>& dims, bool periodic,
                              double gamma, std::uint64_t master_seed,
                              std::uint64_t sample_index) {
  if (dims.empty()) throw std::invalid_argument("build_ea: empty lattice");
  int n = 1;
  for (int d : dims) n *= d;
  if (n < 2) throw std::invalid_argument("build_ea: need at least 2 sites");
  ModelInstance m;
  m.n_sites = n;
  m.gamma = gamma;
  m.tag = "ea";
  m.features = bond_features(lattice_edges(dims, periodic));
  m.disorder.perturbation = detail::draw_gaussians(
      m.features.size(), master_seed, sample_index, kStreamPerturbation);
  m.disorder.master_seed = master_seed;
  m.disorder.base_index = sample_index;
  m.disorder.pert_index = sample_index;
  m.finalize();
  return m;
}

// Random field Ising: deterministic ferromagnetic couplings J in the base,
// random field gamma * sum g_i sigma_i as the perturbation.
inline ModelInstance build_rfim(const std::vector<int>& dims, bool periodic,
                                double coupling, double gamma,
                                std::uint64_t master_seed,
                                std::uint64_t sample_index) {
  if (dims.empty()) throw std::invalid_argument("build_rfim: empty lattice");
  int n = 1;
  for (int d : dims) n *= d;
  if (n < 1) throw std::invalid_argument("build_rfim: empty lattice");
  ModelInstance m;
  m.n_sites = n;
  m.gamma = gamma;
  m.tag = "rfim";
  m.features = site_features(n);
  for (auto [i, j] : lattice_edges(dims, periodic))
    m.base_terms.push_back(Term{{i, j}, coupling});
  m.disorder.perturbation =
      detail::draw_gaussians(n, master_seed, sample_index, kStreamPerturbation);
  m.disorder.master_seed = master_seed;
  m.disorder.base_index = sample_index;
  m.disorder.pert_index = sample_index;
  m.finalize();
  return m;
}

// All p-subsets in lexicographic order, truncated to max_count features,
// keeping |A_N| = O(N) at caller's discretion.
inline FeatureSet p_subset_features(int n, int p, std::size_t max_count) {
  if (p < 1 || p > n) throw std::invalid_argument("p_subset_features: bad p");
  FeatureSet fs;
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  while (fs.size() < max_count) {
    Term t;
    t.coeff = 1.0;
    t.sites.assign(idx.begin(), idx.end());
    std::string label = "p";
    for (int s : idx) label += "_" + std::to_string(s);
    fs.features.push_back({label, std::move(t), nullptr, {}});
    int k = p - 1;
    while (k >= 0 && idx[k] == n - p + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
  }
  return fs;
}

inline ModelInstance build_pspin(int n, int p, double gamma,
                                 std::uint64_t master_seed,
                                 std::uint64_t sample_index) {
  ModelInstance m;
  m.n_sites = n;
  m.gamma = gamma;
  m.tag = "pspin";
  m.features = p_subset_features(n, p, static_cast<std::size_t>(3) * n);
  m.disorder.perturbation = detail::draw_gaussians(
      m.features.size(), master_seed, sample_index, kStreamPerturbation);
  m.disorder.master_seed = master_seed;
  m.disorder.base_index = sample_index;
  m.disorder.pert_index = sample_index;
  m.finalize();
  return m;
}

}  // namespace gg
