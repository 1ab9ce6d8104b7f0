#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/gibbs.hpp"
#include "gg/model.hpp"

namespace gg {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline Estimate mean_and_se(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  if (n == 0) throw std::invalid_argument("mean_and_se: empty sample");
  double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (n == 1) return {m, 0.0};
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  s2 /= (n - 1);
  return {m, std::sqrt(s2 / n)};
}

// Overlap array R_n = (R_{l,l'})_{1<=l<l'<=n}, replica labels 1-based.
struct OverlapArray {
  int n = 0;
  std::vector<double> vals;  // (1,2),(1,3),...,(1,n),(2,3),...

  explicit OverlapArray(int n_replicas)
      : n(n_replicas), vals(static_cast<std::size_t>(n) * (n - 1) / 2, 0.0) {}

  std::size_t index(int l, int lp) const {
    return static_cast<std::size_t>(l - 1) * (2 * n - l) / 2 + (lp - l - 1);
  }
  double& at(int l, int lp) { return vals[index(l, lp)]; }
  double at(int l, int lp) const { return vals[index(l, lp)]; }
};

// Generalized overlap R_{1,2} = (1/N) sum_alpha f_alpha(a) f_alpha(b).
inline double overlap(const ModelInstance& m, const SpinConfig& a,
                      const SpinConfig& b) {
  double s = 0.0;
  for (const auto& f : m.features.features) s += f.eval(a) * f.eval(b);
  return s / m.n_sites;
}

// Named bounded function of the overlap array.
struct OverlapFunctional {
  std::string name;
  int arity = 2;
  double bound = 1.0;
  std::function<double(const OverlapArray&)> eval;
};

// Shipped functional library, referenced by string key from configs.
inline OverlapFunctional functional_by_name(const std::string& name, int n,
                                            double r11 = 1.0,
                                            double q0 = 0.2) {
  if (n < 2) throw std::invalid_argument("functional arity must be >= 2");
  if (name == "one")
    return {name, n, 1.0, [](const OverlapArray&) { return 1.0; }};
  if (name == "R12")
    return {name, n, r11, [](const OverlapArray& r) { return r.at(1, 2); }};
  if (name == "tanh5_R12")
    return {name, n, 1.0,
            [](const OverlapArray& r) { return std::tanh(5.0 * r.at(1, 2)); }};
  if (name == "pair_product") {
    double b = std::pow(r11, static_cast<double>(n) * (n - 1) / 2);
    return {name, n, b, [](const OverlapArray& r) {
              double p = 1.0;
              for (double v : r.vals) p *= v;
              return p;
            }};
  }
  if (name == "bump_R12_gt")
    return {name, n, 1.0, [q0](const OverlapArray& r) {
              return 0.5 * (1.0 + std::tanh((r.at(1, 2) - q0) / 0.1));
            }};
  throw std::invalid_argument("unknown overlap functional: " + name);
}

namespace detail {

// Feature-value matrix for a replica tuple; overlaps are dot products.
inline std::vector<std::vector<double>> feature_matrix(
    const ModelInstance& m, const std::vector<SpinConfig>& replicas) {
  std::vector<std::vector<double>> fv(replicas.size());
  for (std::size_t r = 0; r < replicas.size(); ++r) {
    fv[r].resize(m.features.size());
    for (std::size_t a = 0; a < m.features.size(); ++a)
      fv[r][a] = m.features.features[a].eval(replicas[r]);
  }
  return fv;
}

inline double overlap_from_features(const std::vector<double>& a,
                                    const std::vector<double>& b, int n_sites) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / n_sites;
}

}  // namespace detail

// Monte Carlo estimate of <f(R_n)> over i.i.d. replica n-tuples, standard
// error from batch means. `permutation`, when non-empty, relabels the
// replicas of every tuple before overlaps are formed (exchangeability test).
inline Estimate gibbs_expectation(const GibbsEnsemble& ensemble,
                                  const OverlapFunctional& functional,
                                  int draws, std::uint64_t stream_seed,
                                  const std::vector<int>& permutation = {}) {
  if (draws < 4) throw std::invalid_argument("gibbs_expectation: draws < 4");
  const int n = functional.arity;
  const ModelInstance& m = ensemble.model();
  ExactSampler sampler = ensemble.sampler(stream_seed);

  int n_batches = std::min(16, draws / 2);
  std::vector<double> batch_means;
  int per_batch = draws / n_batches;
  for (int b = 0; b < n_batches; ++b) {
    KahanSum acc;
    for (int d = 0; d < per_batch; ++d) {
      std::vector<SpinConfig> reps;
      reps.reserve(n);
      for (int r = 0; r < n; ++r) reps.push_back(sampler.draw());
      if (!permutation.empty()) {
        std::vector<SpinConfig> p;
        p.reserve(n);
        for (int r = 0; r < n; ++r) p.push_back(reps[permutation[r]]);
        reps = std::move(p);
      }
      auto fv = detail::feature_matrix(m, reps);
      OverlapArray R(n);
      for (int l = 1; l < n; ++l)
        for (int lp = l + 1; lp <= n; ++lp)
          R.at(l, lp) =
              detail::overlap_from_features(fv[l - 1], fv[lp - 1], m.n_sites);
      acc.add(functional.eval(R));
    }
    batch_means.push_back(acc.value() / per_batch);
  }
  return mean_and_se(batch_means);
}

// The three nu-terms of the residual, kept separately; delta_hat recombines
// them exactly as term1 - cross/n - term3_sum/n.
struct ResidualEstimate {
  double delta_hat = 0.0;
  double std_error = 0.0;
  long n_replica_draws = 0;
  double term1 = 0.0;      // nu(R_{1,n+1} f)
  double cross = 0.0;      // nu(R_{1,2}) nu(f)
  double term3_sum = 0.0;  // sum_{l=2..n} nu(R_{1,l} f)
  int arity = 2;

  double recombined() const {
    return term1 - cross / arity - term3_sum / arity;
  }
};

using EnsembleFactory = std::function<GibbsEnsemble(std::uint64_t)>;

// delta_N estimator. Outer average over fresh disorder realizations, inner
// Monte Carlo over (n+1)-replica tuples; nu(R_{1,2}) comes exactly from the
// enumerated feature averages. The product nu(R_{1,2}) nu(f) is estimated
// from disjoint disorder samples (even/odd pairing) to avoid product bias,
// and the standard error is taken across those pairs, the dominant
// fluctuation level.
inline ResidualEstimate gg_residual(const EnsembleFactory& factory, int n,
                                    const OverlapFunctional& functional,
                                    int disorder_samples, int replica_draws,
                                    std::uint64_t master_seed) {
  if (functional.arity != n)
    throw std::invalid_argument("gg_residual: functional arity mismatch");
  if (disorder_samples < 8)
    throw std::invalid_argument(
        "gg_residual: need at least 8 disorder samples for a std_error");
  disorder_samples -= disorder_samples % 2;

  struct SampleStats {
    double t1 = 0.0;      // mean R_{1,n+1} f
    double fmean = 0.0;   // mean f
    double t3 = 0.0;      // mean sum_l R_{1,l} f
    double r12 = 0.0;     // exact <R_{1,2}>
  };
  std::vector<SampleStats> stats(disorder_samples);

  for (int s = 0; s < disorder_samples; ++s) {
    GibbsEnsemble ensemble = factory(static_cast<std::uint64_t>(s));
    const ModelInstance& m = ensemble.model();
    ExactSampler sampler =
        ensemble.sampler(derive_stream_key(master_seed, s, kStreamReplica));
    KahanSum a1, af, a3;
    for (int d = 0; d < replica_draws; ++d) {
      std::vector<SpinConfig> reps;
      reps.reserve(n + 1);
      for (int r = 0; r < n + 1; ++r) reps.push_back(sampler.draw());
      auto fv = detail::feature_matrix(m, reps);
      OverlapArray R(n);
      for (int l = 1; l < n; ++l)
        for (int lp = l + 1; lp <= n; ++lp)
          R.at(l, lp) =
              detail::overlap_from_features(fv[l - 1], fv[lp - 1], m.n_sites);
      double f = functional.eval(R);
      double r_new = detail::overlap_from_features(fv[0], fv[n], m.n_sites);
      a1.add(r_new * f);
      af.add(f);
      double s3 = 0.0;
      for (int l = 2; l <= n; ++l) s3 += R.at(1, l) * f;
      a3.add(s3);
    }
    stats[s] = {a1.value() / replica_draws, af.value() / replica_draws,
                a3.value() / replica_draws, ensemble.pair_overlap_moment()};
  }

  int pairs = disorder_samples / 2;
  std::vector<double> d_i(pairs), c1(pairs), cc(pairs), c3(pairs);
  for (int i = 0; i < pairs; ++i) {
    const auto& a = stats[2 * i];
    const auto& b = stats[2 * i + 1];
    c1[i] = 0.5 * (a.t1 + b.t1);
    cc[i] = a.r12 * b.fmean;
    c3[i] = 0.5 * (a.t3 + b.t3);
    d_i[i] = c1[i] - cc[i] / n - c3[i] / n;
  }
  Estimate d = mean_and_se(d_i);
  ResidualEstimate out;
  out.arity = n;
  out.n_replica_draws =
      static_cast<long>(disorder_samples) * replica_draws * (n + 1);
  out.term1 = mean_and_se(c1).value;
  out.cross = mean_and_se(cc).value;
  out.term3_sum = mean_and_se(c3).value;
  out.delta_hat = d.value;
  out.std_error = d.std_error;
  return out;
}

inline double h_statistic(const ModelInstance& m, const SpinConfig& c) {
  return m.h_statistic(c);
}

// Self-averaging statistics of H, each with a standard error across
// disorder samples, plus the triangle-inequality decomposition
// nu(|H-nu(H)|) <= E|<H>-nu(H)| + nu(|H-<H>|) evaluated on paired estimates.
struct SelfAveragingReport {
  Estimate nu_abs_h_minus_nuh;      // nu(|H - nu(H)|)
  Estimate e_abs_gibbsh_minus_nuh;  // E|<H> - nu(H)|
  Estimate nu_gibbs_var_h;          // E<(H - <H>)^2>
  Estimate nu_abs_h_minus_gibbsh;   // nu(|H - <H>|)
  double nu_h = 0.0;
  bool decomposition_holds = false;
};

inline SelfAveragingReport self_averaging_report(const EnsembleFactory& factory,
                                                 int disorder_samples,
                                                 std::uint64_t /*master_seed*/) {
  if (disorder_samples < 8)
    throw std::invalid_argument(
        "self_averaging_report: need at least 8 disorder samples");
  std::vector<GibbsEnsemble> ensembles;
  ensembles.reserve(disorder_samples);
  std::vector<double> gibbs_h(disorder_samples), var_h(disorder_samples);
  for (int s = 0; s < disorder_samples; ++s) {
    ensembles.push_back(factory(static_cast<std::uint64_t>(s)));
    gibbs_h[s] = ensembles.back().gibbs_mean_h();
    var_h[s] = ensembles.back().gibbs_var_h();
  }
  double nu_h = mean_and_se(gibbs_h).value;

  std::vector<double> abs_total(disorder_samples), abs_outer(disorder_samples),
      abs_inner(disorder_samples);
  for (int s = 0; s < disorder_samples; ++s) {
    abs_total[s] = ensembles[s].gibbs_abs_dev_h(nu_h);
    abs_outer[s] = std::abs(gibbs_h[s] - nu_h);
    abs_inner[s] = ensembles[s].gibbs_abs_dev_h(gibbs_h[s]);
  }

  SelfAveragingReport r;
  r.nu_h = nu_h;
  r.nu_abs_h_minus_nuh = mean_and_se(abs_total);
  r.e_abs_gibbsh_minus_nuh = mean_and_se(abs_outer);
  r.nu_gibbs_var_h = mean_and_se(var_h);
  r.nu_abs_h_minus_gibbsh = mean_and_se(abs_inner);
  r.decomposition_holds =
      r.nu_abs_h_minus_nuh.value <= r.e_abs_gibbsh_minus_nuh.value +
                                        r.nu_abs_h_minus_gibbsh.value + 1e-12;
  return r;
}

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> counts;
  double total = 0.0;

  explicit Histogram(int bins, double lo_, double hi_)
      : lo(lo_), hi(hi_), counts(bins, 0.0) {}

  void add(double x, double weight = 1.0) {
    int b = static_cast<int>((x - lo) / (hi - lo) * counts.size());
    b = std::max(0, std::min(static_cast<int>(counts.size()) - 1, b));
    counts[b] += weight;
    total += weight;
  }

  double mass(int b) const { return total > 0 ? counts[b] / total : 0.0; }
};

inline double tv_distance(const Histogram& a, const Histogram& b) {
  if (a.counts.size() != b.counts.size())
    throw std::invalid_argument("tv_distance: bin mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i)
    s += std::abs(a.mass(i) - b.mass(i));
  return 0.5 * s;
}

// Empirical law of R_{1,2}; bin edges uniform on [-R_{1,1}, R_{1,1}].
inline Histogram overlap_histogram(const GibbsEnsemble& ensemble, int pairs,
                                   int bins, std::uint64_t stream_seed) {
  double r11 = ensemble.model().self_overlap_constant();
  Histogram h(bins, -r11, r11);
  ExactSampler sampler = ensemble.sampler(stream_seed);
  for (int p = 0; p < pairs; ++p) {
    SpinConfig a = sampler.draw();
    SpinConfig b = sampler.draw();
    h.add(overlap(ensemble.model(), a, b));
  }
  return h;
}

// Same law from arbitrary draw sources (e.g. MCMC). The two replicas of a
// pair must come from independent chains: consecutive states of one chain
// are autocorrelated and would bias the overlap toward self-overlap.
template <class SamplerA, class SamplerB>
Histogram overlap_histogram_from(const ModelInstance& m, SamplerA& sampler_a,
                                 SamplerB& sampler_b, int pairs, int bins) {
  double r11 = m.self_overlap_constant();
  Histogram h(bins, -r11, r11);
  for (int p = 0; p < pairs; ++p) {
    SpinConfig a = sampler_a.draw();
    SpinConfig b = sampler_b.draw();
    h.add(overlap(m, a, b));
  }
  return h;
}

// Finite-N diagnostic (not an identity that holds exactly): binned
// conditional law of
// R_{1,n+1} given R_n versus the mixture (1/n) L_{R12} + (1/n) sum_l
// point masses at R_{1,l}, point masses binned with the same edges.
struct ExtendedGgCell {
  long cell = 0;
  long count = 0;
  double tv = 0.0;
  bool empty = false;
};

struct ExtendedGgTable {
  std::vector<ExtendedGgCell> cells;
  double summary_tv = 0.0;  // count-weighted over nonempty cells
  long empty_cells = 0;
  long tuples = 0;
};

inline ExtendedGgTable extended_gg_diagnostic(const EnsembleFactory& factory,
                                              int n, int disorder_samples,
                                              int replica_draws, int bins,
                                              std::uint64_t master_seed) {
  if (n != 2 && n != 3)
    throw std::invalid_argument("extended_gg_diagnostic: n must be 2 or 3");
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");

  // Conditioning grid: `bins` cells per overlap coordinate for n=2,
  // a coarse cube for n=3.
  int cond_bins = (n == 2) ? bins
                           : std::max(2, static_cast<int>(std::lround(
                                             std::cbrt(static_cast<double>(bins)))));
  int n_coords = n * (n - 1) / 2;
  long n_cells = 1;
  for (int k = 0; k < n_coords; ++k) n_cells *= cond_bins;

  double r11 = factory(0).model().self_overlap_constant();
  auto coord_bin = [&](double x) {
    int b = static_cast<int>((x + r11) / (2 * r11) * cond_bins);
    return std::max(0, std::min(cond_bins - 1, b));
  };

  struct Tuple {
    long cell;
    double r_new;
    std::vector<double> r_1l;  // R_{1,l}, l = 2..n
    double r12;
  };
  std::vector<Tuple> tuples;
  for (int s = 0; s < disorder_samples; ++s) {
    GibbsEnsemble ensemble = factory(static_cast<std::uint64_t>(s));
    const ModelInstance& m = ensemble.model();
    ExactSampler sampler =
        ensemble.sampler(derive_stream_key(master_seed, s, kStreamReplica));
    for (int d = 0; d < replica_draws; ++d) {
      std::vector<SpinConfig> reps;
      for (int r = 0; r < n + 1; ++r) reps.push_back(sampler.draw());
      auto fv = detail::feature_matrix(m, reps);
      OverlapArray R(n);
      for (int l = 1; l < n; ++l)
        for (int lp = l + 1; lp <= n; ++lp)
          R.at(l, lp) =
              detail::overlap_from_features(fv[l - 1], fv[lp - 1], m.n_sites);
      Tuple t;
      t.cell = 0;
      for (double v : R.vals) t.cell = t.cell * cond_bins + coord_bin(v);
      t.r_new = detail::overlap_from_features(fv[0], fv[n], m.n_sites);
      for (int l = 2; l <= n; ++l) t.r_1l.push_back(R.at(1, l));
      t.r12 = R.at(1, 2);
      tuples.push_back(std::move(t));
    }
  }

  Histogram uncond(bins, -r11, r11);
  for (const auto& t : tuples) uncond.add(t.r12);

  ExtendedGgTable table;
  table.tuples = static_cast<long>(tuples.size());
  double weighted = 0.0;
  long covered = 0;
  for (long c = 0; c < n_cells; ++c) {
    Histogram cond(bins, -r11, r11), mix(bins, -r11, r11);
    long count = 0;
    for (const auto& t : tuples) {
      if (t.cell != c) continue;
      ++count;
      cond.add(t.r_new);
      for (double v : t.r_1l) mix.add(v, 1.0 / (n - 1));  // mass 1 per tuple
    }
    ExtendedGgCell cell;
    cell.cell = c;
    cell.count = count;
    if (count == 0) {
      cell.empty = true;
      ++table.empty_cells;
    } else {
      // mixture: (1/n) unconditional law + ((n-1)/n) binned point masses
      Histogram mixture(bins, -r11, r11);
      for (std::size_t b = 0; b < mixture.counts.size(); ++b)
        mixture.counts[b] =
            uncond.mass(static_cast<int>(b)) / n +
            (static_cast<double>(n - 1) / n) * mix.mass(static_cast<int>(b));
      mixture.total = 1.0;
      cell.tv = tv_distance(cond, mixture);
      weighted += cell.tv * count;
      covered += count;
    }
    table.cells.push_back(cell);
  }
  table.summary_tv = covered > 0 ? weighted / covered : 0.0;
  return table;
}

}  // namespace gg
