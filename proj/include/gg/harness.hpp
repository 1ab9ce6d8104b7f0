#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/gibbs.hpp"
#include "gg/model.hpp"
#include "gg/observables.hpp"

namespace gg {

inline constexpr std::uint64_t kStreamPairChoice = 6;

// Model block of the experiment config.
struct ModelSpec {
  std::string kind = "sk";  // sk | ea | rfim | pspin
  int n = 8;                // site count (sk, pspin)
  std::vector<int> dims;    // lattice dims (ea, rfim)
  bool periodic = true;
  double beta = 1.0;
  double gamma = 0.5;
  double h = 0.3;
  double coupling = 1.0;  // rfim ferromagnetic J
  int p = 3;              // pspin order
};

inline int n_sites(const ModelSpec& spec) {
  if (spec.kind == "ea" || spec.kind == "rfim") {
    int n = 1;
    for (int d : spec.dims) n *= d;
    return n;
  }
  return spec.n;
}

inline ModelSpec with_n(ModelSpec spec, int n) {
  if (spec.kind == "ea" || spec.kind == "rfim")
    spec.dims = {n};  // ring of n sites
  else
    spec.n = n;
  return spec;
}

inline ModelSpec with_gamma(ModelSpec spec, double gamma) {
  spec.gamma = gamma;
  return spec;
}

// Base and perturbation disorder layers carry independent indices; fixing
// base_index while varying pert_index realizes the framework's setting where
// only the perturbation field is random.
inline ModelInstance build_model(const ModelSpec& spec,
                                 std::uint64_t master_seed,
                                 std::uint64_t base_index,
                                 std::uint64_t pert_index) {
  if (spec.kind == "sk")
    return build_sk(spec.n, spec.beta, spec.gamma, spec.h, master_seed,
                    pert_index, base_index, pert_index);
  if (spec.kind == "ea")
    return build_ea(spec.dims, spec.periodic, spec.gamma, master_seed,
                    pert_index);
  if (spec.kind == "rfim")
    return build_rfim(spec.dims, spec.periodic, spec.coupling, spec.gamma,
                      master_seed, pert_index);
  if (spec.kind == "pspin")
    return build_pspin(spec.n, spec.p, spec.gamma, master_seed, pert_index);
  throw std::invalid_argument("unknown model kind: " + spec.kind);
}

inline ModelInstance build_model(const ModelSpec& spec,
                                 std::uint64_t master_seed,
                                 std::uint64_t sample_index) {
  return build_model(spec, master_seed, sample_index, sample_index);
}

inline EnsembleFactory make_factory(ModelSpec spec, std::uint64_t master_seed,
                                    bool perturbation_only = false) {
  return [spec, master_seed, perturbation_only](std::uint64_t s) {
    return GibbsEnsemble::exact(
        build_model(spec, master_seed, perturbation_only ? 0 : s, s));
  };
}

struct QuenchedEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
  std::vector<double> values;
};

inline QuenchedEstimate quenched(const std::vector<double>& values) {
  Estimate e = mean_and_se(values);
  return {e.value, e.std_error, static_cast<int>(values.size()), values};
}

inline double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  Estimate e = mean_and_se(xs);
  return e.std_error * e.std_error * xs.size();
}

struct FreeEnergyStats {
  QuenchedEstimate p_n;      // E(psi_N)
  double psi_variance = 0.0;  // sample variance of psi_N
};

// p_N and Var(psi_N) over i.i.d. disorder draws, exact psi per sample.
inline FreeEnergyStats quenched_free_energy(const ModelSpec& spec,
                                            int n_samples,
                                            std::uint64_t master_seed,
                                            bool perturbation_only = false) {
  if (n_samples < 8)
    throw std::invalid_argument("quenched_free_energy: need >= 8 samples");
  std::vector<double> psi(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    ModelInstance m =
        build_model(spec, master_seed, perturbation_only ? 0 : s, s);
    psi[s] = free_energy_per_site(m);
  }
  FreeEnergyStats out;
  out.p_n = quenched(psi);
  out.psi_variance = sample_variance(psi);
  return out;
}

// Normalized concentration ratios Var(psi_N) N^2 / (gamma^2 |A_N|) per N,
// in both resampling modes. The bound's constant is unspecified, so we
// report the ratios and flag growth instead of asserting a value.
struct ConcentrationRow {
  int n_sites = 0;
  long feature_count = 0;
  double ratio_total = 0.0;
  double ratio_pert_only = 0.0;
};

struct ConcentrationReport {
  bool skipped = false;
  std::string note;
  std::vector<ConcentrationRow> rows;
  bool bounded_total = true;
  bool bounded_pert_only = true;
};

inline ConcentrationReport concentration_check(const ModelSpec& spec,
                                               int n_samples,
                                               const std::vector<int>& n_list,
                                               std::uint64_t master_seed) {
  ConcentrationReport rep;
  if (spec.gamma == 0.0) {
    rep.skipped = true;
    rep.note = "gamma = 0: the concentration bound is vacuous";
    return rep;
  }
  double g2 = spec.gamma * spec.gamma;
  for (int n : n_list) {
    ModelSpec s = with_n(spec, n);
    ModelInstance probe = build_model(s, master_seed, 0, 0);
    long a = probe.feature_count();
    ConcentrationRow row;
    row.n_sites = n_sites(s);
    row.feature_count = a;
    double norm = static_cast<double>(row.n_sites) * row.n_sites / (g2 * a);
    row.ratio_total =
        quenched_free_energy(s, n_samples, master_seed, false).psi_variance *
        norm;
    row.ratio_pert_only =
        quenched_free_energy(s, n_samples, master_seed, true).psi_variance *
        norm;
    rep.rows.push_back(row);
  }
  auto bounded = [&](auto get) {
    double lo = get(rep.rows.front()), hi = lo;
    for (const auto& r : rep.rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    return lo <= 0.0 ? true : hi / lo < 10.0;
  };
  rep.bounded_total =
      bounded([](const ConcentrationRow& r) { return r.ratio_total; });
  rep.bounded_pert_only =
      bounded([](const ConcentrationRow& r) { return r.ratio_pert_only; });
  return rep;
}

// <H> against the centered finite difference of psi_N in gamma, same
// disorder on both sides.
struct DerivativeCheck {
  double lhs = 0.0;  // <H>
  double rhs = 0.0;  // (psi(gamma+step) - psi(gamma-step)) / (2 step)
  double abs_error = 0.0;
  double truncation_scale = 0.0;  // M: |psi'''|/6 estimate
  bool pass = false;
};

inline DerivativeCheck gamma_derivative_check(const ModelSpec& spec,
                                              double step,
                                              std::uint64_t master_seed) {
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  ModelInstance m = build_model(spec, master_seed, 0, 0);
  GibbsEnsemble e = GibbsEnsemble::exact(m);
  DerivativeCheck out;
  out.lhs = e.gibbs_mean_h();
  double fp = free_energy_per_site(m.with_gamma(spec.gamma + step));
  double fm = free_energy_per_site(m.with_gamma(spec.gamma - step));
  out.rhs = (fp - fm) / (2.0 * step);
  out.abs_error = std::abs(out.lhs - out.rhs);
  // third-derivative scale from a wide stencil
  double w = 1e-2;
  double f2p = free_energy_per_site(m.with_gamma(spec.gamma + 2 * w));
  double f1p = free_energy_per_site(m.with_gamma(spec.gamma + w));
  double f1m = free_energy_per_site(m.with_gamma(spec.gamma - w));
  double f2m = free_energy_per_site(m.with_gamma(spec.gamma - 2 * w));
  double third = (f2p - 2 * f1p + 2 * f1m - f2m) / (2 * w * w * w);
  out.truncation_scale = std::abs(third) / 6.0;
  out.pass = out.abs_error <= std::max(1e-6, step * step * out.truncation_scale);
  return out;
}

// Convexity of psi_N on a gamma grid (same disorder everywhere), plus the
// chord bound <H> <= (psi(g') - psi(g)) / (g' - g).
struct ConvexityCheck {
  bool ok = false;
  double worst_second_difference = 0.0;  // most negative slope increment
  double worst_chord_violation = 0.0;
};

inline ConvexityCheck convexity_check(const ModelSpec& spec,
                                      const std::vector<double>& gamma_grid,
                                      std::uint64_t master_seed) {
  if (gamma_grid.size() < 3) throw std::invalid_argument("grid too small");
  ModelInstance base = build_model(spec, master_seed, 0, 0);
  std::size_t g = gamma_grid.size();
  std::vector<double> psi(g), mean_h(g);
  for (std::size_t i = 0; i < g; ++i) {
    GibbsEnsemble e = GibbsEnsemble::exact(base.with_gamma(gamma_grid[i]));
    psi[i] = e.free_energy_per_site();
    mean_h[i] = e.gibbs_mean_h();
  }
  ConvexityCheck out;
  double worst = 0.0;
  for (std::size_t i = 0; i + 2 < g; ++i) {
    double s1 = (psi[i + 1] - psi[i]) / (gamma_grid[i + 1] - gamma_grid[i]);
    double s2 =
        (psi[i + 2] - psi[i + 1]) / (gamma_grid[i + 2] - gamma_grid[i + 1]);
    worst = std::min(worst, s2 - s1);
  }
  out.worst_second_difference = worst;
  double chord_worst = 0.0;
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i + 1; j < g; ++j) {
      double chord = (psi[j] - psi[i]) / (gamma_grid[j] - gamma_grid[i]);
      chord_worst = std::max(chord_worst, mean_h[i] - chord);  // upper chord
      chord_worst = std::max(chord_worst, chord - mean_h[j]);  // lower chord
    }
  out.worst_chord_violation = chord_worst;
  out.ok = worst >= -1e-9 && chord_worst <= 1e-9;
  return out;
}

// Exact Gibbs covariance of (f_alpha, f_alpha') against the mixed second
// finite difference of psi_N in the corresponding perturbation gaussians:
// (1/N)(<f f'> - <f><f'>) = (1/gamma^2) d^2 psi / dg dg'.
struct CovarianceCheck {
  double max_discrepancy = 0.0;
  int pairs_tested = 0;
  bool pass = false;
};

inline CovarianceCheck covariance_derivative_check(const ModelSpec& spec,
                                                   int pairs_to_test,
                                                   double step,
                                                   std::uint64_t master_seed) {
  if (spec.gamma == 0.0)
    throw std::invalid_argument("covariance check requires gamma != 0");
  if (step <= 0.0) throw std::invalid_argument("step must be positive");
  ModelInstance m = build_model(spec, master_seed, 0, 0);
  GibbsEnsemble e = GibbsEnsemble::exact(m);
  const auto& favg = e.feature_averages();
  int na = m.feature_count();
  CounterRng rng(master_seed, 0, kStreamPairChoice);

  CovarianceCheck out;
  double g2 = spec.gamma * spec.gamma;
  for (int t = 0; t < pairs_to_test; ++t) {
    int a = static_cast<int>(rng.uniform_below(na));
    int b = static_cast<int>(rng.uniform_below(na));
    double pair_mean = e.expectation([&](const EnumState& s) {
      return s.feature_values[a] * s.feature_values[b];
    });
    double lhs = (pair_mean - favg[a] * favg[b]) / m.n_sites;

    double ga = m.disorder.perturbation[a];
    double gb = m.disorder.perturbation[b];
    double fd;
    if (a == b) {
      double fp = free_energy_per_site(m.with_perturbation(a, ga + step));
      double f0 = e.free_energy_per_site();
      double fm = free_energy_per_site(m.with_perturbation(a, ga - step));
      fd = (fp - 2 * f0 + fm) / (step * step);
    } else {
      double fpp = free_energy_per_site(
          m.with_perturbation(a, ga + step).with_perturbation(b, gb + step));
      double fpm = free_energy_per_site(
          m.with_perturbation(a, ga + step).with_perturbation(b, gb - step));
      double fmp = free_energy_per_site(
          m.with_perturbation(a, ga - step).with_perturbation(b, gb + step));
      double fmm = free_energy_per_site(
          m.with_perturbation(a, ga - step).with_perturbation(b, gb - step));
      fd = (fpp - fpm - fmp + fmm) / (4 * step * step);
    }
    double rhs = fd / g2;
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(lhs - rhs));
    ++out.pairs_tested;
  }
  out.pass = out.max_discrepancy <= 1e-5;
  return out;
}

// Trapezoid estimate of the gamma-integral of |delta_N| with common random
// numbers across grid points (the disorder draws do not depend on gamma).
struct AveragedScan {
  double integral = 0.0;
  double integral_se = 0.0;
  std::vector<double> gammas;
  std::vector<ResidualEstimate> residuals;
};

inline AveragedScan averaged_identity_scan(const ModelSpec& spec, int n,
                                           const OverlapFunctional& functional,
                                           double gamma_lo, double gamma_hi,
                                           int grid_points,
                                           int disorder_samples,
                                           int replica_draws,
                                           std::uint64_t master_seed) {
  if (grid_points < 5)
    throw std::invalid_argument("averaged_identity_scan: need >= 5 points");
  AveragedScan out;
  double step = (gamma_hi - gamma_lo) / (grid_points - 1);
  double var = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    double g = gamma_lo + i * step;
    ResidualEstimate r =
        gg_residual(make_factory(with_gamma(spec, g), master_seed), n,
                    functional, disorder_samples, replica_draws, master_seed);
    double w = (i == 0 || i == grid_points - 1) ? step / 2 : step;
    out.integral += w * std::abs(r.delta_hat);
    var += w * w * r.std_error * r.std_error;
    out.gammas.push_back(g);
    out.residuals.push_back(r);
  }
  out.integral_se = std::sqrt(var);
  return out;
}

// E<(H - <H>)^2> against the closing variance bound
// |A_N| sqrt(4! Var(psi_N)) / (N gamma^2) + 2 |A_N| / N^2,
// both sides estimated from the same disorder samples.
struct ProofBoundCheck {
  Estimate lhs;
  double rhs = 0.0;
  double psi_variance = 0.0;
  bool holds = false;
};

inline ProofBoundCheck proof_bound_check(const ModelSpec& spec, int samples,
                                         std::uint64_t master_seed) {
  if (spec.gamma == 0.0)
    throw std::invalid_argument("proof bound requires gamma != 0");
  if (samples < 8)
    throw std::invalid_argument("proof_bound_check: need >= 8 samples");
  std::vector<double> var_h(samples), psi(samples);
  long a = 0;
  int n = 0;
  for (int s = 0; s < samples; ++s) {
    ModelInstance m = build_model(spec, master_seed, s, s);
    GibbsEnsemble e = GibbsEnsemble::exact(m);
    var_h[s] = e.gibbs_var_h();
    psi[s] = e.free_energy_per_site();
    a = m.feature_count();
    n = m.n_sites;
  }
  ProofBoundCheck out;
  out.lhs = mean_and_se(var_h);
  out.psi_variance = sample_variance(psi);
  double g2 = spec.gamma * spec.gamma;
  out.rhs = a * std::sqrt(24.0 * out.psi_variance) / (n * g2) +
            2.0 * a / (static_cast<double>(n) * n);
  out.holds = out.lhs.value <= out.rhs + 3.0 * out.lhs.std_error;
  return out;
}

}  // namespace gg
