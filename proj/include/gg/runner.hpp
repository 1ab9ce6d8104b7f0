#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gg/config.hpp"
#include "gg/harness.hpp"
#include "gg/hermite.hpp"
#include "gg/observables.hpp"
#include "gg/report.hpp"

namespace gg {

struct CheckInfo {
  std::string name;
  std::string description;
};

inline const std::vector<CheckInfo>& known_checks() {
  static const std::vector<CheckInfo> checks = {
      {"gg_residual",
       "delta_N estimator for a named overlap functional (contracted to "
       "|delta| <= 3 se when functional = one)"},
      {"gg_residual_f1", "gg_residual with f = 1; exchangeability contract"},
      {"self_averaging",
       "nu(|H - nu(H)|) with the triangle-decomposition contract"},
      {"quenched_free_energy", "p_N = E(psi_N) over disorder samples"},
      {"psi_variance", "sample variance of psi_N over disorder samples"},
      {"concentration",
       "Var(psi_N) N^2/(gamma^2 |A_N|), bounded-ratio contract across N"},
      {"gamma_derivative", "<H> vs centered finite difference of psi_N"},
      {"convexity", "second differences of psi_N(gamma) and chord bounds"},
      {"covariance_derivative",
       "Gibbs covariance vs mixed second derivative of psi_N"},
      {"averaged_identity", "trapezoid integral of |delta_N| over gamma"},
      {"proof_bound", "E<(H-<H>)^2> against the closing variance bound"},
      {"overlap_histogram_tv", "MCMC vs exact overlap histogram TV distance"},
      {"extended_gg", "conditional-law diagnostic summary TV (finite-N)"},
      {"hermite_psi", "Hermite variance truncation vs quadrature for psi_N"},
  };
  return checks;
}

inline bool is_known_check(const std::string& name) {
  for (const auto& c : known_checks())
    if (c.name == name) return true;
  return false;
}

namespace detail {

inline ReportRow base_row(const std::string& check, const ModelSpec& spec) {
  ReportRow row;
  row.check = check;
  row.model = spec.kind;
  row.n_sites = n_sites(spec);
  row.beta = spec.beta;
  row.gamma = spec.gamma;
  row.h = spec.h;
  return row;
}

inline ReportRow run_cell(const CheckSpec& check, const ModelSpec& spec,
                          std::uint64_t seed) {
  const nlohmann::json& o = check.options;
  std::string name = check.name;
  std::string functional_name = o.value("functional", std::string("R12"));
  if (name == "gg_residual_f1") {
    name = "gg_residual";
    functional_name = "one";
  }

  if (name == "gg_residual") {
    int n = o.value("n", 2);
    int ds = o.value("disorder_samples", 64);
    int rd = o.value("replica_draws", 256);
    ModelInstance probe = build_model(spec, seed, 0, 0);
    double r11 = probe.self_overlap_constant();
    OverlapFunctional f = functional_by_name(functional_name, n, r11);
    ResidualEstimate r =
        gg_residual(make_factory(spec, seed), n, f, ds, rd, seed);
    ReportRow row = base_row(check.name, spec);
    row.arity = n;
    row.functional = functional_name;
    row.estimate = r.delta_hat;
    row.std_error = r.std_error;
    if (functional_name == "one") {
      row.contract = "|estimate| <= 3 std_error";
      row.pass =
          std::abs(r.delta_hat) <= 3.0 * r.std_error ? "pass" : "fail";
    }
    return row;
  }

  if (name == "self_averaging") {
    int ds = o.value("disorder_samples", 64);
    SelfAveragingReport rep =
        self_averaging_report(make_factory(spec, seed), ds, seed);
    ReportRow row = base_row(check.name, spec);
    row.estimate = rep.nu_abs_h_minus_nuh.value;
    row.std_error = rep.nu_abs_h_minus_nuh.std_error;
    row.contract = "triangle decomposition holds";
    row.pass = rep.decomposition_holds ? "pass" : "fail";
    return row;
  }

  if (name == "quenched_free_energy" || name == "psi_variance") {
    int ns = o.value("samples", 64);
    FreeEnergyStats st = quenched_free_energy(spec, ns, seed);
    ReportRow row = base_row(check.name, spec);
    if (name == "quenched_free_energy") {
      row.estimate = st.p_n.mean;
      row.std_error = st.p_n.std_error;
    } else {
      row.estimate = st.psi_variance;
    }
    return row;
  }

  if (name == "concentration") {
    int ns = o.value("samples", 128);
    ReportRow row = base_row(check.name, spec);
    ConcentrationReport rep =
        concentration_check(spec, ns, {n_sites(spec)}, seed);
    if (rep.skipped) {
      row.contract = rep.note;
      row.pass = "na";
      return row;
    }
    row.estimate = rep.rows.front().ratio_total;
    return row;
  }

  if (name == "gamma_derivative") {
    double step = o.value("step", 1e-4);
    DerivativeCheck c = gamma_derivative_check(spec, step, seed);
    ReportRow row = base_row(check.name, spec);
    row.estimate = c.abs_error;
    row.contract = "abs_error <= max(1e-6, step^2 M)";
    row.pass = c.pass ? "pass" : "fail";
    return row;
  }

  if (name == "convexity") {
    double lo = o.value("gamma_min", -1.0);
    double hi = o.value("gamma_max", 1.0);
    int pts = o.value("points", 21);
    std::vector<double> grid(pts);
    for (int i = 0; i < pts; ++i) grid[i] = lo + (hi - lo) * i / (pts - 1);
    ConvexityCheck c = convexity_check(spec, grid, seed);
    ReportRow row = base_row(check.name, spec);
    row.estimate = c.worst_second_difference;
    row.contract = "second differences >= -1e-9, chords hold";
    row.pass = c.ok ? "pass" : "fail";
    return row;
  }

  if (name == "covariance_derivative") {
    int pairs = o.value("pairs", 20);
    double step = o.value("step", 1e-3);
    CovarianceCheck c = covariance_derivative_check(spec, pairs, step, seed);
    ReportRow row = base_row(check.name, spec);
    row.estimate = c.max_discrepancy;
    row.contract = "max discrepancy <= 1e-5";
    row.pass = c.pass ? "pass" : "fail";
    return row;
  }

  if (name == "averaged_identity") {
    int n = o.value("n", 2);
    double lo = o.value("gamma_lo", 0.2);
    double hi = o.value("gamma_hi", 1.0);
    int pts = o.value("grid_points", 9);
    int ds = o.value("disorder_samples", 32);
    int rd = o.value("replica_draws", 128);
    ModelInstance probe = build_model(spec, seed, 0, 0);
    OverlapFunctional f =
        functional_by_name(functional_name, n, probe.self_overlap_constant());
    AveragedScan scan =
        averaged_identity_scan(spec, n, f, lo, hi, pts, ds, rd, seed);
    ReportRow row = base_row(check.name, spec);
    row.arity = n;
    row.functional = functional_name;
    row.estimate = scan.integral;
    row.std_error = scan.integral_se;
    return row;
  }

  if (name == "proof_bound") {
    int ns = o.value("samples", 64);
    ProofBoundCheck c = proof_bound_check(spec, ns, seed);
    ReportRow row = base_row(check.name, spec);
    row.estimate = c.lhs.value;
    row.std_error = c.lhs.std_error;
    row.contract = "lhs <= rhs + 3 std_error";
    row.pass = c.holds ? "pass" : "fail";
    return row;
  }

  if (name == "overlap_histogram_tv") {
    int pairs = o.value("pairs", 4000);
    int bins = o.value("bins", 41);
    int burn_in = o.value("burn_in", 100);
    int thin = o.value("thin", 10);
    ModelInstance m = build_model(spec, seed, 0, 0);
    GibbsEnsemble exact = GibbsEnsemble::exact(m);
    Histogram ref = overlap_histogram(
        exact, pairs, bins, derive_stream_key(seed, 1, kStreamReplica));
    auto shared = std::make_shared<ModelInstance>(m);
    McmcSampler chain_a(shared, burn_in, thin,
                        derive_stream_key(seed, 2, kStreamMcmc));
    McmcSampler chain_b(shared, burn_in, thin,
                        derive_stream_key(seed, 3, kStreamMcmc));
    Histogram got = overlap_histogram_from(m, chain_a, chain_b, pairs, bins);
    ReportRow row = base_row(check.name, spec);
    row.estimate = tv_distance(ref, got);
    row.contract = "TV < 0.05";
    row.pass = row.estimate < 0.05 ? "pass" : "fail";
    return row;
  }

  if (name == "extended_gg") {
    int n = o.value("n", 2);
    int ds = o.value("disorder_samples", 16);
    int rd = o.value("replica_draws", 256);
    int bins = o.value("bins", 41);
    ExtendedGgTable t =
        extended_gg_diagnostic(make_factory(spec, seed), n, ds, rd, bins, seed);
    ReportRow row = base_row(check.name, spec);
    row.arity = n;
    row.estimate = t.summary_tv;
    return row;
  }

  if (name == "hermite_psi") {
    int K = o.value("K", 8);
    ModelInstance probe = build_model(spec, seed, 0, 0);
    if (probe.n_sites > 4 || probe.feature_count() > 4) {
      ReportRow row = base_row(check.name, spec);
      row.contract = "skipped: hermite_psi needs N <= 4 and |A| <= 4";
      row.pass = "na";
      return row;
    }
    PsiVarianceComparison c = psi_variance_via_hermite(spec, K, seed);
    ReportRow row = base_row(check.name, spec);
    double gap = c.quadrature > 0.0
                     ? std::abs(c.hermite.truncated_sum - c.quadrature) /
                           c.quadrature
                     : std::abs(c.hermite.truncated_sum);
    row.estimate = gap;
    row.contract = "relative gap <= 0.01 and monotone in K";
    row.pass = (gap <= 0.01 && c.monotone) ? "pass" : "fail";
    return row;
  }

  throw ConfigError("unknown check name: " + check.name);
}

}  // namespace detail

// Runs the full (check x N) matrix. Cells are independent work units;
// aggregation order is fixed by cell index regardless of worker count.
inline Report run_experiment(const ExperimentConfig& cfg, int workers = 1) {
  for (const auto& c : cfg.checks)
    if (!is_known_check(c.name)) throw ConfigError("unknown check: " + c.name);

  struct Cell {
    const CheckSpec* check;
    ModelSpec spec;
  };
  std::vector<Cell> cells;
  for (const auto& check : cfg.checks)
    for (int n : cfg.n_list) cells.push_back({&check, with_n(cfg.model, n)});

  std::vector<ReportRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      rows[i] = detail::run_cell(*cells[i].check, cells[i].spec, cfg.seed);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // cross-N contract: the concentration ratio must not grow with N
  for (const auto& check : cfg.checks) {
    if (check.name != "concentration") continue;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].check == &check && rows[i].contract.empty())
        idx.push_back(i);
    if (idx.empty()) continue;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t i : idx) {
      double v = rows[i].estimate;
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    bool bounded = lo <= 0.0 || hi / lo < 10.0;
    for (std::size_t i : idx) {
      rows[i].contract = "ratio max/min < 10 across N";
      rows[i].pass = bounded ? "pass" : "fail";
    }
  }

  Report rep;
  rep.config_hash = cfg.hash();
  rep.config_hash_base = cfg.hash_base();
  auto now = std::chrono::system_clock::now();
  rep.timestamp =
      std::to_string(std::chrono::duration_cast<std::chrono::seconds>(
                         now.time_since_epoch())
                         .count());
  rep.rows = std::move(rows);
  return rep;
}

}  // namespace gg
