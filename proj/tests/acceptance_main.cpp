// Acceptance suite: one pass/fail line per criterion, exit 0 iff every hard
// criterion passes. Criterion 10 is trend evidence and reports a warning
// instead of failing (finite-size behavior at one parameter point cannot be
// guaranteed).
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gg/config.hpp"
#include "gg/harness.hpp"
#include "gg/hermite.hpp"
#include "gg/observables.hpp"
#include "gg/report.hpp"
#include "gg/runner.hpp"

using namespace gg;

namespace {

constexpr std::uint64_t kSeed = 20240901;
int g_failures = 0;

void verdict(int criterion, bool pass, const std::string& detail,
             bool hard = true) {
  const char* tag = pass ? "[PASS]" : (hard ? "[FAIL]" : "[WARN]");
  std::printf("%s criterion %2d: %s\n", tag, criterion, detail.c_str());
  if (!pass && hard) ++g_failures;
}

struct ParamPoint {
  double beta, gamma, h;
};

const std::vector<ParamPoint> kPoints = {
    {1.0, 0.5, 0.3}, {0.7, 0.8, 0.0}, {1.3, 0.3, 0.6}};

ModelSpec make_spec(const std::string& kind, int n, const ParamPoint& p) {
  ModelSpec s;
  s.kind = kind;
  if (kind == "ea")
    s.dims = {n};
  else
    s.n = n;
  s.beta = p.beta;
  s.gamma = p.gamma;
  s.h = p.h;
  return s;
}

// ---- criterion 1: exchangeability, f = 1, across the model matrix --------
void criterion_1() {
  int cells = 0, ok = 0;
  double worst = 0.0;
  std::string worst_cell;
  for (const std::string& kind : {std::string("sk"), std::string("ea")})
    for (int n : {6, 10, 14})
      for (std::size_t p = 0; p < kPoints.size(); ++p) {
        ModelSpec spec = make_spec(kind, n, kPoints[p]);
        ResidualEstimate r =
            gg_residual(make_factory(spec, kSeed), 2,
                        functional_by_name("one", 2), 256, 512, kSeed);
        double z = r.std_error > 0 ? std::abs(r.delta_hat) / r.std_error : 0.0;
        ++cells;
        if (z <= 3.0) ++ok;
        if (z > worst) {
          worst = z;
          worst_cell = kind + " N=" + std::to_string(n) + " point " +
                       std::to_string(p);
        }
      }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "exchangeability f=1: %d/%d cells with |delta| <= 3 se "
                "(worst z = %.2f at %s)",
                ok, cells, worst, worst_cell.c_str());
  verdict(1, ok == cells, buf);
}

// ---- criterion 2: product-measure closed forms ----------------------------
void criterion_2() {
  double h = 0.4;
  ModelSpec spec = make_spec("sk", 10, {0.0, 0.0, h});
  ModelInstance m = build_model(spec, kSeed, 0, 0);
  GibbsEnsemble e = GibbsEnsemble::exact(m);
  bool ok = true;
  std::string why;
  if (std::abs(e.free_energy_per_site() - std::log(2.0 * std::cosh(h))) >
      1e-12) {
    ok = false;
    why += " psi";
  }
  for (double v : e.feature_averages())
    if (std::abs(v - std::tanh(h)) > 1e-12) {
      ok = false;
      why += " <sigma>";
      break;
    }
  if (std::abs(e.pair_overlap_moment() - std::tanh(h) * std::tanh(h)) > 1e-10) {
    ok = false;
    why += " nu(R12)";
  }
  // f = 1: the only functional whose residual vanishes identically at
  // finite N for independent spins (for f = R12 it is -(1-m^2)^2/(2N)).
  ResidualEstimate r = gg_residual(make_factory(spec, kSeed), 2,
                                   functional_by_name("one", 2), 64, 256, kSeed);
  double z = r.std_error > 0 ? std::abs(r.delta_hat) / r.std_error : 0.0;
  if (z > 3.0) {
    ok = false;
    why += " delta";
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "product measure closed forms (delta z = %.2f)%s", z,
                ok ? "" : (": failed" + why).c_str());
  verdict(2, ok, buf);
}

// ---- criterion 3: Gray-code engine vs naive oracle ------------------------
double naive_log_partition(const ModelInstance& m) {
  const std::uint64_t total = 1ULL << m.n_sites;
  long double z = 0.0L;
  double mx = -1e300;
  std::vector<double> lw(total);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    lw[mask] = -m.energy(SpinConfig::from_mask(m.n_sites, mask));
    mx = std::max(mx, lw[mask]);
  }
  for (std::uint64_t mask = 0; mask < total; ++mask)
    z += std::exp(static_cast<long double>(lw[mask] - mx));
  return mx + static_cast<double>(std::log(z));
}

void criterion_3() {
  int checked = 0, ok = 0;
  for (int n : {4, 8, 12})
    for (int s = 0; s < 20; ++s) {
      ModelInstance m = build_sk(n, 0.9, 0.6, 0.25, kSeed + 100, s);
      GibbsEnsemble e = GibbsEnsemble::exact(m);
      double want = naive_log_partition(m);
      bool good = std::abs(e.log_partition() - want) <=
                  1e-9 * std::max(1.0, std::abs(want));
      // feature averages by direct enumeration
      const std::uint64_t total = 1ULL << n;
      std::vector<long double> acc(m.feature_count(), 0.0L);
      for (std::uint64_t mask = 0; mask < total; ++mask) {
        SpinConfig c = SpinConfig::from_mask(n, mask);
        long double p = std::exp(static_cast<long double>(-m.energy(c) - want));
        for (int a = 0; a < m.feature_count(); ++a)
          acc[a] += p * m.features.features[a].eval(c);
      }
      for (int a = 0; a < m.feature_count(); ++a)
        good = good &&
               std::abs(e.feature_averages()[a] - static_cast<double>(acc[a])) <=
                   1e-9;
      ++checked;
      if (good) ++ok;
    }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "Gray-code engine vs naive oracle: %d/%d instances within "
                "1e-9", ok, checked);
  verdict(3, ok == checked, buf);
}

// ---- criterion 4: derivative identity -------------------------------------
void criterion_4() {
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    ModelSpec spec = make_spec("sk", 10, {1.0, 0.5, 0.3});
    DerivativeCheck c = gamma_derivative_check(spec, 1e-4, kSeed + s);
    worst = std::max(worst, c.abs_error);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "<H> vs d psi/d gamma at step 1e-4: worst |error| = %.2e "
                "(<= 1e-6)", worst);
  verdict(4, worst <= 1e-6, buf);
}

// ---- criterion 5: covariance identity --------------------------------------
void criterion_5() {
  CovarianceCheck c = covariance_derivative_check(
      make_spec("sk", 10, {1.0, 0.5, 0.3}), 20, 1e-3, kSeed);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "Gibbs covariance vs mixed d^2 psi: max discrepancy = %.2e "
                "over %d pairs (<= 1e-5)", c.max_discrepancy, c.pairs_tested);
  verdict(5, c.pass, buf);
}

// ---- criterion 6: convexity -------------------------------------------------
void criterion_6() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(-1.0 + 0.1 * i);
  double worst = 0.0;
  bool ok = true;
  for (int s = 0; s < 5; ++s) {
    ConvexityCheck c =
        convexity_check(make_spec("sk", 10, {1.0, 0.5, 0.3}), grid, kSeed + s);
    ok = ok && c.ok;
    worst = std::min(worst, c.worst_second_difference);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "psi convex in gamma on 21-point grid, 5 seeds: worst second "
                "difference = %.2e (>= -1e-9)", worst);
  verdict(6, ok, buf);
}

// ---- criterion 7: concentration ratio bounded across N ---------------------
void criterion_7() {
  ModelSpec base = make_spec("sk", 0, {1.0, 0.5, 0.3});
  double lo = 0.0, hi = 0.0;
  bool first = true;
  std::string detail = "Var(psi) N^2/(gamma^2 |A|):";
  for (int n : {6, 10, 14, 18}) {
    ModelSpec s = with_n(base, n);
    FreeEnergyStats st = quenched_free_energy(s, 512, kSeed);
    long a = build_model(s, kSeed, 0, 0).feature_count();
    double ratio = st.psi_variance * n * n / (s.gamma * s.gamma * a);
    detail += " N=" + std::to_string(n) + ": " + format_double(ratio);
    lo = first ? ratio : std::min(lo, ratio);
    hi = first ? ratio : std::max(hi, ratio);
    first = false;
  }
  bool ok = lo > 0.0 && hi / lo < 10.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s (max/min = %.2f < 10)", detail.c_str(),
                lo > 0 ? hi / lo : 0.0);
  verdict(7, ok, buf);
}

// ---- criterion 8: Hermite variance identity ---------------------------------
void criterion_8() {
  bool ok = true;
  std::string why;

  GaussianFunctional lin{1, [](std::span<const double> g) { return g[0]; }};
  if (std::abs(hermite_variance(lin, 4).truncated_sum - 1.0) > 1e-8) {
    ok = false;
    why += " Var(g)";
  }
  GaussianFunctional prod{
      2, [](std::span<const double> g) { return g[0] * g[1]; }};
  if (std::abs(hermite_variance(prod, 3).truncated_sum - 1.0) > 1e-8) {
    ok = false;
    why += " Var(g1 g2)";
  }
  GaussianFunctional cube{
      1, [](std::span<const double> g) { return g[0] * g[0] * g[0]; }};
  if (std::abs(hermite_variance(cube, 4).truncated_sum - 15.0) > 1e-8) {
    ok = false;
    why += " Var(g^3)";
  }

  ModelSpec spec = make_spec("sk", 1, {0.0, 0.8, 0.3});
  PsiVarianceComparison c = psi_variance_via_hermite(spec, 8, kSeed);
  double gap =
      std::abs(c.hermite.truncated_sum - c.quadrature) / c.quadrature;
  if (gap > 0.01) {
    ok = false;
    why += " psi_1 gap";
  }
  double partial = 0.0;
  for (double t : c.hermite.per_order) {
    if (t < -1e-10 || partial + t > c.quadrature + 1e-10) {
      ok = false;
      why += " monotone";
      break;
    }
    partial += t;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "Hermite identity: polynomials exact to 1e-8, psi_1 K=8 gap "
                "= %.3f%% (<= 1%%), truncations monotone%s", 100.0 * gap,
                ok ? "" : (": failed" + why).c_str());
  verdict(8, ok, buf);
}

// ---- criterion 9: proof bound on every gamma != 0 cell of the matrix -------
void criterion_9() {
  int cells = 0, ok = 0;
  for (const std::string& kind : {std::string("sk"), std::string("ea")})
    for (int n : {6, 10, 14})
      for (const auto& p : kPoints) {
        if (p.gamma == 0.0) continue;
        ProofBoundCheck c =
            proof_bound_check(make_spec(kind, n, p), 64, kSeed);
        ++cells;
        if (c.holds) ++ok;
      }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "E<(H-<H>)^2> <= closing bound: %d/%d cells hold", ok, cells);
  verdict(9, ok == cells, buf);
}

// ---- criterion 10: trend evidence (report, not a hard error) ---------------
void criterion_10() {
  ModelSpec base = make_spec("sk", 0, {1.0, 0.5, 0.3});
  std::vector<int> ns = {6, 10, 14, 18};
  std::vector<ResidualEstimate> res;
  std::vector<Estimate> sa;
  for (int n : ns) {
    ModelSpec s = with_n(base, n);
    res.push_back(gg_residual(make_factory(s, kSeed), 2,
                              functional_by_name("R12", 2), 64, 256, kSeed));
    sa.push_back(
        self_averaging_report(make_factory(s, kSeed), 64, kSeed)
            .nu_abs_h_minus_nuh);
  }
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    double step_se = std::sqrt(res[i].std_error * res[i].std_error +
                               res[i + 1].std_error * res[i + 1].std_error);
    if (std::abs(res[i + 1].delta_hat) >
        std::abs(res[i].delta_hat) + 2.0 * step_se)
      monotone = false;
  }
  double factor = sa.front().value / sa.back().value;
  bool ok = monotone && factor >= 1.5;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "GG trend: |delta_N| = %.4f, %.4f, %.4f, %.4f "
                "(non-increasing within 2 se: %s); self-averaging factor "
                "N=6 vs N=18 = %.2f (>= 1.5). Caveat: differentiability of "
                "p at this point is unverifiable; trend is evidence only.",
                std::abs(res[0].delta_hat), std::abs(res[1].delta_hat),
                std::abs(res[2].delta_hat), std::abs(res[3].delta_hat),
                monotone ? "yes" : "no", factor);
  verdict(10, ok, buf, /*hard=*/false);
}

// ---- criterion 11: averaged identity integral shrinks with N ---------------
void criterion_11() {
  ModelSpec base = make_spec("sk", 0, {1.0, 0.5, 0.3});
  auto scan_at = [&](int n) {
    return averaged_identity_scan(with_n(base, n), 2,
                                  functional_by_name("R12", 2), 0.2, 1.0, 9,
                                  64, 256, kSeed);
  };
  AveragedScan a6 = scan_at(6), a14 = scan_at(14);
  double se = std::sqrt(a6.integral_se * a6.integral_se +
                        a14.integral_se * a14.integral_se);
  bool ok = a14.integral <= a6.integral + se;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "integral of |delta| over gamma in [0.2,1]: N=6: %.4f +- %.4f, "
                "N=14: %.4f +- %.4f (N=14 smaller within error)", a6.integral,
                a6.integral_se, a14.integral, a14.integral_se);
  verdict(11, ok, buf);
}

// ---- criterion 12: MCMC vs exact sampler agreement --------------------------
void criterion_12() {
  ModelSpec spec = make_spec("sk", 12, {1.0, 0.5, 0.3});
  ModelInstance m = build_model(spec, kSeed, 0, 0);
  GibbsEnsemble exact = GibbsEnsemble::exact(m);
  const int pairs = 4000, bins = 41;  // documented check defaults
  Histogram ref = overlap_histogram(exact, pairs, bins,
                                    derive_stream_key(kSeed, 1, kStreamReplica));
  auto shared = std::make_shared<ModelInstance>(m);
  McmcSampler chain_a(shared, 100, 10, derive_stream_key(kSeed, 2, kStreamMcmc));
  McmcSampler chain_b(shared, 100, 10, derive_stream_key(kSeed, 3, kStreamMcmc));
  Histogram got = overlap_histogram_from(m, chain_a, chain_b, pairs, bins);
  double tv = tv_distance(ref, got);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "MCMC vs exact overlap histogram: TV = %.4f (< 0.05)", tv);
  verdict(12, tv < 0.05, buf);
}

// ---- criterion 13: determinism of the full suite ----------------------------
void criterion_13(const std::string& config_path) {
  ExperimentConfig cfg = load_config(config_path);
  std::string a = to_csv(run_experiment(cfg));
  std::string b = to_csv(run_experiment(cfg));
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "suite reruns byte-identical CSV (%zu bytes, config %s)",
                a.size(), cfg.hash().c_str());
  verdict(13, a == b && !a.empty(), buf);
}

}  // namespace

int main(int argc, char** argv) {
  std::string config = argc > 1 ? argv[1] : "configs/paper_suite.json";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  criterion_13(config);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all hard acceptance criteria passed\n");
  return 0;
}
