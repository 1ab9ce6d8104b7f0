// Experiment orchestration CLI: run check suites over a (model, N) matrix,
// emit CSV/JSON reports, and merge plot-ready convergence tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gg/config.hpp"
#include "gg/hermite.hpp"
#include "gg/report.hpp"
#include "gg/runner.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            int workers, bool seed_set, std::uint64_t seed_override) {
  gg::ExperimentConfig cfg;
  try {
    cfg = gg::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (seed_set) cfg.seed = seed_override;
  std::string out_dir = out_override.empty() ? cfg.out_dir : out_override;

  gg::Report report;
  try {
    report = gg::run_experiment(cfg, workers);
  } catch (const gg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::filesystem::create_directories(out_dir);
  gg::write_file(out_dir + "/report.csv", gg::to_csv(report));
  gg::write_file(out_dir + "/report.json", gg::to_json(report).dump(2) + "\n");

  int failed = 0;
  for (const auto& row : report.rows) {
    if (row.pass == "fail") ++failed;
    std::printf("[%s] %-22s %-6s N=%-3d %-12s est=%.6g se=%.3g\n",
                row.pass == "fail" ? "FAIL"
                                   : (row.pass == "pass" ? "PASS" : " -- "),
                row.check.c_str(), row.model.c_str(), row.n_sites,
                row.functional.c_str(), row.estimate, row.std_error);
  }
  std::printf("report written to %s/report.{csv,json}\n", out_dir.c_str());
  return failed == 0 ? 0 : 1;
}

int cmd_convergence_table(const std::vector<std::string>& files,
                          const std::string& out_path) {
  std::vector<gg::Report> reports;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) {
      std::cerr << "cannot read report: " << f << "\n";
      return 2;
    }
    nlohmann::json j;
    in >> j;
    reports.push_back(gg::report_from_json(j));
  }
  std::string csv;
  try {
    csv = gg::convergence_table(reports);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (out_path.empty())
    std::cout << csv;
  else
    gg::write_file(out_path, csv);
  return 0;
}

int cmd_check_variance_formula(int K, std::uint64_t seed) {
  using gg::GaussianFunctional;
  struct Case {
    std::string name;
    GaussianFunctional f;
    double analytic;  // Var(f), NaN if unknown
  };
  std::vector<Case> cases;
  cases.push_back({"f(g)=g",
                   {1, [](std::span<const double> g) { return g[0]; }, nullptr, 1},
                   1.0});
  cases.push_back(
      {"f(g)=g^2",
       {1, [](std::span<const double> g) { return g[0] * g[0]; }, nullptr, 2},
       2.0});
  cases.push_back({"f(g)=g^3",
                   {1,
                    [](std::span<const double> g) { return g[0] * g[0] * g[0]; },
                    nullptr, 3},
                   15.0});
  cases.push_back(
      {"f(g1,g2)=g1*g2",
       {2, [](std::span<const double> g) { return g[0] * g[1]; }, nullptr, 2},
       1.0});
  cases.push_back({"f(g)=exp(g/2)",
                   {1,
                    [](std::span<const double> g) { return std::exp(g[0] / 2); },
                    nullptr, -1},
                   std::exp(0.5) - std::exp(0.25)});

  std::printf("%-18s %-10s %-12s %-12s %-12s\n", "functional", "K",
              "hermite_sum", "mc_variance", "analytic");
  bool ok = true;
  for (auto& c : cases) {
    int k_use = c.f.poly_degree > 0 ? std::min(K, c.f.poly_degree + 1) : K;
    gg::HermiteVariance hv = gg::hermite_variance(c.f, k_use);
    gg::Estimate mc = gg::mc_variance(c.f, 40000, seed);
    std::printf("%-18s %-10d %-12.6f %-12.6f %-12.6f\n", c.name.c_str(), k_use,
                hv.truncated_sum, mc.value, c.analytic);
    if (c.f.poly_degree > 0 && std::abs(hv.truncated_sum - c.analytic) > 1e-8)
      ok = false;
  }

  gg::ModelSpec tiny;
  tiny.kind = "sk";
  tiny.n = 1;
  tiny.beta = 0.0;
  tiny.gamma = 0.5;
  tiny.h = 0.3;
  gg::PsiVarianceComparison cmp = gg::psi_variance_via_hermite(tiny, K, seed);
  std::printf("%-18s %-10d %-12.6g %-12.6g %-12.6g (quadrature)\n", "psi_1", K,
              cmp.hermite.truncated_sum, cmp.mc.value, cmp.quadrature);
  double gap = std::abs(cmp.hermite.truncated_sum - cmp.quadrature) /
               cmp.quadrature;
  std::printf("psi_1 relative truncation gap at K=%d: %.3g (monotone: %s)\n", K,
              gap, cmp.monotone ? "yes" : "no");
  ok = ok && gap <= 0.01 && cmp.monotone;
  std::printf("%s\n", ok ? "variance formula checks passed"
                         : "variance formula checks FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for disordered Gibbs measures"};
  app.require_subcommand(1);

  std::string config_path, out_dir, table_out;
  std::vector<std::string> report_files;
  int workers = 1;
  int K = 8;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "config file (JSON)")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--workers", workers, "parallel workers");
  run->add_option("--seed", seed, "master seed override")
      ->each([&](const std::string&) { seed_set = true; });

  auto* table =
      app.add_subcommand("convergence-table", "merge reports across N");
  table->add_option("files", report_files, "report.json files")->required();
  table->add_option("--out", table_out, "output CSV path (default stdout)");

  auto* variance = app.add_subcommand("check-variance-formula",
                                      "verify the Hermite variance identity");
  variance->add_option("--K", K, "truncation order");
  variance->add_option("--seed", seed, "master seed");

  app.add_subcommand("list-checks", "list available check names");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, out_dir, workers, seed_set, seed);
  if (table->parsed()) return cmd_convergence_table(report_files, table_out);
  if (variance->parsed()) return cmd_check_variance_formula(K, seed);
  for (const auto& c : gg::known_checks())
    std::printf("%-24s %s\n", c.name.c_str(), c.description.c_str());
  return 0;
}
