#include <catch2/catch_amalgamated.hpp>

#include "gg/hermite.hpp"

using namespace gg;

namespace {

GaussianFunctional make_fn(int dim,
                           std::function<double(std::span<const double>)> f) {
  GaussianFunctional g;
  g.dim = dim;
  g.eval = std::move(f);
  return g;
}

}  // namespace

TEST_CASE("gauss_hermite rules") {
  for (int n : {8, 16, 32, 64}) {
    QuadratureRule r = gauss_hermite(n);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
    double w = 0.0, x2 = 0.0, x4 = 0.0;
    for (int i = 0; i < n; ++i) {
      w += r.weights[i];
      x2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      x4 += r.weights[i] * std::pow(r.nodes[i], 4);
      if (i > 0) REQUIRE(r.nodes[i] > r.nodes[i - 1]);  // ascending
    }
    REQUIRE(w == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(x2 == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(x4 == Catch::Approx(3.0).margin(1e-10));
  }
}

TEST_CASE("hermite_he") {
  REQUIRE(hermite_he(0, 1.7) == Catch::Approx(1.0));
  REQUIRE(hermite_he(1, 1.7) == Catch::Approx(1.7));
  REQUIRE(hermite_he(2, 1.7) == Catch::Approx(1.7 * 1.7 - 1.0));
  REQUIRE(hermite_he(3, 2.0) == Catch::Approx(8.0 - 6.0));  // x^3 - 3x
  // orthonormality: E[He_j He_k] = k! delta_jk under the standard gaussian
  QuadratureRule r = gauss_hermite(40);
  for (int j = 0; j <= 5; ++j)
    for (int k = 0; k <= 5; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * hermite_he(j, r.nodes[i]) *
             hermite_he(k, r.nodes[i]);
      double want = (j == k) ? std::tgamma(j + 1.0) : 0.0;
      REQUIRE(s == Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("derivative_expectation examples") {
  SECTION("f(g) = g") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0]; });
    REQUIRE(derivative_expectation(f, {0}) == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(derivative_expectation(f, {0, 0}) ==
            Catch::Approx(0.0).margin(1e-10));
  }

  SECTION("f(g) = g^2") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0] * g[0]; });
    REQUIRE(derivative_expectation(f, {0}) == Catch::Approx(0.0).margin(1e-10));
    REQUIRE(derivative_expectation(f, {0, 0}) ==
            Catch::Approx(2.0).margin(1e-10));
  }

  SECTION("f = sin(g1 + g2): E[d/dg1 f] = E[cos(g1+g2)] = e^{-1}") {
    auto f = make_fn(
        2, [](std::span<const double> g) { return std::sin(g[0] + g[1]); });
    REQUIRE(derivative_expectation(f, {0}) ==
            Catch::Approx(std::exp(-1.0)).margin(1e-8));
    REQUIRE(derivative_expectation(f, {1}) ==
            Catch::Approx(std::exp(-1.0)).margin(1e-8));
    // mixed-partial symmetry
    REQUIRE(derivative_expectation(f, {0, 1}) ==
            Catch::Approx(derivative_expectation(f, {1, 0})).margin(1e-9));
  }

  SECTION("polynomial exactness: degree <= 4, k > degree gives exactly 0") {
    auto f = make_fn(1, [](std::span<const double> g) {
      double x = g[0];
      return 1.0 + 2.0 * x - x * x + 0.5 * x * x * x * x;
    });
    // E f'' = E[-2 + 6 x^2] = 4; E f''' = E[12 x] = 0; E f'''' = 12
    REQUIRE(derivative_expectation(f, {0, 0}) ==
            Catch::Approx(4.0).margin(1e-8));
    REQUIRE(derivative_expectation(f, {0, 0, 0}) ==
            Catch::Approx(0.0).margin(1e-8));
    REQUIRE(derivative_expectation(f, {0, 0, 0, 0}) ==
            Catch::Approx(12.0).margin(1e-8));
    REQUIRE(derivative_expectation(f, {0, 0, 0, 0, 0}) ==
            Catch::Approx(0.0).margin(1e-8));
  }

  SECTION("bad multi-index rejected") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0]; });
    REQUIRE_THROWS_AS(derivative_expectation(f, {1}), std::invalid_argument);
    REQUIRE_THROWS_AS(derivative_expectation(f, std::vector<int>(11, 0)),
                      std::invalid_argument);
  }

  SECTION("oracle path takes precedence over finite differences") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0]; });
    f.deriv_expectation_oracle = [](const std::vector<int>&) { return 42.0; };
    REQUIRE(derivative_expectation(f, {0}) == 42.0);
  }
}

TEST_CASE("hermite_variance recovers known variances") {
  SECTION("f(g) = g: Var = 1, all from k = 1") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0]; });
    HermiteVariance v = hermite_variance(f, 4);
    REQUIRE(v.per_order[0] == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(v.truncated_sum == Catch::Approx(1.0).margin(1e-8));
  }

  SECTION("f = g1 g2: Var = 1, all from the mixed k = 2 term") {
    auto f = make_fn(2, [](std::span<const double> g) { return g[0] * g[1]; });
    HermiteVariance v = hermite_variance(f, 3);
    REQUIRE(v.per_order[0] == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(v.per_order[1] == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(v.truncated_sum == Catch::Approx(1.0).margin(1e-7));
  }

  SECTION("f = g^3: Var = 15 = 9 (k=1) + 6 (k=3)") {
    auto f = make_fn(
        1, [](std::span<const double> g) { return g[0] * g[0] * g[0]; });
    HermiteVariance v = hermite_variance(f, 4);
    REQUIRE(v.per_order[0] == Catch::Approx(9.0).margin(1e-7));
    REQUIRE(v.per_order[1] == Catch::Approx(0.0).margin(1e-7));
    REQUIRE(v.per_order[2] == Catch::Approx(6.0).margin(1e-6));
    REQUIRE(v.truncated_sum == Catch::Approx(15.0).margin(1e-6));
  }

  SECTION("truncations are monotone lower bounds of the true variance") {
    auto f = make_fn(1, [](std::span<const double> g) {
      return std::exp(0.5 * g[0]);
    });
    double true_var = std::exp(0.5) - std::exp(0.25);
    double partial = 0.0;
    HermiteVariance v = hermite_variance(f, 8);
    for (double t : v.per_order) {
      REQUIRE(t >= -1e-10);
      partial += t;
      REQUIRE(partial <= true_var + 1e-7);
    }
    REQUIRE(v.truncated_sum == Catch::Approx(true_var).margin(1e-4));
  }

  SECTION("K out of range rejected") {
    auto f = make_fn(1, [](std::span<const double> g) { return g[0]; });
    REQUIRE_THROWS_AS(hermite_variance(f, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(hermite_variance(f, 11), std::invalid_argument);
  }
}

TEST_CASE("mc_variance oracle") {
  SECTION("lognormal: Var(e^{g/2}) = e^{1/2} - e^{1/4}") {
    auto f = make_fn(1, [](std::span<const double> g) {
      return std::exp(0.5 * g[0]);
    });
    Estimate e = mc_variance(f, 200000, 3);
    double want = std::exp(0.5) - std::exp(0.25);
    REQUIRE(std::abs(e.value - want) <= 4.0 * e.std_error);
    REQUIRE(e.std_error > 0.0);
  }

  SECTION("agrees with quadrature_variance") {
    auto f = make_fn(2, [](std::span<const double> g) {
      return std::tanh(g[0]) + 0.3 * g[1] * g[1];
    });
    Estimate mc = mc_variance(f, 100000, 5);
    double quad = quadrature_variance(f, 48);
    REQUIRE(std::abs(mc.value - quad) <= 4.0 * mc.std_error);
  }
}

TEST_CASE("psi_variance_via_hermite") {
  SECTION("gamma = 0: no perturbation features enter psi") {
    ModelSpec spec;
    spec.kind = "sk";
    spec.n = 3;
    spec.beta = 0.7;
    spec.gamma = 0.0;
    spec.h = 0.2;
    PsiVarianceComparison c = psi_variance_via_hermite(spec, 4, 7, 2000);
    REQUIRE(c.quadrature == Catch::Approx(0.0).margin(1e-20));
    REQUIRE(c.hermite.truncated_sum == Catch::Approx(0.0).margin(1e-18));
  }

  SECTION("psi_1 at K = 8 closes the variance to within 1%") {
    ModelSpec spec;
    spec.kind = "sk";
    spec.n = 1;
    spec.beta = 0.0;
    spec.gamma = 0.8;
    spec.h = 0.3;
    PsiVarianceComparison c = psi_variance_via_hermite(spec, 8, 11, 20000);
    REQUIRE(c.dim == 1);
    REQUIRE(c.monotone);
    REQUIRE(c.quadrature > 0.0);
    REQUIRE(std::abs(c.hermite.truncated_sum - c.quadrature) <=
            0.01 * c.quadrature);
    REQUIRE(std::abs(c.mc.value - c.quadrature) <= 4.0 * c.mc.std_error);
  }

  SECTION("small multi-feature instance stays monotone") {
    ModelSpec spec;
    spec.kind = "sk";
    spec.n = 3;
    spec.beta = 0.5;
    spec.gamma = 0.6;
    spec.h = 0.1;
    PsiVarianceComparison c = psi_variance_via_hermite(spec, 4, 13, 4000);
    REQUIRE(c.dim == 3);
    REQUIRE(c.monotone);
    REQUIRE(c.hermite.truncated_sum <= c.quadrature + 1e-8);
  }

  SECTION("oversized instance rejected") {
    ModelSpec spec;
    spec.kind = "sk";
    spec.n = 8;
    REQUIRE_THROWS_AS(psi_variance_via_hermite(spec, 4, 0),
                      std::invalid_argument);
  }
}
