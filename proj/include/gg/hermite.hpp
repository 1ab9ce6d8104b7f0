#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "gg/gibbs.hpp"
#include "gg/harness.hpp"
#include "gg/rng.hpp"

namespace gg {

inline constexpr int kHermiteKMax = 10;
inline constexpr int kHermiteDimMax = 6;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (standard gaussian weight)
};

// Gauss-Hermite nodes/weights for the standard gaussian weight, via Newton
// iteration on the physicists' polynomials and rescaling.
inline QuadratureRule gauss_hermite(int n) {
  constexpr double kEps = 1e-14;
  constexpr double kPim4 = 0.7511255444649425;  // pi^{-1/4}
  std::vector<double> x(n), w(n);
  int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= kEps) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::sqrt(2.0) * x[n - 1 - i];  // ascending order
    rule.weights[i] = w[n - 1 - i] * inv_sqrt_pi;
  }
  return rule;
}

// Probabilists' Hermite He_k(x).
inline double hermite_he(int k, double x) {
  double p0 = 1.0, p1 = x;
  if (k == 0) return p0;
  if (k == 1) return p1;
  for (int j = 2; j <= k; ++j) {
    double p2 = x * p1 - (j - 1) * p0;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

// Fornberg weights for the m-th derivative at 0 from the given offsets.
inline std::vector<double> fd_weights(const std::vector<double>& offsets,
                                      int m) {
  int nd = static_cast<int>(offsets.size()) - 1;
  std::vector<std::vector<double>> c(nd + 1, std::vector<double>(m + 1, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0, c4 = offsets[0];
  for (int i = 1; i <= nd; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0, c5 = c4;
    c4 = offsets[i];
    for (int j = 0; j < i; ++j) {
      double c3 = offsets[i] - offsets[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(nd + 1);
  for (int i = 0; i <= nd; ++i) out[i] = c[i][m];
  return out;
}

// Smooth functional of i.i.d. standard gaussians. The optional oracle maps
// per-coordinate derivative counts to E[d^k f]; when absent a central
// finite-difference stencil of the evaluator is used.
struct GaussianFunctional {
  int dim = 1;
  std::function<double(std::span<const double>)> eval;
  std::function<double(const std::vector<int>&)> deriv_expectation_oracle;
  int poly_degree = -1;  // informational
};

namespace detail {

template <class Fn>
void for_each_tensor_node(const QuadratureRule& rule, int dim, Fn&& fn) {
  std::vector<int> idx(dim, 0);
  std::vector<double> point(dim);
  double weight;
  for (;;) {
    weight = 1.0;
    for (int d = 0; d < dim; ++d) {
      point[d] = rule.nodes[idx[d]];
      weight *= rule.weights[idx[d]];
    }
    fn(std::span<const double>(point), weight);
    int d = 0;
    while (d < dim) {
      if (++idx[d] < static_cast<int>(rule.nodes.size())) break;
      idx[d] = 0;
      ++d;
    }
    if (d == dim) break;
  }
}

}  // namespace detail

// E[d^k f / dg_{i_1}...dg_{i_k}] by 32-node tensor Gauss-Hermite quadrature.
// multi_index holds 0-based coordinate indices, repetitions allowed.
inline double derivative_expectation(const GaussianFunctional& f,
                                     const std::vector<int>& multi_index,
                                     int quad_nodes = 32) {
  int k = static_cast<int>(multi_index.size());
  if (k > kHermiteKMax)
    throw std::invalid_argument("derivative order exceeds K_max");
  if (f.dim > kHermiteDimMax)
    throw std::invalid_argument("dimension exceeds cap");
  std::vector<int> counts(f.dim, 0);
  for (int i : multi_index) {
    if (i < 0 || i >= f.dim)
      throw std::invalid_argument("multi-index coordinate out of range");
    ++counts[i];
  }
  if (f.deriv_expectation_oracle) return f.deriv_expectation_oracle(counts);

  // Finite-difference stencil: per active coordinate, Fornberg weights for
  // order m on symmetric offsets. Low orders use a wide high-accuracy
  // stencil with small spacing; high orders keep spacing ~0.5/m so the
  // 1/h^m weight growth does not amplify rounding noise.
  struct Axis {
    int coord;
    std::vector<double> offsets;
    std::vector<double> weights;
  };
  std::vector<Axis> axes;
  for (int d = 0; d < f.dim; ++d) {
    if (counts[d] == 0) continue;
    int m = counts[d];
    int r = std::max(m / 2 + 2, 4);  // exact on polynomials through degree 2r+1
    double h = m <= 2 ? 0.1 : 0.5 / m;
    Axis ax;
    ax.coord = d;
    for (int o = -r; o <= r; ++o) ax.offsets.push_back(o * h);
    ax.weights = fd_weights(ax.offsets, m);
    axes.push_back(std::move(ax));
  }

  QuadratureRule rule = gauss_hermite(quad_nodes);
  KahanSum total;
  std::vector<double> shifted(f.dim);
  detail::for_each_tensor_node(rule, f.dim, [&](std::span<const double> pt,
                                                double w) {
    // tensor product of the per-axis stencils
    std::vector<std::size_t> sidx(axes.size(), 0);
    double acc = 0.0;
    for (;;) {
      for (int d = 0; d < f.dim; ++d) shifted[d] = pt[d];
      double coeff = 1.0;
      for (std::size_t a = 0; a < axes.size(); ++a) {
        shifted[axes[a].coord] += axes[a].offsets[sidx[a]];
        coeff *= axes[a].weights[sidx[a]];
      }
      acc += coeff * f.eval(shifted);
      std::size_t a = 0;
      while (a < axes.size()) {
        if (++sidx[a] < axes[a].offsets.size()) break;
        sidx[a] = 0;
        ++a;
      }
      if (a == axes.size()) break;
      if (axes.empty()) break;
    }
    total.add(w * acc);
  });
  return total.value();
}

struct HermiteVariance {
  double truncated_sum = 0.0;
  std::vector<double> per_order;  // term for k = 1..K, each >= 0
};

// Truncation at K of the Hermite-expansion variance identity
//   Var(f) = sum_k (1/k!) sum_{i_1..i_k} (E d^k f)^2.
// Ordered index tuples are grouped into multisets with multinomial weights;
// partial sums are monotone lower bounds of Var(f).
inline HermiteVariance hermite_variance(const GaussianFunctional& f, int K,
                                        int quad_nodes = 32) {
  if (K < 1 || K > kHermiteKMax)
    throw std::invalid_argument("K out of range");
  if (f.dim > kHermiteDimMax)
    throw std::invalid_argument("dimension exceeds cap");
  HermiteVariance out;
  for (int k = 1; k <= K; ++k) {
    // non-decreasing index sequences = multisets of size k
    std::vector<int> idx(k, 0);
    KahanSum order_sum;
    for (;;) {
      double d = derivative_expectation(f, idx, quad_nodes);
      // (#ordered tuples)/k! = 1/prod(counts!)
      double denom = 1.0;
      int run = 1;
      for (int j = 1; j <= k; ++j) {
        if (j < k && idx[j] == idx[j - 1]) {
          ++run;
        } else {
          for (int q = 2; q <= run; ++q) denom *= q;
          run = 1;
        }
      }
      order_sum.add(d * d / denom);
      int j = k - 1;
      while (j >= 0 && idx[j] == f.dim - 1) --j;
      if (j < 0) break;
      int v = idx[j] + 1;
      for (int q = j; q < k; ++q) idx[q] = v;
    }
    out.per_order.push_back(order_sum.value());
    out.truncated_sum += order_sum.value();
  }
  return out;
}

// Plain Monte Carlo variance oracle over i.i.d. standard gaussian inputs.
inline Estimate mc_variance(const GaussianFunctional& f, int samples,
                            std::uint64_t stream_seed) {
  if (samples < 16) throw std::invalid_argument("mc_variance: too few samples");
  CounterRng rng(stream_seed, 0, kStreamProbe);
  std::vector<double> g(f.dim);
  KahanSum s1, s2;
  std::vector<double> vals(samples);
  for (int i = 0; i < samples; ++i) {
    for (auto& x : g) x = rng.gaussian();
    vals[i] = f.eval(g);
    s1.add(vals[i]);
  }
  double mean = s1.value() / samples;
  KahanSum m2, m4;
  for (double v : vals) {
    double d = v - mean;
    m2.add(d * d);
    m4.add(d * d * d * d);
  }
  double var = m2.value() / (samples - 1);
  double mu4 = m4.value() / samples;
  double se = std::sqrt(std::max(0.0, mu4 - var * var) / samples);
  return {var, se};
}

// Variance of f by direct tensor quadrature: E[f^2] - E[f]^2.
inline double quadrature_variance(const GaussianFunctional& f, int quad_nodes) {
  QuadratureRule rule = gauss_hermite(quad_nodes);
  KahanSum m1, m2;
  detail::for_each_tensor_node(rule, f.dim,
                               [&](std::span<const double> pt, double w) {
                                 double v = f.eval(pt);
                                 m1.add(w * v);
                                 m2.add(w * v * v);
                               });
  return m2.value() - m1.value() * m1.value();
}

// psi_N of a tiny instance as a functional of its perturbation gaussians.
// The derivative-expectation oracle uses gaussian integration by parts,
// E[d^k f] = E[f * prod_j He_{c_j}(g_j)], evaluated on a shared tensor grid
// so high orders avoid finite-difference cancellation.
inline GaussianFunctional psi_functional(const ModelInstance& model,
                                         bool with_ibp_oracle = true,
                                         int quad_nodes = 32) {
  auto m = std::make_shared<ModelInstance>(model);
  int dim = m->feature_count();
  GaussianFunctional f;
  f.dim = dim;
  f.eval = [m](std::span<const double> g) {
    return free_energy_per_site(
        m->with_perturbation_vector(std::vector<double>(g.begin(), g.end())));
  };
  if (with_ibp_oracle) {
    auto rule = std::make_shared<QuadratureRule>(gauss_hermite(quad_nodes));
    auto grid = std::make_shared<std::vector<double>>();
    auto points = std::make_shared<std::vector<std::vector<double>>>();
    auto weights = std::make_shared<std::vector<double>>();
    auto eval = f.eval;
    detail::for_each_tensor_node(*rule, dim, [&](std::span<const double> pt,
                                                 double w) {
      points->emplace_back(pt.begin(), pt.end());
      weights->push_back(w);
      grid->push_back(eval(pt));
    });
    f.deriv_expectation_oracle = [points, weights, grid,
                                  dim](const std::vector<int>& counts) {
      KahanSum acc;
      for (std::size_t i = 0; i < grid->size(); ++i) {
        double he = 1.0;
        for (int d = 0; d < dim; ++d)
          if (counts[d] > 0) he *= hermite_he(counts[d], (*points)[i][d]);
        acc.add((*weights)[i] * he * (*grid)[i]);
      }
      return acc.value();
    };
  }
  return f;
}

struct PsiVarianceComparison {
  int dim = 0;
  HermiteVariance hermite;
  Estimate mc;
  double quadrature = 0.0;
  bool monotone = true;
};

// Compares the truncated Hermite sum for psi_N of a tiny instance against
// Monte Carlo and direct quadrature variances; per-order terms reported.
inline PsiVarianceComparison psi_variance_via_hermite(const ModelSpec& spec,
                                                      int K,
                                                      std::uint64_t master_seed,
                                                      int mc_samples = 20000) {
  ModelInstance m = build_model(spec, master_seed, 0, 0);
  if (m.n_sites > 4 || m.feature_count() > 4)
    throw std::invalid_argument(
        "psi_variance_via_hermite: instance too large (need N <= 4, |A| <= 4)");
  PsiVarianceComparison out;
  out.dim = m.feature_count();
  if (out.dim == 0) {
    out.mc = {0.0, 0.0};
    return out;  // no perturbation: variance identically 0, all terms 0
  }
  int nodes = out.dim <= 2 ? 64 : 32;
  GaussianFunctional f = psi_functional(m, true, nodes);
  out.hermite = hermite_variance(f, K, nodes);
  out.mc = mc_variance(f, mc_samples, derive_stream_key(master_seed, 0, 7));
  out.quadrature = quadrature_variance(f, nodes);
  double partial = 0.0;
  for (double t : out.hermite.per_order) {
    if (t < -1e-12) out.monotone = false;
    partial += t;
  }
  return out;
}

}  // namespace gg
