#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "gg/model.hpp"
#include "gg/rng.hpp"
#include "gg/spin_config.hpp"

namespace gg {

inline constexpr int kMaxExactN = 24;

// Compensated (Kahan) accumulator; keeps the 2^N sums honest at N = 24.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// Snapshot handed to enumeration visitors; feature values and the H statistic
// are maintained incrementally, one spin flip per Gray-code step.
struct EnumState {
  const SpinConfig& config;
  std::span<const double> feature_values;
  double h_stat;  // (1/N) sum_alpha g_alpha f_alpha(sigma)
};

// Visits all 2^N configurations in reflected-binary Gray order with
// visit(log_weight, state). Cost per step is the flipped site's degree.
template <class Visitor>
void enumerate_gibbs(const ModelInstance& m, Visitor&& visit) {
  const int n = m.n_sites;
  if (n > kMaxExactN)
    throw std::invalid_argument(
        "exact enumeration limited to N <= 24; use the MCMC sampler");

  SpinConfig config = SpinConfig::all_plus(n);
  std::vector<double> base_vals(m.base_terms.size());
  std::vector<double> feat_vals(m.features.size());

  double logw = 0.0;
  double h_stat = 0.0;
  for (std::size_t t = 0; t < m.base_terms.size(); ++t) {
    base_vals[t] = m.base_terms[t].eval(config);
    logw += base_vals[t];
  }
  for (std::size_t a = 0; a < m.features.size(); ++a) {
    feat_vals[a] = m.features.features[a].eval(config);
    logw += m.gamma * m.disorder.perturbation[a] * feat_vals[a];
    h_stat += m.disorder.perturbation[a] * feat_vals[a];
  }
  h_stat /= n;
  double generic_base = m.base_log_weight ? m.base_log_weight(config) : 0.0;
  logw += generic_base;

  // Incidence lists local to the enumerator (monomial terms only; custom
  // features are re-evaluated on flip).
  std::vector<std::vector<std::int32_t>> site_base(n), site_feat(n);
  for (std::size_t t = 0; t < m.base_terms.size(); ++t)
    for (int s : m.base_terms[t].sites)
      site_base[s].push_back(static_cast<std::int32_t>(t));
  for (std::size_t a = 0; a < m.features.size(); ++a)
    for (int s : m.features.features[a].sites())
      site_feat[s].push_back(static_cast<std::int32_t>(a));

  EnumState state{config, feat_vals, h_stat};
  state.h_stat = h_stat;
  visit(logw, state);

  const std::uint64_t total = 1ULL << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    int site = std::countr_zero(k);
    config.flip(site);
    for (std::int32_t t : site_base[site]) {
      logw -= 2.0 * base_vals[t];
      base_vals[t] = -base_vals[t];
    }
    for (std::int32_t a : site_feat[site]) {
      const Feature& f = m.features.features[a];
      double g = m.disorder.perturbation[a];
      double old_v = feat_vals[a];
      double new_v = f.custom ? f.eval(config) : -old_v;
      logw += m.gamma * g * (new_v - old_v);
      h_stat += g * (new_v - old_v) / n;
      feat_vals[a] = new_v;
    }
    if (m.base_log_weight) {
      double nb = m.base_log_weight(config);
      logw += nb - generic_base;
      generic_base = nb;
    }
    state.h_stat = h_stat;
    visit(logw, state);
  }
}

class ExactSampler;
class McmcSampler;

// Handle over one ModelInstance: exact log-partition, cached feature
// averages and H moments, plus exactly-distributed replica streams.
class GibbsEnsemble {
 public:
  enum class Mode { exact, mcmc };

  static GibbsEnsemble exact(ModelInstance m) {
    GibbsEnsemble e;
    e.mode_ = Mode::exact;
    e.model_ = std::make_shared<ModelInstance>(std::move(m));
    e.compute_exact();
    return e;
  }

  static GibbsEnsemble mcmc(ModelInstance m, int burn_in = 100, int thin = 10) {
    GibbsEnsemble e;
    e.mode_ = Mode::mcmc;
    e.model_ = std::make_shared<ModelInstance>(std::move(m));
    e.burn_in_ = burn_in;
    e.thin_ = thin;
    return e;
  }

  Mode mode() const { return mode_; }
  const ModelInstance& model() const { return *model_; }

  double log_partition() const {
    require_exact();
    return log_partition_;
  }

  // psi_N
  double free_energy_per_site() const {
    return log_partition() / model_->n_sites;
  }

  const std::vector<double>& feature_averages() const {
    require_exact();
    return feature_avg_;
  }

  // <R_{1,2}> = (1/N) sum_alpha <f_alpha>^2 by replica independence.
  double pair_overlap_moment() const {
    require_exact();
    double s = 0.0;
    for (double v : feature_avg_) s += v * v;
    return s / model_->n_sites;
  }

  double gibbs_mean_h() const {
    require_exact();
    return h_mean_;
  }

  // <(H - <H>)^2>
  double gibbs_var_h() const {
    require_exact();
    return std::max(0.0, h_second_ - h_mean_ * h_mean_);
  }

  // <|H - center|>, one extra enumeration pass.
  double gibbs_abs_dev_h(double center) const {
    return expectation(
        [center](const EnumState& s) { return std::abs(s.h_stat - center); });
  }

  // Exact Gibbs expectation of an arbitrary observable of the state.
  template <class Fn>
  double expectation(Fn&& fn) const {
    require_exact();
    KahanSum num, den;
    double shift = max_log_weight_;
    enumerate_gibbs(*model_, [&](double logw, const EnumState& s) {
      double w = std::exp(logw - shift);
      den.add(w);
      num.add(w * fn(s));
    });
    return num.value() / den.value();
  }

  ExactSampler sampler(std::uint64_t stream_seed) const;
  McmcSampler mcmc_sampler(std::uint64_t stream_seed) const;

 private:
  void require_exact() const {
    if (mode_ != Mode::exact)
      throw std::logic_error("operation requires exact mode (N <= 24)");
  }

  void compute_exact() {
    const ModelInstance& m = *model_;
    double maxlw = -std::numeric_limits<double>::infinity();
    enumerate_gibbs(m, [&](double logw, const EnumState&) {
      if (logw > maxlw) maxlw = logw;
    });
    max_log_weight_ = maxlw;

    KahanSum z, h1, h2;
    std::vector<KahanSum> fsum(m.features.size());
    enumerate_gibbs(m, [&](double logw, const EnumState& s) {
      double w = std::exp(logw - maxlw);
      z.add(w);
      h1.add(w * s.h_stat);
      h2.add(w * s.h_stat * s.h_stat);
      for (std::size_t a = 0; a < fsum.size(); ++a)
        fsum[a].add(w * s.feature_values[a]);
    });
    log_partition_ = maxlw + std::log(z.value());
    h_mean_ = h1.value() / z.value();
    h_second_ = h2.value() / z.value();
    feature_avg_.resize(fsum.size());
    for (std::size_t a = 0; a < fsum.size(); ++a)
      feature_avg_[a] = fsum[a].value() / z.value();
  }

  Mode mode_ = Mode::exact;
  std::shared_ptr<const ModelInstance> model_;
  double log_partition_ = 0.0;
  double max_log_weight_ = 0.0;
  double h_mean_ = 0.0;
  double h_second_ = 0.0;
  std::vector<double> feature_avg_;
  int burn_in_ = 100;
  int thin_ = 10;

  friend class ExactSampler;
  friend class McmcSampler;
};

// i.i.d. exact draws via inverse CDF over the enumerated weights. Builds a
// 2^N cumulative table (the documented memory bound: 8 * 2^N bytes).
class ExactSampler {
 public:
  ExactSampler(const GibbsEnsemble& e, std::uint64_t stream_seed)
      : model_(e.model_), rng_(derive_stream_key(stream_seed, 0, kStreamReplica)) {
    const ModelInstance& m = *model_;
    const std::uint64_t total = 1ULL << m.n_sites;
    cumulative_ = std::make_shared<std::vector<double>>();
    cumulative_->reserve(total);
    double shift = e.max_log_weight_;
    KahanSum acc;
    enumerate_gibbs(m, [&](double logw, const EnumState&) {
      acc.add(std::exp(logw - shift));
      cumulative_->push_back(acc.value());
    });
    total_ = cumulative_->back();
  }

  SpinConfig draw() {
    double u = rng_.uniform() * total_;
    auto it =
        std::upper_bound(cumulative_->begin(), cumulative_->end(), u);
    std::uint64_t k = static_cast<std::uint64_t>(
        std::min<std::ptrdiff_t>(it - cumulative_->begin(),
                                 cumulative_->size() - 1));
    std::uint64_t mask = k ^ (k >> 1);  // Gray code of the step index
    return SpinConfig::from_mask(model_->n_sites, mask);
  }

 private:
  std::shared_ptr<const ModelInstance> model_;
  std::shared_ptr<std::vector<double>> cumulative_;
  double total_ = 0.0;
  CounterRng rng_;
};

// Single-site Glauber dynamics; one sweep = N sequential site updates using
// energy_delta. Equilibration is the caller's responsibility.
class McmcSampler {
 public:
  McmcSampler(std::shared_ptr<const ModelInstance> model, int burn_in,
              int thin, std::uint64_t stream_seed)
      : model_(std::move(model)),
        thin_(thin),
        rng_(derive_stream_key(stream_seed, 0, kStreamMcmc)),
        config_(SpinConfig::all_plus(model_->n_sites)) {
    if (burn_in < 0 || thin < 1)
      throw std::invalid_argument("mcmc: need burn_in >= 0, thin >= 1");
    for (int s = 0; s < burn_in; ++s) sweep();
  }

  SpinConfig draw() {
    for (int s = 0; s < thin_; ++s) sweep();
    return config_;
  }

  void sweep() {
    const int n = model_->n_sites;
    for (int i = 0; i < n; ++i) {
      double d = model_->energy_delta(config_, i);
      double p_flip = 1.0 / (1.0 + std::exp(d));
      if (rng_.uniform() < p_flip) config_.flip(i);
    }
  }

 private:
  std::shared_ptr<const ModelInstance> model_;
  int thin_;
  CounterRng rng_;
  SpinConfig config_;
};

inline ExactSampler GibbsEnsemble::sampler(std::uint64_t stream_seed) const {
  require_exact();
  return ExactSampler(*this, stream_seed);
}

inline McmcSampler GibbsEnsemble::mcmc_sampler(
    std::uint64_t stream_seed) const {
  return McmcSampler(model_, burn_in_, thin_, stream_seed);
}

// Convenience wrappers mirroring the one-shot operations.
inline double log_partition(const ModelInstance& m) {
  return GibbsEnsemble::exact(m).log_partition();
}

inline double free_energy_per_site(const ModelInstance& m) {
  return GibbsEnsemble::exact(m).free_energy_per_site();
}

inline std::vector<double> feature_averages(const ModelInstance& m) {
  return GibbsEnsemble::exact(m).feature_averages();
}

inline double pair_overlap_moment(const ModelInstance& m) {
  return GibbsEnsemble::exact(m).pair_overlap_moment();
}

}  // namespace gg
