#ifndef CROWDRATE_SAMPLER_HPP
#define CROWDRATE_SAMPLER_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdrate/dataset.hpp"
#include "crowdrate/diagnostics.hpp"
#include "crowdrate/error.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "crowdrate/posterior.hpp"
#include "crowdrate/rng.hpp"

namespace crowdrate {

struct SamplerConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sampling_iters = 1000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  double init_radius = 2.0;
  enum class Algorithm { nuts, static_hmc };
  Algorithm algorithm = Algorithm::nuts;  // static_hmc is a debugging fallback
  int static_leapfrogs = 32;
  double divergence_threshold = 1000.0;
};

struct DrawStats {
  double accept_prob = 0.0;
  int tree_depth = 0;
  bool divergent = false;
  double energy = 0.0;
};

// Per-chain, per-iteration unconstrained draws plus sampler statistics.
struct DrawsStore {
  std::string model_name;
  int chains = 0;
  int iters = 0;
  int dimension = 0;
  std::vector<double> values;     // [chain][iter][dim]
  std::vector<DrawStats> stats;   // [chain][iter]
  std::vector<double> step_size;  // per chain, post-warmup
  std::vector<double> inv_metric; // [chain][dim]

  double value(int c, int i, int d) const {
    return values[(static_cast<std::size_t>(c) * iters + i) * dimension + d];
  }
  std::span<const double> draw(int c, int i) const {
    return {values.data() + (static_cast<std::size_t>(c) * iters + i) * dimension,
            static_cast<std::size_t>(dimension)};
  }
  const DrawStats& stat(int c, int i) const {
    return stats[static_cast<std::size_t>(c) * iters + i];
  }
  int num_draws() const { return chains * iters; }
};

struct Diagnostics {
  std::vector<std::string> param_names;
  std::vector<double> split_rhat;  // NaN marks undefined
  std::vector<double> ess_bulk;
  double max_split_rhat = std::numeric_limits<double>::quiet_NaN();
  int divergences = 0;
  int max_depth_hits = 0;
  std::vector<std::string> warnings;
};

namespace detail {

struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  int count = 0;
  static constexpr double gamma = 0.05;
  static constexpr double t0 = 10.0;
  static constexpr double kappa = 0.75;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = std::log(eps);
    h_bar = 0.0;
    count = 0;
  }
  double update(double accept, double target) {
    ++count;
    const double m = static_cast<double>(count);
    h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (target - accept) / (m + t0);
    log_eps = mu - std::sqrt(m) / gamma * h_bar;
    const double eta = std::pow(m, -kappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
    return std::exp(log_eps);
  }
  double averaged() const { return std::exp(log_eps_bar); }
};

// Stan-style warmup windowing: a fast opening buffer, doubling slow windows
// for metric estimation, and a fast closing buffer for step-size polish.
struct AdaptSchedule {
  int warmup = 0;
  int init_buffer = 0;
  int term_start = 0;  // first iteration of the closing buffer
  std::vector<int> window_ends;

  static AdaptSchedule build(int warmup) {
    AdaptSchedule s;
    s.warmup = warmup;
    if (warmup < 20) {
      s.init_buffer = warmup;
      s.term_start = warmup;
      return s;
    }
    int init = 75, term = 50, base = 25;
    if (init + term + base > warmup) {
      init = static_cast<int>(0.15 * warmup);
      term = static_cast<int>(0.10 * warmup);
      base = warmup - init - term;
    }
    s.init_buffer = init;
    s.term_start = warmup - term;
    int start = init;
    int width = base;
    while (true) {
      int end = start + width;
      // absorb the remainder when the next doubling would not fit
      if (end + 2 * width > s.term_start) end = s.term_start;
      s.window_ends.push_back(end);
      if (end >= s.term_start) break;
      start = end;
      width *= 2;
    }
    return s;
  }

  bool in_slow(int iter) const { return iter >= init_buffer && iter < term_start; }
  bool at_window_end(int iter) const {
    for (int e : window_ends)
      if (iter == e - 1) return true;
    return false;
  }
};

struct Welford {
  int n = 0;
  std::vector<double> mean, m2;
  void reset(int dim) {
    n = 0;
    mean.assign(dim, 0.0);
    m2.assign(dim, 0.0);
  }
  void add(std::span<const double> x) {
    ++n;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double delta = x[d] - mean[d];
      mean[d] += delta / n;
      m2[d] += delta * (x[d] - mean[d]);
    }
  }
  // Regularized variance estimate, shrunk toward a small diagonal.
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean.size(), 1.0);
    if (n < 2) return v;
    const double w = static_cast<double>(n) / (n + 5.0);
    for (std::size_t d = 0; d < v.size(); ++d) {
      v[d] = w * (m2[d] / (n - 1)) + 1e-3 * (1.0 - w);
      if (!(v[d] > 0.0)) v[d] = 1.0;
    }
    return v;
  }
};

struct PhasePoint {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

template <class F>
class NutsChain {
 public:
  NutsChain(F& f, int dim, const SamplerConfig& cfg, Rng rng)
      : f_(f), dim_(dim), cfg_(cfg), rng_(rng) {}

  void initialize() {
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<double> q(dim_);
      for (auto& x : q) x = rng_.uniform(-cfg_.init_radius, cfg_.init_radius);
      std::vector<double> g(dim_);
      const double lp = f_(q, g);
      if (std::isfinite(lp) && all_finite(g)) {
        state_.q = std::move(q);
        state_.grad = std::move(g);
        state_.logp = lp;
        inv_metric_.assign(dim_, 1.0);
        return;
      }
    }
    throw NumericalError(
        "chain initialization failed: log density non-finite at 100 diffuse starting points; "
        "the model/data combination is likely misconfigured");
  }

  double find_reasonable_epsilon() {
    double eps = 1.0;
    std::vector<double> p = sample_momentum();
    const double h0 = hamiltonian(state_.logp, p);
    auto attempt = [&](double e) {
      PhasePoint z;
      z.q = state_.q;
      z.p = p;
      z.grad = state_.grad;
      z.logp = state_.logp;
      if (!leapfrog(z, e)) return 0.0;
      const double h1 = hamiltonian(z.logp, z.p);
      return std::exp(h0 - h1);
    };
    double a = attempt(eps);
    const double dir = a > 0.5 ? 1.0 : -1.0;
    for (int it = 0; it < 100; ++it) {
      if (dir > 0 && !(a > 0.5)) break;
      if (dir < 0 && !(a < 0.5)) break;
      eps *= dir > 0 ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-10) break;
      a = attempt(eps);
    }
    return eps;
  }

  DrawStats transition(double eps) {
    return cfg_.algorithm == SamplerConfig::Algorithm::nuts ? transition_nuts(eps)
                                                            : transition_static(eps);
  }

  const std::vector<double>& position() const { return state_.q; }
  std::vector<double>& inv_metric() { return inv_metric_; }
  Rng& rng() { return rng_; }

 private:
  static bool all_finite(const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::vector<double> sample_momentum() {
    std::vector<double> p(dim_);
    for (int d = 0; d < dim_; ++d) p[d] = rng_.normal() / std::sqrt(inv_metric_[d]);
    return p;
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (int d = 0; d < dim_; ++d) k += inv_metric_[d] * p[d] * p[d];
    return 0.5 * k;
  }
  double hamiltonian(double logp, const std::vector<double>& p) const {
    return -logp + kinetic(p);
  }

  // One leapfrog step in place; false when the new point is invalid.
  bool leapfrog(PhasePoint& z, double eps) {
    for (int d = 0; d < dim_; ++d) z.p[d] += 0.5 * eps * z.grad[d];
    for (int d = 0; d < dim_; ++d) z.q[d] += eps * inv_metric_[d] * z.p[d];
    z.logp = f_(z.q, z.grad);
    if (!std::isfinite(z.logp) || !all_finite(z.grad)) return false;
    for (int d = 0; d < dim_; ++d) z.p[d] += 0.5 * eps * z.grad[d];
    return true;
  }

  struct Subtree {
    bool ok = false;        // false: divergence or internal U-turn
    bool divergent = false;
    PhasePoint begin, end;  // entry-side and far-side phase points
    std::vector<double> rho;
    std::vector<double> q_cand;
    double logp_cand = 0.0;
    double h_cand = 0.0;
    double log_weight = neg_inf;
    double alpha_sum = 0.0;
    int n_leapfrog = 0;
  };

  Subtree build_tree(int depth, const PhasePoint& from, double eps, double h0) {
    Subtree t;
    if (depth == 0) {
      PhasePoint z = from;
      t.n_leapfrog = 1;
      const bool valid = leapfrog(z, eps);
      const double h = valid ? hamiltonian(z.logp, z.p)
                             : std::numeric_limits<double>::infinity();
      const double delta = h - h0;
      if (!valid || !std::isfinite(h) || delta > cfg_.divergence_threshold) {
        t.divergent = true;
        t.alpha_sum = 0.0;
        return t;
      }
      t.ok = true;
      t.begin = z;
      t.end = z;
      t.rho = z.p;
      t.q_cand = z.q;
      t.logp_cand = z.logp;
      t.h_cand = h;
      t.log_weight = -delta;
      t.alpha_sum = std::min(1.0, std::exp(-delta));
      return t;
    }
    Subtree left = build_tree(depth - 1, from, eps, h0);
    if (!left.ok) return left;
    Subtree right = build_tree(depth - 1, left.end, eps, h0);
    left.alpha_sum += right.alpha_sum;
    left.n_leapfrog += right.n_leapfrog;
    if (!right.ok) {
      left.ok = false;
      left.divergent = right.divergent;
      return left;
    }
    const double lw = log_sum_exp(left.log_weight, right.log_weight);
    if (std::log(1.0 - rng_.uniform()) < right.log_weight - lw) {
      left.q_cand = right.q_cand;
      left.logp_cand = right.logp_cand;
      left.h_cand = right.h_cand;
    }
    left.log_weight = lw;
    for (int d = 0; d < dim_; ++d) left.rho[d] += right.rho[d];
    left.end = right.end;
    if (uturn(left.begin.p, left.end.p, left.rho)) left.ok = false;
    return left;
  }

  bool uturn(const std::vector<double>& p_begin, const std::vector<double>& p_end,
             const std::vector<double>& rho) const {
    double fwd = 0.0, bwd = 0.0;
    for (int d = 0; d < dim_; ++d) {
      fwd += inv_metric_[d] * p_end[d] * rho[d];
      bwd += inv_metric_[d] * p_begin[d] * rho[d];
    }
    return fwd <= 0.0 || bwd <= 0.0;
  }

  DrawStats transition_nuts(double eps) {
    DrawStats out;
    PhasePoint z = state_;
    z.p = sample_momentum();
    const double h0 = hamiltonian(z.logp, z.p);

    PhasePoint fwd = z, bwd = z;
    std::vector<double> rho = z.p;
    std::vector<double> q_sel = z.q;
    double logp_sel = z.logp;
    double h_sel = h0;
    double log_weight = 0.0;  // weight of the initial point: exp(h0 - h0)
    double alpha_sum = 0.0;
    int n_leapfrog = 0;
    int depth = 0;

    while (depth < cfg_.max_tree_depth) {
      const bool forward = rng_.bernoulli(0.5);
      const double signed_eps = forward ? eps : -eps;
      const Subtree sub = build_tree(depth, forward ? fwd : bwd, signed_eps, h0);
      alpha_sum += sub.alpha_sum;
      n_leapfrog += sub.n_leapfrog;
      if (!sub.ok) {
        out.divergent = sub.divergent;
        break;
      }
      // biased progressive selection toward the new subtree
      if (std::log(1.0 - rng_.uniform()) < sub.log_weight - log_weight) {
        q_sel = sub.q_cand;
        logp_sel = sub.logp_cand;
        h_sel = sub.h_cand;
      }
      log_weight = log_sum_exp(log_weight, sub.log_weight);
      for (int d = 0; d < dim_; ++d) rho[d] += sub.rho[d];
      if (forward)
        fwd = sub.end;
      else
        bwd = sub.end;
      ++depth;
      if (uturn(bwd.p, fwd.p, rho)) break;
    }

    out.tree_depth = depth;
    out.accept_prob = n_leapfrog > 0 ? alpha_sum / n_leapfrog : 0.0;
    out.energy = h_sel;

    state_.q = q_sel;
    state_.logp = logp_sel;
    state_.grad.resize(dim_);
    f_(state_.q, state_.grad);  // refresh gradient at the selected point
    return out;
  }

  DrawStats transition_static(double eps) {
    DrawStats out;
    PhasePoint z = state_;
    z.p = sample_momentum();
    const double h0 = hamiltonian(z.logp, z.p);
    bool valid = true;
    for (int l = 0; l < cfg_.static_leapfrogs && valid; ++l) valid = leapfrog(z, eps);
    const double h1 = valid ? hamiltonian(z.logp, z.p)
                            : std::numeric_limits<double>::infinity();
    const double delta = h1 - h0;
    out.divergent = !std::isfinite(h1) || delta > cfg_.divergence_threshold;
    const double accept = out.divergent ? 0.0 : std::min(1.0, std::exp(-delta));
    out.accept_prob = accept;
    out.tree_depth = cfg_.static_leapfrogs;
    if (!out.divergent && rng_.uniform() < accept) {
      state_ = z;
      out.energy = h1;
    } else {
      out.energy = h0;
    }
    return out;
  }

  F& f_;
  int dim_;
  SamplerConfig cfg_;
  Rng rng_;
  PhasePoint state_;
  std::vector<double> inv_metric_;
};

}  // namespace detail

// Runs `chains` adaptive chains over the callable
//   double f(std::span<const double> q, std::vector<double>& grad)
// and records the post-warmup draws. Deterministic given the seed: each
// chain draws from its own stream keyed by (seed, chain index), so results
// do not depend on scheduling.
template <class F>
DrawsStore run_chains(F&& f, int dim, const SamplerConfig& cfg) {
  if (dim <= 0) throw Error("sampler dimension must be positive");
  if (cfg.chains < 1 || cfg.warmup_iters < 1 || cfg.sampling_iters < 1)
    throw Error("sampler configuration requires chains >= 1 and iterations >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0))
    throw Error("target_accept must be in (0, 1)");

  DrawsStore store;
  store.chains = cfg.chains;
  store.iters = cfg.sampling_iters;
  store.dimension = dim;
  store.values.assign(static_cast<std::size_t>(cfg.chains) * cfg.sampling_iters * dim, 0.0);
  store.stats.assign(static_cast<std::size_t>(cfg.chains) * cfg.sampling_iters, {});
  store.step_size.assign(cfg.chains, 0.0);
  store.inv_metric.assign(static_cast<std::size_t>(cfg.chains) * dim, 1.0);

  const auto schedule = detail::AdaptSchedule::build(cfg.warmup_iters);

  for (int chain = 0; chain < cfg.chains; ++chain) {
    detail::NutsChain<std::remove_reference_t<F>> nc(f, dim, cfg, Rng::stream(cfg.seed, chain));
    nc.initialize();
    double eps = nc.find_reasonable_epsilon();
    detail::DualAveraging da;
    da.restart(eps);
    detail::Welford welford;
    welford.reset(dim);

    for (int iter = 0; iter < cfg.warmup_iters; ++iter) {
      const auto st = nc.transition(eps);
      eps = da.update(st.accept_prob, cfg.target_accept);
      if (schedule.in_slow(iter)) {
        welford.add(nc.position());
        if (schedule.at_window_end(iter)) {
          nc.inv_metric() = welford.regularized_variance();
          welford.reset(dim);
          eps = nc.find_reasonable_epsilon();
          da.restart(eps);
        }
      }
    }
    eps = da.averaged();

    for (int iter = 0; iter < cfg.sampling_iters; ++iter) {
      const auto st = nc.transition(eps);
      const auto& q = nc.position();
      std::copy(q.begin(), q.end(),
                store.values.begin() +
                    (static_cast<std::size_t>(chain) * cfg.sampling_iters + iter) * dim);
      store.stats[static_cast<std::size_t>(chain) * cfg.sampling_iters + iter] = st;
    }
    store.step_size[chain] = eps;
    std::copy(nc.inv_metric().begin(), nc.inv_metric().end(),
              store.inv_metric.begin() + static_cast<std::size_t>(chain) * dim);
  }
  return store;
}

// Extracts one coordinate as per-chain series.
inline std::vector<std::vector<double>> param_chains(const DrawsStore& store, int d) {
  std::vector<std::vector<double>> out(store.chains);
  for (int c = 0; c < store.chains; ++c) {
    out[c].reserve(store.iters);
    for (int i = 0; i < store.iters; ++i) out[c].push_back(store.value(c, i, d));
  }
  return out;
}

struct FitResult {
  DrawsStore draws;
  Diagnostics diagnostics;
};

// Fits a model variant: composes the marginalized posterior with the sampler
// and computes convergence diagnostics on the constrained draws. High Rhat
// and divergences are warnings, not errors.
inline FitResult fit(const ModelSpec& spec, const RatingDataset& data, const SamplerConfig& cfg) {
  const Posterior post(spec, data);
  auto fn = [&post](std::span<const double> q, std::vector<double>& g) {
    return post.log_density_gradient(q, g);
  };
  FitResult r;
  r.draws = run_chains(fn, post.dimension(), cfg);
  r.draws.model_name = spec.name;

  const auto& L = post.layout();
  Diagnostics& diag = r.diagnostics;
  diag.param_names = param_column_names(L);

  // constrained series per column
  std::vector<std::vector<std::vector<double>>> series(
      L.dimension, std::vector<std::vector<double>>(r.draws.chains));
  std::vector<double> c;
  for (int chain = 0; chain < r.draws.chains; ++chain) {
    for (int i = 0; i < r.draws.iters; ++i) {
      constrain_vec(spec, L, r.draws.draw(chain, i), c);
      for (int d = 0; d < L.dimension; ++d) series[d][chain].push_back(c[d]);
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double max_rhat = nan;
  for (int d = 0; d < L.dimension; ++d) {
    const auto rh = split_rhat(series[d]);
    const auto ess = ess_bulk(series[d]);
    diag.split_rhat.push_back(rh.value_or(nan));
    diag.ess_bulk.push_back(ess.value_or(nan));
    if (rh && (!(max_rhat == max_rhat) || *rh > max_rhat)) max_rhat = *rh;
  }
  diag.max_split_rhat = max_rhat;
  for (int chain = 0; chain < r.draws.chains; ++chain) {
    for (int i = 0; i < r.draws.iters; ++i) {
      const auto& st = r.draws.stat(chain, i);
      if (st.divergent) ++diag.divergences;
      if (st.tree_depth >= cfg.max_tree_depth) ++diag.max_depth_hits;
    }
  }
  if (max_rhat == max_rhat && max_rhat > 1.01) {
    diag.warnings.push_back("max split-Rhat " + std::to_string(max_rhat) +
                            " exceeds 1.01; chains may not have mixed");
  }
  if (diag.divergences > 0) {
    diag.warnings.push_back(std::to_string(diag.divergences) +
                            " divergent transitions after warmup");
  }
  return r;
}

// Constrained parameter blocks for every post-warmup draw, chain-major.
inline std::vector<ParamBlock> constrained_draws(const ModelSpec& spec, const ParamLayout& L,
                                                 const DrawsStore& store) {
  std::vector<ParamBlock> out;
  out.reserve(static_cast<std::size_t>(store.num_draws()));
  std::vector<double> c;
  for (int chain = 0; chain < store.chains; ++chain) {
    for (int i = 0; i < store.iters; ++i) {
      constrain_vec(spec, L, store.draw(chain, i), c);
      out.push_back(param_block_from_flat(L, c));
    }
  }
  return out;
}

}  // namespace crowdrate

#endif
