#ifndef CROWDRATE_EVALUATE_HPP
#define CROWDRATE_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "crowdrate/dataset.hpp"
#include "crowdrate/error.hpp"
#include "crowdrate/kernel.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "crowdrate/posterior.hpp"
#include "crowdrate/rng.hpp"

namespace crowdrate {

enum class PpcAxis { rater, item };

// ---------------------------------------------------------------------------
// replicated data
// ---------------------------------------------------------------------------

struct Replicate {
  std::vector<int> ratings;  // at the skeleton's (item, rater) positions
  std::vector<int> z;
};

// Draw z_i ~ bernoulli(pi) per item, then one rating per skeleton position
// from the rating distribution.
inline Replicate simulate_replicate(const ModelSpec& spec, const ParamBlock& p,
                                    const RatingDataset& skeleton, Rng& rng) {
  Replicate rep;
  rep.z.resize(skeleton.num_items);
  for (int i = 0; i < skeleton.num_items; ++i) rep.z[i] = rng.bernoulli(p.pi) ? 1 : 0;
  rep.ratings.resize(skeleton.num_ratings());
  for (int n = 0; n < skeleton.num_ratings(); ++n) {
    const double p1 =
        rating_one_prob(spec, p, skeleton.item[n], skeleton.rater[n], rep.z[skeleton.item[n]]);
    rep.ratings[n] = rng.bernoulli(p1) ? 1 : 0;
  }
  return rep;
}

inline Replicate simulate_replicate(const ModelSpec& spec, const ParamBlock& p,
                                    const RatingDataset& skeleton, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0);
  return simulate_replicate(spec, p, skeleton, rng);
}

// ---------------------------------------------------------------------------
// marginal vote statistics
// ---------------------------------------------------------------------------

inline std::vector<int> stat_positive_per_rater(const RatingDataset& data,
                                                const std::vector<int>* ratings = nullptr) {
  std::vector<int> counts(static_cast<std::size_t>(data.num_raters), 0);
  for (int n = 0; n < data.num_ratings(); ++n)
    counts[data.rater[n]] += ratings ? (*ratings)[n] : data.rating[n];
  return counts;
}

inline std::vector<int> stat_positive_per_item(const RatingDataset& data,
                                               const std::vector<int>* ratings = nullptr) {
  std::vector<int> counts(static_cast<std::size_t>(data.num_items), 0);
  for (int n = 0; n < data.num_ratings(); ++n)
    counts[data.item[n]] += ratings ? (*ratings)[n] : data.rating[n];
  return counts;
}

namespace detail {

// Per-cell mean and variance of the positive-vote count under theta, exact
// under the generative model: ratings are independent across items and share
// z within an item, so each (item, cell-slice) group contributes a two-point
// mixture of sums of independent Bernoullis.
struct CellMoments {
  std::vector<double> mean, var;
};

inline CellMoments vote_count_moments(const ModelSpec& spec, const ParamBlock& p,
                                      const RatingDataset& data, PpcAxis axis) {
  const int cells = axis == PpcAxis::rater ? data.num_raters : data.num_items;
  CellMoments cm;
  cm.mean.assign(cells, 0.0);
  cm.var.assign(cells, 0.0);
  const double pi = p.pi;
  // group ratings by (item, cell); groups within an item share z_i
  std::vector<double> m1(cells, 0.0), m0(cells, 0.0), v1(cells, 0.0), v0(cells, 0.0);
  std::vector<int> last_item(cells, -1);
  std::vector<int> touched;
  for (int i = 0; i < data.num_items; ++i) {
    touched.clear();
    for (int n : data.item_ratings[i]) {
      const int cell = axis == PpcAxis::rater ? data.rater[n] : data.item[n];
      const double p1 = rating_one_prob(spec, p, i, data.rater[n], 1);
      const double p0 = rating_one_prob(spec, p, i, data.rater[n], 0);
      if (last_item[cell] != i) {
        last_item[cell] = i;
        touched.push_back(cell);
      }
      m1[cell] += p1;
      m0[cell] += p0;
      v1[cell] += p1 * (1.0 - p1);
      v0[cell] += p0 * (1.0 - p0);
    }
    for (int cell : touched) {
      cm.mean[cell] += pi * m1[cell] + (1.0 - pi) * m0[cell];
      cm.var[cell] += pi * v1[cell] + (1.0 - pi) * v0[cell] +
                      pi * (1.0 - pi) * (m1[cell] - m0[cell]) * (m1[cell] - m0[cell]);
      m1[cell] = m0[cell] = v1[cell] = v0[cell] = 0.0;
    }
  }
  return cm;
}

inline double discrepancy(const std::vector<int>& counts, const CellMoments& cm) {
  double t = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double d = counts[k] - cm.mean[k];
    t += d * d / (cm.var[k] + 1e-8);
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// posterior predictive p-values
// ---------------------------------------------------------------------------

struct PpcTrace {
  std::vector<double> observed;    // T(y, theta_s)
  std::vector<double> replicated;  // T(y_rep_s, theta_s)
  double p_value = 0.0;
};

// Variance-standardized discrepancy PPC: one replicate per posterior draw;
// p is the fraction of draws whose replicated discrepancy is at least the
// observed one (ties count).
inline PpcTrace ppc_trace(const ModelSpec& spec, const std::vector<ParamBlock>& draws,
                          const RatingDataset& data, PpcAxis axis, std::uint64_t seed) {
  if (draws.size() < 100) {
    throw Error("posterior predictive checks need at least 100 draws, got " +
                std::to_string(draws.size()));
  }
  PpcTrace out;
  const auto obs_counts =
      axis == PpcAxis::rater ? stat_positive_per_rater(data) : stat_positive_per_item(data);
  int exceed = 0;
  for (std::size_t s = 0; s < draws.size(); ++s) {
    const ParamBlock& p = draws[s];
    const auto cm = detail::vote_count_moments(spec, p, data, axis);
    Rng rng = Rng::stream(seed, s);
    const auto rep = simulate_replicate(spec, p, data, rng);
    const auto rep_counts = axis == PpcAxis::rater ? stat_positive_per_rater(data, &rep.ratings)
                                                   : stat_positive_per_item(data, &rep.ratings);
    const double t_obs = detail::discrepancy(obs_counts, cm);
    const double t_rep = detail::discrepancy(rep_counts, cm);
    out.observed.push_back(t_obs);
    out.replicated.push_back(t_rep);
    if (t_rep >= t_obs) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / static_cast<double>(draws.size());
  return out;
}

inline double ppc_pvalue(const ModelSpec& spec, const std::vector<ParamBlock>& draws,
                         const RatingDataset& data, PpcAxis axis, std::uint64_t seed) {
  return ppc_trace(spec, draws, data, axis, seed).p_value;
}

// ---------------------------------------------------------------------------
// vote histogram (positive votes per item)
// ---------------------------------------------------------------------------

struct VoteHistogram {
  std::vector<int> k;               // 0..max ratings per item
  std::vector<double> observed;     // item counts with k positive votes
  std::vector<double> replicate_mean;
  std::vector<double> lo90, hi90;   // central 90% band of replicate counts
};

inline VoteHistogram vote_histogram(const ModelSpec& spec, const std::vector<ParamBlock>& draws,
                                    const RatingDataset& data, std::uint64_t seed) {
  int max_votes = 0;
  for (const auto& ns : data.item_ratings)
    max_votes = std::max(max_votes, static_cast<int>(ns.size()));
  const int bins = max_votes + 1;

  auto histogram = [&](const std::vector<int>* ratings) {
    std::vector<double> h(bins, 0.0);
    const auto counts = stat_positive_per_item(data, ratings);
    for (int c : counts) h[c] += 1.0;
    return h;
  };

  VoteHistogram out;
  out.k.resize(bins);
  std::iota(out.k.begin(), out.k.end(), 0);
  out.observed = histogram(nullptr);

  std::vector<std::vector<double>> reps(bins, std::vector<double>(draws.size(), 0.0));
  for (std::size_t s = 0; s < draws.size(); ++s) {
    Rng rng = Rng::stream(seed, s);
    const auto rep = simulate_replicate(spec, draws[s], data, rng);
    const auto h = histogram(&rep.ratings);
    for (int b = 0; b < bins; ++b) reps[b][s] = h[b];
  }
  for (int b = 0; b < bins; ++b) {
    auto& r = reps[b];
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / r.size();
    std::sort(r.begin(), r.end());
    double lo = r[static_cast<std::size_t>(0.05 * (r.size() - 1))];
    double hi = r[static_cast<std::size_t>(std::ceil(0.95 * (r.size() - 1)))];
    // the band always covers the replicate mean
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    out.replicate_mean.push_back(mean);
    out.lo90.push_back(lo);
    out.hi90.push_back(hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// generalized Pareto tail fit (profile posterior mean over a theta grid,
// with the standard weak prior pulling k toward 1/2)
// ---------------------------------------------------------------------------

struct GpdFit {
  double k = 0.0;
  double sigma = 1.0;
};

inline GpdFit gpd_fit(std::vector<double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 5) throw Error("generalized Pareto fit needs at least 5 tail samples");
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) throw Error("degenerate tail: all samples equal");

  const int m = 30 + static_cast<int>(std::sqrt(static_cast<double>(n)));
  int quart = static_cast<int>(static_cast<double>(n) / 4.0 + 0.5);
  quart = std::max(quart, 1);
  const double xstar = x[quart - 1];
  const double xmax = x[n - 1];

  std::vector<double> theta(m), loglik(m);
  for (int j = 0; j < m; ++j) {
    theta[j] = 1.0 / xmax + (1.0 - std::sqrt(static_cast<double>(m) / (j + 0.5))) / (3.0 * xstar);
    double kj = 0.0;
    for (double v : x) kj += std::log1p(-theta[j] * v);
    kj /= n;
    loglik[j] = n * (std::log(-theta[j] / kj) - kj - 1.0);
  }
  const double lse = log_sum_exp(loglik);
  double theta_hat = 0.0;
  for (int j = 0; j < m; ++j) theta_hat += theta[j] * std::exp(loglik[j] - lse);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= n;
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  fit.k = (k * n + 5.0) / (n + 10.0);  // weakly informative prior on the shape
  return fit;
}

inline double gpd_quantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

// ---------------------------------------------------------------------------
// Pareto smoothed importance sampling
// ---------------------------------------------------------------------------

struct PsisResult {
  std::vector<double> weights;  // self-normalized
  double khat = std::numeric_limits<double>::quiet_NaN();  // NaN: degenerate tail
};

inline PsisResult psis_smooth(std::vector<double> log_ratios) {
  const int s = static_cast<int>(log_ratios.size());
  if (s < 25) throw Error("PSIS needs at least 25 draws, got " + std::to_string(s));
  const double mx = *std::max_element(log_ratios.begin(), log_ratios.end());
  for (double& lr : log_ratios) lr -= mx;

  const int tail_len = static_cast<int>(
      std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(static_cast<double>(s)))));
  std::vector<int> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return log_ratios[a] < log_ratios[b]; });

  PsisResult out;
  const double cutoff_lw = log_ratios[order[s - tail_len - 1]];
  const double cutoff = std::exp(cutoff_lw);
  // tail members lie strictly above the cutoff; ties stay unsmoothed
  std::vector<int> tail;
  for (int t = s - tail_len; t < s; ++t) {
    if (log_ratios[order[t]] > cutoff_lw) tail.push_back(order[t]);
  }
  std::vector<double> exceed;
  exceed.reserve(tail.size());
  for (int idx : tail) exceed.push_back(std::exp(log_ratios[idx]) - cutoff);
  const bool degenerate = static_cast<int>(tail.size()) < 5 ||
                          (!exceed.empty() && exceed.front() == exceed.back());
  if (!degenerate) {
    const GpdFit fit = gpd_fit(exceed);
    out.khat = fit.k;
    const int m = static_cast<int>(tail.size());
    for (int t = 0; t < m; ++t) {
      const double q = (t + 0.5) / m;
      const double smoothed = cutoff + gpd_quantile(q, fit.k, fit.sigma);
      // truncate at the raw maximum (which is exp(0) after centering)
      log_ratios[tail[t]] = std::min(std::log(smoothed), 0.0);
    }
  }
  // self-normalize
  const double lse = log_sum_exp(log_ratios);
  out.weights.resize(s);
  for (int t = 0; t < s; ++t) out.weights[t] = std::exp(log_ratios[t] - lse);
  return out;
}

// ---------------------------------------------------------------------------
// PSIS-LOO expected log pointwise predictive density
// ---------------------------------------------------------------------------

enum class LooUnit { rating, item };

struct LooReport {
  LooUnit unit = LooUnit::rating;
  double elpd_loo = 0.0;
  std::vector<double> pointwise;  // per-unit elpd contribution
  std::vector<double> pareto_k;   // NaN where the tail was degenerate
  int n_high_k = 0;               // k-hat > 0.7
  static constexpr double high_k_threshold = 0.7;
};

inline LooReport elpd_loo(const ModelSpec& spec, const std::vector<ParamBlock>& draws,
                          const RatingDataset& data, LooUnit unit = LooUnit::rating) {
  const int s = static_cast<int>(draws.size());
  const int n_units = unit == LooUnit::rating ? data.num_ratings() : data.num_items;
  // log p(unit | theta_s) matrix, draw-major
  std::vector<std::vector<double>> ll(static_cast<std::size_t>(s));
  for (int d = 0; d < s; ++d) {
    if (unit == LooUnit::rating) {
      ll[d] = pointwise_log_lik(spec, draws[d], data);
    } else {
      ll[d].reserve(n_units);
      for (int i = 0; i < data.num_items; ++i)
        ll[d].push_back(item_log_marginal(spec, draws[d], data, i));
    }
  }
  LooReport rep;
  rep.unit = unit;
  std::vector<double> lr(s), lw(s);
  for (int u = 0; u < n_units; ++u) {
    for (int d = 0; d < s; ++d) lr[d] = -ll[d][u];
    const PsisResult psis = psis_smooth(lr);
    for (int d = 0; d < s; ++d) lw[d] = std::log(psis.weights[d]) + ll[d][u];
    const double elpd = log_sum_exp(lw);
    rep.pointwise.push_back(elpd);
    rep.pareto_k.push_back(psis.khat);
    if (psis.khat == psis.khat && psis.khat > LooReport::high_k_threshold) ++rep.n_high_k;
    rep.elpd_loo += elpd;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// combined posterior predictive report
// ---------------------------------------------------------------------------

struct PpcReport {
  double rater_p_value = 0.0;
  double ratings_p_value = 0.0;  // per-item positive-vote statistic
  PpcTrace rater_trace;
  PpcTrace item_trace;
  std::vector<int> observed_positive_per_rater;
  std::vector<int> observed_positive_per_item;
  VoteHistogram histogram;
};

inline PpcReport ppc_report(const ModelSpec& spec, const std::vector<ParamBlock>& draws,
                            const RatingDataset& data, std::uint64_t seed) {
  PpcReport rep;
  rep.rater_trace = ppc_trace(spec, draws, data, PpcAxis::rater, splitmix64(seed) + 1);
  rep.item_trace = ppc_trace(spec, draws, data, PpcAxis::item, splitmix64(seed) + 2);
  rep.rater_p_value = rep.rater_trace.p_value;
  rep.ratings_p_value = rep.item_trace.p_value;
  rep.observed_positive_per_rater = stat_positive_per_rater(data);
  rep.observed_positive_per_item = stat_positive_per_item(data);
  rep.histogram = vote_histogram(spec, draws, data, splitmix64(seed) + 3);
  return rep;
}

}  // namespace crowdrate

#endif
