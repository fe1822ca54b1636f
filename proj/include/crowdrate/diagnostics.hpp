#ifndef CROWDRATE_DIAGNOSTICS_HPP
#define CROWDRATE_DIAGNOSTICS_HPP

#include <cmath>
#include <optional>
#include <vector>

namespace crowdrate {

namespace detail {

inline double chain_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double chain_var(const std::vector<double>& x, double mean) {
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size() - 1);
}

// Biased (divide by n) autocovariance at the given lag.
inline double autocov(const std::vector<double>& x, double mean, int lag) {
  const int n = static_cast<int>(x.size());
  double s = 0.0;
  for (int i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}

inline std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    halves.emplace_back(c.begin(), c.begin() + h);
    halves.emplace_back(c.end() - h, c.end());
  }
  return halves;
}

}  // namespace detail

// Split-Rhat: each chain is halved and the usual between/within variance
// ratio is taken over the half-chains. Returns nullopt when the draws carry
// no variance (undefined, deliberately distinct from 1.0).
inline std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.empty() || chains.front().size() < 4) return std::nullopt;
  const auto halves = detail::split_halves(chains);
  const int m = static_cast<int>(halves.size());
  const double n = static_cast<double>(halves.front().size());

  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double mu = detail::chain_mean(h);
    means.push_back(mu);
    w += detail::chain_var(h, mu);
  }
  w /= static_cast<double>(m);
  const double grand = detail::chain_mean(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / static_cast<double>(m - 1);

  if (!(w > 0.0)) return std::nullopt;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Bulk effective sample size via multi-chain autocorrelations with Geyer's
// initial positive-pair truncation.
inline std::optional<double> ess_bulk(const std::vector<std::vector<double>>& chains) {
  if (chains.empty() || chains.front().size() < 8) return std::nullopt;
  const auto halves = detail::split_halves(chains);
  const int m = static_cast<int>(halves.size());
  const int n = static_cast<int>(halves.front().size());

  std::vector<double> means(m);
  std::vector<double> acov0(m);
  for (int c = 0; c < m; ++c) {
    means[c] = detail::chain_mean(halves[c]);
    acov0[c] = detail::autocov(halves[c], means[c], 0);
  }
  double mean_var = 0.0;
  for (double a : acov0) mean_var += a;
  mean_var = mean_var / m * n / (n - 1.0);
  double var_plus = mean_var * (n - 1.0) / n;
  if (m > 1) {
    const double grand = detail::chain_mean(means);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    var_plus += b / (m - 1);
  }
  if (!(var_plus > 0.0)) return std::nullopt;

  auto rho = [&](int t) {
    double acc = 0.0;
    for (int c = 0; c < m; ++c) acc += detail::autocov(halves[c], means[c], t);
    return 1.0 - (mean_var - acc / m) / var_plus;
  };

  // Geyer pairs: accumulate rho(2k) + rho(2k+1) while positive, enforcing a
  // non-increasing sequence of pair sums.
  double pair_prev = 1.0 + rho(1);
  double sum_pairs = pair_prev;
  int t = 2;
  while (t + 1 < n) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    if (pair > pair_prev) pair = pair_prev;  // initial monotone correction
    sum_pairs += pair;
    pair_prev = pair;
    t += 2;
  }
  double tau = -1.0 + 2.0 * sum_pairs;
  if (!(tau > 0.0)) tau = 1.0 / static_cast<double>(m * n);  // antithetic floor
  return static_cast<double>(m) * n / tau;
}

}  // namespace crowdrate

#endif
