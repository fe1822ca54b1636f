#ifndef CROWDRATE_TRAINLAB_HPP
#define CROWDRATE_TRAINLAB_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crowdrate/error.hpp"
#include "crowdrate/io.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/rng.hpp"
#include "crowdrate/sampler.hpp"

namespace crowdrate {

// Synthetic classification problem with correlated predictors: rows of X are
// zero-mean Gaussian with covariance Sigma_{m,n} = rho^{|m-n|}, and the true
// success probability is invlogit(x . coef).
struct RegressionSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd coef;
  Eigen::VectorXd prob;
};

inline RegressionSet gen_regression_set(int dims, int rows, double rho, std::uint64_t seed) {
  if (dims < 1 || rows < 1) throw Error("regression set needs dims >= 1 and rows >= 1");
  if (!(std::abs(rho) < 1.0)) throw Error("|rho| must be below 1");
  Eigen::MatrixXd sigma(dims, dims);
  for (int m = 0; m < dims; ++m)
    for (int n = 0; n < dims; ++n) sigma(m, n) = std::pow(rho, std::abs(m - n));
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance Cholesky failed");
  const Eigen::MatrixXd chol = llt.matrixL();

  Rng rng = Rng::stream(seed, 0);
  RegressionSet set;
  set.X.resize(rows, dims);
  Eigen::VectorXd z(dims);
  for (int n = 0; n < rows; ++n) {
    for (int d = 0; d < dims; ++d) z(d) = rng.normal();
    set.X.row(n) = (chol * z).transpose();
  }
  set.coef.resize(dims);
  for (int d = 0; d < dims; ++d) set.coef(d) = rng.normal();
  set.prob = (set.X * set.coef).unaryExpr([](double t) { return invlogit(t); });
  return set;
}

enum class Strategy { max_prob, log_odds, noisy_odds, random_label, weighted };
enum class Estimator { bayes_mean, ridge_mle };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::max_prob: return "max_prob";
    case Strategy::log_odds: return "log_odds";
    case Strategy::noisy_odds: return "noisy_odds";
    case Strategy::random_label: return "random";
    case Strategy::weighted: return "weighted";
  }
  return "?";
}
inline const char* estimator_name(Estimator e) {
  return e == Estimator::bayes_mean ? "bayes_mean" : "ridge_mle";
}
inline const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> v = {Strategy::max_prob, Strategy::log_odds,
                                          Strategy::noisy_odds, Strategy::random_label,
                                          Strategy::weighted};
  return v;
}

// Training data produced by a strategy. Linear strategies carry real-valued
// targets; classification strategies carry (row, outcome, weight) examples —
// the weighted strategy duplicates each row with outcome 1 at weight q and
// outcome 0 at weight 1-q.
struct TrainingTarget {
  bool real_valued = false;
  Eigen::VectorXd targets;
  std::vector<int> row;
  std::vector<int> outcome;
  std::vector<double> weight;
};

inline TrainingTarget make_training_target(Strategy strategy, const RegressionSet& set,
                                           std::uint64_t seed) {
  const int n = static_cast<int>(set.X.rows());
  TrainingTarget t;
  Rng rng = Rng::stream(seed, 1 + static_cast<std::uint64_t>(strategy));
  switch (strategy) {
    case Strategy::log_odds:
      t.real_valued = true;
      t.targets = set.X * set.coef;
      return t;
    case Strategy::noisy_odds: {
      t.real_valued = true;
      t.targets = set.X * set.coef;
      for (int k = 0; k < n; ++k) t.targets(k) += rng.normal();
      return t;
    }
    case Strategy::max_prob:
      for (int k = 0; k < n; ++k) {
        t.row.push_back(k);
        t.outcome.push_back(set.prob(k) > 0.5 ? 1 : 0);  // ties go to 0
        t.weight.push_back(1.0);
      }
      return t;
    case Strategy::random_label:
      for (int k = 0; k < n; ++k) {
        t.row.push_back(k);
        t.outcome.push_back(rng.bernoulli(set.prob(k)) ? 1 : 0);
        t.weight.push_back(1.0);
      }
      return t;
    case Strategy::weighted:
      for (int k = 0; k < n; ++k) {
        t.row.push_back(k);
        t.outcome.push_back(1);
        t.weight.push_back(set.prob(k));
        t.row.push_back(k);
        t.outcome.push_back(0);
        t.weight.push_back(1.0 - set.prob(k));
      }
      return t;
  }
  throw Error("unknown strategy");
}

// Closed-form ridge for real-valued targets: (X'X + lambda I)^{-1} X' t.
// lambda = 1 mirrors the unit-normal prior used everywhere else.
inline Eigen::VectorXd fit_ridge_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                                        double lambda = 1.0) {
  Eigen::MatrixXd a = X.transpose() * X;
  a.diagonal().array() += lambda;
  return a.ldlt().solve(X.transpose() * t);
}

// Weighted logistic regression with the 0.5 * ||b||^2 penalty, solved by
// Newton iterations to gradient norm below 1e-8.
inline Eigen::VectorXd fit_ridge_logistic(const Eigen::MatrixXd& X, const TrainingTarget& t,
                                          int max_iters = 100) {
  const int d = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());
  for (double w : t.weight)
    if (w < 0.0) throw Error("weights must be nonnegative");

  // aggregate per-row fractional outcome and total weight
  Eigen::VectorXd y_eff = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_tot = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < t.row.size(); ++k) {
    w_tot(t.row[k]) += t.weight[k];
    if (t.outcome[k] == 1) y_eff(t.row[k]) += t.weight[k];
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd eta = X * b;
    const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return invlogit(v); });
    const Eigen::VectorXd g = X.transpose() * (y_eff - w_tot.cwiseProduct(mu)) - b;
    if (g.norm() < 1e-8) return b;
    const Eigen::VectorXd h = w_tot.array() * mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd hess = X.transpose() * h.asDiagonal() * X;
    hess.diagonal().array() += 1.0;
    b += hess.ldlt().solve(g);
  }
  Eigen::VectorXd eta = X * b;
  const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return invlogit(v); });
  const double gnorm = (X.transpose() * (y_eff - w_tot.cwiseProduct(mu)) - b).norm();
  if (gnorm >= 1e-8)
    throw NumericalError("ridge logistic Newton did not converge; gradient norm " +
                         std::to_string(gnorm));
  return b;
}

// Posterior mean under the standard-normal prior, via the sampler. Linear
// strategies use a unit-variance Gaussian likelihood; classification
// strategies use the (weighted) logistic likelihood.
inline Eigen::VectorXd fit_bayes_mean(const Eigen::MatrixXd& X, const TrainingTarget& t,
                                      const SamplerConfig& cfg) {
  const int d = static_cast<int>(X.cols());
  const int n = static_cast<int>(X.rows());

  Eigen::VectorXd y_eff = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w_tot = Eigen::VectorXd::Zero(n);
  if (!t.real_valued) {
    for (std::size_t k = 0; k < t.row.size(); ++k) {
      w_tot(t.row[k]) += t.weight[k];
      if (t.outcome[k] == 1) y_eff(t.row[k]) += t.weight[k];
    }
  }

  auto logp = [&](std::span<const double> q, std::vector<double>& grad) {
    const Eigen::Map<const Eigen::VectorXd> b(q.data(), d);
    Eigen::VectorXd g(d);
    double lp = -0.5 * b.squaredNorm();
    g = -b;
    const Eigen::VectorXd eta = X * b;
    if (t.real_valued) {
      const Eigen::VectorXd r = t.targets - eta;
      lp += -0.5 * r.squaredNorm();
      g += X.transpose() * r;
    } else {
      for (int k = 0; k < n; ++k) {
        // w * [y log mu + (1-y) log(1-mu)] with fractional y
        lp += y_eff(k) * log_invlogit(eta(k)) + (w_tot(k) - y_eff(k)) * log_invlogit(-eta(k));
      }
      const Eigen::VectorXd mu = eta.unaryExpr([](double v) { return invlogit(v); });
      g += X.transpose() * (y_eff - w_tot.cwiseProduct(mu));
    }
    grad.assign(g.data(), g.data() + d);
    return lp;
  };

  const DrawsStore store = run_chains(logp, d, cfg);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int c = 0; c < store.chains; ++c)
    for (int i = 0; i < store.iters; ++i) {
      const auto q = store.draw(c, i);
      for (int k = 0; k < d; ++k) mean(k) += q[k];
    }
  mean /= static_cast<double>(store.num_draws());
  return mean;
}

struct StrategyResult {
  int trial = 0;
  Strategy strategy = Strategy::max_prob;
  Estimator estimator = Estimator::ridge_mle;
  double l2_error = 0.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  int trials = 32;
  int dims = 32;
  int rows = 1024;
  double rho = 0.9;
  std::uint64_t seed = 1;
  SamplerConfig sampler;  // used by the Bayesian estimator
};

// One trial: a fresh paired (X, coef), all five strategies under both
// estimators on identical targets.
inline std::vector<StrategyResult> run_trial(const ExperimentConfig& cfg, int trial) {
  const std::uint64_t trial_seed = splitmix64(cfg.seed) + static_cast<std::uint64_t>(trial);
  const RegressionSet set = gen_regression_set(cfg.dims, cfg.rows, cfg.rho, trial_seed);
  std::vector<StrategyResult> out;
  for (Strategy strategy : all_strategies()) {
    const TrainingTarget target = make_training_target(strategy, set, trial_seed);
    for (Estimator estimator : {Estimator::bayes_mean, Estimator::ridge_mle}) {
      Eigen::VectorXd bhat;
      if (estimator == Estimator::ridge_mle) {
        bhat = target.real_valued ? fit_ridge_linear(set.X, target.targets)
                                  : fit_ridge_logistic(set.X, target);
      } else {
        SamplerConfig scfg = cfg.sampler;
        scfg.seed = splitmix64(trial_seed) + static_cast<std::uint64_t>(strategy) * 101 + 11;
        bhat = fit_bayes_mean(set.X, target, scfg);
      }
      StrategyResult r;
      r.trial = trial;
      r.strategy = strategy;
      r.estimator = estimator;
      r.l2_error = (bhat - set.coef).norm();
      r.seed = trial_seed;
      out.push_back(r);
    }
  }
  return out;
}

inline std::vector<StrategyResult> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw Error("experiment needs at least one trial");
  std::vector<StrategyResult> all;
  for (int trial = 0; trial < cfg.trials; ++trial) {
    auto rows = run_trial(cfg, trial);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

struct StrategySummary {
  Strategy strategy;
  Estimator estimator;
  double median = 0.0, q25 = 0.0, q75 = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline std::vector<StrategySummary> summarize_experiment(const std::vector<StrategyResult>& rows) {
  std::vector<StrategySummary> out;
  for (Strategy s : all_strategies()) {
    for (Estimator e : {Estimator::bayes_mean, Estimator::ridge_mle}) {
      std::vector<double> errs;
      for (const auto& r : rows)
        if (r.strategy == s && r.estimator == e) errs.push_back(r.l2_error);
      if (errs.empty()) continue;
      std::sort(errs.begin(), errs.end());
      out.push_back({s, e, quantile_sorted(errs, 0.5), quantile_sorted(errs, 0.25),
                     quantile_sorted(errs, 0.75)});
    }
  }
  return out;
}

namespace io {

inline std::string train_results_csv_text(const std::vector<StrategyResult>& rows) {
  std::string out = "trial,strategy,estimator,l2_error\n";
  for (const auto& r : rows) {
    out += std::to_string(r.trial) + "," + strategy_name(r.strategy) + "," +
           estimator_name(r.estimator) + "," + fmt_double(r.l2_error) + "\n";
  }
  return out;
}

inline json train_summary_json(const std::vector<StrategySummary>& summary) {
  json arr = json::array();
  for (const auto& s : summary) {
    json j;
    j["strategy"] = strategy_name(s.strategy);
    j["estimator"] = estimator_name(s.estimator);
    j["median"] = s.median;
    j["q25"] = s.q25;
    j["q75"] = s.q75;
    arr.push_back(j);
  }
  return arr;
}

}  // namespace io

}  // namespace crowdrate

#endif
