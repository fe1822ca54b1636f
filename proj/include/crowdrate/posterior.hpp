#ifndef CROWDRATE_POSTERIOR_HPP
#define CROWDRATE_POSTERIOR_HPP

#include <cmath>
#include <span>
#include <vector>

#include "crowdrate/dataset.hpp"
#include "crowdrate/kernel.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"

namespace crowdrate {

// Log marginal likelihood contribution of one item: discrete category summed
// out on the log scale,
//   logSumExp_z [ log p(z | pi) + sum_{n : item_n = i} log p(y_n | z, theta) ].
// An item with no ratings contributes log 1 = 0.
inline double item_log_marginal(const ModelSpec& spec, const ParamBlock& p,
                                const RatingDataset& data, int i) {
  const auto& ns = data.item_ratings[i];
  if (ns.empty()) return 0.0;
  double l1 = std::log(p.pi);
  double l0 = std::log1p(-p.pi);
  for (int n : ns) {
    const int j = data.rater[n];
    const int y = data.rating[n];
    l1 += rating_log_prob(spec, p, i, j, y, 1);
    l0 += rating_log_prob(spec, p, i, j, y, 0);
  }
  return log_sum_exp(l0, l1);
}

// Pr[z_i = 1 | y, theta] for every item; an item with no ratings sits at the
// prevalence.
inline std::vector<double> category_posterior(const ModelSpec& spec, const ParamBlock& p,
                                              const RatingDataset& data) {
  std::vector<double> post(static_cast<std::size_t>(data.num_items), p.pi);
  for (int i = 0; i < data.num_items; ++i) {
    const auto& ns = data.item_ratings[i];
    if (ns.empty()) continue;
    double l1 = std::log(p.pi);
    double l0 = std::log1p(-p.pi);
    for (int n : ns) {
      l1 += rating_log_prob(spec, p, i, data.rater[n], data.rating[n], 1);
      l0 += rating_log_prob(spec, p, i, data.rater[n], data.rating[n], 0);
    }
    post[i] = std::exp(l1 - log_sum_exp(l0, l1));
  }
  return post;
}

// Leave-one-rating-out conditional predictive density for every rating:
//   log sum_z Pr[z | theta, other ratings on the item] * p(y_n | z, theta)
// computed as logSumExp(l0, l1) - logSumExp(l0 - lp0_n, l1 - lp1_n), where
// l_z are the full item branch sums and lp_zn is rating n's branch term.
inline std::vector<double> pointwise_log_lik(const ModelSpec& spec, const ParamBlock& p,
                                             const RatingDataset& data) {
  std::vector<double> out(static_cast<std::size_t>(data.num_ratings()), 0.0);
  std::vector<double> lp0, lp1;
  for (int i = 0; i < data.num_items; ++i) {
    const auto& ns = data.item_ratings[i];
    if (ns.empty()) continue;
    lp0.clear();
    lp1.clear();
    double l1 = std::log(p.pi);
    double l0 = std::log1p(-p.pi);
    for (int n : ns) {
      const double a0 = rating_log_prob(spec, p, i, data.rater[n], data.rating[n], 0);
      const double a1 = rating_log_prob(spec, p, i, data.rater[n], data.rating[n], 1);
      lp0.push_back(a0);
      lp1.push_back(a1);
      l0 += a0;
      l1 += a1;
    }
    const double full = log_sum_exp(l0, l1);
    for (std::size_t k = 0; k < ns.size(); ++k) {
      out[ns[k]] = full - log_sum_exp(l0 - lp0[k], l1 - lp1[k]);
    }
  }
  return out;
}

namespace detail {

// Prior log density over the constrained slots. Tied and identical-rater
// abilities take the sensitivity prior Normal(1, 2); ABDE has no rater slots.
inline double log_prior_flat(const ParamLayout& L, std::span<const double> c) {
  double lp = beta22_lpdf(c[0]);
  if (L.rater_block == RaterBlock::tied || L.rater_block == RaterBlock::shared_tied) {
    for (int k = 0; k < L.rater_size; ++k) lp += normal_lpdf(c[L.rater_offset + k], 1.0, 2.0);
  } else if (L.rater_block == RaterBlock::pair || L.rater_block == RaterBlock::shared_pair) {
    const int n = L.rater_size / 2;
    for (int j = 0; j < n; ++j) {
      lp += normal_lpdf(c[L.rater_offset + j], 2.0, 2.0);      // specificity
      lp += normal_lpdf(c[L.rater_offset + n + j], 1.0, 2.0);  // sensitivity
    }
  }
  if (L.beta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) lp += normal_lpdf(c[L.beta_offset + i], 0.0, 1.0);
  if (L.delta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) lp += lognormal_lpdf(c[L.delta_offset + i], 0.0, 0.25);
  if (L.lambda_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) lp += beta22_lpdf(c[L.lambda_offset + i]);
  return lp;
}

inline void log_prior_grad_flat(const ParamLayout& L, std::span<const double> c,
                                std::vector<double>& g) {
  g[0] += beta22_lpdf_grad(c[0]);
  if (L.rater_block == RaterBlock::tied || L.rater_block == RaterBlock::shared_tied) {
    for (int k = 0; k < L.rater_size; ++k)
      g[L.rater_offset + k] += normal_lpdf_grad(c[L.rater_offset + k], 1.0, 2.0);
  } else if (L.rater_block == RaterBlock::pair || L.rater_block == RaterBlock::shared_pair) {
    const int n = L.rater_size / 2;
    for (int j = 0; j < n; ++j) {
      g[L.rater_offset + j] += normal_lpdf_grad(c[L.rater_offset + j], 2.0, 2.0);
      g[L.rater_offset + n + j] += normal_lpdf_grad(c[L.rater_offset + n + j], 1.0, 2.0);
    }
  }
  if (L.beta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i)
      g[L.beta_offset + i] += normal_lpdf_grad(c[L.beta_offset + i], 0.0, 1.0);
  if (L.delta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i)
      g[L.delta_offset + i] += lognormal_lpdf_grad(c[L.delta_offset + i], 0.0, 0.25);
  if (L.lambda_offset >= 0)
    for (int i = 0; i < L.num_items; ++i)
      g[L.lambda_offset + i] += beta22_lpdf_grad(c[L.lambda_offset + i]);
}

struct BranchTerm {
  RatingLogProb z0, z1;
  double delta = 1.0;
  double gap0 = 0.0;  // ability(spec) - beta
  double gap1 = 0.0;  // ability(sens) - beta
};

}  // namespace detail

// Marginalized log posterior and its exact gradient in unconstrained
// coordinates. Bound to one (spec, dataset) pair; evaluation is pure and
// safe to call concurrently.
class Posterior {
 public:
  Posterior(ModelSpec spec, const RatingDataset& data)
      : spec_(std::move(spec)),
        data_(&data),
        layout_(make_layout(spec_, data.num_items, data.num_raters)) {}

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  int dimension() const { return layout_.dimension; }

  double log_density(std::span<const double> u) const {
    std::vector<double> c;
    const double log_jac = constrain_vec(spec_, layout_, u, c);
    const ParamBlock p = param_block_from_flat(layout_, c);
    double lp = detail::log_prior_flat(layout_, c) + log_jac;
    for (int i = 0; i < data_->num_items; ++i) lp += item_log_marginal(spec_, p, *data_, i);
    return lp;
  }

  // Returns the log density; fills grad (resized to dimension). When the
  // value is non-finite the gradient content is unspecified; callers treat
  // the point as invalid.
  double log_density_gradient(std::span<const double> u, std::vector<double>& grad) const {
    std::vector<double> c;
    const double log_jac = constrain_vec(spec_, layout_, u, c);
    const ParamBlock p = param_block_from_flat(layout_, c);
    const ParamLayout& L = layout_;
    const RatingDataset& data = *data_;

    double lp = detail::log_prior_flat(L, c) + log_jac;
    std::vector<double> gc(static_cast<std::size_t>(L.dimension), 0.0);
    detail::log_prior_grad_flat(L, c, gc);

    const bool has_lambda = !spec_.no_guessing;
    const double pi = p.pi;
    std::vector<detail::BranchTerm> terms;
    for (int i = 0; i < data.num_items; ++i) {
      const auto& ns = data.item_ratings[i];
      if (ns.empty()) continue;
      terms.clear();
      terms.reserve(ns.size());
      const double lam = item_lambda(spec_, p, i);
      const double del = item_delta(spec_, p, i);
      const double bet = item_beta(spec_, p, i);
      double l1 = std::log(pi);
      double l0 = std::log1p(-pi);
      for (int n : ns) {
        const int j = data.rater[n];
        const int y = data.rating[n];
        detail::BranchTerm bt;
        bt.delta = del;
        bt.gap0 = rater_ability(spec_, p, j, 0) - bet;
        bt.gap1 = rater_ability(spec_, p, j, 1) - bet;
        bt.z0 = rating_logp(y == 0, del * bt.gap0, lam, has_lambda);
        bt.z1 = rating_logp(y == 1, del * bt.gap1, lam, has_lambda);
        l0 += bt.z0.logp;
        l1 += bt.z1.logp;
        terms.push_back(bt);
      }
      const double lse = log_sum_exp(l0, l1);
      lp += lse;
      const double w0 = std::exp(l0 - lse);
      const double w1 = std::exp(l1 - lse);
      gc[0] += w1 / pi - w0 / (1.0 - pi);
      for (std::size_t k = 0; k < ns.size(); ++k) {
        const int n = ns[k];
        const int j = data.rater[n];
        const detail::BranchTerm& bt = terms[k];
        const double dt0 = w0 * bt.z0.d_t;
        const double dt1 = w1 * bt.z1.d_t;
        if (spec_.has_rater_params()) {
          gc[L.spec_slot(j)] += dt0 * bt.delta;
          gc[L.sens_slot(j)] += dt1 * bt.delta;
        }
        if (L.beta_offset >= 0) gc[L.beta_offset + i] -= (dt0 + dt1) * bt.delta;
        if (L.delta_offset >= 0) gc[L.delta_offset + i] += dt0 * bt.gap0 + dt1 * bt.gap1;
        if (L.lambda_offset >= 0)
          gc[L.lambda_offset + i] += w0 * bt.z0.d_lambda + w1 * bt.z1.d_lambda;
      }
    }
    pullback_gradient(spec_, L, u, c, gc, grad);
    return lp;
  }

 private:
  ModelSpec spec_;
  const RatingDataset* data_;
  ParamLayout layout_;
};

inline double log_posterior(const ModelSpec& spec, std::span<const double> u,
                            const RatingDataset& data) {
  return Posterior(spec, data).log_density(u);
}

inline std::vector<double> grad_log_posterior(const ModelSpec& spec, std::span<const double> u,
                                              const RatingDataset& data) {
  std::vector<double> g;
  Posterior(spec, data).log_density_gradient(u, g);
  return g;
}

}  // namespace crowdrate

#endif
