#ifndef CROWDRATE_KERNEL_HPP
#define CROWDRATE_KERNEL_HPP

#include <cmath>

#include "crowdrate/dataset.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"

namespace crowdrate {

// Effective item/rater inputs with reductions applied.
inline double item_lambda(const ModelSpec& spec, const ParamBlock& p, int i) {
  return spec.no_guessing ? 0.0 : p.lambda[i];
}
inline double item_delta(const ModelSpec& spec, const ParamBlock& p, int i) {
  return spec.equal_discrimination ? 1.0 : p.delta[i];
}
inline double item_beta(const ModelSpec& spec, const ParamBlock& p, int i) {
  return spec.equal_difficulty ? 0.0 : p.beta[i];
}
inline double rater_ability(const ModelSpec& spec, const ParamBlock& p, int j, int z) {
  if (!spec.has_rater_params()) return 0.0;
  const int idx = spec.identical_raters ? 0 : j;
  return z == 1 ? p.alpha_sens[idx] : p.alpha_spec[idx];
}

// Probability that rater j assigns the correct rating to item i with true
// category z:  lambda_i + (1 - lambda_i) * invlogit(delta_i * (alpha_j^k - beta_i)),
// with k = sens when z = 1 and k = spec when z = 0.
inline double prob_correct(const ModelSpec& spec, const ParamBlock& p, int i, int j, int z) {
  const double lam = item_lambda(spec, p, i);
  const double t = item_delta(spec, p, i) * (rater_ability(spec, p, j, z) - item_beta(spec, p, i));
  return lam + (1.0 - lam) * invlogit(t);
}

// Probability of a 1 rating: the correct-rating probability when z = 1, its
// flip when z = 0 (so a 90% accurate rating of a negative item gives a 90%
// chance of a 0). The z = 0 case uses the reduced form
//   (1 - lambda_i) * (1 - invlogit(delta_i * (alpha_spec_j - beta_i)))
// which makes a spam rater's positive rate identical across the two branches.
inline double rating_one_prob(const ModelSpec& spec, const ParamBlock& p, int i, int j, int z) {
  if (z == 1) return prob_correct(spec, p, i, j, 1);
  const double lam = item_lambda(spec, p, i);
  const double t = item_delta(spec, p, i) * (rater_ability(spec, p, j, 0) - item_beta(spec, p, i));
  return (1.0 - lam) * invlogit(-t);
}

// log p(y | z) for one rating with partial derivatives. y matches z iff the
// rating is correct, so the log mass is log c when match and log(1 - c)
// otherwise, with c the correct-rating probability at the branch's ability.
// Derivatives are w.r.t. t = delta * (ability - beta) and lambda.
struct RatingLogProb {
  double logp = 0.0;
  double d_t = 0.0;
  double d_lambda = 0.0;
};

inline RatingLogProb rating_logp(bool match, double t, double lam, bool has_lambda) {
  RatingLogProb r;
  const double s = invlogit(t);
  if (match) {
    if (has_lambda) {
      // c = 1 - (1 - lam) * invlogit(-t); the subtraction is exact as t -> -inf.
      const double sm = invlogit(-t);
      r.logp = std::log1p(-(1.0 - lam) * sm);
      const double c = lam + (1.0 - lam) * s;
      r.d_t = (1.0 - lam) * s * (1.0 - s) / c;
      r.d_lambda = sm / c;
    } else {
      r.logp = log_invlogit(t);
      r.d_t = invlogit(-t);
    }
  } else {
    // 1 - c = (1 - lam) * (1 - invlogit(t))
    r.logp = (has_lambda ? std::log1p(-lam) : 0.0) - log1p_exp(t);
    r.d_t = -s;
    if (has_lambda) r.d_lambda = -1.0 / (1.0 - lam);
  }
  return r;
}

// Convenience: log p(y_n | z, theta) without derivatives.
inline double rating_log_prob(const ModelSpec& spec, const ParamBlock& p, int i, int j, int y,
                              int z) {
  const double lam = item_lambda(spec, p, i);
  const double t = item_delta(spec, p, i) * (rater_ability(spec, p, j, z) - item_beta(spec, p, i));
  return rating_logp(y == z, t, lam, !spec.no_guessing).logp;
}

}  // namespace crowdrate

#endif
