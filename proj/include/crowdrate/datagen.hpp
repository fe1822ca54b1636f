#ifndef CROWDRATE_DATAGEN_HPP
#define CROWDRATE_DATAGEN_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "crowdrate/dataset.hpp"
#include "crowdrate/kernel.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "crowdrate/rng.hpp"

namespace crowdrate {

enum class RaterKind { from_priors, expert, spam, adversarial, explicit_pair };

struct RaterProfile {
  RaterKind kind = RaterKind::from_priors;
  double alpha_sens = 0.0;  // used when kind == explicit_pair
  double alpha_spec = 0.0;
};

// Controls forward simulation: rater population makeup, item-parameter
// source, and missingness. Missingness is assigned completely at random.
struct PopulationSpec {
  int num_items = 0;
  int num_raters = 0;
  std::vector<RaterProfile> raters;  // empty: all from priors
  std::optional<double> pi;          // fixed prevalence; otherwise Beta(2,2)
  bool items_from_priors = true;
  std::vector<double> beta, delta, lambda;  // used when !items_from_priors
  int ratings_per_rater = -1;               // -1: complete design
};

struct SimulatedData {
  RatingDataset data;
  ParamBlock truth;
  std::vector<int> z;
};

namespace detail {

// Draw one rater's (sens, spec) pair for the spec's rater structure.
inline void draw_rater(const ModelSpec& spec, const RaterProfile& prof, Rng& rng, double& a_sens,
                       double& a_spec) {
  switch (prof.kind) {
    case RaterKind::explicit_pair:
      a_sens = prof.alpha_sens;
      a_spec = prof.alpha_spec;
      return;
    case RaterKind::expert: {
      // both accuracies above 0.9 on the probability scale
      a_sens = logit(rng.uniform(0.905, 0.99));
      a_spec = spec.tied_sens_spec ? a_sens : logit(rng.uniform(0.905, 0.99));
      return;
    }
    case RaterKind::spam: {
      if (spec.tied_sens_spec) {
        a_sens = a_spec = 0.0;  // the only tied spam point
        return;
      }
      const double rate = rng.uniform(0.15, 0.85);
      a_sens = logit(rate);
      a_spec = -a_sens;
      return;
    }
    case RaterKind::adversarial: {
      if (spec.tied_sens_spec) {
        a_sens = a_spec = rng.uniform(-2.0, -0.2);
        return;
      }
      a_spec = rng.uniform(-1.5, 1.5);
      a_sens = -a_spec - rng.uniform(0.2, 2.0);
      return;
    }
    case RaterKind::from_priors: {
      if (spec.tied_sens_spec) {
        do {
          a_sens = 1.0 + 2.0 * rng.normal();
        } while (!spec.allow_adversarial && a_sens <= 0.0);
        a_spec = a_sens;
        return;
      }
      do {
        a_sens = 1.0 + 2.0 * rng.normal();
        a_spec = 2.0 + 2.0 * rng.normal();
      } while (!spec.allow_adversarial && a_sens + a_spec <= 0.0);
      return;
    }
  }
}

}  // namespace detail

// Draws ground-truth parameters for the variant from the population spec;
// prior-sourced blocks use the model priors (truncated to the cooperative
// half-space when the constraint is on).
inline ParamBlock draw_truth(const ModelSpec& spec, const PopulationSpec& pop, Rng& rng) {
  ParamBlock p;
  p.pi = pop.pi ? *pop.pi : rng.beta22();
  if (spec.has_rater_params()) {
    const int n = spec.identical_raters ? 1 : pop.num_raters;
    for (int j = 0; j < n; ++j) {
      const RaterProfile prof =
          j < static_cast<int>(pop.raters.size()) ? pop.raters[j] : RaterProfile{};
      double as = 0.0, ac = 0.0;
      detail::draw_rater(spec, prof, rng, as, ac);
      p.alpha_sens.push_back(as);
      p.alpha_spec.push_back(spec.tied_sens_spec ? as : ac);
    }
  }
  for (int i = 0; i < pop.num_items; ++i) {
    if (!spec.equal_difficulty)
      p.beta.push_back(pop.items_from_priors ? rng.normal() : pop.beta.at(i));
    if (!spec.equal_discrimination)
      p.delta.push_back(pop.items_from_priors ? std::exp(0.25 * rng.normal()) : pop.delta.at(i));
    if (!spec.no_guessing)
      p.lambda.push_back(pop.items_from_priors ? rng.beta22() : pop.lambda.at(i));
  }
  return p;
}

// Forward simulation: z_i ~ bernoulli(pi), then each rating at the design
// positions from the rating distribution. Returns the ground truth for
// recovery tests. Deterministic given the seed.
inline SimulatedData simulate_dataset(const ModelSpec& spec, const PopulationSpec& pop,
                                      std::uint64_t seed) {
  Rng param_rng = Rng::stream(seed, 0);
  Rng z_rng = Rng::stream(seed, 1);
  Rng design_rng = Rng::stream(seed, 2);
  Rng rating_rng = Rng::stream(seed, 3);

  SimulatedData out;
  out.truth = draw_truth(spec, pop, param_rng);
  out.z.resize(pop.num_items);
  for (int i = 0; i < pop.num_items; ++i) out.z[i] = z_rng.bernoulli(out.truth.pi) ? 1 : 0;

  std::vector<int> item, rater, rating;
  auto emit = [&](int i, int j) {
    item.push_back(i);
    rater.push_back(j);
    const double p1 = rating_one_prob(spec, out.truth, i, j, out.z[i]);
    rating.push_back(rating_rng.bernoulli(p1) ? 1 : 0);
  };
  if (pop.ratings_per_rater < 0) {
    for (int i = 0; i < pop.num_items; ++i)
      for (int j = 0; j < pop.num_raters; ++j) emit(i, j);
  } else {
    const int budget = std::min(pop.ratings_per_rater, pop.num_items);
    std::vector<int> idx(pop.num_items);
    for (int j = 0; j < pop.num_raters; ++j) {
      std::iota(idx.begin(), idx.end(), 0);
      for (int k = 0; k < budget; ++k) {  // partial Fisher-Yates
        const int pick = k + static_cast<int>(design_rng.uniform_int(idx.size() - k));
        std::swap(idx[k], idx[pick]);
        emit(idx[k], j);
      }
    }
  }
  out.data = dataset_from_indices(pop.num_items, pop.num_raters, std::move(item),
                                  std::move(rater), std::move(rating));
  return out;
}

// Replaces `count` randomly chosen raters with spam archetypes at random
// response rates.
inline PopulationSpec inject_spam(const PopulationSpec& pop, int count, std::uint64_t seed) {
  if (count > pop.num_raters) throw Error("cannot inject more spam raters than raters");
  if (count == 0) return pop;
  PopulationSpec out = pop;
  out.raters.resize(pop.num_raters);
  Rng rng = Rng::stream(seed, 17);
  std::vector<int> idx(pop.num_raters);
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < count; ++k) {
    const int pick = k + static_cast<int>(rng.uniform_int(idx.size() - k));
    std::swap(idx[k], idx[pick]);
    out.raters[idx[k]] = {RaterKind::spam, 0.0, 0.0};
  }
  return out;
}

}  // namespace crowdrate

#endif
