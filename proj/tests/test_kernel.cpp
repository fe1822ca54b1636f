#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdrate/kernel.hpp"
#include "crowdrate/model_spec.hpp"
#include "crowdrate/rng.hpp"
#include "oracle_helpers.hpp"

using namespace crowdrate;

namespace {

ParamBlock full_block(double pi, double a_sens, double a_spec, double beta, double delta,
                      double lambda) {
  ParamBlock p;
  p.pi = pi;
  p.alpha_sens = {a_sens};
  p.alpha_spec = {a_spec};
  p.beta = {beta};
  p.delta = {delta};
  p.lambda = {lambda};
  return p;
}

const ModelSpec kFull = parse_model_name("Full").spec;

}  // namespace

TEST_CASE("prob_correct at the symmetric point") {
  // lambda=0, delta=1, beta=0, alpha=0 -> invlogit(0) = 1/2
  const auto p = full_block(0.5, 0.0, 0.0, 0.0, 1.0, 0.0);
  CHECK(prob_correct(kFull, p, 0, 0, 1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(prob_correct(kFull, p, 0, 0, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("guessing floor lifts the symmetric point") {
  // lambda=1/2 and ability equal to difficulty: 1/2 + 1/2 * 1/2 = 3/4
  const auto p = full_block(0.5, 1.3, 1.3, 1.3, 2.0, 0.5);
  CHECK(prob_correct(kFull, p, 0, 0, 1) == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("prob_correct against a high-precision evaluation") {
  // lambda=0.2, delta=2, alpha=1.3, beta=0.3: 0.2 + 0.8*invlogit(2)
  const auto p = full_block(0.5, 1.3, 1.3, 0.3, 2.0, 0.2);
  CHECK(prob_correct(kFull, p, 0, 0, 1) ==
        Catch::Approx(0.9046376623823060).epsilon(1e-12));
}

TEST_CASE("rating_one_prob matches prob_correct when z = 1") {
  Rng rng(71);
  for (int t = 0; t < 50; ++t) {
    const auto p = oracle::random_param_block(kFull, 2, 3, rng);
    for (int j = 0; j < 3; ++j) {
      CHECK(rating_one_prob(kFull, p, 1, j, 1) == prob_correct(kFull, p, 1, j, 1));
    }
  }
}

TEST_CASE("rating_one_prob flips the z = 0 branch") {
  // flip of 1/2 is 1/2
  const auto sym = full_block(0.5, 0.0, 0.0, 0.0, 1.0, 0.0);
  CHECK(rating_one_prob(kFull, sym, 0, 0, 0) == Catch::Approx(0.5).margin(1e-15));

  // z=0, lambda=0.2, delta=1, alpha_spec=2, beta=0: 0.8 * (1 - invlogit(2))
  const auto p = full_block(0.5, 1.0, 2.0, 0.0, 1.0, 0.2);
  CHECK(rating_one_prob(kFull, p, 0, 0, 0) ==
        Catch::Approx(0.0953623376176940).epsilon(1e-12));
}

TEST_CASE("reduction consistency: pinned Full kernel equals each reduced kernel") {
  Rng rng(1234);
  for (const ModelSpec& spec : enumerate_variants()) {
    const int I = 4, J = 3;
    for (int rep = 0; rep < 60; ++rep) {  // 18 * 60 > 1000 draws overall
      const auto reduced = oracle::random_param_block(spec, I, J, rng);
      // Embed the reduced parameters into a Full block with pinned values.
      ParamBlock full;
      full.pi = reduced.pi;
      for (int j = 0; j < J; ++j) {
        const int idx = spec.identical_raters ? 0 : j;
        full.alpha_sens.push_back(spec.has_rater_params() ? reduced.alpha_sens[idx] : 0.0);
        full.alpha_spec.push_back(spec.has_rater_params() ? reduced.alpha_spec[idx] : 0.0);
      }
      for (int i = 0; i < I; ++i) {
        full.beta.push_back(spec.equal_difficulty ? 0.0 : reduced.beta[i]);
        full.delta.push_back(spec.equal_discrimination ? 1.0 : reduced.delta[i]);
        full.lambda.push_back(spec.no_guessing ? 0.0 : reduced.lambda[i]);
      }
      for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
          for (int z = 0; z < 2; ++z) {
            const double a = prob_correct(kFull, full, i, j, z);
            const double b = prob_correct(spec, reduced, i, j, z);
            REQUIRE(std::abs(a - b) <= 1e-15);
            const double ra = rating_one_prob(kFull, full, i, j, z);
            const double rb = rating_one_prob(spec, reduced, i, j, z);
            REQUIRE(std::abs(ra - rb) <= 1e-15);
          }
        }
      }
    }
  }
}

TEST_CASE("probability bounds") {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const auto p = oracle::random_param_block(kFull, 1, 1, rng);
    for (int z = 0; z < 2; ++z) {
      const double c = prob_correct(kFull, p, 0, 0, z);
      CHECK(c >= p.lambda[0]);
      CHECK(c <= 1.0);
      const double r = rating_one_prob(kFull, p, 0, 0, z);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_CASE("no-guessing limits in difficulty and ability") {
  const ModelSpec a_spec = parse_model_name("A").spec;  // lambda pinned to 0
  ParamBlock p;
  p.pi = 0.5;
  p.alpha_sens = {0.0};
  p.alpha_spec = {0.0};
  p.beta = {30.0};
  p.delta = {1.0};
  CHECK(prob_correct(a_spec, p, 0, 0, 1) <= 1e-9);  // beta -> +inf drives correctness to 0
  p.beta = {0.0};
  p.alpha_sens = {30.0};
  CHECK(prob_correct(a_spec, p, 0, 0, 1) >= 1.0 - 1e-9);
}

TEST_CASE("spam boundary: positive rate independent of the true category") {
  const ModelSpec ab = parse_model_name("AB").spec;
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    ParamBlock p;
    p.pi = 0.4;
    const double a = rng.uniform(-3.0, 3.0);
    p.alpha_sens = {a};
    p.alpha_spec = {-a};
    p.beta = {0.0};
    // exact equality: both branches evaluate invlogit at bitwise-equal inputs
    CHECK(rating_one_prob(ab, p, 0, 0, 1) == rating_one_prob(ab, p, 0, 0, 0));
  }
}
