// Multi-fit statistical properties that are too slow for the per-module
// suites: predictive-accuracy ordering under model truth and end-to-end
// recovery smoke checks.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crowdrate/crowdrate.hpp"

using namespace crowdrate;

TEST_CASE("elpd_loo prefers the generating model over Dawid-Skene") {
  // Data simulated from AB with dispersed difficulty: elpd_loo(AB) beats
  // elpd_loo(ABC) in at least 8 of 10 replications.
  const auto ab = parse_model_name("AB").spec;
  const auto abc = parse_model_name("ABC").spec;
  const int I = 150, J = 5;
  int wins = 0;
  for (int rep = 0; rep < 10; ++rep) {
    PopulationSpec pop;
    pop.num_items = I;
    pop.num_raters = J;
    pop.pi = 0.5;
    const auto sim = simulate_dataset(ab, pop, 3100 + rep);
    SamplerConfig cfg;
    cfg.seed = 880 + rep;
    cfg.chains = 2;
    cfg.warmup_iters = 400;
    cfg.sampling_iters = 400;
    const auto fit_ab = fit(ab, sim.data, cfg);
    const auto fit_abc = fit(abc, sim.data, cfg);
    const auto loo_ab =
        elpd_loo(ab, constrained_draws(ab, make_layout(ab, I, J), fit_ab.draws), sim.data);
    const auto loo_abc =
        elpd_loo(abc, constrained_draws(abc, make_layout(abc, I, J), fit_abc.draws), sim.data);
    INFO("rep " << rep << ": AB " << loo_ab.elpd_loo << " vs ABC " << loo_abc.elpd_loo);
    if (loo_ab.elpd_loo > loo_abc.elpd_loo) ++wins;
  }
  INFO("AB preferred in " << wins << "/10 replications");
  CHECK(wins >= 8);
}

TEST_CASE("ABCDE smoke fit converges") {
  const auto spec = parse_model_name("ABCDE").spec;
  PopulationSpec pop;
  pop.num_items = 50;
  pop.num_raters = 4;
  const auto sim = simulate_dataset(spec, pop, 99);
  SamplerConfig cfg;
  cfg.seed = 11;
  const auto fr = fit(spec, sim.data, cfg);
  REQUIRE(fr.diagnostics.max_split_rhat == fr.diagnostics.max_split_rhat);
  CHECK(fr.diagnostics.max_split_rhat < 1.01);
}

TEST_CASE("ABC posterior means land near the simulation truth") {
  const auto spec = parse_model_name("ABC").spec;
  const int I = 500, J = 5;
  PopulationSpec pop;
  pop.num_items = I;
  pop.num_raters = J;
  const auto sim = simulate_dataset(spec, pop, 1234);
  SamplerConfig cfg;
  cfg.seed = 4321;
  const auto fr = fit(spec, sim.data, cfg);
  const auto blocks = constrained_draws(spec, make_layout(spec, I, J), fr.draws);
  for (int j = 0; j < J; ++j) {
    double mean = 0.0, sq = 0.0;
    for (const auto& b : blocks) {
      mean += b.alpha_sens[j];
      sq += b.alpha_sens[j] * b.alpha_sens[j];
    }
    mean /= blocks.size();
    const double sd = std::sqrt(sq / blocks.size() - mean * mean);
    INFO("rater " << j << " truth " << sim.truth.alpha_sens[j] << " posterior " << mean << " +- "
                  << sd);
    CHECK(std::abs(mean - sim.truth.alpha_sens[j]) < 3.0 * sd);
  }
}
