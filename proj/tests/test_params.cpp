#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crowdrate/model_spec.hpp"
#include "crowdrate/params.hpp"
#include "oracle_helpers.hpp"

using namespace crowdrate;

TEST_CASE("param_dimension examples") {
  const auto abcde = parse_model_name("ABCDE").spec;
  CHECK(param_dimension(abcde, 100, 7) == 2);  // pi and one shared alpha

  const auto abc = parse_model_name("ABC").spec;
  CHECK(param_dimension(abc, 10, 3) == 7);  // pi + 2*3

  const auto full = parse_model_name("Full").spec;
  CHECK(param_dimension(full, 2, 2) == 11);  // 1 + 4 + 2 + 2 + 2

  const auto abde = parse_model_name("ABDE").spec;
  CHECK(param_dimension(abde, 6, 9) == 7);  // pi + beta block only
}

TEST_CASE("dimension table for every variant") {
  const int I = 5, J = 3;
  for (const auto& spec : enumerate_variants()) {
    int expect = 1;
    if (spec.name == "ABDE") {
      expect += 0;
    } else if (spec.identical_raters) {
      expect += spec.tied_sens_spec ? 1 : 2;
    } else {
      expect += spec.tied_sens_spec ? J : 2 * J;
    }
    if (!spec.equal_difficulty) expect += I;
    if (!spec.equal_discrimination) expect += I;
    if (!spec.no_guessing) expect += I;
    INFO("model " << spec.name);
    CHECK(param_dimension(spec, I, J) == expect);
  }
}

TEST_CASE("pi maps through the inverse log odds") {
  const auto abc = parse_model_name("ABC").spec;
  const auto L = make_layout(abc, 1, 1);
  std::vector<double> u(L.dimension, 0.0);
  std::vector<double> c;
  constrain_vec(abc, L, u, c);
  CHECK(c[0] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("constrained draws always satisfy the cooperative constraint") {
  Rng rng(31);
  for (const auto& spec : enumerate_variants()) {
    const auto L = make_layout(spec, 3, 4);
    for (int t = 0; t < 40; ++t) {
      std::vector<double> u(L.dimension);
      for (auto& x : u) x = rng.uniform(-6.0, 6.0);
      std::vector<double> c;
      constrain_vec(spec, L, u, c);
      const auto p = param_block_from_flat(L, c);
      for (std::size_t j = 0; j < p.alpha_sens.size(); ++j) {
        CHECK(p.alpha_sens[j] + p.alpha_spec[j] > 0.0);
      }
    }
  }
}

TEST_CASE("constrain is the inverse of unconstrain") {
  Rng rng(57);
  for (const auto& spec : enumerate_variants()) {
    const int I = 3, J = 4;
    const auto L = make_layout(spec, I, J);
    for (int t = 0; t < 100; ++t) {
      const auto p = oracle::random_param_block(spec, I, J, rng);
      const auto c = param_block_to_flat(L, p);
      const auto u = unconstrain_vec(spec, L, c);
      std::vector<double> c2;
      constrain_vec(spec, L, u, c2);
      for (int k = 0; k < L.dimension; ++k) {
        INFO("model " << spec.name << " slot " << k);
        REQUIRE(c2[k] == Catch::Approx(c[k]).margin(1e-12).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("adversarial mode uses free rater coordinates") {
  auto full = parse_model_name("Full").spec;
  full.allow_adversarial = true;
  const auto L = make_layout(full, 1, 2);
  std::vector<double> u(L.dimension, 0.0);
  u[L.sens_slot(0)] = -3.0;
  u[L.spec_slot(0)] = 1.0;
  std::vector<double> c;
  constrain_vec(full, L, u, c);
  const auto p = param_block_from_flat(L, c);
  CHECK(p.alpha_sens[0] == -3.0);
  CHECK(p.alpha_spec[0] == 1.0);
  CHECK(p.alpha_sens[0] + p.alpha_spec[0] < 0.0);  // adversarial region reachable
}

TEST_CASE("dimension mismatch is an error") {
  const auto abc = parse_model_name("ABC").spec;
  const auto L = make_layout(abc, 2, 2);
  std::vector<double> u(L.dimension + 1, 0.0);
  std::vector<double> c;
  CHECK_THROWS_AS(constrain_vec(abc, L, u, c), Error);
}

namespace {

// log |det J| of the constrain map by finite differences plus Gaussian
// elimination, independent of the analytic accumulation.
double numeric_log_det_jacobian(const ModelSpec& spec, const ParamLayout& L,
                                std::vector<double> u) {
  const int d = L.dimension;
  const double h = 1e-6;
  std::vector<std::vector<double>> J(d, std::vector<double>(d, 0.0));
  std::vector<double> cp, cm;
  for (int k = 0; k < d; ++k) {
    const double u0 = u[k];
    u[k] = u0 + h;
    constrain_vec(spec, L, u, cp);
    u[k] = u0 - h;
    constrain_vec(spec, L, u, cm);
    u[k] = u0;
    for (int r = 0; r < d; ++r) J[r][k] = (cp[r] - cm[r]) / (2.0 * h);
  }
  double log_det = 0.0;
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(J[r][col]) > std::abs(J[piv][col])) piv = r;
    std::swap(J[piv], J[col]);
    log_det += std::log(std::abs(J[col][col]));
    for (int r = col + 1; r < d; ++r) {
      const double f = J[r][col] / J[col][col];
      for (int cix = col; cix < d; ++cix) J[r][cix] -= f * J[col][cix];
    }
  }
  return log_det;
}

}  // namespace

TEST_CASE("log jacobian matches a finite-difference determinant") {
  Rng rng(404);
  for (const auto& spec : enumerate_variants()) {
    const auto L = make_layout(spec, 2, 2);
    std::vector<double> u(L.dimension);
    for (auto& x : u) x = rng.uniform(-1.5, 1.5);
    std::vector<double> c;
    const double analytic = constrain_vec(spec, L, u, c);
    const double numeric = numeric_log_det_jacobian(spec, L, u);
    INFO("model " << spec.name);
    CHECK(analytic == Catch::Approx(numeric).margin(1e-6));
  }
}

TEST_CASE("column names follow the documented layout") {
  const auto full = parse_model_name("Full").spec;
  const auto L = make_layout(full, 2, 2);
  const auto names = param_column_names(L);
  const std::vector<std::string> expected = {
      "pi",      "alpha_spec[1]", "alpha_spec[2]", "alpha_sens[1]", "alpha_sens[2]",
      "beta[1]", "beta[2]",       "delta[1]",      "delta[2]",      "lambda[1]",
      "lambda[2]"};
  CHECK(names == expected);

  const auto abcde = parse_model_name("ABCDE").spec;
  const auto L2 = make_layout(abcde, 2, 2);
  CHECK(param_column_names(L2) == std::vector<std::string>{"pi", "alpha"});
}
