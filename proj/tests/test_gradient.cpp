#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "crowdrate/posterior.hpp"
#include "oracle_helpers.hpp"

using namespace crowdrate;

namespace {

double max_rel_err(std::span<const double> got, std::span<const double> want) {
  double worst = 0.0;
  for (std::size_t k = 0; k < got.size(); ++k) {
    const double denom = std::max(1.0, std::abs(want[k]));
    worst = std::max(worst, std::abs(got[k] - want[k]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("prior-only gradient at the sensitivity slot") {
  // With adversarial mode the rater coordinates are untransformed, so the
  // unconstrained gradient at an alpha_sens slot is the Normal(1,2) score.
  auto spec = parse_model_name("ABC").spec;
  spec.allow_adversarial = true;
  const auto data = RatingDataset::empty(1, 2);
  const Posterior post(spec, data);
  const auto L = post.layout();
  std::vector<double> u(L.dimension, 0.0);
  u[L.sens_slot(0)] = 2.5;
  u[L.sens_slot(1)] = -0.5;
  std::vector<double> g;
  post.log_density_gradient(u, g);
  CHECK(g[L.sens_slot(0)] == Catch::Approx(-(2.5 - 1.0) / 4.0).epsilon(1e-12));
  CHECK(g[L.sens_slot(1)] == Catch::Approx(-(-0.5 - 1.0) / 4.0).epsilon(1e-12));
  CHECK(g[L.spec_slot(0)] == Catch::Approx(-(0.0 - 2.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("analytic gradient agrees with central finite differences") {
  Rng rng(424242);
  for (const auto& base : enumerate_variants()) {
    for (int adversarial = 0; adversarial < 2; ++adversarial) {
      ModelSpec spec = base;
      spec.allow_adversarial = adversarial == 1;
      const int I = 4, J = 3;
      const auto data = oracle::random_dataset(I, J, 4, rng);
      const Posterior post(spec, data);
      const auto f = [&](std::span<const double> x) { return post.log_density(x); };
      for (int t = 0; t < 10; ++t) {
        std::vector<double> u(post.dimension());
        for (auto& x : u) x = rng.uniform(-1.5, 1.5);
        std::vector<double> g;
        post.log_density_gradient(u, g);
        const auto fd = oracle::central_differences(f, u);
        INFO("model " << spec.name << " adversarial=" << adversarial);
        REQUIRE(max_rel_err(g, fd) < 1e-5);
      }
    }
  }
}

TEST_CASE("gradient vanishes at an interior posterior mode") {
  // Newton ascent with a finite-difference Hessian on a small model; at the
  // mode the analytic gradient norm must be tiny.
  const auto spec = parse_model_name("ABC").spec;
  Rng rng(17);
  const auto data = oracle::random_dataset(6, 2, 3, rng);
  const Posterior post(spec, data);
  const int d = post.dimension();
  std::vector<double> u(d, 0.1);
  std::vector<double> g;
  for (int it = 0; it < 80; ++it) {
    post.log_density_gradient(u, g);
    double norm = 0.0;
    for (double x : g) norm += x * x;
    if (std::sqrt(norm) < 1e-10) break;
    // FD Hessian columns from the analytic gradient.
    const double h = 1e-5;
    std::vector<std::vector<double>> H(d, std::vector<double>(d));
    std::vector<double> gp, gm, up = u;
    for (int k = 0; k < d; ++k) {
      up[k] = u[k] + h;
      post.log_density_gradient(up, gp);
      up[k] = u[k] - h;
      post.log_density_gradient(up, gm);
      up[k] = u[k];
      for (int r = 0; r < d; ++r) H[r][k] = (gp[r] - gm[r]) / (2.0 * h);
    }
    // Newton step for a maximum: u <- u - H^{-1} g. Solve H s = g.
    std::vector<double> s = g;
    for (int col = 0; col < d; ++col) {
      int piv = col;
      for (int r = col + 1; r < d; ++r)
        if (std::abs(H[r][col]) > std::abs(H[piv][col])) piv = r;
      std::swap(H[piv], H[col]);
      std::swap(s[piv], s[col]);
      for (int r = col + 1; r < d; ++r) {
        const double f = H[r][col] / H[col][col];
        for (int cix = col; cix < d; ++cix) H[r][cix] -= f * H[col][cix];
        s[r] -= f * s[col];
      }
    }
    for (int r = d - 1; r >= 0; --r) {
      double acc = s[r];
      for (int cix = r + 1; cix < d; ++cix) acc -= H[r][cix] * s[cix];
      s[r] = acc / H[r][r];
    }
    // Damp long steps far from the mode.
    double step_norm = 0.0;
    for (double x : s) step_norm += x * x;
    const double scale = std::sqrt(step_norm) > 5.0 ? 5.0 / std::sqrt(step_norm) : 1.0;
    for (int k = 0; k < d; ++k) u[k] -= scale * s[k];
  }
  post.log_density_gradient(u, g);
  double norm = 0.0;
  for (double x : g) norm += x * x;
  CHECK(std::sqrt(norm) < 1e-6);
}
