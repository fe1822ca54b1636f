#ifndef CROWDRATE_PARAMS_HPP
#define CROWDRATE_PARAMS_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "crowdrate/error.hpp"
#include "crowdrate/math.hpp"
#include "crowdrate/model_spec.hpp"

namespace crowdrate {

// Constrained model parameters. Vectors for pinned blocks are empty; when
// sensitivity and specificity are tied the two alpha vectors hold identical
// values; when raters are identical the alpha vectors have length one.
struct ParamBlock {
  double pi = 0.5;
  std::vector<double> alpha_sens;
  std::vector<double> alpha_spec;
  std::vector<double> beta;
  std::vector<double> delta;
  std::vector<double> lambda;
};

enum class RaterBlock { none, shared_tied, shared_pair, tied, pair };

// Flat slot layout shared by the unconstrained vector and its constrained
// image: pi, then the rater block, then item blocks in beta, delta, lambda
// order. In the pair encodings all specificity slots precede all sensitivity
// slots.
struct ParamLayout {
  int num_items = 0;
  int num_raters = 0;
  RaterBlock rater_block = RaterBlock::pair;
  int rater_offset = 1;
  int rater_size = 0;
  int beta_offset = -1;
  int delta_offset = -1;
  int lambda_offset = -1;
  int dimension = 0;

  int spec_slot(int j) const {
    switch (rater_block) {
      case RaterBlock::none: return -1;
      case RaterBlock::shared_tied: return rater_offset;
      case RaterBlock::shared_pair: return rater_offset;
      case RaterBlock::tied: return rater_offset + j;
      case RaterBlock::pair: return rater_offset + j;
    }
    return -1;
  }
  int sens_slot(int j) const {
    switch (rater_block) {
      case RaterBlock::none: return -1;
      case RaterBlock::shared_tied: return rater_offset;
      case RaterBlock::shared_pair: return rater_offset + 1;
      case RaterBlock::tied: return rater_offset + j;
      case RaterBlock::pair: return rater_offset + num_raters + j;
    }
    return -1;
  }
  bool tied() const {
    return rater_block == RaterBlock::shared_tied || rater_block == RaterBlock::tied;
  }
};

inline ParamLayout make_layout(const ModelSpec& spec, int num_items, int num_raters) {
  ParamLayout L;
  L.num_items = num_items;
  L.num_raters = num_raters;
  if (!spec.has_rater_params()) {
    L.rater_block = RaterBlock::none;
    L.rater_size = 0;
  } else if (spec.identical_raters) {
    L.rater_block = spec.tied_sens_spec ? RaterBlock::shared_tied : RaterBlock::shared_pair;
    L.rater_size = spec.tied_sens_spec ? 1 : 2;
  } else {
    L.rater_block = spec.tied_sens_spec ? RaterBlock::tied : RaterBlock::pair;
    L.rater_size = spec.tied_sens_spec ? num_raters : 2 * num_raters;
  }
  int off = 1 + L.rater_size;
  if (!spec.equal_difficulty) {
    L.beta_offset = off;
    off += num_items;
  }
  if (!spec.equal_discrimination) {
    L.delta_offset = off;
    off += num_items;
  }
  if (!spec.no_guessing) {
    L.lambda_offset = off;
    off += num_items;
  }
  L.dimension = off;
  return L;
}

inline int param_dimension(const ModelSpec& spec, int num_items, int num_raters) {
  return make_layout(spec, num_items, num_raters).dimension;
}

// Unconstrained -> constrained, slot for slot. Returns the accumulated log
// absolute Jacobian determinant. Under the non-adversarial constraint the
// rater pair is reparameterized as
//   alpha_spec_j = u_spec_j,   alpha_sens_j = -alpha_spec_j + exp(u_sens_j)
// so alpha_sens_j + alpha_spec_j = exp(u_sens_j) > 0 everywhere; tied
// abilities use alpha_j = exp(u_j) for the same reason.
inline double constrain_vec(const ModelSpec& spec, const ParamLayout& L,
                            std::span<const double> u, std::vector<double>& c) {
  if (static_cast<int>(u.size()) != L.dimension) {
    throw Error("unconstrained vector has dimension " + std::to_string(u.size()) +
                ", expected " + std::to_string(L.dimension));
  }
  c.assign(u.begin(), u.end());
  double log_jac = 0.0;

  const double pi = invlogit(u[0]);
  c[0] = pi;
  log_jac += std::log(pi) + std::log1p(-pi);

  const bool constrained = !spec.allow_adversarial;
  if (L.rater_block == RaterBlock::tied || L.rater_block == RaterBlock::shared_tied) {
    if (constrained) {
      for (int k = 0; k < L.rater_size; ++k) {
        const int s = L.rater_offset + k;
        c[s] = std::exp(u[s]);
        log_jac += u[s];
      }
    }
  } else if (L.rater_block == RaterBlock::pair || L.rater_block == RaterBlock::shared_pair) {
    if (constrained) {
      const int n = L.rater_size / 2;
      for (int j = 0; j < n; ++j) {
        const int ss = L.rater_offset + j;
        const int sn = L.rater_offset + n + j;
        c[ss] = u[ss];
        c[sn] = -u[ss] + std::exp(u[sn]);
        log_jac += u[sn];
      }
    }
  }

  if (L.delta_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) {
      const int s = L.delta_offset + i;
      c[s] = std::exp(u[s]);
      log_jac += u[s];
    }
  }
  if (L.lambda_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) {
      const int s = L.lambda_offset + i;
      const double lam = invlogit(u[s]);
      c[s] = lam;
      log_jac += std::log(lam) + std::log1p(-lam);
    }
  }
  return log_jac;
}

inline std::vector<double> unconstrain_vec(const ModelSpec& spec, const ParamLayout& L,
                                           std::span<const double> c) {
  if (static_cast<int>(c.size()) != L.dimension) {
    throw Error("constrained vector has dimension " + std::to_string(c.size()) +
                ", expected " + std::to_string(L.dimension));
  }
  std::vector<double> u(c.begin(), c.end());
  u[0] = logit(c[0]);
  const bool constrained = !spec.allow_adversarial;
  if (constrained &&
      (L.rater_block == RaterBlock::tied || L.rater_block == RaterBlock::shared_tied)) {
    for (int k = 0; k < L.rater_size; ++k) {
      const int s = L.rater_offset + k;
      u[s] = std::log(c[s]);
    }
  } else if (constrained && (L.rater_block == RaterBlock::pair ||
                             L.rater_block == RaterBlock::shared_pair)) {
    const int n = L.rater_size / 2;
    for (int j = 0; j < n; ++j) {
      const int ss = L.rater_offset + j;
      const int sn = L.rater_offset + n + j;
      u[ss] = c[ss];
      u[sn] = std::log(c[sn] + c[ss]);
    }
  }
  if (L.delta_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) u[L.delta_offset + i] = std::log(c[L.delta_offset + i]);
  }
  if (L.lambda_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) u[L.lambda_offset + i] = logit(c[L.lambda_offset + i]);
  }
  return u;
}

// Pulls a gradient w.r.t. the constrained slots back to unconstrained
// coordinates and adds the gradient of the log Jacobian.
inline void pullback_gradient(const ModelSpec& spec, const ParamLayout& L,
                              std::span<const double> u, std::span<const double> c,
                              std::span<const double> grad_c, std::vector<double>& grad_u) {
  grad_u.assign(grad_c.begin(), grad_c.end());
  const double pi = c[0];
  grad_u[0] = grad_c[0] * pi * (1.0 - pi) + (1.0 - 2.0 * pi);

  const bool constrained = !spec.allow_adversarial;
  if (constrained &&
      (L.rater_block == RaterBlock::tied || L.rater_block == RaterBlock::shared_tied)) {
    for (int k = 0; k < L.rater_size; ++k) {
      const int s = L.rater_offset + k;
      grad_u[s] = grad_c[s] * c[s] + 1.0;
    }
  } else if (constrained && (L.rater_block == RaterBlock::pair ||
                             L.rater_block == RaterBlock::shared_pair)) {
    const int n = L.rater_size / 2;
    for (int j = 0; j < n; ++j) {
      const int ss = L.rater_offset + j;
      const int sn = L.rater_offset + n + j;
      grad_u[ss] = grad_c[ss] - grad_c[sn];
      grad_u[sn] = grad_c[sn] * std::exp(u[sn]) + 1.0;
    }
  }
  if (L.delta_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) {
      const int s = L.delta_offset + i;
      grad_u[s] = grad_c[s] * c[s] + 1.0;
    }
  }
  if (L.lambda_offset >= 0) {
    for (int i = 0; i < L.num_items; ++i) {
      const int s = L.lambda_offset + i;
      const double lam = c[s];
      grad_u[s] = grad_c[s] * lam * (1.0 - lam) + (1.0 - 2.0 * lam);
    }
  }
}

inline ParamBlock param_block_from_flat(const ParamLayout& L, std::span<const double> c) {
  ParamBlock p;
  p.pi = c[0];
  switch (L.rater_block) {
    case RaterBlock::none: break;
    case RaterBlock::shared_tied:
      p.alpha_sens = {c[L.rater_offset]};
      p.alpha_spec = {c[L.rater_offset]};
      break;
    case RaterBlock::shared_pair:
      p.alpha_spec = {c[L.rater_offset]};
      p.alpha_sens = {c[L.rater_offset + 1]};
      break;
    case RaterBlock::tied:
      p.alpha_sens.assign(c.begin() + L.rater_offset, c.begin() + L.rater_offset + L.num_raters);
      p.alpha_spec = p.alpha_sens;
      break;
    case RaterBlock::pair:
      p.alpha_spec.assign(c.begin() + L.rater_offset, c.begin() + L.rater_offset + L.num_raters);
      p.alpha_sens.assign(c.begin() + L.rater_offset + L.num_raters,
                          c.begin() + L.rater_offset + 2 * L.num_raters);
      break;
  }
  if (L.beta_offset >= 0)
    p.beta.assign(c.begin() + L.beta_offset, c.begin() + L.beta_offset + L.num_items);
  if (L.delta_offset >= 0)
    p.delta.assign(c.begin() + L.delta_offset, c.begin() + L.delta_offset + L.num_items);
  if (L.lambda_offset >= 0)
    p.lambda.assign(c.begin() + L.lambda_offset, c.begin() + L.lambda_offset + L.num_items);
  return p;
}

inline std::vector<double> param_block_to_flat(const ParamLayout& L, const ParamBlock& p) {
  std::vector<double> c(static_cast<std::size_t>(L.dimension), 0.0);
  c[0] = p.pi;
  switch (L.rater_block) {
    case RaterBlock::none: break;
    case RaterBlock::shared_tied: c[L.rater_offset] = p.alpha_sens.at(0); break;
    case RaterBlock::shared_pair:
      c[L.rater_offset] = p.alpha_spec.at(0);
      c[L.rater_offset + 1] = p.alpha_sens.at(0);
      break;
    case RaterBlock::tied:
      for (int j = 0; j < L.num_raters; ++j) c[L.rater_offset + j] = p.alpha_sens.at(j);
      break;
    case RaterBlock::pair:
      for (int j = 0; j < L.num_raters; ++j) {
        c[L.rater_offset + j] = p.alpha_spec.at(j);
        c[L.rater_offset + L.num_raters + j] = p.alpha_sens.at(j);
      }
      break;
  }
  if (L.beta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) c[L.beta_offset + i] = p.beta.at(i);
  if (L.delta_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) c[L.delta_offset + i] = p.delta.at(i);
  if (L.lambda_offset >= 0)
    for (int i = 0; i < L.num_items; ++i) c[L.lambda_offset + i] = p.lambda.at(i);
  return c;
}

// Constrained 1-based column names for persisted draws.
inline std::vector<std::string> param_column_names(const ParamLayout& L) {
  std::vector<std::string> names(static_cast<std::size_t>(L.dimension));
  names[0] = "pi";
  switch (L.rater_block) {
    case RaterBlock::none: break;
    case RaterBlock::shared_tied: names[L.rater_offset] = "alpha"; break;
    case RaterBlock::shared_pair:
      names[L.rater_offset] = "alpha_spec";
      names[L.rater_offset + 1] = "alpha_sens";
      break;
    case RaterBlock::tied:
      for (int j = 0; j < L.num_raters; ++j)
        names[L.rater_offset + j] = "alpha[" + std::to_string(j + 1) + "]";
      break;
    case RaterBlock::pair:
      for (int j = 0; j < L.num_raters; ++j) {
        names[L.rater_offset + j] = "alpha_spec[" + std::to_string(j + 1) + "]";
        names[L.rater_offset + L.num_raters + j] = "alpha_sens[" + std::to_string(j + 1) + "]";
      }
      break;
  }
  auto item_block = [&](int off, const char* base) {
    if (off < 0) return;
    for (int i = 0; i < L.num_items; ++i)
      names[off + i] = std::string(base) + "[" + std::to_string(i + 1) + "]";
  };
  item_block(L.beta_offset, "beta");
  item_block(L.delta_offset, "delta");
  item_block(L.lambda_offset, "lambda");
  return names;
}

}  // namespace crowdrate

#endif
