#include "duet/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "duet/errors.hpp"

namespace duet {
namespace {

// Rounds `share` to the grid of ulp(r); any grid value between 0 and r
// leaves r - share exactly representable, so the two shares sum to r.
double snap_to_ulp_grid(double share, double r) {
  if (r == 0.0 || !std::isfinite(r)) return share;
  const int e = std::ilogb(r);
  const double u = std::max(std::ldexp(1.0, e - std::numeric_limits<double>::digits + 1),
                            std::numeric_limits<double>::denorm_min());
  return std::nearbyint(share / u) * u;
}

}  // namespace

RewardBreakdown step_reward(const RewardCoefs& c, const StepMeasures& prev,
                            const StepMeasures& cur) {
  RewardBreakdown b;
  b.r_xi = c.xi * ((-cur.delta) - (-prev.delta));
  b.r_zeta = c.zeta * (cur.zeta - prev.zeta);
  b.r_psi = c.psi * (cur.hull.perimeter - prev.hull.perimeter);
  b.r_phi = c.phi * (cur.hull.area - prev.hull.area);
  b.total = b.r_xi + b.r_zeta + b.r_psi + b.r_phi;
  return b;
}

RewardBreakdown RewardTracker::reset(const StepMeasures& m0) {
  prev_ = m0;
  started_ = true;
  return {};
}

RewardBreakdown RewardTracker::step(const StepMeasures& m) {
  if (!started_) throw DomainError("reward tracker stepped before reset");
  const RewardBreakdown b = step_reward(coefs_, prev_, m);
  prev_ = m;
  return b;
}

AssignmentMode AssignmentMode::from_rho(double rho, bool learned) {
  AssignmentMode m;
  if (rho == -1.0) {
    m.kind = AssignmentKind::kFullShared;
  } else {
    m.kind = learned ? AssignmentKind::kLearned : AssignmentKind::kFixed;
  }
  m.rho = rho;
  m.validate();
  return m;
}

void AssignmentMode::validate() const {
  if (kind == AssignmentKind::kFullShared) return;
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("rho must be -1 or lie in [0, 1]");
  }
}

std::string AssignmentMode::describe() const {
  std::ostringstream os;
  switch (kind) {
    case AssignmentKind::kFullShared: os << "shared(rho=-1)"; break;
    case AssignmentKind::kFixed: os << "fixed(rho=" << rho << ")"; break;
    case AssignmentKind::kLearned: os << "learned(rho=" << rho << ")"; break;
  }
  return os.str();
}

AssignedReward assign_rewards(const AssignmentMode& mode, double r,
                              std::array<double, 2> rho_r) {
  mode.validate();
  if (!std::isfinite(r)) throw DomainError("non-finite step reward");
  AssignedReward a;
  switch (mode.kind) {
    case AssignmentKind::kFullShared:
      a.r_omega = r;
      a.r_nu = r;
      a.rho_omega = a.rho_nu = 1.0;
      a.rho_r_omega = a.rho_r_nu = 0.5;
      break;
    case AssignmentKind::kFixed:
      a.rho_omega = a.rho_nu = (1.0 - mode.rho) / 2.0;
      a.r_omega = r * a.rho_omega;
      a.r_nu = r * a.rho_nu;
      a.rho_r_omega = a.rho_r_nu = 0.5;
      break;
    case AssignmentKind::kLearned: {
      a.rho_r_omega = rho_r[0];
      a.rho_r_nu = rho_r[1];
      a.rho_omega = (1.0 - mode.rho) / 2.0 + rho_r[0] * mode.rho;
      a.rho_nu = (1.0 - mode.rho) / 2.0 + rho_r[1] * mode.rho;
      a.r_omega = snap_to_ulp_grid(r * a.rho_omega, r);
      a.r_nu = r - a.r_omega;
      break;
    }
  }
  if (mode.kind != AssignmentKind::kFullShared) {
    const double residual = r - a.r_omega - a.r_nu;
    a.loss_sigma = residual * residual;
  }
  return a;
}

AssignmentHead::AssignmentHead(std::string prefix, std::size_t state_dim)
    : prefix_(std::move(prefix)),
      state_dim_(state_dim),
      spec_{prefix_ + ".head", 2 * state_dim + 1, 2, Activation::kNone} {}

void AssignmentHead::init(ParamStore& params, std::mt19937_64& rng) const {
  init_dense(params, spec_, rng);
}

Tensor2 AssignmentHead::forward(const ParamStore& params, const Tensor2& s_omega,
                                const Tensor2& s_nu, std::span<const double> rewards,
                                Cache* cache) const {
  const std::size_t n = s_omega.rows();
  if (s_nu.rows() != n || rewards.size() != n || s_omega.cols() != state_dim_ ||
      s_nu.cols() != state_dim_) {
    throw ConfigError("assignment head input shape mismatch");
  }
  Tensor2 x(n, 2 * state_dim_ + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < state_dim_; ++k) {
      x(i, k) = s_omega(i, k);
      x(i, state_dim_ + k) = s_nu(i, k);
    }
    x(i, 2 * state_dim_) = rewards[i];
  }
  DenseCache dc;
  Tensor2 probs = softmax_rows(dense_forward(params, spec_, x, &dc));
  if (cache) {
    cache->dense = std::move(dc);
    cache->probs = probs;
  }
  return probs;
}

void AssignmentHead::backward(ParamStore& params, const Cache& cache,
                              const Tensor2& dprobs) const {
  dense_backward(params, spec_, cache.dense, softmax_backward(cache.probs, dprobs));
}

DecompositionCheck monotone_decomposition_check(std::span<const double, 4> q_omega,
                                                std::span<const double, 4> q_nu,
                                                double w_omega, double w_nu) {
  DecompositionCheck c;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double v = w_omega * q_omega[a] + w_nu * q_nu[b];
      if (v > best) {
        best = v;
        c.joint = {a, b};
      }
    }
  }
  auto argmax = [](std::span<const double, 4> q) {
    int k = 0;
    for (int i = 1; i < 4; ++i) {
      if (q[i] > q[k]) k = i;
    }
    return k;
  };
  c.individual = {argmax(q_omega), argmax(q_nu)};
  c.factorizes = c.joint == c.individual;
  return c;
}

}  // namespace duet
