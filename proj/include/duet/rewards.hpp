#pragma once

#include <array>
#include <random>
#include <span>
#include <string>

#include "duet/layers.hpp"
#include "duet/params.hpp"
#include "duet/scene.hpp"

namespace duet {

struct RewardCoefs {
  double xi = 1.0;
  double zeta = 1.0;
  double psi = -1.0;
  double phi = 1.0;
};

/// Quantities measured after a step: STFT distance of the receiver's
/// prediction, coverage ratio and hull of the four agent positions.
struct StepMeasures {
  double delta = 0.0;
  double zeta = 0.0;
  HullStats hull;
};

struct RewardBreakdown {
  double r_xi = 0.0;
  double r_zeta = 0.0;
  double r_psi = 0.0;
  double r_phi = 0.0;
  double total = 0.0;
};

/// Reward between two consecutive measurements; xi = -delta.
RewardBreakdown step_reward(const RewardCoefs& coefs, const StepMeasures& prev,
                            const StepMeasures& cur);

/// Holds the previous step's measurements across an episode.
class RewardTracker {
 public:
  explicit RewardTracker(RewardCoefs coefs = {}) : coefs_(coefs) {}
  /// Seeds the caches at step 0; the step-0 reward is zero.
  RewardBreakdown reset(const StepMeasures& m0);
  RewardBreakdown step(const StepMeasures& m);
  const StepMeasures& previous() const { return prev_; }

 private:
  RewardCoefs coefs_;
  StepMeasures prev_;
  bool started_ = false;
};

enum class AssignmentKind { kFullShared, kFixed, kLearned };

struct AssignmentMode {
  AssignmentKind kind = AssignmentKind::kFullShared;
  double rho = -1.0;

  /// rho = -1 selects FullShared; otherwise rho must lie in [0, 1].
  static AssignmentMode from_rho(double rho, bool learned);
  void validate() const;
  std::string describe() const;
};

struct AssignedReward {
  double r_omega = 0.0;
  double r_nu = 0.0;
  double rho_omega = 1.0;  // immediate weights
  double rho_nu = 1.0;
  double rho_r_omega = 0.5;  // head outputs (learned mode)
  double rho_r_nu = 0.5;
  double loss_sigma = 0.0;
};

/// Splits the step reward. For the learned mode `rho_r` holds the head's
/// softmax pair. Learned shares satisfy r_omega + r_nu == r bit for bit.
AssignedReward assign_rewards(const AssignmentMode& mode, double r,
                              std::array<double, 2> rho_r = {0.5, 0.5});

/// Trainable head mapping (s_omega, s_nu, r) to the softmax pair
/// (rho_R^omega, rho_R^nu). Blocks live under `<prefix>.head`.
class AssignmentHead {
 public:
  AssignmentHead() = default;
  AssignmentHead(std::string prefix, std::size_t state_dim);

  void init(ParamStore& params, std::mt19937_64& rng) const;

  struct Cache {
    DenseCache dense;
    Tensor2 probs;
  };
  /// Row-batched: states are (batch x state_dim), rewards one per row.
  Tensor2 forward(const ParamStore& params, const Tensor2& s_omega, const Tensor2& s_nu,
                  std::span<const double> rewards, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients for dL/d(probs).
  void backward(ParamStore& params, const Cache& cache, const Tensor2& dprobs) const;

  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  std::size_t state_dim_ = 0;
  DenseSpec spec_;
};

struct DecompositionCheck {
  bool factorizes = false;
  std::array<int, 2> joint{0, 0};
  std::array<int, 2> individual{0, 0};
};

/// Compares the joint argmax of w_o Q_o(a) + w_n Q_n(b) over all 16 pairs
/// with the per-agent argmaxes (ties resolved to the lowest index).
DecompositionCheck monotone_decomposition_check(std::span<const double, 4> q_omega,
                                                std::span<const double, 4> q_nu,
                                                double w_omega, double w_nu);

}  // namespace duet
