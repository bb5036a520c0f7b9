#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "duet/env.hpp"
#include "duet/model.hpp"

namespace duet {

/// Independent generator for (seed, a, b); used for workers, evaluation
/// episodes and intervention noise.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Per-update training record. Components are means over the PPO epochs.
struct UpdateLog {
  int update = 0;
  double learning_rate = 0.0;
  double clip = 0.0;
  double loss = 0.0;
  double loss_m = 0.0;
  double loss_m_omega = 0.0;
  double loss_m_nu = 0.0;
  double loss_xi = 0.0;
  double loss_sigma = 0.0;
  std::array<PpoStats, 2> ppo{};
  double mse = 0.0;
  double delta = 0.0;  // mean PE of the rollout's forward predictions
  double reward_window = 0.0;
  int episodes = 0;
  double seconds = 0.0;
};

struct TrainOptions {
  /// Random policy, only predictor parameters move, w_m = 0 and w_xi = 1.
  bool pretrain = false;
  /// Checkpoints, log and failure dumps go here; empty disables files.
  std::filesystem::path out_dir;
  std::function<void(const UpdateLog&)> on_update;
};

struct TrainResult {
  std::vector<UpdateLog> log;
  std::vector<double> episode_returns;
  std::filesystem::path checkpoint;
};

/// Rollouts across workers, advantages per agent, PPO on both agents plus
/// the predictor loss. Throws TrainingError on a non-finite loss after
/// dumping the offending batch.
TrainResult train(Model& model, std::span<const SceneBundle> scenes, const TrainOptions& opt = {});
TrainResult pretrain_generator(Model& model, std::span<const SceneBundle> scenes,
                               TrainOptions opt = {});

/// Total objective from its parts.
double combine_losses(const RunConfig& cfg, bool pretrain, double l_omega, double l_nu,
                      double l_xi, double l_sigma);

void write_train_log_csv(std::ostream& out, std::span<const UpdateLog> log);

}  // namespace duet
