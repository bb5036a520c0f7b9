#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "duet/policy.hpp"
#include "duet/rewards.hpp"
#include "duet/spectral.hpp"

namespace duet {

/// "0-3,7" -> {0, 1, 2, 3, 7}.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::string format_seed_list(const std::vector<std::uint64_t>& seeds);

/// Every knob of a run. Text form is flat `key = value` lines whose keys
/// follow the hyperparameter table names.
struct RunConfig {
  // optimisation
  int num_updates = 2000;
  int num_steps = 64;  // rollout length per worker
  int ppo_epoch = 4;
  int num_mini_batch = 1;
  double value_loss_coef = 0.5;
  double entropy_coef = 0.02;
  double learning_rate = 2e-4;
  double max_grad_norm = 0.5;
  bool use_gae = true;
  AdvantageMode advantage = AdvantageMode::kStandard;
  bool linear_lr_decay = false;
  bool linear_clip_decay = false;
  double clip_param = 0.1;
  double gamma = 0.99;
  double tau = 0.95;
  std::string optimizer = "adam";
  int reward_window = 50;
  int checkpoint_interval = 500;
  int num_processes = 4;
  int threads = 1;

  // episodes and scenes
  int max_steps = 64;
  double scene_width = 8.0;
  double scene_depth = 8.0;
  double resolution = 0.5;
  std::vector<std::uint64_t> train_scenes = parse_seed_list("0-15");
  std::vector<std::uint64_t> val_scenes = parse_seed_list("100-101");
  std::vector<std::uint64_t> test_scenes = parse_seed_list("200-203");

  // observations and networks
  int patch_radius = 3;
  bool field_of_view = false;
  int hidden_size = 64;
  int generator_hidden = 64;
  std::size_t kappa = 2;

  // acoustics and spectra
  int sample_rate = 16000;
  std::size_t rir_length = 2000;
  StftConfig stft;

  // objective
  double w_mse = 1.0;
  double w_m = 0.5;
  double w_xi = 0.5;
  double w_sigma = 0.0;
  double w_m_omega = 0.5;
  double w_m_nu = 0.5;
  RewardCoefs alphas;
  double rho = -1.0;
  bool learned_assignment = false;

  // evaluation
  double lambda = 0.1;
  std::vector<std::uint64_t> eval_seeds{0, 1, 2, 3, 4};
  int eval_episodes = 2;  // per scene per seed
  bool si_projection = false;

  std::uint64_t seed = 0;

  /// Table values for the full-scale setting.
  static RunConfig paper_profile();

  AssignmentMode assignment() const { return AssignmentMode::from_rho(rho, learned_assignment); }
  ObsConfig obs_config() const;

  /// Throws ConfigError on any violated constraint, including overlapping
  /// scene splits.
  void validate() const;

  /// Applies one `key = value` setting. Throws ConfigError on unknown keys
  /// or malformed values.
  void set(const std::string& key, const std::string& value);
};

RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
void write_run_config(std::ostream& out, const RunConfig& cfg);

}  // namespace duet
