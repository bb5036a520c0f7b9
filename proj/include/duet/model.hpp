#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "duet/config.hpp"
#include "duet/params.hpp"
#include "duet/policy.hpp"
#include "duet/predictor.hpp"
#include "duet/rewards.hpp"

namespace duet {

inline constexpr const char* kAgentPrefix[2] = {"agent0", "agent1"};
inline constexpr const char* kPredictorPrefix = "pred";
inline constexpr const char* kAssignPrefix = "assign";

PredictorConfig predictor_config(const RunConfig& cfg);

/// Both agents, the RIR predictor and the reward-assignment head sharing one
/// parameter store.
struct Model {
  RunConfig cfg;
  ObsConfig obs;
  std::array<AgentNet, 2> agents;
  RirPredictor predictor;
  AssignmentHead head;
  ParamStore params;

  explicit Model(const RunConfig& cfg);
  /// Fresh random parameters.
  void init(std::uint64_t seed);

  std::vector<double> predict(const PredictQuery& q) const;

  static BlockFilter policy_filter();
  static BlockFilter predictor_filter();
  static BlockFilter head_filter();
};

/// Writes the parameter checkpoint and its config next to it
/// (`<path>.cfg`).
void save_model(const std::filesystem::path& path, const Model& model);
/// Loads a checkpoint written by save_model. Block names and shapes must
/// match the architecture implied by the stored config.
Model load_model(const std::filesystem::path& path);
/// Copies every block of the checkpoint into `model`, which must hold the
/// same blocks with the same shapes.
void init_from_checkpoint(Model& model, const std::filesystem::path& path);

}  // namespace duet
