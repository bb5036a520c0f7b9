#pragma once

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "duet/acoustics.hpp"
#include "duet/config.hpp"
#include "duet/predictor.hpp"
#include "duet/rewards.hpp"
#include "duet/scene.hpp"

namespace duet {

/// A scene with its ground-truth RIR memo.
struct SceneBundle {
  std::uint64_t seed = 0;
  std::shared_ptr<const NavScene> scene;
  std::shared_ptr<RirCache> rirs;
};

std::vector<SceneBundle> make_scenes(std::span<const std::uint64_t> seeds, const RunConfig& cfg);
SceneBundle make_scene(const SceneSpec& spec, const RunConfig& cfg);

/// One logged step. Step 0 carries no actions and a zero reward.
struct StepRecord {
  int t = 0;
  std::array<AgentPose, 2> poses{};
  std::array<int, 2> actions{-1, -1};
  RewardBreakdown reward;
  AssignedReward shares;
  double pe = 0.0;
  double zeta = 0.0;
  double psi = 0.0;
  double phi = 0.0;
};

/// Live state of an episode. Agent 0 emits, agent 1 receives.
struct Episode {
  const SceneBundle* bundle = nullptr;
  int t = 0;
  int max_steps = 0;
  std::array<AgentPose, 2> poses{};
  std::array<Point2, 2> previous{};
  CoverageTracker coverage;
  MemoryBank bank;
  RewardTracker tracker;
  bool done = false;
  std::vector<StepRecord> trace;

  const NavScene& scene() const { return *bundle->scene; }
};

/// Uniform start nodes and headings.
Episode start_episode(const SceneBundle& bundle, const RunConfig& cfg, std::mt19937_64& rng);

ObsPair observe_pair(const Episode& ep, const ObsConfig& obs);

/// Agent 0 emits, agent 1 listens with its own heading.
std::shared_ptr<const BinauralRIR> forward_truth(const Episode& ep);
/// Agent 1 emits, agent 0 listens.
std::shared_ptr<const BinauralRIR> reverse_truth(const Episode& ep);

std::vector<double> to_doubles(const BinauralRIR& rir);

/// Hull of the current and previous positions of both agents.
HullStats episode_hull(const Episode& ep);

using PredictFn = std::function<std::vector<double>(const PredictQuery&)>;

struct Measurement {
  PredictQuery query;
  std::shared_ptr<const BinauralRIR> truth;          // forward direction
  std::shared_ptr<const BinauralRIR> reverse_truth;  // swapped roles
  std::vector<double> prediction;
  double delta = 0.0;
  StepMeasures measures;
  RewardBreakdown reward;  // zero at step 0
};

/// Emits and receives in both directions at the current state, scores the
/// forward prediction, updates the reward caches, appends a trace record
/// and pushes the observation pair into the memory bank.
Measurement measure_step(Episode& ep, const ObsConfig& obs, const StftConfig& stft,
                         const PredictFn& predict, std::array<int, 2> actions = {-1, -1});

/// Both agents act, then the coverage tracker and step counter advance. The
/// episode ends once T states have been visited or both agents stopped.
void move_agents(Episode& ep, int action0, int action1);

/// Recomputes zeta, psi, phi and rewards of a trace from its poses and
/// logged PE values.
std::vector<StepRecord> replay_trace(const NavScene& scene, std::span<const StepRecord> trace,
                                     const RewardCoefs& coefs);

}  // namespace duet
