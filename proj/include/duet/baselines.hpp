#pragma once

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "duet/acoustics.hpp"
#include "duet/scene.hpp"
#include "duet/tensor.hpp"

namespace duet {

/// Uniform over MoveForward, TurnLeft, TurnRight; Stop as the last action of
/// an episode (the move out of state T - 2).
Action random_action(int step, int max_steps, std::mt19937_64& rng);

/// Greedy one-step lookahead for agent `agent` over its movement actions
/// with the other agent held fixed; maximizes the next hull area. Actions
/// that would leave the pose unchanged are skipped. Ties resolve in the
/// order MoveForward, TurnLeft, TurnRight.
Action occupancy_action(const NavScene& scene, const std::array<AgentPose, 2>& poses, int agent);

/// Forward into an unvisited faced neighbour; otherwise turn toward the
/// nearest unvisited neighbour (left first); otherwise uniform random.
Action curiosity_action(const NavScene& scene, const AgentPose& pose,
                        const CoverageTracker& visited, std::mt19937_64& rng);

struct LatentRecord {
  std::string scene_id;
  std::vector<double> latent;
  int listener_heading = 0;
  int listener_node = 0;
  int source_node = 0;
  std::shared_ptr<const BinauralRIR> rir;
};

/// -KL(softmax(test) || softmax(train)).
double latent_similarity(std::span<const double> test, std::span<const double> train);

class NearestNeighborBank {
 public:
  void add(LatentRecord r);
  std::size_t size() const { return records_.size(); }
  const std::vector<LatentRecord>& records() const { return records_; }
  /// Index of the most similar record (lowest index on ties). Throws
  /// DomainError when empty.
  std::size_t nearest(std::span<const double> query) const;

 private:
  std::vector<LatentRecord> records_;
  std::vector<std::vector<double>> log_probs_;
};

}  // namespace duet
