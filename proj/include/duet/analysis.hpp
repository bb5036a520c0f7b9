#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "duet/evaluate.hpp"

namespace duet {

using ModalityScores = std::array<double, kNumModalities>;

/// d_i / (d_0 + d_1 + d_2); equal thirds when every score is zero.
ModalityScores normalize_importance(const ModalityScores& d);

/// KL(p || q) for two action distributions.
double action_kl(std::span<const double> p, std::span<const double> q);

struct StepImportance {
  int episode = 0;
  int t = 0;
  int agent = 0;
  ModalityScores kl{};
  ModalityScores normalized{};
};

struct InterventionResult {
  std::vector<StepImportance> steps;
  /// Mean normalized policy importance per agent.
  std::array<ModalityScores, 2> policy{};
  double pe_base = 0.0;
  ModalityScores pe_delta{};       // |PE with the modality replaced - PE|
  ModalityScores pe_importance{};  // normalized pe_delta
  int episodes = 0;
};

/// Policy sensitivity: at every step of the model's own episodes each
/// agent's action distribution is recomputed with one modality replaced by
/// Gaussian noise (same recurrent state) and compared by KL. PE
/// sensitivity: whole evaluations with the modality replaced for both
/// agents and the predictor.
InterventionResult intervention_analysis(const Model& model, std::span<const SceneBundle> scenes,
                                         int episodes, std::uint64_t seed);

void write_intervention_steps_csv(std::ostream& out, const InterventionResult& r);
void write_intervention_summary_csv(std::ostream& out, const InterventionResult& r);

}  // namespace duet
