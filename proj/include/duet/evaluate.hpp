#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "duet/baselines.hpp"
#include "duet/env.hpp"
#include "duet/metrics.hpp"
#include "duet/model.hpp"
#include "duet/trace.hpp"

namespace duet {

enum class Modality { kVision = 0, kAzimuth = 1, kPosition = 2 };
inline constexpr int kNumModalities = 3;

/// Replaces one modality of `obs` with standard Gaussian noise.
void corrupt_modality(Observation& obs, Modality m, std::mt19937_64& rng);

/// Acts for both agents and supplies the receiver's RIR prediction.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual void begin(const Episode& ep) { (void)ep; }
  virtual std::array<int, 2> act(const Episode& ep, std::mt19937_64& rng) = 0;
  virtual std::vector<double> predict(const PredictQuery& q) = 0;
  /// Reward shares logged in traces.
  virtual AssignedReward assign(double r) const;

 protected:
  explicit Controller(AssignmentMode mode) : mode_(mode) {}
  AssignmentMode mode_;
};

/// Optional corruption of one modality for one agent (or both with agent
/// -1), applied to policy inputs and, with `predictor`, to predictor inputs.
struct Intervention {
  Modality modality = Modality::kVision;
  int agent = -1;
  bool predictor = true;
  std::uint64_t seed = 0;
};

/// The trained agents and predictor. Actions are sampled from the policy.
class ModelController : public Controller {
 public:
  explicit ModelController(const Model& model, std::optional<Intervention> iv = std::nullopt);
  std::string name() const override { return "macma"; }
  void begin(const Episode& ep) override;
  std::array<int, 2> act(const Episode& ep, std::mt19937_64& rng) override;
  std::vector<double> predict(const PredictQuery& q) override;
  AssignedReward assign(double r) const override;

 private:
  const Model& model_;
  std::optional<Intervention> iv_;
  std::mt19937_64 noise_;
  std::array<std::vector<double>, 2> h_;
};

enum class BaselineKind { kRandom, kNearestNeighbor, kOccupancy, kCuriosity };
BaselineKind parse_baseline(const std::string& name);
std::string baseline_name(BaselineKind k);

/// Random-walk rollouts over `scenes` storing the forward latent of every
/// step together with its ground-truth RIR.
NearestNeighborBank build_nn_bank(const Model& model, std::span<const SceneBundle> scenes,
                                  int episodes_per_scene, std::uint64_t seed);

/// Baseline policies. All but the nearest-neighbour baseline predict with
/// the model's generator; that one returns the RIR stored with the closest
/// training latent.
std::unique_ptr<Controller> make_baseline(BaselineKind kind, const Model& model,
                                          const NearestNeighborBank* bank = nullptr);

struct EpisodeOutcome {
  EpisodeMetrics metrics;
  Trace trace;
};

/// Runs one episode; `rng` draws the start state first, then actions.
EpisodeOutcome run_episode(Controller& ctrl, const SceneBundle& bundle, const RunConfig& cfg,
                           std::mt19937_64& rng, std::uint64_t seed, int episode);

struct EvalReport {
  std::string label;
  std::vector<EpisodeMetrics> rows;
  MetricsSummary summary;
  std::vector<Trace> traces;
};

/// Episodes per scene per seed. Each (seed, scene, episode) has its own
/// generator, so every controller sees the same start states.
EvalReport evaluate(Controller& ctrl, std::span<const SceneBundle> scenes, const RunConfig& cfg,
                    std::span<const std::uint64_t> seeds, int episodes);

/// metrics.csv, metrics.json and traces/<scene>_s<seed>_e<episode>.jsonl.
void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       bool with_traces = true);

}  // namespace duet
