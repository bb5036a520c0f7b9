#pragma once

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "duet/layers.hpp"
#include "duet/params.hpp"
#include "duet/scene.hpp"

namespace duet {

struct ObsConfig {
  int patch_radius = 3;
  bool field_of_view = false;
  bool blind = false;           // vision replaced by zeros
  bool raw_step = false;        // feed t instead of t / T
  int max_steps = 64;

  std::size_t vision_dim() const {
    const auto side = static_cast<std::size_t>(2 * patch_radius + 1);
    return side * side;
  }
};

inline constexpr std::size_t kAzimuthDim = 3;   // sin, cos, time
inline constexpr std::size_t kPositionDim = 3;  // x, y, z in metres

struct Observation {
  std::vector<double> vision;
  std::array<double, kAzimuthDim> azimuth{};
  std::array<double, kPositionDim> position{};
};

Observation observe(const NavScene& scene, const AgentPose& pose, int step,
                    const ObsConfig& cfg);
/// All-zero observation used to pad an unfilled memory bank.
Observation zero_observation(const ObsConfig& cfg);

/// Rows of observations split by modality.
struct ObsBatch {
  Tensor2 vision;
  Tensor2 azimuth;
  Tensor2 position;

  std::size_t size() const { return vision.rows(); }
};
ObsBatch stack_observations(std::span<const Observation* const> obs, const ObsConfig& cfg);

struct EncoderDims {
  std::size_t vision = 64;
  std::size_t azimuth = 16;
  std::size_t position = 16;
  std::size_t total() const { return vision + azimuth + position; }
};

/// vision -> f_i, azimuth -> f_a, position -> f_p; e = [f_i, f_a, f_p].
class ObservationEncoder {
 public:
  ObservationEncoder() = default;
  ObservationEncoder(std::string prefix, std::size_t vision_in, EncoderDims dims);

  void init(ParamStore& params, std::mt19937_64& rng) const;

  struct Cache {
    DenseCache vision, azimuth, position;
  };
  Tensor2 forward(const ParamStore& params, const ObsBatch& obs, Cache* cache = nullptr) const;
  void backward(ParamStore& params, const Cache& cache, const Tensor2& de) const;

  std::size_t out_dim() const { return dims_.total(); }
  const EncoderDims& dims() const { return dims_; }
  const DenseSpec& vision_spec() const { return vision_; }
  const DenseSpec& azimuth_spec() const { return azimuth_; }
  const DenseSpec& position_spec() const { return position_; }

 private:
  EncoderDims dims_;
  DenseSpec vision_, azimuth_, position_;
};

struct PolicyOutput {
  Tensor2 probs;   // N x 4
  Tensor2 values;  // N x 1
  Tensor2 hidden;  // N x H
};

/// One agent: encoder, GRU state, linear actor and critic heads.
class AgentNet {
 public:
  AgentNet() = default;
  AgentNet(std::string prefix, const ObsConfig& obs, EncoderDims enc, std::size_t hidden);

  void init(ParamStore& params, std::mt19937_64& rng) const;

  struct Cache {
    ObservationEncoder::Cache enc;
    GruCache gru;
    DenseCache actor, critic;
    Tensor2 probs;
  };
  PolicyOutput forward(const ParamStore& params, const ObsBatch& obs, const Tensor2& h_prev,
                       Cache* cache = nullptr) const;
  /// Backpropagates dL/dprobs and dL/dvalues; the previous hidden state is
  /// treated as a constant.
  void backward(ParamStore& params, const Cache& cache, const Tensor2& dprobs,
                const Tensor2& dvalues) const;

  const std::string& prefix() const { return prefix_; }
  std::size_t hidden() const { return gru_.hidden; }
  const ObservationEncoder& encoder() const { return encoder_; }

 private:
  std::string prefix_;
  ObservationEncoder encoder_;
  GruSpec gru_;
  DenseSpec actor_, critic_;
};

int sample_action(std::span<const double> probs, std::mt19937_64& rng);
int greedy_action(std::span<const double> probs);

enum class AdvantageMode { kStandard, kLiteral };

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// `values` has one more entry than `rewards` (bootstrap). done[t] marks
/// that the episode ended after step t, cutting the recursion there.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const char> done, double gamma, double tau,
                      AdvantageMode mode = AdvantageMode::kStandard);

/// Mean 0, standard deviation 1 (population), eps in the denominator.
void normalize_advantages(std::vector<double>& adv, double eps = 1e-8);

struct PpoConfig {
  double clip = 0.1;
  double entropy_coef = 0.02;
  double value_coef = 0.5;
};

/// Transitions of one agent with everything the surrogate needs.
struct PpoBatch {
  ObsBatch obs;
  Tensor2 h_prev;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;  // already normalized
  std::vector<double> returns;
};

struct PpoStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Batch-mean clipped surrogate + value_coef (V - R)^2 - entropy_coef H.
/// Gradients (scaled by `weight`) are accumulated into `params`.
PpoStats ppo_loss(ParamStore& params, const AgentNet& net, const PpoBatch& batch,
                  const PpoConfig& cfg, double weight = 1.0);

}  // namespace duet
