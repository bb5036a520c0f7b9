#pragma once

#include <deque>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "duet/layers.hpp"
#include "duet/params.hpp"
#include "duet/policy.hpp"
#include "duet/spectral.hpp"

namespace duet {

/// Emitter and receiver observations taken at the same step.
struct ObsPair {
  Observation emitter;
  Observation receiver;
};

/// Ring of the last kappa observation pairs.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t kappa = 2) : kappa_(kappa) {}
  void push(ObsPair pair);
  void clear() { pairs_.clear(); }
  std::size_t kappa() const { return kappa_; }
  std::size_t size() const { return pairs_.size(); }
  /// Oldest first.
  const std::deque<ObsPair>& pairs() const { return pairs_; }
  /// Copy with emitter and receiver roles exchanged in every pair.
  MemoryBank swapped() const;

 private:
  std::size_t kappa_;
  std::deque<ObsPair> pairs_;
};

/// One prediction query: the current pair plus memory contents.
struct PredictQuery {
  ObsPair current;
  std::vector<ObsPair> memory;  // at most kappa entries
};

PredictQuery make_query(const ObsPair& current, const MemoryBank& bank);
/// Same query with roles exchanged (receiver emits).
PredictQuery swap_roles(const PredictQuery& q);

struct PredictorConfig {
  ObsConfig obs;
  EncoderDims enc{32, 8, 8};
  std::size_t memory_dim = 32;
  std::size_t gen_hidden = 64;
  std::size_t rir_length = 2000;
  std::size_t kappa = 2;
  double w_mse = 1.0;
  StftConfig stft;
};

/// Scaling constants of the two loss terms.
inline constexpr double kStftLossScale = 10.0;
inline constexpr double kMseLossScale = 4464.2;

/// E_r, E_m and the generator D_r. Blocks live under "<prefix>.".
class RirPredictor {
 public:
  RirPredictor() = default;
  RirPredictor(std::string prefix, PredictorConfig cfg);

  void init(ParamStore& params, std::mt19937_64& rng) const;

  struct Cache {
    std::size_t n = 0;
    ObservationEncoder::Cache er_emit, er_recv;
    std::vector<ObservationEncoder::Cache> em_emit, em_recv;  // per slot
    DenseCache proj;
    DenseCache hidden, out;
    Tensor2 u;  // sigmoid outputs
  };

  /// Latent [f_r, f_m] per query.
  Tensor2 latent(const ParamStore& params, std::span<const PredictQuery> queries,
                 Cache* cache = nullptr) const;
  /// Predicted RIRs in [-1, 1], one row of 2L (left then right) per query.
  Tensor2 forward(const ParamStore& params, std::span<const PredictQuery> queries,
                  Cache* cache = nullptr) const;
  /// Backpropagates dL/d(prediction rows).
  void backward(ParamStore& params, const Cache& cache, const Tensor2& dpred) const;

  const PredictorConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }
  std::size_t pair_dim() const { return 2 * cfg_.enc.total(); }
  std::size_t latent_dim() const { return pair_dim() + cfg_.memory_dim; }

 private:
  Tensor2 memory_code(const ParamStore& params, std::span<const PredictQuery> queries,
                      Cache& c) const;

  std::string prefix_;
  PredictorConfig cfg_;
  ObservationEncoder er_emit_, er_recv_, em_emit_, em_recv_;
  DenseSpec proj_, hidden_, out_;
};

struct RirLoss {
  double loss = 0.0;
  double mse = 0.0;
  double delta = 0.0;  // STFT distance, only filled when computed
  bool has_delta = false;
};

/// (1 - w) * 10 * Delta + w * 4464.2 * MSE for one binaural pair. The STFT
/// term is skipped when its weight is zero unless `want_delta`. When `grad`
/// is non-null it receives dL/dpred.
RirLoss rir_loss(std::span<const double> truth, std::span<const double> pred, double w_mse,
                 const StftConfig& stft, std::vector<double>* grad = nullptr,
                 bool want_delta = false);

}  // namespace duet
