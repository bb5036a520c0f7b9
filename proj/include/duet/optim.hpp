#pragma once

#include "duet/params.hpp"

namespace duet {

struct OptimConfig {
  double learning_rate = 2e-4;
  double max_grad_norm = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Throws ConfigError unless learning_rate > 0 and max_grad_norm > 0.
  void validate() const;
};

/// Bias-corrected Adam step over the selected blocks, followed by zeroing
/// their gradients. Increments the store's step counter once per call.
/// Throws TrainingError naming the first block with a non-finite gradient;
/// in that case no parameter is modified.
void adam_update(ParamStore& params, const OptimConfig& cfg,
                 const BlockFilter& filter = {});

/// Global L2 norm of the selected gradients.
double global_grad_norm(const ParamStore& params, const BlockFilter& filter = {});

/// Rescales the selected gradients so their global norm is at most
/// `max_norm`. Returns the norm before clipping.
double clip_global_norm(ParamStore& params, double max_norm,
                        const BlockFilter& filter = {});

}  // namespace duet
