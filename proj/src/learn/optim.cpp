#include "duet/optim.hpp"

#include <cmath>

#include "duet/errors.hpp"

namespace duet {

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
}

void adam_update(ParamStore& params, const OptimConfig& cfg,
                 const BlockFilter& filter) {
  cfg.validate();
  for (const auto& [name, b] : params.blocks()) {
    if (filter && !filter(name)) continue;
    if (!b.grad.all_finite()) {
      throw TrainingError("non-finite gradient in block '" + name + "'");
    }
  }
  const std::int64_t t = params.step() + 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (auto& [name, b] : params.blocks()) {
    if (filter && !filter(name)) continue;
    for (std::size_t i = 0; i < b.value.size(); ++i) {
      const double g = b.grad[i];
      b.m[i] = cfg.beta1 * b.m[i] + (1.0 - cfg.beta1) * g;
      b.v[i] = cfg.beta2 * b.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = b.m[i] / c1;
      const double vhat = b.v[i] / c2;
      b.value[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
    b.grad.fill(0.0);
  }
  params.set_step(t);
}

double global_grad_norm(const ParamStore& params, const BlockFilter& filter) {
  double sq = 0.0;
  for (const auto& [name, b] : params.blocks()) {
    if (filter && !filter(name)) continue;
    for (double g : b.grad.values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(ParamStore& params, double max_norm,
                        const BlockFilter& filter) {
  const double norm = global_grad_norm(params, filter);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [name, b] : params.blocks()) {
      if (filter && !filter(name)) continue;
      for (double& g : b.grad.values()) g *= scale;
    }
  }
  return norm;
}

}  // namespace duet
