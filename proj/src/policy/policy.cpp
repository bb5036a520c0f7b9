#include "duet/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "duet/errors.hpp"

namespace duet {

Observation observe(const NavScene& scene, const AgentPose& pose, int step,
                    const ObsConfig& cfg) {
  Observation o;
  if (cfg.blind) {
    o.vision.assign(cfg.vision_dim(), 0.0);
  } else {
    Tensor2 patch = egocentric_patch(scene, pose, cfg.patch_radius, cfg.field_of_view);
    o.vision.assign(patch.values().begin(), patch.values().end());
  }
  const double rad = pose.heading * std::numbers::pi / 180.0;
  const double t = cfg.raw_step ? static_cast<double>(step)
                                : static_cast<double>(step) / std::max(cfg.max_steps, 1);
  o.azimuth = {std::sin(rad), std::cos(rad), t};
  const Point3& p = scene.position(pose.node);
  o.position = {p.x, p.y, p.z};
  return o;
}

Observation zero_observation(const ObsConfig& cfg) {
  Observation o;
  o.vision.assign(cfg.vision_dim(), 0.0);
  return o;
}

ObsBatch stack_observations(std::span<const Observation* const> obs, const ObsConfig& cfg) {
  const std::size_t n = obs.size();
  ObsBatch b{Tensor2(n, cfg.vision_dim()), Tensor2(n, kAzimuthDim), Tensor2(n, kPositionDim)};
  for (std::size_t i = 0; i < n; ++i) {
    const Observation& o = *obs[i];
    if (o.vision.size() != cfg.vision_dim()) throw ConfigError("vision size mismatch");
    std::copy(o.vision.begin(), o.vision.end(), b.vision.row_span(i).begin());
    std::copy(o.azimuth.begin(), o.azimuth.end(), b.azimuth.row_span(i).begin());
    std::copy(o.position.begin(), o.position.end(), b.position.row_span(i).begin());
  }
  return b;
}

ObservationEncoder::ObservationEncoder(std::string prefix, std::size_t vision_in,
                                       EncoderDims dims)
    : dims_(dims),
      vision_{prefix + ".vision", vision_in, dims.vision, Activation::kRelu},
      azimuth_{prefix + ".azimuth", kAzimuthDim, dims.azimuth, Activation::kTanh},
      position_{prefix + ".position", kPositionDim, dims.position, Activation::kTanh} {}

void ObservationEncoder::init(ParamStore& params, std::mt19937_64& rng) const {
  init_dense(params, vision_, rng);
  init_dense(params, azimuth_, rng);
  init_dense(params, position_, rng);
}

Tensor2 ObservationEncoder::forward(const ParamStore& params, const ObsBatch& obs,
                                    Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  Tensor2 fi = dense_forward(params, vision_, obs.vision, &c.vision);
  Tensor2 fa = dense_forward(params, azimuth_, obs.azimuth, &c.azimuth);
  Tensor2 fp = dense_forward(params, position_, obs.position, &c.position);
  const Tensor2* parts[] = {&fi, &fa, &fp};
  return concat_cols(parts);
}

void ObservationEncoder::backward(ParamStore& params, const Cache& cache,
                                  const Tensor2& de) const {
  dense_backward(params, vision_, cache.vision, slice_cols(de, 0, dims_.vision));
  dense_backward(params, azimuth_, cache.azimuth, slice_cols(de, dims_.vision, dims_.azimuth));
  dense_backward(params, position_, cache.position,
                 slice_cols(de, dims_.vision + dims_.azimuth, dims_.position));
}

AgentNet::AgentNet(std::string prefix, const ObsConfig& obs, EncoderDims enc,
                   std::size_t hidden)
    : prefix_(prefix),
      encoder_(prefix + ".enc", obs.vision_dim(), enc),
      gru_{prefix + ".gru", enc.total(), hidden},
      actor_{prefix + ".actor", hidden, kNumActions, Activation::kNone},
      critic_{prefix + ".critic", hidden, 1, Activation::kNone} {}

void AgentNet::init(ParamStore& params, std::mt19937_64& rng) const {
  encoder_.init(params, rng);
  init_gru(params, gru_, rng);
  init_dense(params, actor_, rng, 0.01);
  init_dense(params, critic_, rng);
}

PolicyOutput AgentNet::forward(const ParamStore& params, const ObsBatch& obs,
                               const Tensor2& h_prev, Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  Tensor2 e = encoder_.forward(params, obs, &c.enc);
  PolicyOutput out;
  out.hidden = gru_forward(params, gru_, e, h_prev, &c.gru);
  out.probs = softmax_rows(dense_forward(params, actor_, out.hidden, &c.actor));
  out.values = dense_forward(params, critic_, out.hidden, &c.critic);
  c.probs = out.probs;
  return out;
}

void AgentNet::backward(ParamStore& params, const Cache& cache, const Tensor2& dprobs,
                        const Tensor2& dvalues) const {
  Tensor2 dh = dense_backward(params, actor_, cache.actor, softmax_backward(cache.probs, dprobs));
  Tensor2 dh2 = dense_backward(params, critic_, cache.critic, dvalues);
  dh.map() += dh2.map();
  auto [dx, dh_prev] = gru_backward(params, gru_, cache.gru, dh);
  (void)dh_prev;
  encoder_.backward(params, cache.enc, dx);
}

int sample_action(std::span<const double> probs, std::mt19937_64& rng) {
  return static_cast<int>(sample_categorical(probs, rng));
}

int greedy_action(std::span<const double> probs) {
  int k = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[k]) k = static_cast<int>(i);
  }
  return k;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const char> done, double gamma, double tau,
                      AdvantageMode mode) {
  const std::size_t n = rewards.size();
  if (values.size() != n + 1 || done.size() != n) throw ConfigError("gae input sizes");
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = done[t] ? 0.0 : values[t + 1];
    delta[t] = rewards[t] + gamma * next - values[t];
  }
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  if (mode == AdvantageMode::kStandard) {
    double acc = 0.0;
    for (std::size_t t = n; t-- > 0;) {
      acc = delta[t] + (done[t] ? 0.0 : gamma * tau * acc);
      g.advantages[t] = acc;
    }
  } else {
    // sum_{i >= t} gamma^(i + 2 - t) delta_i within the episode segment
    double acc = 0.0;
    for (std::size_t t = n; t-- > 0;) {
      acc = gamma * gamma * delta[t] + (done[t] ? 0.0 : gamma * acc);
      g.advantages[t] = acc;
    }
  }
  for (std::size_t t = 0; t < n; ++t) g.returns[t] = g.advantages[t] + values[t];
  return g;
}

void normalize_advantages(std::vector<double>& adv, double eps) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(adv.size()));
  for (double& a : adv) a = (a - mean) / (sd + eps);
}

PpoStats ppo_loss(ParamStore& params, const AgentNet& net, const PpoBatch& batch,
                  const PpoConfig& cfg, double weight) {
  const std::size_t n = batch.obs.size();
  if (n == 0 || batch.actions.size() != n || batch.old_log_probs.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n) {
    throw ConfigError("ppo batch size mismatch");
  }
  AgentNet::Cache cache;
  PolicyOutput out = net.forward(params, batch.obs, batch.h_prev, &cache);
  const double inv_n = 1.0 / static_cast<double>(n);
  Tensor2 dprobs(n, kNumActions), dvalues(n, 1);
  PpoStats s;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = batch.actions[i];
    const double p = out.probs(i, a);
    const double logp = std::log(p);
    const double ratio = std::exp(logp - batch.old_log_probs[i]);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
    const bool use_unclipped = unclipped <= clipped;
    s.policy_loss -= std::min(unclipped, clipped) * inv_n;
    if (std::abs(ratio - 1.0) > cfg.clip) s.clip_fraction += inv_n;
    s.approx_kl += (batch.old_log_probs[i] - logp) * inv_n;
    // d(-min)/dp: only the unclipped branch carries gradient
    if (use_unclipped) dprobs(i, a) -= weight * inv_n * adv * ratio / p;

    double h = 0.0;
    for (std::size_t k = 0; k < kNumActions; ++k) {
      const double pk = out.probs(i, k);
      if (pk > 0.0) h -= pk * std::log(pk);
    }
    s.entropy += h * inv_n;
    // -beta H, dH/dp_k = -(log p_k + 1)
    for (std::size_t k = 0; k < kNumActions; ++k) {
      const double pk = out.probs(i, k);
      dprobs(i, k) += weight * cfg.entropy_coef * inv_n * (std::log(pk) + 1.0);
    }
    const double err = out.values(i, 0) - batch.returns[i];
    s.value_loss += err * err * inv_n;
    dvalues(i, 0) = weight * cfg.value_coef * 2.0 * err * inv_n;
  }
  s.loss = s.policy_loss + cfg.value_coef * s.value_loss - cfg.entropy_coef * s.entropy;
  net.backward(params, cache, dprobs, dvalues);
  return s;
}

}  // namespace duet
