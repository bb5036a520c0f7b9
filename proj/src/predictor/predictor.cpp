#include "duet/predictor.hpp"

#include "duet/errors.hpp"

namespace duet {

void MemoryBank::push(ObsPair pair) {
  if (kappa_ == 0) return;
  pairs_.push_back(std::move(pair));
  while (pairs_.size() > kappa_) pairs_.pop_front();
}

MemoryBank MemoryBank::swapped() const {
  MemoryBank b(kappa_);
  for (const ObsPair& p : pairs_) b.pairs_.push_back({p.receiver, p.emitter});
  return b;
}

PredictQuery make_query(const ObsPair& current, const MemoryBank& bank) {
  return {current, std::vector<ObsPair>(bank.pairs().begin(), bank.pairs().end())};
}

PredictQuery swap_roles(const PredictQuery& q) {
  PredictQuery s{{q.current.receiver, q.current.emitter}, {}};
  for (const ObsPair& p : q.memory) s.memory.push_back({p.receiver, p.emitter});
  return s;
}

RirPredictor::RirPredictor(std::string prefix, PredictorConfig cfg)
    : prefix_(std::move(prefix)),
      cfg_(std::move(cfg)),
      er_emit_(prefix_ + ".er.emitter", cfg_.obs.vision_dim(), cfg_.enc),
      er_recv_(prefix_ + ".er.receiver", cfg_.obs.vision_dim(), cfg_.enc),
      em_emit_(prefix_ + ".em.emitter", cfg_.obs.vision_dim(), cfg_.enc),
      em_recv_(prefix_ + ".em.receiver", cfg_.obs.vision_dim(), cfg_.enc),
      proj_{prefix_ + ".em.proj", 2 * cfg_.enc.total(), cfg_.memory_dim, Activation::kTanh},
      hidden_{prefix_ + ".gen.hidden", 2 * cfg_.enc.total() + cfg_.memory_dim, cfg_.gen_hidden,
              Activation::kLeakyRelu},
      out_{prefix_ + ".gen.out", cfg_.gen_hidden, 2 * cfg_.rir_length, Activation::kSigmoid} {}

void RirPredictor::init(ParamStore& params, std::mt19937_64& rng) const {
  er_emit_.init(params, rng);
  er_recv_.init(params, rng);
  em_emit_.init(params, rng);
  em_recv_.init(params, rng);
  init_dense(params, proj_, rng);
  init_dense(params, hidden_, rng);
  init_dense(params, out_, rng);
}

namespace {

ObsBatch slot_batch(std::span<const PredictQuery> queries, std::size_t slot, bool emitter,
                    const ObsConfig& cfg, const Observation& pad) {
  std::vector<const Observation*> rows;
  rows.reserve(queries.size());
  for (const PredictQuery& q : queries) {
    if (slot < q.memory.size()) {
      rows.push_back(emitter ? &q.memory[slot].emitter : &q.memory[slot].receiver);
    } else {
      rows.push_back(&pad);
    }
  }
  return stack_observations(rows, cfg);
}

ObsBatch current_batch(std::span<const PredictQuery> queries, bool emitter,
                       const ObsConfig& cfg) {
  std::vector<const Observation*> rows;
  rows.reserve(queries.size());
  for (const PredictQuery& q : queries) {
    rows.push_back(emitter ? &q.current.emitter : &q.current.receiver);
  }
  return stack_observations(rows, cfg);
}

}  // namespace

Tensor2 RirPredictor::memory_code(const ParamStore& params,
                                  std::span<const PredictQuery> queries, Cache& c) const {
  const std::size_t n = queries.size();
  const std::size_t k = cfg_.kappa;
  c.em_emit.assign(k, {});
  c.em_recv.assign(k, {});
  if (k == 0) return Tensor2(n, cfg_.memory_dim);
  const Observation pad = zero_observation(cfg_.obs);
  Tensor2 pooled(n, pair_dim());
  const std::size_t half = cfg_.enc.total();
  for (std::size_t s = 0; s < k; ++s) {
    Tensor2 ce = em_emit_.forward(params, slot_batch(queries, s, true, cfg_.obs, pad),
                                  &c.em_emit[s]);
    Tensor2 cr = em_recv_.forward(params, slot_batch(queries, s, false, cfg_.obs, pad),
                                  &c.em_recv[s]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < half; ++j) {
        pooled(i, j) += ce(i, j) / static_cast<double>(k);
        pooled(i, half + j) += cr(i, j) / static_cast<double>(k);
      }
    }
  }
  return dense_forward(params, proj_, pooled, &c.proj);
}

Tensor2 RirPredictor::latent(const ParamStore& params, std::span<const PredictQuery> queries,
                             Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.n = queries.size();
  for (const PredictQuery& q : queries) {
    if (q.memory.size() > cfg_.kappa) throw ConfigError("memory holds more than kappa pairs");
  }
  Tensor2 fe = er_emit_.forward(params, current_batch(queries, true, cfg_.obs), &c.er_emit);
  Tensor2 fr = er_recv_.forward(params, current_batch(queries, false, cfg_.obs), &c.er_recv);
  Tensor2 fm = memory_code(params, queries, c);
  const Tensor2* parts[] = {&fe, &fr, &fm};
  return concat_cols(parts);
}

Tensor2 RirPredictor::forward(const ParamStore& params, std::span<const PredictQuery> queries,
                              Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  Tensor2 z = latent(params, queries, &c);
  Tensor2 h = dense_forward(params, hidden_, z, &c.hidden);
  c.u = dense_forward(params, out_, h, &c.out);
  Tensor2 pred = c.u;
  for (double& v : pred.values()) v = 2.0 * v - 1.0;
  return pred;
}

void RirPredictor::backward(ParamStore& params, const Cache& cache, const Tensor2& dpred) const {
  Tensor2 du = dpred;
  for (double& v : du.values()) v *= 2.0;
  Tensor2 dh = dense_backward(params, out_, cache.out, du);
  Tensor2 dz = dense_backward(params, hidden_, cache.hidden, dh);
  const std::size_t half = cfg_.enc.total();
  er_emit_.backward(params, cache.er_emit, slice_cols(dz, 0, half));
  er_recv_.backward(params, cache.er_recv, slice_cols(dz, half, half));
  const std::size_t k = cfg_.kappa;
  if (k == 0) return;
  Tensor2 dpool = dense_backward(params, proj_, cache.proj, slice_cols(dz, 2 * half, cfg_.memory_dim));
  for (double& v : dpool.values()) v /= static_cast<double>(k);
  Tensor2 de = slice_cols(dpool, 0, half), dr = slice_cols(dpool, half, half);
  for (std::size_t s = 0; s < k; ++s) {
    em_emit_.backward(params, cache.em_emit[s], de);
    em_recv_.backward(params, cache.em_recv[s], dr);
  }
}

RirLoss rir_loss(std::span<const double> truth, std::span<const double> pred, double w_mse,
                 const StftConfig& stft, std::vector<double>* grad, bool want_delta) {
  if (truth.size() != pred.size() || truth.empty() || truth.size() % 2 != 0) {
    throw ConfigError("rir_loss expects two channels of equal length");
  }
  if (!(w_mse >= 0.0 && w_mse <= 1.0)) throw ConfigError("w^mse must lie in [0, 1]");
  const std::size_t n = truth.size();
  RirLoss r;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) sq += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  r.mse = sq / static_cast<double>(n);
  const double w_stft = (1.0 - w_mse) * kStftLossScale;
  if (grad) {
    grad->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      (*grad)[i] = w_mse * kMseLossScale * 2.0 * (pred[i] - truth[i]) / static_cast<double>(n);
    }
  }
  if (w_stft > 0.0) {
    if (grad) {
      std::vector<double> g;
      r.delta = stft_distance_grad(truth, pred, g, stft, 2);
      for (std::size_t i = 0; i < n; ++i) (*grad)[i] += w_stft * g[i];
    } else {
      r.delta = stft_distance(truth, pred, stft, 2);
    }
    r.has_delta = true;
  } else if (want_delta) {
    r.delta = stft_distance(truth, pred, stft, 2);
    r.has_delta = true;
  }
  r.loss = w_mse * kMseLossScale * r.mse + (r.has_delta ? w_stft * r.delta : 0.0);
  return r;
}

}  // namespace duet
