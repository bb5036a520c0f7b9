#include "duet/layers.hpp"

#include <cmath>

#include "duet/errors.hpp"

namespace duet {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_glorot(Tensor2& w, std::mt19937_64& rng, double gain) {
  const double limit = gain * std::sqrt(6.0 / double(w.rows() + w.cols()));
  for (double& v : w.values()) v = (2.0 * uniform01(rng) - 1.0) * limit;
}

void apply_activation(Activation act, Tensor2& y) {
  switch (act) {
    case Activation::kNone:
      return;
    case Activation::kRelu:
      for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::kLeakyRelu:
      for (double& v : y.values()) v = v > 0.0 ? v : kLeakySlope * v;
      return;
    case Activation::kTanh:
      for (double& v : y.values()) v = std::tanh(v);
      return;
    case Activation::kSigmoid:
      for (double& v : y.values()) v = sigmoid(v);
      return;
  }
}

// Derivative of the activation expressed through its output.
double activation_slope(Activation act, double y) {
  switch (act) {
    case Activation::kNone:
      return 1.0;
    case Activation::kRelu:
      return y > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu:
      return y > 0.0 ? 1.0 : kLeakySlope;
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kSigmoid:
      return y * (1.0 - y);
  }
  return 1.0;
}

void check_cols(const Tensor2& x, std::size_t expected, const std::string& who) {
  if (x.cols() != expected) {
    throw ConfigError(who + ": expected " + std::to_string(expected) +
                      " input columns, got " + std::to_string(x.cols()));
  }
}

// y = x W + b for every row of x.
Tensor2 affine(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
  Tensor2 y(x.rows(), w.cols());
  y.map().noalias() = x.map() * w.map();
  y.map().rowwise() += b.map().row(0);
  return y;
}

}  // namespace

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

void init_dense(ParamStore& params, const DenseSpec& spec, std::mt19937_64& rng,
                double gain) {
  Tensor2& w = params.add(spec.name + ".W", spec.in, spec.out);
  params.add(spec.name + ".b", 1, spec.out);
  fill_glorot(w, rng, gain);
}

Tensor2 dense_forward(const ParamStore& params, const DenseSpec& spec,
                      const Tensor2& x, DenseCache* cache) {
  check_cols(x, spec.in, spec.name);
  Tensor2 y = affine(x, params.value(spec.name + ".W"), params.value(spec.name + ".b"));
  apply_activation(spec.activation, y);
  if (cache != nullptr) {
    cache->x = x;
    cache->y = y;
  }
  return y;
}

Tensor2 dense_backward(ParamStore& params, const DenseSpec& spec,
                       const DenseCache& cache, const Tensor2& dy) {
  if (!dy.same_shape(cache.y)) throw ConfigError(spec.name + ": dy shape mismatch");
  Tensor2 dpre = dy;
  if (spec.activation != Activation::kNone) {
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      dpre[i] *= activation_slope(spec.activation, cache.y[i]);
    }
  }
  ParamBlock& w = params.block(spec.name + ".W");
  ParamBlock& b = params.block(spec.name + ".b");
  w.grad.map().noalias() += cache.x.map().transpose() * dpre.map();
  b.grad.map().row(0) += dpre.map().colwise().sum();
  Tensor2 dx(cache.x.rows(), spec.in);
  dx.map().noalias() = dpre.map() * w.value.map().transpose();
  return dx;
}

void init_gru(ParamStore& params, const GruSpec& spec, std::mt19937_64& rng) {
  for (const char* gate : {"z", "r", "n"}) {
    fill_glorot(params.add(spec.name + ".W" + gate, spec.in, spec.hidden), rng, 1.0);
    fill_glorot(params.add(spec.name + ".U" + gate, spec.hidden, spec.hidden), rng, 1.0);
    params.add(spec.name + ".b" + gate, 1, spec.hidden);
  }
  params.add(spec.name + ".bhn", 1, spec.hidden);
}

Tensor2 gru_forward(const ParamStore& params, const GruSpec& spec,
                    const Tensor2& x, const Tensor2& h_prev, GruCache* cache) {
  check_cols(x, spec.in, spec.name);
  check_cols(h_prev, spec.hidden, spec.name + " (hidden)");
  if (h_prev.rows() != x.rows()) throw ConfigError(spec.name + ": batch mismatch");
  const std::string& p = spec.name;

  Tensor2 z = affine(x, params.value(p + ".Wz"), params.value(p + ".bz"));
  z.map().noalias() += h_prev.map() * params.value(p + ".Uz").map();
  apply_activation(Activation::kSigmoid, z);

  Tensor2 r = affine(x, params.value(p + ".Wr"), params.value(p + ".br"));
  r.map().noalias() += h_prev.map() * params.value(p + ".Ur").map();
  apply_activation(Activation::kSigmoid, r);

  Tensor2 hn = affine(h_prev, params.value(p + ".Un"), params.value(p + ".bhn"));
  Tensor2 n = affine(x, params.value(p + ".Wn"), params.value(p + ".bn"));
  n.map().array() += r.map().array() * hn.map().array();
  apply_activation(Activation::kTanh, n);

  Tensor2 h(x.rows(), spec.hidden);
  h.map().array() = (1.0 - z.map().array()) * n.map().array() +
                    z.map().array() * h_prev.map().array();
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return h;
}

std::pair<Tensor2, Tensor2> gru_backward(ParamStore& params, const GruSpec& spec,
                                         const GruCache& c, const Tensor2& dh) {
  const std::string& p = spec.name;
  const ConstMatrixMap zm = c.z.map();
  const ConstMatrixMap rm = c.r.map();
  const ConstMatrixMap nm = c.n.map();
  const ConstMatrixMap hpm = c.h_prev.map();
  const ConstMatrixMap gm = dh.map();
  const auto z = zm.array();
  const auto r = rm.array();
  const auto n = nm.array();
  const auto hp = hpm.array();
  const auto g = gm.array();

  Tensor2 dn_pre(dh.rows(), spec.hidden);
  dn_pre.map().array() = g * (1.0 - z) * (1.0 - n * n);
  Tensor2 dz_pre(dh.rows(), spec.hidden);
  dz_pre.map().array() = g * (hp - n) * z * (1.0 - z);
  Tensor2 dr_pre(dh.rows(), spec.hidden);
  dr_pre.map().array() = dn_pre.map().array() * c.hn.map().array() * r * (1.0 - r);
  Tensor2 dhn(dh.rows(), spec.hidden);
  dhn.map().array() = dn_pre.map().array() * r;

  auto accumulate = [&](const std::string& gate, const Tensor2& dpre) {
    params.grad(p + ".W" + gate).map().noalias() += c.x.map().transpose() * dpre.map();
    params.grad(p + ".b" + gate).map().row(0) += dpre.map().colwise().sum();
  };
  accumulate("z", dz_pre);
  accumulate("r", dr_pre);
  accumulate("n", dn_pre);
  params.grad(p + ".Uz").map().noalias() += c.h_prev.map().transpose() * dz_pre.map();
  params.grad(p + ".Ur").map().noalias() += c.h_prev.map().transpose() * dr_pre.map();
  params.grad(p + ".Un").map().noalias() += c.h_prev.map().transpose() * dhn.map();
  params.grad(p + ".bhn").map().row(0) += dhn.map().colwise().sum();

  Tensor2 dx(dh.rows(), spec.in);
  dx.map().noalias() = dz_pre.map() * params.value(p + ".Wz").map().transpose();
  dx.map().noalias() += dr_pre.map() * params.value(p + ".Wr").map().transpose();
  dx.map().noalias() += dn_pre.map() * params.value(p + ".Wn").map().transpose();

  Tensor2 dh_prev(dh.rows(), spec.hidden);
  dh_prev.map().array() = g * z;
  dh_prev.map().noalias() += dz_pre.map() * params.value(p + ".Uz").map().transpose();
  dh_prev.map().noalias() += dr_pre.map() * params.value(p + ".Ur").map().transpose();
  dh_prev.map().noalias() += dhn.map() * params.value(p + ".Un").map().transpose();
  return {std::move(dx), std::move(dh_prev)};
}

Tensor2 softmax_rows(const Tensor2& logits) {
  Tensor2 out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row_span(r);
    auto o = out.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      o[i] = std::exp(in[i] - mx);
      sum += o[i];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

Tensor2 softmax_backward(const Tensor2& probs, const Tensor2& dprobs) {
  Tensor2 out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto p = probs.row_span(r);
    auto dp = dprobs.row_span(r);
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * dp[i];
    auto o = out.row_span(r);
    for (std::size_t i = 0; i < p.size(); ++i) o[i] = p[i] * (dp[i] - dot);
  }
  return out;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::size_t sample_categorical(std::span<const double> probs,
                               std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the final cumulative sum.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace duet
