#pragma once

#include <random>
#include <span>
#include <string>
#include <utility>

#include "duet/params.hpp"
#include "duet/tensor.hpp"

namespace duet {

enum class Activation { kNone, kRelu, kLeakyRelu, kTanh, kSigmoid };

/// Negative-side slope of kLeakyRelu.
inline constexpr double kLeakySlope = 0.2;

/// Fully connected layer y = act(x W + b). Parameters live in the store as
/// `<name>.W` (in x out) and `<name>.b` (1 x out).
struct DenseSpec {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::kNone;
};

struct DenseCache {
  Tensor2 x;
  Tensor2 y;
};

/// Adds the layer's blocks with uniform Glorot weights scaled by `gain` and
/// zero bias.
void init_dense(ParamStore& params, const DenseSpec& spec, std::mt19937_64& rng,
                double gain = 1.0);

Tensor2 dense_forward(const ParamStore& params, const DenseSpec& spec,
                      const Tensor2& x, DenseCache* cache = nullptr);

/// Accumulates parameter gradients and returns dL/dx.
Tensor2 dense_backward(ParamStore& params, const DenseSpec& spec,
                       const DenseCache& cache, const Tensor2& dy);

/// GRU cell with reset gate applied to the hidden projection:
///   z = sigmoid(x Wz + h Uz + bz)
///   r = sigmoid(x Wr + h Ur + br)
///   n = tanh(x Wn + bn + r * (h Un + bhn))
///   h' = (1 - z) * n + z * h
struct GruSpec {
  std::string name;
  std::size_t in = 0;
  std::size_t hidden = 0;
};

struct GruCache {
  Tensor2 x;
  Tensor2 h_prev;
  Tensor2 z;
  Tensor2 r;
  Tensor2 n;
  Tensor2 hn;  // h Un + bhn
};

void init_gru(ParamStore& params, const GruSpec& spec, std::mt19937_64& rng);

Tensor2 gru_forward(const ParamStore& params, const GruSpec& spec,
                    const Tensor2& x, const Tensor2& h_prev,
                    GruCache* cache = nullptr);

/// Returns (dL/dx, dL/dh_prev) and accumulates parameter gradients.
std::pair<Tensor2, Tensor2> gru_backward(ParamStore& params, const GruSpec& spec,
                                         const GruCache& cache,
                                         const Tensor2& dh);

/// Row-wise softmax.
Tensor2 softmax_rows(const Tensor2& logits);

/// Gradient of L wrt logits given dL/dp for p = softmax(logits), row-wise.
Tensor2 softmax_backward(const Tensor2& probs, const Tensor2& dprobs);

/// Shannon entropy (nats) of a probability vector.
double entropy(std::span<const double> probs);

/// Samples an index from a categorical distribution.
std::size_t sample_categorical(std::span<const double> probs,
                               std::mt19937_64& rng);

/// Uniform double in [0, 1) from 53 random bits.
double uniform01(std::mt19937_64& rng);

}  // namespace duet
