#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "duet/errors.hpp"
#include "duet/gradcheck.hpp"
#include "duet/predictor.hpp"

namespace duet {
namespace {

Observation random_observation(const ObsConfig& cfg, std::mt19937_64& rng) {
  Observation o;
  o.vision.resize(cfg.vision_dim());
  for (double& v : o.vision) v = std::floor(3 * uniform01(rng)) - 1;
  for (double& v : o.azimuth) v = 2 * uniform01(rng) - 1;
  for (double& v : o.position) v = 4 * uniform01(rng);
  return o;
}

ObsPair random_pair(const ObsConfig& cfg, std::mt19937_64& rng) {
  return {random_observation(cfg, rng), random_observation(cfg, rng)};
}

PredictorConfig small_config(std::size_t kappa) {
  PredictorConfig c;
  c.obs.patch_radius = 1;
  c.enc = {4, 2, 2};
  c.memory_dim = 3;
  c.gen_hidden = 5;
  c.rir_length = 64;
  c.kappa = kappa;
  c.stft = {32, 8, 16, WindowKind::kHamming};
  return c;
}

TEST(MemoryBank, KeepsLastKappaPairs) {
  ObsConfig cfg;
  cfg.patch_radius = 1;
  std::mt19937_64 rng(1);
  MemoryBank bank(2);
  std::vector<ObsPair> pushed;
  for (int i = 0; i < 5; ++i) {
    pushed.push_back(random_pair(cfg, rng));
    bank.push(pushed.back());
  }
  ASSERT_EQ(bank.size(), 2u);
  EXPECT_EQ(bank.pairs()[0].emitter.position, pushed[3].emitter.position);
  EXPECT_EQ(bank.pairs()[1].receiver.vision, pushed[4].receiver.vision);
  MemoryBank s = bank.swapped();
  EXPECT_EQ(s.pairs()[1].emitter.vision, pushed[4].receiver.vision);
  MemoryBank none(0);
  none.push(pushed[0]);
  EXPECT_EQ(none.size(), 0u);
}

TEST(Predictor, OutputShapeAndRange) {
  PredictorConfig c = small_config(2);
  RirPredictor pred("pred", c);
  ParamStore p;
  std::mt19937_64 rng(2);
  pred.init(p, rng);
  for (auto& [_, b] : p.blocks()) {
    for (double& v : b.value.values()) v = 6 * uniform01(rng) - 3;
  }
  std::vector<PredictQuery> qs{{random_pair(c.obs, rng), {}},
                               {random_pair(c.obs, rng), {random_pair(c.obs, rng)}}};
  Tensor2 out = pred.forward(p, qs);
  ASSERT_EQ(out.rows(), 2u);
  ASSERT_EQ(out.cols(), 128u);
  for (double v : out.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Predictor, EmptyMemoryGivesZeroCodeWhenKappaIsZero) {
  PredictorConfig c = small_config(0);
  RirPredictor pred("pred", c);
  ParamStore p;
  std::mt19937_64 rng(3);
  pred.init(p, rng);
  std::vector<PredictQuery> qs{{random_pair(c.obs, rng), {}}};
  Tensor2 z = pred.latent(p, qs);
  ASSERT_EQ(z.cols(), pred.latent_dim());
  for (std::size_t j = pred.pair_dim(); j < z.cols(); ++j) EXPECT_EQ(z(0, j), 0.0);
  qs[0].memory.push_back(random_pair(c.obs, rng));
  EXPECT_THROW(pred.latent(p, qs), ConfigError);
}

TEST(Predictor, MemoryPoolingIgnoresOrderAndTreatsPadAsZeroObservation) {
  PredictorConfig c = small_config(2);
  RirPredictor pred("pred", c);
  ParamStore p;
  std::mt19937_64 rng(4);
  pred.init(p, rng);
  ObsPair cur = random_pair(c.obs, rng), a = random_pair(c.obs, rng),
          b = random_pair(c.obs, rng);
  ObsPair zero{zero_observation(c.obs), zero_observation(c.obs)};
  std::vector<PredictQuery> qs{{cur, {a, b}}, {cur, {b, a}}, {cur, {a}}, {cur, {a, zero}}};
  Tensor2 z = pred.latent(p, qs);
  for (std::size_t j = pred.pair_dim(); j < z.cols(); ++j) {
    EXPECT_NEAR(z(0, j), z(1, j), 1e-15);
    EXPECT_EQ(z(2, j), z(3, j));
  }
  // current pair code is untouched by memory
  for (std::size_t j = 0; j < pred.pair_dim(); ++j) EXPECT_EQ(z(0, j), z(2, j));
}

TEST(Predictor, SwapRolesExchangesSlots) {
  ObsConfig cfg;
  cfg.patch_radius = 1;
  std::mt19937_64 rng(5);
  PredictQuery q{random_pair(cfg, rng), {random_pair(cfg, rng)}};
  PredictQuery s = swap_roles(q);
  EXPECT_EQ(s.current.emitter.position, q.current.receiver.position);
  EXPECT_EQ(s.memory[0].receiver.vision, q.memory[0].emitter.vision);
  PredictQuery back = swap_roles(s);
  EXPECT_EQ(back.current.emitter.position, q.current.emitter.position);
}

TEST(RirLoss, Weights) {
  StftConfig st{32, 8, 16, WindowKind::kHamming};
  std::mt19937_64 rng(6);
  std::vector<double> t(128), y(128);
  for (double& v : t) v = uniform01(rng) - 0.5;
  for (double& v : y) v = uniform01(rng) - 0.5;
  RirLoss same = rir_loss(t, t, 0.4, st);
  EXPECT_EQ(same.loss, 0.0);
  RirLoss mse_only = rir_loss(t, y, 1.0, st);
  EXPECT_FALSE(mse_only.has_delta);
  double sq = 0;
  for (std::size_t i = 0; i < 128; ++i) sq += (t[i] - y[i]) * (t[i] - y[i]);
  EXPECT_NEAR(mse_only.loss, 4464.2 * sq / 128, 1e-9);
  RirLoss stft_only = rir_loss(t, y, 0.0, st);
  EXPECT_NEAR(stft_only.loss, 10.0 * stft_distance(t, y, st, 2), 1e-12);
  RirLoss mix = rir_loss(t, y, 0.3, st, nullptr, true);
  EXPECT_NEAR(mix.loss, 0.7 * stft_only.loss + 0.3 * mse_only.loss, 1e-9);
  EXPECT_THROW(rir_loss(t, y, 1.5, st), ConfigError);
}

TEST(RirLoss, GradientThroughWholePredictor) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PredictorConfig c = small_config(2);
    RirPredictor pred("pred", c);
    ParamStore p;
    std::mt19937_64 rng(seed);
    pred.init(p, rng);
    // off the ReLU kink that zero biases put padded slots on
    for (auto& [_, b] : p.blocks()) {
      for (double& v : b.value.values()) v = uniform01(rng) - 0.5;
    }
    std::vector<PredictQuery> qs{{random_pair(c.obs, rng), {random_pair(c.obs, rng)}},
                                 {random_pair(c.obs, rng), {}}};
    std::vector<std::vector<double>> truth(2, std::vector<double>(128));
    for (auto& t : truth) {
      for (double& v : t) v = 1.8 * uniform01(rng) - 0.9;
    }
    const double w = 0.5;
    auto loss = [&](ParamStore& ps) {
      RirPredictor::Cache cache;
      Tensor2 out = pred.forward(ps, qs, &cache);
      Tensor2 d(out.rows(), out.cols());
      double f = 0;
      for (std::size_t i = 0; i < out.rows(); ++i) {
        std::vector<double> g;
        f += rir_loss(truth[i], out.row_span(i), w, c.stft, &g).loss;
        std::copy(g.begin(), g.end(), d.row_span(i).begin());
      }
      pred.backward(ps, cache, d);
      return f;
    };
    GradCheckOptions o;
    o.seed = seed;
    o.max_entries_per_block = 40;
    // loss is O(1e3) from the MSE scale; floor the denominator accordingly
    o.denominator_floor = 1e-3;
    auto r = finite_diff_check(loss, p, o);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " block " << r.worst_block
                                     << " a " << r.worst_analytic << " n " << r.worst_numeric;
  }
}

}  // namespace
}  // namespace duet
