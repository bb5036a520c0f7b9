#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "duet/errors.hpp"
#include "duet/gradcheck.hpp"
#include "duet/spectral.hpp"

namespace duet {
namespace {

std::vector<double> random_wave(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> w(n);
  for (double& v : w) v = g(rng);
  return w;
}

// Direct O(N^2) DFT of each windowed, zero-padded frame.
Spectrogram naive_stft(const std::vector<double>& x, const StftConfig& cfg) {
  const auto win = make_window(cfg);
  Spectrogram s;
  s.frames = (x.size() - cfg.window_length) / cfg.shift + 1;
  s.bins = cfg.fft_size / 2 + 1;
  s.mag.resize(s.frames * s.bins);
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t k = 0; k < s.bins; ++k) {
      std::complex<double> acc = 0;
      for (std::size_t n = 0; n < cfg.window_length; ++n) {
        const double ang = -2.0 * std::numbers::pi * double(k * n) / double(cfg.fft_size);
        acc += x[f * cfg.shift + n] * win[n] * std::polar(1.0, ang);
      }
      s(f, k) = std::abs(acc);
    }
  }
  return s;
}

TEST(Stft, FrameAndBinCounts) {
  StftConfig cfg;
  EXPECT_EQ(cfg.frames(16000), 129u);
  EXPECT_EQ(cfg.frames(2000), 12u);
  EXPECT_EQ(cfg.bins(), 513u);
  EXPECT_THROW(cfg.frames(599), DomainError);
  std::vector<double> short_wave(500, 0.0);
  EXPECT_THROW(stft_magnitude(short_wave), DomainError);
}

TEST(Stft, HammingWindowIsPeriodic) {
  StftConfig cfg;
  auto w = make_window(cfg);
  ASSERT_EQ(w.size(), 600u);
  EXPECT_NEAR(w[0], 0.08, 1e-15);
  EXPECT_NEAR(w[300], 1.0, 1e-15);
  EXPECT_NEAR(w[150], w[450], 1e-12);
  EXPECT_THROW(parse_window_kind("blackman"), ConfigError);
}

TEST(Stft, ZeroWaveGivesZeroSpectrogram) {
  std::vector<double> z(2000, 0.0);
  Spectrogram s = stft_magnitude(z);
  for (double v : s.mag) EXPECT_EQ(v, 0.0);
}

TEST(Stft, MatchesNaiveDft) {
  std::mt19937_64 rng(41);
  StftConfig cfg;
  auto x = random_wave(1000, rng);
  Spectrogram fast = stft_magnitude(x, cfg);
  Spectrogram slow = naive_stft(x, cfg);
  ASSERT_EQ(fast.mag.size(), slow.mag.size());
  for (std::size_t i = 0; i < fast.mag.size(); ++i) {
    EXPECT_NEAR(fast.mag[i], slow.mag[i], 1e-9 * (1.0 + slow.mag[i]));
  }
}

TEST(Stft, BinAlignedSineConcentrates) {
  StftConfig cfg;
  const int k0 = 64;
  std::vector<double> x(2000);
  for (std::size_t n = 0; n < x.size(); ++n) {
    x[n] = std::sin(2.0 * std::numbers::pi * k0 * double(n) / double(cfg.fft_size));
  }
  Spectrogram s = stft_magnitude(x, cfg);
  for (std::size_t f = 0; f < s.frames; ++f) {
    double total = 0, near = 0;
    for (std::size_t b = 0; b < s.bins; ++b) {
      const double e = s(f, b) * s(f, b);
      total += e;
      if (std::abs(int(b) - k0) <= 1) near += e;
    }
    EXPECT_GE(near / total, 0.8);
  }
}

TEST(Stft, ParsevalPerFrame) {
  std::mt19937_64 rng(42);
  StftConfig cfg;
  auto x = random_wave(1500, rng);
  auto win = make_window(cfg);
  Spectrogram s = stft_magnitude(x, cfg);
  const std::size_t n = cfg.fft_size;
  for (std::size_t f = 0; f < s.frames; ++f) {
    double spec = s(f, 0) * s(f, 0) + s(f, n / 2) * s(f, n / 2);
    for (std::size_t b = 1; b < n / 2; ++b) spec += 2 * s(f, b) * s(f, b);
    double time = 0;
    for (std::size_t i = 0; i < cfg.window_length; ++i) {
      const double v = x[f * cfg.shift + i] * win[i];
      time += v * v;
    }
    EXPECT_NEAR(spec / (n * time), 1.0, 1e-6);
  }
}

TEST(Stft, PositivelyHomogeneous) {
  std::mt19937_64 rng(43);
  auto x = random_wave(800, rng);
  auto y = x;
  for (double& v : y) v *= 3.5;
  Spectrogram a = stft_magnitude(x), b = stft_magnitude(y);
  for (std::size_t i = 0; i < a.mag.size(); ++i) EXPECT_NEAR(b.mag[i], 3.5 * a.mag[i], 1e-9);
}

Spectrogram random_spec(std::mt19937_64& rng, std::size_t frames = 7, std::size_t bins = 9) {
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Spectrogram s{frames, bins, std::vector<double>(frames * bins)};
  for (double& v : s.mag) v = u(rng);
  return s;
}

TEST(Losses, ConvergenceScaling) {
  std::mt19937_64 rng(44);
  Spectrogram z = random_spec(rng);
  EXPECT_EQ(spectral_convergence(z, z), 0.0);
  for (double a : {0.25, 0.5, 0.75, 1.5}) {
    Spectrogram zh = z;
    for (double& v : zh.mag) v *= a;
    EXPECT_NEAR(spectral_convergence(z, zh), std::abs(1 - a), 1e-9);
  }
  Spectrogram zero{z.frames, z.bins, std::vector<double>(z.mag.size(), 0.0)};
  EXPECT_THROW(spectral_convergence(zero, z), DomainError);
}

TEST(Losses, LogMagnitudeOfEScaling) {
  std::mt19937_64 rng(45);
  Spectrogram z = random_spec(rng);
  for (double& v : z.mag) v += 0.5;
  Spectrogram zh = z;
  for (double& v : zh.mag) v *= std::numbers::e;
  EXPECT_NEAR(log_stft_magnitude(z, zh), 1.0, 1e-3);
  EXPECT_EQ(log_stft_magnitude(z, z), 0.0);
}

TEST(Losses, MatchDoubleLoopOracle) {
  std::mt19937_64 rng(46);
  for (int t = 0; t < 20; ++t) {
    Spectrogram z = random_spec(rng), zh = random_spec(rng);
    double num = 0, den = 0, xi = 0;
    for (std::size_t f = 0; f < z.frames; ++f) {
      for (std::size_t b = 0; b < z.bins; ++b) {
        num += std::pow(z(f, b) - zh(f, b), 2);
        den += std::pow(z(f, b), 2);
        xi += std::abs(std::log(z(f, b) + 1e-7) - std::log(zh(f, b) + 1e-7));
      }
    }
    EXPECT_NEAR(spectral_convergence(z, zh), std::sqrt(num / den), 1e-12);
    EXPECT_NEAR(log_stft_magnitude(z, zh), xi / double(z.mag.size()), 1e-12);
  }
}

TEST(Distance, IdentityHalfScaleAndRecomposition) {
  std::mt19937_64 rng(47);
  auto w = random_wave(4000, rng, 0.3);
  EXPECT_EQ(stft_distance(w, w), 0.0);
  auto half = w;
  for (double& v : half) v *= 0.5;
  double theta = 0, xi = 0;
  for (int c = 0; c < 2; ++c) {
    std::span<const double> a(w.data() + 2000 * c, 2000), b(half.data() + 2000 * c, 2000);
    Spectrogram z = stft_magnitude(a), zh = stft_magnitude(b);
    theta += spectral_convergence(z, zh) / 2;
    xi += log_stft_magnitude(z, zh) / 2;
  }
  EXPECT_NEAR(0.5 * theta, 0.25, 1e-12);
  EXPECT_NEAR(0.5 * xi, 0.5 * std::log(2.0), 1e-3);
  EXPECT_NEAR(stft_distance(w, half), 0.5 * theta + 0.5 * xi, 1e-12);
  auto other = random_wave(4000, rng, 0.3);
  EXPECT_GT(stft_distance(w, other), 0.0);
  EXPECT_EQ(stft_distance(w, other), stft_distance(w, other));
}

TEST(Distance, GradientMatchesFiniteDifferencesSmallConfig) {
  StftConfig cfg{16, 4, 12, WindowKind::kHamming};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto truth = random_wave(128, rng);
    ParamStore p;
    p.add("pred", 1, 128) = Tensor2::row(random_wave(128, rng));
    auto loss = [&](ParamStore& ps) {
      std::vector<double> g;
      const double d = stft_distance_grad(truth, ps.value("pred").values(), g, cfg);
      for (std::size_t i = 0; i < g.size(); ++i) ps.grad("pred")[i] += g[i];
      return d;
    };
    GradCheckOptions o;
    o.seed = seed;
    auto r = finite_diff_check(loss, p, o);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " idx " << r.worst_index;
  }
}

TEST(Distance, GradientMatchesFiniteDifferencesPaperConfig) {
  std::mt19937_64 rng(48);
  auto truth = random_wave(1400, rng);
  ParamStore p;
  p.add("pred", 1, 1400) = Tensor2::row(random_wave(1400, rng));
  auto loss = [&](ParamStore& ps) {
    std::vector<double> g;
    const double d = stft_distance_grad(truth, ps.value("pred").values(), g);
    for (std::size_t i = 0; i < g.size(); ++i) ps.grad("pred")[i] += g[i];
    return d;
  };
  GradCheckOptions o;
  o.max_entries_per_block = 60;
  auto r = finite_diff_check(loss, p, o);
  EXPECT_LT(r.max_rel_error, 1e-4);
  std::vector<double> g;
  EXPECT_NEAR(stft_distance_grad(truth, p.value("pred").values(), g),
              stft_distance(truth, p.value("pred").values()), 1e-15);
}

}  // namespace
}  // namespace duet
