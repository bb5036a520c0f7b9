#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "duet/errors.hpp"
#include "duet/spectral.hpp"

namespace duet {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

void check_same_shape(const Spectrogram& a, const Spectrogram& b) {
  if (a.frames != b.frames || a.bins != b.bins || a.mag.size() != b.mag.size()) {
    throw DomainError("spectrogram shapes differ");
  }
}

}  // namespace

WindowKind parse_window_kind(const std::string& name) {
  if (name == "hamming") return WindowKind::kHamming;
  if (name == "hann") return WindowKind::kHann;
  if (name == "rect" || name == "rectangular") return WindowKind::kRectangular;
  throw ConfigError("unknown window kind '" + name + "'");
}

const char* window_kind_name(WindowKind kind) {
  switch (kind) {
    case WindowKind::kHamming: return "hamming";
    case WindowKind::kHann: return "hann";
    case WindowKind::kRectangular: return "rect";
  }
  return "?";
}

void StftConfig::validate() const {
  if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("fft size must be even and >= 2");
  if (shift == 0) throw ConfigError("stft shift must be positive");
  if (window_length == 0 || window_length > fft_size) {
    throw ConfigError("window length must be in [1, fft size]");
  }
}

std::size_t StftConfig::frames(std::size_t length) const {
  if (length < window_length) {
    throw DomainError("wave of " + std::to_string(length) +
                      " samples is shorter than the STFT window");
  }
  return (length - window_length) / shift + 1;
}

std::vector<double> make_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.window_length, 1.0);
  const double n = static_cast<double>(cfg.window_length);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    switch (cfg.window) {
      case WindowKind::kHamming: w[i] = 0.54 - 0.46 * c; break;
      case WindowKind::kHann: w[i] = 0.5 - 0.5 * c; break;
      case WindowKind::kRectangular: break;
    }
  }
  return w;
}

struct StftEngine::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  double* back = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  explicit Impl(std::size_t n) {
    const int len = static_cast<int>(n);
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
    back = fftw_alloc_real(n);
    // Estimate-only planning keeps the chosen algorithm, and hence the
    // rounding, identical from run to run.
    forward = fftw_plan_dft_r2c_1d(len, real, spec, FFTW_ESTIMATE);
    inverse = fftw_plan_dft_c2r_1d(len, spec, back, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
    fftw_free(real);
    fftw_free(spec);
    fftw_free(back);
  }
};

StftEngine::StftEngine(const StftConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  window_ = make_window(cfg_);
  impl_ = std::make_unique<Impl>(cfg_.fft_size);
}

StftEngine::~StftEngine() = default;

Spectrogram StftEngine::magnitude(std::span<const double> wave) {
  Spectrogram s;
  s.frames = cfg_.frames(wave.size());
  s.bins = cfg_.bins();
  s.mag.resize(s.frames * s.bins);
  const std::size_t n = cfg_.fft_size;
  for (std::size_t f = 0; f < s.frames; ++f) {
    const std::size_t start = f * cfg_.shift;
    for (std::size_t i = 0; i < n; ++i) {
      impl_->real[i] = i < window_.size() ? wave[start + i] * window_[i] : 0.0;
    }
    fftw_execute(impl_->forward);
    for (std::size_t b = 0; b < s.bins; ++b) {
      s(f, b) = std::hypot(impl_->spec[b][0], impl_->spec[b][1]);
    }
  }
  return s;
}

std::vector<double> StftEngine::magnitude_backward(std::span<const double> wave,
                                                   const Spectrogram& dmag) {
  const std::size_t frames = cfg_.frames(wave.size());
  const std::size_t bins = cfg_.bins();
  if (dmag.frames != frames || dmag.bins != bins) {
    throw DomainError("gradient spectrogram shape does not match the wave");
  }
  std::vector<double> grad(wave.size(), 0.0);
  const std::size_t n = cfg_.fft_size;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * cfg_.shift;
    for (std::size_t i = 0; i < n; ++i) {
      impl_->real[i] = i < window_.size() ? wave[start + i] * window_[i] : 0.0;
    }
    fftw_execute(impl_->forward);
    // dL/dRe + i dL/dIm = g * X / |X|; the inverse real transform then sums
    // Re(G_k e^{+i2pi kn/N}) over the half spectrum once the interior bins
    // are halved to undo its Hermitian doubling.
    for (std::size_t b = 0; b < bins; ++b) {
      const double re = impl_->spec[b][0];
      const double im = impl_->spec[b][1];
      const double m = std::hypot(re, im);
      double scale = m > 0.0 ? dmag(f, b) / m : 0.0;
      if (b != 0 && b != bins - 1) scale *= 0.5;
      impl_->spec[b][0] = re * scale;
      impl_->spec[b][1] = im * scale;
    }
    fftw_execute(impl_->inverse);
    for (std::size_t i = 0; i < window_.size(); ++i) {
      grad[start + i] += impl_->back[i] * window_[i];
    }
  }
  return grad;
}

namespace {

StftEngine& engine_for(const StftConfig& cfg) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, std::size_t, int>,
                        std::unique_ptr<StftEngine>>
      engines;
  const auto key = std::make_tuple(cfg.fft_size, cfg.shift, cfg.window_length,
                                   static_cast<int>(cfg.window));
  auto& engine = engines[key];
  if (!engine) engine = std::make_unique<StftEngine>(cfg);
  return *engine;
}

}  // namespace

Spectrogram stft_magnitude(std::span<const double> wave, const StftConfig& cfg) {
  return engine_for(cfg).magnitude(wave);
}

double spectral_convergence(const Spectrogram& z, const Spectrogram& zhat) {
  check_same_shape(z, zhat);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < z.mag.size(); ++i) {
    const double d = z.mag[i] - zhat.mag[i];
    num += d * d;
    den += z.mag[i] * z.mag[i];
  }
  if (den == 0.0) throw DomainError("spectral convergence of an all-zero reference");
  return std::sqrt(num) / std::sqrt(den);
}

double log_stft_magnitude(const Spectrogram& z, const Spectrogram& zhat) {
  check_same_shape(z, zhat);
  if (z.mag.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < z.mag.size(); ++i) {
    acc += std::abs(std::log((z.mag[i] + kLogFloor) / (zhat.mag[i] + kLogFloor)));
  }
  return acc / static_cast<double>(z.mag.size());
}

Spectrogram spectral_convergence_grad(const Spectrogram& z, const Spectrogram& zhat) {
  check_same_shape(z, zhat);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < z.mag.size(); ++i) {
    const double d = z.mag[i] - zhat.mag[i];
    num += d * d;
    den += z.mag[i] * z.mag[i];
  }
  if (den == 0.0) throw DomainError("spectral convergence of an all-zero reference");
  Spectrogram g{z.frames, z.bins, std::vector<double>(z.mag.size(), 0.0)};
  if (num == 0.0) return g;
  const double k = 1.0 / (std::sqrt(num) * std::sqrt(den));
  for (std::size_t i = 0; i < z.mag.size(); ++i) g.mag[i] = (zhat.mag[i] - z.mag[i]) * k;
  return g;
}

Spectrogram log_stft_magnitude_grad(const Spectrogram& z, const Spectrogram& zhat) {
  check_same_shape(z, zhat);
  Spectrogram g{z.frames, z.bins, std::vector<double>(z.mag.size(), 0.0)};
  if (z.mag.empty()) return g;
  const double inv_n = 1.0 / static_cast<double>(z.mag.size());
  for (std::size_t i = 0; i < z.mag.size(); ++i) {
    const double a = z.mag[i] + kLogFloor;
    const double b = zhat.mag[i] + kLogFloor;
    const double r = std::log(a / b);
    const double sgn = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    g.mag[i] = -sgn * inv_n / b;
  }
  return g;
}

namespace {

std::size_t channel_length(std::span<const double> truth, std::span<const double> pred,
                           std::size_t channels) {
  if (channels == 0 || truth.size() != pred.size() || truth.size() % channels != 0) {
    throw DomainError("stft distance needs equal-length waves with whole channels");
  }
  return truth.size() / channels;
}


}  // namespace

double stft_distance(std::span<const double> truth, std::span<const double> pred,
                     const StftConfig& cfg, std::size_t channels) {
  const std::size_t len = channel_length(truth, pred, channels);
  StftEngine& engine = engine_for(cfg);
  double total = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const Spectrogram z = engine.magnitude(truth.subspan(c * len, len));
    const Spectrogram zh = engine.magnitude(pred.subspan(c * len, len));
    total += 0.5 * spectral_convergence(z, zh) + 0.5 * log_stft_magnitude(z, zh);
  }
  return total / static_cast<double>(channels);
}

double stft_distance_grad(std::span<const double> truth, std::span<const double> pred,
                          std::vector<double>& grad, const StftConfig& cfg,
                          std::size_t channels) {
  const std::size_t len = channel_length(truth, pred, channels);
  StftEngine& engine = engine_for(cfg);
  grad.assign(pred.size(), 0.0);
  double total = 0.0;
  const double w = 0.5 / static_cast<double>(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto p = pred.subspan(c * len, len);
    const Spectrogram z = engine.magnitude(truth.subspan(c * len, len));
    const Spectrogram zh = engine.magnitude(p);
    total += 0.5 * spectral_convergence(z, zh) + 0.5 * log_stft_magnitude(z, zh);
    Spectrogram dz = spectral_convergence_grad(z, zh);
    const Spectrogram dl = log_stft_magnitude_grad(z, zh);
    for (std::size_t i = 0; i < dz.mag.size(); ++i) dz.mag[i] = w * (dz.mag[i] + dl.mag[i]);
    const auto dw = engine.magnitude_backward(p, dz);
    for (std::size_t i = 0; i < len; ++i) grad[c * len + i] = dw[i];
  }
  return total / static_cast<double>(channels);
}

}  // namespace duet
