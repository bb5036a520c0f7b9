#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace duet {

enum class WindowKind { kHamming, kHann, kRectangular };

WindowKind parse_window_kind(const std::string& name);
const char* window_kind_name(WindowKind kind);

struct StftConfig {
  std::size_t fft_size = 1024;
  std::size_t shift = 120;
  std::size_t window_length = 600;
  WindowKind window = WindowKind::kHamming;

  void validate() const;
  std::size_t bins() const { return fft_size / 2 + 1; }
  /// floor((L - window_length) / shift) + 1; DomainError when L < window_length.
  std::size_t frames(std::size_t length) const;
  bool operator==(const StftConfig&) const = default;
};

/// Periodic window of the configured length.
std::vector<double> make_window(const StftConfig& cfg);

struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> mag;  // row-major frames x bins

  double operator()(std::size_t f, std::size_t b) const { return mag[f * bins + b]; }
  double& operator()(std::size_t f, std::size_t b) { return mag[f * bins + b]; }
};

inline constexpr double kLogFloor = 1e-7;

/// Owns FFT plans and work buffers for one configuration. Not shareable
/// between threads; make one per worker.
class StftEngine {
 public:
  explicit StftEngine(const StftConfig& cfg);
  ~StftEngine();
  StftEngine(const StftEngine&) = delete;
  StftEngine& operator=(const StftEngine&) = delete;

  const StftConfig& config() const { return cfg_; }
  Spectrogram magnitude(std::span<const double> wave);
  /// Given dL/d|X| for every frame and bin, returns dL/dwave.
  std::vector<double> magnitude_backward(std::span<const double> wave,
                                         const Spectrogram& dmag);

 private:
  struct Impl;
  StftConfig cfg_;
  std::vector<double> window_;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper using a per-thread engine for the configuration.
Spectrogram stft_magnitude(std::span<const double> wave, const StftConfig& cfg = {});

/// ||z - zhat||_F / ||z||_F. DomainError when ||z||_F = 0 or shapes differ.
double spectral_convergence(const Spectrogram& z, const Spectrogram& zhat);
/// Mean over entries of |ln((z + eps) / (zhat + eps))|.
double log_stft_magnitude(const Spectrogram& z, const Spectrogram& zhat);

/// Gradients of the two terms with respect to zhat.
Spectrogram spectral_convergence_grad(const Spectrogram& z, const Spectrogram& zhat);
Spectrogram log_stft_magnitude_grad(const Spectrogram& z, const Spectrogram& zhat);

/// 0.5 * Theta + 0.5 * Xi averaged over channels. Both waves hold `channels`
/// equal-length channels back to back.
double stft_distance(std::span<const double> truth, std::span<const double> pred,
                     const StftConfig& cfg = {}, std::size_t channels = 2);

/// Same value as stft_distance; also writes d(distance)/d(pred) into `grad`.
double stft_distance_grad(std::span<const double> truth, std::span<const double> pred,
                          std::vector<double>& grad, const StftConfig& cfg = {},
                          std::size_t channels = 2);

}  // namespace duet
