#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace duet {

/// Distinct nodes in `visited` over the scene's node count.
double coverage_rate(std::span<const int> visited, std::size_t node_count);

/// 2 / (1 + e^-PE) - 1.
double pes(double pe);
/// (1 - lambda) CR + lambda (1 - PES).
double wcr(double cr, double pe, double lambda = 0.1);

/// Schroeder backward integration, least-squares line over the [-5, -35] dB
/// span, RT60 = 60 / |slope|. Throws MetricError for a silent channel or a
/// decay that never reaches -35 dB.
double rt60(std::span<const double> channel, int sample_rate);

/// |RT60(W) - RT60(W^)| in milliseconds averaged over channels. Inputs hold
/// `channels` equal-length channels back to back.
double rte_ms(std::span<const double> truth, std::span<const double> pred, int sample_rate,
              std::size_t channels = 2);

inline constexpr double kSisdrCap = 120.0;

/// 10 log10(|W|^2 / |W^ - W|^2), capped at 120 dB. With `projection` the
/// target is the scaled projection of W^ onto W. Throws DomainError for an
/// all-zero W.
double sisdr(std::span<const double> truth, std::span<const double> pred,
             bool projection = false);

struct EpisodeMetrics {
  std::string scene_id;
  std::uint64_t seed = 0;
  int episode = 0;
  double cr = 0.0;
  double pe = 0.0;
  double pes = 0.0;
  double wcr = 0.0;
  double rte_ms = 0.0;
  double sisdr_db = 0.0;
  int rte_skipped = 0;  // steps whose RT60 could not be estimated
  int steps = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct MetricsSummary {
  std::size_t episodes = 0;
  std::size_t seeds = 0;
  MeanStd wcr, pe, cr, rte_ms, sisdr_db;
  long rte_skipped = 0;
};

/// Per-seed means first, then mean and sample standard deviation across
/// seeds.
MetricsSummary summarize(std::span<const EpisodeMetrics> rows);

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> rows);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in);
void write_metrics_json(std::ostream& out, const MetricsSummary& s, const std::string& label);

}  // namespace duet
