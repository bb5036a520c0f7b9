#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "duet/config.hpp"
#include "duet/trace.hpp"

namespace duet {

/// Trajectory overlay: one circle per scene node (visited ones shaded) and
/// one polyline per agent.
void write_trajectory_svg(std::ostream& out, const NavScene& scene, const Trace& trace);
/// t, reward components, shares and PE per step.
void write_reward_csv(std::ostream& out, const Trace& trace);
/// Ground-truth binaural RIR at the trace's final step: sample,left,right.
void write_waveform_csv(std::ostream& out, std::span<const double> rir, std::size_t length);
/// Magnitude spectrogram of one channel: frame,bin,magnitude.
void write_spectrogram_csv(std::ostream& out, std::span<const double> channel,
                           const StftConfig& stft);

/// Per trace: <stem>_trajectory.svg, <stem>_rewards.csv, <stem>_waveform.csv,
/// <stem>_spectrogram.csv. With metrics CSVs also summary.csv. Paths may
/// name trace files or directories of them. An empty input writes nothing
/// and prints a warning. Returns the files written.
std::vector<std::filesystem::path> write_report(std::span<const std::filesystem::path> traces,
                                                std::span<const std::filesystem::path> metrics,
                                                const std::filesystem::path& out_dir,
                                                const RunConfig& cfg, std::ostream& warn);

}  // namespace duet
