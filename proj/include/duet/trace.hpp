#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "duet/env.hpp"

namespace duet {

struct TraceHeader {
  std::string model;
  SceneSpec scene;
  std::uint64_t seed = 0;
  int episode = 0;
  int max_steps = 0;
};

/// One episode: a header line followed by one line per step.
struct Trace {
  TraceHeader header;
  std::vector<StepRecord> steps;
};

void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);
void save_trace(const std::filesystem::path& path, const Trace& trace);
/// Throws FileError for a missing or malformed file.
Trace load_trace(const std::filesystem::path& path);

/// Recomputes zeta, psi, phi and the reward breakdown from the poses and
/// logged PE; true when every step matches the log exactly.
bool trace_replays(const Trace& trace, const RewardCoefs& coefs);

}  // namespace duet
