#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "duet/params.hpp"

namespace duet {

/// Evaluates a scalar loss at the store's current values and accumulates
/// its analytic gradient into the store's gradient blocks.
using LossWithGrad = std::function<double(ParamStore&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Entries checked per block; 0 checks all of them. Entries are drawn
  /// with a seeded generator when a block is larger than the limit.
  std::size_t max_entries_per_block = 0;
  std::uint64_t seed = 0;
  /// Lower bound on the relative-error denominator max(|a|, |n|, floor).
  double denominator_floor = 1e-6;
  BlockFilter filter;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares the analytic gradient of `loss` with central differences.
/// Parameter values are restored before returning.
GradCheckResult finite_diff_check(const LossWithGrad& loss, ParamStore& params,
                                  const GradCheckOptions& options = {});

}  // namespace duet
