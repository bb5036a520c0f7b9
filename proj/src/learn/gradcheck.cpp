#include "duet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "duet/errors.hpp"

namespace duet {

GradCheckResult finite_diff_check(const LossWithGrad& loss, ParamStore& params,
                                  const GradCheckOptions& options) {
  if (!(options.eps >= 1e-7 && options.eps <= 1e-3)) {
    throw ConfigError("finite_diff_check: eps must lie in [1e-7, 1e-3]");
  }
  params.zero_grad();
  loss(params);
  std::map<std::string, Tensor2, std::less<>> analytic;
  for (const auto& [name, b] : params.blocks()) analytic.emplace(name, b.grad);

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (auto& [name, b] : params.blocks()) {
    if (options.filter && !options.filter(name)) continue;
    std::vector<std::size_t> idx(b.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries_per_block != 0 &&
        idx.size() > options.max_entries_per_block) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries_per_block);
      std::sort(idx.begin(), idx.end());
    }
    const Tensor2& grad = analytic.at(name);
    for (std::size_t i : idx) {
      const double saved = b.value[i];
      b.value[i] = saved + options.eps;
      params.zero_grad();
      const double up = loss(params);
      b.value[i] = saved - options.eps;
      params.zero_grad();
      const double down = loss(params);
      b.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double a = grad[i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_rel_error || !std::isfinite(rel)) {
        result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
        result.worst_block = name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  // Leave the analytic gradient in place for callers that inspect it.
  for (auto& [name, b] : params.blocks()) b.grad = analytic.at(name);
  return result;
}

}  // namespace duet
