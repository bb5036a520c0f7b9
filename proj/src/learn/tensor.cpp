#include "duet/tensor.hpp"

#include <cmath>

#include "duet/errors.hpp"

namespace duet {

bool Tensor2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor2 concat_cols(std::span<const Tensor2* const> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Tensor2* p : parts) {
    if (p->rows() != rows) throw ConfigError("concat_cols: row count mismatch");
    cols += p->cols();
  }
  Tensor2 out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (const Tensor2* p : parts) {
      auto src = p->row_span(r);
      std::copy(src.begin(), src.end(), out.row_span(r).begin() + offset);
      offset += p->cols();
    }
  }
  return out;
}

Tensor2 slice_cols(const Tensor2& t, std::size_t begin, std::size_t width) {
  if (begin + width > t.cols()) throw ConfigError("slice_cols: out of range");
  Tensor2 out(t.rows(), width);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto src = t.row_span(r).subspan(begin, width);
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  return out;
}

}  // namespace duet
