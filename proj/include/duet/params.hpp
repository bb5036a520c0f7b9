#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "duet/tensor.hpp"

namespace duet {

/// One trainable block with its gradient and Adam moments.
struct ParamBlock {
  Tensor2 value;
  Tensor2 grad;
  Tensor2 m;
  Tensor2 v;
};

/// Selects blocks by name; an empty filter selects everything.
using BlockFilter = std::function<bool(std::string_view)>;

/// Filter matching blocks whose names start with any of `prefixes`.
BlockFilter prefix_filter(std::vector<std::string> prefixes);

/// Named parameter blocks. Ordered by name so iteration (and therefore
/// checkpoints and gradient norms) is deterministic.
class ParamStore {
 public:
  /// Adds a zero-initialized block. Throws ConfigError on duplicates.
  Tensor2& add(const std::string& name, std::size_t rows, std::size_t cols);

  bool contains(std::string_view name) const;
  const Tensor2& value(std::string_view name) const;
  Tensor2& value(std::string_view name);
  const Tensor2& grad(std::string_view name) const;
  Tensor2& grad(std::string_view name);
  ParamBlock& block(std::string_view name);
  const ParamBlock& block(std::string_view name) const;

  std::map<std::string, ParamBlock, std::less<>>& blocks() { return blocks_; }
  const std::map<std::string, ParamBlock, std::less<>>& blocks() const {
    return blocks_;
  }

  void zero_grad();
  std::size_t parameter_count() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  /// Copies block values (not gradients or moments) from `other` for every
  /// block both stores share. Returns the number of blocks copied.
  std::size_t load_values_from(const ParamStore& other);

 private:
  std::map<std::string, ParamBlock, std::less<>> blocks_;
  std::int64_t step_ = 0;
};

}  // namespace duet
