#include "duet/params.hpp"

#include "duet/errors.hpp"

namespace duet {

BlockFilter prefix_filter(std::vector<std::string> prefixes) {
  return [prefixes = std::move(prefixes)](std::string_view name) {
    for (const auto& p : prefixes) {
      if (name.starts_with(p)) return true;
    }
    return false;
  };
}

Tensor2& ParamStore::add(const std::string& name, std::size_t rows,
                         std::size_t cols) {
  if (blocks_.contains(name)) {
    throw ConfigError("duplicate parameter block '" + name + "'");
  }
  ParamBlock b{Tensor2(rows, cols), Tensor2(rows, cols), Tensor2(rows, cols),
               Tensor2(rows, cols)};
  return blocks_.emplace(name, std::move(b)).first->second.value;
}

bool ParamStore::contains(std::string_view name) const {
  return blocks_.find(name) != blocks_.end();
}

ParamBlock& ParamStore::block(std::string_view name) {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) {
    throw ConfigError("unknown parameter block '" + std::string(name) + "'");
  }
  return it->second;
}

const ParamBlock& ParamStore::block(std::string_view name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) {
    throw ConfigError("unknown parameter block '" + std::string(name) + "'");
  }
  return it->second;
}

const Tensor2& ParamStore::value(std::string_view name) const {
  return block(name).value;
}
Tensor2& ParamStore::value(std::string_view name) { return block(name).value; }
const Tensor2& ParamStore::grad(std::string_view name) const {
  return block(name).grad;
}
Tensor2& ParamStore::grad(std::string_view name) { return block(name).grad; }

void ParamStore::zero_grad() {
  for (auto& [_, b] : blocks_) b.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, b] : blocks_) n += b.value.size();
  return n;
}

std::size_t ParamStore::load_values_from(const ParamStore& other) {
  std::size_t copied = 0;
  for (auto& [name, b] : blocks_) {
    auto it = other.blocks_.find(name);
    if (it == other.blocks_.end()) continue;
    if (!it->second.value.same_shape(b.value)) {
      throw ConfigError("shape mismatch loading block '" + name + "'");
    }
    b.value = it->second.value;
    ++copied;
  }
  return copied;
}

}  // namespace duet
