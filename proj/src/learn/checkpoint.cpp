#include "duet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "duet/binio.hpp"
#include "duet/errors.hpp"

namespace duet {
using binio::get_le;
using binio::put_le;

void write_checkpoint(std::ostream& out, const ParamStore& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.blocks().size()));
  for (const auto& [name, b] : params.blocks()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(out, b.value.rows());
    put_le<std::uint64_t>(out, b.value.cols());
    for (double v : b.value.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw FileError("failed writing checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

ParamStore read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw FileError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, "checkpoint");
  if (version != kCheckpointVersion) {
    throw FileError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in, "checkpoint");
  ParamStore params;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get_le<std::uint32_t>(in, "checkpoint");
    if (len > 4096) throw FileError("checkpoint block name too long");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FileError("checkpoint truncated");
    const auto rows = get_le<std::uint64_t>(in, "checkpoint");
    const auto cols = get_le<std::uint64_t>(in, "checkpoint");
    if (rows > (1u << 26) || cols > (1u << 26) || rows * cols > (1ull << 28)) {
      throw FileError("checkpoint block '" + name + "' has implausible shape");
    }
    Tensor2& t = params.add(name, rows, cols);
    for (double& v : t.values()) v = std::bit_cast<double>(get_le<std::uint64_t>(in, "checkpoint"));
  }
  return params;
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace duet
