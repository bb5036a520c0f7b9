#pragma once

#include <filesystem>
#include <iosfwd>

#include "duet/params.hpp"

namespace duet {

inline constexpr char kCheckpointMagic[8] = {'D', 'U', 'E', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers and floats little-endian):
///   magic[8] | u32 version | u32 block count |
///   per block: u32 name length | name bytes | u64 rows | u64 cols |
///              rows*cols f64 values
/// Only parameter values are stored; gradients and moments are not.
void write_checkpoint(std::ostream& out, const ParamStore& params);
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);

ParamStore read_checkpoint(std::istream& in);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace duet
