#include <cstring>
#include <fstream>
#include <iomanip>

#include "duet/acoustics.hpp"
#include "duet/binio.hpp"
#include "duet/errors.hpp"

namespace duet {
namespace {

constexpr char kMagic[8] = {'D', 'U', 'E', 'T', 'R', 'I', 'R', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kWhat = "RIR dataset";

}  // namespace

void write_rir_dataset(std::ostream& out, const RirDataset& data) {
  using binio::put_le;
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::int32_t>(out, data.sample_rate);
  put_le<std::uint32_t>(out, data.length);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.records.size()));
  for (const RirRecord& r : data.records) {
    if (r.samples.size() != 2u * data.length) {
      throw FileError("RIR record for " + r.scene_id + " has the wrong sample count");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.scene_id.size()));
    out.write(r.scene_id.data(), static_cast<std::streamsize>(r.scene_id.size()));
    put_le<std::int32_t>(out, r.source_node);
    put_le<std::int32_t>(out, r.listener_node);
    put_le<std::int32_t>(out, r.heading);
    for (float v : r.samples) binio::put_f32(out, v);
  }
  if (!out) throw FileError("failed writing RIR dataset");
}

RirDataset read_rir_dataset(std::istream& in) {
  using binio::get_le;
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw FileError("not an RIR dataset (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in, kWhat);
  if (version != kVersion) {
    throw FileError("unsupported RIR dataset version " + std::to_string(version));
  }
  RirDataset data;
  data.sample_rate = get_le<std::int32_t>(in, kWhat);
  data.length = get_le<std::uint32_t>(in, kWhat);
  if (data.length == 0 || data.length > (1u << 24)) throw FileError("implausible RIR length");
  const auto count = get_le<std::uint32_t>(in, kWhat);
  for (std::uint32_t k = 0; k < count; ++k) {
    RirRecord r;
    const auto len = get_le<std::uint32_t>(in, kWhat);
    if (len > 4096) throw FileError("RIR scene id too long");
    r.scene_id.resize(len);
    if (!in.read(r.scene_id.data(), len)) throw FileError("RIR dataset truncated");
    r.source_node = get_le<std::int32_t>(in, kWhat);
    r.listener_node = get_le<std::int32_t>(in, kWhat);
    r.heading = get_le<std::int32_t>(in, kWhat);
    r.samples.resize(2u * data.length);
    for (float& v : r.samples) v = binio::get_f32(in, kWhat);
    data.records.push_back(std::move(r));
  }
  return data;
}

void save_rir_dataset(const std::string& path, const RirDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path + " for writing");
  write_rir_dataset(out, data);
}

RirDataset load_rir_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open RIR dataset " + path);
  return read_rir_dataset(in);
}

void write_rir_csv(std::ostream& out, const RirRecord& record, std::uint32_t length) {
  if (record.samples.size() != 2u * length) throw FileError("RIR record size mismatch");
  out << "sample,left,right\n" << std::setprecision(9);
  for (std::uint32_t i = 0; i < length; ++i) {
    out << i << ',' << record.samples[i] << ',' << record.samples[length + i] << '\n';
  }
}

}  // namespace duet
