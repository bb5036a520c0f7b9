#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "duet/room.hpp"
#include "duet/scene.hpp"

namespace duet {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kPaperRirLength = 16000;
inline constexpr double kEarOffset = 0.09;
inline constexpr double kPeakTarget = 0.9;

struct ImageSource {
  Point3 position;
  double gain = 1.0;  // product of reflection factors sqrt(1 - alpha)
  int order = 0;
};

/// All image sources of `source` with reflection order <= room.max_order.
std::vector<ImageSource> image_sources(const RoomSpec& room, const Point3& source);

/// Single-channel impulse response before normalization.
std::vector<double> render_channel(std::span<const ImageSource> images, const Point3& ear,
                                   double speed_of_sound, std::size_t length,
                                   int sample_rate = kSampleRate);

struct Listener {
  Point3 position;
  int heading = 0;
};

/// Left ear (channel 0) and right ear (channel 1) positions.
std::array<Point3, 2> ear_positions(const Listener& listener);

struct BinauralRIR {
  int sample_rate = kSampleRate;
  std::size_t length = 0;
  std::vector<float> samples;  // channel-major, 2 * length
  double scale = 1.0;          // factor applied for peak normalization

  std::span<const float> channel(int c) const {
    return std::span<const float>(samples).subspan(static_cast<std::size_t>(c) * length,
                                                   length);
  }
};

/// Binaural RIR peak-normalized to 0.9. Throws DomainError when the source
/// or an ear lies outside the room.
BinauralRIR image_source_rir(const RoomSpec& room, const Point3& source,
                             const Listener& listener, std::size_t length,
                             int sample_rate = kSampleRate);

/// Unnormalized binaural response, both channels concatenated.
std::vector<double> raw_binaural(const RoomSpec& room, const Point3& source,
                                 const Listener& listener, std::size_t length,
                                 int sample_rate = kSampleRate);

/// x -> (x + 1) / 2 and back. Throws DomainError outside the source range.
std::vector<double> to_unit_interval(std::span<const float> rir);
std::vector<double> from_unit_interval(std::span<const double> unit);

/// Ground-truth RIR between two nodes of a scene, listener facing `heading`.
/// Results are memoized (the memo is dropped once it holds `capacity`
/// responses); safe to share across threads.
class RirCache {
 public:
  RirCache(const NavScene& scene, std::size_t length, int sample_rate = kSampleRate,
           std::size_t capacity = 4096);

  std::shared_ptr<const BinauralRIR> get(int source_node, int listener_node, int heading);
  std::size_t length() const { return length_; }
  std::size_t size() const;

 private:
  const NavScene* scene_;
  std::size_t length_;
  int sample_rate_;
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::map<int, std::shared_ptr<const std::vector<ImageSource>>> images_;
  std::map<std::tuple<int, int, int>, std::shared_ptr<const BinauralRIR>> rirs_;
};

struct RirRecord {
  std::string scene_id;
  std::int32_t source_node = 0;
  std::int32_t listener_node = 0;
  std::int32_t heading = 0;
  std::vector<float> samples;  // 2 * L
};

struct RirDataset {
  std::int32_t sample_rate = kSampleRate;
  std::uint32_t length = 0;
  std::vector<RirRecord> records;
};

void write_rir_dataset(std::ostream& out, const RirDataset& data);
RirDataset read_rir_dataset(std::istream& in);
void save_rir_dataset(const std::string& path, const RirDataset& data);
RirDataset load_rir_dataset(const std::string& path);

/// Writes "sample,left,right" rows.
void write_rir_csv(std::ostream& out, const RirRecord& record, std::uint32_t length);

}  // namespace duet
