#include "duet/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "duet/errors.hpp"

namespace duet {
namespace {

struct AxisImage {
  double coord;
  int low_hits;
  int high_hits;
};

std::vector<AxisImage> axis_images(double s, double extent, int max_order) {
  std::vector<AxisImage> out;
  for (int n = -max_order; n <= max_order; ++n) {
    for (int q = 0; q <= 1; ++q) {
      const int low = std::abs(n - q);
      const int high = std::abs(n);
      if (low + high > max_order) continue;
      out.push_back({(q ? -s : s) + 2.0 * n * extent, low, high});
    }
  }
  return out;
}

void check_inside(const RoomSpec& room, const Point3& p, const char* what) {
  if (!room.contains(p)) throw DomainError(std::string(what) + " lies outside the room");
}

std::vector<double> render_binaural(const RoomSpec& room,
                                    std::span<const ImageSource> images,
                                    const Listener& listener, std::size_t length,
                                    int sample_rate) {
  if (length == 0) throw ConfigError("RIR length must be positive");
  std::vector<double> out;
  out.reserve(2 * length);
  for (const Point3& ear : ear_positions(listener)) {
    check_inside(room, ear, "listener ear");
    const auto h = render_channel(images, ear, room.speed_of_sound, length, sample_rate);
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

BinauralRIR normalize(const std::vector<double>& raw, std::size_t length, int sample_rate) {
  double peak = 0.0;
  for (double v : raw) peak = std::max(peak, std::abs(v));
  BinauralRIR rir;
  rir.sample_rate = sample_rate;
  rir.length = length;
  rir.scale = peak > 0.0 ? kPeakTarget / peak : 1.0;
  rir.samples.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    rir.samples[i] = static_cast<float>(raw[i] * rir.scale);
  }
  return rir;
}

}  // namespace

std::vector<ImageSource> image_sources(const RoomSpec& room, const Point3& source) {
  room.validate();
  check_inside(room, source, "source");
  const auto xs = axis_images(source.x, room.width, room.max_order);
  const auto ys = axis_images(source.y, room.depth, room.max_order);
  const auto zs = axis_images(source.z, room.height, room.max_order);
  std::array<double, 6> b;
  for (int i = 0; i < 6; ++i) b[i] = std::sqrt(1.0 - room.absorption[i]);
  std::vector<ImageSource> out;
  for (const auto& x : xs) {
    const int ox = x.low_hits + x.high_hits;
    for (const auto& y : ys) {
      const int oxy = ox + y.low_hits + y.high_hits;
      if (oxy > room.max_order) continue;
      for (const auto& z : zs) {
        const int order = oxy + z.low_hits + z.high_hits;
        if (order > room.max_order) continue;
        const double gain = std::pow(b[0], x.low_hits) * std::pow(b[1], x.high_hits) *
                            std::pow(b[2], y.low_hits) * std::pow(b[3], y.high_hits) *
                            std::pow(b[4], z.low_hits) * std::pow(b[5], z.high_hits);
        if (gain == 0.0) continue;
        out.push_back({{x.coord, y.coord, z.coord}, gain, order});
      }
    }
  }
  return out;
}

std::vector<double> render_channel(std::span<const ImageSource> images, const Point3& ear,
                                   double speed_of_sound, std::size_t length,
                                   int sample_rate) {
  std::vector<double> h(length, 0.0);
  const double samples_per_metre = sample_rate / speed_of_sound;
  for (const ImageSource& im : images) {
    const double dx = im.position.x - ear.x;
    const double dy = im.position.y - ear.y;
    const double dz = im.position.z - ear.z;
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (r <= 0.0) throw DomainError("source coincides with an ear");
    const double t = r * samples_per_metre;
    const double base = std::floor(t);
    if (base >= static_cast<double>(length)) continue;
    const auto i = static_cast<std::size_t>(base);
    const double frac = t - base;
    const double a = im.gain / (4.0 * std::numbers::pi * r);
    h[i] += a * (1.0 - frac);
    if (i + 1 < length) h[i + 1] += a * frac;
  }
  return h;
}

std::array<Point3, 2> ear_positions(const Listener& listener) {
  const Point2 f = heading_vector(listener.heading);
  const Point2 left{-f.y, f.x};
  const Point3& p = listener.position;
  return {Point3{p.x + kEarOffset * left.x, p.y + kEarOffset * left.y, p.z},
          Point3{p.x - kEarOffset * left.x, p.y - kEarOffset * left.y, p.z}};
}

std::vector<double> raw_binaural(const RoomSpec& room, const Point3& source,
                                 const Listener& listener, std::size_t length,
                                 int sample_rate) {
  const auto images = image_sources(room, source);
  return render_binaural(room, images, listener, length, sample_rate);
}

BinauralRIR image_source_rir(const RoomSpec& room, const Point3& source,
                             const Listener& listener, std::size_t length,
                             int sample_rate) {
  return normalize(raw_binaural(room, source, listener, length, sample_rate), length,
                   sample_rate);
}

std::vector<double> to_unit_interval(std::span<const float> rir) {
  std::vector<double> out(rir.size());
  for (std::size_t i = 0; i < rir.size(); ++i) {
    const double x = rir[i];
    if (!(x >= -1.0 && x <= 1.0)) throw DomainError("RIR sample outside [-1, 1]");
    out[i] = (x + 1.0) / 2.0;
  }
  return out;
}

std::vector<double> from_unit_interval(std::span<const double> unit) {
  std::vector<double> out(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const double u = unit[i];
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("value outside [0, 1]");
    out[i] = 2.0 * u - 1.0;
  }
  return out;
}

RirCache::RirCache(const NavScene& scene, std::size_t length, int sample_rate,
                   std::size_t capacity)
    : scene_(&scene), length_(length), sample_rate_(sample_rate), capacity_(capacity) {
  if (length == 0) throw ConfigError("RIR length must be positive");
}

std::shared_ptr<const BinauralRIR> RirCache::get(int source_node, int listener_node,
                                                 int heading) {
  const auto key = std::make_tuple(source_node, listener_node, heading);
  std::shared_ptr<const std::vector<ImageSource>> images;
  {
    std::lock_guard lock(mu_);
    if (auto it = rirs_.find(key); it != rirs_.end()) return it->second;
    if (auto it = images_.find(source_node); it != images_.end()) images = it->second;
  }
  const RoomSpec& room = scene_->room();
  if (!images) {
    images = std::make_shared<const std::vector<ImageSource>>(
        image_sources(room, scene_->position(source_node)));
  }
  const Listener listener{scene_->position(listener_node), heading};
  auto rir = std::make_shared<const BinauralRIR>(normalize(
      render_binaural(room, *images, listener, length_, sample_rate_), length_,
      sample_rate_));
  std::lock_guard lock(mu_);
  images_.emplace(source_node, images);
  if (rirs_.size() >= capacity_) rirs_.clear();
  return rirs_.emplace(key, std::move(rir)).first->second;
}

std::size_t RirCache::size() const {
  std::lock_guard lock(mu_);
  return rirs_.size();
}

}  // namespace duet
