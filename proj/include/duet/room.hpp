#pragma once

#include <array>

namespace duet {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Point3&) const = default;
};

/// Shoebox room. Absorption order: x=0, x=W, y=0, y=D, floor, ceiling.
struct RoomSpec {
  double width = 5.0;
  double depth = 5.0;
  double height = 3.0;
  std::array<double, 6> absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  double speed_of_sound = 343.0;
  int max_order = 8;

  /// Throws ConfigError on non-positive dimensions or absorption outside (0,1].
  void validate() const;
  bool contains(const Point3& p) const;
  bool operator==(const RoomSpec&) const = default;
};

}  // namespace duet
