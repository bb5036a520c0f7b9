#include "duet/scene.hpp"

#include <cmath>
#include <algorithm>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "duet/errors.hpp"

namespace duet {
namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  constexpr double tol = 1e-12;
  return p.x >= std::min(a.x, b.x) - tol && p.x <= std::max(a.x, b.x) + tol &&
         p.y >= std::min(a.y, b.y) - tol && p.y <= std::max(a.y, b.y) + tol;
}

int sign(double v) {
  constexpr double tol = 1e-12;
  return v > tol ? 1 : (v < -tol ? -1 : 0);
}

// Closed-segment intersection; touching counts as blocking.
bool segments_intersect(const Point2& p, const Point2& q, const Point2& a, const Point2& b) {
  const int d1 = sign(cross(a, b, p));
  const int d2 = sign(cross(a, b, q));
  const int d3 = sign(cross(p, q, a));
  const int d4 = sign(cross(p, q, b));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  if (d1 == 0 && on_segment(p, a, b)) return true;
  if (d2 == 0 && on_segment(q, a, b)) return true;
  if (d3 == 0 && on_segment(a, p, q)) return true;
  if (d4 == 0 && on_segment(b, p, q)) return true;
  return false;
}

constexpr int kDi[4] = {1, 0, -1, 0};
constexpr int kDj[4] = {0, 1, 0, -1};

int grid_count(double extent, double res) {
  return static_cast<int>(std::floor(extent / res + 1e-9)) + 1;
}

}  // namespace

void RoomSpec::validate() const {
  if (!(width > 0 && depth > 0 && height > 0)) {
    throw ConfigError("room dimensions must be positive");
  }
  for (double a : absorption) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("absorption must lie in (0, 1]");
  }
  if (!(speed_of_sound > 0)) throw ConfigError("speed of sound must be positive");
  if (max_order < 0) throw ConfigError("max reflection order must be >= 0");
}

bool RoomSpec::contains(const Point3& p) const {
  return p.x > 0 && p.x < width && p.y > 0 && p.y < depth && p.z > 0 && p.z < height;
}

Point2 NavScene::ground(int node) const {
  const Point3& p = nodes_.at(node);
  return {p.x, p.y};
}

int NavScene::node_at(int i, int j) const {
  if (i < 0 || j < 0 || i >= cols_ || j >= rows_) return -1;
  return grid_[static_cast<std::size_t>(j) * cols_ + i];
}

std::optional<int> NavScene::neighbor(int node, int heading) const {
  const int n = links_.at(node)[heading_index(heading)];
  if (n < 0) return std::nullopt;
  return n;
}

bool NavScene::valid(const AgentPose& pose) const {
  if (pose.node < 0 || pose.node >= node_count()) return false;
  return pose.heading == 0 || pose.heading == 90 || pose.heading == 180 ||
         pose.heading == 270;
}

NavScene build_scene(const SceneSpec& spec) {
  const double res = spec.resolution;
  if (!(res > 0)) throw ConfigError("resolution must be positive");
  if (!(spec.width > 2 * res && spec.depth > 2 * res)) {
    throw ConfigError("scene dimensions must exceed twice the resolution");
  }
  if (!(spec.height > kEarHeight)) throw ConfigError("scene height must exceed ear height");

  NavScene s;
  s.spec_ = spec;
  s.room_.width = spec.width + res;
  s.room_.depth = spec.depth + res;
  s.room_.height = spec.height;
  s.room_.absorption = spec.absorption;
  s.room_.validate();

  for (const Wall& w : spec.walls) {
    for (const Point2& p : {w.a, w.b}) {
      if (p.x < 0 || p.y < 0 || p.x > s.room_.width || p.y > s.room_.depth) {
        throw ConfigError("wall endpoint outside the room");
      }
    }
  }

  const int cols = grid_count(spec.width, res);
  const int rows = grid_count(spec.depth, res);
  const double pad = 0.5 * res;
  auto coord = [&](int i, int j) { return Point2{pad + i * res, pad + j * res}; };
  auto blocked = [&](int i, int j, int k) {
    const Point2 p = coord(i, j);
    const Point2 q = coord(i + kDi[k], j + kDj[k]);
    for (const Wall& w : spec.walls) {
      if (segments_intersect(p, q, w.a, w.b)) return true;
    }
    return false;
  };
  auto inside = [&](int i, int j) { return i >= 0 && j >= 0 && i < cols && j < rows; };

  // Node nearest the centroid, ties to the lowest grid index.
  const Point2 centre{pad + 0.5 * spec.width, pad + 0.5 * spec.depth};
  int start = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const Point2 p = coord(i, j);
      const double d = std::hypot(p.x - centre.x, p.y - centre.y);
      if (d < best - 1e-12) {
        best = d;
        start = j * cols + i;
      }
    }
  }

  std::vector<char> keep(static_cast<std::size_t>(cols) * rows, 0);
  std::deque<int> queue{start};
  keep[start] = 1;
  while (!queue.empty()) {
    const int g = queue.front();
    queue.pop_front();
    const int i = g % cols, j = g / cols;
    for (int k = 0; k < 4; ++k) {
      const int ni = i + kDi[k], nj = j + kDj[k];
      if (!inside(ni, nj) || blocked(i, j, k)) continue;
      const int ng = nj * cols + ni;
      if (!keep[ng]) {
        keep[ng] = 1;
        queue.push_back(ng);
      }
    }
  }

  s.cols_ = cols;
  s.rows_ = rows;
  s.grid_.assign(keep.size(), -1);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      const int g = j * cols + i;
      if (!keep[g]) continue;
      s.grid_[g] = static_cast<int>(s.nodes_.size());
      const Point2 p = coord(i, j);
      s.nodes_.push_back({p.x, p.y, kEarHeight});
      s.cells_.push_back({i, j});
    }
  }
  s.links_.assign(s.nodes_.size(), {-1, -1, -1, -1});
  s.adj_.assign(s.nodes_.size(), {});
  std::size_t half_edges = 0;
  for (int n = 0; n < s.node_count(); ++n) {
    const auto [i, j] = s.cells_[n];
    for (int k = 0; k < 4; ++k) {
      const int m = s.node_at(i + kDi[k], j + kDj[k]);
      if (m < 0 || blocked(i, j, k)) continue;
      s.links_[n][k] = m;
      s.adj_[n].push_back(m);
      ++half_edges;
    }
  }
  s.edge_count_ = half_edges / 2;
  return s;
}

SceneSpec random_scene_spec(std::uint64_t seed, double width, double depth,
                            double resolution) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> absorb(0.2, 0.8);
  SceneSpec spec;
  spec.id = "room" + std::to_string(seed);
  spec.width = width;
  spec.depth = depth;
  spec.resolution = resolution;
  spec.seed = seed;
  for (double& a : spec.absorption) a = absorb(rng);

  const int cols = grid_count(width, resolution);
  const int rows = grid_count(depth, resolution);
  const double room_w = width + resolution;
  const double room_d = depth + resolution;
  const bool vertical = (rng() & 1u) != 0;
  const int span = vertical ? cols : rows;
  const int across = vertical ? rows : cols;
  if (span >= 4 && across >= 3) {
    // Wall sits between grid lines k and k+1, gap at grid line g.
    const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(span - 3));
    const int g = static_cast<int>(rng() % static_cast<std::uint64_t>(across));
    const double at = (k + 1) * resolution;
    const double gap_lo = g * resolution;
    const double gap_hi = (g + 1) * resolution;
    const double extent = vertical ? room_d : room_w;
    auto make = [&](double lo, double hi) {
      return vertical ? Wall{{at, lo}, {at, hi}} : Wall{{lo, at}, {hi, at}};
    };
    if (gap_lo > 0) spec.walls.push_back(make(0.0, gap_lo));
    if (gap_hi < extent) spec.walls.push_back(make(gap_hi, extent));
  }
  return spec;
}

void write_scene_spec(std::ostream& out, const SceneSpec& spec) {
  out << std::setprecision(17);
  out << "id = " << spec.id << '\n';
  out << "width = " << spec.width << '\n';
  out << "depth = " << spec.depth << '\n';
  out << "height = " << spec.height << '\n';
  out << "resolution = " << spec.resolution << '\n';
  out << "seed = " << spec.seed << '\n';
  out << "absorption =";
  for (double a : spec.absorption) out << ' ' << a;
  out << '\n';
  for (const Wall& w : spec.walls) {
    out << "wall = " << w.a.x << ' ' << w.a.y << ' ' << w.b.x << ' ' << w.b.y << '\n';
  }
}

SceneSpec read_scene_spec(std::istream& in) {
  SceneSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw ConfigError("scene line " + std::to_string(lineno) + ": expected key = value");
    }
    std::istringstream key_in(line.substr(0, eq));
    std::string key;
    key_in >> key;
    std::istringstream val(line.substr(eq + 1));
    auto fail = [&] {
      throw ConfigError("scene line " + std::to_string(lineno) + ": bad value for " + key);
    };
    if (key == "id") {
      if (!(val >> spec.id)) fail();
    } else if (key == "width") {
      if (!(val >> spec.width)) fail();
    } else if (key == "depth") {
      if (!(val >> spec.depth)) fail();
    } else if (key == "height") {
      if (!(val >> spec.height)) fail();
    } else if (key == "resolution") {
      if (!(val >> spec.resolution)) fail();
    } else if (key == "seed") {
      if (!(val >> spec.seed)) fail();
    } else if (key == "absorption") {
      for (double& a : spec.absorption) {
        if (!(val >> a)) fail();
      }
    } else if (key == "wall") {
      Wall w;
      if (!(val >> w.a.x >> w.a.y >> w.b.x >> w.b.y)) fail();
      spec.walls.push_back(w);
    } else {
      throw ConfigError("scene line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  return spec;
}

void save_scene_spec(const std::string& path, const SceneSpec& spec) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write scene file " + path);
  write_scene_spec(out, spec);
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot read scene file " + path);
  return read_scene_spec(in);
}

int heading_index(int heading) {
  switch (heading) {
    case 0: return 0;
    case 90: return 1;
    case 180: return 2;
    case 270: return 3;
    default: throw DomainError("heading must be 0, 90, 180 or 270");
  }
}

Point2 heading_vector(int heading) {
  const int k = heading_index(heading);
  return {static_cast<double>(kDi[k]), static_cast<double>(kDj[k])};
}

StepResult step_action(const NavScene& scene, const AgentPose& pose, Action action) {
  StepResult r{pose, false};
  if (pose.stopped) return r;
  switch (action) {
    case Action::kTurnLeft:
      r.pose.heading = (pose.heading + 90) % 360;
      break;
    case Action::kTurnRight:
      r.pose.heading = (pose.heading + 270) % 360;
      break;
    case Action::kStop:
      r.pose.stopped = true;
      break;
    case Action::kMoveForward:
      if (auto n = scene.neighbor(pose.node, pose.heading)) {
        r.pose.node = *n;
        r.moved = true;
      }
      break;
  }
  return r;
}

const char* action_name(Action a) {
  switch (a) {
    case Action::kMoveForward: return "MoveForward";
    case Action::kTurnLeft: return "TurnLeft";
    case Action::kTurnRight: return "TurnRight";
    case Action::kStop: return "Stop";
  }
  return "?";
}

HullStats hull_stats(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const Point2 pts[] = {a, b, c, d};
  return hull_stats(pts);
}

HullStats hull_stats(std::span<const Point2> points) {
  std::vector<Point2> p(points.begin(), points.end());
  std::sort(p.begin(), p.end(), [](const Point2& u, const Point2& v) {
    return u.x < v.x || (u.x == v.x && u.y < v.y);
  });
  p.erase(std::unique(p.begin(), p.end()), p.end());
  if (p.size() < 2) return {};
  // Andrew's monotone chain, dropping collinear points.
  std::vector<Point2> h(2 * p.size());
  std::size_t k = 0;
  for (const Point2& q : p) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], q) <= 0) --k;
    h[k++] = q;
  }
  for (std::size_t i = p.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  HullStats s;
  double twice_area = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Point2& u = h[i];
    const Point2& v = h[(i + 1) % h.size()];
    s.perimeter += std::hypot(v.x - u.x, v.y - u.y);
    twice_area += u.x * v.y - v.x * u.y;
  }
  s.area = 0.5 * std::abs(twice_area);
  return s;
}

CoverageTracker::CoverageTracker(int node_count)
    : visited_(static_cast<std::size_t>(std::max(node_count, 0)), 0) {}

double CoverageTracker::update(int node_a, int node_b) {
  for (int n : {node_a, node_b}) {
    char& v = visited_.at(n);
    if (!v) {
      v = 1;
      ++visited_count_;
    }
  }
  return ratio();
}

double CoverageTracker::ratio() const {
  if (visited_.empty()) return 0.0;
  return static_cast<double>(visited_count_) / static_cast<double>(visited_.size());
}

Tensor2 egocentric_patch(const NavScene& scene, const AgentPose& pose, int radius,
                         bool field_of_view) {
  if (radius < 0) throw ConfigError("patch radius must be >= 0");
  const int side = 2 * radius + 1;
  Tensor2 patch(side, side);
  const auto [ci, cj] = scene.cell(pose.node);
  const int k = heading_index(pose.heading);
  const int fi = kDi[k], fj = kDj[k];
  const int ri = fj, rj = -fi;  // right-hand side of the heading
  for (int row = 0; row < side; ++row) {
    const int f = radius - row;
    for (int col = 0; col < side; ++col) {
      const int s = col - radius;
      if (field_of_view && f < std::abs(s)) {
        patch(row, col) = kPatchMasked;
        continue;
      }
      const int n = scene.node_at(ci + f * fi + s * ri, cj + f * fj + s * rj);
      patch(row, col) = n >= 0 ? 1.0 : 0.0;
    }
  }
  return patch;
}

}  // namespace duet
