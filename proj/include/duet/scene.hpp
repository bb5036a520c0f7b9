#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "duet/room.hpp"
#include "duet/tensor.hpp"

namespace duet {

struct Wall {
  Point2 a;
  Point2 b;
  bool operator==(const Wall&) const = default;
};

/// Everything needed to rebuild a scene. Walls and node coordinates share
/// the room frame; the node grid is inset by half a cell from every wall.
struct SceneSpec {
  std::string id = "scene";
  double width = 5.0;   // extent covered by grid nodes
  double depth = 5.0;
  double height = 3.0;
  double resolution = 0.5;
  std::vector<Wall> walls;
  std::array<double, 6> absorption{0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  std::uint64_t seed = 0;
  bool operator==(const SceneSpec&) const = default;
};

inline constexpr double kEarHeight = 1.5;

enum class Action : int { kMoveForward = 0, kTurnLeft = 1, kTurnRight = 2, kStop = 3 };
inline constexpr int kNumActions = 4;

struct AgentPose {
  int node = 0;
  int heading = 0;  // degrees, counter-clockwise from +x
  bool stopped = false;
  bool operator==(const AgentPose&) const = default;
};

struct StepResult {
  AgentPose pose;
  bool moved = false;
};

class NavScene {
 public:
  NavScene() = default;

  const SceneSpec& spec() const { return spec_; }
  const RoomSpec& room() const { return room_; }
  const std::string& id() const { return spec_.id; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  std::size_t edge_count() const { return edge_count_; }
  const Point3& position(int node) const { return nodes_.at(node); }
  Point2 ground(int node) const;
  /// Grid indices (column along x, row along y) of a node.
  std::array<int, 2> cell(int node) const { return cells_.at(node); }
  /// Node at grid cell, or -1 when the cell holds no retained node.
  int node_at(int i, int j) const;
  int grid_cols() const { return cols_; }
  int grid_rows() const { return rows_; }

  /// Neighbor reached by moving one cell along `heading`, if an edge exists.
  std::optional<int> neighbor(int node, int heading) const;
  const std::vector<int>& adjacency(int node) const { return adj_.at(node); }
  bool valid(const AgentPose& pose) const;

  friend NavScene build_scene(const SceneSpec& spec);

 private:
  SceneSpec spec_;
  RoomSpec room_;
  int cols_ = 0;
  int rows_ = 0;
  std::vector<Point3> nodes_;
  std::vector<std::array<int, 2>> cells_;
  std::vector<int> grid_;                    // cols_ * rows_, -1 for none
  std::vector<std::array<int, 4>> links_;    // neighbor per heading index
  std::vector<std::vector<int>> adj_;
  std::size_t edge_count_ = 0;
};

/// Builds the grid graph; throws ConfigError on degenerate dimensions or
/// walls outside the room.
NavScene build_scene(const SceneSpec& spec);

/// Random room with one interior wall that leaves a single-cell gap.
SceneSpec random_scene_spec(std::uint64_t seed, double width, double depth,
                            double resolution = 0.5);

void write_scene_spec(std::ostream& out, const SceneSpec& spec);
SceneSpec read_scene_spec(std::istream& in);
void save_scene_spec(const std::string& path, const SceneSpec& spec);
SceneSpec load_scene_spec(const std::string& path);

int heading_index(int heading);
Point2 heading_vector(int heading);
StepResult step_action(const NavScene& scene, const AgentPose& pose, Action action);
const char* action_name(Action a);

struct HullStats {
  double perimeter = 0.0;
  double area = 0.0;
};

/// Convex hull of the four ground-plane points (A, B current; C, D previous).
HullStats hull_stats(const Point2& a, const Point2& b, const Point2& c, const Point2& d);
HullStats hull_stats(std::span<const Point2> points);

class CoverageTracker {
 public:
  explicit CoverageTracker(int node_count = 0);
  /// Marks both nodes visited and returns N_v / N_e.
  double update(int node_a, int node_b);
  double ratio() const;
  int visited_count() const { return visited_count_; }
  int node_count() const { return static_cast<int>(visited_.size()); }
  bool visited(int node) const { return visited_.at(node) != 0; }

 private:
  std::vector<char> visited_;
  int visited_count_ = 0;
};

inline constexpr double kPatchMasked = -1.0;

/// (2r+1)^2 occupancy around the agent, heading up: row 0 is r cells ahead,
/// column 0 is r cells to the left.
Tensor2 egocentric_patch(const NavScene& scene, const AgentPose& pose, int radius,
                         bool field_of_view);

}  // namespace duet
