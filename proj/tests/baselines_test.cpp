#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "duet/baselines.hpp"
#include "duet/errors.hpp"

namespace duet {
namespace {

NavScene open_scene(double w = 4.0, double d = 4.0) {
  SceneSpec s;
  s.id = "open";
  s.width = w;
  s.depth = d;
  return build_scene(s);
}

TEST(RandomBaseline, UniformOverMovesAndStopsOnlyAtEnd) {
  std::mt19937_64 rng(1);
  int counts[4] = {0, 0, 0, 0};
  const int n = 30000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<int>(random_action(i % 62, 64, rng))];
  EXPECT_EQ(counts[3], 0);
  double chi2 = 0;
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(counts[k] / double(n), 1.0 / 3, 0.01);
    chi2 += std::pow(counts[k] - n / 3.0, 2) / (n / 3.0);
  }
  EXPECT_LT(chi2, 9.21);  // chi-square(2) at p = 0.01
  EXPECT_EQ(random_action(62, 64, rng), Action::kStop);
  EXPECT_EQ(random_action(63, 64, rng), Action::kStop);
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(random_action(i, 200, a), random_action(i, 200, b));
}

TEST(OccupancyBaseline, PicksAreaIncreasingMove) {
  NavScene sc = open_scene();
  // agent 0 faces +y, agent 1 sits two cells along +x: forward opens area
  std::array<AgentPose, 2> poses{AgentPose{sc.node_at(2, 2), 90, false},
                                 AgentPose{sc.node_at(4, 2), 0, false}};
  EXPECT_EQ(occupancy_action(sc, poses, 0), Action::kMoveForward);
  // facing the other agent: forward stays collinear, all areas zero -> forward
  poses[0].heading = 0;
  EXPECT_EQ(occupancy_action(sc, poses, 0), Action::kMoveForward);
  // facing a wall: forward is skipped, turns tie -> TurnLeft
  poses[0] = AgentPose{sc.node_at(0, 2), 180, false};
  EXPECT_EQ(occupancy_action(sc, poses, 0), Action::kTurnLeft);
}

TEST(OccupancyBaseline, MatchesExhaustiveOracle) {
  NavScene sc = open_scene(5.0, 5.0);
  std::mt19937_64 rng(2);
  const int n = sc.node_count();
  for (int trial = 0; trial < 100; ++trial) {
    std::array<AgentPose, 2> poses;
    for (auto& p : poses) p = {static_cast<int>(rng() % n), 90 * static_cast<int>(rng() % 4), false};
    const int agent = static_cast<int>(rng() % 2);
    // oracle: shoelace area of the hull for every candidate
    double areas[3];
    bool valid[3];
    for (int a = 0; a < 3; ++a) {
      AgentPose next = step_action(sc, poses[agent], static_cast<Action>(a)).pose;
      valid[a] = !(next.node == poses[agent].node && next.heading == poses[agent].heading);
      std::vector<Point2> pts{sc.ground(next.node), sc.ground(poses[1 - agent].node),
                              sc.ground(poses[agent].node)};
      areas[a] = 0.5 * std::abs((pts[1].x - pts[0].x) * (pts[2].y - pts[0].y) -
                                (pts[2].x - pts[0].x) * (pts[1].y - pts[0].y));
    }
    int best = -1;
    for (int a = 0; a < 3; ++a) {
      if (valid[a] && (best < 0 || areas[a] > areas[best] + 1e-12)) best = a;
    }
    EXPECT_EQ(static_cast<int>(occupancy_action(sc, poses, agent)), best);
  }
}

TEST(CuriosityBaseline, Rules) {
  NavScene sc = open_scene();
  std::mt19937_64 rng(3);
  CoverageTracker cov(sc.node_count());
  const int c = sc.node_at(2, 2);
  cov.update(c, c);
  AgentPose pose{c, 0, false};
  EXPECT_EQ(curiosity_action(sc, pose, cov, rng), Action::kMoveForward);
  cov.update(sc.node_at(3, 2), sc.node_at(3, 2));
  EXPECT_EQ(curiosity_action(sc, pose, cov, rng), Action::kTurnLeft);
  cov.update(sc.node_at(2, 3), sc.node_at(2, 3));
  EXPECT_EQ(curiosity_action(sc, pose, cov, rng), Action::kTurnRight);
  cov.update(sc.node_at(2, 1), sc.node_at(2, 1));
  EXPECT_EQ(curiosity_action(sc, pose, cov, rng), Action::kTurnLeft);  // behind
  cov.update(sc.node_at(1, 2), sc.node_at(1, 2));
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 30000; ++i) ++counts[static_cast<int>(curiosity_action(sc, pose, cov, rng))];
  EXPECT_EQ(counts[3], 0);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(counts[k] / 30000.0, 1.0 / 3, 0.01);
}

std::vector<double> softmax_naive(std::span<const double> x) {
  std::vector<double> p(x.size());
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i] = std::exp(x[i]);
  for (double& v : p) v /= s;
  return p;
}

TEST(NearestNeighbor, ExhaustiveScanOracle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  NearestNeighborBank bank;
  EXPECT_THROW(bank.nearest(std::vector<double>{1.0}), DomainError);
  std::vector<std::vector<double>> lat(50, std::vector<double>(8));
  for (std::size_t i = 0; i < lat.size(); ++i) {
    for (double& v : lat[i]) v = g(rng);
    bank.add({"s", lat[i], 0, static_cast<int>(i), 0, nullptr});
  }
  for (int q = 0; q < 100; ++q) {
    std::vector<double> x(8);
    for (double& v : x) v = g(rng);
    const auto p = softmax_naive(x);
    std::size_t best = 0;
    double best_s = -1e300;
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const auto r = softmax_naive(lat[i]);
      double kl = 0;
      for (std::size_t k = 0; k < 8; ++k) kl += p[k] * std::log(p[k] / r[k]);
      EXPECT_LE(latent_similarity(x, lat[i]), 1e-15);
      if (-kl > best_s) {
        best_s = -kl;
        best = i;
      }
    }
    EXPECT_EQ(bank.nearest(x), best);
  }
  EXPECT_EQ(bank.nearest(lat[17]), 17u);
  EXPECT_NEAR(latent_similarity(lat[17], lat[17]), 0.0, 1e-15);
}

TEST(NearestNeighbor, SingleRecordAndTies) {
  NearestNeighborBank one;
  one.add({"s", {0.1, 0.2}, 0, 0, 0, nullptr});
  EXPECT_EQ(one.nearest(std::vector<double>{5.0, -5.0}), 0u);
  NearestNeighborBank tie;
  tie.add({"s", {1.0, 2.0}, 0, 0, 0, nullptr});
  tie.add({"s", {1.0, 2.0}, 0, 1, 0, nullptr});
  EXPECT_EQ(tie.nearest(std::vector<double>{0.0, 0.0}), 0u);
  // softmax is shift invariant
  EXPECT_NEAR(latent_similarity(std::vector<double>{1.0, 2.0}, std::vector<double>{11.0, 12.0}),
              0.0, 1e-12);
}

}  // namespace
}  // namespace duet
