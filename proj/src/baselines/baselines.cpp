#include "duet/baselines.hpp"

#include <cmath>
#include <limits>

#include "duet/errors.hpp"

namespace duet {
namespace {

std::vector<double> log_softmax(std::span<const double> x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

double kl_from_logs(std::span<const double> lp, std::span<const double> lq) {
  double kl = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) kl += std::exp(lp[i]) * (lp[i] - lq[i]);
  return kl;
}

}  // namespace

Action random_action(int step, int max_steps, std::mt19937_64& rng) {
  if (step + 2 >= max_steps) return Action::kStop;
  return static_cast<Action>(rng() % 3);
}

Action occupancy_action(const NavScene& scene, const std::array<AgentPose, 2>& poses, int agent) {
  const AgentPose& me = poses[agent];
  const Point2 other = scene.ground(poses[1 - agent].node);
  const Point2 here = scene.ground(me.node);
  Action best = Action::kMoveForward;
  double best_area = -1.0;
  for (Action a : {Action::kMoveForward, Action::kTurnLeft, Action::kTurnRight}) {
    const AgentPose next = step_action(scene, me, a).pose;
    if (next.node == me.node && next.heading == me.heading) continue;
    const double area = hull_stats(scene.ground(next.node), other, here, other).area;
    if (area > best_area) {
      best_area = area;
      best = a;
    }
  }
  return best;
}

Action curiosity_action(const NavScene& scene, const AgentPose& pose,
                        const CoverageTracker& visited, std::mt19937_64& rng) {
  auto unvisited = [&](int heading) {
    const auto n = scene.neighbor(pose.node, ((heading % 360) + 360) % 360);
    return n.has_value() && !visited.visited(*n);
  };
  if (unvisited(pose.heading)) return Action::kMoveForward;
  if (unvisited(pose.heading + 90)) return Action::kTurnLeft;
  if (unvisited(pose.heading + 270)) return Action::kTurnRight;
  if (unvisited(pose.heading + 180)) return Action::kTurnLeft;
  return static_cast<Action>(rng() % 3);
}

double latent_similarity(std::span<const double> test, std::span<const double> train) {
  if (test.size() != train.size() || test.empty()) throw DomainError("latent size mismatch");
  return -kl_from_logs(log_softmax(test), log_softmax(train));
}

void NearestNeighborBank::add(LatentRecord r) {
  for (double v : r.latent) {
    if (!std::isfinite(v)) throw DomainError("non-finite latent");
  }
  if (!records_.empty() && r.latent.size() != records_.front().latent.size()) {
    throw DomainError("latent size mismatch");
  }
  log_probs_.push_back(log_softmax(r.latent));
  records_.push_back(std::move(r));
}

std::size_t NearestNeighborBank::nearest(std::span<const double> query) const {
  if (records_.empty()) throw DomainError("nearest-neighbour bank is empty");
  if (query.size() != records_.front().latent.size()) throw DomainError("latent size mismatch");
  const std::vector<double> lq = log_softmax(query);
  std::size_t best = 0;
  double best_s = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const double s = -kl_from_logs(lq, log_probs_[i]);
    if (s > best_s) {
      best_s = s;
      best = i;
    }
  }
  return best;
}

}  // namespace duet
