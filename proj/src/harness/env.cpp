#include "duet/env.hpp"

#include "duet/errors.hpp"
#include "duet/spectral.hpp"

namespace duet {

SceneBundle make_scene(const SceneSpec& spec, const RunConfig& cfg) {
  SceneBundle b;
  b.seed = spec.seed;
  b.scene = std::make_shared<const NavScene>(build_scene(spec));
  b.rirs = std::make_shared<RirCache>(*b.scene, cfg.rir_length, cfg.sample_rate);
  return b;
}

std::vector<SceneBundle> make_scenes(std::span<const std::uint64_t> seeds, const RunConfig& cfg) {
  std::vector<SceneBundle> out;
  out.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    out.push_back(make_scene(random_scene_spec(s, cfg.scene_width, cfg.scene_depth, cfg.resolution),
                             cfg));
  }
  return out;
}

Episode start_episode(const SceneBundle& bundle, const RunConfig& cfg, std::mt19937_64& rng) {
  Episode ep;
  ep.bundle = &bundle;
  ep.max_steps = cfg.max_steps;
  ep.bank = MemoryBank(cfg.kappa);
  ep.tracker = RewardTracker(cfg.alphas);
  const int n = bundle.scene->node_count();
  for (auto& p : ep.poses) {
    p.node = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    p.heading = 90 * static_cast<int>(rng() % 4);
    p.stopped = false;
  }
  ep.coverage = CoverageTracker(n);
  ep.coverage.update(ep.poses[0].node, ep.poses[1].node);
  for (int i = 0; i < 2; ++i) ep.previous[i] = bundle.scene->ground(ep.poses[i].node);
  return ep;
}

ObsPair observe_pair(const Episode& ep, const ObsConfig& obs) {
  return {observe(ep.scene(), ep.poses[0], ep.t, obs), observe(ep.scene(), ep.poses[1], ep.t, obs)};
}

std::shared_ptr<const BinauralRIR> forward_truth(const Episode& ep) {
  return ep.bundle->rirs->get(ep.poses[0].node, ep.poses[1].node, ep.poses[1].heading);
}

std::shared_ptr<const BinauralRIR> reverse_truth(const Episode& ep) {
  return ep.bundle->rirs->get(ep.poses[1].node, ep.poses[0].node, ep.poses[0].heading);
}

std::vector<double> to_doubles(const BinauralRIR& rir) {
  return std::vector<double>(rir.samples.begin(), rir.samples.end());
}

HullStats episode_hull(const Episode& ep) {
  const NavScene& s = ep.scene();
  return hull_stats(s.ground(ep.poses[0].node), s.ground(ep.poses[1].node), ep.previous[0],
                    ep.previous[1]);
}

Measurement measure_step(Episode& ep, const ObsConfig& obs, const StftConfig& stft,
                         const PredictFn& predict, std::array<int, 2> actions) {
  Measurement m;
  ObsPair pair = observe_pair(ep, obs);
  m.query = make_query(pair, ep.bank);
  m.truth = forward_truth(ep);
  m.reverse_truth = reverse_truth(ep);
  m.prediction = predict(m.query);
  const std::vector<double> truth = to_doubles(*m.truth);
  if (m.prediction.size() != truth.size()) throw ConfigError("prediction length mismatch");
  m.delta = stft_distance(truth, m.prediction, stft, 2);
  m.measures = {m.delta, ep.coverage.ratio(), episode_hull(ep)};
  if (ep.t == 0) {
    m.reward = ep.tracker.reset(m.measures);
  } else {
    m.reward = ep.tracker.step(m.measures);
  }
  StepRecord rec;
  rec.t = ep.t;
  rec.poses = ep.poses;
  rec.actions = actions;
  rec.reward = m.reward;
  rec.pe = m.delta;
  rec.zeta = m.measures.zeta;
  rec.psi = m.measures.hull.perimeter;
  rec.phi = m.measures.hull.area;
  ep.trace.push_back(rec);
  ep.bank.push(std::move(pair));
  return m;
}

void move_agents(Episode& ep, int action0, int action1) {
  if (ep.done) throw DomainError("episode already finished");
  const int acts[2] = {action0, action1};
  for (int i = 0; i < 2; ++i) {
    if (acts[i] < 0 || acts[i] >= static_cast<int>(kNumActions)) {
      throw DomainError("action out of range");
    }
    ep.previous[i] = ep.scene().ground(ep.poses[i].node);
    ep.poses[i] = step_action(ep.scene(), ep.poses[i], static_cast<Action>(acts[i])).pose;
  }
  ep.coverage.update(ep.poses[0].node, ep.poses[1].node);
  ++ep.t;
  if (ep.t + 1 >= ep.max_steps || (ep.poses[0].stopped && ep.poses[1].stopped)) ep.done = true;
}

std::vector<StepRecord> replay_trace(const NavScene& scene, std::span<const StepRecord> trace,
                                     const RewardCoefs& coefs) {
  std::vector<StepRecord> out;
  if (trace.empty()) return out;
  CoverageTracker cov(scene.node_count());
  RewardTracker tracker(coefs);
  std::array<Point2, 2> prev{scene.ground(trace[0].poses[0].node),
                             scene.ground(trace[0].poses[1].node)};
  for (std::size_t i = 0; i < trace.size(); ++i) {
    StepRecord r = trace[i];
    const Point2 a = scene.ground(r.poses[0].node), b = scene.ground(r.poses[1].node);
    if (i > 0) {
      prev = {scene.ground(trace[i - 1].poses[0].node), scene.ground(trace[i - 1].poses[1].node)};
    }
    r.zeta = cov.update(r.poses[0].node, r.poses[1].node);
    const HullStats h = hull_stats(a, b, prev[0], prev[1]);
    r.psi = h.perimeter;
    r.phi = h.area;
    const StepMeasures m{r.pe, r.zeta, h};
    r.reward = i == 0 ? tracker.reset(m) : tracker.step(m);
    out.push_back(r);
  }
  return out;
}

}  // namespace duet
