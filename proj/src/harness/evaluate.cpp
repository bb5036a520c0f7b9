#include "duet/evaluate.hpp"

#include <fstream>

#include "duet/errors.hpp"
#include "duet/train.hpp"

namespace duet {

void corrupt_modality(Observation& obs, Modality m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  switch (m) {
    case Modality::kVision:
      for (double& v : obs.vision) v = g(rng);
      break;
    case Modality::kAzimuth:
      for (double& v : obs.azimuth) v = g(rng);
      break;
    case Modality::kPosition:
      for (double& v : obs.position) v = g(rng);
      break;
  }
}

AssignedReward Controller::assign(double r) const { return assign_rewards(mode_, r); }

ModelController::ModelController(const Model& model, std::optional<Intervention> iv)
    : Controller(model.cfg.assignment()), model_(model), iv_(iv) {
  if (iv_) noise_ = stream_rng(iv_->seed, 7, static_cast<std::uint64_t>(iv_->modality));
}

void ModelController::begin(const Episode& ep) {
  (void)ep;
  const std::size_t h = static_cast<std::size_t>(model_.cfg.hidden_size);
  h_ = {std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)};
}

std::array<int, 2> ModelController::act(const Episode& ep, std::mt19937_64& rng) {
  std::array<int, 2> out{};
  for (int i = 0; i < 2; ++i) {
    Observation o = observe(ep.scene(), ep.poses[i], ep.t, model_.obs);
    if (iv_ && (iv_->agent < 0 || iv_->agent == i)) corrupt_modality(o, iv_->modality, noise_);
    const Observation* p = &o;
    const PolicyOutput po = model_.agents[i].forward(
        model_.params, stack_observations(std::span(&p, 1), model_.obs), Tensor2::row(h_[i]));
    out[i] = sample_action(po.probs.row_span(0), rng);
    const auto hr = po.hidden.row_span(0);
    h_[i].assign(hr.begin(), hr.end());
  }
  return out;
}

std::vector<double> ModelController::predict(const PredictQuery& q) {
  if (!iv_ || !iv_->predictor) return model_.predict(q);
  PredictQuery c = q;
  auto hit = [&](ObsPair& p) {
    if (iv_->agent < 0 || iv_->agent == 0) corrupt_modality(p.emitter, iv_->modality, noise_);
    if (iv_->agent < 0 || iv_->agent == 1) corrupt_modality(p.receiver, iv_->modality, noise_);
  };
  hit(c.current);
  for (ObsPair& p : c.memory) hit(p);
  return model_.predict(c);
}

AssignedReward ModelController::assign(double r) const {
  if (mode_.kind != AssignmentKind::kLearned) return assign_rewards(mode_, r);
  const Tensor2 probs = model_.head.forward(model_.params, Tensor2::row(h_[0]),
                                            Tensor2::row(h_[1]), std::span(&r, 1));
  return assign_rewards(mode_, r, {probs(0, 0), probs(0, 1)});
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "random") return BaselineKind::kRandom;
  if (name == "nn") return BaselineKind::kNearestNeighbor;
  if (name == "occupancy") return BaselineKind::kOccupancy;
  if (name == "curiosity") return BaselineKind::kCuriosity;
  throw ConfigError("unknown baseline '" + name + "' (random, nn, occupancy, curiosity)");
}

std::string baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::kRandom:
      return "random";
    case BaselineKind::kNearestNeighbor:
      return "nn";
    case BaselineKind::kOccupancy:
      return "occupancy";
    case BaselineKind::kCuriosity:
      return "curiosity";
  }
  return "?";
}

namespace {

class BaselineController : public Controller {
 public:
  BaselineController(BaselineKind kind, const Model& model, const NearestNeighborBank* bank)
      : Controller(model.cfg.assignment()), kind_(kind), model_(model), bank_(bank) {
    if (kind_ == BaselineKind::kNearestNeighbor && (!bank_ || bank_->size() == 0)) {
      throw DomainError("nearest-neighbour baseline needs a non-empty latent bank");
    }
  }
  std::string name() const override { return baseline_name(kind_); }

  std::array<int, 2> act(const Episode& ep, std::mt19937_64& rng) override {
    std::array<int, 2> a{};
    for (int i = 0; i < 2; ++i) {
      switch (kind_) {
        case BaselineKind::kRandom:
        case BaselineKind::kNearestNeighbor:
          a[i] = static_cast<int>(random_action(ep.t, ep.max_steps, rng));
          break;
        case BaselineKind::kOccupancy:
          a[i] = static_cast<int>(occupancy_action(ep.scene(), ep.poses, i));
          break;
        case BaselineKind::kCuriosity:
          a[i] = static_cast<int>(curiosity_action(ep.scene(), ep.poses[i], ep.coverage, rng));
          break;
      }
    }
    return a;
  }

  std::vector<double> predict(const PredictQuery& q) override {
    if (kind_ != BaselineKind::kNearestNeighbor) return model_.predict(q);
    const Tensor2 lat = model_.predictor.latent(model_.params, std::span(&q, 1));
    const LatentRecord& r = bank_->records()[bank_->nearest(lat.row_span(0))];
    return to_doubles(*r.rir);
  }

 private:
  BaselineKind kind_;
  const Model& model_;
  const NearestNeighborBank* bank_;
};

}  // namespace

std::unique_ptr<Controller> make_baseline(BaselineKind kind, const Model& model,
                                          const NearestNeighborBank* bank) {
  return std::make_unique<BaselineController>(kind, model, bank);
}

NearestNeighborBank build_nn_bank(const Model& model, std::span<const SceneBundle> scenes,
                                  int episodes_per_scene, std::uint64_t seed) {
  NearestNeighborBank bank;
  const RunConfig& cfg = model.cfg;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (int e = 0; e < episodes_per_scene; ++e) {
      std::mt19937_64 rng = stream_rng(seed, 3000 + s, static_cast<std::uint64_t>(e));
      Episode ep = start_episode(scenes[s], cfg, rng);
      while (true) {
        const ObsPair pair = observe_pair(ep, model.obs);
        const PredictQuery q = make_query(pair, ep.bank);
        const Tensor2 lat = model.predictor.latent(model.params, std::span(&q, 1));
        const auto row = lat.row_span(0);
        bank.add({ep.scene().spec().id, std::vector<double>(row.begin(), row.end()),
                  ep.poses[1].heading, ep.poses[1].node, ep.poses[0].node, forward_truth(ep)});
        ep.bank.push(pair);
        if (ep.done) break;
        move_agents(ep, static_cast<int>(random_action(ep.t, ep.max_steps, rng)),
                    static_cast<int>(random_action(ep.t, ep.max_steps, rng)));
      }
    }
  }
  return bank;
}

EpisodeOutcome run_episode(Controller& ctrl, const SceneBundle& bundle, const RunConfig& cfg,
                           std::mt19937_64& rng, std::uint64_t seed, int episode) {
  Episode ep = start_episode(bundle, cfg, rng);
  ctrl.begin(ep);
  const ObsConfig obs = cfg.obs_config();
  const PredictFn predict = [&](const PredictQuery& q) { return ctrl.predict(q); };
  double pe_sum = 0.0, rte_sum = 0.0, si_sum = 0.0;
  int steps = 0, rte_ok = 0, rte_skipped = 0;
  auto score = [&](const Measurement& m) {
    const std::vector<double> truth = to_doubles(*m.truth);
    pe_sum += m.delta;
    si_sum += sisdr(truth, m.prediction, cfg.si_projection);
    try {
      rte_sum += rte_ms(truth, m.prediction, cfg.sample_rate, 2);
      ++rte_ok;
    } catch (const MetricError&) {
      ++rte_skipped;
    }
    ++steps;
  };
  score(measure_step(ep, obs, cfg.stft, predict));
  ep.trace.back().shares = ctrl.assign(0.0);
  while (!ep.done) {
    const std::array<int, 2> a = ctrl.act(ep, rng);
    move_agents(ep, a[0], a[1]);
    const Measurement m = measure_step(ep, obs, cfg.stft, predict, a);
    score(m);
    ep.trace.back().shares = ctrl.assign(m.reward.total);
  }

  EpisodeOutcome out;
  EpisodeMetrics& em = out.metrics;
  em.scene_id = ep.scene().spec().id;
  em.seed = seed;
  em.episode = episode;
  em.cr = ep.coverage.ratio();
  em.pe = pe_sum / steps;
  em.pes = pes(em.pe);
  em.wcr = wcr(em.cr, em.pe, cfg.lambda);
  em.rte_ms = rte_ok > 0 ? rte_sum / rte_ok : 0.0;
  em.rte_skipped = rte_skipped;
  em.sisdr_db = si_sum / steps;
  em.steps = steps;
  out.trace.header = {ctrl.name(), ep.scene().spec(), seed, episode, cfg.max_steps};
  out.trace.steps = std::move(ep.trace);
  return out;
}

EvalReport evaluate(Controller& ctrl, std::span<const SceneBundle> scenes, const RunConfig& cfg,
                    std::span<const std::uint64_t> seeds, int episodes) {
  EvalReport rep;
  rep.label = ctrl.name();
  for (std::uint64_t seed : seeds) {
    for (const SceneBundle& b : scenes) {
      for (int e = 0; e < episodes; ++e) {
        std::mt19937_64 rng = stream_rng(seed, 1000 + b.seed, static_cast<std::uint64_t>(e));
        EpisodeOutcome o = run_episode(ctrl, b, cfg, rng, seed, e);
        rep.rows.push_back(std::move(o.metrics));
        rep.traces.push_back(std::move(o.trace));
      }
    }
  }
  rep.summary = summarize(rep.rows);
  return rep;
}

void write_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                       bool with_traces) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "metrics.csv");
    if (!f) throw FileError("cannot write " + (dir / "metrics.csv").string());
    write_metrics_csv(f, report.rows);
  }
  {
    std::ofstream f(dir / "metrics.json");
    if (!f) throw FileError("cannot write " + (dir / "metrics.json").string());
    write_metrics_json(f, report.summary, report.label);
  }
  if (!with_traces) return;
  for (const Trace& t : report.traces) {
    save_trace(dir / "traces" /
                   (t.header.scene.id + "_s" + std::to_string(t.header.seed) + "_e" +
                    std::to_string(t.header.episode) + ".jsonl"),
               t);
  }
}

}  // namespace duet
