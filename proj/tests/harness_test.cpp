#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "duet/checkpoint.hpp"
#include "duet/config.hpp"
#include "duet/env.hpp"
#include "duet/errors.hpp"
#include "duet/evaluate.hpp"
#include "duet/metrics.hpp"
#include "duet/model.hpp"
#include "duet/trace.hpp"
#include "duet/train.hpp"

namespace duet {
namespace {

namespace fs = std::filesystem;

RunConfig tiny() {
  RunConfig c;
  c.num_updates = 1;
  c.num_steps = 8;
  c.num_processes = 2;
  c.ppo_epoch = 2;
  c.max_steps = 6;
  c.scene_width = 1.5;
  c.scene_depth = 1.5;
  c.train_scenes = {0, 1};
  c.val_scenes = {10};
  c.test_scenes = {20};
  c.patch_radius = 1;
  c.hidden_size = 8;
  c.generator_hidden = 8;
  c.rir_length = 512;
  c.stft = {256, 64, 128, WindowKind::kHamming};
  c.eval_seeds = {0, 1};
  c.eval_episodes = 2;
  c.checkpoint_interval = 1;
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("duet_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("0-3,7"), (std::vector<std::uint64_t>{0, 1, 2, 3, 7}));
  EXPECT_EQ(format_seed_list(parse_seed_list("0-3,7")), "0-3,7");
  EXPECT_THROW(parse_seed_list("3-1"), ConfigError);
  EXPECT_THROW(parse_seed_list("a"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  RunConfig c = RunConfig::paper_profile();
  c.rho = 0.0;
  c.learned_assignment = true;
  c.w_sigma = 1.0 / 3;
  c.learning_rate = 1.0 / 7;
  std::ostringstream a;
  write_run_config(a, c);
  std::istringstream in(a.str());
  const RunConfig back = parse_run_config(in);
  std::ostringstream b;
  write_run_config(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.max_steps, 250);
  EXPECT_EQ(back.rir_length, 16000u);
}

TEST(Config, RejectsUnknownKeysAndOverlappingSplits) {
  std::istringstream bad("number of updates = 3\nwarp drive = 1\n");
  EXPECT_THROW(parse_run_config(bad), ConfigError);
  std::istringstream overlap("train scenes = 0-5\ntest scenes = 5-6\n");
  EXPECT_THROW(parse_run_config(overlap), ConfigError);
  std::istringstream ok("# comment\nnumber of updates = 3  # trailing\nrho = 0.25\n");
  const RunConfig c = parse_run_config(ok);
  EXPECT_EQ(c.num_updates, 3);
  EXPECT_EQ(c.assignment().kind, AssignmentKind::kFixed);
  std::istringstream malformed("gamma = fast\n");
  EXPECT_THROW(parse_run_config(malformed), ConfigError);
}

TEST(Env, StepZeroRewardAndEpisodeLength) {
  const RunConfig c = tiny();
  const auto scenes = make_scenes(c.train_scenes, c);
  std::mt19937_64 rng(1);
  const PredictFn zero = [&](const PredictQuery&) {
    return std::vector<double>(2 * c.rir_length, 0.0);
  };
  Episode ep = start_episode(scenes[0], c, rng);
  const Measurement m0 = measure_step(ep, c.obs_config(), c.stft, zero);
  EXPECT_EQ(m0.reward.total, 0.0);
  EXPECT_EQ(ep.bank.pairs().size(), 1u);
  int moves = 0;
  while (!ep.done) {
    move_agents(ep, 0, 1);
    measure_step(ep, c.obs_config(), c.stft, zero, {0, 1});
    ++moves;
  }
  EXPECT_EQ(moves, c.max_steps - 1);
  EXPECT_EQ(static_cast<int>(ep.trace.size()), c.max_steps);
  EXPECT_EQ(ep.bank.pairs().size(), c.kappa);
  EXPECT_THROW(move_agents(ep, 0, 0), DomainError);
}

TEST(Env, BothStoppedEndsEpisode) {
  const RunConfig c = tiny();
  const auto scenes = make_scenes(c.train_scenes, c);
  std::mt19937_64 rng(2);
  Episode ep = start_episode(scenes[1], c, rng);
  move_agents(ep, 3, 0);
  EXPECT_FALSE(ep.done);
  move_agents(ep, 3, 3);
  EXPECT_TRUE(ep.done);
}

TEST(Env, DirectionsSwapRoles) {
  const RunConfig c = tiny();
  const auto scenes = make_scenes(c.train_scenes, c);
  std::mt19937_64 rng(3);
  Episode ep = start_episode(scenes[0], c, rng);
  const auto fwd = forward_truth(ep);
  const auto rev = reverse_truth(ep);
  EXPECT_EQ(fwd, scenes[0].rirs->get(ep.poses[0].node, ep.poses[1].node, ep.poses[1].heading));
  EXPECT_EQ(rev, scenes[0].rirs->get(ep.poses[1].node, ep.poses[0].node, ep.poses[0].heading));
}

TEST(Trace, JsonlRoundTripIsExact) {
  Trace t;
  t.header.model = "m";
  t.header.scene = random_scene_spec(5, 3.0, 3.0, 0.5);
  t.header.seed = 9;
  t.header.episode = 2;
  t.header.max_steps = 4;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 4; ++i) {
    StepRecord r;
    r.t = i;
    r.poses = {AgentPose{i, 90, false}, AgentPose{i + 1, 270, i == 3}};
    r.actions = {i == 0 ? -1 : 1, i == 0 ? -1 : 3};
    r.reward = {u(rng), u(rng), u(rng), u(rng), u(rng)};
    r.shares.r_omega = u(rng);
    r.shares.r_nu = u(rng);
    r.shares.rho_omega = u(rng);
    r.shares.rho_nu = u(rng);
    r.pe = u(rng);
    r.zeta = u(rng);
    r.psi = u(rng);
    r.phi = 1.0 / 3.0 + i;
    t.steps.push_back(r);
  }
  std::stringstream s;
  write_trace(s, t);
  const Trace b = read_trace(s);
  EXPECT_EQ(b.header.scene, t.header.scene);
  EXPECT_EQ(b.header.model, "m");
  ASSERT_EQ(b.steps.size(), t.steps.size());
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    EXPECT_EQ(b.steps[i].poses, t.steps[i].poses);
    EXPECT_EQ(b.steps[i].actions, t.steps[i].actions);
    EXPECT_EQ(b.steps[i].reward.total, t.steps[i].reward.total);
    EXPECT_EQ(b.steps[i].reward.r_psi, t.steps[i].reward.r_psi);
    EXPECT_EQ(b.steps[i].shares.r_nu, t.steps[i].shares.r_nu);
    EXPECT_EQ(b.steps[i].pe, t.steps[i].pe);
    EXPECT_EQ(b.steps[i].phi, t.steps[i].phi);
  }
  std::istringstream junk("{\"type\":\"header\"\n");
  EXPECT_THROW(read_trace(junk), FileError);
  EXPECT_THROW(load_trace("/nonexistent/trace.jsonl"), FileError);
}

TEST(Model, SaveLoadRoundTrip) {
  const RunConfig c = tiny();
  Model m(c);
  m.init(11);
  const fs::path dir = scratch("model");
  save_model(dir / "m.bin", m);
  const Model back = load_model(dir / "m.bin");
  for (const auto& [name, b] : m.params.blocks()) EXPECT_EQ(back.params.value(name), b.value);
  RunConfig other = c;
  other.hidden_size = 12;
  Model wrong(other);
  wrong.init(0);
  EXPECT_THROW(init_from_checkpoint(wrong, dir / "m.bin"), ConfigError);
}

class TrainFixture : public ::testing::Test {
 protected:
  RunConfig cfg = tiny();
  std::vector<SceneBundle> scenes = make_scenes(cfg.train_scenes, cfg);
};

TEST_F(TrainFixture, SmokeRunWritesLoadableCheckpoint) {
  Model m(cfg);
  m.init(cfg.seed);
  TrainOptions opt;
  opt.out_dir = scratch("smoke");
  const TrainResult r = train(m, scenes, opt);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_TRUE(fs::exists(opt.out_dir / "checkpoint_1.bin"));
  EXPECT_TRUE(fs::exists(opt.out_dir / "train_log.csv"));
  const Model back = load_model(r.checkpoint);
  for (const auto& [name, b] : m.params.blocks()) EXPECT_EQ(back.params.value(name), b.value);
}

TEST_F(TrainFixture, ZeroPredictorWeightLeavesGeneratorUntouched) {
  cfg.w_xi = 0.0;
  Model m(cfg);
  m.init(1);
  const ParamStore before = m.params;
  train(m, scenes);
  bool policy_moved = false;
  for (const auto& [name, b] : m.params.blocks()) {
    if (Model::predictor_filter()(name)) {
      EXPECT_EQ(b.value, before.value(name)) << name;
    } else if (Model::policy_filter()(name) && !(b.value == before.value(name))) {
      policy_moved = true;
    }
  }
  EXPECT_TRUE(policy_moved);
}

TEST_F(TrainFixture, PretrainMovesOnlyThePredictor) {
  Model m(cfg);
  m.init(2);
  const ParamStore before = m.params;
  TrainOptions opt;
  opt.out_dir = scratch("pretrain");
  cfg.num_updates = 2;
  m.cfg.num_updates = 2;
  const TrainResult r = pretrain_generator(m, scenes, opt);
  bool pred_moved = false;
  for (const auto& [name, b] : m.params.blocks()) {
    if (Model::predictor_filter()(name)) {
      pred_moved = pred_moved || !(b.value == before.value(name));
    } else {
      EXPECT_EQ(b.value, before.value(name)) << name;
    }
  }
  EXPECT_TRUE(pred_moved);
  // the pretrained weights initialize a training run
  Model next(cfg);
  next.init(99);
  init_from_checkpoint(next, r.checkpoint);
  for (const auto& [name, b] : m.params.blocks()) EXPECT_EQ(next.params.value(name), b.value);
  EXPECT_NO_THROW(train(next, scenes));
}

TEST_F(TrainFixture, LoggedLossMatchesComponents) {
  for (bool learned : {false, true}) {
    RunConfig c = cfg;
    c.num_updates = 3;
    if (learned) {
      c.rho = 0.0;
      c.learned_assignment = true;
      c.w_m = c.w_xi = c.w_sigma = 1.0 / 3;
    }
    Model m(c);
    m.init(3);
    const TrainResult r = train(m, scenes);
    for (const UpdateLog& l : r.log) {
      const double again = c.w_m * (c.w_m_omega * l.loss_m_omega + c.w_m_nu * l.loss_m_nu) +
                           c.w_xi * l.loss_xi + c.w_sigma * l.loss_sigma;
      EXPECT_NEAR(l.loss, again, 1e-9);
      EXPECT_NEAR(l.loss_m, c.w_m_omega * l.loss_m_omega + c.w_m_nu * l.loss_m_nu, 1e-12);
      EXPECT_TRUE(std::isfinite(l.loss));
    }
  }
}

TEST_F(TrainFixture, RewardWindowTracksEpisodeReturns) {
  cfg.num_updates = 4;
  cfg.reward_window = 3;
  Model m(cfg);
  m.init(4);
  const TrainResult r = train(m, scenes);
  ASSERT_GE(r.episode_returns.size(), 3u);
  const auto& rets = r.episode_returns;
  const UpdateLog& last = r.log.back();
  ASSERT_EQ(static_cast<std::size_t>(last.episodes), rets.size());
  const double expect = (rets[rets.size() - 1] + rets[rets.size() - 2] + rets[rets.size() - 3]) / 3;
  EXPECT_NEAR(last.reward_window, expect, 1e-12);
}

TEST_F(TrainFixture, NonFiniteLossDumpsBatch) {
  Model m(cfg);
  m.init(5);
  m.params.value("agent0.critic.b")[0] = std::nan("");
  TrainOptions opt;
  opt.out_dir = scratch("nan");
  EXPECT_THROW(train(m, scenes, opt), TrainingError);
  EXPECT_TRUE(fs::exists(opt.out_dir / "nonfinite_batch_1.json"));
}

TEST_F(TrainFixture, SameSeedSameBytes) {
  std::string ckpt[2], log[2];
  for (int k = 0; k < 2; ++k) {
    Model m(cfg);
    m.init(cfg.seed);
    TrainOptions opt;
    opt.out_dir = scratch("det" + std::to_string(k));
    const TrainResult r = train(m, scenes, opt);
    ckpt[k] = slurp(r.checkpoint);
    log[k] = slurp(opt.out_dir / "train_log.csv");
  }
  EXPECT_EQ(ckpt[0], ckpt[1]);
  EXPECT_EQ(log[0], log[1]);
  RunConfig threaded = cfg;
  threaded.threads = 2;
  Model m(threaded);
  m.init(threaded.seed);
  TrainOptions opt;
  opt.out_dir = scratch("det_threads");
  const TrainResult r = train(m, scenes, opt);
  EXPECT_EQ(slurp(r.checkpoint).size(), ckpt[0].size());
  EXPECT_EQ(slurp(opt.out_dir / "train_log.csv"), log[0]);
}

TEST_F(TrainFixture, EvaluationRowsReplayAndRepeat) {
  Model m(cfg);
  m.init(6);
  const auto test = make_scenes(cfg.test_scenes, cfg);
  auto random = make_baseline(BaselineKind::kRandom, m);
  const EvalReport a = evaluate(*random, test, cfg, cfg.eval_seeds, cfg.eval_episodes);
  const EvalReport b = evaluate(*random, test, cfg, cfg.eval_seeds, cfg.eval_episodes);
  EXPECT_EQ(a.rows.size(), test.size() * cfg.eval_seeds.size() * cfg.eval_episodes);
  const fs::path da = scratch("eval_a"), db = scratch("eval_b");
  write_eval_report(da, a);
  write_eval_report(db, b);
  EXPECT_EQ(slurp(da / "metrics.csv"), slurp(db / "metrics.csv"));
  EXPECT_EQ(slurp(da / "metrics.json"), slurp(db / "metrics.json"));
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    const Trace& t = a.traces[i];
    EXPECT_TRUE(trace_replays(t, cfg.alphas));
    std::vector<int> nodes;
    for (const StepRecord& s : t.steps) {
      nodes.push_back(s.poses[0].node);
      nodes.push_back(s.poses[1].node);
    }
    const NavScene sc = build_scene(t.header.scene);
    EXPECT_EQ(coverage_rate(nodes, sc.node_count()), a.rows[i].cr);
    EXPECT_EQ(t.steps.front().reward.total, 0.0);
  }
  // a tampered trace no longer replays
  Trace bad = a.traces[0];
  bad.steps.back().reward.r_phi += 1e-9;
  EXPECT_FALSE(trace_replays(bad, cfg.alphas));
}

TEST_F(TrainFixture, LearnedSharesConserveRewardExactly) {
  cfg.rho = 0.0;
  cfg.learned_assignment = true;
  cfg.w_sigma = 1.0 / 3;
  Model m(cfg);
  m.init(7);
  train(m, scenes);
  ModelController mc(m);
  const auto test = make_scenes(cfg.test_scenes, cfg);
  const EvalReport r = evaluate(mc, test, cfg, cfg.eval_seeds, 3);
  int steps = 0;
  for (const Trace& t : r.traces) {
    for (const StepRecord& s : t.steps) {
      EXPECT_EQ(s.shares.r_omega + s.shares.r_nu, s.reward.total);
      ++steps;
    }
  }
  EXPECT_GT(steps, 0);
}

TEST_F(TrainFixture, BaselinesRunAndNearestNeighbourUsesStoredRirs) {
  Model m(cfg);
  m.init(8);
  const NearestNeighborBank bank = build_nn_bank(m, scenes, 1, 0);
  EXPECT_GT(bank.size(), 0u);
  const auto test = make_scenes(cfg.test_scenes, cfg);
  for (BaselineKind k : {BaselineKind::kRandom, BaselineKind::kNearestNeighbor,
                         BaselineKind::kOccupancy, BaselineKind::kCuriosity}) {
    auto c = make_baseline(k, m, &bank);
    EXPECT_EQ(parse_baseline(c->name()), k);
    const EvalReport r = evaluate(*c, test, cfg, cfg.eval_seeds, 1);
    for (const auto& row : r.rows) {
      EXPECT_GE(row.cr, 0.0);
      EXPECT_LE(row.cr, 1.0);
      EXPECT_GE(row.pe, 0.0);
    }
  }
  EXPECT_THROW(make_baseline(BaselineKind::kNearestNeighbor, m, nullptr), DomainError);
  EXPECT_THROW(parse_baseline("oracle"), ConfigError);
}

}  // namespace
}  // namespace duet
