#include "duet/train.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "duet/baselines.hpp"
#include "duet/errors.hpp"
#include "duet/optim.hpp"

namespace duet {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double combine_losses(const RunConfig& cfg, bool pretrain, double l_omega, double l_nu,
                      double l_xi, double l_sigma) {
  const double w_m = pretrain ? 0.0 : cfg.w_m;
  const double w_xi = pretrain ? 1.0 : cfg.w_xi;
  return w_m * (cfg.w_m_omega * l_omega + cfg.w_m_nu * l_nu) + w_xi * l_xi +
         cfg.w_sigma * l_sigma;
}

namespace {

struct PredRecord {
  PredictQuery query;
  std::shared_ptr<const BinauralRIR> truth;
};

struct Transition {
  std::array<Observation, 2> obs;
  std::array<std::vector<double>, 2> h_prev;
  std::array<std::vector<double>, 2> h_next;
  std::array<int, 2> actions{};
  std::array<double, 2> log_probs{};
  std::array<double, 2> values{};
  double reward = 0.0;
  std::array<double, 2> shares{};
  char done = 0;
};

struct Worker {
  std::mt19937_64 rng;
  std::optional<Episode> ep;
  std::array<std::vector<double>, 2> h;
  double episode_return = 0.0;

  std::vector<Transition> steps;
  std::vector<PredRecord> records;
  std::vector<double> finished;
  std::array<double, 2> bootstrap{};
  double delta_sum = 0.0;
  int delta_count = 0;
};

struct Settings {
  bool pretrain = false;
  double w_m = 0.0;
  double w_xi = 0.0;
  double w_sigma = 0.0;
  AssignmentMode mode;
};

void rollout(Worker& w, const Model& model, std::span<const SceneBundle> scenes,
             const Settings& st) {
  const RunConfig& cfg = model.cfg;
  const ObsConfig& obs = model.obs;
  const std::size_t hidden = static_cast<std::size_t>(cfg.hidden_size);
  const PredictFn predict = [&](const PredictQuery& q) { return model.predict(q); };
  w.steps.clear();
  w.records.clear();
  w.finished.clear();
  w.delta_sum = 0.0;
  w.delta_count = 0;
  auto keep = [&](const Measurement& m) {
    w.records.push_back({m.query, m.truth});
    w.records.push_back({swap_roles(m.query), m.reverse_truth});
    w.delta_sum += m.delta;
    ++w.delta_count;
  };

  for (int s = 0; s < cfg.num_steps; ++s) {
    if (!w.ep || w.ep->done) {
      const SceneBundle& b = scenes[w.rng() % scenes.size()];
      w.ep = start_episode(b, cfg, w.rng);
      w.h = {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
      w.episode_return = 0.0;
      keep(measure_step(*w.ep, obs, cfg.stft, predict));
    }
    Episode& ep = *w.ep;
    Transition tr;
    for (int i = 0; i < 2; ++i) {
      tr.obs[i] = observe(ep.scene(), ep.poses[i], ep.t, obs);
      tr.h_prev[i] = w.h[i];
      if (st.pretrain) {
        tr.actions[i] = static_cast<int>(random_action(ep.t, ep.max_steps, w.rng));
        tr.h_next[i] = w.h[i];
        continue;
      }
      const Observation* p = &tr.obs[i];
      const PolicyOutput out = model.agents[i].forward(
          model.params, stack_observations(std::span(&p, 1), obs), Tensor2::row(w.h[i]));
      const int a = sample_action(out.probs.row_span(0), w.rng);
      tr.actions[i] = a;
      tr.log_probs[i] = std::log(out.probs(0, a));
      tr.values[i] = out.values(0, 0);
      const auto hr = out.hidden.row_span(0);
      tr.h_next[i].assign(hr.begin(), hr.end());
    }
    move_agents(ep, tr.actions[0], tr.actions[1]);
    const Measurement m = measure_step(ep, obs, cfg.stft, predict, tr.actions);
    keep(m);
    tr.reward = m.reward.total;
    AssignedReward sh;
    if (st.mode.kind == AssignmentKind::kLearned && !st.pretrain) {
      const Tensor2 probs = model.head.forward(model.params, Tensor2::row(tr.h_next[0]),
                                               Tensor2::row(tr.h_next[1]),
                                               std::span(&tr.reward, 1));
      sh = assign_rewards(st.mode, tr.reward, {probs(0, 0), probs(0, 1)});
    } else {
      sh = assign_rewards(st.mode, tr.reward);
    }
    ep.trace.back().shares = sh;
    tr.shares = {sh.r_omega, sh.r_nu};
    tr.done = ep.done ? 1 : 0;
    w.episode_return += tr.reward;
    if (ep.done) w.finished.push_back(w.episode_return);
    w.h = tr.h_next;
    w.steps.push_back(std::move(tr));
  }

  w.bootstrap = {0.0, 0.0};
  if (!st.pretrain && !w.ep->done) {
    for (int i = 0; i < 2; ++i) {
      const Observation o = observe(w.ep->scene(), w.ep->poses[i], w.ep->t, obs);
      const Observation* p = &o;
      w.bootstrap[i] = model.agents[i]
                           .forward(model.params, stack_observations(std::span(&p, 1), obs),
                                    Tensor2::row(w.h[i]))
                           .values(0, 0);
    }
  }
}

struct Row {
  const Transition* tr;
  std::array<double, 2> adv;
  std::array<double, 2> ret;
};

PpoBatch make_batch(std::span<const Row* const> rows, int agent, const ObsConfig& obs,
                    std::size_t hidden) {
  PpoBatch b;
  std::vector<const Observation*> ptrs;
  ptrs.reserve(rows.size());
  b.h_prev = Tensor2(rows.size(), hidden);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Transition& t = *rows[r]->tr;
    ptrs.push_back(&t.obs[agent]);
    std::copy(t.h_prev[agent].begin(), t.h_prev[agent].end(), b.h_prev.row_span(r).begin());
    b.actions.push_back(t.actions[agent]);
    b.old_log_probs.push_back(t.log_probs[agent]);
    b.advantages.push_back(rows[r]->adv[agent]);
    b.returns.push_back(rows[r]->ret[agent]);
  }
  b.obs = stack_observations(ptrs, obs);
  return b;
}

struct PredictorTerm {
  double loss = 0.0;
  double mse = 0.0;
};

PredictorTerm predictor_term(Model& model, std::span<const PredRecord* const> recs, double weight) {
  PredictorTerm out;
  if (recs.empty()) return out;
  std::vector<PredictQuery> queries;
  queries.reserve(recs.size());
  for (const PredRecord* r : recs) queries.push_back(r->query);
  RirPredictor::Cache cache;
  const bool grad = weight != 0.0;
  const Tensor2 pred = model.predictor.forward(model.params, queries, grad ? &cache : nullptr);
  Tensor2 dpred(pred.rows(), pred.cols());
  const double n = static_cast<double>(recs.size());
  std::vector<double> g;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const std::vector<double> truth = to_doubles(*recs[i]->truth);
    const RirLoss l = rir_loss(truth, pred.row_span(i), model.cfg.w_mse, model.cfg.stft,
                               grad ? &g : nullptr);
    out.loss += l.loss;
    out.mse += l.mse;
    if (grad) {
      auto d = dpred.row_span(i);
      for (std::size_t k = 0; k < d.size(); ++k) d[k] = g[k] * weight / n;
    }
  }
  if (grad) model.predictor.backward(model.params, cache, dpred);
  out.loss /= n;
  out.mse /= n;
  return out;
}

double sigma_term(Model& model, std::span<const Row* const> rows, const AssignmentMode& mode,
                  double weight) {
  if (rows.empty() || mode.kind != AssignmentKind::kLearned) return 0.0;
  const std::size_t hidden = static_cast<std::size_t>(model.cfg.hidden_size);
  Tensor2 so(rows.size(), hidden), sn(rows.size(), hidden);
  std::vector<double> rewards;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Transition& t = *rows[r]->tr;
    std::copy(t.h_next[0].begin(), t.h_next[0].end(), so.row_span(r).begin());
    std::copy(t.h_next[1].begin(), t.h_next[1].end(), sn.row_span(r).begin());
    rewards.push_back(t.reward);
  }
  AssignmentHead::Cache cache;
  const Tensor2 probs = model.head.forward(model.params, so, sn, rewards, &cache);
  Tensor2 dprobs(probs.rows(), probs.cols());
  const double n = static_cast<double>(rows.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double rr = rewards[r];
    const AssignedReward a = assign_rewards(mode, rr, {probs(r, 0), probs(r, 1)});
    loss += a.loss_sigma;
    // residual r - r (rho_omega + rho_nu) as a function of the head outputs
    const double residual = rr - rr * (a.rho_omega + a.rho_nu);
    for (int k = 0; k < 2; ++k) dprobs(r, k) = weight * 2.0 * residual * (-rr * mode.rho) / n;
  }
  if (weight != 0.0) model.head.backward(model.params, cache, dprobs);
  return loss / n;
}

std::filesystem::path dump_batch(const std::filesystem::path& dir, int update, int epoch,
                                 double loss, double lo, double ln, double lxi, double ls,
                                 std::span<const Row> rows) {
  nlohmann::ordered_json j;
  j["update"] = update;
  j["epoch"] = epoch;
  j["loss"] = std::isfinite(loss) ? nlohmann::json(loss) : nlohmann::json(std::to_string(loss));
  auto num = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v));
  };
  j["loss_m_omega"] = num(lo);
  j["loss_m_nu"] = num(ln);
  j["loss_xi"] = num(lxi);
  j["loss_sigma"] = num(ls);
  auto& arr = j["rows"] = nlohmann::json::array();
  for (const Row& r : rows) {
    const Transition& t = *r.tr;
    arr.push_back({{"actions", t.actions},
                   {"log_probs", {num(t.log_probs[0]), num(t.log_probs[1])}},
                   {"values", {num(t.values[0]), num(t.values[1])}},
                   {"reward", num(t.reward)},
                   {"shares", {num(t.shares[0]), num(t.shares[1])}},
                   {"advantages", {num(r.adv[0]), num(r.adv[1])}},
                   {"returns", {num(r.ret[0]), num(r.ret[1])}},
                   {"done", t.done != 0}});
  }
  const std::filesystem::path base = dir.empty() ? std::filesystem::temp_directory_path() : dir;
  std::filesystem::create_directories(base);
  const auto path = base / ("nonfinite_batch_" + std::to_string(update) + ".json");
  std::ofstream f(path);
  f << j.dump(1) << "\n";
  return path;
}

}  // namespace

TrainResult train(Model& model, std::span<const SceneBundle> scenes, const TrainOptions& opt) {
  const RunConfig& cfg = model.cfg;
  cfg.validate();
  if (scenes.empty()) throw ConfigError("training needs at least one scene");
  if (cfg.optimizer != "adam") throw ConfigError("unsupported optimizer " + cfg.optimizer);

  Settings st;
  st.pretrain = opt.pretrain;
  st.w_m = opt.pretrain ? 0.0 : cfg.w_m;
  st.w_xi = opt.pretrain ? 1.0 : cfg.w_xi;
  st.w_sigma = opt.pretrain ? 0.0 : cfg.w_sigma;
  st.mode = cfg.assignment();
  const bool learned = st.mode.kind == AssignmentKind::kLearned && !opt.pretrain;

  const std::size_t hidden = static_cast<std::size_t>(cfg.hidden_size);
  std::vector<Worker> workers(static_cast<std::size_t>(cfg.num_processes));
  for (std::size_t k = 0; k < workers.size(); ++k) workers[k].rng = stream_rng(cfg.seed, 1, k);
  std::mt19937_64 shuffle_rng = stream_rng(cfg.seed, 2);

  const std::array<BlockFilter, 4> groups{prefix_filter({std::string(kAgentPrefix[0]) + "."}),
                                          prefix_filter({std::string(kAgentPrefix[1]) + "."}),
                                          Model::predictor_filter(), Model::head_filter()};
  const std::array<bool, 4> active{st.w_m > 0.0 && cfg.w_m_omega > 0.0,
                                   st.w_m > 0.0 && cfg.w_m_nu > 0.0, st.w_xi > 0.0,
                                   learned && st.w_sigma > 0.0};
  const BlockFilter update_filter = [&](std::string_view name) {
    for (int g = 0; g < 4; ++g) {
      if (active[g] && groups[g](name)) return true;
    }
    return false;
  };

  TrainResult result;
  std::deque<double> window;
  for (int u = 0; u < cfg.num_updates; ++u) {
    const auto t0 = std::chrono::steady_clock::now();
    const double frac = 1.0 - static_cast<double>(u) / cfg.num_updates;
    UpdateLog log;
    log.update = u + 1;
    log.learning_rate = cfg.linear_lr_decay ? cfg.learning_rate * frac : cfg.learning_rate;
    log.clip = cfg.linear_clip_decay ? cfg.clip_param * frac : cfg.clip_param;

    if (cfg.threads > 1 && workers.size() > 1) {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.threads));
      for (int th = 0; th < cfg.threads; ++th) {
        pool.emplace_back([&, th] {
          try {
            for (std::size_t k = th; k < workers.size(); k += cfg.threads) {
              rollout(workers[k], model, scenes, st);
            }
          } catch (...) {
            errors[th] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    } else {
      for (Worker& w : workers) rollout(w, model, scenes, st);
    }

    double delta_sum = 0.0;
    int delta_count = 0;
    std::vector<Row> rows;
    std::vector<const PredRecord*> recs;
    for (Worker& w : workers) {
      for (double r : w.finished) {
        result.episode_returns.push_back(r);
        window.push_back(r);
        if (static_cast<int>(window.size()) > cfg.reward_window) window.pop_front();
      }
      delta_sum += w.delta_sum;
      delta_count += w.delta_count;
      for (const PredRecord& r : w.records) recs.push_back(&r);
      const std::size_t first = rows.size();
      for (const Transition& t : w.steps) rows.push_back({&t, {}, {}});
      if (st.w_m <= 0.0) continue;
      for (int i = 0; i < 2; ++i) {
        std::vector<double> rewards, values;
        std::vector<char> done;
        for (const Transition& t : w.steps) {
          rewards.push_back(t.shares[i]);
          values.push_back(t.values[i]);
          done.push_back(t.done);
        }
        values.push_back(w.bootstrap[i]);
        const GaeResult g = compute_gae(rewards, values, done, cfg.gamma,
                                        cfg.use_gae ? cfg.tau : 1.0, cfg.advantage);
        for (std::size_t k = 0; k < w.steps.size(); ++k) {
          rows[first + k].adv[i] = g.advantages[k];
          rows[first + k].ret[i] = g.returns[k];
        }
      }
    }
    if (st.w_m > 0.0) {
      for (int i = 0; i < 2; ++i) {
        std::vector<double> adv;
        for (const Row& r : rows) adv.push_back(r.adv[i]);
        normalize_advantages(adv);
        for (std::size_t k = 0; k < rows.size(); ++k) rows[k].adv[i] = adv[k];
      }
    }
    log.delta = delta_count > 0 ? delta_sum / delta_count : 0.0;
    log.episodes = static_cast<int>(result.episode_returns.size());
    if (!window.empty()) {
      log.reward_window = std::accumulate(window.begin(), window.end(), 0.0) / window.size();
    }

    const PpoConfig ppo{log.clip, cfg.entropy_coef, cfg.value_loss_coef};
    const OptimConfig oc{log.learning_rate, cfg.max_grad_norm};
    const int nmb = cfg.num_mini_batch;
    int passes = 0;
    std::vector<std::size_t> row_order(rows.size()), rec_order(recs.size());
    std::iota(row_order.begin(), row_order.end(), 0);
    std::iota(rec_order.begin(), rec_order.end(), 0);
    // predictor records are dealt out across all passes of the update, so
    // every record enters L_xi once
    std::shuffle(rec_order.begin(), rec_order.end(), shuffle_rng);
    const std::size_t rec_chunks = static_cast<std::size_t>(cfg.ppo_epoch) * nmb;
    for (int e = 0; e < cfg.ppo_epoch; ++e) {
      if (nmb > 1) std::shuffle(row_order.begin(), row_order.end(), shuffle_rng);
      for (int mb = 0; mb < nmb; ++mb) {
        std::vector<const Row*> mrows;
        std::vector<const PredRecord*> mrecs;
        for (std::size_t k = mb; k < row_order.size(); k += nmb) mrows.push_back(&rows[row_order[k]]);
        const std::size_t chunk = static_cast<std::size_t>(e) * nmb + mb;
        for (std::size_t k = chunk; k < rec_order.size(); k += rec_chunks) {
          mrecs.push_back(recs[rec_order[k]]);
        }

        model.params.zero_grad();
        std::array<PpoStats, 2> ps{};
        const double wa[2] = {cfg.w_m_omega, cfg.w_m_nu};
        if (st.w_m > 0.0 && !mrows.empty()) {
          for (int i = 0; i < 2; ++i) {
            ps[i] = ppo_loss(model.params, model.agents[i], make_batch(mrows, i, model.obs, hidden),
                             ppo, st.w_m * wa[i]);
          }
        }
        const PredictorTerm pt = predictor_term(model, mrecs, st.w_xi);
        const double ls = learned ? sigma_term(model, mrows, st.mode, st.w_sigma) : 0.0;
        const double total =
            combine_losses(cfg, opt.pretrain, ps[0].loss, ps[1].loss, pt.loss, ls);
        if (!std::isfinite(total)) {
          const auto path = dump_batch(opt.out_dir, u + 1, e, total, ps[0].loss, ps[1].loss,
                                       pt.loss, ls, rows);
          throw TrainingError("non-finite loss at update " + std::to_string(u + 1) +
                              "; batch dumped to " + path.string());
        }
        for (int g = 0; g < 4; ++g) {
          if (active[g]) clip_global_norm(model.params, cfg.max_grad_norm, groups[g]);
        }
        adam_update(model.params, oc, update_filter);

        ++passes;
        log.loss += total;
        log.loss_m_omega += ps[0].loss;
        log.loss_m_nu += ps[1].loss;
        log.loss_xi += pt.loss;
        log.loss_sigma += ls;
        log.mse += pt.mse;
        for (int i = 0; i < 2; ++i) {
          log.ppo[i].loss += ps[i].loss;
          log.ppo[i].policy_loss += ps[i].policy_loss;
          log.ppo[i].value_loss += ps[i].value_loss;
          log.ppo[i].entropy += ps[i].entropy;
          log.ppo[i].clip_fraction += ps[i].clip_fraction;
          log.ppo[i].approx_kl += ps[i].approx_kl;
        }
      }
    }
    model.params.zero_grad();
    if (passes > 0) {
      const double n = passes;
      log.loss /= n;
      log.loss_m_omega /= n;
      log.loss_m_nu /= n;
      log.loss_xi /= n;
      log.loss_sigma /= n;
      log.mse /= n;
      for (auto& p : log.ppo) {
        p.loss /= n;
        p.policy_loss /= n;
        p.value_loss /= n;
        p.entropy /= n;
        p.clip_fraction /= n;
        p.approx_kl /= n;
      }
    }
    log.loss_m = cfg.w_m_omega * log.loss_m_omega + cfg.w_m_nu * log.loss_m_nu;
    log.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (opt.on_update) opt.on_update(log);

    if (!opt.out_dir.empty() && cfg.checkpoint_interval > 0 &&
        (u + 1) % cfg.checkpoint_interval == 0) {
      save_model(opt.out_dir / ("checkpoint_" + std::to_string(u + 1) + ".bin"), model);
    }
  }

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    result.checkpoint = opt.out_dir / "model.bin";
    save_model(result.checkpoint, model);
    std::ofstream f(opt.out_dir / "train_log.csv");
    if (!f) throw FileError("cannot write training log in " + opt.out_dir.string());
    write_train_log_csv(f, result.log);
  }
  return result;
}

TrainResult pretrain_generator(Model& model, std::span<const SceneBundle> scenes,
                               TrainOptions opt) {
  opt.pretrain = true;
  return train(model, scenes, opt);
}

void write_train_log_csv(std::ostream& out, std::span<const UpdateLog> log) {
  out << "update,learning_rate,clip,loss,loss_m,loss_m_omega,loss_m_nu,loss_xi,loss_sigma,"
         "policy_loss_omega,value_loss_omega,entropy_omega,policy_loss_nu,value_loss_nu,"
         "entropy_nu,mse,pe,reward_window,episodes\n";
  out << std::setprecision(17);
  for (const UpdateLog& l : log) {
    out << l.update << ',' << l.learning_rate << ',' << l.clip << ',' << l.loss << ','
        << l.loss_m << ',' << l.loss_m_omega << ',' << l.loss_m_nu << ',' << l.loss_xi << ','
        << l.loss_sigma << ',' << l.ppo[0].policy_loss << ',' << l.ppo[0].value_loss << ','
        << l.ppo[0].entropy << ',' << l.ppo[1].policy_loss << ',' << l.ppo[1].value_loss << ','
        << l.ppo[1].entropy << ',' << l.mse << ',' << l.delta << ',' << l.reward_window << ','
        << l.episodes << '\n';
  }
}

}  // namespace duet
