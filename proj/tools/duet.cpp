// duet command-line front end.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "duet/acoustics.hpp"
#include "duet/analysis.hpp"
#include "duet/errors.hpp"
#include "duet/evaluate.hpp"
#include "duet/metrics.hpp"
#include "duet/report.hpp"
#include "duet/train.hpp"

namespace fs = std::filesystem;
using namespace duet;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  bool paper_profile = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

fs::path data_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("DUET_DATA_ROOT"); root && *root) return fs::path(root) / path;
  }
  return path;
}

RunConfig apply_overrides(RunConfig cfg, const Common& c) {
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const Common& c) {
  RunConfig base = c.paper_profile ? RunConfig::paper_profile() : RunConfig{};
  if (!c.config.empty()) base = load_run_config(data_path(c.config).string(), base);
  return apply_overrides(base, c);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value run configuration");
  app->add_option("--set", c.sets, "override one setting, e.g. --set \"max steps=32\"");
  app->add_flag("--paper-profile", c.paper_profile, "full-scale settings");
  app->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "the single source of randomness");
}

std::vector<SceneBundle> split(const RunConfig& cfg, const std::string& name) {
  if (name == "train") return make_scenes(cfg.train_scenes, cfg);
  if (name == "val") return make_scenes(cfg.val_scenes, cfg);
  if (name == "test") return make_scenes(cfg.test_scenes, cfg);
  throw ConfigError("unknown split '" + name + "' (train, val, test)");
}

void print_summary(const EvalReport& r) {
  const MetricsSummary& s = r.summary;
  std::cout << r.label << ": episodes " << s.episodes << ", WCR " << s.wcr.mean << " +- "
            << s.wcr.std << ", PE " << s.pe.mean << " +- " << s.pe.std << ", CR " << s.cr.mean
            << " +- " << s.cr.std << ", RTE " << s.rte_ms.mean << " ms, SiSDR " << s.sisdr_db.mean
            << " dB\n";
}

std::function<void(const UpdateLog&)> progress(int every) {
  return [every](const UpdateLog& l) {
    if (every > 0 && (l.update % every == 0 || l.update == 1)) {
      std::cout << "update " << l.update << " loss " << l.loss << " L_xi " << l.loss_xi
                << " PE " << l.delta << " reward(window) " << l.reward_window << " ("
                << l.seconds << " s)\n"
                << std::flush;
    }
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-agent acoustic exploration: training, evaluation and analysis"};
  app.require_subcommand(1);
  Common common;

  // scene
  auto* scene = app.add_subcommand("scene", "scene specifications");
  scene->require_subcommand(1);
  std::uint64_t scene_seed = 0;
  std::string spec_path, out_path;
  auto* scene_gen = scene->add_subcommand("gen", "write a random scene specification");
  add_common(scene_gen, common);
  scene_gen->add_option("--scene-seed", scene_seed)->required();
  scene_gen->add_option("--out", out_path)->required();
  auto* scene_info = scene->add_subcommand("info", "describe a scene");
  add_common(scene_info, common);
  scene_info->add_option("--spec", spec_path);
  scene_info->add_option("--scene-seed", scene_seed);

  // rir
  auto* rir = app.add_subcommand("rir", "ground-truth impulse responses");
  rir->require_subcommand(1);
  int pairs = 256;
  std::size_t index = 0;
  auto* rir_build = rir->add_subcommand("build", "render RIRs for random node pairs of a scene");
  add_common(rir_build, common);
  rir_build->add_option("--spec", spec_path);
  rir_build->add_option("--scene-seed", scene_seed);
  rir_build->add_option("--pairs", pairs)->check(CLI::PositiveNumber);
  rir_build->add_option("--out", out_path)->required();
  auto* rir_dump = rir->add_subcommand("dump", "print one record as CSV");
  std::string in_path;
  rir_dump->add_option("--in", in_path)->required();
  rir_dump->add_option("--index", index);
  rir_dump->add_option("--out", out_path);

  // config
  auto* config = app.add_subcommand("config", "run configurations");
  config->require_subcommand(1);
  auto* config_dump = config->add_subcommand("dump", "write the effective configuration");
  add_common(config_dump, common);
  config_dump->add_option("--out", out_path);

  // training
  std::string init_path;
  int log_every = 10;
  auto* pretrain = app.add_subcommand("pretrain", "fit the generator under a random policy");
  add_common(pretrain, common);
  pretrain->add_option("--out", out_path)->required();
  pretrain->add_option("--init", init_path, "checkpoint to start from");
  pretrain->add_option("--log-every", log_every);
  auto* train_cmd = app.add_subcommand("train", "train both agents and the generator");
  add_common(train_cmd, common);
  train_cmd->add_option("--out", out_path)->required();
  train_cmd->add_option("--init", init_path, "checkpoint to start from (e.g. a pretrained one)");
  train_cmd->add_option("--log-every", log_every);

  // evaluation
  std::string ckpt_path, split_name = "test", seeds_text;
  int episodes = -1;
  bool no_traces = false;
  auto add_eval_opts = [&](CLI::App* sub) {
    sub->add_option("--out", out_path)->required();
    sub->add_option("--split", split_name, "train, val or test");
    sub->add_option("--episodes", episodes, "episodes per scene per seed");
    sub->add_option("--eval-seeds", seeds_text, "e.g. 0-4");
    sub->add_flag("--no-traces", no_traces);
  };
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, common);
  eval->add_option("--checkpoint", ckpt_path)->required();
  add_eval_opts(eval);

  auto* baseline = app.add_subcommand("baseline", "comparison policies");
  baseline->require_subcommand(1);
  std::string baseline_name_arg;
  int bank_episodes = 2;
  auto* baseline_run = baseline->add_subcommand("run", "evaluate a baseline");
  add_common(baseline_run, common);
  baseline_run->add_option("--name", baseline_name_arg, "random, nn, occupancy, curiosity")
      ->required();
  baseline_run->add_option("--checkpoint", ckpt_path, "generator to predict with");
  baseline_run->add_option("--bank-episodes", bank_episodes, "nn: episodes per training scene");
  add_eval_opts(baseline_run);

  auto* analyze = app.add_subcommand("analyze", "analyses of a trained model");
  analyze->require_subcommand(1);
  int iv_episodes = 1000;
  auto* interventions = analyze->add_subcommand("interventions", "modality importance");
  add_common(interventions, common);
  interventions->add_option("--checkpoint", ckpt_path)->required();
  interventions->add_option("--episodes", iv_episodes);
  interventions->add_option("--split", split_name);
  interventions->add_option("--out", out_path)->required();

  std::vector<std::string> trace_inputs, metric_inputs;
  auto* report = app.add_subcommand("report", "plots and tables from traces and metrics");
  add_common(report, common);
  report->add_option("--traces", trace_inputs, "trace files or directories");
  report->add_option("--metrics", metric_inputs, "metrics.csv files or directories");
  report->add_option("--out", out_path)->required();

  auto* metrics = app.add_subcommand("metrics", "metric tables");
  metrics->require_subcommand(1);
  std::string label = "report";
  auto* metrics_report = metrics->add_subcommand("report", "summarize a metrics CSV as JSON");
  metrics_report->add_option("--csv", in_path)->required();
  metrics_report->add_option("--label", label);
  metrics_report->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (scene_gen->parsed()) {
      const RunConfig cfg = load_config(common);
      const SceneSpec s =
          random_scene_spec(scene_seed, cfg.scene_width, cfg.scene_depth, cfg.resolution);
      save_scene_spec(data_path(out_path).string(), s);
      std::cout << "wrote " << data_path(out_path) << "\n";
    } else if (scene_info->parsed()) {
      const RunConfig cfg = load_config(common);
      const SceneSpec s = spec_path.empty() ? random_scene_spec(scene_seed, cfg.scene_width,
                                                                cfg.scene_depth, cfg.resolution)
                                            : load_scene_spec(data_path(spec_path).string());
      const NavScene sc = build_scene(s);
      std::cout << "id " << s.id << "\nsize " << s.width << " x " << s.depth << " x " << s.height
                << " m\nresolution " << s.resolution << " m\nnodes " << sc.node_count()
                << "\nwalls " << s.walls.size() << "\n";
    } else if (rir_build->parsed()) {
      const RunConfig cfg = load_config(common);
      const SceneSpec s = spec_path.empty() ? random_scene_spec(scene_seed, cfg.scene_width,
                                                                cfg.scene_depth, cfg.resolution)
                                            : load_scene_spec(data_path(spec_path).string());
      const NavScene sc = build_scene(s);
      RirCache cache(sc, cfg.rir_length, cfg.sample_rate);
      std::mt19937_64 rng = stream_rng(cfg.seed, 4000, s.seed);
      RirDataset ds;
      ds.sample_rate = cfg.sample_rate;
      ds.length = static_cast<std::uint32_t>(cfg.rir_length);
      const auto n = static_cast<std::uint64_t>(sc.node_count());
      for (int i = 0; i < pairs; ++i) {
        RirRecord r;
        r.scene_id = s.id;
        r.source_node = static_cast<std::int32_t>(rng() % n);
        r.listener_node = static_cast<std::int32_t>(rng() % n);
        r.heading = 90 * static_cast<std::int32_t>(rng() % 4);
        r.samples = cache.get(r.source_node, r.listener_node, r.heading)->samples;
        ds.records.push_back(std::move(r));
      }
      save_rir_dataset(data_path(out_path).string(), ds);
      std::cout << "wrote " << ds.records.size() << " records to " << data_path(out_path) << "\n";
    } else if (rir_dump->parsed()) {
      const RirDataset ds = load_rir_dataset(data_path(in_path).string());
      if (index >= ds.records.size()) throw ConfigError("index out of range");
      if (out_path.empty()) {
        write_rir_csv(std::cout, ds.records[index], ds.length);
      } else {
        std::ofstream f(data_path(out_path));
        if (!f) throw FileError("cannot write " + out_path);
        write_rir_csv(f, ds.records[index], ds.length);
      }
    } else if (config_dump->parsed()) {
      const RunConfig cfg = load_config(common);
      if (out_path.empty()) {
        write_run_config(std::cout, cfg);
      } else {
        std::ofstream f(data_path(out_path));
        if (!f) throw FileError("cannot write " + out_path);
        write_run_config(f, cfg);
      }
    } else if (pretrain->parsed() || train_cmd->parsed()) {
      const RunConfig cfg = load_config(common);
      Model model(cfg);
      model.init(cfg.seed);
      if (!init_path.empty()) init_from_checkpoint(model, data_path(init_path));
      const auto scenes = make_scenes(cfg.train_scenes, cfg);
      TrainOptions opt;
      opt.out_dir = data_path(out_path);
      opt.on_update = progress(log_every);
      const TrainResult r = pretrain->parsed() ? pretrain_generator(model, scenes, opt)
                                               : train(model, scenes, opt);
      std::cout << "checkpoint " << r.checkpoint << "\n";
    } else if (eval->parsed() || baseline_run->parsed()) {
      Model model = [&] {
        if (!ckpt_path.empty()) return load_model(data_path(ckpt_path));
        Model m(load_config(common));
        m.init(m.cfg.seed);
        return m;
      }();
      if (!ckpt_path.empty()) {
        // evaluation settings may be overridden; the architecture stays
        model.cfg = apply_overrides(model.cfg, common);
      }
      RunConfig& cfg = model.cfg;
      if (!seeds_text.empty()) cfg.eval_seeds = parse_seed_list(seeds_text);
      if (episodes > 0) cfg.eval_episodes = episodes;
      const auto scenes = split(cfg, split_name);
      std::unique_ptr<Controller> ctrl;
      NearestNeighborBank bank;
      if (eval->parsed()) {
        ctrl = std::make_unique<ModelController>(model);
      } else {
        const BaselineKind kind = parse_baseline(baseline_name_arg);
        if (kind == BaselineKind::kNearestNeighbor) {
          const auto train_scenes = make_scenes(cfg.train_scenes, cfg);
          bank = build_nn_bank(model, train_scenes, bank_episodes, cfg.seed);
        }
        ctrl = make_baseline(kind, model, &bank);
      }
      const EvalReport r = evaluate(*ctrl, scenes, cfg, cfg.eval_seeds, cfg.eval_episodes);
      write_eval_report(data_path(out_path), r, !no_traces);
      print_summary(r);
    } else if (interventions->parsed()) {
      Model model = load_model(data_path(ckpt_path));
      model.cfg = apply_overrides(model.cfg, common);
      const auto scenes = split(model.cfg, split_name);
      const InterventionResult r =
          intervention_analysis(model, scenes, iv_episodes, model.cfg.seed);
      const fs::path dir = data_path(out_path);
      fs::create_directories(dir);
      std::ofstream steps(dir / "interventions_steps.csv"), summary(dir / "interventions.csv");
      if (!steps || !summary) throw FileError("cannot write into " + dir.string());
      write_intervention_steps_csv(steps, r);
      write_intervention_summary_csv(summary, r);
      write_intervention_summary_csv(std::cout, r);
    } else if (report->parsed()) {
      const RunConfig cfg = load_config(common);
      std::vector<fs::path> traces, mets;
      for (const auto& t : trace_inputs) traces.push_back(data_path(t));
      for (const auto& m : metric_inputs) mets.push_back(data_path(m));
      const auto files = write_report(traces, mets, data_path(out_path), cfg, std::cerr);
      std::cout << "wrote " << files.size() << " files\n";
    } else if (metrics_report->parsed()) {
      std::ifstream in(data_path(in_path));
      if (!in) throw FileError("cannot open " + in_path);
      const MetricsSummary s = summarize(read_metrics_csv(in));
      if (out_path.empty()) {
        write_metrics_json(std::cout, s, label);
      } else {
        std::ofstream f(data_path(out_path));
        if (!f) throw FileError("cannot write " + out_path);
        write_metrics_json(f, s, label);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
