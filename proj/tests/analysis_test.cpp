#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "duet/analysis.hpp"
#include "duet/errors.hpp"
#include "duet/report.hpp"

namespace duet {
namespace {

namespace fs = std::filesystem;

RunConfig tiny() {
  RunConfig c;
  c.max_steps = 6;
  c.scene_width = 1.5;
  c.scene_depth = 1.5;
  c.train_scenes = {0, 1};
  c.val_scenes = {10};
  c.test_scenes = {20, 21};
  c.patch_radius = 1;
  c.hidden_size = 8;
  c.generator_hidden = 8;
  c.rir_length = 512;
  c.stft = {256, 64, 128, WindowKind::kHamming};
  c.eval_seeds = {0};
  c.eval_episodes = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

TEST(Importance, Normalization) {
  const ModalityScores eq = normalize_importance({0.7, 0.7, 0.7});
  for (double v : eq) EXPECT_DOUBLE_EQ(v, 1.0 / 3);
  const ModalityScores zero = normalize_importance({0.0, 0.0, 0.0});
  for (double v : zero) EXPECT_DOUBLE_EQ(v, 1.0 / 3);
  const ModalityScores one = normalize_importance({0.0, 2.0, 0.0});
  EXPECT_EQ(one[1], 1.0);
  EXPECT_THROW(normalize_importance({-1.0, 0.0, 0.0}), DomainError);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 5);
  for (int i = 0; i < 100; ++i) {
    const ModalityScores n = normalize_importance({u(rng), u(rng), u(rng)});
    EXPECT_NEAR(n[0] + n[1] + n[2], 1.0, 1e-15);
  }
}

TEST(Importance, KlOfActionDistributions) {
  const std::vector<double> p{0.25, 0.25, 0.25, 0.25}, q{0.5, 0.5 / 3, 0.5 / 3, 0.5 / 3};
  EXPECT_EQ(action_kl(p, p), 0.0);
  EXPECT_NEAR(action_kl(p, q), 0.25 * std::log(0.5) + 0.75 * std::log(1.5), 1e-15);
}

TEST(Interventions, IgnoredModalityHasZeroImportance) {
  const RunConfig cfg = tiny();
  Model m(cfg);
  m.init(3);
  m.params.value("agent0.enc.azimuth.W").fill(0.0);
  const auto scenes = make_scenes(cfg.test_scenes, cfg);
  const InterventionResult r = intervention_analysis(m, scenes, 3, 0);
  ASSERT_FALSE(r.steps.empty());
  for (const StepImportance& s : r.steps) {
    if (s.agent == 0) EXPECT_EQ(s.kl[1], 0.0);
    EXPECT_NEAR(s.normalized[0] + s.normalized[1] + s.normalized[2], 1.0, 1e-12);
    if (s.agent == 1) EXPECT_GT(s.kl[1], 0.0);
  }
  EXPECT_EQ(r.policy[0][1], 0.0);
  EXPECT_NEAR(r.pe_importance[0] + r.pe_importance[1] + r.pe_importance[2], 1.0, 1e-12);
  EXPECT_GT(r.pe_base, 0.0);
  // deterministic
  const InterventionResult again = intervention_analysis(m, scenes, 3, 0);
  std::ostringstream a, b;
  write_intervention_steps_csv(a, r);
  write_intervention_steps_csv(b, again);
  write_intervention_summary_csv(a, r);
  write_intervention_summary_csv(b, again);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Report, EmptyInputWarnsAndWritesNothing) {
  const fs::path out = fs::temp_directory_path() / "duet_report_empty";
  fs::remove_all(out);
  std::ostringstream warn;
  const auto files = write_report({}, {}, out, tiny(), warn);
  EXPECT_TRUE(files.empty());
  EXPECT_FALSE(fs::exists(out));
  EXPECT_NE(warn.str().find("warning"), std::string::npos);
}

TEST(Report, MissingTraceIsAFileError) {
  std::ostringstream warn;
  const std::vector<fs::path> in{"/nonexistent/x.jsonl"};
  EXPECT_THROW(write_report(in, {}, fs::temp_directory_path() / "duet_report_missing", tiny(), warn),
               FileError);
}

TEST(Report, SvgNodesAndByteIdenticalReruns) {
  const RunConfig cfg = tiny();
  Model m(cfg);
  m.init(4);
  const auto scenes = make_scenes(cfg.test_scenes, cfg);
  auto ctrl = make_baseline(BaselineKind::kRandom, m);
  const EvalReport rep = evaluate(*ctrl, scenes, cfg, cfg.eval_seeds, cfg.eval_episodes);
  const fs::path base = fs::temp_directory_path() / "duet_report_case";
  fs::remove_all(base);
  write_eval_report(base / "eval", rep);
  const std::vector<fs::path> traces{base / "eval" / "traces"};
  const std::vector<fs::path> metrics{base / "eval" / "metrics.csv"};
  std::ostringstream warn;
  const auto a = write_report(traces, metrics, base / "r1", cfg, warn);
  const auto b = write_report(traces, metrics, base / "r2", cfg, warn);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.size(), 4 * rep.traces.size() + 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].filename(), b[i].filename());
    EXPECT_EQ(slurp(a[i]), slurp(b[i])) << a[i];
  }
  for (const Trace& t : rep.traces) {
    const std::string stem = t.header.scene.id + "_s" + std::to_string(t.header.seed) + "_e" +
                             std::to_string(t.header.episode);
    const std::string svg = slurp(base / "r1" / (stem + "_trajectory.svg"));
    std::size_t count = 0;
    for (std::size_t pos = svg.find("class=\"node\""); pos != std::string::npos;
         pos = svg.find("class=\"node\"", pos + 1)) {
      ++count;
    }
    EXPECT_EQ(static_cast<int>(count), build_scene(t.header.scene).node_count());
  }
}

}  // namespace
}  // namespace duet
