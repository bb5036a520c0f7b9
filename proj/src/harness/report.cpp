#include "duet/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include "duet/acoustics.hpp"
#include "duet/errors.hpp"
#include "duet/metrics.hpp"
#include "duet/spectral.hpp"

namespace duet {
namespace {

constexpr double kPixelsPerMetre = 60.0;
constexpr double kMargin = 20.0;
const char* kAgentColour[2] = {"#d62728", "#1f77b4"};

}  // namespace

void write_trajectory_svg(std::ostream& out, const NavScene& scene, const Trace& trace) {
  const SceneSpec& s = scene.spec();
  const double w = s.width * kPixelsPerMetre + 2 * kMargin;
  const double h = s.depth * kPixelsPerMetre + 2 * kMargin;
  auto px = [&](const Point2& p) {
    return std::pair<double, double>{kMargin + p.x * kPixelsPerMetre,
                                     h - kMargin - p.y * kPixelsPerMetre};
  };
  std::set<int> visited;
  for (const StepRecord& r : trace.steps) {
    visited.insert(r.poses[0].node);
    visited.insert(r.poses[1].node);
  }
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const Wall& wall : s.walls) {
    const auto [x0, y0] = px(wall.a);
    const auto [x1, y1] = px(wall.b);
    out << "<line class=\"wall\" x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1
        << "\" y2=\"" << y1 << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
  }
  for (int n = 0; n < scene.node_count(); ++n) {
    const auto [x, y] = px(scene.ground(n));
    const bool v = visited.count(n) > 0;
    out << "<circle class=\"node\" cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\""
        << (v ? "#999999" : "white") << "\" stroke=\"#666666\"/>\n";
  }
  for (int a = 0; a < 2; ++a) {
    out << "<polyline class=\"agent" << a << "\" fill=\"none\" stroke=\"" << kAgentColour[a]
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const auto [x, y] = px(scene.ground(trace.steps[i].poses[a].node));
      out << (i ? " " : "") << x << ',' << y;
    }
    out << "\"/>\n";
    if (!trace.steps.empty()) {
      const auto [x, y] = px(scene.ground(trace.steps.front().poses[a].node));
      out << "<circle class=\"start\" cx=\"" << x << "\" cy=\"" << y << "\" r=\"6\" fill=\""
          << kAgentColour[a] << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

void write_reward_csv(std::ostream& out, const Trace& trace) {
  out << "t,r_xi,r_zeta,r_psi,r_phi,total,r_omega,r_nu,pe,zeta,psi,phi\n";
  out << std::setprecision(17);
  for (const StepRecord& r : trace.steps) {
    out << r.t << ',' << r.reward.r_xi << ',' << r.reward.r_zeta << ',' << r.reward.r_psi << ','
        << r.reward.r_phi << ',' << r.reward.total << ',' << r.shares.r_omega << ','
        << r.shares.r_nu << ',' << r.pe << ',' << r.zeta << ',' << r.psi << ',' << r.phi << '\n';
  }
}

void write_waveform_csv(std::ostream& out, std::span<const double> rir, std::size_t length) {
  if (rir.size() != 2 * length) throw DomainError("waveform holds the wrong number of samples");
  out << "sample,left,right\n";
  out << std::setprecision(9);
  for (std::size_t i = 0; i < length; ++i) out << i << ',' << rir[i] << ',' << rir[length + i] << '\n';
}

void write_spectrogram_csv(std::ostream& out, std::span<const double> channel,
                           const StftConfig& stft) {
  StftEngine engine(stft);
  const Spectrogram s = engine.magnitude(channel);
  out << "frame,bin,magnitude\n";
  out << std::setprecision(9);
  for (std::size_t f = 0; f < s.frames; ++f) {
    for (std::size_t b = 0; b < s.bins; ++b) out << f << ',' << b << ',' << s(f, b) << '\n';
  }
}

namespace {

std::vector<std::filesystem::path> expand(std::span<const std::filesystem::path> inputs,
                                          const std::string& ext) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : inputs) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (std::filesystem::is_regular_file(p)) {
      out.push_back(p);
    } else {
      throw FileError("missing input " + p.string());
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw FileError("cannot write " + p.string());
  return f;
}

}  // namespace

std::vector<std::filesystem::path> write_report(std::span<const std::filesystem::path> traces,
                                                std::span<const std::filesystem::path> metrics,
                                                const std::filesystem::path& out_dir,
                                                const RunConfig& cfg, std::ostream& warn) {
  const auto trace_files = expand(traces, ".jsonl");
  const auto metric_files = expand(metrics, ".csv");
  std::vector<std::filesystem::path> written;
  if (trace_files.empty() && metric_files.empty()) {
    warn << "warning: no traces or metrics given; nothing to report\n";
    return written;
  }
  std::filesystem::create_directories(out_dir);
  std::set<std::string> stems;
  for (const auto& path : trace_files) {
    const Trace t = load_trace(path);
    std::string stem = path.stem().string();
    for (int k = 2; !stems.insert(stem).second; ++k) stem = path.stem().string() + "_" + std::to_string(k);
    const NavScene scene = build_scene(t.header.scene);
    {
      const auto p = out_dir / (stem + "_trajectory.svg");
      auto f = open_out(p);
      write_trajectory_svg(f, scene, t);
      written.push_back(p);
    }
    {
      const auto p = out_dir / (stem + "_rewards.csv");
      auto f = open_out(p);
      write_reward_csv(f, t);
      written.push_back(p);
    }
    if (t.steps.empty()) continue;
    const StepRecord& last = t.steps.back();
    RirCache cache(scene, cfg.rir_length, cfg.sample_rate, 4);
    const auto rir = cache.get(last.poses[0].node, last.poses[1].node, last.poses[1].heading);
    const std::vector<double> wave(rir->samples.begin(), rir->samples.end());
    {
      const auto p = out_dir / (stem + "_waveform.csv");
      auto f = open_out(p);
      write_waveform_csv(f, wave, cfg.rir_length);
      written.push_back(p);
    }
    {
      const auto p = out_dir / (stem + "_spectrogram.csv");
      auto f = open_out(p);
      write_spectrogram_csv(f, std::span<const double>(wave).first(cfg.rir_length), cfg.stft);
      written.push_back(p);
    }
  }
  if (!metric_files.empty()) {
    const auto p = out_dir / "summary.csv";
    auto f = open_out(p);
    f << "source,episodes,seeds,wcr_mean,wcr_std,pe_mean,pe_std,cr_mean,cr_std,rte_ms_mean,"
         "rte_ms_std,sisdr_db_mean,sisdr_db_std\n";
    f << std::setprecision(17);
    for (const auto& m : metric_files) {
      std::ifstream in(m);
      if (!in) throw FileError("cannot open " + m.string());
      const auto rows = read_metrics_csv(in);
      const MetricsSummary s = summarize(rows);
      f << m.parent_path().filename().string() << '/' << m.filename().string() << ','
        << s.episodes << ',' << s.seeds << ',' << s.wcr.mean << ',' << s.wcr.std << ','
        << s.pe.mean << ',' << s.pe.std << ',' << s.cr.mean << ',' << s.cr.std << ','
        << s.rte_ms.mean << ',' << s.rte_ms.std << ',' << s.sisdr_db.mean << ','
        << s.sisdr_db.std << '\n';
    }
    written.push_back(p);
  }
  return written;
}

}  // namespace duet
