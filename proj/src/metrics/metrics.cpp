#include "duet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "duet/errors.hpp"

namespace duet {

double coverage_rate(std::span<const int> visited, std::size_t node_count) {
  if (node_count == 0) throw DomainError("coverage over an empty scene");
  std::unordered_set<int> seen(visited.begin(), visited.end());
  return static_cast<double>(seen.size()) / static_cast<double>(node_count);
}

double pes(double pe) {
  if (!(pe >= 0.0)) throw DomainError("prediction error must be non-negative");
  return 2.0 / (1.0 + std::exp(-pe)) - 1.0;
}

double wcr(double cr, double pe, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  return (1.0 - lambda) * cr + lambda * (1.0 - pes(pe));
}

double rt60(std::span<const double> channel, int sample_rate) {
  const std::size_t n = channel.size();
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += channel[i] * channel[i];
    edc[i] = acc;
  }
  if (n == 0 || edc[0] <= 0.0) throw MetricError("silent channel has no decay");
  std::size_t i5 = n, i35 = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = 10.0 * std::log10(edc[i] / edc[0]);
    if (i5 == n && db <= -5.0) i5 = i;
    if (db <= -35.0) {
      i35 = i;
      break;
    }
  }
  if (i35 == n) throw MetricError("decay never reaches -35 dB");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t i = i5; i <= i35; ++i) {
    if (edc[i] <= 0.0) continue;
    const double x = static_cast<double>(i) / sample_rate;
    const double y = 10.0 * std::log10(edc[i] / edc[0]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const double den = static_cast<double>(m) * sxx - sx * sx;
  if (m < 2 || den <= 0.0) throw MetricError("too few points in the decay fit");
  const double slope = (static_cast<double>(m) * sxy - sx * sy) / den;
  if (!(slope < 0.0)) throw MetricError("decay fit is not decreasing");
  return 60.0 / -slope;
}

double rte_ms(std::span<const double> truth, std::span<const double> pred, int sample_rate,
              std::size_t channels) {
  if (channels == 0 || truth.size() != pred.size() || truth.size() % channels != 0) {
    throw DomainError("rte inputs must hold equal channel layouts");
  }
  const std::size_t len = truth.size() / channels;
  double sum = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double a = rt60(truth.subspan(c * len, len), sample_rate);
    const double b = rt60(pred.subspan(c * len, len), sample_rate);
    sum += std::abs(a - b);
  }
  return 1000.0 * sum / static_cast<double>(channels);
}

double sisdr(std::span<const double> truth, std::span<const double> pred, bool projection) {
  if (truth.size() != pred.size()) throw DomainError("sisdr length mismatch");
  double tt = 0.0, tp = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    tt += truth[i] * truth[i];
    tp += truth[i] * pred[i];
  }
  if (tt <= 0.0) throw DomainError("sisdr of an all-zero ground truth");
  const double scale = projection ? tp / tt : 1.0;
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double t = scale * truth[i];
    sig += t * t;
    err += (pred[i] - t) * (pred[i] - t);
  }
  if (sig <= 0.0) return -kSisdrCap;
  if (err < 1e-12 * sig) return kSisdrCap;
  return std::min(kSisdrCap, 10.0 * std::log10(sig / err));
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double q = 0.0;
    for (double x : v) q += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(q / static_cast<double>(v.size() - 1));
  }
  return r;
}

nlohmann::ordered_json to_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

MetricsSummary summarize(std::span<const EpisodeMetrics> rows) {
  struct Acc {
    double wcr = 0, pe = 0, cr = 0, rte = 0, sisdr = 0;
    int n = 0, n_rte = 0;
  };
  std::map<std::uint64_t, Acc> per_seed;
  MetricsSummary s;
  s.episodes = rows.size();
  for (const EpisodeMetrics& r : rows) {
    Acc& a = per_seed[r.seed];
    a.wcr += r.wcr;
    a.pe += r.pe;
    a.cr += r.cr;
    a.sisdr += r.sisdr_db;
    if (r.rte_skipped < r.steps) {
      a.rte += r.rte_ms;
      ++a.n_rte;
    }
    ++a.n;
    s.rte_skipped += r.rte_skipped;
  }
  std::vector<double> wcr, pe, cr, rte, sd;
  for (const auto& [_, a] : per_seed) {
    wcr.push_back(a.wcr / a.n);
    pe.push_back(a.pe / a.n);
    cr.push_back(a.cr / a.n);
    sd.push_back(a.sisdr / a.n);
    if (a.n_rte > 0) rte.push_back(a.rte / a.n_rte);
  }
  s.seeds = per_seed.size();
  s.wcr = mean_std(wcr);
  s.pe = mean_std(pe);
  s.cr = mean_std(cr);
  s.rte_ms = mean_std(rte);
  s.sisdr_db = mean_std(sd);
  return s;
}

void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> rows) {
  out << "scene,seed,episode,steps,cr,pe,pes,wcr,rte_ms,sisdr_db,rte_skipped\n";
  std::ostringstream os;
  os << std::setprecision(17);
  for (const EpisodeMetrics& r : rows) {
    os << r.scene_id << ',' << r.seed << ',' << r.episode << ',' << r.steps << ',' << r.cr
       << ',' << r.pe << ',' << r.pes << ',' << r.wcr << ',' << r.rte_ms << ','
       << r.sisdr_db << ',' << r.rte_skipped << '\n';
  }
  out << os.str();
}

std::vector<EpisodeMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("scene,seed,episode", 0) != 0) {
    throw FileError("metrics CSV header missing");
  }
  std::vector<EpisodeMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw FileError("metrics CSV row has " + std::to_string(f.size()) + " fields");
    try {
      EpisodeMetrics r;
      r.scene_id = f[0];
      r.seed = std::stoull(f[1]);
      r.episode = std::stoi(f[2]);
      r.steps = std::stoi(f[3]);
      r.cr = std::stod(f[4]);
      r.pe = std::stod(f[5]);
      r.pes = std::stod(f[6]);
      r.wcr = std::stod(f[7]);
      r.rte_ms = std::stod(f[8]);
      r.sisdr_db = std::stod(f[9]);
      r.rte_skipped = std::stoi(f[10]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw FileError("malformed metrics CSV row: " + line);
    }
  }
  return rows;
}

void write_metrics_json(std::ostream& out, const MetricsSummary& s, const std::string& label) {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["episodes"] = s.episodes;
  j["seeds"] = s.seeds;
  j["WCR"] = to_json(s.wcr);
  j["PE"] = to_json(s.pe);
  j["CR"] = to_json(s.cr);
  j["RTE_ms"] = to_json(s.rte_ms);
  j["SiSDR_dB"] = to_json(s.sisdr_db);
  j["rte_skipped"] = s.rte_skipped;
  out << j.dump(2) << '\n';
}

}  // namespace duet
