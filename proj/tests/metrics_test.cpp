#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "duet/errors.hpp"
#include "duet/metrics.hpp"

namespace duet {
namespace {

std::vector<double> decaying_noise(double tau, double seconds, int fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> h(static_cast<std::size_t>(seconds * fs));
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = g(rng) * std::exp(-(i / double(fs)) / tau);
  return h;
}

TEST(Coverage, UniqueOverTotal) {
  const int all[] = {0, 1, 2, 3};
  EXPECT_EQ(coverage_rate(all, 4), 1.0);
  const int still[] = {5, 5, 5, 5};
  EXPECT_EQ(coverage_rate(still, 10), 0.1);
  const int two[] = {5, 7, 5, 7};
  EXPECT_EQ(coverage_rate(two, 10), 0.2);
  EXPECT_THROW(coverage_rate(all, 0), DomainError);
}

TEST(Coverage, MatchesReplayCount) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> trace(200);
    for (int& v : trace) v = static_cast<int>(rng() % 150);
    std::vector<char> seen(150, 0);
    int count = 0;
    for (int v : trace) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
      }
    }
    EXPECT_EQ(coverage_rate(trace, 150), count / 150.0);
  }
}

TEST(Wcr, Examples) {
  EXPECT_EQ(pes(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wcr(0.5, 0.0, 0.1), 0.55);
  EXPECT_NEAR(pes(std::log(3.0)), 0.5, 1e-15);
  EXPECT_NEAR(wcr(0.8, 1e3, 0.1), 0.72, 1e-15);
  EXPECT_THROW(pes(-1.0), DomainError);
  EXPECT_THROW(wcr(0.5, 0.0, 1.5), DomainError);
}

TEST(Wcr, MonotoneInCoverageAndError) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double cr = u(rng), pe = 5 * u(rng), d = 0.01 + u(rng) * 0.1;
    EXPECT_LT(wcr(cr, pe), wcr(std::min(1.0, cr + d), pe) + 1e-15);
    EXPECT_GT(wcr(cr, pe), wcr(cr, pe + d));
  }
}

TEST(Rt60, SyntheticExponentialDecay) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double tau = 0.05;
    auto h = decaying_noise(tau, 1.0, 16000, seed);
    const double expected = 3 * tau * std::log(10.0);
    EXPECT_NEAR(rt60(h, 16000), expected, 0.05 * expected);
    // halving tau halves the estimate
    auto h2 = decaying_noise(tau / 2, 1.0, 16000, seed + 10);
    EXPECT_NEAR(rt60(h2, 16000), expected / 2, 0.05 * expected / 2);
  }
}

TEST(Rt60, ScaleInvariant) {
  auto h = decaying_noise(0.04, 0.8, 16000, 7);
  const double base = rt60(h, 16000);
  for (double a : {1e-3, 0.5, 7.0}) {
    std::vector<double> s(h);
    for (double& v : s) v *= a;
    EXPECT_NEAR(rt60(s, 16000), base, 1e-9 * base);
  }
}

TEST(Rt60, Errors) {
  std::vector<double> zero(100, 0.0);
  EXPECT_THROW(rt60(zero, 16000), MetricError);
  // two equal samples only fall 3 dB before the end
  std::vector<double> tiny{1.0, 1.0};
  EXPECT_THROW(rt60(tiny, 16000), MetricError);
}

TEST(Rte, ExamplesAndSymmetry) {
  auto a = decaying_noise(0.05, 1.0, 16000, 3);
  auto b = decaying_noise(0.055, 1.0, 16000, 4);
  std::vector<double> wa(a), wb(b);
  wa.insert(wa.end(), a.begin(), a.end());
  wb.insert(wb.end(), b.begin(), b.end());
  EXPECT_EQ(rte_ms(wa, wa, 16000), 0.0);
  const double expected = 3 * 0.005 * std::log(10.0) * 1000.0;
  EXPECT_NEAR(rte_ms(wa, wb, 16000), expected, 0.15 * expected);
  EXPECT_EQ(rte_ms(wa, wb, 16000), rte_ms(wb, wa, 16000));
}

TEST(Sisdr, Examples) {
  std::vector<double> t{10.0, 0.0}, e{10.0, 1.0};
  EXPECT_NEAR(sisdr(t, e), 20.0, 1e-12);
  EXPECT_EQ(sisdr(t, t), kSisdrCap);
  std::vector<double> z{0.0, 0.0};
  EXPECT_NEAR(sisdr(t, z), 0.0, 1e-12);
  EXPECT_THROW(sisdr(z, t), DomainError);
  // error energy 1% of the signal energy
  std::vector<double> w{3.0, 4.0, 0.0}, p{3.0, 4.0, 0.5};
  EXPECT_EQ(sisdr(w, p), 20.0);
}

TEST(Sisdr, RelativeErrorScaling) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> w(500);
  for (double& v : w) v = g(rng);
  std::vector<double> p(w);
  for (double& v : p) v *= 1.01;
  EXPECT_NEAR(sisdr(w, p), 40.0, 1e-9);  // |e| / |w| = 0.01
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = w[i] * (1.0 + 1e-3);
  EXPECT_NEAR(sisdr(w, p), 60.0, 0.6);
  // projected variant ignores the gain
  EXPECT_EQ(sisdr(w, p, true), kSisdrCap);
}

TEST(Report, SummaryAndCsvRoundTrip) {
  std::vector<EpisodeMetrics> rows;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (int ep = 0; ep < 2; ++ep) {
      EpisodeMetrics r;
      r.scene_id = "s" + std::to_string(ep);
      r.seed = seed;
      r.episode = ep;
      r.steps = 10;
      r.cr = 0.1 * (seed + 1) + 0.01 * ep;
      r.pe = 0.5;
      r.pes = pes(r.pe);
      r.wcr = wcr(r.cr, r.pe);
      r.rte_ms = 12.5;
      r.sisdr_db = -3.0;
      r.rte_skipped = ep == 1 ? 10 : 0;
      rows.push_back(r);
    }
  }
  MetricsSummary s = summarize(rows);
  EXPECT_EQ(s.seeds, 3u);
  EXPECT_EQ(s.episodes, 6u);
  EXPECT_NEAR(s.cr.mean, 0.205, 1e-12);
  EXPECT_NEAR(s.cr.std, 0.1, 1e-12);
  EXPECT_EQ(s.rte_ms.mean, 12.5);
  EXPECT_EQ(s.rte_skipped, 30);
  std::stringstream csv;
  write_metrics_csv(csv, rows);
  auto back = read_metrics_csv(csv);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(back[3].cr, rows[3].cr);
  EXPECT_EQ(back[3].wcr, rows[3].wcr);
  std::stringstream json;
  write_metrics_json(json, s, "x");
  EXPECT_NE(json.str().find("\"CR\""), std::string::npos);
  std::stringstream bad("nope\n");
  EXPECT_THROW(read_metrics_csv(bad), FileError);
}

}  // namespace
}  // namespace duet
