#include "duet/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "duet/errors.hpp"
#include "duet/train.hpp"

namespace duet {

ModalityScores normalize_importance(const ModalityScores& d) {
  double s = 0.0;
  for (double v : d) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("importance scores must be finite and >= 0");
    s += v;
  }
  ModalityScores out{};
  for (int i = 0; i < kNumModalities; ++i) out[i] = s > 0.0 ? d[i] / s : 1.0 / kNumModalities;
  return out;
}

double action_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("distribution size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(kl, 0.0);
}

namespace {

PolicyOutput run_policy(const Model& model, int agent, const Observation& o,
                        const std::vector<double>& h) {
  const Observation* p = &o;
  return model.agents[agent].forward(model.params,
                                     stack_observations(std::span(&p, 1), model.obs),
                                     Tensor2::row(h));
}

}  // namespace

InterventionResult intervention_analysis(const Model& model, std::span<const SceneBundle> scenes,
                                         int episodes, std::uint64_t seed) {
  if (scenes.empty()) throw ConfigError("intervention analysis needs scenes");
  if (episodes <= 0) throw ConfigError("intervention analysis needs episodes > 0");
  const RunConfig& cfg = model.cfg;
  const std::size_t hidden = static_cast<std::size_t>(cfg.hidden_size);
  InterventionResult res;
  res.episodes = episodes;
  std::array<int, 2> counts{0, 0};

  for (int e = 0; e < episodes; ++e) {
    const SceneBundle& b = scenes[static_cast<std::size_t>(e) % scenes.size()];
    std::mt19937_64 rng = stream_rng(seed, 5000 + b.seed, static_cast<std::uint64_t>(e));
    std::mt19937_64 noise = stream_rng(seed, 6000, static_cast<std::uint64_t>(e));
    Episode ep = start_episode(b, cfg, rng);
    std::array<std::vector<double>, 2> h{std::vector<double>(hidden, 0.0),
                                         std::vector<double>(hidden, 0.0)};
    while (!ep.done) {
      std::array<int, 2> acts{};
      for (int i = 0; i < 2; ++i) {
        const Observation o = observe(ep.scene(), ep.poses[i], ep.t, model.obs);
        const PolicyOutput base = run_policy(model, i, o, h[i]);
        StepImportance si;
        si.episode = e;
        si.t = ep.t;
        si.agent = i;
        for (int m = 0; m < kNumModalities; ++m) {
          Observation oc = o;
          corrupt_modality(oc, static_cast<Modality>(m), noise);
          const PolicyOutput alt = run_policy(model, i, oc, h[i]);
          si.kl[m] = action_kl(base.probs.row_span(0), alt.probs.row_span(0));
        }
        si.normalized = normalize_importance(si.kl);
        for (int m = 0; m < kNumModalities; ++m) res.policy[i][m] += si.normalized[m];
        ++counts[i];
        res.steps.push_back(si);
        acts[i] = sample_action(base.probs.row_span(0), rng);
        const auto hr = base.hidden.row_span(0);
        h[i].assign(hr.begin(), hr.end());
      }
      move_agents(ep, acts[0], acts[1]);
    }
  }
  for (int i = 0; i < 2; ++i) {
    for (double& v : res.policy[i]) v /= std::max(counts[i], 1);
  }

  auto mean_pe = [&](std::optional<Intervention> iv) {
    ModelController ctrl(model, iv);
    double s = 0.0;
    for (int e = 0; e < episodes; ++e) {
      const SceneBundle& b = scenes[static_cast<std::size_t>(e) % scenes.size()];
      std::mt19937_64 rng = stream_rng(seed, 5000 + b.seed, static_cast<std::uint64_t>(e));
      s += run_episode(ctrl, b, cfg, rng, seed, e).metrics.pe;
    }
    return s / episodes;
  };
  res.pe_base = mean_pe(std::nullopt);
  for (int m = 0; m < kNumModalities; ++m) {
    Intervention iv;
    iv.modality = static_cast<Modality>(m);
    iv.seed = seed;
    res.pe_delta[m] = std::abs(mean_pe(iv) - res.pe_base);
  }
  res.pe_importance = normalize_importance(res.pe_delta);
  return res;
}

namespace {
const char* kModalityNames[kNumModalities] = {"vision", "azimuth", "position"};
}

void write_intervention_steps_csv(std::ostream& out, const InterventionResult& r) {
  out << "episode,t,agent,kl_vision,kl_azimuth,kl_position,d_vision,d_azimuth,d_position\n";
  out << std::setprecision(17);
  for (const StepImportance& s : r.steps) {
    out << s.episode << ',' << s.t << ',' << s.agent;
    for (double v : s.kl) out << ',' << v;
    for (double v : s.normalized) out << ',' << v;
    out << '\n';
  }
}

void write_intervention_summary_csv(std::ostream& out, const InterventionResult& r) {
  out << "modality,policy_agent0,policy_agent1,pe_delta,pe_importance\n";
  out << std::setprecision(17);
  for (int m = 0; m < kNumModalities; ++m) {
    out << kModalityNames[m] << ',' << r.policy[0][m] << ',' << r.policy[1][m] << ','
        << r.pe_delta[m] << ',' << r.pe_importance[m] << '\n';
  }
  out << "base_pe,,," << r.pe_base << ",\n";
}

}  // namespace duet
