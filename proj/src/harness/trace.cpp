#include "duet/trace.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "duet/errors.hpp"

namespace duet {
namespace {

using nlohmann::ordered_json;

ordered_json step_json(const StepRecord& r) {
  ordered_json j;
  j["t"] = r.t;
  j["poses"] = {{r.poses[0].node, r.poses[0].heading, r.poses[0].stopped},
                {r.poses[1].node, r.poses[1].heading, r.poses[1].stopped}};
  j["actions"] = {r.actions[0], r.actions[1]};
  j["reward"] = {{"xi", r.reward.r_xi},
                 {"zeta", r.reward.r_zeta},
                 {"psi", r.reward.r_psi},
                 {"phi", r.reward.r_phi},
                 {"total", r.reward.total}};
  j["r_omega"] = r.shares.r_omega;
  j["r_nu"] = r.shares.r_nu;
  j["rho_omega"] = r.shares.rho_omega;
  j["rho_nu"] = r.shares.rho_nu;
  j["pe"] = r.pe;
  j["zeta"] = r.zeta;
  j["psi"] = r.psi;
  j["phi"] = r.phi;
  return j;
}

StepRecord step_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.t = j.at("t").get<int>();
  for (int i = 0; i < 2; ++i) {
    const auto& p = j.at("poses").at(i);
    r.poses[i] = {p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<bool>()};
    r.actions[i] = j.at("actions").at(i).get<int>();
  }
  const auto& rw = j.at("reward");
  r.reward = {rw.at("xi").get<double>(), rw.at("zeta").get<double>(), rw.at("psi").get<double>(),
              rw.at("phi").get<double>(), rw.at("total").get<double>()};
  r.shares.r_omega = j.at("r_omega").get<double>();
  r.shares.r_nu = j.at("r_nu").get<double>();
  r.shares.rho_omega = j.at("rho_omega").get<double>();
  r.shares.rho_nu = j.at("rho_nu").get<double>();
  r.pe = j.at("pe").get<double>();
  r.zeta = j.at("zeta").get<double>();
  r.psi = j.at("psi").get<double>();
  r.phi = j.at("phi").get<double>();
  return r;
}

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  std::ostringstream spec;
  write_scene_spec(spec, trace.header.scene);
  ordered_json h;
  h["type"] = "header";
  h["model"] = trace.header.model;
  h["scene_id"] = trace.header.scene.id;
  h["seed"] = trace.header.seed;
  h["episode"] = trace.header.episode;
  h["max_steps"] = trace.header.max_steps;
  h["scene_spec"] = spec.str();
  out << h.dump() << "\n";
  for (const StepRecord& r : trace.steps) out << step_json(r).dump() << "\n";
}

Trace read_trace(std::istream& in) {
  Trace t;
  std::string line;
  bool have_header = false;
  int lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "header") throw FileError("trace lacks a header line");
        t.header.model = j.at("model").get<std::string>();
        t.header.seed = j.at("seed").get<std::uint64_t>();
        t.header.episode = j.at("episode").get<int>();
        t.header.max_steps = j.at("max_steps").get<int>();
        std::istringstream spec(j.at("scene_spec").get<std::string>());
        t.header.scene = read_scene_spec(spec);
        have_header = true;
        continue;
      }
      t.steps.push_back(step_from_json(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FileError("malformed trace line " + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_header) throw FileError("empty trace");
  return t;
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw FileError("cannot write " + path.string());
  write_trace(f, trace);
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw FileError("cannot open trace " + path.string());
  return read_trace(f);
}

bool trace_replays(const Trace& trace, const RewardCoefs& coefs) {
  const NavScene scene = build_scene(trace.header.scene);
  const auto replayed = replay_trace(scene, trace.steps, coefs);
  for (std::size_t i = 0; i < replayed.size(); ++i) {
    const StepRecord& a = replayed[i];
    const StepRecord& b = trace.steps[i];
    if (a.zeta != b.zeta || a.psi != b.psi || a.phi != b.phi) return false;
    if (a.reward.r_xi != b.reward.r_xi || a.reward.r_zeta != b.reward.r_zeta ||
        a.reward.r_psi != b.reward.r_psi || a.reward.r_phi != b.reward.r_phi ||
        a.reward.total != b.reward.total) {
      return false;
    }
  }
  return true;
}

}  // namespace duet
