#include "duet/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "duet/errors.hpp"

namespace duet {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define DUET_INT(name, member)                                                               \
  Field{name, [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.member = static_cast<decltype(c.member)>(to_long(k, v));                          \
        },                                                                                    \
        [](const RunConfig& c) { return std::to_string(c.member); }}
#define DUET_REAL(name, member)                                                              \
  Field{name, [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.member = to_double(k, v);                                                         \
        },                                                                                    \
        [](const RunConfig& c) { return fmt(c.member); }}
#define DUET_BOOL(name, member)                                                              \
  Field{name, [](RunConfig& c, const std::string& k, const std::string& v) {                 \
          c.member = to_bool(k, v);                                                           \
        },                                                                                    \
        [](const RunConfig& c) { return fmt(c.member); }}
#define DUET_SEEDS(name, member)                                                             \
  Field{name, [](RunConfig& c, const std::string&, const std::string& v) {                   \
          c.member = parse_seed_list(v);                                                      \
        },                                                                                    \
        [](const RunConfig& c) { return format_seed_list(c.member); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      DUET_INT("number of updates", num_updates),
      DUET_INT("num steps", num_steps),
      DUET_INT("max steps", max_steps),
      DUET_INT("ppo epoch", ppo_epoch),
      DUET_INT("num mini batch", num_mini_batch),
      DUET_REAL("value loss coef", value_loss_coef),
      DUET_REAL("entropy coef", entropy_coef),
      DUET_REAL("learning rate", learning_rate),
      DUET_REAL("max grad norm", max_grad_norm),
      DUET_BOOL("use GAE", use_gae),
      Field{"advantage mode",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v == "standard") {
                c.advantage = AdvantageMode::kStandard;
              } else if (v == "literal") {
                c.advantage = AdvantageMode::kLiteral;
              } else {
                throw ConfigError("'" + k + "' must be standard or literal");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.advantage == AdvantageMode::kStandard ? "standard" : "literal");
            }},
      DUET_BOOL("use linear learning rate decay", linear_lr_decay),
      DUET_BOOL("use linear clip decay", linear_clip_decay),
      DUET_REAL("clip param", clip_param),
      DUET_REAL("gamma", gamma),
      DUET_REAL("tau", tau),
      Field{"optimizer",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              std::string l = v;
              std::transform(l.begin(), l.end(), l.begin(), ::tolower);
              if (l != "adam") throw ConfigError("'" + k + "' supports only Adam");
              c.optimizer = "adam";
            },
            [](const RunConfig& c) { return c.optimizer; }},
      DUET_INT("reward window size", reward_window),
      DUET_INT("checkpoint interval", checkpoint_interval),
      DUET_INT("number of processes", num_processes),
      DUET_INT("threads", threads),
      DUET_REAL("scene width", scene_width),
      DUET_REAL("scene depth", scene_depth),
      DUET_REAL("resolution", resolution),
      DUET_SEEDS("train scenes", train_scenes),
      DUET_SEEDS("val scenes", val_scenes),
      DUET_SEEDS("test scenes", test_scenes),
      DUET_INT("patch radius", patch_radius),
      DUET_BOOL("field of view", field_of_view),
      DUET_INT("hidden size", hidden_size),
      DUET_INT("generator hidden size", generator_hidden),
      DUET_INT("kappa", kappa),
      DUET_INT("RIR sampling rate", sample_rate),
      DUET_INT("rir length", rir_length),
      DUET_INT("fft size", stft.fft_size),
      DUET_INT("shift size", stft.shift),
      DUET_INT("window length", stft.window_length),
      Field{"window type",
            [](RunConfig& c, const std::string&, const std::string& v) {
              c.stft.window = parse_window_kind(v);
            },
            [](const RunConfig& c) { return std::string(window_kind_name(c.stft.window)); }},
      DUET_REAL("w mse", w_mse),
      DUET_REAL("w m", w_m),
      DUET_REAL("w xi", w_xi),
      DUET_REAL("w sigma", w_sigma),
      DUET_REAL("w m omega", w_m_omega),
      DUET_REAL("w m nu", w_m_nu),
      DUET_REAL("alpha xi", alphas.xi),
      DUET_REAL("alpha zeta", alphas.zeta),
      DUET_REAL("alpha psi", alphas.psi),
      DUET_REAL("alpha phi", alphas.phi),
      DUET_REAL("rho", rho),
      DUET_BOOL("learned assignment", learned_assignment),
      DUET_REAL("lambda", lambda),
      DUET_SEEDS("eval seeds", eval_seeds),
      DUET_INT("eval episodes", eval_episodes),
      DUET_BOOL("si projection", si_projection),
      DUET_INT("seed", seed),
  };
  return f;
}

#undef DUET_INT
#undef DUET_REAL
#undef DUET_BOOL
#undef DUET_SEEDS

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto dash = part.find('-');
    auto num = [&](const std::string& s) {
      std::uint64_t x = 0;
      const std::string t = trim(s);
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
      if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
        throw ConfigError("bad seed list entry '" + part + "'");
      }
      return x;
    };
    if (dash == std::string::npos) {
      out.push_back(num(part));
    } else {
      const std::uint64_t a = num(part.substr(0, dash)), b = num(part.substr(dash + 1));
      if (b < a) throw ConfigError("descending seed range '" + part + "'");
      for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
    }
  }
  return out;
}

std::string format_seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  std::size_t i = 0;
  while (i < seeds.size()) {
    std::size_t j = i;
    while (j + 1 < seeds.size() && seeds[j + 1] == seeds[j] + 1) ++j;
    if (!out.empty()) out += ",";
    out += std::to_string(seeds[i]);
    if (j > i) out += "-" + std::to_string(seeds[j]);
    i = j + 1;
  }
  return out;
}

RunConfig RunConfig::paper_profile() {
  RunConfig c;
  c.num_updates = 40000;
  c.num_steps = 150;
  c.max_steps = 250;
  c.num_processes = 5;
  c.hidden_size = 512;
  c.generator_hidden = 512;
  c.rir_length = 16000;
  c.kappa = 1;
  return c;
}

ObsConfig RunConfig::obs_config() const {
  ObsConfig o;
  o.patch_radius = patch_radius;
  o.field_of_view = field_of_view;
  o.max_steps = max_steps;
  return o;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(num_updates >= 0, "number of updates must be >= 0");
  need(num_steps > 0, "num steps must be positive");
  need(max_steps > 0, "max steps must be positive");
  need(ppo_epoch > 0, "ppo epoch must be positive");
  need(num_mini_batch >= 1, "num mini batch must be >= 1");
  need(value_loss_coef >= 0 && entropy_coef >= 0, "loss coefficients must be >= 0");
  need(learning_rate > 0, "learning rate must be positive");
  need(max_grad_norm > 0, "max grad norm must be positive");
  need(clip_param > 0 && clip_param < 1, "clip param must lie in (0, 1)");
  need(gamma > 0 && gamma <= 1 && tau >= 0 && tau <= 1, "gamma/tau out of range");
  need(reward_window > 0, "reward window size must be positive");
  need(checkpoint_interval > 0, "checkpoint interval must be positive");
  need(num_processes > 0, "number of processes must be positive");
  need(threads > 0, "threads must be positive");
  need(scene_width > 0 && scene_depth > 0 && resolution > 0, "scene dimensions must be positive");
  need(!train_scenes.empty(), "train scenes must not be empty");
  need(patch_radius >= 0, "patch radius must be >= 0");
  need(hidden_size > 0 && generator_hidden > 0, "hidden sizes must be positive");
  need(kappa <= 1024, "kappa must lie in [0, 1024]");
  need(sample_rate > 0 && rir_length > 0, "RIR sampling rate and length must be positive");
  stft.validate();
  need(rir_length >= stft.window_length, "rir length shorter than the STFT window");
  need(w_mse >= 0 && w_mse <= 1, "w mse must lie in [0, 1]");
  need(w_m >= 0 && w_xi >= 0 && w_sigma >= 0 && w_m_omega >= 0 && w_m_nu >= 0,
       "loss weights must be >= 0");
  need(lambda >= 0 && lambda <= 1, "lambda must lie in [0, 1]");
  need(!eval_seeds.empty() && eval_episodes > 0, "evaluation needs seeds and episodes");
  assignment();
  auto disjoint = [](const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    std::set<std::uint64_t> s(a.begin(), a.end());
    for (auto x : b) {
      if (s.count(x)) return false;
    }
    return true;
  };
  need(disjoint(train_scenes, val_scenes) && disjoint(train_scenes, test_scenes) &&
           disjoint(val_scenes, test_scenes),
       "train/val/test scene splits overlap");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(*this, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(n) + ": expected 'key = value'");
    }
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open config " + path);
  return parse_run_config(in, std::move(base));
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  for (const Field& f : fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

}  // namespace duet
