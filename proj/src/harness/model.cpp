#include "duet/model.hpp"

#include <fstream>

#include "duet/checkpoint.hpp"
#include "duet/errors.hpp"

namespace duet {

PredictorConfig predictor_config(const RunConfig& cfg) {
  PredictorConfig p;
  p.obs = cfg.obs_config();
  p.gen_hidden = static_cast<std::size_t>(cfg.generator_hidden);
  p.rir_length = cfg.rir_length;
  p.kappa = cfg.kappa;
  p.w_mse = cfg.w_mse;
  p.stft = cfg.stft;
  return p;
}

Model::Model(const RunConfig& c)
    : cfg(c),
      obs(c.obs_config()),
      agents{AgentNet(kAgentPrefix[0], obs, {}, static_cast<std::size_t>(c.hidden_size)),
             AgentNet(kAgentPrefix[1], obs, {}, static_cast<std::size_t>(c.hidden_size))},
      predictor(kPredictorPrefix, predictor_config(c)),
      head(kAssignPrefix, static_cast<std::size_t>(c.hidden_size)) {}

void Model::init(std::uint64_t seed) {
  params = ParamStore();
  std::mt19937_64 rng(seed);
  agents[0].init(params, rng);
  agents[1].init(params, rng);
  predictor.init(params, rng);
  head.init(params, rng);
}

std::vector<double> Model::predict(const PredictQuery& q) const {
  Tensor2 out = predictor.forward(params, std::span<const PredictQuery>(&q, 1));
  return std::vector<double>(out.values().begin(), out.values().end());
}

BlockFilter Model::policy_filter() {
  return prefix_filter({std::string(kAgentPrefix[0]) + ".", std::string(kAgentPrefix[1]) + "."});
}
BlockFilter Model::predictor_filter() { return prefix_filter({std::string(kPredictorPrefix) + "."}); }
BlockFilter Model::head_filter() { return prefix_filter({std::string(kAssignPrefix) + "."}); }

void save_model(const std::filesystem::path& path, const Model& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, model.params);
  std::ofstream cfg(path.string() + ".cfg");
  if (!cfg) throw FileError("cannot write " + path.string() + ".cfg");
  write_run_config(cfg, model.cfg);
}

namespace {

void copy_checked(ParamStore& dst, const ParamStore& src) {
  for (const auto& [name, block] : dst.blocks()) {
    if (!src.contains(name)) throw ConfigError("checkpoint lacks block " + name);
    if (!src.value(name).same_shape(block.value)) {
      throw ConfigError("checkpoint block " + name + " has the wrong shape");
    }
  }
  if (src.blocks().size() != dst.blocks().size()) {
    throw ConfigError("checkpoint holds blocks this architecture does not use");
  }
  dst.load_values_from(src);
}

}  // namespace

Model load_model(const std::filesystem::path& path) {
  RunConfig cfg = load_run_config(path.string() + ".cfg");
  Model m(cfg);
  m.init(0);
  copy_checked(m.params, load_checkpoint(path));
  return m;
}

void init_from_checkpoint(Model& model, const std::filesystem::path& path) {
  copy_checked(model.params, load_checkpoint(path));
}

}  // namespace duet
