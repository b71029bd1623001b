#include "jscc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "jscc/objectives.hpp"

namespace jscc {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) {
  throw std::runtime_error("config: " + message);
}

std::string joined(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// One JSON object treated as a closed set of fields: every typed getter marks
// its key as recognized, and reject_unknown() turns anything left over into
// an error naming the full dotted path.
class Fields {
 public:
  Fields(const Json& node, std::string prefix) : node_(node), prefix_(std::move(prefix)) {
    if (!node_.is_object()) fail("'" + prefix_ + "' must be an object");
  }

  void reject_unknown() const {
    for (const auto& item : node_.items()) {
      if (seen_.count(item.key()) == 0) {
        fail("unknown key '" + joined(prefix_, item.key()) + "'");
      }
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const Json* value = get(key);
    if (value == nullptr) return fallback;
    if (!value->is_number()) fail("'" + path(key) + "' must be a number");
    return value->get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const Json* value = get(key);
    if (value == nullptr) return fallback;
    return to_count(*value, key);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const Json* value = get(key);
    if (value == nullptr) return fallback;
    return to_count(*value, key);
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* value = get(key);
    if (value == nullptr) return fallback;
    if (!value->is_boolean()) fail("'" + path(key) + "' must be true or false");
    return value->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const Json* value = get(key);
    if (value == nullptr) return fallback;
    if (!value->is_string()) fail("'" + path(key) + "' must be a string");
    return value->get<std::string>();
  }

  std::vector<double> number_array(const std::string& key) {
    const Json* value = get(key);
    std::vector<double> out;
    if (value == nullptr) return out;
    if (!value->is_array()) fail("'" + path(key) + "' must be an array of numbers");
    for (const Json& entry : *value) {
      if (!entry.is_number()) fail("'" + path(key) + "' must be an array of numbers");
      out.push_back(entry.get<double>());
    }
    return out;
  }

  std::vector<std::uint64_t> count_array(const std::string& key) {
    const Json* value = get(key);
    std::vector<std::uint64_t> out;
    if (value == nullptr) return out;
    if (!value->is_array()) fail("'" + path(key) + "' must be an array of non-negative integers");
    for (const Json& entry : *value) out.push_back(to_count(entry, key));
    return out;
  }

  std::string path(const std::string& key) const { return joined(prefix_, key); }

 private:
  std::uint64_t to_count(const Json& value, const std::string& key) const {
    bool integral = value.is_number_integer() || value.is_number_unsigned();
    if (!integral) fail("'" + path(key) + "' must be a non-negative integer");
    if (value.is_number_integer() && !value.is_number_unsigned() &&
        value.get<long long>() < 0) {
      fail("'" + path(key) + "' must be a non-negative integer");
    }
    return value.get<std::uint64_t>();
  }

  const Json& node_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void parse_dataset(Fields& top, DatasetConfig& out) {
  const Json* node = top.get("dataset");
  if (node == nullptr) return;
  Fields f(*node, "dataset");
  std::string kind = f.text("kind", "blobs");
  std::string path = f.text("path", "");
  if (kind == "idx") {
    out.from_file = true;
    out.path = path;
    if (out.path.empty()) fail("'dataset.path' is required when dataset.kind is 'idx'");
  } else if (kind == "blobs") {
    out.kind = SyntheticKind::kGaussBlobs;
  } else if (kind == "sprites") {
    out.kind = SyntheticKind::kSprites;
  } else {
    fail("'dataset.kind' must be one of 'blobs', 'sprites', 'idx'");
  }
  if (!out.from_file && !path.empty()) {
    fail("'dataset.path' only applies when dataset.kind is 'idx'");
  }
  out.size = f.count("size", out.size);
  out.side = f.count("side", out.side);
  out.seed = f.seed("seed", out.seed);
  if (!out.from_file) {
    if (out.size < 2) fail("'dataset.size' must be at least 2");
    if (out.side < 4 || out.side > 32) fail("'dataset.side' must be between 4 and 32");
  }
  f.reject_unknown();
}

void parse_model(Fields& top, JointModelConfig& out) {
  const Json* node = top.get("model");
  if (node == nullptr) return;
  Fields f(*node, "model");
  out.code_dim = f.count("latent_dim", out.code_dim);
  out.width = f.count("width", out.width);
  out.hidden_layers = f.count("hidden_layers", out.hidden_layers);
  out.slot_count = f.count("slots", out.slot_count);
  std::string prior = f.text("prior", "standard");
  if (prior == "standard") {
    out.prior_kind = PriorKind::kStandard;
  } else if (prior == "autoregressive") {
    out.prior_kind = PriorKind::kAutoregressive;
  } else {
    fail("'model.prior' must be 'standard' or 'autoregressive'");
  }
  out.prior_width = f.count("prior_width", out.prior_width);
  out.use_alv = f.boolean("alv", out.use_alv);
  out.aux_dim = f.count("aux_dim", out.aux_dim);
  out.use_inference_net = f.boolean("inference_net", out.use_inference_net);
  out.sigma_obs = f.number("sigma_obs", out.sigma_obs);
  out.squash_log_std = f.boolean("squash_log_std", out.squash_log_std);
  if (out.code_dim == 0) fail("'model.latent_dim' must be at least 1");
  if (out.width == 0) fail("'model.width' must be at least 1");
  if (out.slot_count == 0) fail("'model.slots' must be at least 1");
  if (out.sigma_obs <= 0.0) fail("'model.sigma_obs' must be positive");
  f.reject_unknown();
}

void parse_channel(Fields& top, const JointModelConfig& model, ChannelConfig& out) {
  const Json* node = top.get("channel");
  if (node == nullptr) return;
  Fields f(*node, "channel");
  std::string kind = f.text("kind", "gaussian");
  if (kind == "gaussian") {
    out.kind = ChannelKind::kGaussian;
  } else if (kind == "bandwidth") {
    out.kind = ChannelKind::kBandwidth;
  } else if (kind == "binary") {
    out.kind = ChannelKind::kRelaxedBinary;
  } else {
    fail("'channel.kind' must be one of 'gaussian', 'bandwidth', 'binary'");
  }
  out.gaussian.snr = f.number("snr", out.gaussian.snr);
  if (out.gaussian.snr <= 0.0) fail("'channel.snr' must be positive");
  out.relaxed.keep_prob = f.number("keep_prob", out.relaxed.keep_prob);
  if (out.relaxed.keep_prob <= 0.0 || out.relaxed.keep_prob >= 1.0) {
    fail("'channel.keep_prob' must lie strictly between 0 and 1");
  }
  out.relaxed.noise_temperature = f.number("temperature", out.relaxed.noise_temperature);
  if (out.relaxed.noise_temperature <= 0.0) fail("'channel.temperature' must be positive");

  std::string marginalization = f.text("marginalization", "monte-carlo");
  if (marginalization == "full-sum") {
    out.marginalization = Marginalization::kFullSum;
  } else if (marginalization == "monte-carlo") {
    out.marginalization = Marginalization::kMonteCarlo;
  } else {
    fail("'channel.marginalization' must be 'full-sum' or 'monte-carlo'");
  }
  out.mc_samples = f.count("mc_samples", out.mc_samples);
  if (out.mc_samples == 0) fail("'channel.mc_samples' must be at least 1");

  if (f.has("bandwidth") && f.has("bandwidth_pmf")) {
    fail("'channel.bandwidth' and 'channel.bandwidth_pmf' are mutually exclusive");
  }
  if (f.has("bandwidth")) {
    std::size_t budget = f.count("bandwidth", 0);
    if (budget > model.slot_count) {
      fail("'channel.bandwidth' cannot exceed model.slots (" +
           std::to_string(model.slot_count) + ")");
    }
    out.bandwidth_pmf = point_mass_pmf(model.slot_count, budget);
  } else if (f.has("bandwidth_pmf")) {
    std::vector<double> pmf = f.number_array("bandwidth_pmf");
    if (pmf.size() != model.slot_count + 1) {
      fail("'channel.bandwidth_pmf' must list " + std::to_string(model.slot_count + 1) +
           " masses, one per budget 0.." + std::to_string(model.slot_count));
    }
    double total = 0.0;
    for (double mass : pmf) {
      if (mass < 0.0) fail("'channel.bandwidth_pmf' masses must be non-negative");
      total += mass;
    }
    if (total <= 0.0) fail("'channel.bandwidth_pmf' must have positive total mass");
    for (double& mass : pmf) mass /= total;
    out.bandwidth_pmf = pmf;
  }
  f.reject_unknown();
}

void parse_objective(Fields& top, RunConfig& out, std::string& mode) {
  const Json* node = top.get("objective");
  if (node == nullptr) return;
  Fields f(*node, "objective");
  mode = f.text("mode", mode);
  static const std::set<std::string> kModes = {"source-vae", "joint", "joint-alv",
                                               "channel-coder", "separate"};
  if (kModes.count(mode) == 0) {
    fail("'objective.mode' must be one of 'source-vae', 'joint', 'joint-alv', "
         "'channel-coder', 'separate'");
  }
  out.train.beta = f.number("beta", out.train.beta);
  if (out.train.beta < 0.0) fail("'objective.beta' must be non-negative");
  out.beta_grid = f.number_array("beta_grid");
  for (double beta : out.beta_grid) {
    if (beta <= 0.0) fail("'objective.beta_grid' entries must be positive");
  }
  out.train.prior_match_weight = f.number("prior_match_weight", out.train.prior_match_weight);
  f.reject_unknown();
}

void parse_training(Fields& top, TrainConfig& out) {
  const Json* node = top.get("training");
  if (node == nullptr) return;
  Fields f(*node, "training");
  out.learning_rate = f.number("learning_rate", out.learning_rate);
  if (out.learning_rate <= 0.0) fail("'training.learning_rate' must be positive");
  out.momentum = f.number("momentum", out.momentum);
  if (out.momentum < 0.0 || out.momentum >= 1.0) {
    fail("'training.momentum' must lie in [0, 1)");
  }
  out.steps = f.count("steps", out.steps);
  if (out.steps == 0) fail("'training.steps' must be at least 1");
  out.batch_size = f.count("batch", out.batch_size);
  if (out.batch_size == 0) fail("'training.batch' must be at least 1");
  out.seed = f.seed("seed", out.seed);
  out.trace_every = f.count("trace_every", out.trace_every);
  if (out.trace_every == 0) fail("'training.trace_every' must be at least 1");
  f.reject_unknown();
}

void parse_eval(Fields& top, const JointModelConfig& model, EvalConfig& out) {
  const Json* node = top.get("eval");
  if (node == nullptr) return;
  Fields f(*node, "eval");
  out.snr_grid = f.number_array("snr_grid");
  for (double snr : out.snr_grid) {
    if (snr <= 0.0) fail("'eval.snr_grid' entries must be positive");
  }
  std::vector<std::uint64_t> budgets = f.count_array("bandwidth_grid");
  out.bandwidth_grid.clear();
  for (std::uint64_t budget : budgets) {
    if (budget > model.slot_count) {
      fail("'eval.bandwidth_grid' entries cannot exceed model.slots (" +
           std::to_string(model.slot_count) + ")");
    }
    out.bandwidth_grid.push_back(static_cast<std::size_t>(budget));
  }
  if (f.has("seeds")) out.seeds = f.count_array("seeds");
  if (out.seeds.empty()) fail("'eval.seeds' must be non-empty");
  out.seed = f.seed("seed", out.seed);
  out.mmd_samples = f.count("mmd_samples", out.mmd_samples);
  f.reject_unknown();
}

void parse_output(Fields& top, std::string& dir) {
  const Json* node = top.get("output");
  if (node == nullptr) return;
  Fields f(*node, "output");
  dir = f.text("dir", dir);
  if (dir.empty()) fail("'output.dir' must be non-empty");
  f.reject_unknown();
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& error) {
    fail(std::string("invalid JSON: ") + error.what());
  }

  RunConfig config;
  std::string mode = "joint";
  Fields top(root, "");
  parse_dataset(top, config.dataset);
  parse_model(top, config.train.model);
  parse_channel(top, config.train.model, config.train.channel);
  parse_objective(top, config, mode);
  parse_training(top, config.train);
  parse_eval(top, config.train.model, config.eval);
  parse_output(top, config.output_dir);
  top.reject_unknown();

  // The auxiliary-latent components are on when either the mode or the model
  // flag asks for them; the two spellings resolve to the same system.
  if (mode == "joint-alv") config.train.model.use_alv = true;
  if (mode == "separate") {
    config.separate_mode = true;
    config.train.mode = ObjectiveMode::kSourceVae;
  } else if (mode == "source-vae") {
    config.train.mode = ObjectiveMode::kSourceVae;
  } else if (mode == "channel-coder") {
    config.train.mode = ObjectiveMode::kChannelCoder;
  } else {
    config.train.mode =
        config.train.model.use_alv ? ObjectiveMode::kJointAux : ObjectiveMode::kJoint;
  }

  if (config.separate_mode && config.train.channel.kind != ChannelKind::kGaussian) {
    fail("'objective.mode' 'separate' supports only the 'gaussian' channel");
  }

  if (!config.dataset.from_file) {
    config.train.model.source_dim = config.dataset.side * config.dataset.side;
  } else {
    config.train.model.source_dim = 0;  // bound to the file's row size on load
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_mode_string(const RunConfig& config) {
  if (config.separate_mode) return "separate";
  return objective_mode_name(config.train.mode);
}

std::string resolved_config_json(const RunConfig& config) {
  Json root;

  Json dataset;
  if (config.dataset.from_file) {
    dataset["kind"] = "idx";
    dataset["path"] = config.dataset.path;
  } else {
    dataset["kind"] = config.dataset.kind == SyntheticKind::kGaussBlobs ? "blobs" : "sprites";
    dataset["size"] = config.dataset.size;
    dataset["side"] = config.dataset.side;
    dataset["seed"] = config.dataset.seed;
  }
  root["dataset"] = dataset;

  const JointModelConfig& model = config.train.model;
  Json model_json;
  model_json["latent_dim"] = model.code_dim;
  model_json["width"] = model.width;
  model_json["hidden_layers"] = model.hidden_layers;
  model_json["slots"] = model.slot_count;
  model_json["prior"] = model.prior_kind == PriorKind::kStandard ? "standard" : "autoregressive";
  model_json["prior_width"] = model.prior_width;
  model_json["alv"] = model.use_alv;
  model_json["aux_dim"] = model.aux_dim;
  model_json["inference_net"] = model.use_inference_net;
  model_json["sigma_obs"] = model.sigma_obs;
  model_json["squash_log_std"] = model.squash_log_std;
  root["model"] = model_json;

  const ChannelConfig& channel = config.train.channel;
  Json channel_json;
  switch (channel.kind) {
    case ChannelKind::kGaussian: channel_json["kind"] = "gaussian"; break;
    case ChannelKind::kBandwidth: channel_json["kind"] = "bandwidth"; break;
    case ChannelKind::kRelaxedBinary: channel_json["kind"] = "binary"; break;
  }
  channel_json["snr"] = channel.gaussian.snr;
  channel_json["keep_prob"] = channel.relaxed.keep_prob;
  channel_json["temperature"] = channel.relaxed.noise_temperature;
  channel_json["marginalization"] =
      channel.marginalization == Marginalization::kFullSum ? "full-sum" : "monte-carlo";
  channel_json["mc_samples"] = channel.mc_samples;
  if (!channel.bandwidth_pmf.empty()) channel_json["bandwidth_pmf"] = channel.bandwidth_pmf;
  root["channel"] = channel_json;

  Json objective;
  objective["mode"] = config_mode_string(config);
  objective["beta"] = config.train.beta;
  if (!config.beta_grid.empty()) objective["beta_grid"] = config.beta_grid;
  objective["prior_match_weight"] = config.train.prior_match_weight;
  root["objective"] = objective;

  Json training;
  training["learning_rate"] = config.train.learning_rate;
  training["momentum"] = config.train.momentum;
  training["steps"] = config.train.steps;
  training["batch"] = config.train.batch_size;
  training["seed"] = config.train.seed;
  training["trace_every"] = config.train.trace_every;
  root["training"] = training;

  Json eval;
  if (!config.eval.snr_grid.empty()) eval["snr_grid"] = config.eval.snr_grid;
  if (!config.eval.bandwidth_grid.empty()) eval["bandwidth_grid"] = config.eval.bandwidth_grid;
  eval["seeds"] = config.eval.seeds;
  eval["seed"] = config.eval.seed;
  eval["mmd_samples"] = config.eval.mmd_samples;
  root["eval"] = eval;

  root["output"] = Json{{"dir", config.output_dir}};

  return root.dump(2) + "\n";
}

Dataset load_dataset(const DatasetConfig& config) {
  if (config.from_file) return load_idx(config.path);
  return generate_synthetic(config.kind, config.size, config.side, config.seed);
}

}  // namespace jscc
