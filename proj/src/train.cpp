#include "jscc/train.hpp"

#include <cmath>
#include <fstream>

namespace jscc {

namespace {

// Substream tags; fixed so that checkpoints and traces are reproducible.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;

TraceRow snapshot(std::size_t step, const LossBreakdown& b) {
  TraceRow row;
  row.step = step;
  row.total = b.total.item();
  row.distortion = b.distortion.item();
  row.rate = b.rate.item();
  row.posterior_kl = b.posterior_kl.item();
  row.alv_kl = b.alv_kl.item();
  row.aux = b.aux.item();
  return row;
}

}  // namespace

std::string objective_mode_name(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::kSourceVae: return "source-vae";
    case ObjectiveMode::kJoint: return "joint";
    case ObjectiveMode::kJointAux: return "joint-alv";
    case ObjectiveMode::kChannelCoder: return "channel-coder";
  }
  return "unknown";
}

ObjectiveMode objective_mode_from_string(const std::string& name) {
  if (name == "source-vae") return ObjectiveMode::kSourceVae;
  if (name == "joint") return ObjectiveMode::kJoint;
  if (name == "joint-alv") return ObjectiveMode::kJointAux;
  if (name == "channel-coder") return ObjectiveMode::kChannelCoder;
  throw std::runtime_error("unknown objective mode: " + name);
}

TrainingDiverged::TrainingDiverged(std::size_t step, const TraceRow& last_finite)
    : std::runtime_error("training diverged at step " + std::to_string(step) +
                         " (last finite total " + std::to_string(last_finite.total) + " at step " +
                         std::to_string(last_finite.step) + ")"),
      step_(step),
      last_finite_(last_finite) {}

ModelBundle init_bundle(const TrainConfig& config) {
  if (config.batch_size == 0) throw std::runtime_error("batch size must be positive");
  if (config.learning_rate <= 0.0) throw std::runtime_error("learning rate must be positive");

  Rng root(config.seed);
  ModelBundle bundle;
  bundle.config = config;
  bundle.params = std::make_unique<ParameterStore>(root.child(kInitStream).seed());
  JointModelConfig model_config = config.model;
  switch (config.mode) {
    case ObjectiveMode::kSourceVae:
      bundle.source = make_source_vae(*bundle.params, model_config);
      break;
    case ObjectiveMode::kJointAux:
      model_config.use_alv = true;
      bundle.joint = make_joint_model(*bundle.params, model_config);
      break;
    case ObjectiveMode::kJoint:
      model_config.use_alv = false;
      bundle.joint = make_joint_model(*bundle.params, model_config);
      break;
    case ObjectiveMode::kChannelCoder:
      bundle.coder.emplace(*bundle.params, "coder", model_config.code_dim, model_config.width,
                           model_config.hidden_layers);
      break;
  }
  return bundle;
}

TrainResult train(const TrainConfig& config, const Dataset& data) {
  TrainResult result;
  result.bundle = init_bundle(config);
  ModelBundle& bundle = result.bundle;

  if (config.mode == ObjectiveMode::kChannelCoder) {
    if (data.dim() != config.model.code_dim) {
      throw std::runtime_error("channel coder data dimension " + std::to_string(data.dim()) +
                               " does not match the code dimension " +
                               std::to_string(config.model.code_dim));
    }
  } else if (data.dim() != config.model.source_dim) {
    throw std::runtime_error("dataset dimension " + std::to_string(data.dim()) +
                             " does not match the model source dimension " +
                             std::to_string(config.model.source_dim));
  }

  Rng rng = Rng(config.seed).child(kBatchStream);
  SgdOptimizer optimizer(config.learning_rate, config.momentum);
  TraceRow last_finite;
  bool have_finite = false;

  for (std::size_t step = 0; step < config.steps; ++step) {
    Tensor x = data.rows(sample_indices(data.size(), config.batch_size, rng));
    LossBreakdown b;
    // The graph ops refuse to produce inf or NaN, so a numerically exploded
    // run surfaces here as a NonFiniteError from whatever op hit it first.
    try {
      switch (config.mode) {
        case ObjectiveMode::kSourceVae:
          b = source_vae_loss(x, *bundle.source, config.beta, rng);
          break;
        case ObjectiveMode::kJoint:
          b = joint_loss(x, *bundle.joint, config.channel, config.beta,
                         config.prior_match_weight, rng);
          break;
        case ObjectiveMode::kJointAux:
          b = aux_latent_loss(x, *bundle.joint, config.channel, config.beta,
                              config.prior_match_weight, rng);
          break;
        case ObjectiveMode::kChannelCoder:
          b = channel_ae_loss(x, *bundle.coder, config.channel.gaussian, rng);
          break;
      }
    } catch (const NonFiniteError&) {
      throw TrainingDiverged(step, have_finite ? last_finite : TraceRow{});
    }

    TraceRow row = snapshot(step, b);
    if (!std::isfinite(row.total)) {
      throw TrainingDiverged(step, have_finite ? last_finite : TraceRow{});
    }
    last_finite = row;
    have_finite = true;
    if (config.trace_every != 0 &&
        (step % config.trace_every == 0 || step + 1 == config.steps)) {
      result.trace.push_back(row);
    }

    bundle.params->zero_grad();
    backward(b.total);
    optimizer.step(*bundle.params);
  }
  return result;
}

const char* const kTraceCsvHeader = "run_id,step,total,distortion,rate,posterior_kl,alv_kl,aux";

void write_trace_csv(const std::string& path, const std::string& run_id,
                     const std::vector<TraceRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  out << kTraceCsvHeader << "\n";
  for (const TraceRow& row : rows) {
    out << run_id << "," << row.step;
    for (double v : {row.total, row.distortion, row.rate, row.posterior_kl, row.alv_kl, row.aux}) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("short write on trace file: " + path);
}

}  // namespace jscc
