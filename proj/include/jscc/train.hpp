#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jscc/dataset.hpp"
#include "jscc/objectives.hpp"

namespace jscc {

// What a single training run optimizes. The separate source/channel pipeline
// is built from two runs (kSourceVae on images, kChannelCoder on codes).
enum class ObjectiveMode { kSourceVae, kJoint, kJointAux, kChannelCoder };

std::string objective_mode_name(ObjectiveMode mode);
ObjectiveMode objective_mode_from_string(const std::string& name);

struct TrainConfig {
  ObjectiveMode mode = ObjectiveMode::kJoint;
  JointModelConfig model;
  ChannelConfig channel;
  double beta = 1.0;
  double prior_match_weight = 1.0;
  double learning_rate = 0.02;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t steps = 200;
  std::uint64_t seed = 1;  // drives init and the batch/noise stream; mandatory
  std::size_t trace_every = 25;
};

// Scalar snapshot of a LossBreakdown at one step.
struct TraceRow {
  std::size_t step = 0;
  double total = 0.0;
  double distortion = 0.0;
  double rate = 0.0;
  double posterior_kl = 0.0;
  double alv_kl = 0.0;
  double aux = 0.0;
};

// A parameter store plus whichever model the mode uses. The store owns the
// leaves; the model structs hold handles into it.
struct ModelBundle {
  std::unique_ptr<ParameterStore> params;
  std::optional<JointModel> joint;
  std::optional<SourceVae> source;
  std::optional<ChannelCoderPair> coder;
  TrainConfig config;
};

// Raised when the loss leaves the finite range. Carries where training stood.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, const TraceRow& last_finite);
  std::size_t step() const { return step_; }
  const TraceRow& last_finite() const { return last_finite_; }

 private:
  std::size_t step_;
  TraceRow last_finite_;
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<TraceRow> trace;
};

// Fresh bundle for the configured mode, parameters drawn from the seed's init
// substream. kChannelCoder sizes its nets by model.code_dim.
ModelBundle init_bundle(const TrainConfig& config);

// Plain SGD with momentum for the configured number of steps. Batches are
// sampled with replacement from the seeded stream, so a seed fixes the entire
// run. Trace rows are recorded before the update at every trace interval and
// at the final step. For kChannelCoder the dataset rows are code vectors.
TrainResult train(const TrainConfig& config, const Dataset& data);

extern const char* const kTraceCsvHeader;  // run_id,step,total,...
void write_trace_csv(const std::string& path, const std::string& run_id,
                     const std::vector<TraceRow>& rows);

}  // namespace jscc
