#pragma once

#include <cstdint>

#include "jscc/dataset.hpp"
#include "jscc/objectives.hpp"

namespace jscc {

enum class PipelineMode { kJoint, kSeparate };

struct EvalOptions {
  std::uint64_t seed = 1;       // evaluation noise stream
  std::size_t mmd_samples = 0;  // 0 skips the sample-quality proxy
  double mmd_bandwidth = 0.0;   // <= 0 selects the median heuristic
};

// End-to-end pipeline measurements on one dataset. Rates are reported in
// both nats (estimator-native) and bits (log-2 rescaling).
struct PipelineMetrics {
  double distortion_l2 = 0.0;  // mean over images of the squared error summed over pixels
  double distortion_nats = 0.0;
  double code_rate_nats = 0.0;
  double transmission_nats = 0.0;
  double rate_bits = 0.0;
  double transmission_bits = 0.0;
  double mmd = 0.0;  // NaN when not computed
};

// Source -> encoder -> channel -> decoder. The transmitted code is the
// encoder mean (the deterministic choice for measurement); channel noise and
// the information-rate estimators still draw from the seeded stream. For a
// slot-limited channel the distortion follows the configured marginalization
// over the slot budget; the reconstruction set used by the sample-quality
// proxy always comes from one sampled pass.
PipelineMetrics evaluate_joint(const JointModel& model, const ChannelConfig& channel,
                               const Dataset& data, const EvalOptions& options = {});

// Source -> source encoder -> channel encoder -> channel -> channel decoder
// -> source decoder. Only the fixed-ratio noise channel is supported: the
// coder pair is built around it, and the slot-limited and binary channels
// have no separate-coding counterpart here.
PipelineMetrics evaluate_separate(const SourceVae& source, const ChannelCoderPair& coder,
                                  const ChannelConfig& channel, const Dataset& data,
                                  const EvalOptions& options = {});

// Channel-free reconstruction error (x -> encoder mean -> decoder mean), the
// limit a clean channel should approach.
double clean_reconstruction_l2(const EncoderNet& encoder, const DecoderNet& decoder,
                               const Dataset& data);

// Detached copy of the source encoder's mean codes over a dataset; the
// training corpus of a separately trained channel coder.
Dataset encoder_mean_codes(const SourceVae& source, const Dataset& data);

struct PipelineModels {
  const JointModel* joint = nullptr;
  const SourceVae* source = nullptr;
  const ChannelCoderPair* coder = nullptr;
};

// Mode dispatcher; a missing component for the requested mode is an error.
PipelineMetrics evaluate_pipeline(const PipelineModels& models, const ChannelConfig& channel,
                                  const Dataset& data, PipelineMode mode,
                                  const EvalOptions& options = {});

}  // namespace jscc
