#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jscc/channels.hpp"
#include "jscc/models.hpp"

namespace jscc {

// Which noisy medium sits between encoder and decoder.
enum class ChannelKind { kGaussian, kBandwidth, kRelaxedBinary };

// Runtime channel configuration shared by losses, estimators and evaluation.
// For kBandwidth, `gaussian` is the per-slot inner channel and the prior of
// the model in use fills the untransmitted slots.
struct ChannelConfig {
  ChannelKind kind = ChannelKind::kGaussian;
  GaussianChannelSpec gaussian;
  // Distribution of the transmitted slot count over {0..T}; empty selects the
  // default: uniform over {1..T} (a live link always carries at least one
  // slot; zero-bandwidth behaviour stays reachable via an explicit pmf).
  std::vector<double> bandwidth_pmf;
  RelaxedBinarySpec relaxed;
  Marginalization marginalization = Marginalization::kMonteCarlo;
  std::size_t mc_samples = 1;  // bandwidth draws per loss evaluation (MC mode)
};

std::vector<double> default_bandwidth_pmf(std::size_t slot_count);
std::vector<double> point_mass_pmf(std::size_t slot_count, std::size_t bandwidth);

// Resolves the config against a concrete prior into the channel-level spec.
BandwidthChannelSpec bandwidth_spec_for(const ChannelConfig& config, const PriorModel& prior);

// Encoder/decoder pair trained as a stand-alone variational autoencoder; the
// first stage of the separately trained system.
struct SourceVae {
  EncoderNet encoder;
  DecoderNet decoder;
};

// Everything the jointly trained system owns. `inference` is an optional
// separate posterior network: when absent, the training posterior is the
// encoder composed with the channel itself, which cancels the posterior KL
// term identically. `alv` holds the auxiliary-latent decoder components used
// by the auxiliary objective.
struct JointModel {
  std::size_t source_dim = 0;
  std::size_t code_dim = 0;
  EncoderNet encoder;
  DecoderNet decoder;
  PriorModel prior;
  std::optional<AlvComponents> alv;
  std::optional<EncoderNet> inference;
};

struct JointModelConfig {
  std::size_t source_dim = 64;
  std::size_t code_dim = 20;
  std::size_t width = 64;
  std::size_t hidden_layers = 1;
  std::size_t slot_count = 5;
  PriorKind prior_kind = PriorKind::kStandard;
  std::size_t prior_width = 32;
  bool use_alv = false;
  std::size_t aux_dim = 8;
  bool use_inference_net = false;
  bool squash_log_std = true;
  double sigma_obs = 1.0;
};

JointModel make_joint_model(ParameterStore& params, const JointModelConfig& config);
SourceVae make_source_vae(ParameterStore& params, const JointModelConfig& config);

// One evaluated objective. Every field is a scalar graph node so callers can
// backpropagate `total` and report the pieces. The total is assembled as
//   (((distortion + beta * rate) + posterior_kl) + alv_kl) + aux
// in exactly that association order, so the identity is reproducible in
// plain double arithmetic.
struct LossBreakdown {
  Tensor total;
  Tensor distortion;     // reconstruction negative log-likelihood
  Tensor rate;           // the term beta multiplies (KL to prior, weighted)
  Tensor posterior_kl;   // posterior-vs-generative KL; exactly 0 by default
  Tensor alv_kl;         // auxiliary posterior KL; 0 without auxiliaries
  Tensor aux;            // prior max-likelihood term; 0 for parameter-free priors
  double beta = 0.0;
};

// Evidence-bound objective of the stand-alone source coder: one
// reparameterized code sample for the reconstruction term plus the
// closed-form KL to the unit Gaussian prior, weighted by beta.
LossBreakdown source_vae_loss(const Tensor& x, const SourceVae& model, double beta, Rng& rng);

// Reconstruction-through-channel objective of the joint system. beta weights
// prior_match_weight * KL(encoder || prior), which regularizes code entropy
// and trains the in-fill prior; for autoregressive priors the KL is a
// single-sample estimate and a unit-weight prior likelihood term on detached
// code samples is added. Requires a model without auxiliary components.
LossBreakdown joint_loss(const Tensor& x, const JointModel& model, const ChannelConfig& channel,
                         double beta, double prior_match_weight, Rng& rng);

// Same objective with the auxiliary-latent decoder: the distortion term
// becomes reconstruction under (z, v), v drawn from the auxiliary posterior,
// plus that posterior's KL to its unit Gaussian prior at unit weight.
// Requires a model with auxiliary components.
LossBreakdown aux_latent_loss(const Tensor& x, const JointModel& model,
                              const ChannelConfig& channel, double beta,
                              double prior_match_weight, Rng& rng);

// L2 training objective of the separate system's channel stage: codes pass
// through channel encoder, Gaussian channel and channel decoder, and the
// distortion is the mean squared distance to the input code.
LossBreakdown channel_ae_loss(const Tensor& y, const ChannelCoderPair& pair,
                              const GaussianChannelSpec& channel, Rng& rng);

// Monte Carlo estimates over one batch, all in nats.
//   distortion: reconstruction negative log-likelihood through the channel
//   code_rate: E[log q(y|x) - log prior(y)], the information in the code
//   transmission: E[log c(z|y) - log prior(z)], the information surviving
//   the channel
// Densities are subtracted element by element before any reduction, so a
// code distribution equal to the prior gives a code rate of exactly 0, and a
// channel conditional equal to the reference marginal (e.g. a zero-bandwidth
// channel, whose conditional is the in-fill prior itself) gives a
// transmission rate of exactly 0.
struct RateEstimates {
  double distortion_nats = 0.0;
  double code_rate_nats = 0.0;
  double transmission_nats = 0.0;
};

RateEstimates rate_estimators(const Tensor& x, const JointModel& model,
                              const ChannelConfig& channel, Rng& rng);

// Per-row E[log q - log prior] contribution used by both the prior-matching
// loss term and the code-rate estimator; subtract-then-reduce per slot.
Tensor encoder_prior_log_ratio_rows(const DiagonalGaussian& q, const Tensor& y,
                                    const PriorModel& prior);

}  // namespace jscc
