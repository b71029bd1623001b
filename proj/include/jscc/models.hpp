#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jscc/channels.hpp"
#include "jscc/distributions.hpp"
#include "jscc/parameter_store.hpp"

namespace jscc {

// Fully connected network with tanh hidden layers and a linear head. Weights
// are initialized N(0, 1/fan_in) and biases to zero, in registration order.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& params, const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
      std::size_t width, std::size_t hidden_layers);

  Tensor forward(const Tensor& x) const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  // Bias of the linear head; exposed so owners can reshape the initial output
  // distribution (e.g. start a log-std head at sigma = 1).
  Tensor head_bias() const { return biases_.back(); }
  // With zero hidden layers the map is a single affine layer; this pins it to
  // the identity (requires in_dim == out_dim).
  void set_identity();

 private:
  std::size_t in_dim_ = 0, out_dim_ = 0;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

// Maps a source batch [batch, source_dim] to a diagonal Gaussian over the
// code space. When squash_log_std is set (the default), raw log-std head
// outputs pass through -2 + 4*tanh(.), bounding log-std to (-6, 2); the head
// bias starts at atanh(1/2) so the initial scale is about 1. With the squash
// off the head is linear and a zero-initialized network emits exactly the
// standard normal.
class EncoderNet {
 public:
  EncoderNet() = default;
  EncoderNet(ParameterStore& params, const std::string& prefix, std::size_t source_dim,
             std::size_t code_dim, std::size_t width, std::size_t hidden_layers,
             bool squash_log_std);

  DiagonalGaussian encode(const Tensor& x) const;
  std::size_t code_dim() const { return code_dim_; }

 private:
  Mlp net_;
  std::size_t code_dim_ = 0;
  bool squash_log_std_ = true;
};

// Maps a code (plus auxiliary variable, if any) to the mean of a fixed-scale
// Gaussian over source space.
class DecoderNet {
 public:
  DecoderNet() = default;
  DecoderNet(ParameterStore& params, const std::string& prefix, std::size_t in_dim,
             std::size_t source_dim, std::size_t width, std::size_t hidden_layers,
             double sigma_obs);

  Tensor mean(const Tensor& z) const { return net_.forward(z); }
  // Per-row Gaussian negative log-likelihood of x under N(mean(z), sigma^2 I).
  Tensor nll_rows(const Tensor& x, const Tensor& z) const;
  double sigma_obs() const { return sigma_obs_; }
  std::size_t in_dim() const { return net_.in_dim(); }

 private:
  Mlp net_;
  double sigma_obs_ = 1.0;
};

enum class PriorKind { kStandard, kAutoregressive };

// Prior over the code space, factorized across bandwidth slots. STANDARD is
// the parameter-free unit Gaussian. AUTOREGRESSIVE gives each slot a Gaussian
// whose parameters come from a network reading the (zero-padded) preceding
// slots, so the factorization is strictly causal in slot order.
class PriorModel : public SlotPrior {
 public:
  PriorModel() = default;
  PriorModel(ParameterStore& params, const std::string& prefix, PriorKind kind,
             BandwidthPartition partition, std::size_t width);

  PriorKind kind() const { return kind_; }
  const BandwidthPartition& partition() const { return partition_; }

  DiagonalGaussian slot_distribution(std::size_t t, const Tensor& prefix,
                                     std::size_t batch) const override;

  // Full-code log-density, one value per row: sum over slots of the causal
  // slot densities evaluated at slices of z.
  Tensor log_density_rows(const Tensor& z) const;
  // Sequential ancestral sample of a whole code.
  Tensor sample(std::size_t batch, Rng& rng) const;

 private:
  PriorKind kind_ = PriorKind::kStandard;
  BandwidthPartition partition_{1, {1}};
  std::vector<Mlp> slot_nets_;
};

// Auxiliary latent variable attached to the decoder. The posterior network
// reads the source and the channel output; samples are reparameterized and
// scored against a unit Gaussian.
class AlvComponents {
 public:
  AlvComponents() = default;
  AlvComponents(ParameterStore& params, const std::string& prefix, std::size_t source_dim,
                std::size_t code_dim, std::size_t aux_dim, std::size_t width,
                std::size_t hidden_layers);

  std::size_t aux_dim() const { return aux_dim_; }

  struct Inference {
    Tensor sample;    // [batch, aux_dim]
    Tensor kl_rows;   // [batch], KL(posterior || N(0, I)) per row
  };
  Inference infer(const Tensor& x, const Tensor& z, Rng& rng) const;

 private:
  Mlp posterior_;
  std::size_t aux_dim_ = 0;
};

// Deterministic channel encoder/decoder pair wrapped around a fixed channel,
// used when source coding and channel coding are trained separately.
class ChannelCoderPair {
 public:
  ChannelCoderPair() = default;
  ChannelCoderPair(ParameterStore& params, const std::string& prefix, std::size_t code_dim,
                   std::size_t width, std::size_t hidden_layers);

  Tensor encode(const Tensor& y) const { return encoder_.forward(y); }
  Tensor decode(const Tensor& z) const { return decoder_.forward(z); }
  std::size_t code_dim() const { return code_dim_; }
  // Pins both maps to the identity; requires zero hidden layers.
  void set_identity();

 private:
  std::size_t code_dim_ = 0;
  Mlp encoder_;
  Mlp decoder_;
};

}  // namespace jscc
