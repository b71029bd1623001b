#include "jscc/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace jscc {

namespace {

Tensor scalar_zero() { return Tensor::scalar(0.0); }

// (((D + beta * R) + posterior_kl) + alv_kl) + aux, the documented order.
LossBreakdown assemble(Tensor distortion, Tensor rate, Tensor posterior_kl, Tensor alv_kl,
                       Tensor aux, double beta) {
  LossBreakdown out;
  out.beta = beta;
  out.total = add(add(add(add(distortion, mul_scalar(rate, beta)), posterior_kl), alv_kl), aux);
  out.distortion = std::move(distortion);
  out.rate = std::move(rate);
  out.posterior_kl = std::move(posterior_kl);
  out.alv_kl = std::move(alv_kl);
  out.aux = std::move(aux);
  return out;
}

struct ReconTerms {
  Tensor nll;     // scalar: mean reconstruction NLL
  Tensor alv_kl;  // scalar: mean auxiliary posterior KL (zero tensor if unused)
};

// Decoder-side terms for one channel output; draws the auxiliary latent when
// the objective uses it.
ReconTerms decode_terms(const Tensor& x, const Tensor& z, const JointModel& model, bool use_alv,
                        Rng& rng) {
  if (!use_alv) {
    return ReconTerms{mean_all(model.decoder.nll_rows(x, z)), Tensor()};
  }
  AlvComponents::Inference inf = model.alv->infer(x, z, rng);
  Tensor input = concat_last({z, inf.sample});
  return ReconTerms{mean_all(model.decoder.nll_rows(x, input)), mean_all(inf.kl_rows)};
}

struct ChannelTerms {
  Tensor distortion;
  Tensor alv_kl;
};

ChannelTerms reconstruction_through_channel(const Tensor& x, const LatentCode& code,
                                            const JointModel& model, const ChannelConfig& config,
                                            bool use_alv, Rng& rng) {
  switch (config.kind) {
    case ChannelKind::kGaussian: {
      Tensor z = gaussian_transmit(code, config.gaussian, rng);
      ReconTerms t = decode_terms(x, z, model, use_alv, rng);
      return ChannelTerms{t.nll, use_alv ? t.alv_kl : scalar_zero()};
    }
    case ChannelKind::kRelaxedBinary: {
      Tensor z = relaxed_binary_transmit(sigmoid(code.sample), config.relaxed, rng);
      ReconTerms t = decode_terms(x, z, model, use_alv, rng);
      return ChannelTerms{t.nll, use_alv ? t.alv_kl : scalar_zero()};
    }
    case ChannelKind::kBandwidth:
      break;
  }

  BandwidthChannelSpec spec = bandwidth_spec_for(config, model.prior);
  Tensor distortion, alv_kl;
  auto accumulate = [&](std::size_t bandwidth, double weight) {
    ChannelOutput out = bandwidth_transmit(code, bandwidth, spec, rng);
    ReconTerms t = decode_terms(x, out.z, model, use_alv, rng);
    Tensor d = mul_scalar(t.nll, weight);
    distortion = distortion.defined() ? add(distortion, d) : d;
    if (use_alv) {
      Tensor k = mul_scalar(t.alv_kl, weight);
      alv_kl = alv_kl.defined() ? add(alv_kl, k) : k;
    }
  };

  if (config.marginalization == Marginalization::kFullSum) {
    for (std::size_t b = 0; b < spec.bandwidth_pmf.size(); ++b) {
      if (spec.bandwidth_pmf[b] > 0.0) accumulate(b, spec.bandwidth_pmf[b]);
    }
  } else {
    std::size_t k = config.mc_samples == 0 ? 1 : config.mc_samples;
    for (std::size_t i = 0; i < k; ++i) {
      accumulate(sample_bandwidth(spec.bandwidth_pmf, rng), 1.0 / static_cast<double>(k));
    }
  }
  return ChannelTerms{distortion, use_alv ? alv_kl : scalar_zero()};
}

// Shared body of the joint objectives; `use_alv` picks the decoder variant.
LossBreakdown joint_like_loss(const Tensor& x, const JointModel& model,
                              const ChannelConfig& config, double beta, double prior_match_weight,
                              bool use_alv, Rng& rng) {
  if (beta < 0.0) throw std::runtime_error("beta must be >= 0");
  if (prior_match_weight < 0.0) throw std::runtime_error("prior match weight must be >= 0");
  if (use_alv && !model.alv) {
    throw std::runtime_error("auxiliary objective needs a model with auxiliary components");
  }
  if (!use_alv && model.decoder.in_dim() != model.code_dim) {
    throw std::runtime_error(
        "model decoder expects auxiliary inputs; use the auxiliary objective");
  }

  DiagonalGaussian e = model.encoder.encode(x);
  DiagonalGaussian q = model.inference ? model.inference->encode(x) : e;
  Tensor y = gaussian_sample(q, rng);

  // Posterior KL: zero by construction when the posterior is the encoder
  // itself; single-sample estimate of KL(q || e) otherwise.
  Tensor posterior_kl =
      model.inference
          ? mean_all(row_sum(sub(gaussian_log_density_elemwise(q, y),
                                 gaussian_log_density_elemwise(e, y))))
          : scalar_zero();

  LatentCode code{y, e.mean};
  ChannelTerms channel_terms = reconstruction_through_channel(x, code, model, config, use_alv, rng);

  // Prior matching and, for trainable priors, the unit-weight likelihood
  // term. Both use a code sampled from the generative encoder; the channel
  // path sample is reused when it already comes from the encoder.
  Tensor y_enc = model.inference ? gaussian_sample(e, rng) : y;
  Tensor prior_match;
  if (model.prior.kind() == PriorKind::kStandard) {
    prior_match = mean_all(
        gaussian_kl_rows(e, make_standard_gaussian({x.shape()[0], model.code_dim})));
  } else {
    prior_match = mean_all(encoder_prior_log_ratio_rows(e, y_enc, model.prior));
  }
  Tensor rate = mul_scalar(prior_match, prior_match_weight);
  Tensor aux =
      model.prior.kind() == PriorKind::kAutoregressive
          ? mean_all(neg(model.prior.log_density_rows(stop_gradient(y_enc))))
          : scalar_zero();

  return assemble(channel_terms.distortion, rate, posterior_kl, channel_terms.alv_kl, aux, beta);
}

}  // namespace

std::vector<double> default_bandwidth_pmf(std::size_t slot_count) {
  if (slot_count == 0) throw std::runtime_error("bandwidth pmf needs at least one slot");
  std::vector<double> pmf(slot_count + 1, 1.0 / static_cast<double>(slot_count));
  pmf[0] = 0.0;
  return pmf;
}

std::vector<double> point_mass_pmf(std::size_t slot_count, std::size_t bandwidth) {
  if (bandwidth > slot_count) throw std::runtime_error("point-mass bandwidth exceeds slot count");
  std::vector<double> pmf(slot_count + 1, 0.0);
  pmf[bandwidth] = 1.0;
  return pmf;
}

BandwidthChannelSpec bandwidth_spec_for(const ChannelConfig& config, const PriorModel& prior) {
  BandwidthChannelSpec spec{prior.partition(),
                            config.bandwidth_pmf.empty()
                                ? default_bandwidth_pmf(prior.partition().slot_count())
                                : config.bandwidth_pmf,
                            config.gaussian, &prior};
  spec.validate();
  return spec;
}

JointModel make_joint_model(ParameterStore& params, const JointModelConfig& config) {
  if (config.slot_count == 0 || config.code_dim % config.slot_count != 0) {
    throw std::runtime_error("code dimension must divide evenly into slots");
  }
  JointModel model;
  model.source_dim = config.source_dim;
  model.code_dim = config.code_dim;
  model.encoder = EncoderNet(params, "encoder", config.source_dim, config.code_dim, config.width,
                             config.hidden_layers, config.squash_log_std);
  std::size_t decoder_in = config.code_dim + (config.use_alv ? config.aux_dim : 0);
  model.decoder = DecoderNet(params, "decoder", decoder_in, config.source_dim, config.width,
                             config.hidden_layers, config.sigma_obs);
  model.prior = PriorModel(params, "prior", config.prior_kind,
                           BandwidthPartition::equal_slots(config.code_dim, config.slot_count),
                           config.prior_width);
  if (config.use_alv) {
    model.alv.emplace(params, "aux_posterior", config.source_dim, config.code_dim, config.aux_dim,
                      config.width, config.hidden_layers);
  }
  if (config.use_inference_net) {
    model.inference.emplace(params, "inference", config.source_dim, config.code_dim, config.width,
                            config.hidden_layers, config.squash_log_std);
  }
  return model;
}

SourceVae make_source_vae(ParameterStore& params, const JointModelConfig& config) {
  SourceVae vae;
  vae.encoder = EncoderNet(params, "src_encoder", config.source_dim, config.code_dim, config.width,
                           config.hidden_layers, config.squash_log_std);
  vae.decoder = DecoderNet(params, "src_decoder", config.code_dim, config.source_dim, config.width,
                           config.hidden_layers, config.sigma_obs);
  return vae;
}

Tensor encoder_prior_log_ratio_rows(const DiagonalGaussian& q, const Tensor& y,
                                    const PriorModel& prior) {
  const BandwidthPartition& partition = prior.partition();
  if (y.rank() != 2 || y.shape()[1] != partition.total_dim()) {
    throw std::runtime_error("code/prior dimension mismatch: " + format_shape(y.shape()));
  }
  std::size_t batch = y.shape()[0];
  Tensor acc;
  for (std::size_t t = 0; t < partition.slot_count(); ++t) {
    auto [a, b] = partition.slot_range(t);
    Tensor y_t = slice_last(y, a, b);
    DiagonalGaussian q_t{slice_last(q.mean, a, b), slice_last(q.log_std, a, b)};
    Tensor prefix = (a == 0) ? Tensor() : slice_last(y, 0, a);
    DiagonalGaussian p_t = prior.slot_distribution(t, prefix, batch);
    Tensor diff = row_sum(sub(gaussian_log_density_elemwise(q_t, y_t),
                              gaussian_log_density_elemwise(p_t, y_t)));
    acc = acc.defined() ? add(acc, diff) : diff;
  }
  return acc;
}

LossBreakdown source_vae_loss(const Tensor& x, const SourceVae& model, double beta, Rng& rng) {
  if (beta < 0.0) throw std::runtime_error("beta must be >= 0");
  DiagonalGaussian q = model.encoder.encode(x);
  Tensor y = gaussian_sample(q, rng);
  Tensor distortion = mean_all(model.decoder.nll_rows(x, y));
  Tensor rate = mean_all(
      gaussian_kl_rows(q, make_standard_gaussian({x.shape()[0], model.encoder.code_dim()})));
  return assemble(distortion, rate, scalar_zero(), scalar_zero(), scalar_zero(), beta);
}

LossBreakdown joint_loss(const Tensor& x, const JointModel& model, const ChannelConfig& channel,
                         double beta, double prior_match_weight, Rng& rng) {
  return joint_like_loss(x, model, channel, beta, prior_match_weight, /*use_alv=*/false, rng);
}

LossBreakdown aux_latent_loss(const Tensor& x, const JointModel& model,
                              const ChannelConfig& channel, double beta, double prior_match_weight,
                              Rng& rng) {
  return joint_like_loss(x, model, channel, beta, prior_match_weight, /*use_alv=*/true, rng);
}

LossBreakdown channel_ae_loss(const Tensor& y, const ChannelCoderPair& pair,
                              const GaussianChannelSpec& channel, Rng& rng) {
  Tensor encoded = pair.encode(y);
  Tensor z = gaussian_transmit(encoded, encoded, channel, rng);
  Tensor decoded = pair.decode(z);
  Tensor distortion = mean_all(row_sum(square(sub(y, decoded))));
  return assemble(distortion, scalar_zero(), scalar_zero(), scalar_zero(), scalar_zero(), 0.0);
}

RateEstimates rate_estimators(const Tensor& x, const JointModel& model,
                              const ChannelConfig& channel, Rng& rng) {
  DiagonalGaussian e = model.encoder.encode(x);
  Tensor y = gaussian_sample(e, rng);
  LatentCode code{y, e.mean};

  RateEstimates out;
  out.code_rate_nats = mean_all(encoder_prior_log_ratio_rows(e, y, model.prior)).item();

  Tensor z;
  switch (channel.kind) {
    case ChannelKind::kGaussian: {
      z = gaussian_transmit(code, channel.gaussian, rng);
      Tensor c_rows = gaussian_channel_log_density_rows(z, y, e.mean, channel.gaussian);
      out.transmission_nats = mean_all(sub(c_rows, model.prior.log_density_rows(z))).item();
      break;
    }
    case ChannelKind::kBandwidth: {
      BandwidthChannelSpec spec = bandwidth_spec_for(channel, model.prior);
      ChannelOutput ch = bandwidth_transmit(code, sample_bandwidth(spec.bandwidth_pmf, rng), spec,
                                            rng);
      z = ch.z;
      std::vector<double> cond = bandwidth_conditional_log_density_rows(z, code, spec);
      std::vector<double> prior_rows = model.prior.log_density_rows(z).values();
      double total = 0.0;
      for (std::size_t r = 0; r < cond.size(); ++r) total += cond[r] - prior_rows[r];
      out.transmission_nats = total / static_cast<double>(cond.size());
      break;
    }
    case ChannelKind::kRelaxedBinary: {
      Tensor y_unit = sigmoid(y);
      z = relaxed_binary_transmit(y_unit, channel.relaxed, rng);
      Tensor c_rows = row_sum(relaxed_binary_log_density(z, y_unit, channel.relaxed));
      out.transmission_nats = mean_all(sub(c_rows, model.prior.log_density_rows(z))).item();
      break;
    }
  }

  Tensor decoder_input = z;
  if (model.alv) {
    Tensor v = gaussian_sample(make_standard_gaussian({x.shape()[0], model.alv->aux_dim()}), rng);
    decoder_input = concat_last({z, v});
  }
  out.distortion_nats = mean_all(model.decoder.nll_rows(x, decoder_input)).item();
  return out;
}

}  // namespace jscc
