#include "jscc/evaluate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "jscc/mmd.hpp"

namespace jscc {

namespace {

constexpr double kNatsPerBit = 0.6931471805599453;  // log 2

// Substream tags for the evaluation stages, fixed for reproducibility.
constexpr std::uint64_t kDistortionStream = 1;
constexpr std::uint64_t kEstimatorStream = 2;
constexpr std::uint64_t kProxyStream = 3;

double mean_row_sse(const Tensor& x, const Tensor& recon) {
  return mean_all(row_sum(square(sub(x, recon)))).item();
}

// Decoder input for one channel output; the auxiliary latent, when the model
// has one, is drawn from its prior (the generative role of the decoder).
Tensor decoder_input(const JointModel& model, const Tensor& z, Rng& rng) {
  if (!model.alv) return z;
  Tensor v = gaussian_sample(make_standard_gaussian({z.shape()[0], model.alv->aux_dim()}), rng);
  return concat_last({z, v});
}

Tensor joint_channel_pass(const JointModel& model, const LatentCode& code,
                          const ChannelConfig& channel, Rng& rng) {
  switch (channel.kind) {
    case ChannelKind::kGaussian:
      return gaussian_transmit(code, channel.gaussian, rng);
    case ChannelKind::kRelaxedBinary:
      return relaxed_binary_transmit(sigmoid(code.sample), channel.relaxed, rng);
    case ChannelKind::kBandwidth: {
      BandwidthChannelSpec spec = bandwidth_spec_for(channel, model.prior);
      return bandwidth_transmit(code, sample_bandwidth(spec.bandwidth_pmf, rng), spec, rng).z;
    }
  }
  throw std::runtime_error("unreachable channel kind");
}

double joint_distortion(const Tensor& x, const JointModel& model, const LatentCode& code,
                        const ChannelConfig& channel, Rng& rng) {
  if (channel.kind != ChannelKind::kBandwidth) {
    Tensor z = joint_channel_pass(model, code, channel, rng);
    return mean_row_sse(x, model.decoder.mean(decoder_input(model, z, rng)));
  }

  BandwidthChannelSpec spec = bandwidth_spec_for(channel, model.prior);
  double total = 0.0;
  auto measure = [&](std::size_t bandwidth, double weight) {
    Tensor z = bandwidth_transmit(code, bandwidth, spec, rng).z;
    total += weight * mean_row_sse(x, model.decoder.mean(decoder_input(model, z, rng)));
  };
  if (channel.marginalization == Marginalization::kFullSum) {
    for (std::size_t b = 0; b < spec.bandwidth_pmf.size(); ++b) {
      if (spec.bandwidth_pmf[b] > 0.0) measure(b, spec.bandwidth_pmf[b]);
    }
  } else {
    std::size_t k = channel.mc_samples == 0 ? 1 : channel.mc_samples;
    for (std::size_t i = 0; i < k; ++i) {
      measure(sample_bandwidth(spec.bandwidth_pmf, rng), 1.0 / static_cast<double>(k));
    }
  }
  return total;
}

void fill_bits(PipelineMetrics& m) {
  m.rate_bits = m.code_rate_nats / kNatsPerBit;
  m.transmission_bits = m.transmission_nats / kNatsPerBit;
}

Tensor head_rows(const Tensor& t, std::size_t n) {
  std::size_t d = t.shape()[1];
  const std::vector<double>& v = t.values();
  return Tensor::constant({n, d}, std::vector<double>(v.begin(),
                                                      v.begin() + static_cast<std::ptrdiff_t>(n * d)));
}

double proxy_mmd(const Tensor& source_rows, const Tensor& recon_rows, const EvalOptions& options) {
  std::size_t n = std::min<std::size_t>(options.mmd_samples, source_rows.shape()[0]);
  MmdOptions mmd_options;
  mmd_options.bandwidth = options.mmd_bandwidth;
  return mmd_statistic(head_rows(source_rows, n), head_rows(recon_rows, n), mmd_options);
}

}  // namespace

PipelineMetrics evaluate_joint(const JointModel& model, const ChannelConfig& channel,
                               const Dataset& data, const EvalOptions& options) {
  if (data.size() == 0) throw std::runtime_error("evaluation dataset is empty");
  Rng root(options.seed);
  Tensor x = data.images;
  DiagonalGaussian e = model.encoder.encode(x);
  LatentCode code{e.mean, e.mean};

  PipelineMetrics metrics;
  metrics.mmd = std::numeric_limits<double>::quiet_NaN();
  {
    Rng rng = root.child(kDistortionStream);
    metrics.distortion_l2 = joint_distortion(x, model, code, channel, rng);
  }
  {
    Rng rng = root.child(kEstimatorStream);
    RateEstimates est = rate_estimators(x, model, channel, rng);
    metrics.distortion_nats = est.distortion_nats;
    metrics.code_rate_nats = est.code_rate_nats;
    metrics.transmission_nats = est.transmission_nats;
    fill_bits(metrics);
  }
  if (options.mmd_samples >= 2) {
    Rng rng = root.child(kProxyStream);
    Tensor z = joint_channel_pass(model, code, channel, rng);
    Tensor recon = model.decoder.mean(decoder_input(model, z, rng));
    metrics.mmd = proxy_mmd(x, recon, options);
  }
  return metrics;
}

PipelineMetrics evaluate_separate(const SourceVae& source, const ChannelCoderPair& coder,
                                  const ChannelConfig& channel, const Dataset& data,
                                  const EvalOptions& options) {
  if (data.size() == 0) throw std::runtime_error("evaluation dataset is empty");
  if (channel.kind != ChannelKind::kGaussian) {
    throw std::runtime_error(
        "separate pipeline evaluation supports only the fixed-ratio noise channel");
  }
  if (source.encoder.code_dim() != coder.code_dim()) {
    throw std::runtime_error("source code dimension does not match the channel coder");
  }
  Rng root(options.seed);
  Tensor x = data.images;
  DiagonalGaussian e = source.encoder.encode(x);

  PipelineMetrics metrics;
  metrics.mmd = std::numeric_limits<double>::quiet_NaN();

  auto through_channel = [&](const Tensor& y, Rng& rng) {
    Tensor c = coder.encode(y);
    Tensor z = gaussian_transmit(c, c, channel.gaussian, rng);
    return coder.decode(z);
  };

  {
    Rng rng = root.child(kDistortionStream);
    Tensor recon = source.decoder.mean(through_channel(e.mean, rng));
    metrics.distortion_l2 = mean_row_sse(x, recon);
  }
  {
    Rng rng = root.child(kEstimatorStream);
    Tensor y = gaussian_sample(e, rng);
    DiagonalGaussian unit = make_standard_gaussian({x.shape()[0], coder.code_dim()});
    metrics.code_rate_nats = mean_all(row_sum(sub(gaussian_log_density_elemwise(e, y),
                                                  gaussian_log_density_elemwise(unit, y))))
                                 .item();
    Tensor c = coder.encode(y);
    Tensor z = gaussian_transmit(c, c, channel.gaussian, rng);
    Tensor channel_rows = gaussian_channel_log_density_rows(z, c, c, channel.gaussian);
    Tensor reference_rows = row_sum(gaussian_log_density_elemwise(unit, z));
    metrics.transmission_nats = mean_all(sub(channel_rows, reference_rows)).item();
    metrics.distortion_nats = mean_all(source.decoder.nll_rows(x, coder.decode(z))).item();
    fill_bits(metrics);
  }
  if (options.mmd_samples >= 2) {
    Rng rng = root.child(kProxyStream);
    Tensor recon = source.decoder.mean(through_channel(e.mean, rng));
    metrics.mmd = proxy_mmd(x, recon, options);
  }
  return metrics;
}

double clean_reconstruction_l2(const EncoderNet& encoder, const DecoderNet& decoder,
                               const Dataset& data) {
  if (decoder.in_dim() != encoder.code_dim()) {
    throw std::runtime_error("channel-free reconstruction needs a decoder fed by the code alone");
  }
  Tensor x = data.images;
  return mean_row_sse(x, decoder.mean(encoder.encode(x).mean));
}

Dataset encoder_mean_codes(const SourceVae& source, const Dataset& data) {
  Tensor mean = source.encoder.encode(data.images).mean;
  Dataset codes;
  codes.images = Tensor::constant(mean.shape(), mean.values());
  codes.side = 0;
  return codes;
}

PipelineMetrics evaluate_pipeline(const PipelineModels& models, const ChannelConfig& channel,
                                  const Dataset& data, PipelineMode mode,
                                  const EvalOptions& options) {
  if (mode == PipelineMode::kJoint) {
    if (!models.joint) throw std::runtime_error("joint evaluation needs a joint model");
    return evaluate_joint(*models.joint, channel, data, options);
  }
  if (!models.source || !models.coder) {
    throw std::runtime_error("separate evaluation needs a source model and a channel coder");
  }
  return evaluate_separate(*models.source, *models.coder, channel, data, options);
}

}  // namespace jscc
