#include "jscc/models.hpp"

#include <cmath>
#include <stdexcept>

namespace jscc {

namespace {

// atanh(1/2): head bias making -2 + 4*tanh(bias) equal 0, i.e. initial
// sigma = 1 for squashed log-std heads.
const double kSigmaOneBias = 0.5 * std::log(3.0);

Tensor squash_log_std(const Tensor& raw) { return add_scalar(mul_scalar(tanh(raw), 4.0), -2.0); }

DiagonalGaussian split_gaussian_head(const Tensor& out, std::size_t dim, bool squash) {
  Tensor mean = slice_last(out, 0, dim);
  Tensor raw = slice_last(out, dim, 2 * dim);
  return DiagonalGaussian{mean, squash ? squash_log_std(raw) : raw};
}

// Sets the second half of a 2*dim head bias so the initial squashed log-std
// is zero.
void start_at_unit_sigma(Mlp& net, std::size_t dim) {
  Tensor bias = net.head_bias();
  std::vector<double>& b = bias.mutable_values();
  for (std::size_t i = dim; i < 2 * dim; ++i) b[i] = kSigmaOneBias;
}

}  // namespace

Mlp::Mlp(ParameterStore& params, const std::string& prefix, std::size_t in_dim,
         std::size_t out_dim, std::size_t width, std::size_t hidden_layers)
    : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim == 0 || out_dim == 0) throw std::runtime_error("Mlp: zero-width interface");
  if (hidden_layers > 0 && width == 0) throw std::runtime_error("Mlp: hidden width must be > 0");
  std::size_t fan_in = in_dim;
  for (std::size_t layer = 0; layer < hidden_layers; ++layer) {
    std::string tag = prefix + ".h" + std::to_string(layer);
    weights_.push_back(params.gaussian(tag + ".w", {fan_in, width}, 1.0 / std::sqrt(double(fan_in))));
    biases_.push_back(params.zeros(tag + ".b", {width}));
    fan_in = width;
  }
  weights_.push_back(
      params.gaussian(prefix + ".out.w", {fan_in, out_dim}, 1.0 / std::sqrt(double(fan_in))));
  biases_.push_back(params.zeros(prefix + ".out.b", {out_dim}));
}

Tensor Mlp::forward(const Tensor& x) const {
  if (weights_.empty()) throw std::runtime_error("Mlp: forward on a default-constructed net");
  Tensor h = x;
  for (std::size_t layer = 0; layer + 1 < weights_.size(); ++layer) {
    h = tanh(affine(h, weights_[layer], biases_[layer]));
  }
  return affine(h, weights_.back(), biases_.back());
}

void Mlp::set_identity() {
  if (weights_.size() != 1) throw std::runtime_error("set_identity requires zero hidden layers");
  if (in_dim_ != out_dim_) throw std::runtime_error("set_identity requires a square map");
  std::vector<double>& w = weights_[0].mutable_values();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < in_dim_; ++i) w[i * out_dim_ + i] = 1.0;
  std::vector<double>& b = biases_[0].mutable_values();
  std::fill(b.begin(), b.end(), 0.0);
}

EncoderNet::EncoderNet(ParameterStore& params, const std::string& prefix, std::size_t source_dim,
                       std::size_t code_dim, std::size_t width, std::size_t hidden_layers,
                       bool squash_log_std)
    : net_(params, prefix, source_dim, 2 * code_dim, width, hidden_layers),
      code_dim_(code_dim),
      squash_log_std_(squash_log_std) {
  if (squash_log_std) start_at_unit_sigma(net_, code_dim);
}

DiagonalGaussian EncoderNet::encode(const Tensor& x) const {
  return split_gaussian_head(net_.forward(x), code_dim_, squash_log_std_);
}

DecoderNet::DecoderNet(ParameterStore& params, const std::string& prefix, std::size_t in_dim,
                       std::size_t source_dim, std::size_t width, std::size_t hidden_layers,
                       double sigma_obs)
    : net_(params, prefix, in_dim, source_dim, width, hidden_layers), sigma_obs_(sigma_obs) {
  if (!(sigma_obs > 0.0)) throw std::runtime_error("decoder observation scale must be > 0");
}

Tensor DecoderNet::nll_rows(const Tensor& x, const Tensor& z) const {
  Tensor m = mean(z);
  if (x.rank() != 2) throw std::runtime_error("decoder NLL expects a rank-2 batch");
  std::size_t dim = x.shape()[1];
  // 1/(2 sigma^2) ||x - m||^2 + (dim/2) log(2 pi sigma^2), per row.
  double inv_two_var = 0.5 / (sigma_obs_ * sigma_obs_);
  double log_norm = 0.5 * static_cast<double>(dim) *
                    std::log(2.0 * 3.14159265358979323846 * sigma_obs_ * sigma_obs_);
  return add_scalar(mul_scalar(row_sum(square(sub(x, m))), inv_two_var), log_norm);
}

PriorModel::PriorModel(ParameterStore& params, const std::string& prefix, PriorKind kind,
                       BandwidthPartition partition, std::size_t width)
    : kind_(kind), partition_(std::move(partition)) {
  if (kind_ == PriorKind::kAutoregressive) {
    for (std::size_t t = 0; t < partition_.slot_count(); ++t) {
      std::size_t dim = partition_.slot_size(t);
      slot_nets_.emplace_back(params, prefix + ".slot" + std::to_string(t),
                              partition_.total_dim(), 2 * dim, width, 1);
      start_at_unit_sigma(slot_nets_.back(), dim);
    }
  }
}

DiagonalGaussian PriorModel::slot_distribution(std::size_t t, const Tensor& prefix,
                                               std::size_t batch) const {
  auto [a, b] = partition_.slot_range(t);
  std::size_t dim = b - a;
  if (prefix.defined() && (prefix.rank() != 2 || prefix.shape()[1] != a || prefix.shape()[0] != batch)) {
    throw std::runtime_error("slot prefix must be [batch, " + std::to_string(a) + "], got " +
                             format_shape(prefix.shape()));
  }
  if (!prefix.defined() && a != 0) {
    throw std::runtime_error("slot " + std::to_string(t) + " needs a prefix");
  }
  if (kind_ == PriorKind::kStandard) {
    return make_standard_gaussian({batch, dim});
  }
  // Zero-pad the prefix to the full code width; strictly causal by
  // construction since positions >= a carry no signal.
  Tensor padded;
  if (a == 0) {
    padded = Tensor::zeros({batch, partition_.total_dim()});
  } else if (a == partition_.total_dim()) {
    padded = prefix;
  } else {
    padded = concat_last({prefix, Tensor::zeros({batch, partition_.total_dim() - a})});
  }
  return split_gaussian_head(slot_nets_[t].forward(padded), dim, /*squash=*/true);
}

Tensor PriorModel::log_density_rows(const Tensor& z) const {
  if (z.rank() != 2 || z.shape()[1] != partition_.total_dim()) {
    throw std::runtime_error("prior density expects [batch, " +
                             std::to_string(partition_.total_dim()) + "], got " +
                             format_shape(z.shape()));
  }
  std::size_t batch = z.shape()[0];
  Tensor acc;
  for (std::size_t t = 0; t < partition_.slot_count(); ++t) {
    auto [a, b] = partition_.slot_range(t);
    Tensor prefix = (a == 0) ? Tensor() : slice_last(z, 0, a);
    DiagonalGaussian d = slot_distribution(t, prefix, batch);
    Tensor rows = gaussian_log_density_rows(d, slice_last(z, a, b));
    acc = acc.defined() ? add(acc, rows) : rows;
  }
  return acc;
}

Tensor PriorModel::sample(std::size_t batch, Rng& rng) const {
  std::vector<Tensor> parts;
  for (std::size_t t = 0; t < partition_.slot_count(); ++t) {
    Tensor prefix = parts.empty() ? Tensor() : concat_last(parts);
    DiagonalGaussian d = slot_distribution(t, prefix, batch);
    parts.push_back(gaussian_sample(d, rng));
  }
  return concat_last(parts);
}

AlvComponents::AlvComponents(ParameterStore& params, const std::string& prefix,
                             std::size_t source_dim, std::size_t code_dim, std::size_t aux_dim,
                             std::size_t width, std::size_t hidden_layers)
    : posterior_(params, prefix, source_dim + code_dim, 2 * aux_dim, width, hidden_layers),
      aux_dim_(aux_dim) {
  if (aux_dim == 0) throw std::runtime_error("auxiliary latent must have dimension >= 1");
  start_at_unit_sigma(posterior_, aux_dim);
}

AlvComponents::Inference AlvComponents::infer(const Tensor& x, const Tensor& z, Rng& rng) const {
  DiagonalGaussian q = split_gaussian_head(posterior_.forward(concat_last({x, z})), aux_dim_,
                                           /*squash=*/true);
  DiagonalGaussian unit = make_standard_gaussian({x.shape()[0], aux_dim_});
  return Inference{gaussian_sample(q, rng), gaussian_kl_rows(q, unit)};
}

ChannelCoderPair::ChannelCoderPair(ParameterStore& params, const std::string& prefix,
                                   std::size_t code_dim, std::size_t width,
                                   std::size_t hidden_layers)
    : code_dim_(code_dim),
      encoder_(params, prefix + ".enc", code_dim, code_dim, width, hidden_layers),
      decoder_(params, prefix + ".dec", code_dim, code_dim, width, hidden_layers) {}

void ChannelCoderPair::set_identity() {
  encoder_.set_identity();
  decoder_.set_identity();
}

}  // namespace jscc
