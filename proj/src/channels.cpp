#include "jscc/channels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace jscc {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};

void require_rank2_pair(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined()) throw std::runtime_error(std::string(op) + ": undefined input");
  if (a.rank() != 2 || b.shape() != a.shape()) {
    throw std::runtime_error(std::string(op) + ": inputs must be matching rank-2 tensors, got " +
                             format_shape(a.shape()) + " and " + format_shape(b.shape()));
  }
}

Tensor noise_like(const Tensor& t, Rng& rng) {
  std::vector<double> w(t.size());
  for (double& v : w) v = rng.normal();
  return Tensor::constant(t.shape(), std::move(w));
}

void check_snr(double snr) {
  if (!(snr > 0.0)) throw std::runtime_error("channel SNR must be > 0");
}

Tensor noise_scale(const Tensor& mean, double snr) {
  return mul_scalar(absval(mean), 1.0 / snr);
}

}  // namespace

Tensor gaussian_transmit(const Tensor& y, const Tensor& mean, const GaussianChannelSpec& spec,
                         Rng& rng) {
  check_snr(spec.snr);
  if (!y.defined() || !mean.defined() || y.shape() != mean.shape()) {
    throw std::runtime_error("gaussian_transmit: y and mean must share a shape");
  }
  return add(y, mul(noise_scale(mean, spec.snr), noise_like(y, rng)));
}

Tensor gaussian_transmit(const LatentCode& code, const GaussianChannelSpec& spec, Rng& rng) {
  return gaussian_transmit(code.sample, code.mean, spec, rng);
}

Tensor gaussian_channel_log_density_rows(const Tensor& z, const Tensor& y, const Tensor& mean,
                                         const GaussianChannelSpec& spec) {
  check_snr(spec.snr);
  require_rank2_pair("gaussian_channel_log_density", z, y);
  for (double m : mean.values()) {
    if (m == 0.0) {
      throw std::runtime_error(
          "gaussian_channel_log_density: a code coordinate has zero mean, channel is degenerate");
    }
  }
  return gaussian_log_density_std_rows(y, noise_scale(mean, spec.snr), z);
}

double gaussian_capacity(double snr) {
  if (!(snr >= 0.0)) throw std::runtime_error("gaussian_capacity: snr must be >= 0");
  return 0.5 * std::log2(1.0 + snr);
}

BandwidthPartition::BandwidthPartition(std::size_t total_dim, std::vector<std::size_t> slot_sizes)
    : total_dim_(total_dim) {
  if (slot_sizes.empty()) throw std::runtime_error("partition needs at least one slot");
  bounds_.push_back(0);
  for (std::size_t s : slot_sizes) {
    if (s == 0) throw std::runtime_error("partition slots must be non-empty");
    bounds_.push_back(bounds_.back() + s);
  }
  if (bounds_.back() != total_dim) {
    throw std::runtime_error("partition slots cover " + std::to_string(bounds_.back()) +
                             " of " + std::to_string(total_dim) + " dimensions");
  }
}

BandwidthPartition BandwidthPartition::equal_slots(std::size_t total_dim, std::size_t slot_count) {
  if (slot_count == 0 || total_dim % slot_count != 0) {
    throw std::runtime_error("slot count must divide the code dimension");
  }
  return BandwidthPartition(total_dim,
                            std::vector<std::size_t>(slot_count, total_dim / slot_count));
}

std::pair<std::size_t, std::size_t> BandwidthPartition::slot_range(std::size_t t) const {
  if (t >= slot_count()) throw std::runtime_error("slot index out of range");
  return {bounds_[t], bounds_[t + 1]};
}

std::size_t BandwidthPartition::slot_size(std::size_t t) const {
  auto [a, b] = slot_range(t);
  return b - a;
}

void BandwidthChannelSpec::validate() const {
  check_snr(inner.snr);
  if (prior == nullptr) throw std::runtime_error("bandwidth channel needs a prior");
  if (bandwidth_pmf.size() != partition.slot_count() + 1) {
    throw std::runtime_error("bandwidth pmf must have one entry per bandwidth 0..T");
  }
  double total = 0.0;
  for (double p : bandwidth_pmf) {
    if (!(p >= 0.0)) throw std::runtime_error("bandwidth pmf entries must be >= 0");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw std::runtime_error("bandwidth pmf must sum to 1");
}

ChannelOutput bandwidth_transmit(const LatentCode& code, std::size_t bandwidth,
                                 const BandwidthChannelSpec& spec, Rng& rng) {
  spec.validate();
  require_rank2_pair("bandwidth_transmit", code.sample, code.mean);
  const std::size_t slots = spec.partition.slot_count();
  if (bandwidth > slots) throw std::runtime_error("bandwidth exceeds slot count");
  if (code.sample.shape()[1] != spec.partition.total_dim()) {
    throw std::runtime_error("code dimension does not match the partition");
  }
  std::size_t batch = code.sample.shape()[0];

  ChannelOutput out;
  out.bandwidth = bandwidth;
  std::vector<Tensor> parts;
  for (std::size_t t = 0; t < slots; ++t) {
    auto [a, b] = spec.partition.slot_range(t);
    Tensor prefix = parts.empty() ? Tensor() : concat_last(parts);
    if (t < bandwidth) {
      Tensor y_t = slice_last(code.sample, a, b);
      Tensor mu_t = slice_last(code.mean, a, b);
      Tensor z_t = gaussian_transmit(y_t, mu_t, spec.inner, rng);
      out.slot_log_density.push_back(
          sum_all(gaussian_channel_log_density_rows(z_t, y_t, mu_t, spec.inner)));
      out.prior_filled.push_back(false);
      parts.push_back(z_t);
    } else {
      DiagonalGaussian d = spec.prior->slot_distribution(t, prefix, batch);
      Tensor z_t = gaussian_sample(d, rng);
      out.slot_log_density.push_back(gaussian_log_density(d, z_t));
      out.prior_filled.push_back(true);
      parts.push_back(z_t);
    }
  }
  out.z = concat_last(parts);
  return out;
}

std::size_t sample_bandwidth(const std::vector<double>& pmf, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t b = 0; b < pmf.size(); ++b) {
    acc += pmf[b];
    if (u <= acc) return b;
  }
  return pmf.size() - 1;
}

Tensor marginalize_bandwidth(const LatentCode& code, const BandwidthChannelSpec& spec,
                             Marginalization mode, std::size_t mc_samples,
                             const std::function<Tensor(const ChannelOutput&)>& integrand,
                             Rng& rng) {
  spec.validate();
  if (mode == Marginalization::kFullSum) {
    Tensor acc;
    for (std::size_t b = 0; b < spec.bandwidth_pmf.size(); ++b) {
      if (spec.bandwidth_pmf[b] <= 0.0) continue;
      Tensor term = mul_scalar(integrand(bandwidth_transmit(code, b, spec, rng)),
                               spec.bandwidth_pmf[b]);
      acc = acc.defined() ? add(acc, term) : term;
    }
    if (!acc.defined()) throw std::runtime_error("bandwidth pmf has no positive entry");
    return acc;
  }
  if (mc_samples == 0) throw std::runtime_error("Monte Carlo marginalization needs >= 1 sample");
  Tensor acc;
  for (std::size_t i = 0; i < mc_samples; ++i) {
    std::size_t b = sample_bandwidth(spec.bandwidth_pmf, rng);
    Tensor term = integrand(bandwidth_transmit(code, b, spec, rng));
    acc = acc.defined() ? add(acc, term) : term;
  }
  return mul_scalar(acc, 1.0 / static_cast<double>(mc_samples));
}

std::vector<double> bandwidth_conditional_log_density_rows(const Tensor& z, const LatentCode& code,
                                                           const BandwidthChannelSpec& spec) {
  spec.validate();
  require_rank2_pair("bandwidth_conditional_log_density", z, code.sample);
  const std::size_t slots = spec.partition.slot_count();
  const std::size_t batch = z.shape()[0];

  // Per-slot row densities are bandwidth independent; compute each once.
  std::vector<std::vector<double>> channel_rows(slots), prior_rows(slots);
  std::vector<Tensor> prefix_parts;
  for (std::size_t t = 0; t < slots; ++t) {
    auto [a, b] = spec.partition.slot_range(t);
    Tensor z_t = slice_last(z, a, b);
    Tensor y_t = slice_last(code.sample, a, b);
    Tensor mu_t = slice_last(code.mean, a, b);
    channel_rows[t] = gaussian_channel_log_density_rows(z_t, y_t, mu_t, spec.inner).values();
    Tensor prefix = prefix_parts.empty() ? Tensor() : concat_last(prefix_parts);
    DiagonalGaussian d = spec.prior->slot_distribution(t, prefix, batch);
    prior_rows[t] = gaussian_log_density_rows(d, z_t).values();
    prefix_parts.push_back(z_t);
  }

  std::vector<std::vector<double>> terms;  // one vector of row log-terms per bandwidth
  for (std::size_t bw = 0; bw < spec.bandwidth_pmf.size(); ++bw) {
    double p = spec.bandwidth_pmf[bw];
    if (p <= 0.0) continue;
    std::vector<double> rows(batch, std::log(p));
    for (std::size_t t = 0; t < slots; ++t) {
      const std::vector<double>& src = (t < bw) ? channel_rows[t] : prior_rows[t];
      for (std::size_t r = 0; r < batch; ++r) rows[r] += src[r];
    }
    terms.push_back(std::move(rows));
  }

  // Max-shifted log-sum-exp over bandwidths; with a single positive-mass
  // bandwidth the shift makes the result equal that term exactly.
  std::vector<double> out(batch);
  for (std::size_t r = 0; r < batch; ++r) {
    double m = terms[0][r];
    for (const auto& rows : terms) m = std::max(m, rows[r]);
    double acc = 0.0;
    for (const auto& rows : terms) acc += std::exp(rows[r] - m);
    out[r] = terms.size() == 1 ? m : m + std::log(acc);
  }
  return out;
}

Tensor relaxed_binary_map(const Tensor& y, const Tensor& w) {
  Tensor num = add_scalar(mul_scalar(w, 2.0), -1.0);
  Tensor den = mul_scalar(add_scalar(mul_scalar(y, 2.0), -1.0), 2.0);
  return add_scalar(mul(num, reciprocal(den)), 0.5);
}

namespace {

// Pushes values within 1e-6 of 1/2 to the nearest side (exactly 1/2 goes up).
// Identity gradient: the nudge is constant on each side of the threshold.
Tensor clamp_away_from_half(const Tensor& y) {
  const std::vector<double>& in = y.values();
  std::vector<double> out(in.size());
  std::uint64_t clamped = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    double v = in[i];
    if (std::fabs(v - 0.5) < 1e-6) {
      out[i] = v >= 0.5 ? 0.5 + 1e-6 : 0.5 - 1e-6;
      ++clamped;
    } else {
      out[i] = v;
    }
  }
  if (clamped) g_clamp_count.fetch_add(clamped, std::memory_order_relaxed);
  Tensor shifted = Tensor::constant(y.shape(), std::move(out));
  // add(y - stop_gradient(y), shifted_constant): value = shifted, grad flows to y.
  return add(sub(y, stop_gradient(y)), shifted);
}

}  // namespace

Tensor relaxed_binary_transmit(const Tensor& y, const RelaxedBinarySpec& spec, Rng& rng) {
  if (!y.defined()) throw std::runtime_error("relaxed_binary_transmit: undefined input");
  for (double v : y.values()) {
    if (!(v > 0.0 && v < 1.0))
      throw std::runtime_error("relaxed_binary_transmit: inputs must lie strictly inside (0, 1)");
  }
  if (!(spec.keep_prob > 0.0 && spec.keep_prob < 1.0))
    throw std::runtime_error("relaxed binary keep probability must lie in (0, 1)");
  double log_alpha_w = std::log(spec.keep_prob) - std::log1p(-spec.keep_prob);
  BinaryConcrete noise{Tensor::full(y.shape(), log_alpha_w), spec.noise_temperature};
  Tensor w = binary_concrete_sample(noise, rng).value;
  return relaxed_binary_map(clamp_away_from_half(y), w);
}

Tensor relaxed_binary_log_density(const Tensor& z, const Tensor& y, const RelaxedBinarySpec& spec) {
  if (!z.defined() || !y.defined() || z.shape() != y.shape())
    throw std::runtime_error("relaxed_binary_log_density: z and y must share a shape");
  Tensor two_z = add_scalar(mul_scalar(z, 2.0), -1.0);
  Tensor two_y = add_scalar(mul_scalar(y, 2.0), -1.0);
  Tensor w = add_scalar(mul_scalar(mul(two_z, two_y), 0.5), 0.5);
  for (double v : w.values()) {
    if (!(v > 0.0 && v < 1.0))
      throw std::runtime_error(
          "relaxed_binary_log_density: transformed noise argument fell outside (0, 1)");
  }
  double log_alpha_w = std::log(spec.keep_prob) - std::log1p(-spec.keep_prob);
  Tensor bc = binary_concrete_log_density(w, Tensor::full(w.shape(), log_alpha_w),
                                          spec.noise_temperature);
  return add(bc, log(absval(two_y)));
}

double relaxed_binary_logpdf(double z, double y, const RelaxedBinarySpec& spec) {
  double w = 0.5 * (2.0 * z - 1.0) * (2.0 * y - 1.0) + 0.5;
  if (!(w > 0.0 && w < 1.0))
    throw std::runtime_error(
        "relaxed_binary_logpdf: transformed noise argument fell outside (0, 1)");
  double log_alpha_w = std::log(spec.keep_prob) - std::log1p(-spec.keep_prob);
  return binary_concrete_logpdf(w, log_alpha_w, spec.noise_temperature) +
         std::log(std::fabs(2.0 * y - 1.0));
}

std::uint64_t relaxed_binary_clamp_count() { return g_clamp_count.load(std::memory_order_relaxed); }

void reset_relaxed_binary_clamp_count() { g_clamp_count.store(0, std::memory_order_relaxed); }

double binary_snr(double keep_prob, double input_prob) {
  double p = keep_prob, py = input_prob;
  // Numerator grouped as (2p - 1) p_y + (1/2 - p): algebraically identical to
  // the ungrouped form and exactly zero when p = 1/2.
  double numerator = (2.0 * p - 1.0) * py + (0.5 - p);
  double denominator = -2.0 * py * p - 0.5 - p - py;
  return numerator / denominator;
}

}  // namespace jscc
