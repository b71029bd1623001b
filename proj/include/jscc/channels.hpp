#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "jscc/distributions.hpp"
#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

// Code vector entering a channel. Channels scale their noise from the code's
// mean (the deterministic part), so both the sampled code and its mean travel
// together. Both are [batch, n].
struct LatentCode {
  Tensor sample;
  Tensor mean;
};

// Power-constrained additive white Gaussian noise channel with a fixed
// signal-to-noise ratio s: the per-coordinate noise scale is |mean| / s, so
// the configured SNR holds whatever power the code uses.
struct GaussianChannelSpec {
  double snr = 1.0;
};

// z = y + (|mean| / s) * w, w ~ N(0, I). Differentiable in both y and mean.
Tensor gaussian_transmit(const Tensor& y, const Tensor& mean, const GaussianChannelSpec& spec,
                         Rng& rng);
Tensor gaussian_transmit(const LatentCode& code, const GaussianChannelSpec& spec, Rng& rng);

// Per-row log-density of the channel output z given input y with noise scale
// |mean| / s. Throws if any coordinate of mean is exactly 0 (degenerate,
// noise-free coordinate).
Tensor gaussian_channel_log_density_rows(const Tensor& z, const Tensor& y, const Tensor& mean,
                                         const GaussianChannelSpec& spec);

// Shannon capacity of the scalar Gaussian channel at signal-to-noise ratio s,
// in bits per channel use: 0.5 * log2(1 + s).
double gaussian_capacity(double snr);

// Contiguous partition of an n-dimensional code into T slots. Slot t covers
// [bounds[t], bounds[t+1]).
class BandwidthPartition {
 public:
  BandwidthPartition(std::size_t total_dim, std::vector<std::size_t> slot_sizes);
  static BandwidthPartition equal_slots(std::size_t total_dim, std::size_t slot_count);

  std::size_t total_dim() const { return total_dim_; }
  std::size_t slot_count() const { return bounds_.size() - 1; }
  std::pair<std::size_t, std::size_t> slot_range(std::size_t t) const;
  std::size_t slot_size(std::size_t t) const;

 private:
  std::size_t total_dim_;
  std::vector<std::size_t> bounds_;
};

// Per-slot prior over code space, causal in slot order. `prefix` is the
// concatenation of output slots 0..t-1 ([batch, bounds[t]]), undefined for
// t = 0. Implementations must be deterministic functions of (t, prefix).
class SlotPrior {
 public:
  virtual ~SlotPrior() = default;
  virtual DiagonalGaussian slot_distribution(std::size_t t, const Tensor& prefix,
                                             std::size_t batch) const = 0;
};

enum class Marginalization { kFullSum, kMonteCarlo };

// Bandwidth-limited channel: given bandwidth B, slots below B pass through
// the inner Gaussian channel; slots at or above B are replaced by samples
// from the prior, noise free. B itself is random with the given pmf over
// {0, 1, ..., T}.
struct BandwidthChannelSpec {
  BandwidthPartition partition;
  std::vector<double> bandwidth_pmf;  // size slot_count() + 1
  GaussianChannelSpec inner;
  const SlotPrior* prior = nullptr;

  void validate() const;
};

struct ChannelOutput {
  Tensor z;  // [batch, n]
  std::size_t bandwidth = 0;
  std::vector<bool> prior_filled;          // one flag per slot
  std::vector<Tensor> slot_log_density;    // per-slot scalar:
                                           //   t <  B: channel log-density of z_t given y_t
                                           //   t >= B: prior log-density of z_t
};

// One pass through the channel at fixed bandwidth B. In-filled slots are
// drawn from the prior conditioned on the already-produced output slots, so
// the output is a coherent draw from the channel's conditional distribution.
ChannelOutput bandwidth_transmit(const LatentCode& code, std::size_t bandwidth,
                                 const BandwidthChannelSpec& spec, Rng& rng);

// Draw B from the bandwidth pmf by inverse CDF.
std::size_t sample_bandwidth(const std::vector<double>& pmf, Rng& rng);

// Expectation over bandwidth of a scalar functional of the channel output.
// FULL_SUM enumerates every bandwidth with positive probability (one inner
// noise draw each); MONTE_CARLO averages `mc_samples` draws of B.
Tensor marginalize_bandwidth(const LatentCode& code, const BandwidthChannelSpec& spec,
                             Marginalization mode, std::size_t mc_samples,
                             const std::function<Tensor(const ChannelOutput&)>& integrand,
                             Rng& rng);

// Per-row log of the full conditional density of z given the code,
//   log sum_B P(B) * prod_{t<B} c(z_t | y_t) * prod_{t>=B} p(z_t | z_<t),
// computed with a max-shifted log-sum-exp. Values only (no graph); used by
// rate reporting and normalization checks.
std::vector<double> bandwidth_conditional_log_density_rows(const Tensor& z, const LatentCode& code,
                                                           const BandwidthChannelSpec& spec);

// Relaxed binary symmetric channel on codes in (0, 1): with W a Binary
// Concrete relaxation of the flip event,
//   z = (2w - 1) / (2 (2y - 1)) + 1/2.
// At the binary corners this reduces to the classic symmetric channel: w near
// 1 keeps y, w near 0 flips it.
struct RelaxedBinarySpec {
  double keep_prob = 0.9;          // probability the hard channel keeps a bit
  double noise_temperature = 0.5;  // relaxation temperature for W
};

// Deterministic corner map used by both the transmitter and tests.
Tensor relaxed_binary_map(const Tensor& y, const Tensor& w);

// Transmits y through the relaxed channel. Inputs within 1e-6 of 1/2 carry no
// sign information and are nudged to the nearest side (gradient passes
// through); every such nudge increments a global counter for diagnostics.
Tensor relaxed_binary_transmit(const Tensor& y, const RelaxedBinarySpec& spec, Rng& rng);

// Elementwise log-density of the channel output z given input y, by change of
// variables through the noise w. Throws if the implied w falls outside (0, 1).
Tensor relaxed_binary_log_density(const Tensor& z, const Tensor& y, const RelaxedBinarySpec& spec);
double relaxed_binary_logpdf(double z, double y, const RelaxedBinarySpec& spec);

std::uint64_t relaxed_binary_clamp_count();
void reset_relaxed_binary_clamp_count();

// Effective signal-to-noise ratio of the hard binary symmetric channel when
// the input is Bernoulli(p_y) and the channel keeps a bit with probability p:
//   s = ((2p - 1) p_y + (1/2 - p)) / (-2 p p_y - 1/2 - p - p_y).
// The numerator is grouped so that p = 1/2 gives exactly 0.
double binary_snr(double keep_prob, double input_prob);

}  // namespace jscc
