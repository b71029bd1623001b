#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "jscc/channels.hpp"
#include "jscc/gradcheck.hpp"
#include "jscc/models.hpp"

using namespace jscc;

namespace {

LatentCode make_code(std::vector<std::size_t> shape, std::vector<double> sample,
                     std::vector<double> mean) {
  return LatentCode{Tensor::constant(shape, std::move(sample)),
                    Tensor::constant(shape, std::move(mean))};
}

BandwidthChannelSpec two_slot_spec(const PriorModel& prior, std::vector<double> pmf,
                                   double snr = 1.0) {
  return BandwidthChannelSpec{BandwidthPartition::equal_slots(2, 2), std::move(pmf),
                              GaussianChannelSpec{snr}, &prior};
}

}  // namespace

TEST_CASE("gaussian transmit replays y plus scaled noise") {
  LatentCode code = make_code({1, 3}, {2.0, -1.0, 0.5}, {2.0, -4.0, 1.0});
  GaussianChannelSpec spec{2.0};
  Rng rng(321);
  Tensor z = gaussian_transmit(code, spec, rng);
  Rng replay(321);
  for (std::size_t i = 0; i < 3; ++i) {
    double w = replay.normal();
    double expect = code.sample.values()[i] + std::fabs(code.mean.values()[i]) / 2.0 * w;
    CHECK(z.values()[i] == expect);
  }
}

TEST_CASE("gaussian transmit is differentiable through the noise scaling") {
  ParameterStore params(2025);
  Mlp net(params, "enc", 2, 4, 6, 1);
  Tensor x = Tensor::constant({3, 2}, {0.4, -0.2, 1.0, 0.3, -0.7, 0.9});
  auto loss = [&] {
    Rng rng(555);
    Tensor mu = net.forward(x);
    Tensor z = gaussian_transmit(mu, mu, GaussianChannelSpec{1.5}, rng);
    return mean_all(square(z));
  };
  CHECK(finite_difference_check(loss, params) < 1e-3);
}

TEST_CASE("channel log density matches the scalar formula") {
  LatentCode code = make_code({1, 2}, {1.0, -0.5}, {2.0, -1.0});
  GaussianChannelSpec spec{2.0};
  Tensor z = Tensor::constant({1, 2}, {1.3, -0.2});
  double expect = gaussian_logpdf(1.3, 1.0, 1.0) + gaussian_logpdf(-0.2, -0.5, 0.5);
  CHECK(gaussian_channel_log_density_rows(z, code.sample, code.mean, spec).values()[0] ==
        doctest::Approx(expect).epsilon(1e-13));

  LatentCode degenerate = make_code({1, 2}, {1.0, 2.0}, {0.0, 1.0});
  CHECK_THROWS(gaussian_channel_log_density_rows(z, degenerate.sample, degenerate.mean, spec));
}

TEST_CASE("capacity closed form is exact at integer landmarks") {
  CHECK(gaussian_capacity(1.0) == 0.5);
  CHECK(gaussian_capacity(3.0) == 1.0);
  CHECK(gaussian_capacity(0.0) == 0.0);
}

TEST_CASE("capacity is monotone and concave in the snr") {
  double prev = gaussian_capacity(0.05);
  double prev_inc = 1e300;
  for (double s = 0.1; s < 20.0; s += 0.05) {
    double c = gaussian_capacity(s);
    CHECK(c > prev);
    double inc = c - prev;
    CHECK(inc <= prev_inc + 1e-12);
    prev_inc = inc;
    prev = c;
  }
}

TEST_CASE("partition arithmetic") {
  BandwidthPartition p = BandwidthPartition::equal_slots(10, 5);
  CHECK(p.slot_count() == 5);
  CHECK(p.slot_range(0) == std::pair<std::size_t, std::size_t>{0, 2});
  CHECK(p.slot_range(4) == std::pair<std::size_t, std::size_t>{8, 10});
  CHECK_THROWS(BandwidthPartition::equal_slots(10, 3));
  CHECK_THROWS(BandwidthPartition(4, {2, 3}));
  BandwidthPartition ragged(5, {1, 4});
  CHECK(ragged.slot_size(1) == 4);
}

TEST_CASE("bandwidth endpoints: all slots transmitted or all prior filled") {
  ParameterStore params(9);
  PriorModel prior(params, "prior", PriorKind::kStandard, BandwidthPartition::equal_slots(2, 2), 0);
  BandwidthChannelSpec spec = two_slot_spec(prior, {0.5, 0.25, 0.25});
  LatentCode code = make_code({1, 2}, {0.4, -0.6}, {1.0, 2.0});
  Rng rng(11);

  ChannelOutput full = bandwidth_transmit(code, 2, spec, rng);
  CHECK(full.prior_filled == std::vector<bool>{false, false});
  ChannelOutput none = bandwidth_transmit(code, 0, spec, rng);
  CHECK(none.prior_filled == std::vector<bool>{true, true});
  CHECK_THROWS(bandwidth_transmit(code, 3, spec, rng));
}

TEST_CASE("zero bandwidth output is uncorrelated with the input") {
  const std::size_t n = 10000;
  ParameterStore params(9);
  PriorModel prior(params, "prior", PriorKind::kStandard, BandwidthPartition::equal_slots(2, 2), 0);
  BandwidthChannelSpec spec = two_slot_spec(prior, {1.0, 0.0, 0.0});
  Rng data_rng(500);
  std::vector<double> y(n * 2);
  for (double& v : y) v = data_rng.normal();
  LatentCode code{Tensor::constant({n, 2}, y), Tensor::full({n, 2}, 1.0)};
  Rng rng(501);
  ChannelOutput out = bandwidth_transmit(code, 0, spec, rng);
  const std::vector<double>& z = out.z.values();
  for (int col = 0; col < 2; ++col) {
    double sy = 0, sz = 0, syy = 0, szz = 0, syz = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = y[i * 2 + col], b = z[i * 2 + col];
      sy += a;
      sz += b;
      syy += a * a;
      szz += b * b;
      syz += a * b;
    }
    double cov = syz / n - (sy / n) * (sz / n);
    double r = cov / std::sqrt((syy / n - sy / n * sy / n) * (szz / n - sz / n * sz / n));
    CHECK(std::fabs(r) < 3.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("two-slot conditional density factorizes into channel times prior") {
  ParameterStore params(9);
  PriorModel prior(params, "prior", PriorKind::kStandard, BandwidthPartition::equal_slots(2, 2), 0);
  BandwidthChannelSpec spec = two_slot_spec(prior, {0.0, 1.0, 0.0}, 2.0);
  LatentCode code = make_code({1, 2}, {0.8, -0.3}, {1.6, 0.9});
  Rng rng(77);
  ChannelOutput out = bandwidth_transmit(code, 1, spec, rng);
  double z0 = out.z.values()[0], z1 = out.z.values()[1];
  double channel_term = gaussian_logpdf(z0, 0.8, std::fabs(1.6) / 2.0);
  double prior_term = gaussian_logpdf(z1, 0.0, 1.0);
  CHECK(out.slot_log_density[0].item() == doctest::Approx(channel_term).epsilon(1e-12));
  CHECK(out.slot_log_density[1].item() == doctest::Approx(prior_term).epsilon(1e-12));

  // The conditional density helper reproduces the same factorization.
  double joint = bandwidth_conditional_log_density_rows(out.z, code, spec)[0];
  CHECK(joint == doctest::Approx(channel_term + prior_term).epsilon(1e-12));
}

TEST_CASE("conditional density integrates to one on a two-slot toy") {
  ParameterStore params(9);
  PriorModel prior(params, "prior", PriorKind::kStandard, BandwidthPartition::equal_slots(2, 2), 0);
  BandwidthChannelSpec spec = two_slot_spec(prior, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0);
  LatentCode code = make_code({1, 2}, {0.6, -0.4}, {1.1, 0.8});

  // Quadrature over a grid wide enough for every mixture component: the
  // widest scale here is |mu|/s = 1.1, means within [-0.6, 0.6].
  const double lo = -9.0, hi = 9.0;
  const std::size_t steps = 301;
  const double h = (hi - lo) / (steps - 1);
  std::vector<double> weights(steps, 1.0);
  weights.front() = weights.back() = 0.5;  // trapezoid

  // Expand the single code row across the batch once; only z varies.
  std::vector<double> sample(steps * 2), mean(steps * 2);
  for (std::size_t j = 0; j < steps; ++j) {
    sample[j * 2] = code.sample.values()[0];
    sample[j * 2 + 1] = code.sample.values()[1];
    mean[j * 2] = code.mean.values()[0];
    mean[j * 2 + 1] = code.mean.values()[1];
  }
  LatentCode batch_code{Tensor::constant({steps, 2}, sample), Tensor::constant({steps, 2}, mean)};

  double mass = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    // Batch one grid row against all grid columns at once.
    std::vector<double> zs(steps * 2);
    for (std::size_t j = 0; j < steps; ++j) {
      zs[j * 2] = lo + i * h;
      zs[j * 2 + 1] = lo + j * h;
    }
    std::vector<double> rows = bandwidth_conditional_log_density_rows(
        Tensor::constant({steps, 2}, zs), batch_code, spec);
    for (std::size_t j = 0; j < steps; ++j)
      mass += weights[i] * weights[j] * std::exp(rows[j]) * h * h;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("marginalization modes agree with hand-computed expectations") {
  ParameterStore params(9);
  PriorModel prior(params, "prior", PriorKind::kStandard, BandwidthPartition::equal_slots(2, 2), 0);
  LatentCode code = make_code({1, 2}, {0.8, -0.3}, {1.6, 0.9});
  auto bw_value = [](const ChannelOutput& out) {
    return Tensor::scalar(static_cast<double>(out.bandwidth));
  };

  BandwidthChannelSpec point = two_slot_spec(prior, {0.0, 1.0, 0.0});
  Rng rng(3);
  CHECK(marginalize_bandwidth(code, point, Marginalization::kFullSum, 0, bw_value, rng).item() ==
        1.0);
  CHECK(marginalize_bandwidth(code, point, Marginalization::kMonteCarlo, 64, bw_value, rng).item() ==
        doctest::Approx(1.0).epsilon(1e-12));

  BandwidthChannelSpec uniform = two_slot_spec(prior, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  double expect = (0.0 + 1.0 + 2.0) / 3.0;
  CHECK(marginalize_bandwidth(code, uniform, Marginalization::kFullSum, 0, bw_value, rng).item() ==
        doctest::Approx(expect).epsilon(1e-15));

  // Monte Carlo converges: mean of B under uniform {0,1,2} has variance 2/3.
  const std::size_t k = 10000;
  double mc =
      marginalize_bandwidth(code, uniform, Marginalization::kMonteCarlo, k, bw_value, rng).item();
  double se = std::sqrt(2.0 / 3.0 / double(k));
  CHECK(std::fabs(mc - expect) < 3 * se);
}

TEST_CASE("relaxed binary hard endpoints reproduce the symmetric channel truth table") {
  auto z_of = [](double y, double w) {
    return relaxed_binary_map(Tensor::scalar(y), Tensor::scalar(w)).item();
  };
  CHECK(z_of(1.0, 1.0) == 1.0);
  CHECK(z_of(0.0, 1.0) == 0.0);
  CHECK(z_of(1.0, 0.0) == 0.0);
  CHECK(z_of(0.0, 0.0) == 1.0);
}

TEST_CASE("relaxed binary transmit validates input and clamps near one half") {
  RelaxedBinarySpec spec{0.9, 0.5};
  Rng rng(8);
  CHECK_THROWS(relaxed_binary_transmit(Tensor::scalar(0.0), spec, rng));
  CHECK_THROWS(relaxed_binary_transmit(Tensor::scalar(1.0), spec, rng));

  reset_relaxed_binary_clamp_count();
  Tensor y = Tensor::constant({3}, {0.5, 0.5 + 5e-7, 0.9});
  CHECK_NOTHROW(relaxed_binary_transmit(y, spec, rng));
  CHECK(relaxed_binary_clamp_count() == 2);
}

TEST_CASE("near-hard relaxed channel keeps bits at the configured rate") {
  RelaxedBinarySpec spec{0.9, 0.01};
  const std::size_t n = 100000;
  Tensor y = Tensor::full({n}, 1.0 - 1e-9);
  Rng rng(1000);
  Tensor zt = relaxed_binary_transmit(y, spec, rng);
  const std::vector<double>& z = zt.values();
  double agree = 0.0;
  for (double v : z) agree += (v > 0.5) ? 1.0 : 0.0;
  agree /= n;
  CHECK(std::fabs(agree - 0.9) < 0.01);
}

TEST_CASE("relaxed binary density reduces to the noise density for y near one") {
  RelaxedBinarySpec spec{0.8, 0.6};
  double la = std::log(0.8) - std::log(0.2);
  for (double z : {0.1, 0.45, 0.8}) {
    double expect = binary_concrete_logpdf(z, la, 0.6);
    CHECK(relaxed_binary_logpdf(z, 1.0 - 1e-12, spec) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("relaxed binary density is symmetric under joint flips") {
  RelaxedBinarySpec spec{0.85, 0.4};
  for (double y : {0.2, 0.7, 0.95}) {
    for (double z : {0.15, 0.5, 0.9}) {
      CHECK(relaxed_binary_logpdf(z, y, spec) ==
            doctest::Approx(relaxed_binary_logpdf(1.0 - z, 1.0 - y, spec)).epsilon(1e-11));
    }
  }
  // Tensor variant agrees with the scalar one.
  Tensor t = relaxed_binary_log_density(Tensor::constant({2}, {0.15, 0.9}),
                                        Tensor::constant({2}, {0.2, 0.7}), spec);
  CHECK(t.values()[0] == doctest::Approx(relaxed_binary_logpdf(0.15, 0.2, spec)).epsilon(1e-12));
  CHECK(t.values()[1] == doctest::Approx(relaxed_binary_logpdf(0.9, 0.7, spec)).epsilon(1e-12));
}

TEST_CASE("relaxed binary samples and density match the analytic cdf") {
  // The noise variable is a logistic relaxation, so its cdf has a closed
  // form: P(pre <= t) = sigmoid(T*t - log_alpha). Mapping through the affine
  // output transform (increasing for y > 1/2) gives an exact reference cdf,
  // immune to the integrable endpoint singularities that wreck quadrature.
  RelaxedBinarySpec spec{0.75, 0.5};
  const double y_val = 0.73;
  const double log_alpha = std::log(spec.keep_prob / (1.0 - spec.keep_prob));
  auto analytic_cdf = [&](double z) {
    double w = 0.5 * (2.0 * z - 1.0) * (2.0 * y_val - 1.0) + 0.5;
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;
    double logit_w = std::log(w) - std::log1p(-w);
    double t = spec.noise_temperature * logit_w - log_alpha;
    return 1.0 / (1.0 + std::exp(-t));
  };

  // Two-sided Kolmogorov-Smirnov statistic at the sample points. With 1e5
  // draws the 99.9th percentile under the null is about 0.0062.
  const std::size_t n = 100000;
  Rng rng(2222);
  Tensor zt = relaxed_binary_transmit(Tensor::full({n}, y_val), spec, rng);
  std::vector<double> draws = zt.values();
  std::sort(draws.begin(), draws.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = analytic_cdf(draws[i]);
    ks = std::max(ks, std::max(double(i + 1) / n - f, f - double(i) / n));
  }
  CHECK(ks < 0.01);

  // The density is the derivative of that same cdf.
  const double half_width = 1.0 / (2.0 * std::fabs(2.0 * y_val - 1.0));
  for (double frac : {0.1, 0.35, 0.5, 0.65, 0.9}) {
    double z = (0.5 - half_width) + 2.0 * half_width * frac;
    double h = 1e-6;
    double fd = (analytic_cdf(z + h) - analytic_cdf(z - h)) / (2.0 * h);
    CHECK(std::exp(relaxed_binary_logpdf(z, y_val, spec)) ==
          doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("binary snr formula: exact zeros and smoothness") {
  for (double py : {0.1, 0.5, 0.9}) CHECK(binary_snr(0.5, py) == 0.0);
  CHECK(binary_snr(1.0, 0.5) == 0.0);
  for (double p = 0.05; p < 1.0; p += 0.05) {
    for (double py = 0.05; py < 1.0; py += 0.05) {
      double denominator = -2.0 * py * p - 0.5 - p - py;
      CHECK(denominator < 0.0);
      CHECK(std::isfinite(binary_snr(p, py)));
    }
  }
}
