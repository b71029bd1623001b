#include "jscc/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace jscc {

namespace {

// log(2*pi), pinned to the double 0x1.d67f1c864beb4p+0. The two neighbouring
// doubles both approximate log(2*pi) to within one ulp; this one keeps
// fl(0.5 + 0.5*kLogTwoPi) exact, so a one-sigma offset changes the log
// density by exactly 0.5.
constexpr double kLogTwoPi = 1.8378770664093453;

std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

// Elementwise log N(x; mean, exp(log_std)^2).
Tensor gaussian_log_density_elem(const DiagonalGaussian& d, const Tensor& x) {
  Tensor diff = sub(x, d.mean);
  Tensor quad = mul_scalar(mul(square(diff), exp(mul_scalar(d.log_std, -2.0))), 0.5);
  return add_scalar(sub(neg(quad), d.log_std), -0.5 * kLogTwoPi);
}

// Elementwise KL(q || p). Written so that q == p gives exactly 0: the log-std
// difference is a single subtraction and the variance ratio is exp of its
// negation, so identical parameters produce 0 + 0.5*exp(0) + 0 - 0.5 = 0.0.
Tensor gaussian_kl_elem(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  Tensor ls_diff = sub(p.log_std, q.log_std);
  Tensor ratio = mul_scalar(exp(mul_scalar(ls_diff, -2.0)), 0.5);
  Tensor shift = mul_scalar(mul(square(sub(q.mean, p.mean)), exp(mul_scalar(p.log_std, -2.0))), 0.5);
  return add_scalar(add(add(ls_diff, ratio), shift), -0.5);
}

Tensor one_minus(const Tensor& x) { return add_scalar(neg(x), 1.0); }

}  // namespace

DiagonalGaussian make_standard_gaussian(const std::vector<std::size_t>& shape) {
  return DiagonalGaussian{Tensor::zeros(shape), Tensor::zeros(shape)};
}

Tensor gaussian_sample(const DiagonalGaussian& d, Rng& rng) {
  std::vector<double> eps(numel(d.mean.shape()));
  for (double& e : eps) e = rng.normal();
  Tensor noise = Tensor::constant(d.mean.shape(), std::move(eps));
  return add(d.mean, mul(exp(d.log_std), noise));
}

Tensor gaussian_log_density_rows(const DiagonalGaussian& d, const Tensor& x) {
  return row_sum(gaussian_log_density_elem(d, x));
}

Tensor gaussian_log_density(const DiagonalGaussian& d, const Tensor& x) {
  return sum_all(gaussian_log_density_elem(d, x));
}

Tensor gaussian_log_density_std_elemwise(const Tensor& mean, const Tensor& std, const Tensor& x) {
  Tensor inv_var = square(reciprocal(std));
  Tensor quad = mul_scalar(mul(square(sub(x, mean)), inv_var), 0.5);
  return add_scalar(sub(neg(quad), log(std)), -0.5 * kLogTwoPi);
}

Tensor gaussian_log_density_std_rows(const Tensor& mean, const Tensor& std, const Tensor& x) {
  return row_sum(gaussian_log_density_std_elemwise(mean, std, x));
}

Tensor gaussian_log_density_elemwise(const DiagonalGaussian& d, const Tensor& x) {
  return gaussian_log_density_elem(d, x);
}

Tensor gaussian_kl_rows(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  return row_sum(gaussian_kl_elem(q, p));
}

Tensor gaussian_kl(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  return sum_all(gaussian_kl_elem(q, p));
}

double logistic_sample(Rng& rng) {
  double u = rng.uniform();
  if (u < 1e-12) u = 1e-12;
  if (u > 1.0 - 1e-12) u = 1.0 - 1e-12;
  return std::log(u) - std::log1p(-u);
}

Tensor logistic_noise(const std::vector<std::size_t>& shape, Rng& rng) {
  std::vector<double> values(numel(shape));
  for (double& v : values) v = logistic_sample(rng);
  return Tensor::constant(shape, std::move(values));
}

BinaryConcreteSample binary_concrete_sample(const BinaryConcrete& d, Rng& rng) {
  if (!(d.temperature > 0.0)) throw std::runtime_error("binary concrete temperature must be > 0");
  Tensor noise = logistic_noise(d.log_alpha.shape(), rng);
  Tensor pre = mul_scalar(add(d.log_alpha, noise), 1.0 / d.temperature);
  return BinaryConcreteSample{pre, sigmoid(pre)};
}

Tensor binary_concrete_log_density_pre(const Tensor& y, const Tensor& log_alpha,
                                       double temperature) {
  if (!(temperature > 0.0)) throw std::runtime_error("binary concrete temperature must be > 0");
  Tensor arg = sub(log_alpha, mul_scalar(y, temperature));
  return add_scalar(sub(arg, mul_scalar(softplus(arg), 2.0)), std::log(temperature));
}

Tensor binary_concrete_log_density(const Tensor& x, const Tensor& log_alpha, double temperature) {
  // Change of variables through y = logit(x); log|dy/dx| = -log x - log(1-x).
  Tensor lx = log(x);
  Tensor l1mx = log(one_minus(x));
  Tensor pre = binary_concrete_log_density_pre(sub(lx, l1mx), log_alpha, temperature);
  return sub(pre, add(lx, l1mx));
}

double binary_concrete_prob_above_half(double log_alpha) {
  return log_alpha >= 0.0 ? 1.0 / (1.0 + std::exp(-log_alpha))
                          : std::exp(log_alpha) / (1.0 + std::exp(log_alpha));
}

double gaussian_logpdf(double x, double mean, double stddev) {
  if (!(stddev > 0.0)) throw std::runtime_error("gaussian_logpdf: stddev must be > 0");
  double z = (x - mean) / stddev;
  return -0.5 * kLogTwoPi - std::log(stddev) - 0.5 * z * z;
}

double logistic_logpdf(double l) {
  // -l - 2 log(1 + e^{-l}), stable on both tails.
  double sp = l > 0.0 ? std::log1p(std::exp(-l)) : -l + std::log1p(std::exp(l));
  return -l - 2.0 * sp;
}

double binary_concrete_logpdf_pre(double y, double log_alpha, double temperature) {
  double arg = log_alpha - temperature * y;
  double sp = arg > 0.0 ? arg + std::log1p(std::exp(-arg)) : std::log1p(std::exp(arg));
  return std::log(temperature) + arg - 2.0 * sp;
}

double binary_concrete_logpdf(double x, double log_alpha, double temperature) {
  if (!(x > 0.0 && x < 1.0))
    throw std::runtime_error("binary_concrete_logpdf: x must lie strictly inside (0, 1)");
  double y = std::log(x) - std::log1p(-x);
  return binary_concrete_logpdf_pre(y, log_alpha, temperature) - std::log(x) - std::log1p(-x);
}

}  // namespace jscc
