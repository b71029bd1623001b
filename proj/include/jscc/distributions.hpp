#pragma once

#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

// Diagonal Gaussian with graph-tensor parameters. mean and log_std must have
// the same shape.
struct DiagonalGaussian {
  Tensor mean;
  Tensor log_std;
};

DiagonalGaussian make_standard_gaussian(const std::vector<std::size_t>& shape);

// Reparameterized draw: mean + exp(log_std) * eps with eps ~ N(0, I) from
// rng, so the sample is differentiable in both parameters. Noise is drawn in
// row-major element order.
Tensor gaussian_sample(const DiagonalGaussian& d, Rng& rng);

// log N(x; mean, exp(log_std)^2) summed within each row; x must be rank-2
// [rows, cols]. The scalar-total variant sums over everything.
Tensor gaussian_log_density_rows(const DiagonalGaussian& d, const Tensor& x);
Tensor gaussian_log_density(const DiagonalGaussian& d, const Tensor& x);

// Same densities with an explicit (positive) std tensor instead of log_std.
Tensor gaussian_log_density_std_rows(const Tensor& mean, const Tensor& std, const Tensor& x);

// Elementwise log-density terms with no reduction; the rows variants above
// are row sums of these. Exposed so callers can subtract two densities
// element by element before reducing: identical distributions then cancel
// exactly, independent of summation order.
Tensor gaussian_log_density_elemwise(const DiagonalGaussian& d, const Tensor& x);
Tensor gaussian_log_density_std_elemwise(const Tensor& mean, const Tensor& std, const Tensor& x);

// KL(q || p) between diagonal Gaussians, closed form, one value per row.
Tensor gaussian_kl_rows(const DiagonalGaussian& q, const DiagonalGaussian& p);
Tensor gaussian_kl(const DiagonalGaussian& q, const DiagonalGaussian& p);

// Standard logistic draw via inverse CDF, log(u) - log(1-u), with u clamped
// to [1e-12, 1 - 1e-12] so the result is always finite.
double logistic_sample(Rng& rng);
Tensor logistic_noise(const std::vector<std::size_t>& shape, Rng& rng);

// Binary Concrete distribution: a relaxation of a Bernoulli whose sample is
//   y = (L + log_alpha) / temperature,  x = sigmoid(y)
// with L standard logistic. log_alpha is a graph tensor; temperature > 0.
struct BinaryConcrete {
  Tensor log_alpha;
  double temperature = 1.0;
};

struct BinaryConcreteSample {
  Tensor pre_sigmoid;  // y
  Tensor value;        // x = sigmoid(y)
};

BinaryConcreteSample binary_concrete_sample(const BinaryConcrete& d, Rng& rng);

// Log-density of the pre-sigmoid variable y (elementwise):
//   log t - t*y + log_alpha - 2*softplus(-t*y + log_alpha)
// This is the numerically safe parameterization: it never evaluates
// logarithms of quantities that underflow near x in {0, 1}.
Tensor binary_concrete_log_density_pre(const Tensor& y, const Tensor& log_alpha,
                                       double temperature);

// Log-density of the post-sigmoid variable x in (0, 1) (elementwise). Exact
// change of variables from the pre-sigmoid form; inputs at 0 or 1 are an
// error.
Tensor binary_concrete_log_density(const Tensor& x, const Tensor& log_alpha, double temperature);

// P(X > 1/2) = alpha / (1 + alpha); the relaxation agrees with the Bernoulli
// it relaxes on this event.
double binary_concrete_prob_above_half(double log_alpha);

// Scalar helpers mirroring the tensor densities, for estimator and test code.
double gaussian_logpdf(double x, double mean, double stddev);
double logistic_logpdf(double l);
double binary_concrete_logpdf_pre(double y, double log_alpha, double temperature);
double binary_concrete_logpdf(double x, double log_alpha, double temperature);

}  // namespace jscc
