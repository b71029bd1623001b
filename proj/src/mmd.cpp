#include "jscc/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace jscc {

namespace {

void check_samples(const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined() || a.rank() != 2 || b.rank() != 2) {
    throw std::runtime_error("mmd inputs must be rank-2 sample matrices");
  }
  if (a.shape()[1] != b.shape()[1]) {
    throw std::runtime_error("mmd inputs must share a dimensionality: " +
                             format_shape(a.shape()) + " vs " + format_shape(b.shape()));
  }
  if (a.shape()[0] < 2 || b.shape()[0] < 2) {
    throw std::runtime_error("mmd needs at least 2 samples per side");
  }
}

double sq_dist(const std::vector<double>& rows, std::size_t i, std::size_t j, std::size_t d) {
  double sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double diff = rows[i * d + k] - rows[j * d + k];
    sum += diff * diff;
  }
  return sum;
}

double cross_sq_dist(const std::vector<double>& a, std::size_t i, const std::vector<double>& b,
                     std::size_t j, std::size_t d) {
  double sum = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double diff = a[i * d + k] - b[j * d + k];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace

double median_pairwise_distance(const Tensor& samples_a, const Tensor& samples_b) {
  check_samples(samples_a, samples_b);
  std::size_t d = samples_a.shape()[1];
  std::vector<double> pooled = samples_a.values();
  const std::vector<double>& bv = samples_b.values();
  pooled.insert(pooled.end(), bv.begin(), bv.end());
  std::size_t n = pooled.size() / d;

  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dists.push_back(std::sqrt(sq_dist(pooled, i, j, d)));
    }
  }
  std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  return median > 0.0 ? median : 1.0;
}

double mmd_statistic(const Tensor& samples_a, const Tensor& samples_b, const MmdOptions& options) {
  check_samples(samples_a, samples_b);
  std::size_t m = samples_a.shape()[0];
  std::size_t n = samples_b.shape()[0];
  std::size_t d = samples_a.shape()[1];
  if (options.exclude_matched_pairs && m != n) {
    throw std::runtime_error("matched-pair exclusion needs equal sample counts");
  }

  double sigma = options.bandwidth > 0.0 ? options.bandwidth
                                         : median_pairwise_distance(samples_a, samples_b);
  double gamma = 1.0 / (2.0 * sigma * sigma);
  const std::vector<double>& av = samples_a.values();
  const std::vector<double>& bv = samples_b.values();

  double sum_aa = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      sum_aa += std::exp(-gamma * sq_dist(av, i, j, d));
    }
  }
  double sum_bb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum_bb += std::exp(-gamma * sq_dist(bv, i, j, d));
    }
  }
  double sum_ab = 0.0;
  std::size_t ab_pairs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (options.exclude_matched_pairs && i == j) continue;
      sum_ab += std::exp(-gamma * cross_sq_dist(av, i, bv, j, d));
      ++ab_pairs;
    }
  }

  double mm = static_cast<double>(m) * static_cast<double>(m - 1);
  double nn = static_cast<double>(n) * static_cast<double>(n - 1);
  return sum_aa / mm + sum_bb / nn - 2.0 * sum_ab / static_cast<double>(ab_pairs);
}

}  // namespace jscc
