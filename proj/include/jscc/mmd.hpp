#pragma once

#include "jscc/tensor.hpp"

namespace jscc {

// Kernel two-sample statistic options. A nonpositive bandwidth selects the
// median heuristic: the median Euclidean distance over all pairs of the
// pooled samples.
struct MmdOptions {
  double bandwidth = 0.0;
  // Drop the k(a_i, b_i) cross terms (requires equal sample counts). With the
  // same set on both sides the three sums then cancel exactly, so comparing a
  // sample against itself reports literally zero.
  bool exclude_matched_pairs = false;
};

// Unbiased squared maximum mean discrepancy with a Gaussian kernel. Both
// inputs are {n, d} matrices of samples; the estimate can be negative near
// zero, which is what "unbiased" costs.
double mmd_statistic(const Tensor& samples_a, const Tensor& samples_b,
                     const MmdOptions& options = {});

// Median pairwise Euclidean distance of the pooled rows; 1.0 when every pair
// coincides. This is the AUTO kernel bandwidth.
double median_pairwise_distance(const Tensor& samples_a, const Tensor& samples_b);

}  // namespace jscc
