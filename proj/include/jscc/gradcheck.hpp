#pragma once

#include <cstdint>
#include <functional>

#include "jscc/parameter_store.hpp"

namespace jscc {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Coordinates checked per tensor; tensors smaller than this are checked in
  // full. Sampling keeps the cost linear in network width, not size.
  std::size_t max_coords_per_tensor = 16;
  std::uint64_t coord_seed = 0x5eedc0de;
  // Multiplies the analytic gradient before comparison. 1.0 in real use; a
  // deliberately wrong value lets tests confirm the checker catches bad
  // gradients.
  double gradient_scale = 1.0;
};

// Compares reverse-mode gradients of loss_fn against central finite
// differences and returns the worst relative error
//   |analytic - numeric| / (|numeric| + 1e-8)
// over all sampled coordinates. loss_fn must be a pure function of the
// parameter values: any randomness inside must come from an Rng it constructs
// itself from a fixed seed. That is verified up front by evaluating twice and
// requiring bit-identical results.
double finite_difference_check(const std::function<Tensor()>& loss_fn, ParameterStore& params,
                               const GradCheckOptions& options = {});

}  // namespace jscc
