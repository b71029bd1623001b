#include "jscc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "jscc/rng.hpp"

namespace jscc {

double finite_difference_check(const std::function<Tensor()>& loss_fn, ParameterStore& params,
                               const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0 && options.epsilon <= 1e-2)) {
    throw std::runtime_error("finite_difference_check: epsilon must be in (0, 1e-2]");
  }

  auto eval = [&]() {
    Tensor t = loss_fn();
    if (t.size() != 1) throw std::runtime_error("finite_difference_check: loss must be scalar");
    return t.item();
  };

  // Repeatability gate: a loss that does not reproduce bit-for-bit would make
  // the finite differences meaningless.
  double first = eval();
  double second = eval();
  if (!(first == second)) {
    throw std::runtime_error(
        "finite_difference_check: loss is not repeatable; seed its randomness internally");
  }

  params.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);
  std::map<std::string, std::vector<double>> analytic;
  for (const auto& [name, t] : params.tensors()) analytic[name] = t.node()->grad;

  Rng coord_rng(options.coord_seed);
  double worst = 0.0;
  for (const auto& [name, t] : params.tensors()) {
    std::size_t n = t.size();
    std::vector<std::size_t> coords;
    if (n <= options.max_coords_per_tensor) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i)
        coords.push_back(coord_rng.integer(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    Tensor handle = params.get(name);
    std::vector<double>& theta = handle.mutable_values();
    for (std::size_t i : coords) {
      double saved = theta[i];
      theta[i] = saved + options.epsilon;
      double up = eval();
      theta[i] = saved - options.epsilon;
      double down = eval();
      theta[i] = saved;
      double numeric = (up - down) / (2.0 * options.epsilon);
      double a = analytic[name][i] * options.gradient_scale;
      double rel = std::fabs(a - numeric) / (std::fabs(numeric) + 1e-8);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace jscc
