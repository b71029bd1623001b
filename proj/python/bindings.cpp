#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "jscc/channels.hpp"
#include "jscc/cli.hpp"
#include "jscc/dataset.hpp"
#include "jscc/mmd.hpp"
#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace py = pybind11;

namespace {

using Rows = std::vector<std::vector<double>>;

jscc::Tensor to_tensor(const Rows& rows, const char* name) {
  if (rows.empty()) throw std::invalid_argument(std::string(name) + " must be non-empty");
  std::size_t dim = rows.front().size();
  if (dim == 0) throw std::invalid_argument(std::string(name) + " rows must be non-empty");
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const std::vector<double>& row : rows) {
    if (row.size() != dim) {
      throw std::invalid_argument(std::string(name) + " rows must share one length");
    }
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return jscc::Tensor::constant({rows.size(), dim}, std::move(flat));
}

Rows to_rows(const jscc::Tensor& t) {
  std::size_t n = t.shape()[0];
  std::size_t dim = t.shape()[1];
  const std::vector<double>& values = t.values();
  Rows rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].assign(values.begin() + static_cast<std::ptrdiff_t>(i * dim),
                   values.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learned joint and separate source-channel coding: native core";

  m.def("gaussian_capacity", &jscc::gaussian_capacity, py::arg("snr"),
        "Shannon capacity of the scalar Gaussian channel, in bits per use.");

  m.def("binary_snr", &jscc::binary_snr, py::arg("keep_prob"), py::arg("input_prob"),
        "Effective signal-to-noise ratio of the hard binary symmetric channel; "
        "exactly 0 at keep_prob 1/2.");

  m.def(
      "mmd",
      [](const Rows& a, const Rows& b, double bandwidth) {
        jscc::MmdOptions options;
        options.bandwidth = bandwidth;
        return jscc::mmd_statistic(to_tensor(a, "a"), to_tensor(b, "b"), options);
      },
      py::arg("a"), py::arg("b"), py::arg("bandwidth") = 0.0,
      "Unbiased squared maximum mean discrepancy between two sample sets "
      "(rows are vectors); bandwidth <= 0 selects the median heuristic.");

  m.def(
      "generate_synthetic",
      [](const std::string& kind, std::size_t count, std::size_t side, std::uint64_t seed) {
        jscc::Dataset data =
            jscc::generate_synthetic(jscc::synthetic_kind_from_string(kind), count, side, seed);
        return to_rows(data.images);
      },
      py::arg("kind"), py::arg("count"), py::arg("side"), py::arg("seed"),
      "Synthetic image rows (side*side pixels in [0, 1]); kind is 'blobs' or 'sprites'.");

  m.def(
      "standard_normal",
      [](std::size_t rows, std::size_t cols, std::uint64_t seed) {
        jscc::Rng rng(seed);
        Rows out(rows, std::vector<double>(cols));
        for (auto& row : out) {
          for (double& v : row) v = rng.normal();
        }
        return out;
      },
      py::arg("rows"), py::arg("cols"), py::arg("seed"),
      "Deterministic standard normal draws from the library's generator.");

  m.def(
      "gaussian_transmit",
      [](const Rows& code, double snr, std::uint64_t seed) {
        jscc::GaussianChannelSpec spec;
        spec.snr = snr;
        jscc::Rng rng(seed);
        jscc::Tensor y = to_tensor(code, "code");
        return to_rows(jscc::gaussian_transmit(y, y, spec, rng));
      },
      py::arg("code"), py::arg("snr"), py::arg("seed"),
      "One pass through the fixed-ratio noise channel (noise scale |code| / snr).");

  m.def("run_cli", py::overload_cast<const std::vector<std::string>&>(&jscc::run_cli),
        py::arg("args"),
        "Run the command-line surface; returns the process exit code.");
}
