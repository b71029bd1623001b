#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

// A materialized set of flattened grayscale images, one per row, with every
// pixel in [0, 1]. Row order is fixed at construction, so anything derived
// from a dataset plus a seed is reproducible.
struct Dataset {
  Tensor images;          // constant tensor, shape {count, side * side}
  std::size_t side = 0;   // image side length in pixels

  std::size_t size() const { return images.defined() ? images.shape()[0] : 0; }
  std::size_t dim() const { return images.defined() ? images.shape()[1] : 0; }

  // Gathers the given rows into a fresh constant tensor.
  Tensor rows(const std::vector<std::size_t>& indices) const;
};

enum class SyntheticKind {
  kGaussBlobs,  // 1-3 soft axis-aligned bumps, random position/scale/strength
  kSprites,     // filled rectangles and crosses, box-smoothed
};

SyntheticKind synthetic_kind_from_string(const std::string& name);

Dataset generate_synthetic(SyntheticKind kind, std::size_t count, std::size_t side,
                           std::uint64_t seed);

// Reads a big-endian unsigned-byte 3-D tensor file (magic 0x00000803) and
// scales pixels to [0, 1]. Malformed input reports the byte offset at fault.
Dataset load_idx(const std::string& path);

// Deterministic disjoint split: the last fifth of the rows (at least one row,
// and at least one row kept for training) becomes the held-out part.
struct DatasetSplit {
  Dataset train;
  Dataset eval;
};
DatasetSplit split_train_eval(const Dataset& data);

// One training batch worth of row indices, drawn with replacement from the
// given stream. The stream is the sole source of batch order.
std::vector<std::size_t> sample_indices(std::size_t count, std::size_t batch, Rng& rng);

}  // namespace jscc
