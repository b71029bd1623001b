#include "jscc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace jscc {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void render_blobs(std::vector<double>& img, std::size_t side, Rng& rng) {
  std::size_t bumps = 1 + rng.integer(3);
  double s = static_cast<double>(side);
  for (std::size_t b = 0; b < bumps; ++b) {
    double cx = rng.uniform() * (s - 1.0);
    double cy = rng.uniform() * (s - 1.0);
    double sx = s * (0.08 + 0.17 * rng.uniform());
    double sy = s * (0.08 + 0.17 * rng.uniform());
    double amp = 0.4 + 0.6 * rng.uniform();
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        double dx = (static_cast<double>(j) - cx) / sx;
        double dy = (static_cast<double>(i) - cy) / sy;
        img[i * side + j] += amp * std::exp(-0.5 * (dx * dx + dy * dy));
      }
    }
  }
  for (double& v : img) v = clamp01(v);
}

void render_sprite(std::vector<double>& img, std::size_t side, Rng& rng) {
  std::vector<double> hard(side * side, 0.0);
  auto put = [&](std::size_t i, std::size_t j) {
    if (i < side && j < side) hard[i * side + j] = 1.0;
  };
  if (rng.integer(2) == 0) {
    std::size_t w = 2 + rng.integer(std::max<std::size_t>(side / 2, 1));
    std::size_t h = 2 + rng.integer(std::max<std::size_t>(side / 2, 1));
    w = std::min(w, side);
    h = std::min(h, side);
    std::size_t x0 = rng.integer(side - w + 1);
    std::size_t y0 = rng.integer(side - h + 1);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) put(y0 + i, x0 + j);
  } else {
    std::size_t cx = rng.integer(side);
    std::size_t cy = rng.integer(side);
    std::size_t arm = 1 + rng.integer(std::max<std::size_t>(side / 3, 1));
    for (std::size_t d = 0; d <= arm; ++d) {
      put(cy, cx + d);
      if (cx >= d) put(cy, cx - d);
      put(cy + d, cx);
      if (cy >= d) put(cy - d, cx);
    }
  }
  // 3x3 box smoothing with edge clamping keeps values inside [0, 1] while
  // giving the shapes soft borders.
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      double sum = 0.0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          std::size_t ii = static_cast<std::size_t>(std::clamp<int>(
              static_cast<int>(i) + di, 0, static_cast<int>(side) - 1));
          std::size_t jj = static_cast<std::size_t>(std::clamp<int>(
              static_cast<int>(j) + dj, 0, static_cast<int>(side) - 1));
          sum += hard[ii * side + jj];
        }
      }
      img[i * side + j] = clamp01(sum / 9.0);
    }
  }
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

[[noreturn]] void idx_fail(const std::string& path, const std::string& what, std::size_t offset) {
  throw std::runtime_error(path + ": " + what + " at offset " + std::to_string(offset));
}

}  // namespace

Tensor Dataset::rows(const std::vector<std::size_t>& indices) const {
  std::size_t d = dim();
  const std::vector<double>& all = images.values();
  std::vector<double> out;
  out.reserve(indices.size() * d);
  for (std::size_t idx : indices) {
    if (idx >= size()) throw std::runtime_error("dataset row index out of range");
    out.insert(out.end(), all.begin() + static_cast<std::ptrdiff_t>(idx * d),
               all.begin() + static_cast<std::ptrdiff_t>((idx + 1) * d));
  }
  return Tensor::constant({indices.size(), d}, std::move(out));
}

SyntheticKind synthetic_kind_from_string(const std::string& name) {
  if (name == "blobs") return SyntheticKind::kGaussBlobs;
  if (name == "sprites") return SyntheticKind::kSprites;
  throw std::runtime_error("unknown synthetic dataset kind: " + name +
                           " (expected blobs or sprites)");
}

Dataset generate_synthetic(SyntheticKind kind, std::size_t count, std::size_t side,
                           std::uint64_t seed) {
  if (count < 1) throw std::runtime_error("synthetic dataset needs at least one image");
  if (side < 4 || side > 32) {
    throw std::runtime_error("synthetic image side must be in [4, 32], got " +
                             std::to_string(side));
  }
  Rng rng(seed);
  std::vector<double> values(count * side * side, 0.0);
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> img(side * side, 0.0);
    if (kind == SyntheticKind::kGaussBlobs) {
      render_blobs(img, side, rng);
    } else {
      render_sprite(img, side, rng);
    }
    std::copy(img.begin(), img.end(), values.begin() + static_cast<std::ptrdiff_t>(n * side * side));
  }
  Dataset data;
  data.images = Tensor::constant({count, side * side}, std::move(values));
  data.side = side;
  return data;
}

Dataset load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 4) idx_fail(path, "file truncated inside the magic number", bytes.size());
  if (read_be32(bytes, 0) != 0x00000803u) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", read_be32(bytes, 0));
    idx_fail(path, std::string("bad magic number ") + hex + " (want 0x00000803)", 0);
  }
  if (bytes.size() < 16) idx_fail(path, "file truncated inside the dimension header", bytes.size());
  std::size_t count = read_be32(bytes, 4);
  std::size_t rows = read_be32(bytes, 8);
  std::size_t cols = read_be32(bytes, 12);
  std::size_t need = 16 + count * rows * cols;
  if (bytes.size() < need) idx_fail(path, "pixel data truncated", bytes.size());

  std::vector<double> values(count * rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  }
  Dataset data;
  data.images = Tensor::constant({count, rows * cols}, std::move(values));
  data.side = (rows == cols) ? rows : 0;
  return data;
}

DatasetSplit split_train_eval(const Dataset& data) {
  std::size_t n = data.size();
  if (n < 2) throw std::runtime_error("dataset too small to split: need at least 2 rows");
  std::size_t eval_n = std::max<std::size_t>(n / 5, 1);
  std::size_t train_n = n - eval_n;

  const std::vector<double>& all = data.images.values();
  std::size_t d = data.dim();
  std::vector<double> train_v(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(train_n * d));
  std::vector<double> eval_v(all.begin() + static_cast<std::ptrdiff_t>(train_n * d), all.end());

  DatasetSplit split;
  split.train.images = Tensor::constant({train_n, d}, std::move(train_v));
  split.train.side = data.side;
  split.eval.images = Tensor::constant({eval_n, d}, std::move(eval_v));
  split.eval.side = data.side;
  return split;
}

std::vector<std::size_t> sample_indices(std::size_t count, std::size_t batch, Rng& rng) {
  if (count == 0) throw std::runtime_error("cannot sample from an empty dataset");
  std::vector<std::size_t> indices(batch);
  for (std::size_t& idx : indices) idx = rng.integer(count);
  return indices;
}

}  // namespace jscc
