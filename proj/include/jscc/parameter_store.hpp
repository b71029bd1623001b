#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jscc/rng.hpp"
#include "jscc/tensor.hpp"

namespace jscc {

// Named trainable leaves. The map is ordered, so iteration (initialization,
// optimizer updates, checkpoint layout) is deterministic regardless of the
// order in which call sites look tensors up.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t init_seed);

  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  // New tensor filled with N(0, stddev^2) draws from the store's init stream.
  // Draws happen in call order, so models must register parameters in a fixed
  // order. Duplicate names are an error.
  Tensor gaussian(const std::string& name, std::vector<std::size_t> shape, double stddev);
  Tensor zeros(const std::string& name, std::vector<std::size_t> shape);
  Tensor filled(const std::string& name, std::vector<std::size_t> shape, double value);

  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  std::uint64_t init_seed() const { return init_seed_; }
  std::size_t total_parameters() const;

  // Resets every parameter's grad buffer to zeros. Needed before backward
  // because parameters outside the current graph are not touched by it.
  void zero_grad();

 private:
  Tensor insert(const std::string& name, Tensor t);

  std::uint64_t init_seed_;
  Rng init_rng_;
  std::map<std::string, Tensor> tensors_;
};

// Plain SGD with classical momentum:
//   v <- momentum * v + grad
//   theta <- theta - lr * v
// Velocity buffers are keyed by parameter name and created lazily as zeros.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);

  double learning_rate() const { return learning_rate_; }
  double momentum() const { return momentum_; }

  // Applies one update using the gradients currently stored on the leaves.
  // Parameters whose grad buffer is empty (never touched by backward) are
  // skipped; a sized-but-mismatched buffer is an error.
  void step(ParameterStore& params);

 private:
  double learning_rate_;
  double momentum_;
  std::map<std::string, std::vector<double>> velocity_;
};

// Binary checkpoint: fixed magic, entry count, then per tensor a
// length-prefixed UTF-8 name, the shape, and raw little-endian float64
// values. Works on any host; byte order is explicit in the writer/reader.
void save_checkpoint(const ParameterStore& params, const std::string& path);

// Loads values into an existing store. Names and shapes must match the file
// exactly in both directions; anything else is an error.
void load_checkpoint(ParameterStore& params, const std::string& path);

struct CheckpointEntry {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

// Raw view of a checkpoint file, for inspection and tests.
std::map<std::string, CheckpointEntry> read_checkpoint(const std::string& path);

}  // namespace jscc
