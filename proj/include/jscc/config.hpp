#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jscc/dataset.hpp"
#include "jscc/train.hpp"

namespace jscc {

// Where the run's source data comes from: a synthetic generator, or an IDX
// image file on disk.
struct DatasetConfig {
  SyntheticKind kind = SyntheticKind::kGaussBlobs;
  bool from_file = false;
  std::string path;        // IDX file, when from_file
  std::size_t size = 512;  // synthetic sample count
  std::size_t side = 8;    // synthetic image side
  std::uint64_t seed = 7;  // synthetic generator stream
};

struct EvalConfig {
  std::vector<double> snr_grid;             // empty selects the default grid
  std::vector<std::size_t> bandwidth_grid;  // empty selects every budget 0..T
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::uint64_t seed = 1;
  std::size_t mmd_samples = 0;
};

// One fully resolved run description. `train` holds the model, channel and
// optimizer settings; `separate_mode` marks the two-stage pipeline, which
// trains a source coder and a channel coder rather than a single system.
struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
  bool separate_mode = false;
  std::vector<double> beta_grid;  // objective.beta_grid, empty means default
  EvalConfig eval;
  std::string output_dir = "out";
};

// Parses a strict JSON run description. Every key must be known: a typo such
// as "channel.snrr" is an error naming the offending key, never a silent
// fallback to a default. Values are range-checked where a bad value would
// otherwise surface as a confusing failure deep inside a run.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

// Serializes the effective settings, defaults included, as the same JSON
// dialect parse_config reads. Archived next to a run's outputs so the run is
// reproducible from the archive alone.
std::string resolved_config_json(const RunConfig& config);

// The objective token the config was resolved from ("separate" for the
// two-stage pipeline, otherwise the objective mode name).
std::string config_mode_string(const RunConfig& config);

Dataset load_dataset(const DatasetConfig& config);

}  // namespace jscc
