#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jscc {

// One evaluation-grid point. `bandwidth` is -1 for channels without a slot
// budget; `mmd` is NaN when the sample-quality proxy was not computed.
struct MetricsRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string mode;
  double snr = 0.0;
  int bandwidth = -1;
  double beta = 0.0;
  std::size_t steps = 0;
  double distortion_l2 = 0.0;
  double rate_bits = 0.0;
  double transmission_bits = 0.0;
  double mmd = 0.0;
  double wall_seconds = 0.0;
};

// Stable column set; any change must move to a metrics_v2 file name.
extern const char* const kMetricsCsvHeader;
extern const char* const kMetricsCsvFileName;  // "metrics_v1.csv"

// Shortest representation with 9 significant digits, the serialization used
// for every floating-point field.
std::string format_metric(double value);

// Deterministic id over the identifying fields (mode, seed, snr, bandwidth,
// beta, steps): 16 hex digits of an FNV-1a hash. Rerunning a grid point
// yields the same id, so rows can be diffed across runs.
std::string derive_run_id(const MetricsRecord& record);

std::string metrics_csv_row(const MetricsRecord& record);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace jscc
