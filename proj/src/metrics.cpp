#include "jscc/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jscc {

const char* const kMetricsCsvHeader =
    "run_id,seed,mode,snr,bandwidth,beta,steps,distortion_l2,rate_bits,transmission_bits,mmd,"
    "wall_seconds";
const char* const kMetricsCsvFileName = "metrics_v1.csv";

std::string format_metric(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::string derive_run_id(const MetricsRecord& record) {
  std::string key = record.mode + "|" + std::to_string(record.seed) + "|" +
                    format_metric(record.snr) + "|" + std::to_string(record.bandwidth) + "|" +
                    format_metric(record.beta) + "|" + std::to_string(record.steps);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : key) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string metrics_csv_row(const MetricsRecord& record) {
  std::string row = record.run_id.empty() ? derive_run_id(record) : record.run_id;
  row += "," + std::to_string(record.seed);
  row += "," + record.mode;
  row += "," + format_metric(record.snr);
  row += "," + std::to_string(record.bandwidth);
  row += "," + format_metric(record.beta);
  row += "," + std::to_string(record.steps);
  row += "," + format_metric(record.distortion_l2);
  row += "," + format_metric(record.rate_bits);
  row += "," + format_metric(record.transmission_bits);
  row += "," + format_metric(record.mmd);
  row += "," + format_metric(record.wall_seconds);
  return row;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation anywhere
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << kMetricsCsvHeader << "\n";
  for (const MetricsRecord& record : records) out << metrics_csv_row(record) << "\n";
  if (!out) throw std::runtime_error("short write on metrics file: " + path);
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw std::runtime_error(path + ": unexpected metrics header");
  }
  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw std::runtime_error(path + ": malformed row: " + line);
    MetricsRecord r;
    r.run_id = fields[0];
    r.seed = std::stoull(fields[1]);
    r.mode = fields[2];
    r.snr = std::stod(fields[3]);
    r.bandwidth = std::stoi(fields[4]);
    r.beta = std::stod(fields[5]);
    r.steps = std::stoull(fields[6]);
    r.distortion_l2 = std::stod(fields[7]);
    r.rate_bits = std::stod(fields[8]);
    r.transmission_bits = std::stod(fields[9]);
    r.mmd = std::stod(fields[10]);
    r.wall_seconds = std::stod(fields[11]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace jscc
