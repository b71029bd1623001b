#include <cmath>
#include <cstdio>
#include <string>

#include "doctest.h"
#include "jscc/metrics.hpp"

using namespace jscc;

namespace {

std::string temp_path(const char* name) { return std::string("./") + name + ".tmp"; }

struct FileGuard {
  std::string path;
  ~FileGuard() { std::remove(path.c_str()); }
};

MetricsRecord sample_record() {
  MetricsRecord r;
  r.seed = 11;
  r.mode = "joint";
  r.snr = 0.25;
  r.bandwidth = 3;
  r.beta = 0.001;
  r.steps = 400;
  r.distortion_l2 = 1.0 / 3.0;
  r.rate_bits = 12.3456789012;
  r.transmission_bits = 0.5;
  r.mmd = 1e-7;
  r.wall_seconds = 0.0;
  r.run_id = derive_run_id(r);
  return r;
}

}  // namespace

TEST_CASE("metrics header is pinned") {
  CHECK(std::string(kMetricsCsvHeader) ==
        "run_id,seed,mode,snr,bandwidth,beta,steps,distortion_l2,rate_bits,transmission_bits,"
        "mmd,wall_seconds");
  CHECK(std::string(kMetricsCsvFileName) == "metrics_v1.csv");
}

TEST_CASE("floating fields are serialized with nine significant digits") {
  CHECK(format_metric(1.0 / 3.0) == "0.333333333");
  CHECK(format_metric(0.0) == "0");
  CHECK(format_metric(12.3456789012) == "12.3456789");
  CHECK(format_metric(1e-7) == "1e-07");
  CHECK(format_metric(std::nan("")) == "nan");
}

TEST_CASE("run ids are deterministic and key the identifying fields") {
  MetricsRecord r = sample_record();
  CHECK(r.run_id.size() == 16);
  CHECK(derive_run_id(r) == derive_run_id(r));
  MetricsRecord other = r;
  other.beta = 0.01;
  CHECK(derive_run_id(other) != r.run_id);
  other = r;
  other.distortion_l2 = 99.0;  // measured values do not enter the id
  CHECK(derive_run_id(other) == r.run_id);
}

TEST_CASE("rows serialize every field in header order") {
  MetricsRecord r = sample_record();
  std::string row = metrics_csv_row(r);
  CHECK(row == r.run_id + ",11,joint,0.25,3,0.001,400,0.333333333,12.3456789,0.5,1e-07,0");
}

TEST_CASE("metrics files roundtrip") {
  FileGuard guard{temp_path("metrics_roundtrip")};
  MetricsRecord a = sample_record();
  MetricsRecord b = sample_record();
  b.mode = "separate";
  b.bandwidth = -1;  // no slot budget on this channel
  b.run_id = derive_run_id(b);
  write_metrics_csv(guard.path, {a, b});

  auto back = read_metrics_csv(guard.path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].run_id == a.run_id);
  CHECK(back[0].mode == "joint");
  CHECK(back[1].bandwidth == -1);
  CHECK(metrics_csv_row(back[0]) == metrics_csv_row(a));
  CHECK(metrics_csv_row(back[1]) == metrics_csv_row(b));
}

TEST_CASE("metrics reader rejects a foreign header") {
  FileGuard guard{temp_path("metrics_badheader")};
  {
    FILE* f = fopen(guard.path.c_str(), "wb");
    fputs("run,seed\n", f);
    fclose(f);
  }
  CHECK_THROWS(read_metrics_csv(guard.path));
}
