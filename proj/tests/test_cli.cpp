#include "jscc/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "jscc/image.hpp"
#include "jscc/metrics.hpp"

using namespace jscc;
namespace fs = std::filesystem;

namespace {

struct DirGuard {
  explicit DirGuard(std::string path) : path(std::move(path)) {
    fs::remove_all(this->path);
    fs::create_directories(this->path);
  }
  ~DirGuard() { fs::remove_all(path); }
  std::string path;
};

std::string write_config(const std::string& dir, const std::string& name,
                         const std::string& body) {
  std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  out << body;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const char* kTinyJoint = R"({
  "dataset": {"kind": "blobs", "size": 60, "side": 4, "seed": 5},
  "model": {"latent_dim": 4, "width": 10, "slots": 2},
  "channel": {"kind": "gaussian", "snr": 2.0},
  "objective": {"mode": "joint", "beta": 0.3},
  "training": {"steps": 30, "batch": 8, "seed": 2, "trace_every": 10},
  "eval": {"seed": 4, "mmd_samples": 8}
})";

}  // namespace

TEST_CASE("usage errors exit with 2, config errors with 1") {
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"train"}) == 2);                       // missing required --config
  CHECK(run_cli({"train", "--config", "a", "--bogus", "b"}) == 2);
  CHECK(run_cli({"train", "--config", "./no_such_file.json"}) == 1);

  DirGuard dir("./cli_usage_out");
  std::string bad = write_config(dir.path, "bad.json", R"({"channel": {"snrr": 1.0}})");
  CHECK(run_cli({"train", "--config", bad}) == 1);
}

TEST_CASE("train writes checkpoint, trace, metrics and the resolved config") {
  DirGuard dir("./cli_train_out");
  std::string config = write_config(dir.path, "run.json", kTinyJoint);
  std::string out = (fs::path(dir.path) / "run").string();

  REQUIRE(run_cli({"train", "--config", config, "--out", out}) == 0);
  CHECK(fs::exists(fs::path(out) / "model.ckpt"));
  CHECK(fs::exists(fs::path(out) / "trace.csv"));
  CHECK(fs::exists(fs::path(out) / "resolved_config.json"));

  std::vector<MetricsRecord> rows = read_metrics_csv((fs::path(out) / "metrics_v1.csv").string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mode == "joint");
  CHECK(rows[0].seed == 2);
  CHECK(rows[0].snr == 2.0);
  CHECK(rows[0].bandwidth == -1);
  CHECK(rows[0].steps == 30);
  CHECK(rows[0].distortion_l2 > 0.0);
  CHECK(rows[0].wall_seconds == 0.0);

  // Evaluating the stored checkpoint reproduces the training-time metrics.
  std::string eval_out = (fs::path(dir.path) / "eval").string();
  REQUIRE(run_cli({"eval", "--config", config, "--out", eval_out, "--checkpoint", out}) == 0);
  std::vector<MetricsRecord> eval_rows =
      read_metrics_csv((fs::path(eval_out) / "metrics_v1.csv").string());
  REQUIRE(eval_rows.size() == 1);
  CHECK(eval_rows[0].distortion_l2 == rows[0].distortion_l2);
  CHECK(eval_rows[0].rate_bits == rows[0].rate_bits);
  CHECK(eval_rows[0].run_id == rows[0].run_id);
}

TEST_CASE("reruns of one grid point are byte-identical") {
  DirGuard dir("./cli_rerun_out");
  std::string config = write_config(dir.path, "run.json", kTinyJoint);
  std::string out_a = (fs::path(dir.path) / "a").string();
  std::string out_b = (fs::path(dir.path) / "b").string();

  REQUIRE(run_cli({"train", "--config", config, "--out", out_a}) == 0);
  REQUIRE(run_cli({"train", "--config", config, "--out", out_b}) == 0);
  CHECK(slurp((fs::path(out_a) / "metrics_v1.csv").string()) ==
        slurp((fs::path(out_b) / "metrics_v1.csv").string()));
  CHECK(slurp((fs::path(out_a) / "trace.csv").string()) ==
        slurp((fs::path(out_b) / "trace.csv").string()));
  CHECK(slurp((fs::path(out_a) / "model.ckpt").string()) ==
        slurp((fs::path(out_b) / "model.ckpt").string()));
}

TEST_CASE("separate mode trains both stages and samples a grid") {
  DirGuard dir("./cli_separate_out");
  std::string config = write_config(dir.path, "sep.json", R"({
    "dataset": {"kind": "blobs", "size": 60, "side": 4, "seed": 5},
    "model": {"latent_dim": 4, "width": 10, "slots": 2},
    "channel": {"kind": "gaussian", "snr": 2.0},
    "objective": {"mode": "separate", "beta": 0.3},
    "training": {"steps": 30, "batch": 8, "seed": 2, "trace_every": 10}
  })");
  std::string out = (fs::path(dir.path) / "run").string();

  REQUIRE(run_cli({"train", "--config", config, "--out", out}) == 0);
  CHECK(fs::exists(fs::path(out) / "source.ckpt"));
  CHECK(fs::exists(fs::path(out) / "coder.ckpt"));
  std::vector<MetricsRecord> rows = read_metrics_csv((fs::path(out) / "metrics_v1.csv").string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mode == "separate");

  REQUIRE(run_cli({"sample", "--config", config, "--out", out, "--count", "5"}) == 0);
  GrayImage grid = read_pgm((fs::path(out) / "samples.pgm").string());
  CHECK(grid.width == 5 * 4 + 4);   // five tiles and four gutters
  CHECK(grid.height == 2 * 4 + 1);  // source row + one reconstruction row
}

TEST_CASE("slot-limited sampling writes one row per budget") {
  DirGuard dir("./cli_bw_out");
  std::string config = write_config(dir.path, "bw.json", R"({
    "dataset": {"kind": "blobs", "size": 60, "side": 4, "seed": 5},
    "model": {"latent_dim": 4, "width": 10, "slots": 2},
    "channel": {"kind": "bandwidth", "snr": 2.0, "mc_samples": 1},
    "objective": {"mode": "joint", "beta": 0.3},
    "training": {"steps": 30, "batch": 8, "seed": 2, "trace_every": 10}
  })");
  std::string out = (fs::path(dir.path) / "run").string();
  REQUIRE(run_cli({"train", "--config", config, "--out", out}) == 0);
  REQUIRE(run_cli({"sample", "--config", config, "--out", out, "--count", "4"}) == 0);
  GrayImage grid = read_pgm((fs::path(out) / "samples.pgm").string());
  CHECK(grid.width == 4 * 4 + 3);
  CHECK(grid.height == 4 * 4 + 3);  // source row + budgets {2, 1, 0}
}

TEST_CASE("the dataset discrepancy baseline writes a metrics row") {
  DirGuard dir("./cli_mmd_out");
  std::string config = write_config(dir.path, "run.json", kTinyJoint);
  std::string out = (fs::path(dir.path) / "run").string();
  REQUIRE(run_cli({"mmd", "--config", config, "--out", out, "--samples", "20"}) == 0);
  std::vector<MetricsRecord> rows = read_metrics_csv((fs::path(out) / "metrics_v1.csv").string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mode == "mmd-null");
  CHECK(std::isfinite(rows[0].mmd));
  CHECK(rows[0].mmd < 0.5);  // same-distribution halves are close
}

TEST_CASE("JSCC_OUT_DIR overrides the configured directory") {
  DirGuard dir("./cli_env_out");
  std::string config = write_config(dir.path, "run.json", kTinyJoint);
  std::string env_dir = (fs::path(dir.path) / "from_env").string();
  setenv("JSCC_OUT_DIR", env_dir.c_str(), 1);
  int code = run_cli({"mmd", "--config", config, "--samples", "10"});
  unsetenv("JSCC_OUT_DIR");
  REQUIRE(code == 0);
  CHECK(fs::exists(fs::path(env_dir) / "metrics_v1.csv"));
}

TEST_CASE("gradcheck subcommand passes") {
  CHECK(run_cli({"gradcheck", "--seed", "3"}) == 0);
}
