#include "jscc/sweeps.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"

using namespace jscc;

namespace {

TrainConfig tiny_sweep_config() {
  TrainConfig config;
  config.model.source_dim = 16;
  config.model.code_dim = 4;
  config.model.width = 10;
  config.model.hidden_layers = 1;
  config.model.slot_count = 2;
  config.model.prior_width = 6;
  config.model.aux_dim = 3;
  config.channel.kind = ChannelKind::kGaussian;
  config.channel.gaussian.snr = 2.0;
  config.batch_size = 8;
  config.steps = 25;
  config.learning_rate = 0.02;
  config.seed = 9;
  config.trace_every = 10;
  return config;
}

Dataset blob_data() { return generate_synthetic(SyntheticKind::kGaussBlobs, 40, 4, 11); }

bool records_equal(const MetricsRecord& a, const MetricsRecord& b) {
  return a.run_id == b.run_id && a.seed == b.seed && a.mode == b.mode && a.snr == b.snr &&
         a.bandwidth == b.bandwidth && a.beta == b.beta && a.steps == b.steps &&
         a.distortion_l2 == b.distortion_l2 && a.rate_bits == b.rate_bits &&
         a.transmission_bits == b.transmission_bits &&
         (a.mmd == b.mmd || (std::isnan(a.mmd) && std::isnan(b.mmd))) &&
         a.wall_seconds == b.wall_seconds;
}

}  // namespace

TEST_CASE("default grids have the documented shape") {
  std::vector<double> snrs = default_snr_grid();
  REQUIRE(snrs.size() == 5);
  CHECK(snrs.front() == 0.25);
  CHECK(snrs.back() == 4.0);
  for (std::size_t i = 1; i < snrs.size(); ++i) CHECK(snrs[i] == doctest::Approx(2.0 * snrs[i - 1]));

  std::vector<double> betas = default_beta_grid();
  REQUIRE(betas.size() == 7);
  CHECK(betas.front() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(betas.back() == doctest::Approx(1e1).epsilon(1e-12));
  for (std::size_t i = 1; i < betas.size(); ++i) {
    CHECK(betas[i] / betas[i - 1] == doctest::Approx(betas[1] / betas[0]).epsilon(1e-12));
  }
}

TEST_CASE("trade-off sweep emits one row per weight and finds the argmin") {
  Dataset data = blob_data();
  TrainConfig base = tiny_sweep_config();
  std::vector<double> betas = {0.05, 5.0};

  BetaSweepResult result = sweep_beta(base, betas, data);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].beta == 0.05);
  CHECK(result.rows[1].beta == 5.0);
  for (const MetricsRecord& row : result.rows) {
    CHECK(row.mode == "joint");
    CHECK(row.seed == base.seed);
    CHECK(row.snr == base.channel.gaussian.snr);
    CHECK(row.bandwidth == -1);
    CHECK(row.steps == base.steps);
    CHECK(std::isfinite(row.distortion_l2));
    CHECK(row.distortion_l2 > 0.0);
    CHECK(std::isfinite(row.rate_bits));
    CHECK(std::isnan(row.mmd));
    CHECK(row.wall_seconds == 0.0);  // stays zero so reruns are bit-identical
  }
  CHECK(result.rows[0].run_id != result.rows[1].run_id);

  std::size_t argmin =
      result.rows[0].distortion_l2 <= result.rows[1].distortion_l2 ? 0 : 1;
  CHECK(result.best_index == argmin);

  BetaSweepResult again = sweep_beta(base, betas, data);
  REQUIRE(again.rows.size() == result.rows.size());
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    CHECK(records_equal(result.rows[i], again.rows[i]));
  }
  CHECK(again.best_index == result.best_index);
}

TEST_CASE("trade-off sweep rejects bad inputs") {
  Dataset data = blob_data();
  TrainConfig base = tiny_sweep_config();
  CHECK_THROWS_WITH_AS(sweep_beta(base, {}, data), doctest::Contains("non-empty"),
                       std::runtime_error);
  base.mode = ObjectiveMode::kSourceVae;
  CHECK_THROWS_WITH_AS(sweep_beta(base, {1.0}, data), doctest::Contains("end-to-end"),
                       std::runtime_error);
}

TEST_CASE("noise sweep crosses grid and repetition seeds") {
  Dataset data = blob_data();
  TrainConfig base = tiny_sweep_config();
  std::vector<double> snrs = {0.5, 4.0};
  std::vector<std::uint64_t> seeds = {1, 2};

  std::vector<MetricsRecord> rows = sweep_snr(base, snrs, seeds, data);
  REQUIRE(rows.size() == 4);
  // Repetition-major order: all grid points of seed 1, then seed 2.
  CHECK(rows[0].seed == 1);
  CHECK(rows[1].seed == 1);
  CHECK(rows[2].seed == 2);
  CHECK(rows[3].seed == 2);
  CHECK(rows[0].snr == 0.5);
  CHECK(rows[1].snr == 4.0);
  CHECK(rows[2].snr == 0.5);
  CHECK(rows[3].snr == 4.0);

  std::set<std::string> ids;
  for (const MetricsRecord& row : rows) {
    CHECK(row.mode == "joint");
    CHECK(std::isfinite(row.distortion_l2));
    ids.insert(row.run_id);
  }
  CHECK(ids.size() == 4);
  // Different repetitions train different models.
  CHECK(rows[0].distortion_l2 != rows[2].distortion_l2);
}

TEST_CASE("joint versus separate comparison emits one best row per side") {
  Dataset data = blob_data();
  CompareOptions options;
  options.base = tiny_sweep_config();
  options.snr_grid = {1.0};
  options.beta_grid = {0.1, 2.0};
  options.seeds = {1};
  options.separate_coder_steps = 20;

  std::vector<MetricsRecord> rows = compare_joint_separate(options, data);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mode == "joint");
  CHECK(rows[1].mode == "separate");
  for (const MetricsRecord& row : rows) {
    CHECK(row.seed == 1);
    CHECK(row.snr == 1.0);
    CHECK(row.bandwidth == -1);
    CHECK((row.beta == 0.1 || row.beta == 2.0));
    CHECK(std::isfinite(row.distortion_l2));
    CHECK(row.distortion_l2 > 0.0);
  }
  CHECK(rows[1].steps == 20);

  std::vector<MetricsRecord> again = compare_joint_separate(options, data);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(records_equal(rows[i], again[i]));
}

TEST_CASE("slot-budget sweep evaluates every fixed budget per variant") {
  Dataset data = blob_data();
  BandwidthSweepOptions options;
  options.base = tiny_sweep_config();
  options.base.channel.kind = ChannelKind::kBandwidth;
  options.base.channel.marginalization = Marginalization::kMonteCarlo;
  options.base.channel.mc_samples = 1;
  options.seeds = {3};

  std::vector<MetricsRecord> rows = sweep_bandwidth(options, data);
  // 4 variants x budgets {0,1,2} for a two-slot code.
  REQUIRE(rows.size() == 12);
  std::vector<std::string> expected_modes = {"joint-std", "joint-ar", "joint-std-alv",
                                             "joint-ar-alv"};
  for (std::size_t v = 0; v < expected_modes.size(); ++v) {
    for (std::size_t b = 0; b <= 2; ++b) {
      const MetricsRecord& row = rows[v * 3 + b];
      CHECK(row.mode == expected_modes[v]);
      CHECK(row.bandwidth == static_cast<int>(b));
      CHECK(row.seed == 3);
      CHECK(row.snr == options.base.channel.gaussian.snr);
      CHECK(std::isfinite(row.distortion_l2));
    }
  }

  std::set<std::string> ids;
  for (const MetricsRecord& row : rows) ids.insert(row.run_id);
  CHECK(ids.size() == rows.size());

  options.include_alv_variants = false;
  std::vector<MetricsRecord> plain = sweep_bandwidth(options, data);
  REQUIRE(plain.size() == 6);
  // The non-auxiliary variants are untouched by dropping the auxiliary ones.
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(records_equal(plain[i], rows[i]));
}
