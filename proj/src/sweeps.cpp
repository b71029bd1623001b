#include "jscc/sweeps.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace jscc {

namespace {

constexpr std::uint64_t kEvalStreamTag = 3;

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
  if (!wall_clock_enabled()) return 0.0;
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t eval_seed_for(std::uint64_t run_seed) { return Rng(run_seed).child(kEvalStreamTag).seed(); }

void require_end_to_end(const TrainConfig& config, const char* protocol) {
  if (config.mode != ObjectiveMode::kJoint && config.mode != ObjectiveMode::kJointAux) {
    throw std::runtime_error(std::string(protocol) +
                             " needs an end-to-end objective (joint or joint-alv)");
  }
}

MetricsRecord make_record(const TrainConfig& config, std::uint64_t seed_root,
                          const std::string& mode, double snr, int bandwidth,
                          const PipelineMetrics& metrics, double wall) {
  MetricsRecord record;
  record.seed = seed_root;
  record.mode = mode;
  record.snr = snr;
  record.bandwidth = bandwidth;
  record.beta = config.beta;
  record.steps = config.steps;
  record.distortion_l2 = metrics.distortion_l2;
  record.rate_bits = metrics.rate_bits;
  record.transmission_bits = metrics.transmission_bits;
  record.mmd = metrics.mmd;
  record.wall_seconds = wall;
  record.run_id = derive_run_id(record);
  return record;
}

// Trains one joint-style run and evaluates it, possibly on a different
// channel configuration than it was trained with (fixed-budget evaluation of
// a randomly budgeted model).
MetricsRecord joint_point(const TrainConfig& config, const DatasetSplit& split,
                          const ChannelConfig& eval_channel, std::uint64_t seed_root,
                          const std::string& mode, double snr, int bandwidth,
                          std::size_t mmd_samples) {
  Clock::time_point start = Clock::now();
  TrainResult trained = train(config, split.train);
  EvalOptions options;
  options.seed = eval_seed_for(config.seed);
  options.mmd_samples = mmd_samples;
  PipelineMetrics metrics = evaluate_joint(*trained.bundle.joint, eval_channel, split.eval, options);
  return make_record(config, seed_root, mode, snr, bandwidth, metrics, elapsed_seconds(start));
}

std::size_t argmin_distortion(const std::vector<MetricsRecord>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].distortion_l2 < rows[best].distortion_l2) best = i;
  }
  return best;
}

}  // namespace

std::vector<double> default_snr_grid() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

std::vector<double> default_beta_grid() {
  // Seven log-spaced points spanning 1e-3 to 1e1.
  std::vector<double> grid(7);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = std::pow(10.0, -3.0 + (4.0 / 6.0) * static_cast<double>(i));
  }
  return grid;
}

bool wall_clock_enabled() {
  const char* flag = std::getenv("JSCC_WALL_CLOCK");
  return flag != nullptr && std::string(flag) == "1";
}

BetaSweepResult sweep_beta(const TrainConfig& base, const std::vector<double>& betas,
                           const Dataset& data, std::size_t mmd_samples) {
  if (betas.empty()) throw std::runtime_error("trade-off sweep needs a non-empty grid");
  require_end_to_end(base, "trade-off sweep");
  DatasetSplit split = split_train_eval(data);

  BetaSweepResult result;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    TrainConfig config = base;
    config.beta = betas[i];
    config.seed = sweep_seed(base.seed, i);
    double snr = config.channel.kind == ChannelKind::kRelaxedBinary ? 0.0
                                                                    : config.channel.gaussian.snr;
    result.rows.push_back(joint_point(config, split, config.channel, base.seed,
                                      objective_mode_name(config.mode), snr, -1, mmd_samples));
  }
  result.best_index = argmin_distortion(result.rows);
  return result;
}

std::vector<MetricsRecord> sweep_snr(const TrainConfig& base, const std::vector<double>& snrs,
                                     const std::vector<std::uint64_t>& seeds, const Dataset& data) {
  if (snrs.empty()) throw std::runtime_error("signal-to-noise sweep needs a non-empty grid");
  require_end_to_end(base, "signal-to-noise sweep");
  DatasetSplit split = split_train_eval(data);

  std::vector<MetricsRecord> rows;
  for (std::uint64_t root : seeds) {
    for (std::size_t s = 0; s < snrs.size(); ++s) {
      TrainConfig config = base;
      config.channel.kind = ChannelKind::kGaussian;
      config.channel.gaussian.snr = snrs[s];
      config.seed = sweep_seed(root, s);
      rows.push_back(joint_point(config, split, config.channel, root,
                                 objective_mode_name(config.mode), snrs[s], -1, 0));
    }
  }
  return rows;
}

std::vector<MetricsRecord> compare_joint_separate(const CompareOptions& options,
                                                  const Dataset& data) {
  std::vector<double> snrs = options.snr_grid.empty() ? default_snr_grid() : options.snr_grid;
  std::vector<double> betas = options.beta_grid.empty() ? default_beta_grid() : options.beta_grid;
  DatasetSplit split = split_train_eval(data);

  std::vector<MetricsRecord> out;
  for (std::uint64_t root : options.seeds) {
    std::size_t flat = 0;  // per-repetition run counter; run i uses root ^ i

    // One source autoencoder per trade-off weight; the source side does not
    // depend on the channel, so these are shared across snr points.
    std::vector<TrainResult> sources;
    for (double beta : betas) {
      TrainConfig config = options.base;
      config.mode = ObjectiveMode::kSourceVae;
      config.beta = beta;
      config.seed = sweep_seed(root, flat++);
      sources.push_back(train(config, split.train));
    }

    for (double snr : snrs) {
      ChannelConfig channel;
      channel.kind = ChannelKind::kGaussian;
      channel.gaussian.snr = snr;

      std::vector<MetricsRecord> joint_rows;
      for (double beta : betas) {
        TrainConfig config = options.base;
        config.mode = ObjectiveMode::kJoint;
        config.channel = channel;
        config.beta = beta;
        config.seed = sweep_seed(root, flat++);
        joint_rows.push_back(joint_point(config, split, channel, root, "joint", snr, -1, 0));
      }
      out.push_back(joint_rows[argmin_distortion(joint_rows)]);

      std::vector<MetricsRecord> separate_rows;
      for (std::size_t b = 0; b < betas.size(); ++b) {
        const SourceVae& vae = *sources[b].bundle.source;
        TrainConfig coder_config = options.base;
        coder_config.mode = ObjectiveMode::kChannelCoder;
        coder_config.channel = channel;
        coder_config.beta = betas[b];  // carried for the report key only
        coder_config.seed = sweep_seed(root, flat++);
        if (options.separate_coder_steps != 0) coder_config.steps = options.separate_coder_steps;
        Clock::time_point start = Clock::now();
        Dataset codes = encoder_mean_codes(vae, split.train);
        TrainResult coder = train(coder_config, codes);
        EvalOptions eval_options;
        eval_options.seed = eval_seed_for(coder_config.seed);
        PipelineMetrics metrics =
            evaluate_separate(vae, *coder.bundle.coder, channel, split.eval, eval_options);
        separate_rows.push_back(make_record(coder_config, root, "separate", snr, -1, metrics,
                                            elapsed_seconds(start)));
      }
      out.push_back(separate_rows[argmin_distortion(separate_rows)]);
    }
  }
  return out;
}

std::vector<MetricsRecord> sweep_bandwidth(const BandwidthSweepOptions& options,
                                           const Dataset& data) {
  require_end_to_end(options.base, "slot-budget sweep");
  DatasetSplit split = split_train_eval(data);
  std::size_t slots = options.base.model.slot_count;

  struct Variant {
    PriorKind prior;
    bool alv;
    const char* mode;
  };
  std::vector<Variant> variants = {{PriorKind::kStandard, false, "joint-std"},
                                   {PriorKind::kAutoregressive, false, "joint-ar"}};
  if (options.include_alv_variants) {
    variants.push_back({PriorKind::kStandard, true, "joint-std-alv"});
    variants.push_back({PriorKind::kAutoregressive, true, "joint-ar-alv"});
  }

  std::vector<MetricsRecord> rows;
  for (std::uint64_t root : options.seeds) {
    std::size_t flat = 0;
    for (const Variant& variant : variants) {
      TrainConfig config = options.base;
      config.mode = variant.alv ? ObjectiveMode::kJointAux : ObjectiveMode::kJoint;
      config.model.prior_kind = variant.prior;
      config.channel.kind = ChannelKind::kBandwidth;
      config.channel.bandwidth_pmf.clear();  // uniform over {1..T} while training
      config.seed = sweep_seed(root, flat++);

      Clock::time_point start = Clock::now();
      TrainResult trained = train(config, split.train);
      double wall = elapsed_seconds(start);

      for (std::size_t b = 0; b <= slots; ++b) {
        ChannelConfig eval_channel = config.channel;
        eval_channel.bandwidth_pmf = point_mass_pmf(slots, b);
        eval_channel.marginalization = Marginalization::kFullSum;
        EvalOptions eval_options;
        eval_options.seed = eval_seed_for(sweep_seed(config.seed, b));
        eval_options.mmd_samples = options.mmd_samples;
        PipelineMetrics metrics =
            evaluate_joint(*trained.bundle.joint, eval_channel, split.eval, eval_options);
        rows.push_back(make_record(config, root, variant.mode, config.channel.gaussian.snr,
                                   static_cast<int>(b), metrics, wall));
      }
    }
  }
  return rows;
}

}  // namespace jscc
