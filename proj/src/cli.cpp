#include "jscc/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jscc/config.hpp"
#include "jscc/evaluate.hpp"
#include "jscc/gradcheck.hpp"
#include "jscc/image.hpp"
#include "jscc/metrics.hpp"
#include "jscc/mmd.hpp"
#include "jscc/objectives.hpp"
#include "jscc/sweeps.hpp"
#include "jscc/train.hpp"

namespace jscc {

namespace {

namespace fs = std::filesystem;

const double kNan = std::numeric_limits<double>::quiet_NaN();

// Output directory precedence: --out flag, then JSCC_OUT_DIR, then the config.
std::string resolve_out_dir(const RunConfig& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("JSCC_OUT_DIR");
  if (env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

// Creates the directory and archives the effective settings, so any run can
// be reproduced from its outputs alone.
std::string prepare_out_dir(const RunConfig& config, const std::string& flag) {
  std::string dir = resolve_out_dir(config, flag);
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / "resolved_config.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write to output directory '" + dir + "'");
  out << resolved_config_json(config);
  return dir;
}

std::string metrics_path(const std::string& dir) {
  return (fs::path(dir) / kMetricsCsvFileName).string();
}

double mean_row_sse_values(const Tensor& x, const Tensor& recon) {
  return mean_all(row_sum(square(sub(x, recon)))).item();
}

// Index of the single positive mass, or -1 when the pmf spreads over several
// budgets (or is the empty default).
int pmf_point_mass(const std::vector<double>& pmf) {
  int index = -1;
  for (std::size_t b = 0; b < pmf.size(); ++b) {
    if (pmf[b] > 0.0) {
      if (index >= 0) return -1;
      index = static_cast<int>(b);
    }
  }
  return index;
}

double record_snr(const ChannelConfig& channel) {
  return channel.kind == ChannelKind::kRelaxedBinary ? 0.0 : channel.gaussian.snr;
}

int record_bandwidth(const ChannelConfig& channel) {
  if (channel.kind != ChannelKind::kBandwidth) return -1;
  return pmf_point_mass(channel.bandwidth_pmf);
}

EvalOptions eval_options_from(const RunConfig& config) {
  EvalOptions options;
  options.seed = config.eval.seed;
  options.mmd_samples = config.eval.mmd_samples;
  return options;
}

MetricsRecord fill_record(const RunConfig& config, const PipelineMetrics& metrics,
                          const std::string& mode) {
  MetricsRecord record;
  record.seed = config.train.seed;
  record.mode = mode;
  record.snr = record_snr(config.train.channel);
  record.bandwidth = record_bandwidth(config.train.channel);
  record.beta = config.train.beta;
  record.steps = config.train.steps;
  record.distortion_l2 = metrics.distortion_l2;
  record.rate_bits = metrics.rate_bits;
  record.transmission_bits = metrics.transmission_bits;
  record.mmd = metrics.mmd;
  record.run_id = derive_run_id(record);
  return record;
}

// A trained or loaded system: the primary bundle plus, in separate mode, the
// channel-coder stage trained on the source encoder's mean codes.
struct TrainedSystem {
  ModelBundle primary;
  std::optional<ModelBundle> coder;
  std::vector<TraceRow> primary_trace;
  std::vector<TraceRow> coder_trace;
};

TrainConfig coder_stage_config(const RunConfig& config) {
  TrainConfig stage = config.train;
  stage.mode = ObjectiveMode::kChannelCoder;
  stage.seed = sweep_seed(config.train.seed, 1);  // stage 1 of the pipeline
  return stage;
}

TrainedSystem train_system(const RunConfig& config, const DatasetSplit& split) {
  TrainedSystem system;
  TrainResult primary = train(config.train, split.train);
  system.primary = std::move(primary.bundle);
  system.primary_trace = std::move(primary.trace);
  if (!config.separate_mode) return system;

  Dataset codes = encoder_mean_codes(*system.primary.source, split.train);
  TrainResult coder = train(coder_stage_config(config), codes);
  system.coder = std::move(coder.bundle);
  system.coder_trace = std::move(coder.trace);
  return system;
}

TrainedSystem load_system(const RunConfig& config, const std::string& dir) {
  TrainedSystem system;
  system.primary = init_bundle(config.train);
  if (!config.separate_mode) {
    load_checkpoint(*system.primary.params, (fs::path(dir) / "model.ckpt").string());
    return system;
  }
  load_checkpoint(*system.primary.params, (fs::path(dir) / "source.ckpt").string());
  system.coder = init_bundle(coder_stage_config(config));
  load_checkpoint(*system.coder->params, (fs::path(dir) / "coder.ckpt").string());
  return system;
}

PipelineMetrics evaluate_system(const RunConfig& config, const TrainedSystem& system,
                                const Dataset& eval_data) {
  const double kLn2 = std::log(2.0);
  EvalOptions options = eval_options_from(config);
  if (config.separate_mode) {
    return evaluate_separate(*system.primary.source, *system.coder->coder, config.train.channel,
                             eval_data, options);
  }
  switch (config.train.mode) {
    case ObjectiveMode::kJoint:
    case ObjectiveMode::kJointAux:
      return evaluate_joint(*system.primary.joint, config.train.channel, eval_data, options);
    case ObjectiveMode::kSourceVae: {
      const SourceVae& vae = *system.primary.source;
      PipelineMetrics metrics;
      metrics.distortion_l2 = clean_reconstruction_l2(vae.encoder, vae.decoder, eval_data);
      Rng rng(options.seed);
      LossBreakdown loss = source_vae_loss(eval_data.images, vae, config.train.beta, rng);
      metrics.distortion_nats = loss.distortion.item();
      metrics.code_rate_nats = loss.rate.item();
      metrics.rate_bits = metrics.code_rate_nats / kLn2;
      metrics.transmission_nats = kNan;  // channel-free stage
      metrics.transmission_bits = kNan;
      metrics.mmd = kNan;
      return metrics;
    }
    case ObjectiveMode::kChannelCoder: {
      // Dataset rows are code vectors; measure squared code error through the
      // fixed-ratio channel. The image-domain quantities do not apply.
      const ChannelCoderPair& pair = *system.primary.coder;
      Tensor y = eval_data.images;
      Rng rng(options.seed);
      Tensor c = pair.encode(y);
      Tensor decoded = pair.decode(gaussian_transmit(c, c, config.train.channel.gaussian, rng));
      PipelineMetrics metrics;
      metrics.distortion_l2 = mean_row_sse_values(y, decoded);
      metrics.distortion_nats = kNan;
      metrics.code_rate_nats = kNan;
      metrics.transmission_nats = kNan;
      metrics.rate_bits = kNan;
      metrics.transmission_bits = kNan;
      metrics.mmd = kNan;
      return metrics;
    }
  }
  throw std::runtime_error("unreachable objective mode");
}

// Loads the dataset and binds the model's input width to it (IDX files carry
// their own row size; synthetic sources fixed it at parse time).
Dataset load_bound_dataset(RunConfig& config) {
  Dataset data = load_dataset(config.dataset);
  if (config.train.model.source_dim == 0) config.train.model.source_dim = data.dim();
  return data;
}

double wall_since(std::chrono::steady_clock::time_point start) {
  if (!wall_clock_enabled()) return 0.0;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_train(RunConfig config, const std::string& out_flag) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);
  DatasetSplit split = split_train_eval(data);

  auto start = std::chrono::steady_clock::now();
  TrainedSystem system = train_system(config, split);
  double wall = wall_since(start);

  PipelineMetrics metrics = evaluate_system(config, system, split.eval);
  MetricsRecord record = fill_record(config, metrics, config_mode_string(config));
  record.wall_seconds = wall;

  if (config.separate_mode) {
    save_checkpoint(*system.primary.params, (fs::path(dir) / "source.ckpt").string());
    save_checkpoint(*system.coder->params, (fs::path(dir) / "coder.ckpt").string());
    write_trace_csv((fs::path(dir) / "trace_source.csv").string(), record.run_id,
                    system.primary_trace);
    write_trace_csv((fs::path(dir) / "trace_coder.csv").string(), record.run_id,
                    system.coder_trace);
  } else {
    save_checkpoint(*system.primary.params, (fs::path(dir) / "model.ckpt").string());
    write_trace_csv((fs::path(dir) / "trace.csv").string(), record.run_id, system.primary_trace);
  }
  write_metrics_csv(metrics_path(dir), {record});

  std::cout << "train: mode=" << record.mode << " steps=" << record.steps
            << " distortion_l2=" << format_metric(record.distortion_l2)
            << " rate_bits=" << format_metric(record.rate_bits) << " -> " << dir << "\n";
  return 0;
}

int cmd_eval(RunConfig config, const std::string& out_flag, const std::string& checkpoint_dir) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);
  DatasetSplit split = split_train_eval(data);

  TrainedSystem system = load_system(config, checkpoint_dir.empty() ? dir : checkpoint_dir);
  PipelineMetrics metrics = evaluate_system(config, system, split.eval);
  MetricsRecord record = fill_record(config, metrics, config_mode_string(config));
  write_metrics_csv(metrics_path(dir), {record});

  std::cout << "eval: mode=" << record.mode
            << " distortion_l2=" << format_metric(record.distortion_l2)
            << " rate_bits=" << format_metric(record.rate_bits)
            << " transmission_bits=" << format_metric(record.transmission_bits) << " -> "
            << metrics_path(dir) << "\n";
  return 0;
}

int cmd_sweep_snr(RunConfig config, const std::string& out_flag) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);
  std::vector<double> grid =
      config.eval.snr_grid.empty() ? default_snr_grid() : config.eval.snr_grid;

  std::vector<MetricsRecord> rows = sweep_snr(config.train, grid, config.eval.seeds, data);
  write_metrics_csv(metrics_path(dir), rows);
  std::cout << "sweep-snr: " << rows.size() << " rows (" << grid.size() << " snrs x "
            << config.eval.seeds.size() << " seeds) -> " << metrics_path(dir) << "\n";
  return 0;
}

int cmd_sweep_beta(RunConfig config, const std::string& out_flag) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);
  std::vector<double> grid = config.beta_grid.empty() ? default_beta_grid() : config.beta_grid;

  BetaSweepResult result = sweep_beta(config.train, grid, data, config.eval.mmd_samples);
  write_metrics_csv(metrics_path(dir), result.rows);
  const MetricsRecord& best = result.rows[result.best_index];
  std::cout << "sweep-beta: " << result.rows.size() << " rows, best beta="
            << format_metric(best.beta)
            << " distortion_l2=" << format_metric(best.distortion_l2) << " -> "
            << metrics_path(dir) << "\n";
  return 0;
}

int cmd_compare(RunConfig config, const std::string& out_flag) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);

  CompareOptions options;
  options.base = config.train;
  options.snr_grid = config.eval.snr_grid;
  options.beta_grid = config.beta_grid;
  options.seeds = config.eval.seeds;
  std::vector<MetricsRecord> rows = compare_joint_separate(options, data);
  write_metrics_csv(metrics_path(dir), rows);

  std::size_t points = rows.size() / 2;
  std::size_t joint_wins = 0;
  for (std::size_t i = 0; i < points; ++i) {
    if (rows[2 * i].distortion_l2 < rows[2 * i + 1].distortion_l2) ++joint_wins;
  }
  std::cout << "compare-joint-separate: joint wins " << joint_wins << " of " << points
            << " grid points -> " << metrics_path(dir) << "\n";
  return 0;
}

int cmd_sweep_bandwidth(RunConfig config, const std::string& out_flag, bool skip_alv) {
  Dataset data = load_bound_dataset(config);
  std::string dir = prepare_out_dir(config, out_flag);

  BandwidthSweepOptions options;
  options.base = config.train;
  options.seeds = config.eval.seeds;
  options.mmd_samples = config.eval.mmd_samples;
  options.include_alv_variants = !skip_alv;
  std::vector<MetricsRecord> rows = sweep_bandwidth(options, data);
  write_metrics_csv(metrics_path(dir), rows);

  std::size_t variants = skip_alv ? 2 : 4;
  std::cout << "sweep-bandwidth: " << rows.size() << " rows (" << variants << " variants x "
            << config.eval.seeds.size() << " seeds x "
            << config.train.model.slot_count + 1 << " budgets) -> " << metrics_path(dir) << "\n";
  return 0;
}

std::vector<std::vector<double>> image_tiles(const Tensor& block) {
  std::size_t n = block.shape()[0];
  std::size_t dim = block.shape()[1];
  const std::vector<double>& values = block.values();
  std::vector<std::vector<double>> tiles;
  tiles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tiles.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(i * dim),
                       values.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return tiles;
}

Tensor alv_decoder_input(const JointModel& model, const Tensor& z, Rng& rng) {
  if (!model.alv) return z;
  Tensor v = gaussian_sample(make_standard_gaussian({z.shape()[0], model.alv->aux_dim()}), rng);
  return concat_last({z, v});
}

int cmd_sample(RunConfig config, const std::string& out_flag, const std::string& checkpoint_dir,
               std::size_t count) {
  Dataset data = load_bound_dataset(config);
  if (data.side == 0) throw std::runtime_error("sample needs square images (side x side rows)");
  std::string dir = prepare_out_dir(config, out_flag);
  DatasetSplit split = split_train_eval(data);
  TrainedSystem system = load_system(config, checkpoint_dir.empty() ? dir : checkpoint_dir);

  std::size_t n = std::min<std::size_t>(count, split.eval.size());
  std::vector<std::size_t> indices(n);
  for (std::size_t i = 0; i < n; ++i) indices[i] = i;
  Tensor x = split.eval.rows(indices);

  std::vector<std::vector<std::vector<double>>> grid_rows;
  grid_rows.push_back(image_tiles(x));
  Rng rng(config.eval.seed);

  if (config.separate_mode) {
    const SourceVae& vae = *system.primary.source;
    const ChannelCoderPair& pair = *system.coder->coder;
    Tensor code = vae.encoder.encode(x).mean;
    Tensor c = pair.encode(code);
    Tensor z = gaussian_transmit(c, c, config.train.channel.gaussian, rng);
    grid_rows.push_back(image_tiles(vae.decoder.mean(pair.decode(z))));
  } else if (config.train.mode == ObjectiveMode::kSourceVae) {
    const SourceVae& vae = *system.primary.source;
    grid_rows.push_back(image_tiles(vae.decoder.mean(vae.encoder.encode(x).mean)));
  } else if (config.train.mode == ObjectiveMode::kChannelCoder) {
    throw std::runtime_error("sample needs a model that reconstructs images");
  } else {
    const JointModel& model = *system.primary.joint;
    DiagonalGaussian e = model.encoder.encode(x);
    LatentCode code{e.mean, e.mean};
    const ChannelConfig& channel = config.train.channel;
    if (channel.kind == ChannelKind::kGaussian) {
      Tensor z = gaussian_transmit(code, channel.gaussian, rng);
      grid_rows.push_back(image_tiles(model.decoder.mean(alv_decoder_input(model, z, rng))));
    } else if (channel.kind == ChannelKind::kRelaxedBinary) {
      Tensor z = relaxed_binary_transmit(sigmoid(code.sample), channel.relaxed, rng);
      grid_rows.push_back(image_tiles(model.decoder.mean(alv_decoder_input(model, z, rng))));
    } else {
      // One reconstruction row per slot budget, widest budget first.
      BandwidthChannelSpec spec = bandwidth_spec_for(channel, model.prior);
      std::vector<std::size_t> budgets = config.eval.bandwidth_grid;
      if (budgets.empty()) {
        for (std::size_t b = config.train.model.slot_count + 1; b-- > 0;) budgets.push_back(b);
      }
      for (std::size_t budget : budgets) {
        Tensor z = bandwidth_transmit(code, budget, spec, rng).z;
        grid_rows.push_back(image_tiles(model.decoder.mean(alv_decoder_input(model, z, rng))));
      }
    }
  }

  GrayImage grid = compose_grid(grid_rows, data.side);
  std::string path = (fs::path(dir) / "samples.pgm").string();
  write_pgm(path, grid);
  std::cout << "sample: wrote " << grid.width << "x" << grid.height << " grid (1 source row + "
            << grid_rows.size() - 1 << " reconstruction rows) -> " << path << "\n";
  return 0;
}

int cmd_mmd(RunConfig config, const std::string& out_flag, std::size_t rows_per_side) {
  Dataset data = load_dataset(config.dataset);
  std::string dir = prepare_out_dir(config, out_flag);

  std::size_t half = data.size() / 2;
  std::size_t n = rows_per_side == 0 ? half : std::min(rows_per_side, half);
  if (n < 2) throw std::runtime_error("mmd needs at least 4 dataset rows (2 per side)");
  std::vector<std::size_t> first(n), second(n);
  for (std::size_t i = 0; i < n; ++i) {
    first[i] = i;
    second[i] = half + i;
  }
  double value = mmd_statistic(data.rows(first), data.rows(second), MmdOptions{});

  MetricsRecord record;
  record.mode = "mmd-null";
  record.seed = config.dataset.seed;
  record.snr = 0.0;
  record.bandwidth = -1;
  record.beta = 0.0;
  record.steps = 0;
  record.distortion_l2 = kNan;
  record.rate_bits = kNan;
  record.transmission_bits = kNan;
  record.mmd = value;
  record.run_id = derive_run_id(record);
  write_metrics_csv(metrics_path(dir), {record});

  std::cout << "mmd: split-null estimate " << format_metric(value) << " over " << n << "+" << n
            << " rows -> " << metrics_path(dir) << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  const double kTolerance = 1e-3;
  double worst = 0.0;
  std::string worst_name;
  for (const ObjectiveAudit& audit : audit_training_objectives(seed)) {
    std::cout << "gradcheck " << audit.name << ": max relative error "
              << format_metric(audit.max_relative_error) << "\n";
    if (audit.max_relative_error > worst) {
      worst = audit.max_relative_error;
      worst_name = audit.name;
    }
  }
  if (worst < kTolerance) {
    std::cout << "gradcheck: objective compositions within " << kTolerance << "\n";
    return 0;
  }
  std::cerr << "gradcheck: FAILED (" << worst_name << " at " << format_metric(worst) << ")\n";
  return 1;
}

}  // namespace

// The learned-prior likelihood term is fit on detached code samples, so for
// the joint objectives the audit targets the pathwise composition the samples
// actually backpropagate through.
std::vector<ObjectiveAudit> audit_training_objectives(std::uint64_t seed) {
  TrainConfig base;
  base.model.source_dim = 6;
  base.model.code_dim = 4;
  base.model.width = 6;
  base.model.hidden_layers = 1;
  base.model.slot_count = 2;
  base.model.prior_width = 6;
  base.model.aux_dim = 3;
  base.beta = 0.7;
  base.seed = seed;

  struct Variant {
    const char* name;
    TrainConfig config;
    bool bias_codes_off_center = false;
  };
  std::vector<Variant> variants;

  {
    TrainConfig c = base;
    c.mode = ObjectiveMode::kSourceVae;
    variants.push_back({"source coder", c});
  }
  {
    TrainConfig c = base;
    c.mode = ObjectiveMode::kJoint;
    c.model.use_inference_net = true;
    c.channel.kind = ChannelKind::kGaussian;
    c.channel.gaussian.snr = 1.5;
    variants.push_back({"joint, fixed-ratio channel, inference net", c});
  }
  {
    TrainConfig c = base;
    c.mode = ObjectiveMode::kJointAux;
    c.model.prior_kind = PriorKind::kAutoregressive;
    c.model.use_alv = true;
    c.channel.kind = ChannelKind::kBandwidth;
    c.channel.marginalization = Marginalization::kFullSum;
    variants.push_back({"joint, slot-limited channel, learned prior, auxiliary latent", c});
  }
  {
    TrainConfig c = base;
    c.mode = ObjectiveMode::kJoint;
    c.channel.kind = ChannelKind::kRelaxedBinary;
    c.model.squash_log_std = false;  // raw head, so a bias shift fixes the code scale
    variants.push_back({"joint, relaxed binary channel", c, true});
  }
  {
    TrainConfig c = base;
    c.mode = ObjectiveMode::kChannelCoder;
    variants.push_back({"channel coder", c});
  }

  std::vector<ObjectiveAudit> audits;
  for (const Variant& variant : variants) {
    const TrainConfig& c = variant.config;
    ModelBundle bundle = init_bundle(c);
    if (variant.bias_codes_off_center) {
      // The binary channel's output diverges as a squashed code approaches
      // 1/2, which ruins finite-difference conditioning for unlucky draws.
      // Shift the code means off center and shrink the code noise so the
      // check runs at a well-conditioned point; every parameter is still
      // perturbed and compared.
      std::vector<double>& b = bundle.params->get("encoder.out.b").mutable_values();
      for (std::size_t i = 0; i < c.model.code_dim; ++i) b[i] = 1.5;
      for (std::size_t i = c.model.code_dim; i < 2 * c.model.code_dim; ++i) b[i] = -3.0;
    }
    std::size_t input_dim =
        c.mode == ObjectiveMode::kChannelCoder ? c.model.code_dim : c.model.source_dim;
    Rng data_rng = Rng(seed).child(11);
    std::vector<double> values(3 * input_dim);
    for (double& v : values) v = data_rng.uniform();
    Tensor x = Tensor::constant({3, input_dim}, values);

    auto loss = [&]() -> Tensor {
      Rng inner(seed ^ 0x5eedULL);
      switch (c.mode) {
        case ObjectiveMode::kSourceVae:
          return source_vae_loss(x, *bundle.source, c.beta, inner).total;
        case ObjectiveMode::kChannelCoder:
          return channel_ae_loss(x, *bundle.coder, c.channel.gaussian, inner).total;
        case ObjectiveMode::kJoint: {
          LossBreakdown b = joint_loss(x, *bundle.joint, c.channel, c.beta,
                                       c.prior_match_weight, inner);
          return add(add(add(b.distortion, mul_scalar(b.rate, b.beta)), b.posterior_kl),
                     b.alv_kl);
        }
        case ObjectiveMode::kJointAux: {
          LossBreakdown b = aux_latent_loss(x, *bundle.joint, c.channel, c.beta,
                                            c.prior_match_weight, inner);
          return add(add(add(b.distortion, mul_scalar(b.rate, b.beta)), b.posterior_kl),
                     b.alv_kl);
        }
      }
      throw std::runtime_error("unreachable objective mode");
    };

    audits.push_back({variant.name, finite_difference_check(loss, *bundle.params)});
  }
  return audits;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Learned joint and separate source-channel coding over differentiable channels"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::string checkpoint_dir;
  std::size_t sample_count = 8;
  std::size_t mmd_rows = 0;
  std::uint64_t gradcheck_seed = 1;
  bool skip_alv = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run description")->required();
    cmd->add_option("--out", out_flag, "Output directory (overrides the config and JSCC_OUT_DIR)");
    return cmd;
  };

  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Finite-difference check of the composed objectives");
  gradcheck_cmd->add_option("--seed", gradcheck_seed, "Model init and data seed");

  CLI::App* train_cmd = add_common(
      app.add_subcommand("train", "Train one system; writes checkpoint, trace and metrics"));
  CLI::App* eval_cmd = add_common(
      app.add_subcommand("eval", "Evaluate a trained checkpoint on the held-out split"));
  eval_cmd->add_option("--checkpoint", checkpoint_dir,
                       "Directory holding the checkpoint(s) (default: the output directory)");
  CLI::App* sweep_snr_cmd = add_common(app.add_subcommand(
      "sweep-snr", "Train and evaluate the configured system across a noise grid"));
  CLI::App* sweep_beta_cmd = add_common(app.add_subcommand(
      "sweep-beta", "Train across the trade-off grid and report the best weight"));
  CLI::App* compare_cmd = add_common(app.add_subcommand(
      "compare-joint-separate",
      "Sweep both pipelines over snr x trade-off grids and keep each side's best rows"));
  CLI::App* sweep_bandwidth_cmd = add_common(app.add_subcommand(
      "sweep-bandwidth", "Train prior/auxiliary variants and evaluate at every slot budget"));
  sweep_bandwidth_cmd->add_flag("--skip-alv", skip_alv,
                                "Only sweep the variants without auxiliary latents");
  CLI::App* sample_cmd = add_common(app.add_subcommand(
      "sample", "Write a source/reconstruction image grid from a trained checkpoint"));
  sample_cmd->add_option("--checkpoint", checkpoint_dir,
                         "Directory holding the checkpoint(s) (default: the output directory)");
  sample_cmd->add_option("--count", sample_count, "Images per grid row")
      ->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  CLI::App* mmd_cmd = add_common(app.add_subcommand(
      "mmd", "Split-null discrepancy of the dataset against itself, the proxy's baseline"));
  mmd_cmd->add_option("--samples", mmd_rows, "Rows per side (default: half the dataset)");

  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("jscc");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& arg : full) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& error) {
    app.exit(error);
    return 2;
  }

  try {
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gradcheck_seed);
    RunConfig config = load_config_file(config_path);
    if (train_cmd->parsed()) return cmd_train(std::move(config), out_flag);
    if (eval_cmd->parsed()) return cmd_eval(std::move(config), out_flag, checkpoint_dir);
    if (sweep_snr_cmd->parsed()) return cmd_sweep_snr(std::move(config), out_flag);
    if (sweep_beta_cmd->parsed()) return cmd_sweep_beta(std::move(config), out_flag);
    if (compare_cmd->parsed()) return cmd_compare(std::move(config), out_flag);
    if (sweep_bandwidth_cmd->parsed()) {
      return cmd_sweep_bandwidth(std::move(config), out_flag, skip_alv);
    }
    if (sample_cmd->parsed()) {
      return cmd_sample(std::move(config), out_flag, checkpoint_dir, sample_count);
    }
    if (mmd_cmd->parsed()) return cmd_mmd(std::move(config), out_flag, mmd_rows);
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 2;  // no subcommand matched; require_subcommand should prevent this
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace jscc
