#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gaitclone/config.hpp"
#include "gaitclone/dataset.hpp"
#include "gaitclone/engine.hpp"
#include "gaitclone/train.hpp"

namespace gaitclone {

/// Canonical artifact locations under a working directory. Every command
/// reads its prerequisites and writes its outputs through these paths, so the
/// stages compose without any shared in-memory state.
struct WorkPaths {
  explicit WorkPaths(std::filesystem::path root) : workdir(std::move(root)) {}
  std::filesystem::path workdir;

  std::filesystem::path config_snapshot() const { return workdir / "config.ini"; }
  std::filesystem::path dataset_dir() const { return workdir / "dataset"; }
  std::filesystem::path models_dir() const { return workdir / "models"; }
  std::filesystem::path pretrain_model() const {
    return models_dir() / "gru_pretrain.dgru";
  }
  std::filesystem::path retrain_model() const {
    return models_dir() / "deltagru.dgru";
  }
  std::filesystem::path engine_model() const {
    return models_dir() / "deltagru.edrn";
  }
  std::filesystem::path curve_csv() const {
    return models_dir() / "train_curves.csv";
  }
  std::filesystem::path train_summary() const {
    return models_dir() / "train_summary.ini";
  }
  std::filesystem::path quantize_summary() const {
    return models_dir() / "quantize_summary.ini";
  }
  std::filesystem::path eval_dir() const { return workdir / "eval"; }
  std::filesystem::path torque_traces() const {
    return eval_dir() / "torque_traces.csv";
  }
  std::filesystem::path eval_summary() const {
    return eval_dir() / "eval_summary.ini";
  }
  std::filesystem::path runs_dir() const { return workdir / "runs"; }
  std::filesystem::path run_log(const std::string& tag) const {
    return runs_dir() / (tag + ".csv");
  }
  std::filesystem::path run_metrics(const std::string& tag) const {
    return runs_dir() / (tag + "_metrics.ini");
  }
  std::filesystem::path bench_dir() const { return workdir / "bench"; }
  std::filesystem::path cost_report_ini() const {
    return bench_dir() / "cost_report.ini";
  }
  std::filesystem::path sparsity_sweep_csv() const {
    return bench_dir() / "sparsity_sweep.csv";
  }
  std::filesystem::path timing_ini() const { return bench_dir() / "timing.ini"; }
};

/// "config=<hash> seed=<n>" — the stamp embedded in every artifact.
std::string provenance_line(const ExperimentConfig& cfg);

/// Runs the demonstrator walks and writes the dataset plus a resolved
/// configuration snapshot under the workdir.
CollectSummary cmd_collect(const ExperimentConfig& cfg);

struct TrainArtifacts {
  std::filesystem::path pretrain_model, retrain_model, curve_csv, summary;
  double best_val_pretrain = 0.0;
  double best_val_retrain = 0.0;
  double test_l1_pretrain = 0.0;   // plain recurrence, window-averaged
  double test_l1_retrain = 0.0;    // delta recurrence at the config thresholds
  double pd_torque_rms_test = 0.0; // RMS of the demonstrator torques, test file
};

/// Two-stage cloning run; writes both model binaries, the loss-curve CSV and
/// a summary with the headline quality numbers.
TrainArtifacts cmd_train(const ExperimentConfig& cfg);

struct QuantizeArtifacts {
  std::filesystem::path engine_model, summary;
  std::int16_t theta_x_raw = 0;
  std::int16_t theta_h_raw = 0;
};

QuantizeArtifacts cmd_quantize(const ExperimentConfig& cfg);

struct EvalArtifacts {
  std::filesystem::path traces, summary;
  double test_l1_float = 0.0;        // windowed L1 of the float delta network
  double test_l1_engine = 0.0;       // streamed L1 of the engine vs targets
  double engine_vs_float_max = 0.0;  // over the emitted trace window
  double engine_vs_float_l1 = 0.0;
  std::int64_t trace_ticks = 0;
};

/// Paired torque traces (demonstrator / float network / engine) over the
/// first 20 s of the test file plus offline loss numbers.
EvalArtifacts cmd_eval_offline(const ExperimentConfig& cfg);

struct SimulateResult {
  std::filesystem::path runlog, metrics;
  double rmse_knee = 0.0;
  double rmse_ankle = 0.0;
  std::int64_t strides = 0;
  std::int64_t ticks = 0;
  bool diverged = false;
  std::int64_t divergence_tick = -1;
  std::string divergence_what;
};

/// Closed-loop run with the demonstrator ("pd") or the quantized network
/// ("rnn") on a slope preset. A diverging controller is reported in the
/// metrics (with its tick index), not thrown, so paired comparisons can
/// proceed.
SimulateResult cmd_simulate(const ExperimentConfig& cfg,
                            const std::string& controller,
                            const std::string& slope, double duration_s);

struct BenchArtifacts {
  std::filesystem::path cost_ini, sweep_csv, timing;
  CostReport report;
  double wall_ns_per_step = 0.0;
};

/// Streams the test file through the engine: op/cycle accounting, a hidden
/// threshold sweep, and wall-clock per step. Timing lands in its own file —
/// it is the one artifact that cannot be byte-identical across runs.
BenchArtifacts cmd_bench(const ExperimentConfig& cfg);

/// Plain recurrence over a long stream (N x len -> Q x len), evaluated in
/// fixed-size chunks with the hidden state carried across chunk boundaries so
/// memory stays flat.
Eigen::MatrixXd gru_stream(const NetworkParams& p, const Eigen::MatrixXd& x,
                           int chunk = 512);

/// Mean wall-clock nanoseconds per engine step over the stream (one warmup
/// pass, then `repeats` timed passes).
double time_engine_ns_per_step(const QuantModel& m, const Eigen::MatrixXd& x,
                               int repeats = 3);

}  // namespace gaitclone
