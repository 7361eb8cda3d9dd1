#include "gaitclone/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>

#include "gaitclone/ini.hpp"
#include "gaitclone/runlog_io.hpp"

namespace gaitclone {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_artifact(const std::filesystem::path& path,
                      const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error(path.string() + " is missing; run `gaitclone " +
                             producer + "` first");
  }
}

Ini prov_ini(const ExperimentConfig& cfg) {
  Ini ini;
  ini.set("provenance", "config_hash", cfg.config_hash);
  ini.set_u64("provenance", "seed", cfg.seed);
  return ini;
}

LoadedDataset load_checked_dataset(const ExperimentConfig& cfg,
                                   const WorkPaths& wp) {
  const LoadedDataset ds = load_dataset(wp.dataset_dir());
  if (!ds.config_hash.empty() && ds.config_hash != cfg.config_hash) {
    throw std::runtime_error(
        "dataset at " + wp.dataset_dir().string() + " was collected under config " +
        ds.config_hash + " but the current config hashes to " + cfg.config_hash +
        "; re-run `gaitclone collect`");
  }
  return ds;
}

const LoadedFile& test_file(const LoadedDataset& ds) {
  for (const LoadedFile& f : ds.files) {
    if (f.role == "test") return f;
  }
  throw std::runtime_error("dataset has no test file; re-run `gaitclone collect`");
}

double torque_rms(const Eigen::MatrixXd& y) {
  return std::sqrt(y.array().square().mean());
}

void check_controller_shape(const QuantModel& m) {
  if (m.arch.input_dim != 5 || m.arch.output_dim != 2) {
    throw std::runtime_error(
        "engine model is not a gait controller (needs 5 inputs / 2 outputs)");
  }
}

}  // namespace

std::string provenance_line(const ExperimentConfig& cfg) {
  return "config=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed);
}

CollectSummary cmd_collect(const ExperimentConfig& cfg) {
  const WorkPaths wp(cfg.workdir);
  std::filesystem::create_directories(wp.workdir);
  save_config(cfg, wp.config_snapshot());
  return collect(cfg, wp.dataset_dir());
}

TrainArtifacts cmd_train(const ExperimentConfig& cfg) {
  const WorkPaths wp(cfg.workdir);
  const LoadedDataset ds = load_checked_dataset(cfg, wp);
  const TrainResult tr = train(cfg, ds);

  std::filesystem::create_directories(wp.models_dir());
  save_network(tr.pretrained, wp.pretrain_model());
  save_network(tr.retrained, wp.retrain_model());
  save_curve(tr.curve, wp.curve_csv(), provenance_line(cfg));

  TrainArtifacts out;
  out.pretrain_model = wp.pretrain_model();
  out.retrain_model = wp.retrain_model();
  out.curve_csv = wp.curve_csv();
  out.summary = wp.train_summary();
  out.best_val_pretrain = tr.best_val_pretrain;
  out.best_val_retrain = tr.best_val_retrain;
  out.test_l1_pretrain = evaluate(tr.pretrained, ds, "test", cfg, false);
  out.test_l1_retrain = evaluate(tr.retrained, ds, "test", cfg, true);
  out.pd_torque_rms_test = torque_rms(test_file(ds).y);

  Ini ini = prov_ini(cfg);
  ini.set("result", "best_val_pretrain", tr.best_val_pretrain);
  ini.set("result", "best_val_retrain", tr.best_val_retrain);
  ini.set("result", "retrain_over_pretrain",
          tr.best_val_retrain / tr.best_val_pretrain);
  ini.set("result", "test_l1_pretrain", out.test_l1_pretrain);
  ini.set("result", "test_l1_retrain", out.test_l1_retrain);
  ini.set("result", "pd_torque_rms_test", out.pd_torque_rms_test);
  ini.set("result", "test_l1_over_pd_rms",
          out.test_l1_retrain / out.pd_torque_rms_test);
  ini.save(out.summary);
  return out;
}

QuantizeArtifacts cmd_quantize(const ExperimentConfig& cfg) {
  const WorkPaths wp(cfg.workdir);
  require_artifact(wp.retrain_model(), "train");
  const NetworkParams p = load_network(wp.retrain_model());
  const QuantModel m = quantize_model(p, cfg.thresholds);

  std::filesystem::create_directories(wp.models_dir());
  save_engine_model(m, wp.engine_model());

  Ini ini = prov_ini(cfg);
  ini.set("format", "theta_x_raw", static_cast<std::int64_t>(m.theta_x_raw));
  ini.set("format", "theta_h_raw", static_cast<std::int64_t>(m.theta_h_raw));
  ini.set("format", "act_frac_bits", static_cast<std::int64_t>(kActFracBits));
  ini.set("format", "fc_frac_bits", static_cast<std::int64_t>(m.W_fc.frac_bits));
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::string sec = "layer" + std::to_string(l);
    const char* gate[3] = {"r", "z", "n"};
    for (int g = 0; g < 3; ++g) {
      ini.set(sec, std::string("wf_x_") + gate[g],
              static_cast<std::int64_t>(m.layers[l].wf_x[static_cast<std::size_t>(g)]));
      ini.set(sec, std::string("wf_h_") + gate[g],
              static_cast<std::int64_t>(m.layers[l].wf_h[static_cast<std::size_t>(g)]));
    }
  }
  ini.save(wp.quantize_summary());

  QuantizeArtifacts out;
  out.engine_model = wp.engine_model();
  out.summary = wp.quantize_summary();
  out.theta_x_raw = m.theta_x_raw;
  out.theta_h_raw = m.theta_h_raw;
  return out;
}

Eigen::MatrixXd gru_stream(const NetworkParams& p, const Eigen::MatrixXd& x,
                           int chunk) {
  if (x.rows() != p.arch.input_dim) {
    throw std::invalid_argument("gru_stream input rows != input_dim");
  }
  if (chunk < 1) throw std::invalid_argument("gru_stream chunk must be >= 1");
  const Eigen::Index len = x.cols();
  Eigen::MatrixXd y(p.arch.output_dim, len);
  std::vector<Eigen::MatrixXd> h0(
      p.layers.size(), Eigen::MatrixXd::Zero(p.arch.hidden_dim, 1));
  for (Eigen::Index start = 0; start < len; start += chunk) {
    const Eigen::Index n = std::min<Eigen::Index>(chunk, len - start);
    std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
      xs[static_cast<std::size_t>(t)] = x.col(start + t);
    }
    const ForwardResult fwd = gru_forward(p, xs, &h0);
    for (Eigen::Index t = 0; t < n; ++t) {
      y.col(start + t) = fwd.y[static_cast<std::size_t>(t)];
    }
    for (std::size_t l = 0; l < h0.size(); ++l) {
      h0[l] = fwd.layers[l].h.back();
    }
  }
  return y;
}

EvalArtifacts cmd_eval_offline(const ExperimentConfig& cfg) {
  const WorkPaths wp(cfg.workdir);
  require_artifact(wp.retrain_model(), "train");
  require_artifact(wp.engine_model(), "quantize");
  const LoadedDataset ds = load_checked_dataset(cfg, wp);
  const LoadedFile& tf = test_file(ds);

  const NetworkParams p = load_network(wp.retrain_model());
  const QuantModel m = load_engine_model(wp.engine_model());
  if (m.arch.n_layers != p.arch.n_layers || m.arch.input_dim != p.arch.input_dim ||
      m.arch.hidden_dim != p.arch.hidden_dim ||
      m.arch.output_dim != p.arch.output_dim) {
    throw std::runtime_error(
        "engine model shape disagrees with the float model; re-run `gaitclone "
        "quantize`");
  }

  EvalArtifacts out;
  out.test_l1_float = evaluate(p, ds, "test", cfg, true);

  DeltaStateFx st = engine_reset(m);
  const Eigen::MatrixXd y_eng = engine_run(m, st, tf.x);
  out.test_l1_engine = (y_eng - tf.y).array().abs().mean();

  const Eigen::Index len = tf.x.cols();
  const auto n = std::min<Eigen::Index>(
      len, static_cast<Eigen::Index>(std::llround(20.0 / kControlDt)));
  out.trace_ticks = n;
  std::vector<Eigen::MatrixXd> xs(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) xs[static_cast<std::size_t>(t)] = tf.x.col(t);
  const DeltaForwardResult fwd = deltagru_forward(p, xs, cfg.thresholds);

  double worst = 0.0, sum = 0.0;
  std::filesystem::create_directories(wp.eval_dir());
  std::ofstream trace(wp.torque_traces());
  if (!trace) throw std::runtime_error("cannot write " + wp.torque_traces().string());
  trace << "# " << provenance_line(cfg) << "\n";
  trace << "t, tau_pd_knee, tau_pd_ankle, tau_float_knee, tau_float_ankle, "
           "tau_engine_knee, tau_engine_ankle\n";
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::MatrixXd& yf = fwd.y[static_cast<std::size_t>(t)];
    for (int q = 0; q < 2; ++q) {
      const double d = std::abs(y_eng(q, t) - yf(q, 0));
      worst = std::max(worst, d);
      sum += d;
    }
    trace << fmt(static_cast<double>(t) * kControlDt) << ", " << fmt(tf.y(0, t))
          << ", " << fmt(tf.y(1, t)) << ", " << fmt(yf(0, 0)) << ", "
          << fmt(yf(1, 0)) << ", " << fmt(y_eng(0, t)) << ", "
          << fmt(y_eng(1, t)) << "\n";
  }
  if (!trace) throw std::runtime_error("write failed: " + wp.torque_traces().string());
  out.engine_vs_float_max = worst;
  out.engine_vs_float_l1 = n > 0 ? sum / (2.0 * static_cast<double>(n)) : 0.0;
  out.traces = wp.torque_traces();
  out.summary = wp.eval_summary();

  Ini ini = prov_ini(cfg);
  ini.set("offline", "test_file", tf.name);
  ini.set("offline", "test_l1_float", out.test_l1_float);
  ini.set("offline", "test_l1_engine", out.test_l1_engine);
  ini.set("offline", "engine_vs_float_max_abs", out.engine_vs_float_max);
  ini.set("offline", "engine_vs_float_l1", out.engine_vs_float_l1);
  ini.set("offline", "trace_ticks", out.trace_ticks);
  ini.save(out.summary);
  return out;
}

SimulateResult cmd_simulate(const ExperimentConfig& cfg,
                            const std::string& controller,
                            const std::string& slope, double duration_s) {
  const WorkPaths wp(cfg.workdir);
  std::filesystem::create_directories(wp.runs_dir());
  const std::string tag = controller + "_" + slope;

  Controller ctrl;
  std::shared_ptr<QuantModel> model;
  std::shared_ptr<DeltaStateFx> st;
  if (controller == "pd") {
    const GaitConfig& g = cfg.gait;
    ctrl = [&g](const ControlInput& in) { return pd_control(in, g); };
  } else if (controller == "rnn") {
    require_artifact(wp.engine_model(), "quantize");
    model = std::make_shared<QuantModel>(load_engine_model(wp.engine_model()));
    check_controller_shape(*model);
    st = std::make_shared<DeltaStateFx>(engine_reset(*model));
    ctrl = [model, st](const ControlInput& in) {
      const double x[5] = {in.e_pk, in.e_pa, in.de_pk, in.de_pa,
                           static_cast<double>(in.s)};
      double y[2];
      engine_step(*model, *st, std::span<const double>(x, 5),
                  std::span<double>(y, 2));
      return ControlOutput{y[0], y[1]};
    };
  } else {
    throw std::invalid_argument("unknown controller: " + controller +
                                " (expected pd or rnn)");
  }

  RunLogMeta meta;
  meta.controller_id = controller;
  meta.slope_preset = slope;
  meta.seed = cfg.seed;
  meta.config_hash = cfg.config_hash;
  const LoopParams lp = make_loop_params(cfg, slope);

  SimulateResult out;
  out.metrics = wp.run_metrics(tag);
  Ini ini = prov_ini(cfg);
  ini.set("run", "controller", controller);
  ini.set("run", "slope", slope);
  ini.set("run", "duration_s", duration_s);

  try {
    const RunLog log = run_closed_loop(ctrl, cfg.gait, lp, duration_s,
                                       cfg.seed, meta);
    out.runlog = wp.run_log(tag);
    save_runlog(log, out.runlog);

    out.ticks = static_cast<std::int64_t>(log.ticks.size());
    out.rmse_knee = rmse(log.column(&TickRecord::th_a_pk),
                         log.column(&TickRecord::th_d_pk));
    out.rmse_ankle = rmse(log.column(&TickRecord::th_a_pa),
                          log.column(&TickRecord::th_d_pa));
    for (std::size_t k = 1; k < log.ticks.size(); ++k) {
      if (log.ticks[k].s == 1.0 && log.ticks[k - 1].s == 0.0) ++out.strides;
    }
  } catch (const ControllerDivergence& e) {
    out.diverged = true;
    out.divergence_tick = e.tick();
    out.divergence_what = e.what();
    out.rmse_knee = std::numeric_limits<double>::infinity();
    out.rmse_ankle = std::numeric_limits<double>::infinity();
  }

  ini.set("run", "ticks", out.ticks);
  ini.set("metrics", "rmse_knee", out.rmse_knee);
  ini.set("metrics", "rmse_ankle", out.rmse_ankle);
  ini.set("metrics", "strides", out.strides);
  ini.set("metrics", "diverged", static_cast<std::int64_t>(out.diverged ? 1 : 0));
  ini.set("metrics", "divergence_tick", out.divergence_tick);
  if (out.diverged) ini.set("metrics", "divergence_error", out.divergence_what);
  ini.save(out.metrics);
  return out;
}

double time_engine_ns_per_step(const QuantModel& m, const Eigen::MatrixXd& x,
                               int repeats) {
  if (x.rows() != m.arch.input_dim || x.cols() < 1) {
    throw std::invalid_argument("timing stream does not match the model");
  }
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const Eigen::Index len = x.cols();
  const int N = m.arch.input_dim;
  const int Q = m.arch.output_dim;
  std::vector<std::int16_t> xq(static_cast<std::size_t>(len) *
                               static_cast<std::size_t>(N));
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int i = 0; i < N; ++i) {
      xq[static_cast<std::size_t>(t) * static_cast<std::size_t>(N) +
         static_cast<std::size_t>(i)] = quantize_act(x(i, t));
    }
  }
  std::vector<std::int16_t> y(static_cast<std::size_t>(Q));
  const auto pass = [&](DeltaStateFx& st) {
    for (Eigen::Index t = 0; t < len; ++t) {
      engine_step(m, st,
                  std::span<const std::int16_t>(
                      xq.data() + t * N, static_cast<std::size_t>(N)),
                  std::span<std::int16_t>(y.data(), y.size()));
    }
  };
  DeltaStateFx warm = engine_reset(m);
  pass(warm);

  std::int64_t total_ns = 0;
  for (int rep = 0; rep < repeats; ++rep) {
    DeltaStateFx st = engine_reset(m);
    const auto t0 = std::chrono::steady_clock::now();
    pass(st);
    const auto t1 = std::chrono::steady_clock::now();
    total_ns +=
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
  }
  return static_cast<double>(total_ns) /
         (static_cast<double>(repeats) * static_cast<double>(len));
}

BenchArtifacts cmd_bench(const ExperimentConfig& cfg) {
  const WorkPaths wp(cfg.workdir);
  require_artifact(wp.retrain_model(), "train");
  require_artifact(wp.engine_model(), "quantize");
  const LoadedDataset ds = load_checked_dataset(cfg, wp);
  const LoadedFile& tf = test_file(ds);
  const QuantModel m = load_engine_model(wp.engine_model());
  const NetworkParams p = load_network(wp.retrain_model());

  std::filesystem::create_directories(wp.bench_dir());

  BenchArtifacts out;
  DeltaStateFx st = engine_reset(m);
  engine_run(m, st, tf.x);
  out.report = cost_report(m, st, cfg.overhead_cycles_per_step);

  Ini cost = prov_ini(cfg);
  cost.set("cost", "dense_ops_per_step", out.report.dense_ops_per_step);
  cost.set("cost", "effective_ops_per_step", out.report.effective_ops_per_step);
  cost.set("cost", "op_reduction", out.report.op_reduction);
  cost.set("cost", "mean_cycles_per_step", out.report.mean_cycles_per_step);
  cost.set("cost", "occupancy_x", out.report.occupancy_x);
  cost.set("cost", "occupancy_h", out.report.occupancy_h);
  cost.set("cost", "steps", out.report.steps);
  cost.save(wp.cost_report_ini());
  out.cost_ini = wp.cost_report_ini();

  // Hidden-threshold sweep at the configured input threshold.
  std::ofstream sweep(wp.sparsity_sweep_csv());
  if (!sweep) {
    throw std::runtime_error("cannot write " + wp.sparsity_sweep_csv().string());
  }
  sweep << "# " << provenance_line(cfg) << "\n";
  sweep << "theta_h_raw, transmitted_h, skipped_h, occupancy_h, "
           "effective_ops_per_step, op_reduction, mean_cycles_per_step\n";
  for (int raw : {0, 32, 64, 128, 256}) {
    const DeltaThresholds th{cfg.thresholds.theta_x,
                             static_cast<double>(raw) / kActScale};
    const QuantModel ms = quantize_model(p, th);
    DeltaStateFx s2 = engine_reset(ms);
    engine_run(ms, s2, tf.x);
    const CostReport r = cost_report(ms, s2, cfg.overhead_cycles_per_step);
    sweep << raw << ", " << s2.transmitted_h << ", " << s2.skipped_h << ", "
          << fmt(r.occupancy_h) << ", " << fmt(r.effective_ops_per_step) << ", "
          << fmt(r.op_reduction) << ", " << fmt(r.mean_cycles_per_step) << "\n";
  }
  if (!sweep) {
    throw std::runtime_error("write failed: " + wp.sparsity_sweep_csv().string());
  }
  out.sweep_csv = wp.sparsity_sweep_csv();

  out.wall_ns_per_step = time_engine_ns_per_step(m, tf.x);
  Ini timing = prov_ini(cfg);
  timing.set("timing", "wall_ns_per_step", out.wall_ns_per_step);
  timing.set("timing", "steps", static_cast<std::int64_t>(tf.x.cols()));
  timing.set("timing", "note",
             "wall-clock measurement; the one artifact that varies across runs");
  timing.save(wp.timing_ini());
  out.timing = wp.timing_ini();
  return out;
}

}  // namespace gaitclone
