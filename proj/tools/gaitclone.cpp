// Command-line front end for the gait-cloning pipeline:
//   collect -> train -> quantize -> eval-offline / simulate / bench.
// Every stage reads and writes artifacts under --workdir, so stages can run
// in separate invocations (or separate machines) as long as the directory
// travels with them.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "gaitclone/pipeline.hpp"

namespace {

using namespace gaitclone;

struct GlobalArgs {
  std::string config_path;
  std::string workdir;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig resolve(const GlobalArgs& g) {
  ExperimentConfig cfg = g.config_path.empty()
                             ? default_config(g.preset)
                             : load_config(g.config_path, g.preset);
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.workdir.empty()) cfg.workdir = g.workdir;
  finalize(cfg);  // overrides change the hash
  return cfg;
}

void print_kv(const char* key, const std::string& value) {
  std::printf("  %-26s %s\n", key, value.c_str());
}

void print_kv(const char* key, double value) {
  std::printf("  %-26s %.6g\n", key, value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gait controller cloning: PD demonstrator -> recurrent clone -> "
      "fixed-point delta engine"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path,
                 "INI overrides applied on top of the preset")
      ->check(CLI::ExistingFile);
  app.add_option("--workdir", g.workdir, "artifact directory (default: work)");
  app.add_option("--preset", g.preset, "desk (M=32) or paper (M=128)")
      ->check(CLI::IsMember({"desk", "paper"}));
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed");

  auto* collect = app.add_subcommand("collect", "run demonstrator walks");
  auto* train = app.add_subcommand("train", "two-stage behavioral cloning");
  auto* quantize =
      app.add_subcommand("quantize", "freeze the engine model binary");
  auto* eval = app.add_subcommand("eval-offline",
                                  "paired torque traces on the test file");
  auto* bench =
      app.add_subcommand("bench", "op/cycle accounting and wall-clock");

  auto* simulate = app.add_subcommand("simulate", "closed-loop run");
  std::string controller = "pd";
  std::string slope = "flat";
  double duration = 60.0;
  simulate->add_option("--controller", controller, "pd or rnn")
      ->check(CLI::IsMember({"pd", "rnn"}));
  simulate->add_option("--slope", slope, "flat, uphill or downhill")
      ->check(CLI::IsMember({"flat", "uphill", "downhill"}));
  simulate->add_option("--duration", duration, "seconds of walking")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;

  try {
    const ExperimentConfig cfg = resolve(g);
    std::printf("[%s]\n", provenance_line(cfg).c_str());

    if (collect->parsed()) {
      const CollectSummary s = cmd_collect(cfg);
      print_kv("walks", std::to_string(s.files.size()));
      print_kv("total_ticks", std::to_string(s.total_ticks));
      print_kv("manifest", s.manifest.string());
    } else if (train->parsed()) {
      const TrainArtifacts a = cmd_train(cfg);
      print_kv("best_val_pretrain", a.best_val_pretrain);
      print_kv("best_val_retrain", a.best_val_retrain);
      print_kv("test_l1_retrain", a.test_l1_retrain);
      print_kv("pd_torque_rms_test", a.pd_torque_rms_test);
      print_kv("test_l1_over_pd_rms",
               a.test_l1_retrain / a.pd_torque_rms_test);
      print_kv("models", a.retrain_model.parent_path().string());
    } else if (quantize->parsed()) {
      const QuantizeArtifacts a = cmd_quantize(cfg);
      print_kv("theta_x_raw", std::to_string(a.theta_x_raw));
      print_kv("theta_h_raw", std::to_string(a.theta_h_raw));
      print_kv("engine_model", a.engine_model.string());
    } else if (eval->parsed()) {
      const EvalArtifacts a = cmd_eval_offline(cfg);
      print_kv("test_l1_float", a.test_l1_float);
      print_kv("test_l1_engine", a.test_l1_engine);
      print_kv("engine_vs_float_max_abs", a.engine_vs_float_max);
      print_kv("traces", a.traces.string());
    } else if (bench->parsed()) {
      const BenchArtifacts a = cmd_bench(cfg);
      print_kv("dense_ops_per_step",
               std::to_string(a.report.dense_ops_per_step));
      print_kv("effective_ops_per_step", a.report.effective_ops_per_step);
      print_kv("op_reduction", a.report.op_reduction);
      print_kv("mean_cycles_per_step", a.report.mean_cycles_per_step);
      print_kv("wall_ms_per_step", a.wall_ns_per_step * 1e-6);
      print_kv("reports", a.cost_ini.parent_path().string());
    } else if (simulate->parsed()) {
      const SimulateResult r = cmd_simulate(cfg, controller, slope, duration);
      if (r.diverged) {
        std::fprintf(stderr, "controller diverged at tick %lld: %s\n",
                     static_cast<long long>(r.divergence_tick),
                     r.divergence_what.c_str());
        std::fprintf(stderr, "metrics: %s\n", r.metrics.string().c_str());
        return 3;
      }
      print_kv("rmse_knee", r.rmse_knee);
      print_kv("rmse_ankle", r.rmse_ankle);
      print_kv("strides", std::to_string(r.strides));
      print_kv("runlog", r.runlog.string());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
