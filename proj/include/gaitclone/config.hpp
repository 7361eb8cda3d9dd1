#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gaitclone/control.hpp"
#include "gaitclone/gait.hpp"
#include "gaitclone/plant.hpp"

namespace gaitclone {

struct NetArch {
  int n_layers = 2;
  int input_dim = 5;
  int hidden_dim = 32;
  int output_dim = 2;
};

struct DeltaThresholds {
  double theta_x = 0.015625;  // 2^2 / 2^8
  double theta_h = 0.5;       // 2^7 / 2^8
};

struct StageSchedule {
  int epochs = 0;
  double lr = 0.0;
  int batch = 0;
};

struct TrainSchedule {
  StageSchedule pretrain{50, 5e-4, 32};
  StageSchedule retrain{10, 1e-3, 64};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
};

/// Everything a pipeline run needs, loadable from an INI file. The "desk"
/// preset is sized for minutes on a CPU; "paper" switches to the 128-neuron
/// layers and dense stride-1 windowing.
struct ExperimentConfig {
  std::filesystem::path workdir = "work";
  std::uint64_t seed = 1;
  std::string preset = "desk";

  GaitConfig gait;
  JointParams knee;
  JointParams ankle;
  ImpactParams impact;        // kappas; slope biases filled per preset
  double slope_knee_mag = 0.0875;  // N*m bias magnitude for +-2.5 deg presets
  double slope_ankle_mag = 0.125;  // N*m
  double pos_noise_std = 0.002;
  double vel_noise_std = 0.01;
  double hip_wobble_amp = 0.05;
  double hip_wobble_freq = 0.11;
  double walk_speed_var = 0.10;   // per-walk hip speed scale range (+-)

  int n_walks = 5;
  double walk_duration = 70.0;  // s
  int seq_len = 100;            // T
  int stride = 20;

  NetArch arch;
  TrainSchedule schedule;
  DeltaThresholds thresholds;

  int overhead_cycles_per_step = 256;

  std::string config_hash;  // filled by finalize()
};

ExperimentConfig default_config(const std::string& preset = "desk");

/// Loads an INI file over the preset defaults. Unknown keys are an error.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::string& preset = "desk");

/// Canonical serialization; also the input to the config hash.
std::string serialize_config(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Validates invariants and computes the config hash.
void finalize(ExperimentConfig& cfg);

/// Slope preset ("flat", "uphill", "downhill") -> loop parameters.
LoopParams make_loop_params(const ExperimentConfig& cfg,
                            const std::string& slope_preset,
                            double hip_speed_scale = 1.0);

}  // namespace gaitclone
