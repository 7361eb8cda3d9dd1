#include "gaitclone/config.hpp"

#include <stdexcept>

#include "gaitclone/ini.hpp"

namespace gaitclone {

ExperimentConfig default_config(const std::string& preset) {
  ExperimentConfig cfg;
  cfg.preset = preset;

  // Stance tracks a shallow flexion bump; swing a tall bell (peak ~1 rad).
  cfg.gait.knee_stance = {-0.085, 5.7, 0.135, 0.8, 0.15};
  cfg.gait.knee_swing = {0.05, 7.0, 1.15, 1.2, 0.10};
  cfg.gait.v_hip = 0.4;
  cfg.gait.hip_start = 0.0;
  cfg.gait.rho_max = 0.55;
  cfg.gait.t_max = 0.45;
  // Gains and plant parameters are a matched set: scaling {kp, kd, inertia,
  // damping, gravity_gain, slope bias} together leaves the trajectories (and
  // so the tracking errors) unchanged and only rescales the torque unit. The
  // scale below keeps peak torques a few N*m so that int8 weight / Q8.8
  // activation rounding stays well inside the 0.05 N*m engine error budget.
  cfg.gait.kp_knee = 3.5;
  cfg.gait.kd_knee = 0.225;
  cfg.gait.kp_ankle = 2.0;
  cfg.gait.kd_ankle = 0.125;
  cfg.gait.tau_max = 60.0;

  cfg.knee = {0.0125, 0.0375, 0.125, -0.35, 2.1};
  cfg.ankle = {0.0075, 0.025, 0.1, -0.9, 0.9};
  cfg.impact.kappa_knee = 0.6;
  cfg.impact.kappa_ankle = 0.6;
  cfg.slope_knee_mag = 0.0875;
  cfg.slope_ankle_mag = 0.125;

  if (preset == "desk") {
    cfg.arch.hidden_dim = 32;
    cfg.stride = 20;
    // The stock thresholds are calibrated to O(1) rad joint signals; desk
    // tracking errors are 10-50x smaller, so the same raw values would
    // suppress nearly every delta and the retrained loss would blow past the
    // pretrained floor. The desk net is narrow enough that the input streams
    // (5 sensors, one 32-wide inter-layer hop) are a minority of the work, so
    // transmit those densely and gate only the recurrent streams, which carry
    // most of the multiplies. Raw 4 on the hidden side keeps retrain within a
    // few percent of the dense pretrain loss while skipping over half of the
    // recurrent updates.
    cfg.thresholds = {0.0, 4.0 / 256.0};
  } else if (preset == "paper") {
    cfg.arch.hidden_dim = 128;
    cfg.stride = 1;
  } else {
    throw std::invalid_argument("unknown preset: " + preset);
  }
  finalize(cfg);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  Ini ini;
  ini.set("run", "preset", cfg.preset);
  ini.set_u64("run", "seed", cfg.seed);

  const GaitConfig& g = cfg.gait;
  ini.set("gait", "stance_a1", g.knee_stance.a1);
  ini.set("gait", "stance_a2", g.knee_stance.a2);
  ini.set("gait", "stance_a3", g.knee_stance.a3);
  ini.set("gait", "stance_a4", g.knee_stance.a4);
  ini.set("gait", "stance_a5", g.knee_stance.a5);
  ini.set("gait", "swing_a1", g.knee_swing.a1);
  ini.set("gait", "swing_a2", g.knee_swing.a2);
  ini.set("gait", "swing_a3", g.knee_swing.a3);
  ini.set("gait", "swing_a4", g.knee_swing.a4);
  ini.set("gait", "swing_a5", g.knee_swing.a5);
  ini.set("gait", "v_hip", g.v_hip);
  ini.set("gait", "hip_start", g.hip_start);
  ini.set("gait", "rho_max", g.rho_max);
  ini.set("gait", "t_max", g.t_max);
  ini.set("gait", "kp_knee", g.kp_knee);
  ini.set("gait", "kd_knee", g.kd_knee);
  ini.set("gait", "kp_ankle", g.kp_ankle);
  ini.set("gait", "kd_ankle", g.kd_ankle);
  ini.set("gait", "tau_max", g.tau_max);

  auto put_joint = [&](const std::string& sec, const JointParams& j) {
    ini.set(sec, "inertia", j.inertia);
    ini.set(sec, "damping", j.damping);
    ini.set(sec, "gravity_gain", j.gravity_gain);
    ini.set(sec, "angle_min", j.angle_min);
    ini.set(sec, "angle_max", j.angle_max);
  };
  put_joint("plant.knee", cfg.knee);
  put_joint("plant.ankle", cfg.ankle);

  ini.set("impact", "kappa_knee", cfg.impact.kappa_knee);
  ini.set("impact", "kappa_ankle", cfg.impact.kappa_ankle);
  ini.set("impact", "slope_knee_mag", cfg.slope_knee_mag);
  ini.set("impact", "slope_ankle_mag", cfg.slope_ankle_mag);

  ini.set("noise", "pos_std", cfg.pos_noise_std);
  ini.set("noise", "vel_std", cfg.vel_noise_std);
  ini.set("noise", "hip_wobble_amp", cfg.hip_wobble_amp);
  ini.set("noise", "hip_wobble_freq", cfg.hip_wobble_freq);
  ini.set("noise", "walk_speed_var", cfg.walk_speed_var);

  ini.set("dataset", "n_walks", static_cast<std::int64_t>(cfg.n_walks));
  ini.set("dataset", "walk_duration", cfg.walk_duration);
  ini.set("dataset", "seq_len", static_cast<std::int64_t>(cfg.seq_len));
  ini.set("dataset", "stride", static_cast<std::int64_t>(cfg.stride));

  ini.set("net", "n_layers", static_cast<std::int64_t>(cfg.arch.n_layers));
  ini.set("net", "input_dim", static_cast<std::int64_t>(cfg.arch.input_dim));
  ini.set("net", "hidden_dim", static_cast<std::int64_t>(cfg.arch.hidden_dim));
  ini.set("net", "output_dim", static_cast<std::int64_t>(cfg.arch.output_dim));

  const TrainSchedule& ts = cfg.schedule;
  ini.set("train", "pretrain_epochs", static_cast<std::int64_t>(ts.pretrain.epochs));
  ini.set("train", "pretrain_lr", ts.pretrain.lr);
  ini.set("train", "pretrain_batch", static_cast<std::int64_t>(ts.pretrain.batch));
  ini.set("train", "retrain_epochs", static_cast<std::int64_t>(ts.retrain.epochs));
  ini.set("train", "retrain_lr", ts.retrain.lr);
  ini.set("train", "retrain_batch", static_cast<std::int64_t>(ts.retrain.batch));
  ini.set("train", "adam_beta1", ts.adam_beta1);
  ini.set("train", "adam_beta2", ts.adam_beta2);
  ini.set("train", "adam_eps", ts.adam_eps);
  ini.set("train", "clip_norm", ts.clip_norm);

  ini.set("delta", "theta_x", cfg.thresholds.theta_x);
  ini.set("delta", "theta_h", cfg.thresholds.theta_h);

  ini.set("engine", "overhead_cycles_per_step",
          static_cast<std::int64_t>(cfg.overhead_cycles_per_step));
  return ini.serialize();
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  Ini::parse(serialize_config(cfg)).save(path);
}

namespace {

void apply_key(ExperimentConfig& cfg, const std::string& sec,
               const std::string& key, const Ini& ini) {
  auto d = [&] { return ini.get_double(sec, key); };
  auto i = [&] { return static_cast<int>(ini.get_int(sec, key)); };

  if (sec == "run") {
    if (key == "preset") return;  // consumed before overlay
    if (key == "seed") { cfg.seed = ini.get_u64_or(sec, key, cfg.seed); return; }
  } else if (sec == "gait") {
    GaitConfig& g = cfg.gait;
    if (key == "stance_a1") { g.knee_stance.a1 = d(); return; }
    if (key == "stance_a2") { g.knee_stance.a2 = d(); return; }
    if (key == "stance_a3") { g.knee_stance.a3 = d(); return; }
    if (key == "stance_a4") { g.knee_stance.a4 = d(); return; }
    if (key == "stance_a5") { g.knee_stance.a5 = d(); return; }
    if (key == "swing_a1") { g.knee_swing.a1 = d(); return; }
    if (key == "swing_a2") { g.knee_swing.a2 = d(); return; }
    if (key == "swing_a3") { g.knee_swing.a3 = d(); return; }
    if (key == "swing_a4") { g.knee_swing.a4 = d(); return; }
    if (key == "swing_a5") { g.knee_swing.a5 = d(); return; }
    if (key == "v_hip") { g.v_hip = d(); return; }
    if (key == "hip_start") { g.hip_start = d(); return; }
    if (key == "rho_max") { g.rho_max = d(); return; }
    if (key == "t_max") { g.t_max = d(); return; }
    if (key == "kp_knee") { g.kp_knee = d(); return; }
    if (key == "kd_knee") { g.kd_knee = d(); return; }
    if (key == "kp_ankle") { g.kp_ankle = d(); return; }
    if (key == "kd_ankle") { g.kd_ankle = d(); return; }
    if (key == "tau_max") { g.tau_max = d(); return; }
  } else if (sec == "plant.knee" || sec == "plant.ankle") {
    JointParams& j = sec == "plant.knee" ? cfg.knee : cfg.ankle;
    if (key == "inertia") { j.inertia = d(); return; }
    if (key == "damping") { j.damping = d(); return; }
    if (key == "gravity_gain") { j.gravity_gain = d(); return; }
    if (key == "angle_min") { j.angle_min = d(); return; }
    if (key == "angle_max") { j.angle_max = d(); return; }
  } else if (sec == "impact") {
    if (key == "kappa_knee") { cfg.impact.kappa_knee = d(); return; }
    if (key == "kappa_ankle") { cfg.impact.kappa_ankle = d(); return; }
    if (key == "slope_knee_mag") { cfg.slope_knee_mag = d(); return; }
    if (key == "slope_ankle_mag") { cfg.slope_ankle_mag = d(); return; }
  } else if (sec == "noise") {
    if (key == "pos_std") { cfg.pos_noise_std = d(); return; }
    if (key == "vel_std") { cfg.vel_noise_std = d(); return; }
    if (key == "hip_wobble_amp") { cfg.hip_wobble_amp = d(); return; }
    if (key == "hip_wobble_freq") { cfg.hip_wobble_freq = d(); return; }
    if (key == "walk_speed_var") { cfg.walk_speed_var = d(); return; }
  } else if (sec == "dataset") {
    if (key == "n_walks") { cfg.n_walks = i(); return; }
    if (key == "walk_duration") { cfg.walk_duration = d(); return; }
    if (key == "seq_len") { cfg.seq_len = i(); return; }
    if (key == "stride") { cfg.stride = i(); return; }
  } else if (sec == "net") {
    if (key == "n_layers") { cfg.arch.n_layers = i(); return; }
    if (key == "input_dim") { cfg.arch.input_dim = i(); return; }
    if (key == "hidden_dim") { cfg.arch.hidden_dim = i(); return; }
    if (key == "output_dim") { cfg.arch.output_dim = i(); return; }
  } else if (sec == "train") {
    TrainSchedule& ts = cfg.schedule;
    if (key == "pretrain_epochs") { ts.pretrain.epochs = i(); return; }
    if (key == "pretrain_lr") { ts.pretrain.lr = d(); return; }
    if (key == "pretrain_batch") { ts.pretrain.batch = i(); return; }
    if (key == "retrain_epochs") { ts.retrain.epochs = i(); return; }
    if (key == "retrain_lr") { ts.retrain.lr = d(); return; }
    if (key == "retrain_batch") { ts.retrain.batch = i(); return; }
    if (key == "adam_beta1") { ts.adam_beta1 = d(); return; }
    if (key == "adam_beta2") { ts.adam_beta2 = d(); return; }
    if (key == "adam_eps") { ts.adam_eps = d(); return; }
    if (key == "clip_norm") { ts.clip_norm = d(); return; }
  } else if (sec == "delta") {
    if (key == "theta_x") { cfg.thresholds.theta_x = d(); return; }
    if (key == "theta_h") { cfg.thresholds.theta_h = d(); return; }
  } else if (sec == "engine") {
    if (key == "overhead_cycles_per_step") { cfg.overhead_cycles_per_step = i(); return; }
  }
  throw std::invalid_argument("unknown config key: [" + sec + "] " + key);
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::string& preset) {
  Ini ini = Ini::load(path);
  std::string base = preset;
  if (ini.has("run", "preset")) base = ini.get("run", "preset");
  ExperimentConfig cfg = default_config(base);
  for (const auto& sec : ini.sections())
    for (const auto& key : ini.keys(sec)) apply_key(cfg, sec, key, ini);
  finalize(cfg);
  return cfg;
}

void finalize(ExperimentConfig& cfg) {
  validate(cfg.gait);
  validate(cfg.knee);
  validate(cfg.ankle);
  if (cfg.impact.kappa_knee < 0 || cfg.impact.kappa_knee > 1 ||
      cfg.impact.kappa_ankle < 0 || cfg.impact.kappa_ankle > 1)
    throw std::invalid_argument("impact retention must be in [0, 1]");
  if (cfg.n_walks < 3)
    throw std::invalid_argument("need at least 3 walks for a train/val/test split");
  if (cfg.seq_len < 2 || cfg.stride < 1)
    throw std::invalid_argument("bad windowing: seq_len >= 2, stride >= 1");
  if (cfg.arch.n_layers < 1 || cfg.arch.input_dim < 1 || cfg.arch.hidden_dim < 1 ||
      cfg.arch.output_dim < 1)
    throw std::invalid_argument("net dimensions must be positive");
  if (cfg.schedule.pretrain.epochs < 1 || cfg.schedule.pretrain.batch < 1 ||
      cfg.schedule.retrain.epochs < 1 || cfg.schedule.retrain.batch < 1 ||
      cfg.schedule.pretrain.lr <= 0 || cfg.schedule.retrain.lr <= 0)
    throw std::invalid_argument("bad training schedule");
  if (cfg.thresholds.theta_x < 0 || cfg.thresholds.theta_h < 0)
    throw std::invalid_argument("delta thresholds must be >= 0");
  if (cfg.overhead_cycles_per_step < 0)
    throw std::invalid_argument("overhead cycles must be >= 0");
  cfg.config_hash = fnv1a_hex(serialize_config(cfg));
}

LoopParams make_loop_params(const ExperimentConfig& cfg,
                            const std::string& slope_preset,
                            double hip_speed_scale) {
  LoopParams lp;
  lp.knee = cfg.knee;
  lp.ankle = cfg.ankle;
  lp.impact = cfg.impact;
  if (slope_preset == "flat") {
    lp.impact.slope_knee = 0.0;
    lp.impact.slope_ankle = 0.0;
  } else if (slope_preset == "uphill") {
    lp.impact.slope_knee = cfg.slope_knee_mag;
    lp.impact.slope_ankle = cfg.slope_ankle_mag;
  } else if (slope_preset == "downhill") {
    lp.impact.slope_knee = -cfg.slope_knee_mag;
    lp.impact.slope_ankle = -cfg.slope_ankle_mag;
  } else {
    throw std::invalid_argument("unknown slope preset: " + slope_preset);
  }
  lp.pos_noise_std = cfg.pos_noise_std;
  lp.vel_noise_std = cfg.vel_noise_std;
  lp.hip_speed_scale = hip_speed_scale;
  lp.hip_wobble_amp = cfg.hip_wobble_amp;
  lp.hip_wobble_freq = cfg.hip_wobble_freq;
  return lp;
}

}  // namespace gaitclone
