#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaitclone/gait.hpp"
#include "gaitclone/plant.hpp"

namespace gaitclone {

/// Controller input vector x_t = [e_pk, e_pa, de_pk, de_pa, s].
/// Errors follow the convention e = actual - desired.
struct ControlInput {
  double e_pk = 0.0;   // rad
  double e_pa = 0.0;   // rad
  double de_pk = 0.0;  // rad/s
  double de_pa = 0.0;  // rad/s
  int s = 1;           // 1 = stance, 0 = swing
};

struct ControlOutput {
  double tau_pk = 0.0;  // N*m
  double tau_pa = 0.0;  // N*m
};

using Controller = std::function<ControlOutput(const ControlInput&)>;

/// One 200 Hz control tick. Column order matches the CSV schema.
struct TickRecord {
  double t = 0.0;
  double th_d_pk = 0.0, th_a_pk = 0.0;
  double th_d_pa = 0.0, th_a_pa = 0.0;
  double dth_d_pk = 0.0, dth_a_pk = 0.0;
  double dth_d_pa = 0.0, dth_a_pa = 0.0;
  double e_pk = 0.0, e_pa = 0.0;
  double de_pk = 0.0, de_pa = 0.0;
  double s = 1.0;
  double tau_pk = 0.0, tau_pa = 0.0;
};

struct RunLogMeta {
  std::string controller_id = "pd";
  std::string slope_preset = "flat";
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct RunLog {
  RunLogMeta meta;
  std::vector<TickRecord> ticks;

  std::vector<double> column(double TickRecord::*field) const;
};

/// Plant-side and excitation parameters of a closed-loop run. The hip is not
/// a dynamic joint: it advances at
///   v_hip * speed_scale * (1 + wobble_amp * sin(2 pi wobble_freq t)).
struct LoopParams {
  JointParams knee;
  JointParams ankle;
  ImpactParams impact;
  double pos_noise_std = 0.002;  // rad
  double vel_noise_std = 0.01;   // rad/s
  double hip_speed_scale = 1.0;
  double hip_wobble_amp = 0.05;
  double hip_wobble_freq = 0.11;  // Hz
};

/// Raised when a controller drives the plant out of its envelope.
class ControllerDivergence : public std::runtime_error {
 public:
  ControllerDivergence(const std::string& what, std::int64_t tick)
      : std::runtime_error(what), tick_(tick) {}
  std::int64_t tick() const { return tick_; }

 private:
  std::int64_t tick_;
};

/// PD demonstrator: tau_j = -(Kp_j e_j + Kd_j de_j), clamped to +-tau_max.
/// Gains are stored positive; the sign opposes the e = actual - desired
/// error convention.
ControlOutput pd_control(const ControlInput& in, const GaitConfig& cfg);

double rmse(std::span<const double> actual, std::span<const double> desired);

constexpr double kControlDt = 0.005;  // 200 Hz
constexpr int kSubstepsPerTick = 5;   // 1 kHz integration

/// Runs the 200 Hz loop for round(duration * 200) ticks: advance phase,
/// desired state, sample sensors, form errors, query controller, clamp
/// torques, integrate 5 substeps, apply the impact map on markers.
/// Deterministic given the seed. Throws ControllerDivergence if torques go
/// non-finite or a joint leaves its hard stops plus margin.
RunLog run_closed_loop(const Controller& controller, const GaitConfig& cfg,
                       const LoopParams& lp, double duration_s,
                       std::uint64_t seed, const RunLogMeta& meta);

}  // namespace gaitclone
