#pragma once

#include <cstdint>

namespace gaitclone {

/// Coefficients of the decaying-sinusoid walking function
///   y(t) = exp(-a4 t) * (a1 cos(a2 t) + a3 sin(a2 t)) + a5.
struct CwfParams {
  double a1 = 0.0;  // rad
  double a2 = 0.0;  // rad/s
  double a3 = 0.0;  // rad
  double a4 = 0.0;  // 1/s, must be >= 0
  double a5 = 0.0;  // rad
};

/// Everything that defines the desired gait and the PD demonstrator.
/// The ankle has no walking function: its desired position is identically 0
/// (passive joint), so only the knee carries stance/swing coefficients.
struct GaitConfig {
  CwfParams knee_stance;  // evaluated at the phase variable rho
  CwfParams knee_swing;   // evaluated at time-in-domain
  double v_hip = 0.4;     // m/s, nominal forward hip speed
  double hip_start = 0.0; // m, initial stance hip origin
  double rho_max = 0.55;  // stance ends when rho reaches this
  double t_max = 0.45;    // s, swing ends when t_in_domain reaches this
  double kp_knee = 14.0;
  double kd_knee = 0.9;
  double kp_ankle = 8.0;
  double kd_ankle = 0.5;
  double tau_max = 60.0;  // N*m torque clamp
};

enum class Domain { kStance, kSwing };

/// Phase bookkeeping for the hybrid gait. hip_start is the hip position at
/// the most recent heel strike; it is state (reset every Swing->Stance edge),
/// seeded from GaitConfig::hip_start.
struct PhaseState {
  Domain domain = Domain::kStance;
  double t_in_domain = 0.0;  // s
  double hip_pos = 0.0;      // m
  double hip_start = 0.0;    // m, stance phase origin
  std::int64_t step_index = 0;
};

struct DesiredState {
  double theta_knee = 0.0;   // rad
  double dtheta_knee = 0.0;  // rad/s
  double theta_ankle = 0.0;  // rad, always 0
  double dtheta_ankle = 0.0; // rad/s, always 0
  int s = 1;                 // 1 = stance, 0 = swing
};

struct PhaseStep {
  PhaseState state;
  bool impact = false;  // set on the Swing->Stance edge
};

/// Throws std::invalid_argument on violated invariants.
void validate(const CwfParams& p);
void validate(const GaitConfig& cfg);

double eval_cwf(double t, const CwfParams& p);

/// Analytic time derivative of eval_cwf.
double eval_cwf_dot(double t, const CwfParams& p);

/// rho = (hip_pos - cfg.hip_start) / v_hip. Unclamped; callers clamp.
double phase_variable(double hip_pos, const GaitConfig& cfg);

/// Desired knee/ankle positions and velocities plus the stance flag.
/// Stance positions come from the walking function at rho clamped to
/// [0, rho_max]; the stance velocity is the chain-rule value
/// d(cwf)/d(rho) * hip_speed / v_hip. Swing uses time-in-domain clamped to
/// [0, t_max]. The ankle is desired at exactly 0 in both domains.
DesiredState desired_state(const PhaseState& ph, const GaitConfig& cfg,
                           double hip_speed);
DesiredState desired_state(const PhaseState& ph, const GaitConfig& cfg);

/// Integrates hip position and domain time by dt, then applies the domain
/// switch rules (inclusive comparisons). Stance->Swing when rho >= rho_max;
/// Swing->Stance when t_in_domain >= t_max, which resets the stance origin,
/// increments step_index and flags an impact.
PhaseStep advance_phase(const PhaseState& ph, double dt, double hip_speed,
                        const GaitConfig& cfg);

}  // namespace gaitclone
