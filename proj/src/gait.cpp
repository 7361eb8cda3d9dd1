#include "gaitclone/gait.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaitclone {

void validate(const CwfParams& p) {
  if (!std::isfinite(p.a1) || !std::isfinite(p.a2) || !std::isfinite(p.a3) ||
      !std::isfinite(p.a4) || !std::isfinite(p.a5)) {
    throw std::invalid_argument("walking function coefficients must be finite");
  }
  if (p.a4 < 0.0) {
    throw std::invalid_argument("walking function envelope rate a4 must be >= 0");
  }
}

void validate(const GaitConfig& cfg) {
  validate(cfg.knee_stance);
  validate(cfg.knee_swing);
  if (!(cfg.v_hip > 0.0)) throw std::invalid_argument("v_hip must be > 0");
  if (!(cfg.rho_max > 0.0 && cfg.rho_max <= 1.5)) {
    throw std::invalid_argument("rho_max must be in (0, 1.5]");
  }
  if (!(cfg.t_max > 0.0)) throw std::invalid_argument("t_max must be > 0");
  if (cfg.kp_knee < 0.0 || cfg.kd_knee < 0.0 || cfg.kp_ankle < 0.0 ||
      cfg.kd_ankle < 0.0) {
    throw std::invalid_argument("PD gains must be >= 0");
  }
  if (!(cfg.tau_max > 0.0)) throw std::invalid_argument("tau_max must be > 0");
}

double eval_cwf(double t, const CwfParams& p) {
  return std::exp(-p.a4 * t) *
             (p.a1 * std::cos(p.a2 * t) + p.a3 * std::sin(p.a2 * t)) +
         p.a5;
}

double eval_cwf_dot(double t, const CwfParams& p) {
  const double c = std::cos(p.a2 * t);
  const double s = std::sin(p.a2 * t);
  return std::exp(-p.a4 * t) * ((-p.a4 * p.a1 + p.a2 * p.a3) * c +
                                (-p.a4 * p.a3 - p.a2 * p.a1) * s);
}

double phase_variable(double hip_pos, const GaitConfig& cfg) {
  return (hip_pos - cfg.hip_start) / cfg.v_hip;
}

DesiredState desired_state(const PhaseState& ph, const GaitConfig& cfg,
                           double hip_speed) {
  DesiredState d;
  if (ph.domain == Domain::kStance) {
    const double rho_raw = (ph.hip_pos - ph.hip_start) / cfg.v_hip;
    const double rho = std::clamp(rho_raw, 0.0, cfg.rho_max);
    d.theta_knee = eval_cwf(rho, cfg.knee_stance);
    // chain rule through rho: d(theta)/dt = d(cwf)/d(rho) * d(rho)/dt
    d.dtheta_knee = eval_cwf_dot(rho, cfg.knee_stance) * (hip_speed / cfg.v_hip);
    d.s = 1;
  } else {
    const double tc = std::clamp(ph.t_in_domain, 0.0, cfg.t_max);
    d.theta_knee = eval_cwf(tc, cfg.knee_swing);
    d.dtheta_knee = eval_cwf_dot(tc, cfg.knee_swing);
    d.s = 0;
  }
  d.theta_ankle = 0.0;
  d.dtheta_ankle = 0.0;
  return d;
}

DesiredState desired_state(const PhaseState& ph, const GaitConfig& cfg) {
  return desired_state(ph, cfg, cfg.v_hip);
}

PhaseStep advance_phase(const PhaseState& ph, double dt, double hip_speed,
                        const GaitConfig& cfg) {
  PhaseStep out;
  out.state = ph;
  out.state.hip_pos += hip_speed * dt;
  out.state.t_in_domain += dt;
  if (ph.domain == Domain::kStance) {
    const double rho = (out.state.hip_pos - out.state.hip_start) / cfg.v_hip;
    if (rho >= cfg.rho_max) {
      out.state.domain = Domain::kSwing;
      out.state.t_in_domain = 0.0;
    }
  } else {
    if (out.state.t_in_domain >= cfg.t_max) {
      out.state.domain = Domain::kStance;
      out.state.t_in_domain = 0.0;
      out.state.hip_start = out.state.hip_pos;
      out.state.step_index += 1;
      out.impact = true;
    }
  }
  return out;
}

}  // namespace gaitclone
