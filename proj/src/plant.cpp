#include "gaitclone/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gaitclone {

void validate(const JointParams& jp) {
  if (!(jp.inertia > 0.0)) throw std::invalid_argument("inertia must be > 0");
  if (jp.damping < 0.0) throw std::invalid_argument("damping must be >= 0");
  if (!(jp.angle_min < jp.angle_max)) {
    throw std::invalid_argument("angle_min must be < angle_max");
  }
}

void validate(const ImpactParams& ip) {
  if (ip.kappa_knee < 0.0 || ip.kappa_knee > 1.0 || ip.kappa_ankle < 0.0 ||
      ip.kappa_ankle > 1.0) {
    throw std::invalid_argument("impact retention kappa must be in [0, 1]");
  }
}

namespace {

void step_joint(double& theta, double& dtheta, double tau, double slope,
                const JointParams& jp, double dt) {
  const double accel =
      (tau + slope - jp.damping * dtheta - jp.gravity_gain * std::sin(theta)) /
      jp.inertia;
  dtheta += accel * dt;
  theta += dtheta * dt;
  if (theta < jp.angle_min) {
    theta = jp.angle_min;
    dtheta = 0.0;
  } else if (theta > jp.angle_max) {
    theta = jp.angle_max;
    dtheta = 0.0;
  }
}

}  // namespace

PlantState step_continuous(const PlantState& s, double tau_knee,
                           double tau_ankle, const JointParams& knee,
                           const JointParams& ankle, const ImpactParams& ip,
                           double dt) {
  if (!(dt > 0.0 && dt <= 0.002)) {
    throw std::invalid_argument("integration step must be in (0, 2 ms]");
  }
  if (!std::isfinite(tau_knee) || !std::isfinite(tau_ankle)) {
    throw std::runtime_error("controller fault: non-finite torque command");
  }
  PlantState out = s;
  step_joint(out.theta_knee, out.dtheta_knee, tau_knee, ip.slope_knee, knee, dt);
  step_joint(out.theta_ankle, out.dtheta_ankle, tau_ankle, ip.slope_ankle,
             ankle, dt);
  out.t += dt;
  return out;
}

PlantState apply_impact(const PlantState& s, const ImpactParams& ip) {
  PlantState out = s;
  out.dtheta_knee *= ip.kappa_knee;
  out.dtheta_ankle *= ip.kappa_ankle;
  return out;
}

SensorSample sample_sensors(const PlantState& s, double pos_noise_std,
                            double vel_noise_std, Rng& rng) {
  SensorSample m;
  m.theta_knee = s.theta_knee + rng.normal(0.0, pos_noise_std);
  m.theta_ankle = s.theta_ankle + rng.normal(0.0, pos_noise_std);
  m.dtheta_knee = s.dtheta_knee + rng.normal(0.0, vel_noise_std);
  m.dtheta_ankle = s.dtheta_ankle + rng.normal(0.0, vel_noise_std);
  return m;
}

}  // namespace gaitclone
