#pragma once

#include "gaitclone/rng.hpp"

namespace gaitclone {

/// Single-joint second-order dynamics: I*dd(theta) = tau + slope_bias
/// - damping*d(theta) - gravity_gain*sin(theta), with hard stops.
struct JointParams {
  double inertia = 0.05;       // kg*m^2, > 0
  double damping = 0.15;       // N*m*s/rad, >= 0
  double gravity_gain = 0.5;   // N*m, coefficient of sin(theta)
  double angle_min = -0.35;    // rad hard stop
  double angle_max = 2.1;      // rad hard stop
};

struct PlantState {
  double theta_knee = 0.0;
  double theta_ankle = 0.0;
  double dtheta_knee = 0.0;
  double dtheta_ankle = 0.0;
  double t = 0.0;  // s
};

/// Impact map (velocity retention at heel strike) plus the constant torque
/// biases that emulate walking on a slope.
struct ImpactParams {
  double kappa_knee = 0.6;    // in [0, 1]
  double kappa_ankle = 0.6;   // in [0, 1]
  double slope_knee = 0.0;    // N*m constant bias
  double slope_ankle = 0.0;   // N*m constant bias
};

struct SensorSample {
  double theta_knee = 0.0;
  double theta_ankle = 0.0;
  double dtheta_knee = 0.0;
  double dtheta_ankle = 0.0;
};

void validate(const JointParams& jp);
void validate(const ImpactParams& ip);

/// One semi-implicit Euler substep of dt (velocity first, then position).
/// Positions are clamped to the hard stops with velocity zeroed on contact.
/// dt must be in (0, 2 ms]. Throws std::runtime_error on non-finite torque.
PlantState step_continuous(const PlantState& s, double tau_knee,
                           double tau_ankle, const JointParams& knee,
                           const JointParams& ankle, const ImpactParams& ip,
                           double dt);

/// Velocity jump at heel strike: dtheta *= kappa per joint, positions kept.
PlantState apply_impact(const PlantState& s, const ImpactParams& ip);

/// Additive zero-mean Gaussian sensor noise, deterministic given the stream.
SensorSample sample_sensors(const PlantState& s, double pos_noise_std,
                            double vel_noise_std, Rng& rng);

}  // namespace gaitclone
