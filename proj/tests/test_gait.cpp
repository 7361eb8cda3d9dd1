#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gaitclone/gait.hpp"

using namespace gaitclone;

TEST_CASE("walking function matches hand-computed values") {
  const CwfParams p{0.5, 6.0, -0.2, 1.5, 0.3};
  // y(0) = a1 + a5; y'(0) = -a4*a1 + a2*a3
  CHECK(eval_cwf(0.0, p) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(eval_cwf_dot(0.0, p) == doctest::Approx(-1.95).epsilon(1e-15));
  // Frozen reference values at t = 0.2 (computed with 50-digit arithmetic).
  CHECK(eval_cwf(0.2, p) == doctest::Approx(0.29612630600640499).epsilon(1e-14));
  CHECK(eval_cwf_dot(0.2, p) ==
        doctest::Approx(-2.3877335431317319).epsilon(1e-14));
}

TEST_CASE("derivative of walking function agrees with finite differences") {
  const CwfParams p{0.05, 7.0, 1.15, 1.2, 0.10};
  const double h = 1e-6;
  for (double t : {0.0, 0.1, 0.25, 0.4}) {
    const double fd = (eval_cwf(t + h, p) - eval_cwf(t - h, p)) / (2 * h);
    CHECK(eval_cwf_dot(t, p) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("decay envelope bounds the walking function") {
  const CwfParams p{0.5, 6.0, -0.2, 1.5, 0.3};
  const double amp = std::sqrt(p.a1 * p.a1 + p.a3 * p.a3);
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    const double y = eval_cwf(t, p);
    CHECK(std::abs(y - p.a5) <= std::exp(-p.a4 * t) * amp + 1e-12);
  }
}

TEST_CASE("phase variable is normalized hip displacement") {
  GaitConfig cfg;
  cfg.hip_start = 0.0;
  cfg.v_hip = 0.4;
  CHECK(phase_variable(0.12, cfg) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(phase_variable(0.0, cfg) == doctest::Approx(0.0));
  cfg.hip_start = -0.1;
  CHECK(phase_variable(0.1, cfg) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("stance ends exactly when the phase variable reaches its cap") {
  GaitConfig cfg;
  cfg.v_hip = 0.5;
  cfg.rho_max = 0.5;  // stance ends at hip displacement 0.25
  PhaseState ph;
  ph.domain = Domain::kStance;
  ph.hip_pos = 0.125;
  ph.hip_start = 0.0;

  PhaseStep step = advance_phase(ph, 0.25, 0.5, cfg);
  CHECK(step.state.domain == Domain::kSwing);
  CHECK(step.state.t_in_domain == 0.0);
  CHECK_FALSE(step.impact);

  // Just below the cap: still stance.
  ph.hip_pos = 0.124;
  step = advance_phase(ph, 0.25, 0.5, cfg);
  CHECK(step.state.domain == Domain::kStance);
}

TEST_CASE("swing ends at the time cap and marks heel strike") {
  GaitConfig cfg;
  cfg.t_max = 0.5;
  PhaseState ph;
  ph.domain = Domain::kSwing;
  ph.t_in_domain = 0.375;
  ph.hip_pos = 0.9;
  ph.hip_start = 0.3;
  ph.step_index = 4;

  PhaseStep step = advance_phase(ph, 0.125, 0.4, cfg);
  CHECK(step.state.domain == Domain::kStance);
  CHECK(step.impact);
  CHECK(step.state.step_index == 5);
  // Heel strike re-anchors the phase variable at the current hip position.
  CHECK(step.state.hip_start == doctest::Approx(step.state.hip_pos));
  CHECK(step.state.t_in_domain == 0.0);

  ph.t_in_domain = 0.374;
  step = advance_phase(ph, 0.125, 0.4, cfg);
  CHECK(step.state.domain == Domain::kSwing);
  CHECK_FALSE(step.impact);
  CHECK(step.state.step_index == 4);
}

TEST_CASE("hip position integrates the commanded hip speed") {
  GaitConfig cfg;
  PhaseState ph;
  ph.hip_pos = 1.0;
  const PhaseStep step = advance_phase(ph, 0.005, 0.44, cfg);
  CHECK(step.state.hip_pos == doctest::Approx(1.0 + 0.44 * 0.005).epsilon(1e-15));
}

TEST_CASE("desired state uses the stance curve with chain-rule velocity") {
  GaitConfig cfg;
  PhaseState ph;
  ph.domain = Domain::kStance;
  ph.hip_pos = cfg.hip_start + 0.3 * cfg.v_hip;  // rho = 0.3

  const DesiredState ds = desired_state(ph, cfg, cfg.v_hip);
  CHECK(ds.s == 1);
  CHECK(ds.theta_knee == doctest::Approx(eval_cwf(0.3, cfg.knee_stance)));
  // d/dt y(rho(t)) = y'(rho) * rho_dot, rho_dot = hip_speed / v_hip.
  CHECK(ds.dtheta_knee == doctest::Approx(eval_cwf_dot(0.3, cfg.knee_stance)));

  // Doubling hip speed doubles the desired angular velocity.
  const DesiredState fast = desired_state(ph, cfg, 2.0 * cfg.v_hip);
  CHECK(fast.theta_knee == doctest::Approx(ds.theta_knee));
  CHECK(fast.dtheta_knee == doctest::Approx(2.0 * ds.dtheta_knee));
}

TEST_CASE("desired state in swing is time-based and flagged s = 0") {
  GaitConfig cfg;
  PhaseState ph;
  ph.domain = Domain::kSwing;
  ph.t_in_domain = 0.2;
  const DesiredState ds = desired_state(ph, cfg, cfg.v_hip);
  CHECK(ds.s == 0);
  CHECK(ds.theta_knee == doctest::Approx(eval_cwf(0.2, cfg.knee_swing)));
  CHECK(ds.dtheta_knee == doctest::Approx(eval_cwf_dot(0.2, cfg.knee_swing)));
}

TEST_CASE("desired state clamps its argument to the domain") {
  GaitConfig cfg;
  PhaseState ph;
  ph.domain = Domain::kStance;
  ph.hip_pos = cfg.hip_start + 2.0 * cfg.v_hip;  // rho would be 2.0
  const DesiredState ds = desired_state(ph, cfg, cfg.v_hip);
  CHECK(ds.theta_knee == doctest::Approx(eval_cwf(cfg.rho_max, cfg.knee_stance)));

  ph.domain = Domain::kSwing;
  ph.t_in_domain = 9.0;
  const DesiredState sw = desired_state(ph, cfg, cfg.v_hip);
  CHECK(sw.theta_knee == doctest::Approx(eval_cwf(cfg.t_max, cfg.knee_swing)));
}

TEST_CASE("ankle is regulated to neutral in both domains") {
  GaitConfig cfg;
  PhaseState ph;
  ph.domain = Domain::kSwing;
  ph.t_in_domain = 0.15;
  DesiredState ds = desired_state(ph, cfg, cfg.v_hip);
  CHECK(ds.theta_ankle == 0.0);
  CHECK(ds.dtheta_ankle == 0.0);
  ph.domain = Domain::kStance;
  ph.hip_pos = 0.1;
  ds = desired_state(ph, cfg, cfg.v_hip);
  CHECK(ds.theta_ankle == 0.0);
  CHECK(ds.dtheta_ankle == 0.0);
}

TEST_CASE("configuration validation rejects degenerate parameters") {
  GaitConfig cfg;
  cfg.v_hip = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = GaitConfig{};
  cfg.rho_max = -0.1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = GaitConfig{};
  cfg.t_max = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = GaitConfig{};
  cfg.tau_max = 0.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  CwfParams p{0.5, 6.0, -0.2, -0.1, 0.3};  // growing envelope
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("stride cycle period matches the sum of domain durations") {
  // With constant hip speed v_hip, stance lasts rho_max seconds of phase
  // (rho advances at 1/s) and swing lasts t_max seconds.
  GaitConfig cfg;
  PhaseState ph;
  ph.hip_pos = cfg.hip_start;
  const double dt = 0.005;
  int impacts = 0;
  double first_impact = -1.0, last_impact = -1.0;
  for (int k = 1; k <= 2000; ++k) {  // 10 s
    const PhaseStep step = advance_phase(ph, dt, cfg.v_hip, cfg);
    ph = step.state;
    if (step.impact) {
      ++impacts;
      if (first_impact < 0) first_impact = k * dt;
      last_impact = k * dt;
    }
  }
  REQUIRE(impacts >= 2);
  const double period = (last_impact - first_impact) / (impacts - 1);
  CHECK(period == doctest::Approx(cfg.rho_max + cfg.t_max).epsilon(0.02));
}
