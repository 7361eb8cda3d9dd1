#include "gaitclone/control.hpp"

#include <algorithm>
#include <cmath>

namespace gaitclone {

std::vector<double> RunLog::column(double TickRecord::*field) const {
  std::vector<double> v;
  v.reserve(ticks.size());
  for (const auto& r : ticks) v.push_back(r.*field);
  return v;
}

ControlOutput pd_control(const ControlInput& in, const GaitConfig& cfg) {
  ControlOutput out;
  out.tau_pk = -(cfg.kp_knee * in.e_pk + cfg.kd_knee * in.de_pk);
  out.tau_pa = -(cfg.kp_ankle * in.e_pa + cfg.kd_ankle * in.de_pa);
  out.tau_pk = std::clamp(out.tau_pk, -cfg.tau_max, cfg.tau_max);
  out.tau_pa = std::clamp(out.tau_pa, -cfg.tau_max, cfg.tau_max);
  return out;
}

double rmse(std::span<const double> actual, std::span<const double> desired) {
  if (actual.size() != desired.size() || actual.empty()) {
    throw std::invalid_argument("rmse needs equal nonzero lengths");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - desired[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(actual.size()));
}

RunLog run_closed_loop(const Controller& controller, const GaitConfig& cfg,
                       const LoopParams& lp, double duration_s,
                       std::uint64_t seed, const RunLogMeta& meta) {
  validate(cfg);
  validate(lp.knee);
  validate(lp.ankle);
  validate(lp.impact);
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("duration must be > 0");
  }

  const std::int64_t n_ticks =
      static_cast<std::int64_t>(std::llround(duration_s / kControlDt));
  const double sub_dt = kControlDt / kSubstepsPerTick;
  const double stop_margin = 0.01;  // rad beyond hard stops counts as divergence

  Rng rng(seed);
  PhaseState phase;
  phase.hip_start = cfg.hip_start;
  phase.hip_pos = cfg.hip_start;
  PlantState plant;
  plant.theta_knee = eval_cwf(0.0, cfg.knee_stance);  // start on trajectory

  RunLog log;
  log.meta = meta;
  log.meta.seed = seed;
  log.ticks.reserve(static_cast<std::size_t>(n_ticks));

  for (std::int64_t k = 0; k < n_ticks; ++k) {
    const double t = static_cast<double>(k) * kControlDt;
    const double hip_speed =
        cfg.v_hip * lp.hip_speed_scale *
        (1.0 + lp.hip_wobble_amp *
                   std::sin(2.0 * 3.141592653589793 * lp.hip_wobble_freq * t));

    const PhaseStep ps = advance_phase(phase, kControlDt, hip_speed, cfg);
    phase = ps.state;
    const DesiredState des = desired_state(phase, cfg, hip_speed);

    const SensorSample m =
        sample_sensors(plant, lp.pos_noise_std, lp.vel_noise_std, rng);

    ControlInput in;
    in.e_pk = m.theta_knee - des.theta_knee;
    in.e_pa = m.theta_ankle - des.theta_ankle;
    in.de_pk = m.dtheta_knee - des.dtheta_knee;
    in.de_pa = m.dtheta_ankle - des.dtheta_ankle;
    in.s = des.s;

    ControlOutput u = controller(in);
    if (!std::isfinite(u.tau_pk) || !std::isfinite(u.tau_pa)) {
      throw ControllerDivergence("non-finite torque command at tick " +
                                     std::to_string(k),
                                 k);
    }
    u.tau_pk = std::clamp(u.tau_pk, -cfg.tau_max, cfg.tau_max);
    u.tau_pa = std::clamp(u.tau_pa, -cfg.tau_max, cfg.tau_max);

    for (int sub = 0; sub < kSubstepsPerTick; ++sub) {
      plant = step_continuous(plant, u.tau_pk, u.tau_pa, lp.knee, lp.ankle,
                              lp.impact, sub_dt);
    }
    if (ps.impact) plant = apply_impact(plant, lp.impact);

    if (plant.theta_knee < lp.knee.angle_min - stop_margin ||
        plant.theta_knee > lp.knee.angle_max + stop_margin ||
        plant.theta_ankle < lp.ankle.angle_min - stop_margin ||
        plant.theta_ankle > lp.ankle.angle_max + stop_margin ||
        !std::isfinite(plant.theta_knee) || !std::isfinite(plant.theta_ankle)) {
      throw ControllerDivergence("joint left its envelope at tick " +
                                     std::to_string(k),
                                 k);
    }

    TickRecord r;
    r.t = t;
    r.th_d_pk = des.theta_knee;
    r.th_a_pk = m.theta_knee;
    r.th_d_pa = des.theta_ankle;
    r.th_a_pa = m.theta_ankle;
    r.dth_d_pk = des.dtheta_knee;
    r.dth_a_pk = m.dtheta_knee;
    r.dth_d_pa = des.dtheta_ankle;
    r.dth_a_pa = m.dtheta_ankle;
    r.e_pk = in.e_pk;
    r.e_pa = in.e_pa;
    r.de_pk = in.de_pk;
    r.de_pa = in.de_pa;
    r.s = static_cast<double>(in.s);
    r.tau_pk = u.tau_pk;
    r.tau_pa = u.tau_pa;
    log.ticks.push_back(r);
  }
  return log;
}

}  // namespace gaitclone
