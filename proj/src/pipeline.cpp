#include "rinekf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace rinekf {

namespace {

SlipEvent slip(double t_start, int leg, const Vec3& direction) {
  constexpr double kDisplacement = 0.05;
  constexpr double kDuration = 0.25;
  return {t_start, leg, direction.normalized() * (kDisplacement / kDuration), kDuration};
}

}  // namespace

Scenario default_scenario() {
  Scenario s;
  s.profile.z = {{0.01, 2.0 / 3.0, 0.0}};
  s.profile.y = {{0.01, 1.0 / 3.0, 0.0}};
  s.profile.roll = {{0.02, 2.0 / 3.0, 0.5}};
  s.profile.pitch = {{0.02, 1.0 / 3.0, 1.0}};
  s.gait = GaitSpec::crawl();
  // Feet sink into soft ground. Each event starts shortly after a touchdown of its
  // leg and ends inside the same stance.
  s.slips.events = {
      slip(9.2, kFrontLeft, Vec3(0.0, 0.0, -1.0)),
      slip(24.575, kFrontRight, Vec3(0.0, 0.0, -1.0)),
      slip(39.95, kRearLeft, Vec3(0.0, 0.0, -1.0)),
      slip(49.325, kRearRight, Vec3(0.0, 0.0, -1.0)),
  };
  return s;
}

SimOutput simulate(const Scenario& scenario, const FilterConfig& robot) {
  ContactSchedule schedule = schedule_contacts(scenario.gait, scenario.settings.horizon);
  plan_footholds(schedule, scenario.profile, robot.legs, robot.extrinsics,
                 scenario.settings.stand_height);
  return synthesize_log(scenario.profile, schedule, scenario.gait, scenario.slips, robot.legs,
                        robot.extrinsics, robot.noise, scenario.settings);
}

FilterRunResult run_filter(const MeasurementLog& log, const FilterConfig& cfg,
                           const RobustConfig& robust) {
  cfg.validate();
  robust.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  FilterRunResult out;
  FilterRunStats& stats = out.stats;
  if (log.joints.size() != log.contacts.size()) {
    throw FilterError("run_filter: joint and contact streams differ in length");
  }
  if (log.imu.empty() && log.joints.empty()) {
    throw FilterError("run_filter: empty log");
  }

  double t0 = 0.0;
  if (log.initial) {
    t0 = log.initial->t;
  } else {
    const double first_imu = log.imu.empty() ? INFINITY : log.imu.front().t;
    const double first_jnt = log.joints.empty() ? INFINITY : log.joints.front().t;
    t0 = std::min(first_imu, first_jnt);
  }
  FilterState state = log.initial
                          ? make_initial_state(log.initial->rot, log.initial->velocity,
                                               log.initial->position, t0, cfg)
                          : make_initial_state(Rotation(), Vec3::Zero(), Vec3::Zero(), t0, cfg);

  auto step = [&](const ImuSample& imu, double t_end) {
    const double gap = t_end - state.t;
    if (!(gap > 0.0)) {
      std::ostringstream msg;
      msg << "run_filter: non-increasing time at t=" << t_end;
      throw FilterError(msg.str());
    }
    if (gap > kLongImuGap) {
      std::ostringstream msg;
      msg << "IMU gap of " << gap << " s before t=" << t_end << ", integrating in substeps";
      stats.warnings.push_back(msg.str());
      const auto n = static_cast<int>(std::ceil(gap / kMaxSubstep));
      const double t_start = state.t;
      for (int k = 1; k <= n; ++k) {
        const double t_k = k == n ? t_end : t_start + gap * k / n;
        state = predict(state, imu, t_k - state.t, cfg);
        state.t = t_k;
      }
      stats.substeps += static_cast<std::size_t>(n - 1);
    } else {
      state = predict(state, imu, gap, cfg);
      state.t = t_end;
    }
    ++stats.predictions;
  };

  // A sample stamped at the start time covers an interval before it.
  std::size_t i = 0;
  while (i < log.imu.size() && log.imu[i].t <= t0) {
    ++i;
  }
  for (std::size_t j = 0; j < log.joints.size(); ++j) {
    const JointRecord& jr = log.joints[j];
    const ContactRecord& cr = log.contacts[j];
    if (jr.t < state.t) {
      throw FilterError("run_filter: joint record at t=" + std::to_string(jr.t) +
                        " precedes the filter time");
    }
    while (i < log.imu.size() && log.imu[i].t <= jr.t) {
      step(log.imu[i], log.imu[i].t);
      ++i;
    }
    if (state.t < jr.t) {
      // The next IMU sample covers the interval that contains jr.t.
      if (i >= log.imu.size()) {
        throw FilterError("run_filter: no IMU data covering t=" + std::to_string(jr.t));
      }
      step(log.imu[i], jr.t);
    }

    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (!cr.in_contact[static_cast<std::size_t>(leg)] && state.contacts.count(leg) != 0) {
        state = remove_contact(state, leg);
        ++stats.contacts_removed;
      }
    }

    std::vector<LegMeasurement> meas;
    for (const auto& [leg, slot] : state.contacts) {
      meas.push_back({leg, jr.q[static_cast<std::size_t>(leg)]});
    }
    if (!meas.empty()) {
      UpdateOutcome res = robust.cost == RobustCost::none ? update(state, meas, cfg)
                                                          : robust_update(state, meas, cfg, robust);
      if (res.status == UpdateStatus::applied) {
        ++stats.updates_applied;
      } else if (res.status == UpdateStatus::rejected_ill_conditioned) {
        ++stats.updates_rejected;
        stats.warnings.push_back("update rejected at t=" + std::to_string(jr.t) + ": " +
                                 to_string(res.status));
      }
      if (robust.cost != RobustCost::none) {
        ++stats.irls_updates;
        stats.irls_iterations += static_cast<std::size_t>(res.irls_iterations);
        stats.irls_max_iterations = std::max(stats.irls_max_iterations, res.irls_iterations);
        stats.irls_not_converged += res.irls_converged ? 0 : 1;
        stats.irls_ill_conditioned += res.irls_ill_conditioned ? 1 : 0;
      }
      state = std::move(res.state);
    }

    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (cr.in_contact[static_cast<std::size_t>(leg)] && state.contacts.count(leg) == 0) {
        state = add_contact(state, leg, jr.q[static_cast<std::size_t>(leg)], cfg);
        ++stats.contacts_added;
      }
    }
    out.trajectory.push_back(jr.t, state.x.position(), state.x.rot());
  }

  out.final_state = std::move(state);
  stats.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return out;
}

}  // namespace rinekf
