/**
 * @file pipeline.hpp
 * @brief Scenario simulation and the log-driven filter loop.
 */
#pragma once

#include "rinekf/inekf.hpp"
#include "rinekf/measurement_log.hpp"
#include "rinekf/robust.hpp"
#include "rinekf/sim.hpp"
#include "rinekf/trajectory.hpp"

#include <string>
#include <vector>

namespace rinekf {

struct Scenario {
  MotionProfile profile;
  GaitSpec gait;
  SlipSpec slips;
  SimSettings settings;
};

/// 60 s crawl at 0.2 m/s with gentle body oscillation and four 0.05 m slips.
Scenario default_scenario();

/// Schedules contacts, plans footholds and synthesizes the log.
SimOutput simulate(const Scenario& scenario, const FilterConfig& robot);

struct FilterRunStats {
  std::size_t predictions = 0;
  std::size_t substeps = 0;  // extra steps used to split long IMU gaps
  std::size_t updates_applied = 0;
  std::size_t updates_rejected = 0;
  std::size_t contacts_added = 0;
  std::size_t contacts_removed = 0;
  std::size_t irls_updates = 0;
  std::size_t irls_iterations = 0;
  int irls_max_iterations = 0;
  std::size_t irls_not_converged = 0;
  std::size_t irls_ill_conditioned = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

struct FilterRunResult {
  Trajectory trajectory;  // one pose per joint/contact record
  FilterState final_state;
  FilterRunStats stats;
};

/// IMU gaps longer than this are split into steps of at most kMaxSubstep.
inline constexpr double kLongImuGap = 0.05;
inline constexpr double kMaxSubstep = 0.01;

/**
 * Runs the filter over a log. Starts from log.initial when present, otherwise
 * from identity at rest. At every joint record: legs whose flag dropped are
 * marginalized, legs that stayed in contact are used for the update, and
 * newly flagged legs are added after the update.
 * Throws FilterError on inconsistent logs.
 */
FilterRunResult run_filter(const MeasurementLog& log, const FilterConfig& cfg,
                           const RobustConfig& robust);

}  // namespace rinekf
