#include "support.hpp"

#include "rinekf/inekf.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace rinekf;
using rinekf::test::Rng;

namespace {

FilterConfig test_config() {
  FilterConfig cfg;
  return cfg;
}

std::vector<LegMeasurement> consistent_measurements(const FilterState& s, const FilterConfig& cfg) {
  // Joint angles that reproduce the current foot estimates exactly.
  std::vector<LegMeasurement> out;
  for (const auto& [leg, slot] : s.contacts) {
    const Vec3 foot_i = s.x.rot().matrix().transpose() * (s.x.slot(slot) - s.x.position());
    const JointAngles q =
        inverse_kinematics(cfg.extrinsics.imu_to_base(foot_i), cfg.legs[static_cast<std::size_t>(leg)]);
    out.push_back({leg, q});
  }
  return out;
}

// State whose feet sit at reachable positions below the hips.
FilterState walking_state(Rng& rng, int contacts, const FilterConfig& cfg) {
  FilterState s = make_initial_state(Rotation(so3_exp(rng.vec3(0.2))), rng.vec3(0.5),
                                     rng.vec3(1.0), 0.0, cfg);
  for (int leg = 0; leg < contacts; ++leg) {
    s = add_contact(s, leg, rng.joints(), cfg);
  }
  s.cov = rng.spd(s.dim(), 1e-3);
  return s;
}

}  // namespace

TEST_CASE("A has the documented block structure") {
  const Vec3 g(0, 0, -9.81);
  const double dt = 0.1;
  const MatX a = build_A(dt, 2, g);
  CHECK(a.rows() == 15);
  MatX expected = MatX::Identity(15, 15);
  expected.block<3, 3>(3, 0) = hat3(g * dt);
  expected.block<3, 3>(6, 0) = hat3(g * (dt * dt / 2));
  expected.block<3, 3>(6, 3) = Mat3::Identity() * dt;
  CHECK((a - expected).norm() == 0.0);
}

TEST_CASE("noise-free error propagation is exactly linear") {
  Rng rng(20);
  FilterConfig cfg = test_config();
  CHECK(rinekf::test::log_linearity_error(rng, 200, cfg) < 1e-9);
  cfg.motion_model = MotionModel::exact;
  CHECK(rinekf::test::log_linearity_error(rng, 200, cfg) < 1e-9);
}

TEST_CASE("propagation of a static robot") {
  FilterConfig cfg = test_config();
  const Rotation r = so3_exp(Vec3(0.1, -0.2, 0.3));
  FilterState s = make_initial_state(r, Vec3::Zero(), Vec3(1, 2, 3), 0.0, cfg);
  const ImuSample rest{0.0025, Vec3::Zero(), -(r.matrix().transpose() * cfg.gravity)};
  for (int i = 0; i < 400; ++i) {
    s = predict(s, rest, 0.0025, cfg);
  }
  CHECK((s.x.position() - Vec3(1, 2, 3)).norm() < 1e-12);
  CHECK(s.x.velocity().norm() < 1e-12);
  CHECK(s.t == doctest::Approx(1.0));
  // Free fall: zero specific force.
  const GroupElement fall = propagate_mean(s.x, ImuSample{0, Vec3::Zero(), Vec3::Zero()}, 0.5, cfg);
  CHECK((fall.position() - (Vec3(1, 2, 3) + 0.125 * cfg.gravity)).norm() < 1e-12);
}

TEST_CASE("exact and approximate motion models agree to second order") {
  FilterConfig approx = test_config();
  FilterConfig exact = test_config();
  exact.motion_model = MotionModel::exact;
  Rng rng(21);
  const GroupElement x = rng.element(2);
  const ImuSample imu{0, Vec3(0.5, -0.3, 0.8), Vec3(1.0, 0.2, 9.6)};
  for (double dt : {1e-2, 1e-3}) {
    const GroupElement a = propagate_mean(x, imu, dt, approx);
    const GroupElement e = propagate_mean(x, imu, dt, exact);
    CHECK((a.velocity() - e.velocity()).norm() < 10 * dt * dt);
    CHECK((a.position() - e.position()).norm() < 10 * dt * dt * dt);
  }
  // Constant rate and body acceleration: exact model equals a fine integration.
  GroupElement fine = x;
  for (int i = 0; i < 10000; ++i) {
    fine = propagate_mean(fine, imu, 1e-5, approx);
  }
  const GroupElement coarse = propagate_mean(x, imu, 0.1, exact);
  CHECK((fine.position() - coarse.position()).norm() < 1e-6);
  CHECK((fine.velocity() - coarse.velocity()).norm() < 1e-5);
}

TEST_CASE("predicted covariance stays symmetric positive semidefinite") {
  Rng rng(22);
  FilterConfig cfg = test_config();
  FilterState s = walking_state(rng, 3, cfg);
  for (int i = 0; i < 2000; ++i) {
    s = predict(s, ImuSample{0, rng.vec3(1.0), rng.vec3(12.0)}, 0.0025, cfg);
  }
  CHECK_NOTHROW(s.check_invariants());
}

TEST_CASE("predict rejects invalid steps") {
  FilterConfig cfg = test_config();
  const FilterState s = make_initial_state(Rotation(), Vec3::Zero(), Vec3::Zero(), 0.0, cfg);
  const ImuSample imu{0, Vec3::Zero(), Vec3(0, 0, 9.81)};
  CHECK_THROWS_AS(predict(s, imu, 0.0, cfg), FilterError);
  CHECK_THROWS_AS(predict(s, imu, -1e-3, cfg), FilterError);
  ImuSample bad = imu;
  bad.accel.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(predict(s, bad, 1e-3, cfg), FilterError);
}

TEST_CASE("one-step covariance matches Monte Carlo of the noisy model") {
  Rng rng(23);
  FilterConfig cfg = test_config();
  cfg.noise.gyro = Mat3::Identity() * 0.5 * 0.5;
  cfg.noise.accel = Mat3::Identity() * 0.5 * 0.5;
  cfg.noise.foot = Mat3::Identity() * 0.3 * 0.3;
  FilterState s = walking_state(rng, 2, cfg);
  const ImuSample imu{0, Vec3(0.4, -0.7, 1.1), Vec3(0.5, 1.0, 9.0)};
  const double dt = 0.01;
  const MatX b = build_B(s, imu, dt, cfg);
  const MatX expected = b * process_noise(2, cfg.noise) * b.transpose();
  const MatX mc = rinekf::test::monte_carlo_step_covariance(s, imu, dt, cfg, 20000, rng);
  CHECK((mc - expected).norm() / expected.norm() < 0.05);
}

TEST_CASE("simplified noise map") {
  Rng rng(24);
  FilterConfig cfg = test_config();
  cfg.simplified_noise_map = true;
  const FilterState s = walking_state(rng, 1, cfg);
  const double dt = 0.01;
  const MatX b = build_B(s, ImuSample{0, Vec3(1, 0, 0), Vec3::Zero()}, dt, cfg);
  MatX g = MatX::Zero(12, 9);
  g.block<3, 3>(0, 0) = Mat3::Identity() * dt;
  g.block<3, 3>(3, 3) = Mat3::Identity() * dt;
  g.block<3, 3>(9, 6) = Mat3::Identity() * dt;
  CHECK((b - s.x.adjoint() * g).norm() < 1e-15);
}

TEST_CASE("measurement Jacobian matches finite differences of the foot model") {
  Rng rng(25);
  const FilterConfig cfg = test_config();
  const FilterState s = walking_state(rng, 3, cfg);
  const auto meas = consistent_measurements(s, cfg);
  const MeasurementStack stack = build_measurements(s, meas, cfg);
  CHECK(stack.innovation.norm() < 1e-12);
  const double h = 1e-7;
  const Mat3& rbar = s.x.rot().matrix();
  for (int c = 0; c < s.dim(); ++c) {
    VecX xi = VecX::Zero(s.dim());
    xi[c] = h;
    const GroupElement x = group_exp(xi) * s.x;
    VecX col(3 * static_cast<int>(meas.size()));
    int row = 0;
    for (const auto& [leg, slot] : s.contacts) {
      // Innovation produced by a measurement generated at the perturbed state.
      const Vec3 z = x.rot().matrix().transpose() * (x.slot(slot) - x.position());
      col.segment<3>(row) = (rbar * z - (s.x.slot(slot) - s.x.position())) / h;
      row += 3;
    }
    CHECK((stack.h.col(c) - col).norm() < 1e-6);
  }
}

TEST_CASE("update equals the information-form posterior") {
  Rng rng(26);
  FilterConfig cfg = test_config();
  for (int trial = 0; trial < 50; ++trial) {
    const FilterState s = walking_state(rng, 1 + trial % 4, cfg);
    auto meas = consistent_measurements(s, cfg);
    for (auto& m : meas) {
      m.q += rng.vec3(0.01);
    }
    const MeasurementStack stack = build_measurements(s, meas, cfg);
    const MatX info = s.cov.inverse() + stack.h.transpose() * stack.noise.inverse() * stack.h;
    const MatX post = info.inverse();
    const VecX xi = post * stack.h.transpose() * stack.noise.inverse() * stack.innovation;

    const UpdateOutcome out = update(s, meas, cfg);
    CHECK(out.status == UpdateStatus::applied);
    CHECK((out.correction - xi).norm() < 1e-9);
    CHECK((out.state.cov - post).norm() < 1e-9 * post.norm());
    CHECK((out.state.x.matrix() - (group_exp(xi) * s.x).matrix()).norm() < 1e-9);
    CHECK_NOTHROW(out.state.check_invariants());

    cfg.joseph_form = true;
    const UpdateOutcome joseph = update(s, meas, cfg);
    cfg.joseph_form = false;
    CHECK((joseph.state.cov - post).norm() < 1e-9 * post.norm());
  }
}

TEST_CASE("update edge cases") {
  Rng rng(27);
  FilterConfig cfg = test_config();
  const FilterState s = walking_state(rng, 2, cfg);
  const UpdateOutcome none = update(s, {}, cfg);
  CHECK(none.status == UpdateStatus::no_measurements);
  CHECK(none.state.x.matrix() == s.x.matrix());
  CHECK_THROWS_AS(update(s, {{3, JointAngles(0, 0.5, -1.0)}}, cfg), FilterError);

  cfg.max_condition = 1.0 + 1e-12;
  const UpdateOutcome rejected = update(s, consistent_measurements(s, cfg), cfg);
  CHECK(rejected.status == UpdateStatus::rejected_ill_conditioned);
  CHECK(rejected.state.cov == s.cov);
}

TEST_CASE("contact lifecycle") {
  Rng rng(28);
  const FilterConfig cfg = test_config();
  FilterState s = make_initial_state(Rotation(so3_exp(Vec3(0.1, 0.0, 0.4))), Vec3(0.2, 0, 0),
                                     Vec3(1, 0, 0.4), 0.0, cfg);
  s.cov = rng.spd(9, 1e-3);
  const JointAngles q(0.05, 0.6, -1.2);
  const FilterState a = add_contact(s, kRearLeft, q, cfg);
  CHECK(a.num_contacts() == 1);
  CHECK(a.contacts.at(kRearLeft) == 2);
  const Vec3 expected = s.x.position() + s.x.rot().matrix() *
                                             cfg.extrinsics.base_to_imu(forward_kinematics(
                                                 q, cfg.legs[kRearLeft]));
  CHECK((a.x.slot(2) - expected).norm() < 1e-15);
  CHECK(a.cov.topLeftCorner(9, 9) == s.cov);
  CHECK(a.cov.block<9, 3>(0, 9).norm() == 0.0);
  CHECK(a.cov.block<3, 3>(9, 9) == Mat3::Identity() * cfg.new_contact_cov);
  CHECK_THROWS_AS(add_contact(a, kRearLeft, q, cfg), FilterError);

  FilterState b = add_contact(a, kFrontLeft, JointAngles(0, 0.3, -0.9), cfg);
  b = add_contact(b, kFrontRight, JointAngles(0, 0.4, -1.0), cfg);
  b.cov = rng.spd(b.dim(), 1e-3);
  const FilterState c = remove_contact(b, kRearLeft);
  CHECK(c.num_contacts() == 2);
  CHECK(c.contacts.at(kFrontLeft) == 2);
  CHECK(c.contacts.at(kFrontRight) == 3);
  CHECK(c.x.slot(2) == b.x.slot(3));
  // Marginalization keeps the remaining rows and columns.
  std::vector<int> keep = {0, 1, 2, 3, 4, 5, 6, 7, 8, 12, 13, 14, 15, 16, 17};
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      CHECK(c.cov(i, j) == b.cov(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]));
    }
  }
  CHECK_NOTHROW(c.check_invariants());
  CHECK_THROWS_AS(remove_contact(c, kRearLeft), FilterError);
}

TEST_CASE("configuration validation") {
  FilterConfig cfg = test_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.gravity = Vec3(0, 0, -1.62);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.allow_nonstandard_gravity = true;
  CHECK_NOTHROW(cfg.validate());
  cfg.new_contact_cov = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("state invariants detect corruption") {
  Rng rng(29);
  const FilterConfig cfg = test_config();
  FilterState s = walking_state(rng, 2, cfg);
  CHECK_NOTHROW(s.check_invariants());
  FilterState asym = s;
  asym.cov(0, 1) += 1e-6;
  CHECK_THROWS_AS(asym.check_invariants(), FilterError);
  FilterState neg = s;
  neg.cov(0, 0) = -1.0;
  CHECK_THROWS_AS(neg.check_invariants(), FilterError);
  FilterState slots = s;
  slots.contacts.erase(slots.contacts.begin());
  CHECK_THROWS_AS(slots.check_invariants(), FilterError);
}
