#include "rinekf/sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace rinekf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Scalar3 {
  double value = 0.0, d1 = 0.0, d2 = 0.0;
};

Scalar3 sum_sinusoids(const std::vector<Sinusoid>& terms, double t) {
  Scalar3 out;
  for (const auto& s : terms) {
    const double w = kTwoPi * s.frequency;
    const double arg = w * t + s.phase;
    out.value += s.amplitude * std::sin(arg);
    out.d1 += s.amplitude * w * std::cos(arg);
    out.d2 -= s.amplitude * w * w * std::sin(arg);
  }
  return out;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

double frac(double x) { return x - std::floor(x); }

Vec3 slip_displacement(const SlipSpec& slips, int leg, const StanceInterval& stance, double t) {
  Vec3 d = Vec3::Zero();
  for (const auto& e : slips.events) {
    if (e.leg != leg || e.t_start < stance.touchdown || e.t_start >= stance.liftoff) {
      continue;
    }
    d += e.velocity * std::clamp(t - e.t_start, 0.0, e.duration);
  }
  return d;
}

void validate_slips(const SlipSpec& slips, const ContactSchedule& schedule) {
  for (const auto& e : slips.events) {
    std::ostringstream where;
    where << "slip at t=" << e.t_start << " on leg " << e.leg;
    if (e.leg < 0 || e.leg >= kNumLegs) {
      throw SimError(where.str() + ": leg id out of range");
    }
    if (!(e.duration > 0.0)) {
      throw SimError(where.str() + ": duration must be positive");
    }
    if (e.t_start < 0.0 || e.t_start + e.duration > schedule.horizon) {
      throw SimError(where.str() + ": event extends outside the simulation horizon");
    }
    const int idx = schedule.stance_index(e.leg, e.t_start);
    if (idx < 0 ||
        e.t_start + e.duration >= schedule.stances[static_cast<std::size_t>(e.leg)]
                                       [static_cast<std::size_t>(idx)].liftoff) {
      throw SimError(where.str() + ": event must lie inside a single stance phase");
    }
  }
}

}  // namespace

TruthSample evaluate_profile(const MotionProfile& profile, double t, const Vec3& gravity) {
  TruthSample s;
  s.t = t;

  const double speed = profile.forward_speed;
  const double omega_turn = profile.turn_rate;
  const double yaw0 = profile.initial_yaw;
  Vec3 p = profile.initial_position, v = Vec3::Zero(), a = Vec3::Zero();
  if (std::abs(omega_turn) < 1e-12) {
    const Vec3 dir(std::cos(yaw0), std::sin(yaw0), 0.0);
    p += speed * t * dir;
    v = speed * dir;
  } else {
    const double h = yaw0 + omega_turn * t;
    p += (speed / omega_turn) *
         Vec3(std::sin(h) - std::sin(yaw0), std::cos(yaw0) - std::cos(h), 0.0);
    v = speed * Vec3(std::cos(h), std::sin(h), 0.0);
    a = speed * omega_turn * Vec3(-std::sin(h), std::cos(h), 0.0);
  }
  const std::array<const std::vector<Sinusoid>*, 3> axes = {&profile.x, &profile.y, &profile.z};
  for (int i = 0; i < 3; ++i) {
    const Scalar3 w = sum_sinusoids(*axes[static_cast<std::size_t>(i)], t);
    p[i] += w.value;
    v[i] += w.d1;
    a[i] += w.d2;
  }

  const Scalar3 roll = sum_sinusoids(profile.roll, t);
  const Scalar3 pitch = sum_sinusoids(profile.pitch, t);
  Scalar3 yaw = sum_sinusoids(profile.yaw, t);
  yaw.value += yaw0 + omega_turn * t;
  yaw.d1 += omega_turn;

  const Mat3 r = rot_z(yaw.value) * rot_y(pitch.value) * rot_x(roll.value);
  const double sr = std::sin(roll.value), cr = std::cos(roll.value);
  const double sp = std::sin(pitch.value), cp = std::cos(pitch.value);

  s.rot = Rotation::unchecked(r);
  s.position = p;
  s.velocity = v;
  s.accel_world = a;
  s.omega = Vec3(roll.d1 - yaw.d1 * sp, pitch.d1 * cr + yaw.d1 * cp * sr,
                 -pitch.d1 * sr + yaw.d1 * cp * cr);
  s.accel_imu = r.transpose() * (a - gravity);
  s.yaw = yaw.value;
  return s;
}

std::vector<TruthSample> generate_trajectory(const MotionProfile& profile, double horizon,
                                             double imu_rate, const Vec3& gravity) {
  if (!(imu_rate > 0.0) || !(horizon >= 0.0)) {
    throw std::invalid_argument("generate_trajectory: rate and horizon must be positive");
  }
  const auto n = static_cast<long>(std::llround(horizon * imu_rate));
  std::vector<TruthSample> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) {
    out.push_back(evaluate_profile(profile, static_cast<double>(k) / imu_rate, gravity));
  }
  return out;
}

GaitSpec GaitSpec::crawl() { return GaitSpec{}; }

GaitSpec GaitSpec::trot() {
  GaitSpec g;
  g.type = GaitType::trot;
  g.period = 0.5;
  g.duty = 0.5;
  g.step_length = 0.1;
  g.offsets = {0.0, 0.5, 0.5, 0.0};
  return g;
}

int GaitSpec::min_stance_legs() const {
  if (duty >= 1.0) {
    return kNumLegs;
  }
  // The stance count only changes at touchdown/liftoff phases; probe between them.
  std::vector<double> events;
  for (double o : offsets) {
    events.push_back(frac(o));
    events.push_back(frac(o + duty));
  }
  std::sort(events.begin(), events.end());
  events.push_back(events.front() + 1.0);
  int min_count = kNumLegs;
  for (std::size_t i = 0; i + 1 < events.size(); ++i) {
    if (events[i + 1] - events[i] < 1e-12) {
      continue;
    }
    const double phase = 0.5 * (events[i] + events[i + 1]);
    int count = 0;
    for (double o : offsets) {
      count += frac(phase - o) < duty ? 1 : 0;
    }
    min_count = std::min(min_count, count);
  }
  return min_count;
}

void GaitSpec::validate() const {
  if (!(period > 0.0)) {
    throw std::invalid_argument("gait: period must be positive");
  }
  if (!(duty > 0.0 && duty <= 1.0)) {
    throw std::invalid_argument("gait: duty must be in (0, 1]");
  }
  if (step_length < 0.0 || step_height < 0.0) {
    throw std::invalid_argument("gait: step_length and step_height must be non-negative");
  }
  for (double o : offsets) {
    if (o < 0.0 || o >= 1.0) {
      throw std::invalid_argument("gait: phase offsets must be in [0, 1)");
    }
  }
  const int required = type == GaitType::crawl ? 3 : 2;
  if (min_stance_legs() < required) {
    throw std::invalid_argument("gait: duty/offsets leave fewer than " + std::to_string(required) +
                                " legs in stance");
  }
}

bool ContactSchedule::in_contact(int leg, double t) const { return stance_index(leg, t) >= 0; }

int ContactSchedule::stance_count(double t) const {
  int n = 0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    n += in_contact(leg, t) ? 1 : 0;
  }
  return n;
}

int ContactSchedule::stance_index(int leg, double t) const {
  const auto& list = stances.at(static_cast<std::size_t>(leg));
  // First interval whose liftoff is after t.
  const auto it = std::upper_bound(list.begin(), list.end(), t,
                                   [](double v, const StanceInterval& s) { return v < s.liftoff; });
  if (it == list.end() || t < it->touchdown) {
    return -1;
  }
  return static_cast<int>(it - list.begin());
}

ContactSchedule schedule_contacts(const GaitSpec& gait, double horizon) {
  gait.validate();
  ContactSchedule schedule;
  schedule.horizon = horizon;
  const double period = gait.period;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    auto& list = schedule.stances[static_cast<std::size_t>(leg)];
    if (gait.duty >= 1.0) {
      list.push_back({-period, horizon + period, Vec3::Zero()});
      continue;
    }
    const double offset = gait.offsets[static_cast<std::size_t>(leg)];
    // Stance n spans [(n + offset) T, (n + offset + duty) T).
    const auto first = static_cast<long>(std::floor(-offset - gait.duty)) - 1;
    const auto last = static_cast<long>(std::ceil(horizon / period - offset)) + 1;
    for (long n = first; n <= last; ++n) {
      const double td = (static_cast<double>(n) + offset) * period;
      const double lo = td + gait.duty * period;
      list.push_back({td, lo, Vec3::Zero()});
    }
  }
  return schedule;
}

void plan_footholds(ContactSchedule& schedule, const MotionProfile& profile,
                    const std::array<LegParams, kNumLegs>& legs, const ImuExtrinsics& extrinsics,
                    double stand_height) {
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const LegParams& lp = legs[static_cast<std::size_t>(leg)];
    const Vec3 nominal_b = lp.hip_offset + Vec3(0.0, lp.side_sign * lp.l_hip, -stand_height);
    const Vec3 nominal_i = extrinsics.base_to_imu(nominal_b);
    for (auto& stance : schedule.stances[static_cast<std::size_t>(leg)]) {
      const double t_mid = 0.5 * (stance.touchdown + stance.liftoff);
      const TruthSample s = evaluate_profile(profile, t_mid, Vec3::Zero());
      const double heading = profile.initial_yaw + profile.turn_rate * t_mid;
      stance.foothold = s.position + rot_z(heading) * nominal_i;
    }
  }
}

Vec3 foot_position(const ContactSchedule& schedule, const SlipSpec& slips, const GaitSpec& gait,
                   int leg, double t) {
  const auto& list = schedule.stances.at(static_cast<std::size_t>(leg));
  const auto it = std::upper_bound(list.begin(), list.end(), t,
                                   [](double v, const StanceInterval& s) { return v < s.liftoff; });
  if (it == list.end() || it == list.begin()) {
    throw SimError("foot_position: t=" + std::to_string(t) + " outside the schedule of leg " +
                   std::to_string(leg));
  }
  if (t >= it->touchdown) {
    return it->foothold + slip_displacement(slips, leg, *it, t);
  }
  const StanceInterval& prev = *(it - 1);
  const Vec3 start = prev.foothold + slip_displacement(slips, leg, prev, prev.liftoff);
  const Vec3 end = it->foothold;
  const double tau = (t - prev.liftoff) / (it->touchdown - prev.liftoff);
  const double blend = 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
  Vec3 pos = start + blend * (end - start);
  pos.z() += gait.step_height * std::sin(std::numbers::pi * tau);
  return pos;
}

double GaussianSampler::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * kScale;
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_ = radius * std::sin(kTwoPi * u2);
  has_spare_ = true;
  return radius * std::cos(kTwoPi * u2);
}

Vec3 GaussianSampler::correlated(const Mat3& sqrt_cov) {
  Vec3 z;
  for (int i = 0; i < 3; ++i) {
    z[i] = standard_normal();
  }
  return sqrt_cov * z;
}

Mat3 psd_sqrt(const Mat3& cov) {
  const Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (cov + cov.transpose()));
  const Vec3 root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

SimOutput synthesize_log(const MotionProfile& profile, const ContactSchedule& schedule,
                         const GaitSpec& gait, const SlipSpec& slips,
                         const std::array<LegParams, kNumLegs>& legs,
                         const ImuExtrinsics& extrinsics, const NoiseConfig& noise,
                         const SimSettings& settings) {
  if (!(settings.imu_rate > 0.0) || !(settings.joint_rate > 0.0) || !(settings.horizon > 0.0)) {
    throw SimError("synthesize_log: rates and horizon must be positive");
  }
  const double ratio = settings.imu_rate / settings.joint_rate;
  const auto stride = static_cast<long>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
    throw SimError("synthesize_log: imu_rate must be an integer multiple of joint_rate");
  }
  if (!(settings.noise_scale >= 0.0)) {
    throw SimError("synthesize_log: noise_scale must be non-negative");
  }
  noise.validate();
  validate_slips(slips, schedule);

  FilterConfig model;
  model.gravity = settings.gravity;
  model.motion_model = settings.motion_model;

  const double scale2 = settings.noise_scale * settings.noise_scale;
  const Mat3 gyro_sqrt = psd_sqrt(noise.gyro * scale2);
  const Mat3 accel_sqrt = psd_sqrt(noise.accel * scale2);
  const Mat3 encoder_sqrt = psd_sqrt(noise.encoder * scale2);
  GaussianSampler rng(settings.seed);

  SimOutput out;
  out.log.imu_rate = settings.imu_rate;
  out.log.joint_rate = settings.joint_rate;

  const auto n = static_cast<long>(std::llround(settings.horizon * settings.imu_rate));
  const TruthSample s0 = evaluate_profile(profile, 0.0, settings.gravity);
  Mat3X trans(3, 2);
  trans << s0.velocity, s0.position;
  GroupElement truth(s0.rot, trans);
  out.log.initial = InitialState{0.0, s0.rot, s0.velocity, s0.position};

  auto emit_joints = [&](double t) {
    JointRecord jr;
    ContactRecord cr;
    jr.t = t;
    cr.t = t;
    const Mat3& r = truth.rot().matrix();
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const auto li = static_cast<std::size_t>(leg);
      const Vec3 foot_w = foot_position(schedule, slips, gait, leg, t);
      const Vec3 foot_b = extrinsics.imu_to_base(r.transpose() * (foot_w - truth.position()));
      JointAngles q;
      try {
        q = inverse_kinematics(foot_b, legs[li]);
      } catch (const OutOfWorkspace& e) {
        std::ostringstream msg;
        msg << "synthesize_log: leg " << leg << " at t=" << t << " s: " << e.what();
        throw SimError(msg.str());
      }
      jr.q[li] = q + rng.correlated(encoder_sqrt);
      cr.in_contact[li] = schedule.in_contact(leg, t);
    }
    out.log.joints.push_back(jr);
    out.log.contacts.push_back(cr);
  };

  out.ground_truth.push_back(0.0, truth.position(), truth.rot());
  out.truth_velocity.push_back(truth.velocity());
  emit_joints(0.0);

  double t_prev = 0.0;
  for (long k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) / settings.imu_rate;
    const double dt = t - t_prev;
    const TruthSample mid = evaluate_profile(profile, t - 0.5 * dt, settings.gravity);
    ImuSample exact{t, mid.omega, mid.accel_imu};
    truth = propagate_mean(truth, exact, dt, model);

    ImuSample measured = exact;
    measured.omega += rng.correlated(gyro_sqrt);
    measured.accel += rng.correlated(accel_sqrt);
    out.log.imu.push_back(measured);
    out.ground_truth.push_back(t, truth.position(), truth.rot());
    out.truth_velocity.push_back(truth.velocity());
    if (k % stride == 0) {
      emit_joints(t);
    }
    t_prev = t;
  }

  for (const auto& e : slips.events) {
    out.slips.push_back({e, e.velocity.norm() * e.duration});
  }
  return out;
}

}  // namespace rinekf
