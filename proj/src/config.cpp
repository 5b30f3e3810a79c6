#include "rinekf/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rinekf {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid config: ";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += (i ? "; " : "") + items[i];
  }
  return out;
}

/// Reads one JSON object, recording missing, mistyped and unknown keys.
class Section {
public:
  Section(const json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (obj_ != nullptr && !obj_->is_object()) {
      errors_.push_back("'" + path_ + "' must be an object");
      obj_ = nullptr;
    }
  }

  ~Section() {
    if (obj_ == nullptr) {
      return;
    }
    for (const auto& [key, value] : obj_->items()) {
      if (seen_.count(key) == 0) {
        errors_.push_back("unknown key '" + name(key) + "'");
      }
    }
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  const json* find(const std::string& key, bool required = true) {
    seen_.insert(key);
    if (obj_ == nullptr) {
      return nullptr;
    }
    const auto it = obj_->find(key);
    if (it == obj_->end()) {
      if (required) {
        errors_.push_back("missing key '" + name(key) + "'");
      }
      return nullptr;
    }
    return &*it;
  }

  Section child(const std::string& key) { return Section(find(key), name(key), errors_); }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        type_error(key, "a number");
      }
    }
  }

  void positive(const std::string& key, double& out) {
    number(key, out);
    if (obj_ != nullptr && obj_->contains(key) && !(out > 0.0)) {
      errors_.push_back("'" + name(key) + "' must be positive");
    }
  }

  void non_negative(const std::string& key, double& out) {
    number(key, out);
    if (obj_ != nullptr && obj_->contains(key) && !(out >= 0.0)) {
      errors_.push_back("'" + name(key) + "' must be non-negative");
    }
  }

  void integer(const std::string& key, long long& out) {
    if (const json* v = find(key)) {
      if (v->is_number_integer()) {
        out = v->get<long long>();
      } else {
        type_error(key, "an integer");
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        type_error(key, "a boolean");
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        type_error(key, "a string");
      }
    }
  }

  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != static_cast<std::size_t>(N)) {
        type_error(key, "an array of " + std::to_string(N) + " numbers");
        return;
      }
      for (int i = 0; i < N; ++i) {
        const json& e = (*v)[static_cast<std::size_t>(i)];
        if (!e.is_number()) {
          type_error(key, "an array of " + std::to_string(N) + " numbers");
          return;
        }
        out[i] = e.get<double>();
      }
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::vector<std::string>& errors() { return errors_; }

private:
  void type_error(const std::string& key, const std::string& what) {
    errors_.push_back("'" + name(key) + "' must be " + what);
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

Mat3 rpy_to_matrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 matrix_to_rpy(const Mat3& r) {
  const Vec3 rpy(std::atan2(r(2, 1), r(2, 2)), std::asin(std::clamp(-r(2, 0), -1.0, 1.0)),
                 std::atan2(r(1, 0), r(0, 0)));
  return rpy + Vec3::Zero();  // no negative zeros in the output

}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json sinusoids_json(const std::vector<Sinusoid>& list) {
  json out = json::array();
  for (const auto& s : list) {
    out.push_back({{"amplitude", s.amplitude}, {"frequency", s.frequency}, {"phase", s.phase}});
  }
  return out;
}

void read_sinusoids(Section& sec, const std::string& key, std::vector<Sinusoid>& out) {
  const json* v = sec.find(key, false);
  if (v == nullptr) {
    return;
  }
  if (!v->is_array()) {
    sec.errors().push_back("'" + sec.name(key) + "' must be an array");
    return;
  }
  out.clear();
  for (std::size_t i = 0; i < v->size(); ++i) {
    Sinusoid s;
    Section item(&(*v)[i], sec.name(key) + "[" + std::to_string(i) + "]", sec.errors());
    item.number("amplitude", s.amplitude);
    item.non_negative("frequency", s.frequency);
    item.number("phase", s.phase);
    out.push_back(s);
  }
}

double std_of(const Mat3& cov) { return std::sqrt(cov(0, 0)); }

template <typename Fn>
void check(std::vector<std::string>& errors, const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    errors.push_back(what + ": " + e.what());
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

AppConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    throw ConfigError({"JSON parse error: " + msg});
  }

  AppConfig cfg;
  std::vector<std::string> errors;
  {
    Section top(&root, "", errors);
    long long schema = 0;
    top.integer("schema_version", schema);
    if (root.contains("schema_version") && schema != 1) {
      errors.push_back("unsupported schema_version " + std::to_string(schema));
    }
    long long seed = 0;
    top.integer("seed", seed);
    if (seed < 0) {
      errors.push_back("'seed' must be non-negative");
    }
    cfg.scenario.settings.seed = static_cast<std::uint64_t>(seed);
    top.vector<3>("gravity", cfg.filter.gravity);
    cfg.scenario.settings.gravity = cfg.filter.gravity;
    std::string motion_model;
    top.string("motion_model", motion_model);
    if (motion_model == "approximate") {
      cfg.filter.motion_model = MotionModel::approximate;
    } else if (motion_model == "exact") {
      cfg.filter.motion_model = MotionModel::exact;
    } else if (root.contains("motion_model")) {
      errors.push_back("'motion_model' must be 'approximate' or 'exact'");
    }
    cfg.scenario.settings.motion_model = cfg.filter.motion_model;

    {
      Section noise = top.child("noise");
      auto cov = [&](const char* key, Mat3& out) {
        double sd = std_of(out);
        noise.non_negative(key, sd);
        out = Mat3::Identity() * sd * sd;
      };
      cov("gyro_std", cfg.filter.noise.gyro);
      cov("accel_std", cfg.filter.noise.accel);
      cov("foot_std", cfg.filter.noise.foot);
      cov("encoder_std", cfg.filter.noise.encoder);
      cov("kinematics_std", cfg.filter.noise.kinematics);
    }
    {
      Section legs = top.child("legs");
      LegParams base = cfg.filter.legs[0];
      double hip_x = base.hip_offset.x(), hip_y = base.hip_offset.y();
      legs.positive("l_hip", base.l_hip);
      legs.positive("l_thigh", base.l_thigh);
      legs.positive("l_calf", base.l_calf);
      legs.number("hip_x", hip_x);
      legs.number("hip_y", hip_y);
      for (int leg = 0; leg < kNumLegs; ++leg) {
        LegParams& p = cfg.filter.legs[static_cast<std::size_t>(leg)];
        const bool front = leg == kFrontLeft || leg == kFrontRight;
        const bool left = leg == kFrontLeft || leg == kRearLeft;
        p = base;
        p.hip_offset = Vec3(front ? hip_x : -hip_x, left ? hip_y : -hip_y, 0.0);
        p.side_sign = left ? 1 : -1;
      }
    }
    {
      Section ext = top.child("extrinsics");
      Vec3 rpy = Vec3::Zero();
      ext.vector<3>("rotation_rpy", rpy);
      ext.vector<3>("translation", cfg.filter.extrinsics.trans);
      cfg.filter.extrinsics.rot = Rotation::unchecked(rpy_to_matrix(rpy));
    }
    {
      Section filter = top.child("filter");
      Eigen::Matrix<double, 9, 1> std9 = cfg.filter.initial_cov.cwiseSqrt();
      filter.vector<9>("initial_std", std9);
      cfg.filter.initial_cov = std9.cwiseProduct(std9);
      double contact_std = std::sqrt(cfg.filter.new_contact_cov);
      filter.positive("new_contact_std", contact_std);
      cfg.filter.new_contact_cov = contact_std * contact_std;
      filter.boolean("joseph_form", cfg.filter.joseph_form);
      filter.boolean("simplified_noise_map", cfg.filter.simplified_noise_map);
      filter.vector<3>("gyro_bias", cfg.filter.gyro_bias);
      filter.vector<3>("accel_bias", cfg.filter.accel_bias);
    }
    {
      Section robust = top.child("robust");
      std::string cost;
      robust.string("cost", cost);
      if (root.contains("robust") && root["robust"].contains("cost")) {
        check(errors, "'robust.cost'", [&] { cfg.robust.cost = parse_cost(cost); });
      }
      robust.positive("c", cfg.robust.c);
      long long iters = cfg.robust.irls_max_iters;
      robust.integer("irls_max_iters", iters);
      if (iters < 1 || iters > 1000) {
        errors.push_back("'robust.irls_max_iters' must be in [1, 1000]");
      }
      cfg.robust.irls_max_iters = static_cast<int>(std::clamp(iters, 1LL, 1000LL));
      robust.positive("irls_tol", cfg.robust.irls_tol);
    }
    {
      Section sim = top.child("sim");
      SimSettings& s = cfg.scenario.settings;
      sim.positive("horizon", s.horizon);
      sim.positive("imu_rate", s.imu_rate);
      sim.positive("joint_rate", s.joint_rate);
      sim.positive("stand_height", s.stand_height);
      sim.non_negative("noise_scale", s.noise_scale);
      Section motion = sim.child("motion");
      MotionProfile& m = cfg.scenario.profile;
      motion.vector<3>("initial_position", m.initial_position);
      motion.number("initial_yaw", m.initial_yaw);
      motion.number("forward_speed", m.forward_speed);
      motion.number("turn_rate", m.turn_rate);
      m.x.clear();
      m.y.clear();
      m.z.clear();
      m.roll.clear();
      m.pitch.clear();
      m.yaw.clear();
      read_sinusoids(motion, "x", m.x);
      read_sinusoids(motion, "y", m.y);
      read_sinusoids(motion, "z", m.z);
      read_sinusoids(motion, "roll", m.roll);
      read_sinusoids(motion, "pitch", m.pitch);
      read_sinusoids(motion, "yaw", m.yaw);
    }
    {
      Section gait = top.child("gait");
      GaitSpec& g = cfg.scenario.gait;
      std::string type;
      gait.string("type", type);
      if (type == "crawl") {
        g.type = GaitType::crawl;
      } else if (type == "trot") {
        g.type = GaitType::trot;
      } else if (root.contains("gait") && root["gait"].contains("type")) {
        errors.push_back("'gait.type' must be 'crawl' or 'trot'");
      }
      gait.positive("period", g.period);
      gait.positive("duty", g.duty);
      gait.non_negative("step_length", g.step_length);
      gait.non_negative("step_height", g.step_height);
      Eigen::Vector4d offsets(g.offsets[0], g.offsets[1], g.offsets[2], g.offsets[3]);
      gait.vector<4>("offsets", offsets);
      for (int i = 0; i < kNumLegs; ++i) {
        g.offsets[static_cast<std::size_t>(i)] = offsets[i];
      }
    }
    if (const json* slips = top.find("slips")) {
      if (!slips->is_array()) {
        errors.push_back("'slips' must be an array");
      } else {
        cfg.scenario.slips.events.clear();
        for (std::size_t i = 0; i < slips->size(); ++i) {
          SlipEvent e;
          Section item(&(*slips)[i], "slips[" + std::to_string(i) + "]", errors);
          item.non_negative("t_start", e.t_start);
          long long leg = 0;
          item.integer("leg", leg);
          if (leg < 0 || leg >= kNumLegs) {
            errors.push_back("'slips[" + std::to_string(i) + "].leg' must be in [0, 3]");
          }
          e.leg = static_cast<int>(leg);
          item.vector<3>("velocity", e.velocity);
          item.positive("duration", e.duration);
          cfg.scenario.slips.events.push_back(e);
        }
      }
    }
    {
      Section ev = top.child("eval");
      ev.positive("rpe_delta", cfg.eval.rpe_delta);
      ev.positive("max_dt", cfg.eval.max_dt);
      std::string align;
      ev.string("align", align);
      if (root.contains("eval") && root["eval"].contains("align")) {
        check(errors, "'eval.align'", [&] { cfg.eval.align = parse_alignment(align); });
      }
    }
  }

  if (errors.empty()) {
    check(errors, "filter", [&] { cfg.filter.validate(); });
    check(errors, "robust", [&] { cfg.robust.validate(); });
    check(errors, "gait", [&] { cfg.scenario.gait.validate(); });
    for (const auto& p : cfg.filter.legs) {
      check(errors, "legs", [&] { p.validate(); });
    }
  }
  if (!errors.empty()) {
    throw ConfigError(std::move(errors));
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError({"cannot open '" + path.string() + "'"});
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const AppConfig& cfg) {
  const FilterConfig& f = cfg.filter;
  const Scenario& sc = cfg.scenario;
  const LegParams& leg0 = f.legs[0];
  json slips = json::array();
  for (const auto& e : sc.slips.events) {
    slips.push_back({{"t_start", e.t_start},
                     {"leg", e.leg},
                     {"velocity", vec_json(e.velocity)},
                     {"duration", e.duration}});
  }
  json initial_std = json::array();
  for (int i = 0; i < 9; ++i) {
    initial_std.push_back(std::sqrt(f.initial_cov[i]));
  }
  const json root = {
      {"schema_version", 1},
      {"seed", sc.settings.seed},
      {"gravity", vec_json(f.gravity)},
      {"motion_model", f.motion_model == MotionModel::exact ? "exact" : "approximate"},
      {"noise",
       {{"gyro_std", std_of(f.noise.gyro)},
        {"accel_std", std_of(f.noise.accel)},
        {"foot_std", std_of(f.noise.foot)},
        {"encoder_std", std_of(f.noise.encoder)},
        {"kinematics_std", std_of(f.noise.kinematics)}}},
      {"legs",
       {{"l_hip", leg0.l_hip},
        {"l_thigh", leg0.l_thigh},
        {"l_calf", leg0.l_calf},
        {"hip_x", std::abs(leg0.hip_offset.x())},
        {"hip_y", std::abs(leg0.hip_offset.y())}}},
      {"extrinsics",
       {{"rotation_rpy", vec_json(matrix_to_rpy(f.extrinsics.rot.matrix()))},
        {"translation", vec_json(f.extrinsics.trans)}}},
      {"filter",
       {{"initial_std", initial_std},
        {"new_contact_std", std::sqrt(f.new_contact_cov)},
        {"joseph_form", f.joseph_form},
        {"simplified_noise_map", f.simplified_noise_map},
        {"gyro_bias", vec_json(f.gyro_bias)},
        {"accel_bias", vec_json(f.accel_bias)}}},
      {"robust",
       {{"cost", to_string(cfg.robust.cost)},
        {"c", cfg.robust.c},
        {"irls_max_iters", cfg.robust.irls_max_iters},
        {"irls_tol", cfg.robust.irls_tol}}},
      {"sim",
       {{"horizon", sc.settings.horizon},
        {"imu_rate", sc.settings.imu_rate},
        {"joint_rate", sc.settings.joint_rate},
        {"stand_height", sc.settings.stand_height},
        {"noise_scale", sc.settings.noise_scale},
        {"motion",
         {{"initial_position", vec_json(sc.profile.initial_position)},
          {"initial_yaw", sc.profile.initial_yaw},
          {"forward_speed", sc.profile.forward_speed},
          {"turn_rate", sc.profile.turn_rate},
          {"x", sinusoids_json(sc.profile.x)},
          {"y", sinusoids_json(sc.profile.y)},
          {"z", sinusoids_json(sc.profile.z)},
          {"roll", sinusoids_json(sc.profile.roll)},
          {"pitch", sinusoids_json(sc.profile.pitch)},
          {"yaw", sinusoids_json(sc.profile.yaw)}}}}},
      {"gait",
       {{"type", sc.gait.type == GaitType::trot ? "trot" : "crawl"},
        {"period", sc.gait.period},
        {"duty", sc.gait.duty},
        {"step_length", sc.gait.step_length},
        {"step_height", sc.gait.step_height},
        {"offsets", sc.gait.offsets}}},
      {"slips", slips},
      {"eval",
       {{"rpe_delta", cfg.eval.rpe_delta},
        {"align", to_string(cfg.eval.align)},
        {"max_dt", cfg.eval.max_dt}}},
  };
  return root.dump(2) + "\n";
}

AppConfig default_config() {
  AppConfig cfg;
  cfg.scenario = default_scenario();
  return cfg;
}

std::string default_config_text() { return config_to_json(default_config()); }

}  // namespace rinekf
