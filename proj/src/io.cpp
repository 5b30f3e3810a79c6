#include "rinekf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace rinekf {

namespace {

constexpr std::string_view kLogMagic = "#rinekf-log";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      ++i;
    }
    if (i > start) {
      out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw FormatError("line " + std::to_string(line_no) + ": " + msg);
}

double parse_number(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(line_no, "invalid number '" + std::string(s) + "'");
  }
  return v;
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t n, std::size_t line_no) {
  if (f.size() != n) {
    fail(line_no, std::string(f.front()) + " record needs " + std::to_string(n - 1) +
                      " fields, got " + std::to_string(f.size() - 1));
  }
}

void check_order(double t, double& last, const char* stream, std::size_t line_no) {
  if (!(t > last)) {
    fail(line_no, std::string(stream) + " timestamps must be strictly increasing");
  }
  last = t;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open '" + path.string() + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open '" + path.string() + "'");
  }
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_log(std::ostream& out, const MeasurementLog& log) {
  out << kLogMagic << ",schema=" << MeasurementLog::kSchemaVersion
      << ",imu_rate=" << format_double(log.imu_rate)
      << ",joint_rate=" << format_double(log.joint_rate) << '\n';
  auto vec = [&](const Vec3& v) {
    for (int i = 0; i < 3; ++i) {
      out << ',' << format_double(v[i]);
    }
  };
  if (log.initial) {
    const auto& init = *log.initial;
    const Eigen::Quaterniond q = Eigen::Quaterniond(init.rot.matrix()).normalized();
    out << "INIT," << format_double(init.t);
    vec(init.position);
    out << ',' << format_double(q.x()) << ',' << format_double(q.y()) << ','
        << format_double(q.z()) << ',' << format_double(q.w());
    vec(init.velocity);
    out << '\n';
  }
  if (log.joints.size() != log.contacts.size()) {
    throw FormatError("write_log: joint and contact streams differ in length");
  }
  // Merge by time; at equal t the IMU interval ending at t comes first.
  std::size_t i = 0, j = 0;
  while (i < log.imu.size() || j < log.joints.size()) {
    const bool take_imu =
        j >= log.joints.size() || (i < log.imu.size() && log.imu[i].t <= log.joints[j].t);
    if (take_imu) {
      const ImuSample& s = log.imu[i++];
      out << "IMU," << format_double(s.t);
      vec(s.omega);
      vec(s.accel);
      out << '\n';
    } else {
      const JointRecord& jr = log.joints[j];
      const ContactRecord& cr = log.contacts[j];
      ++j;
      out << "JNT," << format_double(jr.t);
      for (const auto& q : jr.q) {
        vec(q);
      }
      out << "\nCNT," << format_double(cr.t);
      for (bool c : cr.in_contact) {
        out << ',' << (c ? 1 : 0);
      }
      out << '\n';
    }
  }
}

MeasurementLog read_log(std::istream& in) {
  MeasurementLog log;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  double last_imu = -INFINITY, last_jnt = -INFINITY, last_cnt = -INFINITY, last_any = -INFINITY;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim_cr(raw);
    if (line.empty()) {
      continue;
    }
    const auto f = split(line, ',');
    if (!header) {
      if (f.front() != kLogMagic) {
        fail(line_no, "missing '#rinekf-log' header");
      }
      bool have_schema = false;
      for (std::size_t k = 1; k < f.size(); ++k) {
        const auto eq = f[k].find('=');
        if (eq == std::string_view::npos) {
          fail(line_no, "malformed header field '" + std::string(f[k]) + "'");
        }
        const auto key = f[k].substr(0, eq);
        const double v = parse_number(f[k].substr(eq + 1), line_no);
        if (key == "schema") {
          if (v != MeasurementLog::kSchemaVersion) {
            fail(line_no, "unsupported schema version " + std::string(f[k].substr(eq + 1)));
          }
          have_schema = true;
        } else if (key == "imu_rate") {
          log.imu_rate = v;
        } else if (key == "joint_rate") {
          log.joint_rate = v;
        } else {
          fail(line_no, "unknown header field '" + std::string(key) + "'");
        }
      }
      if (!have_schema) {
        fail(line_no, "header lacks schema version");
      }
      header = true;
      continue;
    }
    if (line.front() == '#') {
      continue;
    }
    const std::string_view tag = f.front();
    if (tag == "IMU") {
      expect_fields(f, 8, line_no);
      ImuSample s;
      s.t = parse_number(f[1], line_no);
      check_order(s.t, last_imu, "IMU", line_no);
      for (int k = 0; k < 3; ++k) {
        s.omega[k] = parse_number(f[2 + static_cast<std::size_t>(k)], line_no);
        s.accel[k] = parse_number(f[5 + static_cast<std::size_t>(k)], line_no);
      }
      log.imu.push_back(s);
      if (s.t < last_any) {
        fail(line_no, "records are not sorted by time");
      }
      last_any = s.t;
    } else if (tag == "JNT") {
      expect_fields(f, 14, line_no);
      JointRecord jr;
      jr.t = parse_number(f[1], line_no);
      check_order(jr.t, last_jnt, "JNT", line_no);
      for (std::size_t k = 0; k < 12; ++k) {
        jr.q[k / 3][static_cast<Eigen::Index>(k % 3)] = parse_number(f[2 + k], line_no);
      }
      log.joints.push_back(jr);
      if (jr.t < last_any) {
        fail(line_no, "records are not sorted by time");
      }
      last_any = jr.t;
    } else if (tag == "CNT") {
      expect_fields(f, 6, line_no);
      ContactRecord cr;
      cr.t = parse_number(f[1], line_no);
      check_order(cr.t, last_cnt, "CNT", line_no);
      for (std::size_t k = 0; k < 4; ++k) {
        if (f[2 + k] == "1") {
          cr.in_contact[k] = true;
        } else if (f[2 + k] != "0") {
          fail(line_no, "contact flag must be 0 or 1");
        }
      }
      log.contacts.push_back(cr);
      if (cr.t < last_any) {
        fail(line_no, "records are not sorted by time");
      }
      last_any = cr.t;
    } else if (tag == "INIT") {
      expect_fields(f, 12, line_no);
      if (log.initial || !log.imu.empty() || !log.joints.empty() || !log.contacts.empty()) {
        fail(line_no, "INIT must be the first record");
      }
      double v[11];
      for (std::size_t k = 0; k < 11; ++k) {
        v[k] = parse_number(f[1 + k], line_no);
      }
      const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
      if (std::abs(q.norm() - 1.0) > 1e-6) {
        fail(line_no, "INIT quaternion is not normalized");
      }
      InitialState init;
      init.t = v[0];
      init.position = Vec3(v[1], v[2], v[3]);
      init.rot = Rotation::unchecked(q.normalized().toRotationMatrix()).normalized();
      init.velocity = Vec3(v[8], v[9], v[10]);
      log.initial = init;
      last_any = init.t;
    } else {
      fail(line_no, "unknown record tag '" + std::string(tag) + "'");
    }
  }
  if (!header) {
    throw FormatError("empty measurement log");
  }
  if (log.joints.size() != log.contacts.size()) {
    throw FormatError("JNT and CNT record counts differ");
  }
  for (std::size_t k = 0; k < log.joints.size(); ++k) {
    if (log.joints[k].t != log.contacts[k].t) {
      throw FormatError("JNT/CNT timestamps differ at record " + std::to_string(k));
    }
  }
  return log;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "# t x y z qx qy qz qw\n";
  for (const Pose& p : traj.poses) {
    out << format_double(p.t) << ' ' << format_double(p.position.x()) << ' '
        << format_double(p.position.y()) << ' ' << format_double(p.position.z()) << ' '
        << format_double(p.orientation.x()) << ' ' << format_double(p.orientation.y()) << ' '
        << format_double(p.orientation.z()) << ' ' << format_double(p.orientation.w()) << '\n';
  }
}

Trajectory read_trajectory(std::istream& in) {
  Trajectory traj;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim_cr(raw);
    const auto f = split_ws(line);
    if (f.empty() || f.front().front() == '#') {
      continue;
    }
    if (f.size() != 8) {
      fail(line_no, "trajectory rows need 8 fields, got " + std::to_string(f.size()));
    }
    double v[8];
    for (std::size_t k = 0; k < 8; ++k) {
      v[k] = parse_number(f[k], line_no);
    }
    Pose p;
    p.t = v[0];
    p.position = Vec3(v[1], v[2], v[3]);
    p.orientation = Eigen::Quaterniond(v[7], v[4], v[5], v[6]);
    if (std::abs(p.orientation.norm() - 1.0) > 1e-6) {
      fail(line_no, "quaternion is not normalized");
    }
    p.orientation.normalize();
    if (!traj.empty() && !(p.t > traj.poses.back().t)) {
      fail(line_no, "timestamps must be strictly increasing");
    }
    traj.poses.push_back(p);
  }
  return traj;
}

void save_log(const std::filesystem::path& path, const MeasurementLog& log) {
  auto out = open_out(path);
  write_log(out, log);
  if (!out) {
    throw FormatError("write failed for '" + path.string() + "'");
  }
}

MeasurementLog load_log(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_log(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory(out, traj);
  if (!out) {
    throw FormatError("write failed for '" + path.string() + "'");
  }
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trajectory(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) {
    throw FormatError("write failed for '" + path.string() + "'");
  }
}

}  // namespace rinekf
