// Python bindings for the rinekf core.

#include "rinekf/config.hpp"
#include "rinekf/eval.hpp"
#include "rinekf/io.hpp"
#include "rinekf/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace rinekf;

namespace {

using RowMatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Trajectory trajectory_from_arrays(const Eigen::VectorXd& t, const RowMatX& positions,
                                  const RowMatX& quaternions) {
  if (positions.rows() != t.size() || positions.cols() != 3 || quaternions.rows() != t.size() ||
      quaternions.cols() != 4) {
    throw std::invalid_argument("expected t (N,), positions (N, 3), quaternions (N, 4) xyzw");
  }
  Trajectory traj;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    Pose p;
    p.t = t[i];
    p.position = positions.row(i).transpose();
    p.orientation = Eigen::Quaterniond(quaternions(i, 3), quaternions(i, 0), quaternions(i, 1),
                                       quaternions(i, 2));
    traj.poses.push_back(p);
  }
  traj.validate(1e-6);
  return traj;
}

RowMatX positions_of(const Trajectory& traj) {
  RowMatX m(static_cast<Eigen::Index>(traj.size()), 3);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = traj.poses[i].position.transpose();
  }
  return m;
}

RowMatX quaternions_of(const Trajectory& traj) {
  RowMatX m(static_cast<Eigen::Index>(traj.size()), 4);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = traj.poses[i].orientation.coeffs().transpose();
  }
  return m;
}

Eigen::VectorXd times_of(const Trajectory& traj) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(traj.size()));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    t[static_cast<Eigen::Index>(i)] = traj.poses[i].t;
  }
  return t;
}

GroupElement element_from_matrix(const MatX& m) {
  const Eigen::Index n = m.rows();
  if (n != m.cols() || n < 5) {
    throw std::invalid_argument("expected a square (3+K)x(3+K) matrix with K >= 2");
  }
  return GroupElement(Rotation(Mat3(m.topLeftCorner<3, 3>())), m.topRightCorner(3, n - 3));
}

}  // namespace

PYBIND11_MODULE(_rinekf, m) {
  m.doc() = "Robust invariant EKF for legged-robot state estimation";

  py::register_exception<FilterError>(m, "FilterError", PyExc_RuntimeError);
  py::register_exception<SimError>(m, "SimError", PyExc_RuntimeError);
  py::register_exception<EvalError>(m, "EvalError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("hat3", &hat3);
  m.def("so3_exp", [](const Vec3& w) { return Mat3(so3_exp(w).matrix()); });
  m.def("so3_log", [](const Mat3& r) { return so3_log(Rotation(r)); });
  m.def("group_exp", [](const VecX& xi) { return group_exp(xi).matrix(); });
  m.def("group_log", [](const MatX& x) { return group_log(element_from_matrix(x)); });
  m.def("group_adjoint", [](const MatX& x) { return element_from_matrix(x).adjoint(); });

  m.def("huber_rho", &huber_rho, py::arg("r"), py::arg("c"));
  m.def("huber_weight", &huber_weight, py::arg("r"), py::arg("c"));
  m.def("tukey_rho", &tukey_rho, py::arg("r"), py::arg("c"));
  m.def("tukey_weight", &tukey_weight, py::arg("r"), py::arg("c"));

  m.def("forward_kinematics", [](const Vec3& q, int leg) {
    return forward_kinematics(q, default_leg_params(leg));
  }, py::arg("q"), py::arg("leg"));

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init(&trajectory_from_arrays), py::arg("t"), py::arg("positions"),
           py::arg("quaternions"))
      .def("__len__", &Trajectory::size)
      .def_property_readonly("t", &times_of)
      .def_property_readonly("positions", &positions_of)
      .def_property_readonly("quaternions", &quaternions_of);

  py::class_<MeasurementLog>(m, "MeasurementLog")
      .def_property_readonly("num_imu", [](const MeasurementLog& l) { return l.imu.size(); })
      .def_property_readonly("num_joints", [](const MeasurementLog& l) { return l.joints.size(); })
      .def_property_readonly("has_initial_state",
                             [](const MeasurementLog& l) { return l.initial.has_value(); });

  py::class_<AppConfig>(m, "Config")
      .def(py::init(&default_config))
      .def_static("from_json", [](const std::string& text) { return parse_config(text); })
      .def_static("load", &load_config)
      .def("to_json", &config_to_json)
      .def_property("seed",
                    [](const AppConfig& c) { return c.scenario.settings.seed; },
                    [](AppConfig& c, std::uint64_t s) { c.scenario.settings.seed = s; })
      .def_property("horizon",
                    [](const AppConfig& c) { return c.scenario.settings.horizon; },
                    [](AppConfig& c, double h) { c.scenario.settings.horizon = h; })
      .def_property_readonly("num_slips",
                             [](const AppConfig& c) { return c.scenario.slips.events.size(); })
      .def("trim_slips", [](AppConfig& c) {
        std::erase_if(c.scenario.slips.events, [&](const SlipEvent& e) {
          return e.t_start + e.duration > c.scenario.settings.horizon;
        });
      }, "Drops slip events that do not finish within the horizon.")
      .def_property("cost",
                    [](const AppConfig& c) { return to_string(c.robust.cost); },
                    [](AppConfig& c, const std::string& s) { c.robust.cost = parse_cost(s); })
      .def_property("scale_c",
                    [](const AppConfig& c) { return c.robust.c; },
                    [](AppConfig& c, double v) {
                      c.robust.c = v;
                      c.robust.validate();
                    });

  m.def("default_config_text", &default_config_text);

  m.def("simulate", [](const AppConfig& cfg) {
    py::gil_scoped_release release;
    SimOutput out = simulate(cfg.scenario, cfg.filter);
    return std::make_pair(std::move(out.log), std::move(out.ground_truth));
  }, py::arg("config"), "Returns (log, ground_truth).");

  m.def("run_filter", [](const MeasurementLog& log, const AppConfig& cfg) {
    py::gil_scoped_release release;
    return run_filter(log, cfg.filter, cfg.robust).trajectory;
  }, py::arg("log"), py::arg("config"));

  m.def("ate", [](const Trajectory& est, const Trajectory& ref, const std::string& align,
                  double max_dt) {
    return ate(est, ref, parse_alignment(align), max_dt).rmse;
  }, py::arg("est"), py::arg("ref"), py::arg("align") = "se3", py::arg("max_dt") = 0.01);

  m.def("rpe", [](const Trajectory& est, const Trajectory& ref, double delta, double max_dt) {
    const RpeResult r = rpe(est, ref, delta, max_dt);
    return std::make_pair(r.trans_rmse, r.rot_rmse_deg);
  }, py::arg("est"), py::arg("ref"), py::arg("delta") = 1.0, py::arg("max_dt") = 0.01,
     "Returns (translation RMSE in m, rotation RMSE in deg).");

  m.def("save_log", &save_log);
  m.def("load_log", &load_log);
  m.def("save_trajectory", &save_trajectory);
  m.def("load_trajectory", &load_trajectory);
}
