// rinekf: simulate -> filter -> evaluate.
//
// Errors are reported as one line on stderr ("error: <reason>") with a nonzero
// exit status. Diagnostics go through spdlog, level from ROBUST_INEKF_LOG_LEVEL.

#include "rinekf/config.hpp"
#include "rinekf/eval.hpp"
#include "rinekf/io.hpp"
#include "rinekf/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rinekf;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rinekf");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ROBUST_INEKF_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      throw UsageError("ROBUST_INEKF_LOG_LEVEL: unknown level '" + std::string(env) +
                       "' (trace|debug|info|warn|error|critical|off)");
    }
    spdlog::set_level(level);
  }
}

struct CommonOptions {
  std::string config;
  std::optional<long long> seed;
  std::optional<std::string> cost;
  std::optional<double> scale_c;
  std::optional<double> rpe_delta;
  std::optional<std::string> align;
  std::string out;
};

AppConfig resolve_config(const CommonOptions& opt) {
  AppConfig cfg = opt.config.empty() ? default_config() : load_config(opt.config);
  if (opt.seed) {
    if (*opt.seed < 0) {
      throw UsageError("--seed must be non-negative");
    }
    cfg.scenario.settings.seed = static_cast<std::uint64_t>(*opt.seed);
  }
  if (opt.cost) {
    cfg.robust.cost = parse_cost(*opt.cost);
  }
  if (opt.scale_c) {
    cfg.robust.c = *opt.scale_c;
  }
  if (opt.rpe_delta) {
    cfg.eval.rpe_delta = *opt.rpe_delta;
  }
  if (opt.align) {
    cfg.eval.align = parse_alignment(*opt.align);
  }
  cfg.robust.validate();
  return cfg;
}

fs::path sidecar_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".json");
  return p;
}

int cmd_simulate(const CommonOptions& opt) {
  const AppConfig cfg = resolve_config(opt);
  const fs::path dir(opt.out);
  fs::create_directories(dir);
  spdlog::info("simulating {:.1f} s, seed {}", cfg.scenario.settings.horizon,
               cfg.scenario.settings.seed);
  const SimOutput sim = simulate(cfg.scenario, cfg.filter);

  save_log(dir / "log.csv", sim.log);
  save_trajectory(dir / "ground_truth.txt", sim.ground_truth);

  json slips = json::array();
  for (const auto& s : sim.slips) {
    slips.push_back({{"t_start", s.event.t_start},
                     {"leg", s.event.leg},
                     {"duration", s.event.duration},
                     {"displacement", s.displacement}});
  }
  const json manifest = {
      {"command", "simulate"},
      {"schema_version", MeasurementLog::kSchemaVersion},
      {"seed", cfg.scenario.settings.seed},
      {"files", {{"log", "log.csv"}, {"ground_truth", "ground_truth.txt"}}},
      {"rows",
       {{"imu", sim.log.imu.size()},
        {"joints", sim.log.joints.size()},
        {"contacts", sim.log.contacts.size()},
        {"ground_truth", sim.ground_truth.size()}}},
      {"slips", slips},
      {"config", json::parse(config_to_json(cfg))},
  };
  save_text(dir / "scenario.json", manifest.dump(2) + "\n");
  spdlog::info("wrote {} IMU and {} joint records to {}", sim.log.imu.size(),
               sim.log.joints.size(), dir.string());
  return 0;
}

int cmd_filter(const CommonOptions& opt, const std::string& log_path) {
  const AppConfig cfg = resolve_config(opt);
  const MeasurementLog log = load_log(log_path);
  spdlog::info("filtering {} with cost={} c={}", log_path, to_string(cfg.robust.cost),
               cfg.robust.c);
  const FilterRunResult res = run_filter(log, cfg.filter, cfg.robust);
  const FilterRunStats& st = res.stats;
  for (const auto& w : st.warnings) {
    spdlog::warn("{}", w);
  }
  if (cfg.robust.cost != RobustCost::none) {
    const double mean_iters =
        st.irls_updates ? static_cast<double>(st.irls_iterations) / st.irls_updates : 0.0;
    spdlog::info("IRLS: {} updates, mean {:.2f} iterations, max {}, {} not converged, {} "
                 "ill-conditioned",
                 st.irls_updates, mean_iters, st.irls_max_iterations, st.irls_not_converged,
                 st.irls_ill_conditioned);
  }

  const fs::path out(opt.out);
  if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  save_trajectory(out, res.trajectory);
  const json manifest = {
      {"command", "filter"},
      {"log", log_path},
      {"cost", to_string(cfg.robust.cost)},
      {"c", cfg.robust.c},
      {"poses", res.trajectory.size()},
      {"timing", {{"wall_time_s", st.wall_time_s}}},
      {"stats",
       {{"predictions", st.predictions},
        {"substeps", st.substeps},
        {"updates_applied", st.updates_applied},
        {"updates_rejected", st.updates_rejected},
        {"contacts_added", st.contacts_added},
        {"contacts_removed", st.contacts_removed},
        {"irls_updates", st.irls_updates},
        {"irls_iterations", st.irls_iterations},
        {"irls_max_iterations", st.irls_max_iterations},
        {"irls_not_converged", st.irls_not_converged},
        {"irls_ill_conditioned", st.irls_ill_conditioned},
        {"warnings", st.warnings.size()}}},
  };
  save_text(sidecar_path(out), manifest.dump(2) + "\n");
  spdlog::info("wrote {} poses to {} in {:.2f} s", res.trajectory.size(), out.string(),
               st.wall_time_s);
  return 0;
}

struct MetricsRow {
  std::string name;
  double ate = 0.0;
  double rpe_trans = 0.0;
  double rpe_rot_deg = 0.0;
  std::size_t pairs = 0;
  std::size_t unpaired = 0;
  bool alignment_fallback = false;
};

std::string render_table(const std::vector<MetricsRow>& rows) {
  std::size_t width = 4;
  for (const auto& r : rows) {
    width = std::max(width, r.name.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "RMSE"
     << " | ATE | RPE trans | RPE rot\n";
  os << std::string(width, '-') << "-|-----|-----------|--------\n";
  os << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.name << " | " << r.ate << " | "
       << r.rpe_trans << " | " << r.rpe_rot_deg << '\n';
  }
  return os.str();
}

int cmd_evaluate(const CommonOptions& opt, const std::string& ref_path,
                 const std::vector<std::string>& est_paths) {
  const AppConfig cfg = resolve_config(opt);
  const Trajectory ref = load_trajectory(ref_path);
  std::vector<MetricsRow> rows;
  for (const auto& path : est_paths) {
    const Trajectory est = load_trajectory(path);
    const Association assoc = associate(est, ref, cfg.eval.max_dt);
    const AteResult a = ate(assoc, cfg.eval.align);
    const RpeResult r = rpe(assoc, cfg.eval.rpe_delta);
    if (a.alignment_fallback) {
      spdlog::warn("{}: degenerate trajectory, ATE computed without alignment", path);
    }
    rows.push_back({fs::path(path).stem().string(), a.rmse, r.trans_rmse, r.rot_rmse_deg,
                    assoc.pairs.size(), assoc.unpaired_est, a.alignment_fallback});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MetricsRow& a, const MetricsRow& b) { return a.ate < b.ate; });
  std::cout << render_table(rows);

  if (!opt.out.empty()) {
    json results = json::array();
    for (const auto& r : rows) {
      results.push_back({{"name", r.name},
                         {"ate_m", r.ate},
                         {"rpe_trans_m", r.rpe_trans},
                         {"rpe_rot_deg", r.rpe_rot_deg},
                         {"pairs", r.pairs},
                         {"unpaired", r.unpaired},
                         {"alignment_fallback", r.alignment_fallback}});
    }
    const json doc = {{"reference", ref_path},
                      {"align", to_string(cfg.eval.align)},
                      {"rpe_delta_m", cfg.eval.rpe_delta},
                      {"max_dt_s", cfg.eval.max_dt},
                      {"results", results}};
    const fs::path out(opt.out);
    if (out.has_parent_path()) {
      fs::create_directories(out.parent_path());
    }
    save_text(out, doc.dump(2) + "\n");
  }
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust invariant EKF for quadruped state estimation"};
  app.require_subcommand(1);
  CommonOptions opt;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON configuration (defaults built in)")
        ->check(CLI::ExistingFile);
  };

  auto* sim = app.add_subcommand("simulate", "Synthesize a measurement log and ground truth");
  add_config(sim);
  sim->add_option("--seed", opt.seed, "Override the configured seed");
  sim->add_option("--out", opt.out, "Output directory")->required();

  std::string log_path;
  auto* filt = app.add_subcommand("filter", "Run the filter over a measurement log");
  add_config(filt);
  filt->add_option("--log", log_path, "Measurement log")->required()->check(CLI::ExistingFile);
  filt->add_option("--cost", opt.cost, "none|huber|tukey");
  filt->add_option("--scale-c", opt.scale_c, "Robust scale c (whitened units)");
  filt->add_option("--seed", opt.seed, "Accepted for symmetry; the filter is deterministic");
  filt->add_option("--out", opt.out, "Estimated trajectory file")->required();

  std::string ref_path;
  std::vector<std::string> est_paths;
  auto* eval = app.add_subcommand("evaluate", "ATE and RPE of estimates against a reference");
  add_config(eval);
  eval->add_option("--ref", ref_path, "Reference trajectory")->required()->check(
      CLI::ExistingFile);
  eval->add_option("--est", est_paths, "Estimated trajectory (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--rpe-delta", opt.rpe_delta, "RPE distance in m");
  eval->add_option("--align", opt.align, "none|se3");
  eval->add_option("--out", opt.out, "Structured results (JSON)");

  auto* init = app.add_subcommand("init-config", "Write the default configuration");
  init->add_option("--out", opt.out, "Destination (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    setup_logging();
    if (*sim) {
      return cmd_simulate(opt);
    }
    if (*filt) {
      return cmd_filter(opt, log_path);
    }
    if (*eval) {
      return cmd_evaluate(opt, ref_path, est_paths);
    }
    if (*init) {
      if (opt.out.empty()) {
        std::cout << default_config_text();
      } else {
        save_text(opt.out, default_config_text());
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
