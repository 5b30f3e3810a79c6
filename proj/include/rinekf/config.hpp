/**
 * @file config.hpp
 * @brief JSON run configuration shared by the simulator, the filter and evaluation.
 *
 * Every key listed in default_config_text() is required except the sinusoid
 * lists under sim.motion. Unknown keys are errors. Units are SI; noise entries
 * are per-sample standard deviations of isotropic noise.
 */
#pragma once

#include "rinekf/eval.hpp"
#include "rinekf/pipeline.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rinekf {

struct EvalSettings {
  double rpe_delta = 1.0;  // m
  Alignment align = Alignment::se3;
  double max_dt = 0.01;    // s
};

struct AppConfig {
  FilterConfig filter;
  RobustConfig robust;
  Scenario scenario;
  EvalSettings eval;
};

/// Lists every problem found, joined into a single line by what().
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);

/// Serializes cfg in the format accepted by parse_config. Noise matrices are
/// written as the standard deviation of their first diagonal entry.
std::string config_to_json(const AppConfig& cfg);

AppConfig default_config();
std::string default_config_text();

}  // namespace rinekf
