#pragma once

// Run configuration: JSON (de)serialization with field-path errors, and the
// bundled presets.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "network.hpp"
#include "performance.hpp"

namespace smbbayes::config {

struct SamplerConfig {
  network::ParameterBounds bounds;
  int chains = 2;
  int budget = 400;
  int burn_in = 50;
  std::optional<double> burn_in_fraction;  // overrides burn_in when set
  double rhat_threshold = 1.1;
  bool stop_on_convergence = true;
  std::uint64_t seed = 20240501;
  int monitor_interval = 10;
  int adapt_interval = 50;
  bool adapt = true;
  bool delayed_rejection = true;
  double dr_shrink = 0.1;
  std::string initial_covariance = "fisher";  // fisher | box | pilot
  double sigma0 = 1.0;
  double fisher_step = 1e-4;
  double box_fraction = 0.05;
  int pilot_samples = 50;
  double regularization = 1e-12;
  std::string initial_points = "random";  // random | reference
  double credible_level = 0.66;
  int ppc_replicates = 30;

  int effective_burn_in() const;
  void validate() const;
};

struct RunConfig {
  std::vector<std::string> components{"glucose", "fructose"};
  network::Plant plant;
  network::OperatingPoint operating_point;
  performance::ObjectiveSpec objective;
  SamplerConfig sampler;
  std::string output_dir = "out";

  void validate() const;
};

std::vector<std::string> preset_names();
/// Throws InvalidInput for an unknown name.
RunConfig preset(std::string_view name);

/// Fields missing from `json` keep the values of `base`.
RunConfig from_json(const nlohmann::json& json, const RunConfig& base);
RunConfig from_json(const nlohmann::json& json);
nlohmann::json to_json(const RunConfig& config);

RunConfig load_file(const std::string& path);
RunConfig parse_string(std::string_view text);
std::string dump(const RunConfig& config);

std::string_view mode_name(transport::ColumnMode mode);

}  // namespace smbbayes::config
