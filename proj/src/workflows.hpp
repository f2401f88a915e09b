#pragma once

// The three user-facing workflows: forward simulation, posterior sampling and
// post-analysis of a sample store.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "config.hpp"
#include "network.hpp"
#include "performance.hpp"
#include "sampler.hpp"

namespace smbbayes::workflows {

struct PointResult {
  network::CssResult css;
  network::ZonalFlowrates flows;
  performance::PerformanceRecord record;
  analysis::FlowrateRatios ratios;
  analysis::Region region = analysis::Region::A;
  bool degenerate = false;  // a port saw no solute; indicators are zero
};

/// CSS simulation plus indicators at one operating point. Throws on
/// infeasible flows, integrator failure or a missed CSS.
PointResult evaluate_point(const config::RunConfig& config, const network::OperatingPoint& op);

/// Posterior target; failures map to log-posterior −∞.
sampler::Evaluation evaluate_target(const config::RunConfig& config, const sampler::Vector& theta);

/// Names of the model outputs stored with every sample.
std::vector<std::string> extras_names(const config::RunConfig& config);

/// Header names of θ columns, with SI units.
std::vector<std::string> parameter_columns();

struct SimulateSummary {
  bool converged = false;
  bool degenerate = false;
  int switches = 0;
  double metric = 0.0;
};

/// Writes chromatogram.csv, port_traces.csv and performance.json into `out_dir`.
SimulateSummary cmd_simulate(const config::RunConfig& config, const network::OperatingPoint& op,
                             const std::string& out_dir);

struct SampleOptions {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string resume_path;  // checkpoint to continue from
  int max_rounds = -1;      // stop early after this many monitoring rounds (checkpoint kept)
};

struct SampleSummary {
  bool finished = false;
  bool converged = false;
  long samples_per_chain = 0;
  std::vector<double> rhat;
};

SampleSummary cmd_sample(const config::RunConfig& config, const std::string& out_dir, const SampleOptions& options);

std::vector<std::string> analysis_names();

/// Runs the named analyses ("all" expands to every analysis) on the store in
/// `store_dir`, which is either a sampling output or a simulate output.
void cmd_analyze(const config::RunConfig& config, const std::string& store_dir,
                 const std::vector<std::string>& analyses, const std::string& out_dir, int threads = 1);

/// Pooled post-burn-in samples of a store.
struct StoredSamples {
  std::vector<std::string> extras;
  std::vector<int> chain;
  std::vector<long> iteration;
  std::vector<network::OperatingPoint> theta;
  std::vector<double> log_posterior;
  std::vector<std::vector<double>> values;  // [extra][sample]
  int burn_in = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return theta.size(); }
  const std::vector<double>& extra(const std::string& name) const;
};

StoredSamples load_store(const std::string& store_dir);

}  // namespace smbbayes::workflows
