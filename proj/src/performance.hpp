#pragma once

// Period-averaged port concentrations, purity / yield / productivity, the
// penalized objective and the likelihood built from it.

#include <cstddef>
#include <vector>

#include "network.hpp"
#include "transport.hpp"

namespace smbbayes::performance {

struct ObjectiveSpec {
  std::size_t extract_target = 1;    // fructose
  std::size_t raffinate_target = 0;  // glucose
  double extract_threshold = 0.99;
  double raffinate_threshold = 0.99;
  double penalty = 100.0;            // d_k

  void validate(std::size_t components) const;
};

struct PerformanceRecord {
  std::vector<double> extract_average;    // mol/m³ per component
  std::vector<double> raffinate_average;
  std::vector<double> extract_purity;
  std::vector<double> raffinate_purity;
  std::vector<double> extract_yield;
  std::vector<double> raffinate_yield;
  std::vector<double> extract_productivity;    // mol/(m³ s)
  std::vector<double> raffinate_productivity;
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
};

double period_average(const transport::OutletProfile& trace, std::size_t comp, double switch_time);

/// Fills the indicator part of the record. Throws Undefined if a port sees no solute.
PerformanceRecord indicators(std::span<const double> extract_average, std::span<const double> raffinate_average,
                             const network::ZonalFlowrates& flows, const network::OperatingPoint& op,
                             const network::NetworkConfig& config, const transport::ColumnGeometry& geometry);

struct ObjectiveValue {
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
};

ObjectiveValue objective(const PerformanceRecord& record, const ObjectiveSpec& spec);

/// Fills f, g, h in place.
void apply_objective(PerformanceRecord& record, const ObjectiveSpec& spec);

double log_likelihood(double h);

}  // namespace smbbayes::performance
