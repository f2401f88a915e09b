#pragma once

// Post-processing of posterior samples: triangle-theory coordinates, region
// labels, Pareto fronts, marginal densities, linear fits, PPC envelopes.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "network.hpp"
#include "transport.hpp"

namespace smbbayes::analysis {

// Letters follow the text of the study: A complete separation, B pure extract,
// C pure raffinate, D below the diagonal, E neither outlet pure.
enum class Region { A, B, C, D, E };

std::string_view region_name(Region r);

struct FlowrateRatios {
  std::array<double, 4> m{};  // m_I..m_IV

  double m1() const { return m[0]; }
  double m2() const { return m[1]; }
  double m3() const { return m[2]; }
  double m4() const { return m[3]; }
};

/// m_j = (t_s Q^j − ε_t V_c) / ((1 − ε_t) V_c), with V_c from the sampled L.
FlowrateRatios flowrate_ratios(const network::OperatingPoint& op, const transport::ColumnGeometry& geometry,
                               const network::ZonalFlowrates& flows);

/// Boundary points go to the non-A region.
Region classify_region(const FlowrateRatios& m, const transport::LinearIsotherm& isotherm);

/// Non-dominated flags when maximizing both coordinates. Points with a NaN
/// coordinate are never on the front. Equal points are all retained.
std::vector<bool> pareto_front(std::span<const std::pair<double, double>> points);

struct Density {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;

  double mode() const;
};

/// Gaussian KDE with Silverman's bandwidth 1.06 σ̂ k^(−1/5) on `points`
/// grid points over [min − 3h, max + 3h].
Density kernel_density(std::span<const double> samples, std::size_t points = 512);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
  double mode = 0.0;  // KDE mode, or the common value of identical samples
};

/// ceil(√k) equal-width bins, clamped to [1, 50].
Histogram difference_histogram(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Pointwise min/max over replicate profiles that share a cell layout.
struct Envelope {
  std::vector<double> coordinate;  // dimensionless train position in [0, 1]
  std::vector<std::vector<double>> lower;  // [component][point]
  std::vector<std::vector<double>> upper;
};

Envelope ppc_envelope(std::span<const network::AxialProfile> replicates);

}  // namespace smbbayes::analysis
