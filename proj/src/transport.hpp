#pragma once

// Single-column transport: general rate model (GRM) with a linear isotherm,
// plus the reduced equilibrium-dispersive form used inside the sampler loop.
//
// Spatial discretization is finite volume with a Koren-limited upwind
// reconstruction for convection. Time stepping is an L-stable ESDIRK pair with
// embedded error control; stage equations are solved by simplified Newton
// iterations on a banded first-order-upwind Jacobian.

#include <cstddef>
#include <span>
#include <vector>

namespace smbbayes::transport {

struct ColumnGeometry {
  double length = 0.0;             // m
  double diameter = 0.0;           // m
  double particle_radius = 0.0;    // m
  double column_porosity = 0.0;    // ε_c
  double particle_porosity = 0.0;  // ε_p

  double total_porosity() const {
    return column_porosity + particle_porosity * (1.0 - column_porosity);
  }
  double cross_section() const;
  double volume() const { return length * cross_section(); }
  void validate() const;
};

struct TransportParams {
  double axial_dispersion = 0.0;            // m²/s
  std::vector<double> pore_diffusion;       // m²/s, per component
  std::vector<double> film_mass_transfer;   // m/s, per component
  double interstitial_velocity = 0.0;       // m/s

  void validate(std::size_t components) const;
};

/// Henry coefficients, weakest-retained component first.
struct LinearIsotherm {
  std::vector<double> henry;

  std::size_t components() const { return henry.size(); }
  void validate() const;
};

enum class ColumnMode { grm, edm_equilibrium };

struct Discretization {
  int axial_cells = 40;
  int radial_cells = 1;
  ColumnMode mode = ColumnMode::grm;
  double abs_tol = 1e-10;
  double rel_tol = 1e-6;
  double initial_step = 1e-14;  // s
  double max_step = 5e6;        // s

  void validate() const;
};

/// Geometry factors of the finite-volume grid. Radial shells are equidistant
/// in r; index 0 is the particle centre.
struct SpatialOperator {
  ColumnMode mode = ColumnMode::grm;
  int axial_cells = 0;
  int radial_cells = 0;
  double length = 0.0;
  double cell_width = 0.0;
  std::vector<double> cell_centers;
  std::vector<double> shell_volume;   // fraction of particle volume
  std::vector<double> shell_area;     // outer-face area per particle volume, 1/m
  double shell_spacing = 0.0;         // distance between shell centres, m

  int unknowns_per_cell() const {
    return mode == ColumnMode::grm ? 1 + radial_cells : 1;
  }
};

SpatialOperator build_grid(const ColumnGeometry& geometry, const Discretization& disc);

/// Uniformly sampled, piecewise-linear concentration history over [0, duration].
/// Sample k sits at t_k = k * duration / (samples - 1).
class TimeProfile {
 public:
  TimeProfile() = default;
  TimeProfile(std::size_t components, double duration, std::size_t samples);

  static TimeProfile constant(std::span<const double> values, double duration,
                              std::size_t samples = 2);

  std::size_t components() const { return components_; }
  std::size_t samples() const { return samples_; }
  double duration() const { return duration_; }
  double spacing() const { return duration_ / static_cast<double>(samples_ - 1); }
  double time(std::size_t k) const { return spacing() * static_cast<double>(k); }

  double& at(std::size_t k, std::size_t comp) { return data_[k * components_ + comp]; }
  double at(std::size_t k, std::size_t comp) const { return data_[k * components_ + comp]; }

  /// Linear interpolation; t is clamped to [0, duration].
  double value(std::size_t comp, double t) const;

  /// Composite trapezoid over all samples.
  double integral(std::size_t comp) const;

  double min_value() const;
  double max_value() const;

 private:
  std::size_t components_ = 0;
  std::size_t samples_ = 0;
  double duration_ = 0.0;
  std::vector<double> data_;
};

using InletProfile = TimeProfile;
using OutletProfile = TimeProfile;

/// Discrete column content. Particle and bound arrays are empty in
/// edm-equilibrium mode, where c_p = c and q = H c hold identically.
class ColumnState {
 public:
  ColumnState() = default;
  ColumnState(std::size_t components, const SpatialOperator& grid);

  std::size_t components() const { return components_; }
  int axial_cells() const { return axial_cells_; }
  int radial_cells() const { return radial_cells_; }
  bool has_particle_phase() const { return !particle_.empty(); }

  double& bulk(std::size_t comp, int z) { return bulk_[comp * axial_cells_ + z]; }
  double bulk(std::size_t comp, int z) const { return bulk_[comp * axial_cells_ + z]; }
  double& particle(std::size_t comp, int z, int r) { return particle_[index(comp, z, r)]; }
  double particle(std::size_t comp, int z, int r) const { return particle_[index(comp, z, r)]; }
  double& bound(std::size_t comp, int z, int r) { return bound_[index(comp, z, r)]; }
  double bound(std::size_t comp, int z, int r) const { return bound_[index(comp, z, r)]; }

  double time = 0.0;
  /// Last accepted step size; reused as the first trial step of the next call.
  double step_hint = 0.0;

  /// Moles of one component held in the column (liquid and solid).
  double holdup(std::size_t comp, const SpatialOperator& grid, const ColumnGeometry& geometry,
                const LinearIsotherm& isotherm) const;

  double min_bulk() const;

 private:
  std::size_t index(std::size_t comp, int z, int r) const {
    return (comp * axial_cells_ + z) * radial_cells_ + r;
  }

  std::size_t components_ = 0;
  int axial_cells_ = 0;
  int radial_cells_ = 0;
  std::vector<double> bulk_;
  std::vector<double> particle_;
  std::vector<double> bound_;
};

struct PeriodResult {
  ColumnState state;
  OutletProfile outlet;
  double min_concentration = 0.0;
  int accepted_steps = 0;
  int rejected_steps = 0;
};

/// One column under fixed flow conditions. Immutable after construction and
/// safe to share across threads.
class ColumnModel {
 public:
  ColumnModel(ColumnGeometry geometry, TransportParams params, LinearIsotherm isotherm,
              Discretization disc);

  const SpatialOperator& grid() const { return grid_; }
  const ColumnGeometry& geometry() const { return geometry_; }
  const LinearIsotherm& isotherm() const { return isotherm_; }
  const TransportParams& params() const { return params_; }
  const Discretization& discretization() const { return disc_; }

  ColumnState empty_state() const { return ColumnState(isotherm_.components(), grid_); }

  /// Advances `state` by `horizon` seconds with inlet concentrations `inlet`
  /// and records the outlet c(t, z=L) at `outlet_samples` uniform times
  /// (including both ends).
  PeriodResult integrate_period(const ColumnState& state, const InletProfile& inlet,
                                double horizon, std::size_t outlet_samples) const;

 private:
  ColumnGeometry geometry_;
  TransportParams params_;
  LinearIsotherm isotherm_;
  Discretization disc_;
  SpatialOperator grid_;
};

PeriodResult integrate_period(const ColumnState& state, const InletProfile& inlet,
                              const TransportParams& params, const LinearIsotherm& isotherm,
                              const ColumnGeometry& geometry, const Discretization& disc,
                              double horizon, std::size_t outlet_samples);

/// Settings that turn the GRM into its equilibrium-dispersive limit.
struct EdmLimitPreset {
  Discretization disc;
  double particle_porosity = 1e-5;
  double pore_diffusion = 5e-5;      // m²/s
  double film_mass_transfer = 1.6e4; // m/s
};

EdmLimitPreset edm_limit_preset();

}  // namespace smbbayes::transport
