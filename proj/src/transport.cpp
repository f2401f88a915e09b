#include "transport.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "banded.hpp"
#include "errors.hpp"

namespace smbbayes::transport {

double ColumnGeometry::cross_section() const {
  return std::numbers::pi * diameter * diameter / 4.0;
}

void ColumnGeometry::validate() const {
  if (!(length > 0.0)) throw InvalidInput(fmt::format("column length must be > 0 (got {})", length));
  if (!(diameter > 0.0)) throw InvalidInput(fmt::format("column diameter must be > 0 (got {})", diameter));
  if (!(particle_radius > 0.0))
    throw InvalidInput(fmt::format("particle radius must be > 0 (got {})", particle_radius));
  if (!(column_porosity > 0.0 && column_porosity < 1.0))
    throw InvalidInput(fmt::format("column porosity must lie in (0, 1) (got {})", column_porosity));
  if (!(particle_porosity >= 0.0 && particle_porosity < 1.0))
    throw InvalidInput(fmt::format("particle porosity must lie in [0, 1) (got {})", particle_porosity));
}

void TransportParams::validate(std::size_t components) const {
  if (!(axial_dispersion > 0.0))
    throw InvalidInput(fmt::format("axial dispersion must be > 0 (got {})", axial_dispersion));
  if (!(interstitial_velocity > 0.0))
    throw InvalidInput(fmt::format("interstitial velocity must be > 0 (got {})", interstitial_velocity));
  if (pore_diffusion.size() != components || film_mass_transfer.size() != components)
    throw InvalidInput("pore diffusion and film transfer need one value per component");
  for (std::size_t i = 0; i < components; ++i) {
    if (!(pore_diffusion[i] > 0.0)) throw InvalidInput("pore diffusion must be > 0");
    if (!(film_mass_transfer[i] > 0.0)) throw InvalidInput("film mass transfer must be > 0");
  }
}

void LinearIsotherm::validate() const {
  if (henry.empty()) throw InvalidInput("isotherm needs at least one component");
  for (std::size_t i = 0; i < henry.size(); ++i) {
    if (!(henry[i] >= 0.0) || !std::isfinite(henry[i]))
      throw InvalidInput(fmt::format("Henry coefficient {} must be finite and >= 0", i));
    if (i > 0 && henry[i] < henry[i - 1])
      throw InvalidInput("Henry coefficients must be sorted ascending (weak component first)");
  }
}

void Discretization::validate() const {
  if (axial_cells < 2) throw InvalidInput(fmt::format("axial cell count must be >= 2 (got {})", axial_cells));
  if (radial_cells < 1) throw InvalidInput(fmt::format("radial cell count must be >= 1 (got {})", radial_cells));
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidInput("integrator tolerances must be > 0");
  if (!(initial_step > 0.0) || !(max_step > 0.0)) throw InvalidInput("integrator step sizes must be > 0");
}

SpatialOperator build_grid(const ColumnGeometry& geometry, const Discretization& disc) {
  disc.validate();
  if (!(geometry.length > 0.0)) throw InvalidInput("column length must be > 0");
  SpatialOperator op;
  op.mode = disc.mode;
  op.axial_cells = disc.axial_cells;
  op.radial_cells = disc.radial_cells;
  op.length = geometry.length;
  op.cell_width = geometry.length / disc.axial_cells;
  op.cell_centers.resize(disc.axial_cells);
  for (int z = 0; z < disc.axial_cells; ++z) op.cell_centers[z] = (z + 0.5) * op.cell_width;

  const double rp = geometry.particle_radius;
  const int nr = disc.radial_cells;
  const double dr = rp / nr;
  op.shell_spacing = dr;
  op.shell_volume.resize(nr);
  op.shell_area.resize(nr);
  for (int k = 0; k < nr; ++k) {
    const double r0 = k * dr;
    const double r1 = (k + 1) * dr;
    op.shell_volume[k] = (r1 * r1 * r1 - r0 * r0 * r0) / (rp * rp * rp);
    op.shell_area[k] = 3.0 * r1 * r1 / (rp * rp * rp);
  }
  return op;
}

// ---------------------------------------------------------------------------
// TimeProfile

TimeProfile::TimeProfile(std::size_t components, double duration, std::size_t samples)
    : components_(components), samples_(samples), duration_(duration),
      data_(components * samples, 0.0) {
  if (samples < 2) throw InvalidInput("a time profile needs at least two samples");
  if (!(duration > 0.0)) throw InvalidInput("a time profile needs a positive duration");
}

TimeProfile TimeProfile::constant(std::span<const double> values, double duration,
                                  std::size_t samples) {
  TimeProfile p(values.size(), duration, samples);
  for (std::size_t k = 0; k < samples; ++k)
    for (std::size_t i = 0; i < values.size(); ++i) p.at(k, i) = values[i];
  return p;
}

double TimeProfile::value(std::size_t comp, double t) const {
  if (t <= 0.0) return at(0, comp);
  if (t >= duration_) return at(samples_ - 1, comp);
  const double s = t / spacing();
  std::size_t k = static_cast<std::size_t>(s);
  if (k >= samples_ - 1) k = samples_ - 2;
  const double w = s - static_cast<double>(k);
  return (1.0 - w) * at(k, comp) + w * at(k + 1, comp);
}

double TimeProfile::integral(std::size_t comp) const {
  double sum = 0.5 * (at(0, comp) + at(samples_ - 1, comp));
  for (std::size_t k = 1; k + 1 < samples_; ++k) sum += at(k, comp);
  return sum * spacing();
}

double TimeProfile::min_value() const {
  return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double TimeProfile::max_value() const {
  return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

// ---------------------------------------------------------------------------
// ColumnState

ColumnState::ColumnState(std::size_t components, const SpatialOperator& grid)
    : components_(components), axial_cells_(grid.axial_cells),
      radial_cells_(grid.mode == ColumnMode::grm ? grid.radial_cells : 0),
      bulk_(components * grid.axial_cells, 0.0) {
  if (grid.mode == ColumnMode::grm) {
    particle_.assign(components * grid.axial_cells * grid.radial_cells, 0.0);
    bound_.assign(particle_.size(), 0.0);
  }
}

double ColumnState::holdup(std::size_t comp, const SpatialOperator& grid,
                           const ColumnGeometry& geometry, const LinearIsotherm& isotherm) const {
  const double ec = geometry.column_porosity;
  double sum = 0.0;
  if (has_particle_phase()) {
    const double ep = geometry.particle_porosity;
    for (int z = 0; z < axial_cells_; ++z) {
      double particle_total = 0.0;
      for (int r = 0; r < radial_cells_; ++r)
        particle_total += grid.shell_volume[r] * (ep * particle(comp, z, r) + (1.0 - ep) * bound(comp, z, r));
      sum += ec * bulk(comp, z) + (1.0 - ec) * particle_total;
    }
  } else {
    const double et = geometry.total_porosity();
    const double capacity = et + (1.0 - et) * isotherm.henry[comp];
    for (int z = 0; z < axial_cells_; ++z) sum += capacity * bulk(comp, z);
  }
  return sum * grid.cell_width * geometry.cross_section();
}

double ColumnState::min_bulk() const {
  return bulk_.empty() ? 0.0 : *std::min_element(bulk_.begin(), bulk_.end());
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

// ESDIRK part of ARK3(2)4L[2]SA (Kennedy & Carpenter): L-stable, stiffly
// accurate, explicit first stage, embedded second-order weights.
struct Ark324 {
  static constexpr int stages = 4;
  static constexpr double gamma = 1767732205903.0 / 4055673282236.0;
  static constexpr std::array<double, 4> c = {0.0, 1767732205903.0 / 2027836641118.0, 3.0 / 5.0, 1.0};
  static constexpr std::array<std::array<double, 4>, 4> ae = {{
      {0.0, 0.0, 0.0, 0.0},
      {1767732205903.0 / 2027836641118.0, 0.0, 0.0, 0.0},
      {5535828885825.0 / 10492691773637.0, 788022342437.0 / 10882634858940.0, 0.0, 0.0},
      {6485989280629.0 / 16251701735622.0, -4246266847089.0 / 9704473918619.0,
       10755448449292.0 / 10357097424841.0, 0.0},
  }};
  static constexpr std::array<double, 4> b = {
      1471266399579.0 / 7840856788654.0, -4482444167858.0 / 7529755066697.0,
      11266239266428.0 / 11593286722821.0, 1767732205903.0 / 4055673282236.0};
  static constexpr std::array<std::array<double, 4>, 4> ai = {{
      {0.0, 0.0, 0.0, 0.0},
      {gamma, gamma, 0.0, 0.0},
      {2746238789719.0 / 10658868560708.0, -640167445237.0 / 6845629431997.0, gamma, 0.0},
      {b[0], b[1], b[2], gamma},
  }};
  static constexpr std::array<double, 4> b_embedded = {
      2756255671327.0 / 12835298489170.0, -10771552573575.0 / 22201958757719.0,
      9247589265047.0 / 10645013368117.0, 2193209047091.0 / 5459859503100.0};
};

double koren_face(double upwind2, double upwind, double downwind) {
  const double dm = upwind - upwind2;
  const double dp = downwind - upwind;
  if (dm * dp <= 0.0) return upwind;
  const double r = dp / dm;
  const double phi = std::max(0.0, std::min({2.0 * r, (1.0 + 2.0 * r) / 3.0, 2.0}));
  return upwind + 0.5 * phi * dm;
}

// Semi-discrete system for one component.
class ComponentSystem {
 public:
  ComponentSystem(const SpatialOperator& grid, const ColumnGeometry& geometry,
                  const TransportParams& params, double henry, std::size_t comp)
      : nz_(grid.axial_cells), stride_(grid.unknowns_per_cell()), n_(nz_ * stride_) {
    const double dz = grid.cell_width;
    double capacity = 1.0;
    double velocity = params.interstitial_velocity;
    if (grid.mode == ColumnMode::edm_equilibrium) {
      const double et = geometry.total_porosity();
      capacity = 1.0 + (1.0 - et) / et * henry;
      // Molar flux must stay Q*c when ε_t differs from ε_c.
      velocity *= geometry.column_porosity / et;
    }
    convection_ = velocity / (dz * capacity);
    const double dispersion = params.axial_dispersion / (dz * dz * capacity);

    implicit_ = detail::BandMatrix(n_, stride_, stride_);
    for (int z = 0; z < nz_; ++z) {
      const std::size_t row = bulk_index(z);
      if (z > 0) {
        implicit_(row, bulk_index(z - 1)) += dispersion;
        implicit_(row, row) -= dispersion;
      }
      if (z + 1 < nz_) {
        implicit_(row, bulk_index(z + 1)) += dispersion;
        implicit_(row, row) -= dispersion;
      }
    }
    if (grid.mode == ColumnMode::grm) add_particle_terms(grid, geometry, params, henry, comp);

    newton_ = implicit_;
    for (int z = 0; z < nz_; ++z) {
      newton_(bulk_index(z), bulk_index(z)) -= convection_;
      if (z > 0) newton_(bulk_index(z), bulk_index(z - 1)) += convection_;
    }
  }

  void add_particle_terms(const SpatialOperator& grid, const ColumnGeometry& geometry,
                          const TransportParams& params, double henry, std::size_t comp) {

    const int nr = grid.radial_cells;
    const double ec = geometry.column_porosity;
    const double ep = geometry.particle_porosity;
    const double rp = geometry.particle_radius;
    const double kf = params.film_mass_transfer[comp];
    const double dp = params.pore_diffusion[comp];
    const double beta = ep + (1.0 - ep) * henry;
    if (!(beta > 0.0)) throw InvalidInput("GRM needs a positive particle capacity (ε_p or H must be > 0)");
    const double film_bulk = (1.0 - ec) / ec * 3.0 / rp * kf;
    const double pore = ep * dp / grid.shell_spacing;

    for (int z = 0; z < nz_; ++z) {
      const std::size_t c = bulk_index(z);
      implicit_(c, c) -= film_bulk;
      implicit_(c, shell_index(z, nr - 1, nr)) += film_bulk;
      for (int k = 0; k < nr; ++k) {
        const std::size_t p = shell_index(z, k, nr);
        const double scale = 1.0 / (beta * grid.shell_volume[k]);
        if (k == nr - 1) {
          const double rate = grid.shell_area[k] * kf * scale;
          implicit_(p, c) += rate;
          implicit_(p, p) -= rate;
        } else {
          const double rate = grid.shell_area[k] * pore * scale;
          implicit_(p, shell_index(z, k + 1, nr)) += rate;
          implicit_(p, p) -= rate;
        }
        if (k > 0) {
          const double rate = grid.shell_area[k - 1] * pore * scale;
          implicit_(p, shell_index(z, k - 1, nr)) += rate;
          implicit_(p, p) -= rate;
        }
      }
    }
  }

  std::size_t size() const { return n_; }
  int axial_cells() const { return nz_; }
  std::size_t bulk_index(int z) const { return static_cast<std::size_t>(z) * stride_; }
  // Shells are stored outermost first, right after the bulk entry of the cell.
  std::size_t shell_index(int z, int k, int nr) const {
    return static_cast<std::size_t>(z) * stride_ + 1 + static_cast<std::size_t>(nr - 1 - k);
  }
  std::size_t outlet_index() const { return bulk_index(nz_ - 1); }

  void explicit_rhs(double inlet, std::span<const double> y, std::span<double> f) const {
    std::fill(f.begin(), f.end(), 0.0);
    double upstream_face = inlet;
    for (int z = 0; z < nz_; ++z) {
      const double cz = y[bulk_index(z)];
      double face;
      if (z == 0 || z + 1 == nz_) {
        face = cz;
      } else {
        face = koren_face(y[bulk_index(z - 1)], cz, y[bulk_index(z + 1)]);
      }
      f[bulk_index(z)] = convection_ * (upstream_face - face);
      upstream_face = face;
    }
  }

  const detail::BandMatrix& implicit() const { return implicit_; }
  const detail::BandMatrix& newton_matrix() const { return newton_; }

 private:
  int nz_;
  std::size_t stride_;
  std::size_t n_;
  double convection_ = 0.0;
  detail::BandMatrix implicit_;
  detail::BandMatrix newton_;
};

struct IntegrationStats {
  int accepted = 0;
  int rejected = 0;
  double min_bulk = 0.0;
  double next_step = 0.0;
};

double wrms(std::span<const double> v, std::span<const double> weights) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = v[i] * weights[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(v.size()));
}

// ESDIRK integration of one component. Stage equations are solved by a
// simplified Newton iteration whose matrix replaces the limited convective
// flux by first-order upwind; every other term is linear and exact.
void integrate_component(const ComponentSystem& sys, const Discretization& disc, std::span<double> y,
                         const InletProfile& inlet, std::size_t comp, double horizon,
                         OutletProfile& outlet, double first_step, IntegrationStats& stats) {
  using T = Ark324;
  const std::size_t n = sys.size();
  const std::size_t out = sys.outlet_index();

  std::array<std::vector<double>, T::stages> f;
  for (auto& v : f) v.assign(n, 0.0);
  std::vector<double> stage(n), rhs(n), y_new(n), residual(n), work(n), weights(n);
  detail::BandMatrix lu;
  double factored_h = -1.0;

  auto rhs_at = [&](double t, std::span<const double> state, std::span<double> out_f) {
    sys.explicit_rhs(inlet.value(comp, t), state, out_f);
    sys.implicit().multiply(state, work);
    for (std::size_t i = 0; i < n; ++i) out_f[i] += work[i];
  };

  double t = 0.0;
  rhs_at(t, y, f[0]);

  const std::size_t samples = outlet.samples();
  outlet.at(0, comp) = y[out];
  std::size_t next_sample = 1;

  double h = std::min({first_step, disc.max_step, horizon});
  bool last_rejected = false;
  const int max_steps = 2'000'000;
  const int max_newton = 10;

  for (int iter = 0; t < horizon; ++iter) {
    if (iter > max_steps) throw NumericalError("column integrator exceeded its step budget");
    const double remaining = horizon - t;
    double step = std::min(h, remaining);
    if (remaining - step < 1e-3 * step) step = remaining;
    if (step < 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t))
      throw NumericalError(fmt::format("column integrator step size underflow at t = {}", t));

    const double hg = step * T::gamma;
    if (step != factored_h) {
      lu = sys.newton_matrix();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = i >= lu.lower() ? i - lu.lower() : 0;
        const std::size_t j1 = std::min(n - 1, i + lu.upper());
        for (std::size_t j = j0; j <= j1; ++j) lu(i, j) = (i == j ? 1.0 : 0.0) - hg * lu(i, j);
      }
      lu.factorize();
      factored_h = step;
    }
    for (std::size_t i = 0; i < n; ++i) weights[i] = 1.0 / (disc.rel_tol * std::abs(y[i]) + disc.abs_tol);

    bool newton_failed = false;
    for (int s = 1; s < T::stages && !newton_failed; ++s) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) acc += T::ai[s][j] * f[j][i];
        rhs[i] = y[i] + step * acc;
      }
      std::copy(rhs.begin(), rhs.end(), stage.begin());
      const double ts = t + T::c[s] * step;
      double previous = 0.0;
      bool converged = false;
      for (int k = 0; k < max_newton; ++k) {
        rhs_at(ts, stage, f[s]);
        for (std::size_t i = 0; i < n; ++i) residual[i] = rhs[i] + hg * f[s][i] - stage[i];
        lu.solve(residual);
        for (std::size_t i = 0; i < n; ++i) stage[i] += residual[i];
        const double delta = wrms(residual, weights);
        if (delta <= 0.1) {
          converged = true;
          break;
        }
        if (k > 1 && delta > previous) break;
        previous = delta;
      }
      if (!converged) {
        newton_failed = true;
        break;
      }
      const double inv = 1.0 / hg;
      for (std::size_t i = 0; i < n; ++i) f[s][i] = (stage[i] - rhs[i]) * inv;
    }

    double norm = 0.0;
    if (!newton_failed) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0, est = 0.0;
        for (int j = 0; j < T::stages; ++j) {
          acc += T::b[j] * f[j][i];
          est += (T::b[j] - T::b_embedded[j]) * f[j][i];
        }
        y_new[i] = y[i] + step * acc;
        const double scale = disc.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i])) + disc.abs_tol;
        const double e = step * est / scale;
        norm += e * e;
      }
      norm = std::sqrt(norm / static_cast<double>(n));
    }

    if (!newton_failed && norm <= 1.0) {
      const double t_old = t;
      const double y_out_old = y[out];
      const double f_out_old = f[0][out];
      t = (step == remaining) ? horizon : t + step;
      std::copy(y_new.begin(), y_new.end(), y.begin());
      rhs_at(t, y, f[0]);
      const double f_out_new = f[0][out];

      // Cubic Hermite dense output at the outlet.
      while (next_sample < samples) {
        const double ts = next_sample + 1 == samples ? horizon : outlet.time(next_sample);
        if (ts > t) break;
        const double dt = t - t_old;
        const double th = (ts - t_old) / dt;
        const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
        const double h10 = th * (1 - th) * (1 - th);
        const double h01 = th * th * (3 - 2 * th);
        const double h11 = th * th * (th - 1);
        outlet.at(next_sample, comp) =
            h00 * y_out_old + h10 * dt * f_out_old + h01 * y[out] + h11 * dt * f_out_new;
        ++next_sample;
      }
      for (int z = 0; z < sys.axial_cells(); ++z) stats.min_bulk = std::min(stats.min_bulk, y[sys.bulk_index(z)]);

      ++stats.accepted;
      const double limit = last_rejected ? 1.0 : 5.0;
      const double grow = norm > 0.0 ? 0.9 * std::pow(norm, -1.0 / 3.0) : limit;
      if (!(step == remaining && step < h)) h = step * std::min(limit, std::max(0.2, grow));
      h = std::min(h, disc.max_step);
      last_rejected = false;
    } else {
      ++stats.rejected;
      h = newton_failed ? 0.25 * step : step * std::max(0.2, 0.9 * std::pow(norm, -1.0 / 3.0));
      last_rejected = true;
    }
  }
  for (; next_sample < samples; ++next_sample) outlet.at(next_sample, comp) = y[out];
  stats.next_step = stats.next_step > 0.0 ? std::min(stats.next_step, h) : h;
}

}  // namespace

ColumnModel::ColumnModel(ColumnGeometry geometry, TransportParams params, LinearIsotherm isotherm,
                         Discretization disc)
    : geometry_(geometry), params_(std::move(params)), isotherm_(std::move(isotherm)), disc_(disc) {
  geometry_.validate();
  isotherm_.validate();
  params_.validate(isotherm_.components());
  grid_ = build_grid(geometry_, disc_);
}

PeriodResult ColumnModel::integrate_period(const ColumnState& state, const InletProfile& inlet,
                                           double horizon, std::size_t outlet_samples) const {
  if (!(horizon > 0.0)) throw InvalidInput("integration horizon must be > 0");
  if (inlet.components() != isotherm_.components())
    throw InvalidInput("inlet profile has the wrong number of components");
  if (inlet.duration() + 1e-9 * horizon < horizon)
    throw InvalidInput("inlet profile does not cover the integration horizon");
  if (inlet.min_value() < 0.0) throw InvalidInput("inlet profile must be non-negative");
  if (state.axial_cells() != grid_.axial_cells || state.components() != isotherm_.components() ||
      state.has_particle_phase() != (grid_.mode == ColumnMode::grm))
    throw InvalidInput("column state does not match the column discretization");

  PeriodResult result;
  result.state = state;
  result.outlet = OutletProfile(isotherm_.components(), horizon, outlet_samples);
  const double first_step = state.step_hint > 0.0 ? state.step_hint : disc_.initial_step;
  IntegrationStats stats;
  stats.min_bulk = state.min_bulk();

  const int nz = grid_.axial_cells;
  const int nr = grid_.radial_cells;
  for (std::size_t comp = 0; comp < isotherm_.components(); ++comp) {
    ComponentSystem sys(grid_, geometry_, params_, isotherm_.henry[comp], comp);
    std::vector<double> y(sys.size());
    for (int z = 0; z < nz; ++z) {
      y[sys.bulk_index(z)] = state.bulk(comp, z);
      if (grid_.mode == ColumnMode::grm)
        for (int k = 0; k < nr; ++k) y[sys.shell_index(z, k, nr)] = state.particle(comp, z, k);
    }
    integrate_component(sys, disc_, y, inlet, comp, horizon, result.outlet, first_step, stats);
    for (int z = 0; z < nz; ++z) {
      result.state.bulk(comp, z) = y[sys.bulk_index(z)];
      if (grid_.mode == ColumnMode::grm) {
        for (int k = 0; k < nr; ++k) {
          const double cp = y[sys.shell_index(z, k, nr)];
          result.state.particle(comp, z, k) = cp;
          result.state.bound(comp, z, k) = isotherm_.henry[comp] * cp;
        }
      }
    }
  }
  result.state.time = state.time + horizon;
  result.state.step_hint = stats.next_step;
  result.min_concentration = std::min(stats.min_bulk, result.outlet.min_value());
  result.accepted_steps = stats.accepted;
  result.rejected_steps = stats.rejected;

  if (result.min_concentration < -10.0 * disc_.abs_tol)
    throw NumericalError(fmt::format("negative concentration {} beyond tolerance", result.min_concentration));
  return result;
}

PeriodResult integrate_period(const ColumnState& state, const InletProfile& inlet,
                              const TransportParams& params, const LinearIsotherm& isotherm,
                              const ColumnGeometry& geometry, const Discretization& disc,
                              double horizon, std::size_t outlet_samples) {
  return ColumnModel(geometry, params, isotherm, disc).integrate_period(state, inlet, horizon, outlet_samples);
}

EdmLimitPreset edm_limit_preset() {
  EdmLimitPreset preset;
  preset.disc.radial_cells = 1;
  preset.disc.mode = ColumnMode::grm;
  preset.disc.abs_tol = 1e-10;
  preset.disc.rel_tol = 1e-6;
  preset.disc.initial_step = 1e-14;
  preset.disc.max_step = 5e6;
  return preset;
}

}  // namespace smbbayes::transport
