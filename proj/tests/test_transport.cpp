#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "support.hpp"
#include "transport.hpp"

using namespace smbbayes;
using namespace smbbayes::transport;
using Catch::Approx;

namespace {

TransportParams edm_params(double u) {
  const auto p = edm_limit_preset();
  return {1e-7, {p.pore_diffusion, p.pore_diffusion}, {p.film_mass_transfer, p.film_mass_transfer}, u};
}

double velocity(double q) { return q / (0.38 * test_support::reference_geometry().cross_section()); }

}  // namespace

TEST_CASE("build_grid partitions the column uniformly") {
  Discretization d;
  d.axial_cells = 40;
  const auto g = build_grid(test_support::reference_geometry(), d);
  CHECK(g.axial_cells == 40);
  CHECK(g.radial_cells == 1);
  CHECK(g.cell_width == Approx(0.0134));
  CHECK(g.unknowns_per_cell() == 2);

  d.axial_cells = 2;
  auto geo = test_support::reference_geometry();
  geo.length = 1.0;
  const auto two = build_grid(geo, d);
  CHECK(two.cell_width == Approx(0.5));
  CHECK(two.cell_centers[0] == Approx(0.25));
  CHECK(two.cell_centers[1] == Approx(0.75));
}

TEST_CASE("build_grid rejects bad cell counts") {
  Discretization d;
  d.axial_cells = 1;
  CHECK_THROWS_AS(build_grid(test_support::reference_geometry(), d), InvalidInput);
  d.axial_cells = 10;
  d.radial_cells = 0;
  CHECK_THROWS_AS(build_grid(test_support::reference_geometry(), d), InvalidInput);
}

TEST_CASE("geometry invariants") {
  auto g = test_support::reference_geometry();
  CHECK(g.total_porosity() == Approx(0.380006).margin(1e-6));
  CHECK(g.volume() == Approx(0.536 * M_PI * 0.026 * 0.026 / 4));
  g.column_porosity = 1.0;
  CHECK_THROWS_AS(g.validate(), InvalidInput);
  g = test_support::reference_geometry();
  g.length = 0.0;
  CHECK_THROWS_AS(g.validate(), InvalidInput);
}

TEST_CASE("edm limit preset values") {
  const auto p = edm_limit_preset();
  CHECK(p.particle_porosity == 1e-5);
  CHECK(p.pore_diffusion == 5e-5);
  CHECK(p.film_mass_transfer == 1.6e4);
  CHECK(p.disc.radial_cells == 1);
  CHECK(p.disc.abs_tol == 1e-10);
  CHECK(p.disc.rel_tol == 1e-6);
  CHECK(p.disc.initial_step == 1e-14);
  CHECK(p.disc.max_step == 5e6);
}

TEST_CASE("time profile quadrature and interpolation") {
  TimeProfile p(1, 10.0, 11);
  for (std::size_t k = 0; k < 11; ++k) p.at(k, 0) = static_cast<double>(k);
  CHECK(p.integral(0) == Approx(50.0));
  CHECK(p.value(0, 2.5) == Approx(2.5));
  CHECK(p.value(0, -1.0) == Approx(0.0));
  CHECK(p.value(0, 99.0) == Approx(10.0));
}

TEST_CASE("zero state and zero inlet give a zero outlet", "[transport]") {
  for (auto mode : {ColumnMode::grm, ColumnMode::edm_equilibrium}) {
    Discretization d;
    d.axial_cells = 20;
    d.mode = mode;
    ColumnModel m(test_support::reference_geometry(), edm_params(velocity(1.047e-7)), test_support::reference_isotherm(), d);
    const std::vector<double> zero{0.0, 0.0};
    const auto r = m.integrate_period(m.empty_state(), TimeProfile::constant(zero, 500.0), 500.0, 201);
    CHECK(r.outlet.max_value() == 0.0);
    CHECK(r.outlet.min_value() == 0.0);
  }
}

TEST_CASE("non-retained pulse conserves mass", "[transport]") {
  for (auto mode : {ColumnMode::grm, ColumnMode::edm_equilibrium}) {
    Discretization d;
    d.axial_cells = 40;
    d.mode = mode;
    const auto p = edm_limit_preset();
    const TransportParams single{1e-7, {p.pore_diffusion}, {p.film_mass_transfer}, velocity(1.047e-7)};
    ColumnModel m(test_support::reference_geometry(), single, LinearIsotherm{{1e-12}}, d);
    const auto in = test_support::pulse(1, 3000.0, 3001, 20.0);
    const auto r = m.integrate_period(m.empty_state(), in, 3000.0, 3001);
    CHECK(r.outlet.integral(0) == Approx(in.integral(0)).epsilon(1e-3));
  }
}

TEST_CASE("pulse retention matches the first-moment oracle", "[transport]") {
  const auto geo = test_support::reference_geometry();
  const double u = velocity(1.047e-7);
  const double F = (1.0 - geo.total_porosity()) / geo.total_porosity();
  for (auto mode : {ColumnMode::grm, ColumnMode::edm_equilibrium}) {
    Discretization d;
    d.axial_cells = 40;
    d.mode = mode;
    ColumnModel m(geo, edm_params(u), test_support::reference_isotherm(), d);
    const auto in = test_support::pulse(2, 6000.0, 6001, 20.0);
    const auto r = m.integrate_period(m.empty_state(), in, 6000.0, 6001);
    for (std::size_t i = 0; i < 2; ++i) {
      const double expected = geo.length / u * (1.0 + F * m.isotherm().henry[i]);
      CHECK(test_support::retention_time(in, r.outlet, i) == Approx(expected).epsilon(0.01));
    }
    CHECK(r.min_concentration >= -10 * d.abs_tol);
  }
}

TEST_CASE("grm with the EDM preset agrees with edm-equilibrium mode", "[transport]") {
  const auto geo = test_support::reference_geometry();
  Discretization d;
  d.axial_cells = 40;
  ColumnModel grm(geo, edm_params(velocity(1.047e-7)), test_support::reference_isotherm(), d);
  d.mode = ColumnMode::edm_equilibrium;
  ColumnModel edm(geo, edm_params(velocity(1.047e-7)), test_support::reference_isotherm(), d);
  const auto in = test_support::pulse(2, 4000.0, 2001, 20.0);
  const auto a = grm.integrate_period(grm.empty_state(), in, 4000.0, 2001).outlet;
  const auto b = edm.integrate_period(edm.empty_state(), in, 4000.0, 2001).outlet;
  const double peak = std::max(a.max_value(), b.max_value());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.samples(); ++k)
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(a.at(k, i) - b.at(k, i)));
  CHECK(worst < 0.01 * peak);
}

TEST_CASE("state round trip across periods matches one long period", "[transport]") {
  Discretization d;
  d.axial_cells = 20;
  d.mode = ColumnMode::edm_equilibrium;
  ColumnModel m(test_support::reference_geometry(), edm_params(velocity(1.047e-7)), test_support::reference_isotherm(), d);
  const std::vector<double> feed{1.0, 2.0};
  const auto in = TimeProfile::constant(feed, 2000.0);
  const auto whole = m.integrate_period(m.empty_state(), in, 2000.0, 201);
  const auto half_in = TimeProfile::constant(feed, 1000.0);
  const auto first = m.integrate_period(m.empty_state(), half_in, 1000.0, 101);
  const auto second = m.integrate_period(first.state, half_in, 1000.0, 101);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(second.outlet.at(100, i) == Approx(whole.outlet.at(200, i)).epsilon(1e-3).margin(1e-6));
}

TEST_CASE("holdup of a loaded column") {
  const auto geo = test_support::reference_geometry();
  Discretization d;
  d.axial_cells = 10;
  d.mode = ColumnMode::edm_equilibrium;
  const auto grid = build_grid(geo, d);
  ColumnState s(2, grid);
  for (int z = 0; z < 10; ++z) s.bulk(0, z) = 1.0;
  const double expected = geo.volume() * (geo.total_porosity() + (1 - geo.total_porosity()) * 0.28);
  CHECK(s.holdup(0, grid, geo, test_support::reference_isotherm()) == Approx(expected));
  CHECK(s.holdup(1, grid, geo, test_support::reference_isotherm()) == 0.0);
}

TEST_CASE("halving the cell width shrinks the averaging error") {
  // Average outlet over a window that ends mid-breakthrough, against a fine grid.
  const auto geo = test_support::reference_geometry();
  const double u = velocity(1.047e-7);
  const double horizon = geo.length / u * (1.0 + (1.0 - geo.total_porosity()) / geo.total_porosity() * 0.54);
  auto average = [&](int cells) {
    Discretization d;
    d.axial_cells = cells;
    d.mode = ColumnMode::edm_equilibrium;
    ColumnModel m(geo, edm_params(u), test_support::reference_isotherm(), d);
    const std::vector<double> step{1.0, 1.0};
    return m.integrate_period(m.empty_state(), TimeProfile::constant(step, horizon), horizon, 2001).outlet.integral(1) /
           horizon;
  };
  const double fine = average(1280);
  const double e1 = std::abs(average(40) - fine);
  const double e2 = std::abs(average(80) - fine);
  const double e3 = std::abs(average(160) - fine);
  CHECK(e1 / e2 >= 1.8);
  CHECK(e2 / e3 >= 1.8);
}
