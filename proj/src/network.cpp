#include "network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "errors.hpp"

namespace smbbayes::network {

std::string_view role_name(PortRole role) {
  switch (role) {
    case PortRole::feed: return "F";
    case PortRole::desorbent: return "D";
    case PortRole::raffinate: return "R";
    case PortRole::extract: return "E";
    case PortRole::none: break;
  }
  return "none";
}

const std::array<std::string_view, OperatingPoint::size>& OperatingPoint::names() {
  static const std::array<std::string_view, size> n{"L", "t_s", "Q_rec", "Q_F", "Q_D", "Q_E"};
  return n;
}

std::array<double, OperatingPoint::size> OperatingPoint::to_array() const {
  return {length, switch_time, recycle, feed, desorbent, extract};
}

OperatingPoint OperatingPoint::from_array(const std::array<double, size>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

bool ParameterBounds::contains(const OperatingPoint& op) const {
  const auto v = op.to_array();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] >= lower[i] && v[i] <= upper[i])) return false;
  return true;
}

void ParameterBounds::validate() const {
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw InvalidInput(fmt::format("bounds of {} must be finite with lower < upper", OperatingPoint::names()[i]));
  }
}

void NetworkConfig::validate() const {
  for (int n : layout)
    if (n < 1) throw InvalidInput("every zone needs at least one column");
  if (feed_concentration.size() < 2) throw InvalidInput("at least two components are required");
  if (desorbent_concentration.size() != feed_concentration.size())
    throw InvalidInput("feed and desorbent concentrations need the same component count");
  for (std::size_t i = 0; i < feed_concentration.size(); ++i)
    if (!(feed_concentration[i] >= 0.0) || !(desorbent_concentration[i] >= 0.0))
      throw InvalidInput("inlet concentrations must be >= 0");
  if (!(css_tolerance > 0.0)) throw InvalidInput("CSS tolerance must be > 0");
  if (css_max_switches < 1) throw InvalidInput("CSS switch cap must be >= 1");
  if (outlet_samples < 200) throw InvalidInput("outlet trace needs at least 200 samples per period");
}

ZonalFlowrates derive_flowrates(const OperatingPoint& op, const transport::ColumnGeometry& geometry) {
  ZonalFlowrates f;
  f.zone[0] = op.recycle;
  f.zone[1] = op.recycle - op.extract;
  f.zone[2] = f.zone[1] + op.feed;
  f.zone[3] = op.recycle - op.desorbent;
  f.raffinate = op.desorbent + op.feed - op.extract;
  static constexpr std::array<std::string_view, 4> zone_names{"Q_I", "Q_II", "Q_III", "Q_IV"};
  for (int j = 0; j < 4; ++j)
    if (!(f.zone[j] > 0.0))
      throw InfeasibleOperatingPoint(fmt::format("derived flowrate {} = {} is not positive", zone_names[j], f.zone[j]));
  if (!(f.raffinate > 0.0))
    throw InfeasibleOperatingPoint(fmt::format("derived flowrate Q_R = {} is not positive", f.raffinate));
  if (!(op.feed >= 0.0) || !(op.desorbent > 0.0) || !(op.extract > 0.0))
    throw InfeasibleOperatingPoint("port flowrates must be positive");
  const double area = geometry.column_porosity * geometry.cross_section();
  for (int j = 0; j < 4; ++j) f.velocity[j] = f.zone[j] / area;
  return f;
}

std::vector<double> node_balance(std::span<const double> c_out, double q_up, PortRole role,
                                 const NetworkConfig& config, const ZonalFlowrates& flows) {
  if (!(q_up > 0.0)) throw InvalidInput("upstream flowrate must be > 0");
  std::vector<double> c_in(c_out.begin(), c_out.end());
  const std::vector<double>* port = nullptr;
  double q_port = 0.0;
  double q_down = q_up;
  switch (role) {
    case PortRole::none:
    case PortRole::extract:
    case PortRole::raffinate:
      return c_in;
    case PortRole::feed:
      port = &config.feed_concentration;
      q_port = flows.zone[2] - flows.zone[1];
      q_down = flows.zone[2];
      break;
    case PortRole::desorbent:
      port = &config.desorbent_concentration;
      q_port = flows.zone[0] - flows.zone[3];
      q_down = flows.zone[0];
      break;
  }
  if (!(q_down > 0.0)) throw InvalidInput("negative downstream flowrate");
  if (port->size() != c_out.size()) throw InvalidInput("component count mismatch at node");
  for (std::size_t i = 0; i < c_in.size(); ++i) c_in[i] = (c_out[i] * q_up + (*port)[i] * q_port) / q_down;
  return c_in;
}

void Plant::validate() const {
  transport::ColumnGeometry g = geometry;
  if (!(g.length > 0.0)) g.length = 1.0;
  g.validate();
  isotherm.validate();
  disc.validate();
  network.validate();
  if (network.components() != isotherm.components())
    throw InvalidInput("feed concentrations and isotherm disagree on the component count");
  for (double d : axial_dispersion)
    if (!(d > 0.0)) throw InvalidInput("axial dispersion must be > 0 in every zone");
  transport::TransportParams p;
  p.axial_dispersion = 1.0;
  p.interstitial_velocity = 1.0;
  p.pore_diffusion = pore_diffusion;
  p.film_mass_transfer = film_mass_transfer;
  p.validate(isotherm.components());
}

transport::ColumnGeometry Plant::geometry_for(const OperatingPoint& op) const {
  transport::ColumnGeometry g = geometry;
  g.length = op.length;
  return g;
}

int zone_of_position(const NetworkConfig& config, int position) {
  int end = 0;
  for (int j = 0; j < 4; ++j) {
    end += config.layout[j];
    if (position < end) return j;
  }
  throw InvalidInput(fmt::format("train position {} outside the loop", position));
}

PortRole role_after_position(const NetworkConfig& config, int position) {
  static constexpr std::array<PortRole, 4> roles{PortRole::extract, PortRole::feed, PortRole::raffinate,
                                                 PortRole::desorbent};
  int end = 0;
  for (int j = 0; j < 4; ++j) {
    end += config.layout[j];
    if (position + 1 == end) return roles[j];
    if (position < end) return PortRole::none;
  }
  throw InvalidInput(fmt::format("train position {} outside the loop", position));
}

int SmbState::column_at(int position) const {
  const long n = columns_count();
  return static_cast<int>((position + switches % n) % n);
}

PortRole SmbState::node_role(const NetworkConfig& config, int physical) const {
  const long n = columns_count();
  const int position = static_cast<int>(((physical - switches) % n + n) % n);
  return role_after_position(config, position);
}

SmbState initial_state(const Plant& plant, const OperatingPoint& op) {
  plant.validate();
  const auto grid = transport::build_grid(plant.geometry_for(op), plant.disc);
  SmbState s;
  const std::size_t m = plant.isotherm.components();
  s.columns.assign(plant.network.columns(), transport::ColumnState(m, grid));
  const std::size_t samples = plant.network.outlet_samples;
  s.extract = transport::OutletProfile(m, op.switch_time, samples);
  s.raffinate = transport::OutletProfile(m, op.switch_time, samples);
  s.recycle = transport::OutletProfile(m, op.switch_time, samples);
  return s;
}

namespace {

transport::InletProfile apply_node(const transport::OutletProfile& upstream, double q_up, PortRole role,
                                   const NetworkConfig& config, const ZonalFlowrates& flows) {
  transport::InletProfile in(upstream.components(), upstream.duration(), upstream.samples());
  std::vector<double> c(upstream.components());
  for (std::size_t k = 0; k < upstream.samples(); ++k) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = upstream.at(k, i);
    const auto out = node_balance(c, q_up, role, config, flows);
    for (std::size_t i = 0; i < c.size(); ++i) in.at(k, i) = std::max(0.0, out[i]);
  }
  return in;
}

}  // namespace

SmbState advance_switch(const SmbState& state, const Plant& plant, const OperatingPoint& op) {
  const NetworkConfig& cfg = plant.network;
  const int n = cfg.columns();
  if (state.columns_count() != n) throw InvalidInput("SMB state does not match the column layout");
  const auto geometry = plant.geometry_for(op);
  const ZonalFlowrates flows = derive_flowrates(op, geometry);

  std::vector<transport::ColumnModel> models;
  models.reserve(4);
  for (int j = 0; j < 4; ++j) {
    transport::TransportParams p;
    p.axial_dispersion = plant.axial_dispersion[j];
    p.pore_diffusion = plant.pore_diffusion;
    p.film_mass_transfer = plant.film_mass_transfer;
    p.interstitial_velocity = flows.velocity[j];
    models.emplace_back(geometry, p, plant.isotherm, plant.disc);
  }

  SmbState next = state;
  const std::size_t samples = cfg.outlet_samples;
  transport::InletProfile inlet =
      apply_node(state.recycle, flows.zone[3], PortRole::desorbent, cfg, flows);
  for (int pos = 0; pos < n; ++pos) {
    const int zone = zone_of_position(cfg, pos);
    const int physical = state.column_at(pos);
    auto result = models[zone].integrate_period(state.columns[physical], inlet, op.switch_time, samples);
    next.columns[physical] = std::move(result.state);
    const PortRole role = role_after_position(cfg, pos);
    if (role == PortRole::extract) next.extract = result.outlet;
    if (role == PortRole::raffinate) next.raffinate = result.outlet;
    if (pos + 1 == n) {
      next.recycle = std::move(result.outlet);
    } else {
      inlet = apply_node(result.outlet, flows.zone[zone], role, cfg, flows);
    }
  }
  ++next.switches;
  return next;
}

PortAverages port_averages(const SmbState& state) {
  PortAverages a;
  for (std::size_t i = 0; i < state.extract.components(); ++i) {
    a.extract.push_back(state.extract.integral(i) / state.extract.duration());
    a.raffinate.push_back(state.raffinate.integral(i) / state.raffinate.duration());
  }
  return a;
}

double css_metric(const PortAverages& current, const PortAverages& previous, const NetworkConfig& config) {
  double scale = 0.0;
  for (double c : config.feed_concentration) scale = std::max(scale, c);
  if (scale == 0.0) scale = 1.0;
  double metric = 0.0;
  for (std::size_t i = 0; i < current.extract.size(); ++i) {
    metric = std::max(metric, std::abs(current.extract[i] - previous.extract[i]));
    metric = std::max(metric, std::abs(current.raffinate[i] - previous.raffinate[i]));
  }
  return metric / scale;
}

std::vector<double> plant_inventory(const SmbState& state, const Plant& plant, const OperatingPoint& op) {
  const auto geometry = plant.geometry_for(op);
  const auto grid = transport::build_grid(geometry, plant.disc);
  std::vector<double> total(plant.isotherm.components(), 0.0);
  for (const auto& col : state.columns)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += col.holdup(i, grid, geometry, plant.isotherm);
  return total;
}

double inventory_metric(std::span<const double> current, std::span<const double> previous,
                        const Plant& plant, const OperatingPoint& op) {
  double scale = 0.0;
  for (double c : plant.network.feed_concentration) scale = std::max(scale, c);
  if (scale == 0.0) scale = 1.0;
  scale *= plant.network.columns() * plant.geometry_for(op).volume();
  double metric = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) metric = std::max(metric, std::abs(current[i] - previous[i]));
  return metric / scale;
}

CssResult simulate_to_css(const Plant& plant, const OperatingPoint& op) {
  const NetworkConfig& cfg = plant.network;
  CssResult r;
  r.state = initial_state(plant, op);
  PortAverages previous{std::vector<double>(cfg.components(), 0.0), std::vector<double>(cfg.components(), 0.0)};
  std::vector<double> previous_inventory(cfg.components(), 0.0);
  for (int k = 1; k <= cfg.css_max_switches; ++k) {
    r.state = advance_switch(r.state, plant, op);
    r.averages = port_averages(r.state);
    const auto inventory = plant_inventory(r.state, plant, op);
    r.metric = std::max(css_metric(r.averages, previous, cfg),
                        inventory_metric(inventory, previous_inventory, plant, op));
    r.metric_history.push_back(r.metric);
    r.switches = k;
    if (r.metric < cfg.css_tolerance) return r;
    previous = r.averages;
    previous_inventory = inventory;
  }
  throw NotConverged(fmt::format("no cyclic steady state after {} switches (metric {})", cfg.css_max_switches, r.metric),
                     r.metric, cfg.css_max_switches);
}

AxialProfile axial_profile(const SmbState& state, const Plant& plant, const OperatingPoint& op) {
  const auto grid = transport::build_grid(plant.geometry_for(op), plant.disc);
  const std::size_t m = plant.isotherm.components();
  AxialProfile p;
  p.concentration.assign(m, {});
  for (int pos = 0; pos < state.columns_count(); ++pos) {
    const auto& col = state.columns[state.column_at(pos)];
    for (int z = 0; z < grid.axial_cells; ++z) {
      p.position.push_back(pos * op.length + grid.cell_centers[z]);
      for (std::size_t i = 0; i < m; ++i) p.concentration[i].push_back(col.bulk(i, z));
    }
  }
  return p;
}

}  // namespace smbbayes::network
