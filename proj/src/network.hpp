#pragma once

// Four-zone SMB loop: flowrate bookkeeping, node balances, port switching
// and iteration to cyclic steady state (CSS).

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "transport.hpp"

namespace smbbayes::network {

enum class PortRole { none, feed, desorbent, raffinate, extract };

std::string_view role_name(PortRole role);

/// Decision vector θ in SI units.
struct OperatingPoint {
  double length = 0.0;         // m
  double switch_time = 0.0;    // s
  double recycle = 0.0;        // Q_rec, m³/s
  double feed = 0.0;           // Q_F
  double desorbent = 0.0;      // Q_D
  double extract = 0.0;        // Q_E

  static constexpr std::size_t size = 6;
  static const std::array<std::string_view, size>& names();

  std::array<double, size> to_array() const;
  static OperatingPoint from_array(const std::array<double, size>& values);
};

struct ParameterBounds {
  std::array<double, OperatingPoint::size> lower{};
  std::array<double, OperatingPoint::size> upper{};

  bool contains(const OperatingPoint& op) const;
  void validate() const;
};

struct NetworkConfig {
  std::array<int, 4> layout{2, 2, 2, 2};
  std::vector<double> feed_concentration;       // mol/m³ per component
  std::vector<double> desorbent_concentration;  // mol/m³ per component
  double css_tolerance = 1e-5;
  int css_max_switches = 300;
  std::size_t outlet_samples = 401;

  int columns() const { return layout[0] + layout[1] + layout[2] + layout[3]; }
  std::size_t components() const { return feed_concentration.size(); }
  void validate() const;
};

struct ZonalFlowrates {
  std::array<double, 4> zone{};      // Q_I..Q_IV, m³/s
  double raffinate = 0.0;            // Q_R
  std::array<double, 4> velocity{};  // interstitial, m/s
};

/// Throws InfeasibleOperatingPoint if any derived flowrate is not positive.
ZonalFlowrates derive_flowrates(const OperatingPoint& op, const transport::ColumnGeometry& geometry);

/// Inlet concentration of the column downstream of a node.
std::vector<double> node_balance(std::span<const double> c_out, double q_up, PortRole role,
                                 const NetworkConfig& config, const ZonalFlowrates& flows);

/// Fixed plant description; the operating point supplies L and the flows.
struct Plant {
  transport::ColumnGeometry geometry;  // length is overridden by the operating point
  std::array<double, 4> axial_dispersion{1e-7, 1e-7, 1e-7, 1e-7};
  std::vector<double> pore_diffusion;
  std::vector<double> film_mass_transfer;
  transport::LinearIsotherm isotherm;
  transport::Discretization disc;
  NetworkConfig network;

  void validate() const;
  transport::ColumnGeometry geometry_for(const OperatingPoint& op) const;
};

/// Zone index (0..3) of a train position.
int zone_of_position(const NetworkConfig& config, int position);
/// Role of the node downstream of a train position.
PortRole role_after_position(const NetworkConfig& config, int position);

struct SmbState {
  std::vector<transport::ColumnState> columns;  // physical order
  long switches = 0;
  transport::OutletProfile extract;
  transport::OutletProfile raffinate;
  transport::OutletProfile recycle;  // outlet of the last position, previous period

  int columns_count() const { return static_cast<int>(columns.size()); }
  /// Physical column currently at a train position.
  int column_at(int position) const;
  /// Role of the node downstream of a physical column.
  PortRole node_role(const NetworkConfig& config, int physical) const;
};

SmbState initial_state(const Plant& plant, const OperatingPoint& op);

/// Integrates one switching period and then moves the ports downstream.
SmbState advance_switch(const SmbState& state, const Plant& plant, const OperatingPoint& op);

struct PortAverages {
  std::vector<double> extract;
  std::vector<double> raffinate;
};

PortAverages port_averages(const SmbState& state);

struct CssResult {
  SmbState state;
  PortAverages averages;
  double metric = 0.0;
  int switches = 0;
  std::vector<double> metric_history;
};

/// Port part of the CSS metric: max |ċ_k − ċ_{k−1}| over E/R and components, over max c_F.
double css_metric(const PortAverages& current, const PortAverages& previous, const NetworkConfig& config);

/// Moles of each component held in the whole plant.
std::vector<double> plant_inventory(const SmbState& state, const Plant& plant, const OperatingPoint& op);

/// Inventory part of the CSS metric: max |n_k − n_{k−1}| over max c_F · N · V_c.
double inventory_metric(std::span<const double> current, std::span<const double> previous,
                        const Plant& plant, const OperatingPoint& op);

/// Throws NotConverged when the switch cap is reached.
CssResult simulate_to_css(const Plant& plant, const OperatingPoint& op);

struct AxialProfile {
  std::vector<double> position;                  // m from the desorbent node
  std::vector<std::vector<double>> concentration;  // [component][point]
};

/// Bulk concentrations along the train, starting downstream of the desorbent node.
AxialProfile axial_profile(const SmbState& state, const Plant& plant, const OperatingPoint& op);

}  // namespace smbbayes::network
