#include "performance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "errors.hpp"

namespace smbbayes::performance {

void ObjectiveSpec::validate(std::size_t components) const {
  if (extract_target >= components || raffinate_target >= components)
    throw InvalidInput("objective target component out of range");
  if (!(extract_threshold > 0.0 && extract_threshold < 1.0) ||
      !(raffinate_threshold > 0.0 && raffinate_threshold < 1.0))
    throw InvalidInput("purity thresholds must lie in (0, 1)");
  if (!(penalty > 0.0)) throw InvalidInput("penalty factor must be > 0");
}

double period_average(const transport::OutletProfile& trace, std::size_t comp, double switch_time) {
  if (!(switch_time > 0.0)) throw InvalidInput("switching time must be > 0");
  if (trace.samples() < 2 || trace.duration() < switch_time * (1.0 - 1e-12))
    throw InvalidInput("outlet trace is shorter than the switching time");
  return trace.integral(comp) / trace.duration();
}

namespace {

std::vector<double> purities(std::span<const double> avg, const char* port) {
  double total = 0.0;
  for (double c : avg) total += c;
  if (!(total > 0.0)) throw Undefined(fmt::format("purity undefined: all {} concentrations are zero", port));
  std::vector<double> pu(avg.size());
  for (std::size_t i = 0; i < avg.size(); ++i) pu[i] = avg[i] / total;
  return pu;
}

}  // namespace

PerformanceRecord indicators(std::span<const double> extract_average, std::span<const double> raffinate_average,
                             const network::ZonalFlowrates& flows, const network::OperatingPoint& op,
                             const network::NetworkConfig& config, const transport::ColumnGeometry& geometry) {
  const std::size_t m = config.components();
  if (extract_average.size() != m || raffinate_average.size() != m)
    throw InvalidInput("port averages have the wrong component count");
  for (std::size_t i = 0; i < m; ++i)
    if (extract_average[i] < 0.0 || raffinate_average[i] < 0.0)
      throw InvalidInput("port averages must be >= 0");

  PerformanceRecord r;
  r.extract_average.assign(extract_average.begin(), extract_average.end());
  r.raffinate_average.assign(raffinate_average.begin(), raffinate_average.end());
  r.extract_purity = purities(extract_average, "extract");
  r.raffinate_purity = purities(raffinate_average, "raffinate");

  transport::ColumnGeometry g = geometry;
  g.length = op.length;
  const double bed = (1.0 - g.column_porosity) * g.volume() * config.columns();
  r.extract_yield.resize(m);
  r.raffinate_yield.resize(m);
  r.extract_productivity.resize(m);
  r.raffinate_productivity.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double fed = op.feed * config.feed_concentration[i];
    const double e = op.extract * extract_average[i];
    const double rr = flows.raffinate * raffinate_average[i];
    r.extract_yield[i] = fed > 0.0 ? e / fed : 0.0;
    r.raffinate_yield[i] = fed > 0.0 ? rr / fed : 0.0;
    r.extract_productivity[i] = e / bed;
    r.raffinate_productivity[i] = rr / bed;
  }
  return r;
}

ObjectiveValue objective(const PerformanceRecord& record, const ObjectiveSpec& spec) {
  ObjectiveValue v;
  v.f = -(record.raffinate_yield.at(spec.raffinate_target) + record.extract_yield.at(spec.extract_target));
  const double de = std::min(0.0, record.extract_purity.at(spec.extract_target) - spec.extract_threshold);
  const double dr = std::min(0.0, record.raffinate_purity.at(spec.raffinate_target) - spec.raffinate_threshold);
  v.g = de * de + dr * dr;
  v.h = v.f + spec.penalty * v.g;
  return v;
}

void apply_objective(PerformanceRecord& record, const ObjectiveSpec& spec) {
  const auto v = objective(record, spec);
  record.f = v.f;
  record.g = v.g;
  record.h = v.h;
}

double log_likelihood(double h) {
  if (!std::isfinite(h)) throw NumericalError("objective value is not finite");
  return -0.5 * h;
}

}  // namespace smbbayes::performance
