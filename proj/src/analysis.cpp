#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "errors.hpp"

namespace smbbayes::analysis {

std::string_view region_name(Region r) {
  switch (r) {
    case Region::A: return "A";
    case Region::B: return "B";
    case Region::C: return "C";
    case Region::D: return "D";
    case Region::E: return "E";
  }
  return "?";
}

FlowrateRatios flowrate_ratios(const network::OperatingPoint& op, const transport::ColumnGeometry& geometry,
                               const network::ZonalFlowrates& flows) {
  transport::ColumnGeometry g = geometry;
  g.length = op.length;
  const double vc = g.volume();
  const double et = g.total_porosity();
  FlowrateRatios r;
  for (int j = 0; j < 4; ++j) r.m[j] = (op.switch_time * flows.zone[j] - et * vc) / ((1.0 - et) * vc);
  return r;
}

Region classify_region(const FlowrateRatios& m, const transport::LinearIsotherm& isotherm) {
  if (isotherm.henry.size() < 2) throw InvalidInput("region classification needs two components");
  const double weak = isotherm.henry.front();
  const double strong = isotherm.henry.back();
  if (m.m3() <= m.m2()) return Region::D;
  const bool raffinate_pure = m.m2() > weak;   // weak component does not reach the extract
  const bool extract_pure = m.m3() < strong;   // strong component does not reach the raffinate
  if (raffinate_pure && extract_pure) return Region::A;
  if (!raffinate_pure && extract_pure) return Region::C;
  if (raffinate_pure && !extract_pure) return Region::B;
  return Region::E;
}

std::vector<bool> pareto_front(std::span<const std::pair<double, double>> points) {
  if (points.empty()) throw InvalidInput("Pareto front of an empty set");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!std::isnan(points[i].first) && !std::isnan(points[i].second)) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].first != points[b].first) return points[a].first > points[b].first;
    return points[a].second > points[b].second;
  });
  std::vector<bool> front(points.size(), false);
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (std::size_t g = 0; g < order.size();) {
    std::size_t end = g;
    while (end < order.size() && points[order[end]].first == points[order[g]].first) ++end;
    const double top = points[order[g]].second;
    if (!have_best || top > best) {
      for (std::size_t k = g; k < end && points[order[k]].second == top; ++k) front[order[k]] = true;
    }
    if (!have_best || top > best) best = top;
    have_best = true;
    g = end;
  }
  return front;
}

double Density::mode() const {
  if (density.empty()) throw InvalidInput("empty density");
  return x[std::max_element(density.begin(), density.end()) - density.begin()];
}

Density kernel_density(std::span<const double> samples, std::size_t points) {
  const std::size_t k = samples.size();
  if (k < 2) throw InvalidInput("density estimate needs at least two samples");
  if (points < 2) throw InvalidInput("density grid needs at least two points");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(k - 1));
  if (!(sigma > 0.0)) throw Undefined("density estimate undefined: zero sample variance");
  Density d;
  d.bandwidth = 1.06 * sigma * std::pow(static_cast<double>(k), -0.2);
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn - 3.0 * d.bandwidth;
  const double hi = *mx + 3.0 * d.bandwidth;
  const double norm = 1.0 / (static_cast<double>(k) * d.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  d.x.resize(points);
  d.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    double s = 0.0;
    for (double v : samples) {
      const double u = (x - v) / d.bandwidth;
      s += std::exp(-0.5 * u * u);
    }
    d.x[i] = x;
    d.density[i] = s * norm;
  }
  return d;
}

Histogram difference_histogram(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("histogram of an empty sample");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  Histogram h;
  if (*mn == *mx) {
    h.edges = {*mn, *mx};
    h.counts = {values.size()};
    h.mode = *mn;
    return h;
  }
  const auto bins = static_cast<std::size_t>(
      std::clamp(std::ceil(std::sqrt(static_cast<double>(values.size()))), 1.0, 50.0));
  const double width = (*mx - *mn) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = *mn + width * static_cast<double>(b);
  h.edges.back() = *mx;
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - *mn) / width);
    ++h.counts[std::min(b, bins - 1)];
  }
  h.mode = kernel_density(values).mode();
  return h;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("linear fit needs paired samples");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("linear fit needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("linear fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 0.0;
  return f;
}

Envelope ppc_envelope(std::span<const network::AxialProfile> replicates) {
  if (replicates.size() < 2) throw InvalidInput("envelope needs at least two replicates");
  const std::size_t points = replicates[0].position.size();
  const std::size_t m = replicates[0].concentration.size();
  if (points == 0) throw InvalidInput("empty replicate profile");
  for (const auto& r : replicates)
    if (r.position.size() != points || r.concentration.size() != m)
      throw InvalidInput("replicate profiles must share the same cell layout");
  Envelope e;
  e.coordinate.resize(points);
  for (std::size_t p = 0; p < points; ++p)
    e.coordinate[p] = (static_cast<double>(p) + 0.5) / static_cast<double>(points);
  e.lower = replicates[0].concentration;
  e.upper = replicates[0].concentration;
  for (const auto& r : replicates) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < points; ++p) {
        e.lower[i][p] = std::min(e.lower[i][p], r.concentration[i][p]);
        e.upper[i][p] = std::max(e.upper[i][p], r.concentration[i][p]);
      }
    }
  }
  return e;
}

}  // namespace smbbayes::analysis
