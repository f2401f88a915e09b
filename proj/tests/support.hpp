#pragma once

#include <vector>

#include "network.hpp"
#include "transport.hpp"

namespace test_support {

using namespace smbbayes;

inline transport::ColumnGeometry reference_geometry() { return {0.536, 0.026, 1.625e-3, 0.38, 1e-5}; }

inline transport::LinearIsotherm reference_isotherm() { return {{0.28, 0.54}}; }

inline network::OperatingPoint reference_point() { return {0.536, 1552.0, 1.395e-7, 2.0e-8, 4.14e-8, 3.48e-8}; }

/// First moment of an outlet trace minus that of the inlet pulse.
inline double retention_time(const transport::TimeProfile& in, const transport::TimeProfile& out, std::size_t comp) {
  auto moment = [&](const transport::TimeProfile& p) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t k = 0; k < p.samples(); ++k) {
      const double w = (k == 0 || k + 1 == p.samples()) ? 0.5 : 1.0;
      m0 += w * p.at(k, comp);
      m1 += w * p.at(k, comp) * p.time(k);
    }
    return m1 / m0;
  };
  return moment(out) - moment(in);
}

/// Rectangular pulse of unit height for every component.
inline transport::TimeProfile pulse(std::size_t components, double duration, std::size_t samples, double width) {
  transport::TimeProfile in(components, duration, samples);
  for (std::size_t k = 0; k < samples; ++k)
    if (in.time(k) <= width)
      for (std::size_t i = 0; i < components; ++i) in.at(k, i) = 1.0;
  return in;
}

}  // namespace test_support
