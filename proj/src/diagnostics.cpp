#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace smbbayes::diagnostics {

namespace {

std::size_t common_length(std::span<const ChainView> chains, std::size_t minimum) {
  if (chains.size() < 2) throw InvalidInput("at least two chains are required");
  const std::size_t k = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != k) throw InvalidInput("chains must have equal length");
  if (k < minimum) throw InvalidInput("chains are too short");
  return k;
}

double mean(ChainView v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double gelman_rhat(std::span<const ChainView> chains) {
  const std::size_t k = common_length(chains, 2);
  const std::size_t m = chains.size();
  std::vector<double> means(m);
  double grand = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    means[i] = mean(chains[i]);
    grand += means[i];
    double ss = 0.0;
    for (double x : chains[i]) ss += (x - means[i]) * (x - means[i]);
    w += ss / static_cast<double>(k - 1);
  }
  grand /= static_cast<double>(m);
  w /= static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(k) / static_cast<double>(m - 1);
  if (!(w > 0.0)) throw Undefined("R-hat undefined: zero within-chain variance");
  const double kd = static_cast<double>(k);
  const double var_plus = (kd - 1.0) / kd * w + b / kd;
  return std::sqrt(var_plus / w);
}

double autocorrelation(std::span<const ChainView> chains, std::size_t lag) {
  if (chains.empty()) throw InvalidInput("no chains given");
  std::size_t total = 0;
  double grand = 0.0;
  for (const auto& c : chains) {
    if (lag >= c.size()) throw InvalidInput("lag must be shorter than the chain");
    for (double x : c) grand += x;
    total += c.size();
  }
  grand /= static_cast<double>(total);
  double var = 0.0;
  double cov = 0.0;
  for (const auto& c : chains) {
    for (double x : c) var += (x - grand) * (x - grand);
    for (std::size_t s = 0; s + lag < c.size(); ++s) cov += (c[s] - grand) * (c[s + lag] - grand);
  }
  if (!(var > 0.0)) throw Undefined("autocorrelation undefined: zero variance");
  return cov / var;
}

double autocorrelation(ChainView values, std::size_t lag) {
  const ChainView one[] = {values};
  return autocorrelation(std::span<const ChainView>(one), lag);
}

double effective_sample_size(std::span<const ChainView> chains) {
  if (chains.empty()) throw InvalidInput("no chains given");
  const std::size_t k = chains[0].size();
  for (const auto& c : chains)
    if (c.size() != k) throw InvalidInput("chains must have equal length");
  if (k < 2) throw InvalidInput("chains are too short");
  const double n = static_cast<double>(k * chains.size());
  double sum = 0.0;
  double rho = autocorrelation(chains, 1);
  for (std::size_t t = 1; t + 1 < k; ++t) {
    const double next = autocorrelation(chains, t + 1);
    if (rho + next < 0.0) break;
    sum += rho;
    rho = next;
  }
  return std::min(n, n / (1.0 + 2.0 * sum));
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw InvalidInput("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  const double h = std::clamp(n * p + 0.5, 1.0, n);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo >= values.size()) return values.back();
  return values[lo - 1] + frac * (values[lo] - values[lo - 1]);
}

std::pair<double, double> credible_interval(std::span<const double> values, double level) {
  if (!(level > 0.0 && level <= 1.0)) throw InvalidInput("credible level must lie in (0, 1]");
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) throw InvalidInput("credible interval of an empty sample");
  if (level == 1.0) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return {*mn, *mx};
  }
  const double alpha = 1.0 - level;
  return {percentile(v, alpha / 2.0), percentile(v, 1.0 - alpha / 2.0)};
}

}  // namespace smbbayes::diagnostics
