#pragma once

// Convergence and summary statistics over multiple Markov chains.

#include <span>
#include <utility>
#include <vector>

namespace smbbayes::diagnostics {

using ChainView = std::span<const double>;

/// Potential scale reduction factor. All chains must have the same length k >= 2.
/// Throws Undefined when the within-chain variance is zero.
double gelman_rhat(std::span<const ChainView> chains);

/// Biased autocorrelation at `lag`, pooling the autocovariances of all chains
/// around the grand mean.
double autocorrelation(std::span<const ChainView> chains, std::size_t lag);
double autocorrelation(ChainView values, std::size_t lag);

/// m·k / (1 + 2 Σ ρ_t), summing until the first lag with ρ_t + ρ_{t+1} < 0.
double effective_sample_size(std::span<const ChainView> chains);

/// Empirical percentile with the Hazen plotting position h = n·p + 1/2 (1-based).
double percentile(std::vector<double> values, double p);

/// Central interval holding `level` of the mass: percentiles (1−level)/2 and (1+level)/2.
std::pair<double, double> credible_interval(std::span<const double> values, double level);

}  // namespace smbbayes::diagnostics
