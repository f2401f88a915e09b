#pragma once

// Adaptive Metropolis with one stage of delayed rejection, run over several
// chains with periodic R-hat monitoring.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smbbayes::sampler {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// mt19937_64 stream with a serializable state. Draws are reproducible
/// across platforms (no std:: distributions).
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t seed, std::uint64_t stream);

  double uniform();  // [0, 1)
  double normal();   // Box-Muller, no cached second value
  Vector normal(Eigen::Index n);

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

/// Outcome of one posterior evaluation. `extras` carries model outputs that
/// are stored next to each sample.
struct Evaluation {
  double log_posterior = -std::numeric_limits<double>::infinity();
  double h = std::numeric_limits<double>::quiet_NaN();
  double f = std::numeric_limits<double>::quiet_NaN();
  double g = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> extras;

  bool feasible() const { return std::isfinite(log_posterior); }
};

/// Must be reentrant; points outside the prior support are never passed in.
using Target = std::function<Evaluation(const Vector&)>;

struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index dims() const { return lower.size(); }
  bool contains(const Vector& x) const;
  Vector width() const { return upper - lower; }
  /// ε_a per coordinate.
  Vector regularization(double scale = 1e-12) const;
};

class Proposal {
 public:
  Proposal() = default;
  explicit Proposal(Matrix covariance);

  const Matrix& covariance() const { return cov_; }
  const Matrix& factor() const { return chol_; }  // lower triangular R, Σ = R Rᵀ
  Vector draw(const Vector& center, Rng& rng, double scale = 1.0) const;
  /// ‖R⁻¹ d‖².
  double mahalanobis2(const Vector& d) const;

 private:
  Matrix cov_;
  Matrix chol_;
};

/// σ̃0 · V (SᵀS)⁻¹ Vᵀ + diag(ε_a) from a central-difference Jacobian of `model`.
Matrix initial_covariance_fisher(const std::function<Vector(const Vector&)>& model, const Vector& theta0,
                                 double sigma0, const Vector& regularization, double relative_step = 1e-4);
/// Same, from an already computed Jacobian (outputs × parameters).
Matrix fisher_covariance(const Matrix& jacobian, double sigma0, const Vector& regularization);

/// c · Cov(pilot) + diag(ε_a); rows of `pilot` are samples.
Matrix initial_covariance_pilot(const Matrix& pilot, const Vector& regularization);

Matrix box_covariance(const Box& box, double fraction);

double adaptation_scale(Eigen::Index dims);

/// c · Cov(history) + diag(ε_a); rows of `history` are samples.
Matrix adapt_covariance(const Matrix& history, const Vector& regularization);

enum class Stage : int { rejected = 0, first = 1, second = 2 };

struct Sample {
  Vector theta;
  Evaluation eval;
  Stage stage = Stage::rejected;
};

struct ChainState {
  Vector theta;
  Evaluation eval;
  long iteration = 0;
  long accepted_first = 0;
  long accepted_second = 0;
  long proposals_second = 0;
};

struct StepOptions {
  bool delayed_rejection = true;
  double shrink = 0.1;  // a
};

/// One Metropolis step, followed by a delayed-rejection stage if the first
/// candidate is rejected. Returns the stage that produced the new state.
Stage metropolis_step(ChainState& chain, const Proposal& proposal, const Box& box, const Target& target,
                      Rng& rng, const StepOptions& options);

struct RunOptions {
  int chains = 2;
  int budget = 400;  // samples per chain, burn-in included
  int burn_in = 50;
  double rhat_threshold = 1.1;
  int monitor_interval = 10;
  int adapt_interval = 50;
  bool adapt = true;
  bool stop_on_convergence = true;
  int threads = 1;
  StepOptions step;
  double regularization_scale = 1e-12;
};

struct Chain {
  ChainState state;
  Rng rng;
  Proposal proposal;
  std::vector<Sample> samples;
};

struct RhatRecord {
  long samples = 0;  // per chain
  std::vector<double> rhat;
};

struct RunState {
  std::uint64_t seed = 0;
  std::vector<Chain> chains;
  bool frozen = false;
  bool converged = false;
  bool finished = false;
  std::vector<RhatRecord> rhat_history;
};

/// Starts chains at the given points (one per chain); each point must be feasible.
RunState start_run(const RunOptions& options, std::uint64_t seed, const std::vector<Vector>& initial_points,
                   const std::vector<Evaluation>& initial_evals, const Matrix& initial_covariance);

/// Called after every monitoring round; returning false stops the run early
/// (the state is left resumable).
using RoundCallback = std::function<bool(const RunState&)>;

/// Continues until convergence, the budget, or the callback asks to stop.
void continue_run(RunState& run, const RunOptions& options, const Box& box, const Target& target,
                  const RoundCallback& on_round = {});

/// R-hat per parameter over post-burn-in samples; empty if undefined.
std::vector<double> current_rhat(const RunState& run, int burn_in);

/// Post-burn-in values of parameter `dim` for every chain.
std::vector<std::vector<double>> parameter_chains(const RunState& run, int burn_in, Eigen::Index dim);

}  // namespace smbbayes::sampler
