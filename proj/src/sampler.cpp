#include "sampler.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numbers>
#include <sstream>
#include <thread>

#include "diagnostics.hpp"
#include "errors.hpp"

namespace smbbayes::sampler {

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector Rng::normal(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (!is) throw InvalidInput("malformed random generator state");
}

bool Box::contains(const Vector& x) const {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

Vector Box::regularization(double scale) const { return scale * width().array().square().matrix(); }

Proposal::Proposal(Matrix covariance) : cov_(std::move(covariance)) {
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) throw NumericalError("proposal covariance is not positive definite");
  chol_ = llt.matrixL();
}

Vector Proposal::draw(const Vector& center, Rng& rng, double scale) const {
  return center + scale * (chol_ * rng.normal(center.size()));
}

double Proposal::mahalanobis2(const Vector& d) const {
  return chol_.triangularView<Eigen::Lower>().solve(d).squaredNorm();
}

Matrix fisher_covariance(const Matrix& jacobian, double sigma0, const Vector& regularization) {
  const Eigen::Index n = jacobian.cols();
  if (regularization.size() != n) throw InvalidInput("regularization has the wrong size");
  if (!(sigma0 > 0.0)) throw InvalidInput("sigma0 must be > 0");
  // Column equilibration keeps the rank test independent of parameter units.
  const Vector norms = jacobian.colwise().norm();
  if (jacobian.rows() < n || !(norms.minCoeff() > 0.0) || !norms.allFinite())
    throw NumericalError("Jacobian is rank deficient; Fisher covariance undefined");
  const Matrix scaled = jacobian * norms.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Matrix> svd(scaled, Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  if (s.minCoeff() <= 1e-12 * s.maxCoeff())
    throw NumericalError("Jacobian is rank deficient; Fisher covariance undefined");
  const Matrix v = norms.cwiseInverse().asDiagonal() * svd.matrixV();
  Matrix cov = sigma0 * v * s.array().square().inverse().matrix().asDiagonal() * v.transpose();
  cov += regularization.asDiagonal();
  return 0.5 * (cov + cov.transpose());
}

Matrix initial_covariance_fisher(const std::function<Vector(const Vector&)>& model, const Vector& theta0,
                                 double sigma0, const Vector& regularization, double relative_step) {
  const Eigen::Index n = theta0.size();
  Matrix jac;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = relative_step * (theta0[i] != 0.0 ? std::abs(theta0[i]) : 1.0);
    Vector plus = theta0, minus = theta0;
    plus[i] += h;
    minus[i] -= h;
    const Vector fp = model(plus);
    const Vector fm = model(minus);
    if (i == 0) jac.resize(fp.size(), n);
    if (fp.size() != jac.rows() || fm.size() != jac.rows()) throw NumericalError("model output size changed");
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return fisher_covariance(jac, sigma0, regularization);
}

double adaptation_scale(Eigen::Index dims) { return 2.4 * 2.4 / std::sqrt(static_cast<double>(dims)); }

namespace {

Matrix sample_covariance(const Matrix& rows) {
  const Vector mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

}  // namespace

Matrix initial_covariance_pilot(const Matrix& pilot, const Vector& regularization) {
  const Eigen::Index n = pilot.cols();
  if (pilot.rows() < n + 1) throw InvalidInput("pilot run needs at least n + 1 samples");
  return adapt_covariance(pilot, regularization);
}

Matrix box_covariance(const Box& box, double fraction) {
  if (!(fraction > 0.0)) throw InvalidInput("box covariance fraction must be > 0");
  return (fraction * box.width()).array().square().matrix().asDiagonal();
}

Matrix adapt_covariance(const Matrix& history, const Vector& regularization) {
  if (history.rows() < 2) throw InvalidInput("covariance adaptation needs at least two samples");
  Matrix cov = adaptation_scale(history.cols()) * sample_covariance(history);
  cov += regularization.asDiagonal();
  return 0.5 * (cov + cov.transpose());
}

namespace {

Evaluation evaluate(const Target& target, const Box& box, const Vector& x) {
  if (!box.contains(x)) return {};
  try {
    Evaluation e = target(x);
    if (std::isnan(e.log_posterior)) e.log_posterior = -std::numeric_limits<double>::infinity();
    return e;
  } catch (const Error&) {
    return {};
  }
}

double log1m_exp(double log_a) {
  if (log_a >= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-std::exp(log_a));
}

}  // namespace

Stage metropolis_step(ChainState& chain, const Proposal& proposal, const Box& box, const Target& target,
                      Rng& rng, const StepOptions& options) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  ++chain.iteration;
  const Vector& x = chain.theta;
  const double lx = chain.eval.log_posterior;

  const Vector y1 = proposal.draw(x, rng);
  Evaluation e1 = evaluate(target, box, y1);
  const double la1 = e1.feasible() ? std::min(0.0, e1.log_posterior - lx) : ninf;
  const double beta1 = rng.uniform();
  if (beta1 <= std::exp(la1)) {
    chain.theta = y1;
    chain.eval = std::move(e1);
    ++chain.accepted_first;
    return Stage::first;
  }
  if (!options.delayed_rejection) return Stage::rejected;

  ++chain.proposals_second;
  const Vector y2 = proposal.draw(x, rng, std::sqrt(options.shrink));
  Evaluation e2 = evaluate(target, box, y2);
  const double beta2 = rng.uniform();
  if (!e2.feasible()) return Stage::rejected;

  const double la_back = e1.feasible() ? std::min(0.0, e1.log_posterior - e2.log_posterior) : ninf;
  const double num = e2.log_posterior + log1m_exp(la_back) - 0.5 * proposal.mahalanobis2(y1 - y2);
  const double den = lx + log1m_exp(la1) - 0.5 * proposal.mahalanobis2(y1 - x);
  const double la2 = std::isfinite(num) ? std::min(0.0, num - den) : ninf;
  if (beta2 <= std::exp(la2)) {
    chain.theta = y2;
    chain.eval = std::move(e2);
    ++chain.accepted_second;
    return Stage::second;
  }
  return Stage::rejected;
}

RunState start_run(const RunOptions& options, std::uint64_t seed, const std::vector<Vector>& initial_points,
                   const std::vector<Evaluation>& initial_evals, const Matrix& initial_covariance) {
  if (options.chains < 1) throw InvalidInput("at least one chain is required");
  if (static_cast<int>(initial_points.size()) != options.chains ||
      initial_evals.size() != initial_points.size())
    throw InvalidInput("one initial point per chain is required");
  if (options.budget < 1 || options.burn_in < 0 || options.burn_in >= options.budget)
    throw InvalidInput("sample budget must exceed the burn-in length");
  if (options.monitor_interval < 1 || options.adapt_interval < 1)
    throw InvalidInput("monitor and adaptation intervals must be >= 1");
  if (!(options.step.shrink > 0.0 && options.step.shrink < 1.0))
    throw InvalidInput("delayed-rejection shrink factor must lie in (0, 1)");
  RunState run;
  run.seed = seed;
  for (int c = 0; c < options.chains; ++c) {
    if (!initial_evals[c].feasible()) throw NumericalError("initial point of a chain is not feasible");
    Chain chain;
    chain.state.theta = initial_points[c];
    chain.state.eval = initial_evals[c];
    chain.rng = Rng(seed, static_cast<std::uint64_t>(c));
    chain.proposal = Proposal(initial_covariance);
    chain.samples.reserve(options.budget);
    run.chains.push_back(std::move(chain));
  }
  return run;
}

namespace {

void advance_chain(Chain& chain, int steps, bool adapt, const RunOptions& options, const Box& box,
                   const Target& target) {
  const Vector reg = box.regularization(options.regularization_scale);
  for (int s = 0; s < steps; ++s) {
    const Stage stage = metropolis_step(chain.state, chain.proposal, box, target, chain.rng, options.step);
    chain.samples.push_back({chain.state.theta, chain.state.eval, stage});
    const long k = static_cast<long>(chain.samples.size());
    if (adapt && k > options.burn_in && (k - options.burn_in) % options.adapt_interval == 0) {
      Matrix history(k, box.dims());
      for (long i = 0; i < k; ++i) history.row(i) = chain.samples[i].theta.transpose();
      chain.proposal = Proposal(adapt_covariance(history, reg));
    }
  }
}

}  // namespace

std::vector<std::vector<double>> parameter_chains(const RunState& run, int burn_in, Eigen::Index dim) {
  std::vector<std::vector<double>> out;
  for (const auto& chain : run.chains) {
    std::vector<double> v;
    for (std::size_t i = static_cast<std::size_t>(burn_in); i < chain.samples.size(); ++i)
      v.push_back(chain.samples[i].theta[dim]);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> current_rhat(const RunState& run, int burn_in) {
  if (run.chains.size() < 2) return {};
  const Eigen::Index n = run.chains[0].state.theta.size();
  std::vector<double> r(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index d = 0; d < n; ++d) {
    const auto chains = parameter_chains(run, burn_in, d);
    if (chains[0].size() < 2) return {};
    std::vector<diagnostics::ChainView> views(chains.begin(), chains.end());
    try {
      r[d] = diagnostics::gelman_rhat(views);
    } catch (const Undefined&) {
    }
  }
  return r;
}

void continue_run(RunState& run, const RunOptions& options, const Box& box, const Target& target,
                  const RoundCallback& on_round) {
  const int n_chains = static_cast<int>(run.chains.size());
  while (!run.finished) {
    const long done = static_cast<long>(run.chains[0].samples.size());
    if (done >= options.budget) {
      run.finished = true;
      break;
    }
    const int steps = static_cast<int>(std::min<long>(options.monitor_interval, options.budget - done));
    const bool adapt = options.adapt && !run.frozen;

    const int workers = std::clamp(options.threads, 1, n_chains);
    if (workers == 1) {
      for (auto& chain : run.chains) advance_chain(chain, steps, adapt, options, box, target);
    } else {
      std::atomic<int> next{0};
      std::vector<std::exception_ptr> errors(n_chains);
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (int c = next++; c < n_chains; c = next++) {
            try {
              advance_chain(run.chains[c], steps, adapt, options, box, target);
            } catch (...) {
              errors[c] = std::current_exception();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    const long total = done + steps;
    if (total - options.burn_in >= 2) {
      const auto rhat = current_rhat(run, options.burn_in);
      if (!rhat.empty()) {
        run.rhat_history.push_back({total, rhat});
        const bool below = std::all_of(rhat.begin(), rhat.end(),
                                       [&](double r) { return r < options.rhat_threshold; });
        if (below) {
          run.converged = true;
          run.frozen = true;
          if (options.stop_on_convergence) run.finished = true;
        }
      }
    }
    if (total >= options.budget) run.finished = true;
    if (on_round && !on_round(run)) break;
  }
}

}  // namespace smbbayes::sampler
