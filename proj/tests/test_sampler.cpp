#include <catch_amalgamated.hpp>

#include <cmath>

#include "errors.hpp"
#include "sampler.hpp"
#include "store.hpp"

using namespace smbbayes;
using namespace smbbayes::sampler;
using Catch::Approx;

namespace {

Box square(double half) {
  Box b;
  b.lower = Vector::Constant(2, -half);
  b.upper = Vector::Constant(2, half);
  return b;
}

Evaluation gaussian(const Vector& x) {
  Evaluation e;
  e.log_posterior = -0.5 * x.squaredNorm();
  e.h = x.squaredNorm();
  return e;
}

Box interval(double lo, double hi) {
  Box b;
  b.lower = Vector::Constant(1, lo);
  b.upper = Vector::Constant(1, hi);
  return b;
}

Matrix diag2(double a, double b) { return Vector{{a, b}}.asDiagonal(); }

}  // namespace

TEST_CASE("rng is reproducible and serializable") {
  Rng a(42, 0), b(42, 0), c(42, 1);
  for (int i = 0; i < 10; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(a.uniform() != c.uniform());
  const std::string saved = a.state();
  const double next = a.normal();
  Rng d;
  d.restore(saved);
  CHECK(d.normal() == next);
  CHECK_THROWS_AS(d.restore("garbage"), InvalidInput);
}

TEST_CASE("fisher covariance examples") {
  const Vector reg = Vector::Constant(2, 1e-300);
  CHECK(fisher_covariance(Matrix::Identity(2, 2), 1.0, reg).isApprox(Matrix::Identity(2, 2)));
  CHECK(fisher_covariance(diag2(2, 1), 1.0, reg).isApprox(diag2(0.25, 1.0)));
  CHECK_THROWS_AS(fisher_covariance(Matrix::Zero(3, 2), 1.0, reg), NumericalError);
  Matrix collinear(3, 2);
  collinear << 1, 2, 2, 4, 3, 6;
  CHECK_THROWS_AS(fisher_covariance(collinear, 1.0, reg), NumericalError);
  // Unit scaling of one parameter does not change the rank verdict.
  CHECK_NOTHROW(fisher_covariance(diag2(1e9, 1e-3), 1.0, reg));
}

TEST_CASE("fisher covariance by finite differences of a linear model") {
  const Matrix a = diag2(2, 1);
  const auto model = [&](const Vector& x) -> Vector { return a * x; };
  const Matrix cov = initial_covariance_fisher(model, Vector{{1.0, 3.0}}, 1.0, Vector::Constant(2, 1e-300));
  CHECK(cov.isApprox(diag2(0.25, 1.0), 1e-6));
}

TEST_CASE("pilot covariance examples") {
  Rng rng(1, 0);
  Matrix cloud(20000, 6);
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) cloud.row(i) = rng.normal(6).transpose();
  const Vector reg = Vector::Constant(6, 1e-12);
  const Matrix cov = initial_covariance_pilot(cloud, reg);
  const double c = adaptation_scale(6);
  CHECK((cov - c * Matrix::Identity(6, 6)).norm() / (c * std::sqrt(6.0)) < 0.05);

  const Matrix same = Matrix::Ones(10, 6);
  CHECK(initial_covariance_pilot(same, reg).isApprox(Matrix(reg.asDiagonal())));
  CHECK_THROWS_AS(initial_covariance_pilot(Matrix::Ones(2, 6), reg), InvalidInput);
}

TEST_CASE("adaptation scale and constant history") {
  CHECK(adaptation_scale(6) == Approx(2.351).margin(1e-3));
  const Vector reg = Vector::Constant(3, 1e-12);
  CHECK(adapt_covariance(Matrix::Constant(50, 3, 7.0), reg).isApprox(Matrix(reg.asDiagonal())));
}

TEST_CASE("box regularization uses squared widths") {
  Box b;
  b.lower = Vector{{0.0, 10.0}};
  b.upper = Vector{{2.0, 11.0}};
  CHECK(b.regularization().isApprox(Vector{{4e-12, 1e-12}}));
  CHECK(b.contains(Vector{{1.0, 10.5}}));
  CHECK_FALSE(b.contains(Vector{{3.0, 10.5}}));
}

TEST_CASE("metropolis step: equal posterior always accepts") {
  const Box box = interval(-1e9, 1e9);
  const Proposal prop(Matrix::Identity(1, 1));
  const auto flat = [](const Vector&) { return Evaluation{0.0, 0.0, 0.0, 0.0, {}}; };
  ChainState s{Vector::Zero(1), flat(Vector::Zero(1))};
  Rng rng(3, 0);
  for (int i = 0; i < 200; ++i) CHECK(metropolis_step(s, prop, box, flat, rng, {false, 0.1}) == Stage::first);
}

TEST_CASE("metropolis step: H higher by 2 accepts with probability 1/e") {
  const Box box = interval(-1e9, 1e9);
  const Proposal prop(Matrix::Identity(1, 1));
  // Current state sits on the plateau; everything else is worse by ΔH = 2.
  const auto target = [](const Vector& x) {
    const bool home = x[0] == 0.0;
    return Evaluation{home ? 0.0 : -1.0, home ? 0.0 : 2.0, 0.0, 0.0, {}};
  };
  Rng rng(4, 0);
  int accepted = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    ChainState s{Vector::Zero(1), target(Vector::Zero(1))};
    if (metropolis_step(s, prop, box, target, rng, {false, 0.1}) == Stage::first) ++accepted;
  }
  const double p = std::exp(-1.0);
  CHECK(std::abs(accepted / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("metropolis step: proposals outside the box are rejected") {
  const Box box = interval(0.0, 1e-6);
  const Proposal prop(Matrix::Identity(1, 1));
  int calls = 0;
  const Target target = [&](const Vector&) {
    ++calls;
    return Evaluation{0.0, 0.0, 0.0, 0.0, {}};
  };
  ChainState s{Vector::Constant(1, 5e-7), Evaluation{0.0, 0.0, 0.0, 0.0, {}}};
  Rng rng(5, 0);
  int moved = 0;
  for (int i = 0; i < 1000; ++i)
    if (metropolis_step(s, prop, box, target, rng, {false, 0.1}) != Stage::rejected) ++moved;
  CHECK(moved < 5);
  CHECK(calls == moved);
  CHECK(box.contains(s.theta));
}

TEST_CASE("evaluator failures count as zero posterior") {
  const Box box = interval(-10, 10);
  const Proposal prop(Matrix::Identity(1, 1));
  const Target target = [](const Vector& x) -> Evaluation {
    if (x[0] > 0) throw InfeasibleOperatingPoint("Q_II <= 0");
    return Evaluation{0.0, 0.0, 0.0, 0.0, {}};
  };
  ChainState s{Vector::Constant(1, -0.5), target(Vector::Constant(1, -0.5))};
  Rng rng(6, 0);
  for (int i = 0; i < 500; ++i) {
    metropolis_step(s, prop, box, target, rng, {true, 0.1});
    CHECK(s.theta[0] <= 0.0);
  }
}

namespace {

/// Three-state target embedded in [0, 3): piecewise-constant density.
struct ThreeState {
  std::array<double, 3> weight{0.2, 0.5, 0.3};
  Box box = interval(0.0, 3.0);
  static int state(double x) { return std::min(2, static_cast<int>(x)); }
  Evaluation operator()(const Vector& x) const {
    return Evaluation{std::log(weight[state(x[0])]), 0.0, 0.0, 0.0, {}};
  }
};

/// Max over state pairs of |N_ij − N_ji| in units of its Poisson σ, and the
/// max occupancy error in units of its (naive) σ.
std::pair<double, double> balance_check(bool dr, long steps) {
  ThreeState t;
  const Proposal prop(Matrix::Constant(1, 1, 1.5 * 1.5));
  Rng rng(77, dr ? 1 : 0);
  ChainState s{Vector::Constant(1, 1.5), t(Vector::Constant(1, 1.5))};
  std::array<std::array<double, 3>, 3> n{};
  std::array<double, 3> occ{};
  int from = ThreeState::state(s.theta[0]);
  for (long i = 0; i < steps; ++i) {
    metropolis_step(s, prop, t.box, std::cref(t), rng, {dr, 0.1});
    const int to = ThreeState::state(s.theta[0]);
    n[from][to] += 1;
    occ[to] += 1;
    from = to;
  }
  double flow = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double sigma = std::sqrt(n[i][j] + n[j][i]);
      flow = std::max(flow, std::abs(n[i][j] - n[j][i]) / std::max(sigma, 1.0));
    }
  double occupancy = 0.0;
  for (int i = 0; i < 3; ++i) occupancy = std::max(occupancy, std::abs(occ[i] / steps - t.weight[i]));
  return {flow, occupancy};
}

}  // namespace

TEST_CASE("detailed balance on a three-state target") {
  for (bool dr : {false, true}) {
    const auto [flow, occupancy] = balance_check(dr, 200000);
    CHECK(flow < 3.0);
    CHECK(occupancy < 0.01);
  }
}

TEST_CASE("delayed rejection raises acceptance for an oversized proposal") {
  const Box box = square(1e3);
  auto rate = [&](bool dr) {
    RunOptions o;
    o.chains = 1;
    o.budget = 4000;
    o.burn_in = 0;
    o.adapt = false;
    o.step.delayed_rejection = dr;
    auto run = start_run(o, 9, {Vector::Zero(2)}, {gaussian(Vector::Zero(2))}, 100.0 * Matrix::Identity(2, 2));
    continue_run(run, o, box, gaussian);
    const auto& st = run.chains[0].state;
    return double(st.accepted_first + st.accepted_second) / st.iteration;
  };
  CHECK(rate(true) > rate(false));
}

TEST_CASE("adaptation converges to the target covariance") {
  Matrix c(2, 2);
  c << 2.0, 0.6, 0.6, 0.5;
  const Matrix lt = c.llt().solve(Matrix::Identity(2, 2));
  const Target target = [&](const Vector& x) { return Evaluation{-0.5 * x.dot(lt * x), 0.0, 0.0, 0.0, {}}; };
  RunOptions o;
  o.chains = 1;
  o.budget = 10000;
  o.burn_in = 0;
  o.adapt_interval = 50;
  auto run = start_run(o, 11, {Vector::Zero(2)}, {target(Vector::Zero(2))}, Matrix::Identity(2, 2));
  continue_run(run, o, square(1e3), target);
  const Matrix adapted = run.chains[0].proposal.covariance() / adaptation_scale(2);
  CHECK((adapted - c).norm() / c.norm() < 0.15);
}

TEST_CASE("gaussian target: mean, covariance and R-hat") {
  RunOptions o;
  o.chains = 2;
  o.budget = 5000;
  o.burn_in = 500;
  o.stop_on_convergence = false;
  auto run = start_run(o, 12, {Vector{{1.0, -1.0}}, Vector{{-1.0, 1.0}}}, {gaussian(Vector{{1.0, -1.0}}), gaussian(Vector{{-1.0, 1.0}})},
                       Matrix::Identity(2, 2));
  continue_run(run, o, square(50), gaussian);
  Matrix pooled(0, 2);
  std::vector<Vector> rows;
  for (const auto& ch : run.chains)
    for (std::size_t i = o.burn_in; i < ch.samples.size(); ++i) rows.push_back(ch.samples[i].theta);
  pooled.resize(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) pooled.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const Vector mean = pooled.colwise().mean();
  const Matrix centered = pooled.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / double(pooled.rows() - 1);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
  CHECK((cov - Matrix::Identity(2, 2)).norm() / std::sqrt(2.0) < 0.15);
  for (double r : current_rhat(run, o.burn_in)) CHECK(r < 1.1);
  for (const auto& ch : run.chains)
    for (const auto& s : ch.samples) CHECK(square(50).contains(s.theta));
}

TEST_CASE("run control: budget, burn-in and early stop") {
  RunOptions o;
  o.chains = 2;
  o.budget = 51;
  o.burn_in = 50;
  auto run = start_run(o, 1, {Vector::Zero(2), Vector::Ones(2)}, {gaussian(Vector::Zero(2)), gaussian(Vector::Ones(2))},
                       Matrix::Identity(2, 2));
  continue_run(run, o, square(10), gaussian);
  CHECK(run.finished);
  CHECK_FALSE(run.converged);
  CHECK(run.chains[0].samples.size() == 51);
  CHECK(current_rhat(run, o.burn_in).empty());

  o.budget = 0;
  CHECK_THROWS_AS(start_run(o, 1, {Vector::Zero(2), Vector::Ones(2)}, {gaussian(Vector::Zero(2)), gaussian(Vector::Ones(2))},
                            Matrix::Identity(2, 2)),
                  InvalidInput);
}

TEST_CASE("threads do not change the samples") {
  RunOptions o;
  o.chains = 3;
  o.budget = 300;
  o.burn_in = 30;
  o.stop_on_convergence = false;
  const std::vector<Vector> x0{Vector::Zero(2), Vector::Ones(2), -Vector::Ones(2)};
  std::vector<Evaluation> e0;
  for (const auto& x : x0) e0.push_back(gaussian(x));
  auto serial = start_run(o, 5, x0, e0, Matrix::Identity(2, 2));
  continue_run(serial, o, square(10), gaussian);
  o.threads = 3;
  auto parallel = start_run(o, 5, x0, e0, Matrix::Identity(2, 2));
  continue_run(parallel, o, square(10), gaussian);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 300; ++i)
      CHECK(serial.chains[c].samples[i].theta == parallel.chains[c].samples[i].theta);
}

TEST_CASE("checkpoint and resume reproduce an uninterrupted run") {
  RunOptions o;
  o.chains = 2;
  o.budget = 400;
  o.burn_in = 50;
  o.stop_on_convergence = false;
  const std::vector<Vector> x0{Vector::Zero(2), Vector::Ones(2)};
  const std::vector<Evaluation> e0{gaussian(x0[0]), gaussian(x0[1])};
  auto full = start_run(o, 8, x0, e0, Matrix::Identity(2, 2));
  continue_run(full, o, square(10), gaussian);

  auto part = start_run(o, 8, x0, e0, Matrix::Identity(2, 2));
  int rounds = 0;
  continue_run(part, o, square(10), gaussian, [&](const RunState&) { return ++rounds < 7; });
  CHECK_FALSE(part.finished);
  const auto text = store::checkpoint_to_json(part).dump();
  auto resumed = store::checkpoint_from_json(nlohmann::json::parse(text));
  continue_run(resumed, o, square(10), gaussian);
  REQUIRE(resumed.chains[0].samples.size() == full.chains[0].samples.size());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < full.chains[c].samples.size(); ++i) {
      CHECK(resumed.chains[c].samples[i].theta == full.chains[c].samples[i].theta);
      CHECK(resumed.chains[c].samples[i].stage == full.chains[c].samples[i].stage);
    }
  CHECK(resumed.rhat_history.size() == full.rhat_history.size());
}

TEST_CASE("corrupt checkpoints are rejected") {
  CHECK_THROWS_AS(store::checkpoint_from_json(nlohmann::json::object()), InvalidInput);
  CHECK_THROWS_AS(store::checkpoint_from_json(nlohmann::json{{"format", "smbbayes-checkpoint-1"}}), InvalidInput);
}
