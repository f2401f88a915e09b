// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "analysis.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "network.hpp"
#include "performance.hpp"
#include "sampler.hpp"
#include "store.hpp"
#include "transport.hpp"
#include "workflows.hpp"

using namespace smbbayes;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, fmt::format("exception: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += fmt::format("; over the {:.0f} s budget", budget_s);
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %-28s %s  (%.1f s) %s\n", id, name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("smbbayes_acceptance_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// 1 -------------------------------------------------------------------------
Outcome m_plane() {
  const auto cfg = config::preset("klatt-reference");
  const auto& op = cfg.operating_point;
  const auto geo = cfg.plant.geometry_for(op);
  const auto m = analysis::flowrate_ratios(op, geo, network::derive_flowrates(op, geo));
  const std::array<double, 4> want{0.614, 0.308, 0.484, 0.250};
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(m.m[j] - want[j]));
  return {worst <= 1e-3, fmt::format("(m_II, m_III) = ({:.4f}, {:.4f}), (m_IV, m_I) = ({:.4f}, {:.4f}), max dev {:.1e}",
                                     m.m2(), m.m3(), m.m4(), m.m1(), worst)};
}

// 2 -------------------------------------------------------------------------
Outcome flow_identities() {
  const auto cfg = config::preset("klatt-reference");
  const auto& op = cfg.operating_point;
  const auto f = network::derive_flowrates(op, cfg.plant.geometry_for(op));
  const double dev = std::abs(f.raffinate - 2.66e-8);
  return {dev <= 1e-11, fmt::format("Q_R = {:.6e} m3/s, |dev| = {:.1e}", f.raffinate, dev)};
}

// 3 -------------------------------------------------------------------------
double first_moment(const transport::TimeProfile& p, std::size_t comp) {
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t k = 0; k < p.samples(); ++k) {
    const double w = (k == 0 || k + 1 == p.samples()) ? 0.5 : 1.0;
    m0 += w * p.at(k, comp);
    m1 += w * p.at(k, comp) * p.time(k);
  }
  return m1 / m0;
}

Outcome column_oracle() {
  const auto cfg = config::preset("klatt-reference");
  const auto geo = cfg.plant.geometry_for(cfg.operating_point);
  const double q = 1.047e-7;
  const double u = q / (geo.column_porosity * geo.cross_section());
  const double F = (1.0 - geo.total_porosity()) / geo.total_porosity();
  const transport::TransportParams params{1e-7, cfg.plant.pore_diffusion, cfg.plant.film_mass_transfer, u};
  transport::TimeProfile in(2, 6000.0, 6001);
  for (std::size_t k = 0; k < in.samples(); ++k)
    if (in.time(k) <= 20.0) in.at(k, 0) = in.at(k, 1) = 1.0;

  auto disc = cfg.plant.disc;
  disc.axial_cells = 40;
  disc.mode = transport::ColumnMode::grm;
  transport::ColumnModel grm(geo, params, cfg.plant.isotherm, disc);
  disc.mode = transport::ColumnMode::edm_equilibrium;
  transport::ColumnModel edm(geo, params, cfg.plant.isotherm, disc);
  const auto a = grm.integrate_period(grm.empty_state(), in, 6000.0, 6001).outlet;
  const auto b = edm.integrate_period(edm.empty_state(), in, 6000.0, 6001).outlet;

  double worst_rt = 0.0;
  for (const auto* out : {&a, &b})
    for (std::size_t i = 0; i < 2; ++i) {
      const double expected = geo.length / u * (1.0 + F * cfg.plant.isotherm.henry[i]);
      const double got = first_moment(*out, i) - first_moment(in, i);
      worst_rt = std::max(worst_rt, std::abs(got - expected) / expected);
    }
  double diff = 0.0;
  for (std::size_t k = 0; k < a.samples(); ++k)
    for (std::size_t i = 0; i < 2; ++i) diff = std::max(diff, std::abs(a.at(k, i) - b.at(k, i)));
  const double rel = diff / std::max(a.max_value(), b.max_value());
  return {worst_rt <= 0.01 && rel < 0.01,
          fmt::format("max retention error {:.3f}%, grm vs edm max diff {:.3f}% of peak", 100 * worst_rt, 100 * rel)};
}

// 4 -------------------------------------------------------------------------
Outcome reference_simulation() {
  const auto cfg = config::preset("klatt-reference");
  const auto& op = cfg.operating_point;
  const auto geo = cfg.plant.geometry_for(op);
  const auto css = network::simulate_to_css(cfg.plant, op);
  const auto rec = performance::indicators(css.averages.extract, css.averages.raffinate,
                                           network::derive_flowrates(op, geo), op, cfg.plant.network, geo);
  const double pu_e = rec.extract_purity[1], pu_r = rec.raffinate_purity[0];
  const double y_e = rec.extract_yield[1], y_r = rec.raffinate_yield[0];
  const bool ok = css.switches <= 300 && css.metric < 1e-5 && pu_e >= 0.95 && pu_r >= 0.95 && y_e >= 0.95 &&
                  y_r >= 0.95;
  return {ok, fmt::format("{} switches, metric {:.2e}, Pu_E,fru {:.5f}, Pu_R,glc {:.5f}, Y_E,fru {:.5f}, Y_R,glc {:.5f}",
                          css.switches, css.metric, pu_e, pu_r, y_e, y_r)};
}

// 5 -------------------------------------------------------------------------
sampler::Box box1(double lo, double hi) {
  sampler::Box b;
  b.lower = sampler::Vector::Constant(1, lo);
  b.upper = sampler::Vector::Constant(1, hi);
  return b;
}

/// Largest |N_ij − N_ji| / sqrt(N_ij + N_ji) over state pairs of a three-state
/// piecewise-constant target on [0, 3), and the largest occupancy z-score.
std::pair<double, double> detailed_balance(bool dr) {
  const std::array<double, 3> w{0.2, 0.5, 0.3};
  const auto state = [](double x) { return std::min(2, static_cast<int>(x)); };
  const sampler::Target target = [&](const sampler::Vector& x) {
    sampler::Evaluation e;
    e.log_posterior = std::log(w[static_cast<std::size_t>(state(x[0]))]);
    return e;
  };
  const auto box = box1(0.0, 3.0);
  const sampler::Proposal prop(sampler::Matrix::Constant(1, 1, 2.25));
  sampler::Rng rng(2024, dr ? 1 : 0);
  sampler::ChainState s{sampler::Vector::Constant(1, 1.5), target(sampler::Vector::Constant(1, 1.5))};
  const long steps = 1000000;
  std::array<std::array<double, 3>, 3> n{};
  std::array<double, 3> occ{};
  int from = state(s.theta[0]);
  for (long i = 0; i < steps; ++i) {
    sampler::metropolis_step(s, prop, box, target, rng, {dr, 0.1});
    const int to = state(s.theta[0]);
    n[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] += 1;
    occ[static_cast<std::size_t>(to)] += 1;
    from = to;
  }
  double flow = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      flow = std::max(flow, std::abs(n[i][j] - n[j][i]) / std::sqrt(std::max(1.0, n[i][j] + n[j][i])));
  double occupancy = 0.0;
  for (std::size_t i = 0; i < 3; ++i) occupancy = std::max(occupancy, std::abs(occ[i] / steps - w[i]));
  return {flow, occupancy};
}

sampler::Evaluation standard_normal(const sampler::Vector& x) {
  sampler::Evaluation e;
  e.log_posterior = -0.5 * x.squaredNorm();
  e.h = x.squaredNorm();
  return e;
}

Outcome sampler_correctness() {
  std::string detail;
  bool ok = true;

  for (bool dr : {false, true}) {
    const auto [flow, occ] = detailed_balance(dr);
    const bool pass = flow < 3.0;
    ok = ok && pass;
    detail += fmt::format("(a) {} flow imbalance {:.2f} sigma, occupancy err {:.4f}; ", dr ? "MH+DR" : "MH", flow, occ);
  }

  sampler::Box box;
  box.lower = sampler::Vector::Constant(2, -50.0);
  box.upper = sampler::Vector::Constant(2, 50.0);
  sampler::RunOptions o;
  o.chains = 2;
  o.budget = 5000;
  o.burn_in = 500;
  o.stop_on_convergence = false;
  o.threads = 2;
  const std::vector<sampler::Vector> x0{sampler::Vector{{1.0, -1.0}}, sampler::Vector{{-1.0, 1.0}}};
  auto run = sampler::start_run(o, 2024, x0, {standard_normal(x0[0]), standard_normal(x0[1])},
                                sampler::Matrix::Identity(2, 2));
  sampler::continue_run(run, o, box, standard_normal);
  std::vector<sampler::Vector> pts;
  for (const auto& ch : run.chains)
    for (std::size_t i = static_cast<std::size_t>(o.burn_in); i < ch.samples.size(); ++i) pts.push_back(ch.samples[i].theta);
  sampler::Matrix m(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  const sampler::Vector mean = m.colwise().mean();
  const sampler::Matrix centered = m.rowwise() - mean.transpose();
  const sampler::Matrix cov = centered.transpose() * centered / double(m.rows() - 1);
  const double cov_err = (cov - sampler::Matrix::Identity(2, 2)).norm() / std::sqrt(2.0);
  const auto rhat = sampler::current_rhat(run, o.burn_in);
  const double rmax = rhat.empty() ? INFINITY : *std::max_element(rhat.begin(), rhat.end());
  const bool gauss = mean.cwiseAbs().maxCoeff() <= 0.05 && cov_err <= 0.10 && rmax < 1.1;
  ok = ok && gauss;
  detail += fmt::format("(b) |mean| max {:.4f} sigma, cov err {:.1f}%, max Rhat {:.4f}; ", mean.cwiseAbs().maxCoeff(),
                        100 * cov_err, rmax);

  auto acceptance = [&](bool dr) {
    sampler::RunOptions p;
    p.chains = 1;
    p.budget = 5000;
    p.burn_in = 0;
    p.adapt = false;
    p.step.delayed_rejection = dr;
    auto r = sampler::start_run(p, 2024, {sampler::Vector::Zero(2)}, {standard_normal(sampler::Vector::Zero(2))},
                                100.0 * sampler::Matrix::Identity(2, 2));
    sampler::continue_run(r, p, box, standard_normal);
    const auto& st = r.chains[0].state;
    return double(st.accepted_first + st.accepted_second) / double(st.iteration);
  };
  const double with = acceptance(true), without = acceptance(false);
  ok = ok && with > without;
  detail += fmt::format("(c) acceptance {:.3f} with DR vs {:.3f} without", with, without);
  return {ok, detail};
}

// 6 -------------------------------------------------------------------------
Outcome diagnostics_oracles() {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5};
  const std::vector<diagnostics::ChainView> same{a, a}, shifted{a, b};
  const double r1 = diagnostics::gelman_rhat(same), r2 = diagnostics::gelman_rhat(shifted);
  const bool rhat_ok = std::round(r1 * 1e4) / 1e4 == 0.8660 && std::round(r2 * 1e4) / 1e4 == 1.0247;

  const std::size_t k = 10000;
  std::vector<std::vector<double>> chains(2, std::vector<double>(k));
  for (std::size_t c = 0; c < 2; ++c) {
    sampler::Rng rng(2024, c);
    double x = rng.normal() / std::sqrt(0.75);
    for (auto& v : chains[c]) v = x = 0.5 * x + rng.normal();
  }
  const std::vector<diagnostics::ChainView> views{chains[0], chains[1]};
  const double ess = diagnostics::effective_sample_size(views);
  const double expected = 2.0 * k / 3.0;
  const bool ess_ok = std::abs(ess - expected) / expected <= 0.2;

  std::vector<double> v(100);
  for (std::size_t i = 0; i < 100; ++i) v[i] = static_cast<double>(i + 1);
  const auto [lo, hi] = diagnostics::credible_interval(v, 0.66);
  const bool ci_ok = lo == 17.5 && hi == 83.5;
  return {rhat_ok && ess_ok && ci_ok,
          fmt::format("Rhat {:.4f} / {:.4f}; ESS {:.0f} vs {:.0f} ({:+.1f}%); 66% CI of 1..100 = [{}, {}] (Hazen rule)", r1,
                      r2, ess, expected, 100 * (ess - expected) / expected, lo, hi)};
}

// 7 + 9 ---------------------------------------------------------------------
std::string desk_store;

Outcome desk_posterior() {
  const auto cfg = config::preset("klatt-desk");
  desk_store = temp_dir("desk_run");
  workflows::SampleOptions opt;
  opt.threads = threads();
  const auto summary = workflows::cmd_sample(cfg, desk_store, opt);
  const auto out = temp_dir("desk_analysis");
  workflows::cmd_analyze(cfg, desk_store, {"fits", "triangle", "pareto", "marginals", "ci-table"}, out, threads());
  const auto fits = store::read_json(store::join(out, "fits.json"));
  const double frac_a = fits["region_fraction"]["A"].get<double>();
  const auto mode = [&](const char* key) {
    const auto& h = fits[key];
    return h.contains("mode") ? h["mode"].get<double>() : NAN;
  };
  const double d32 = mode("m_III_minus_m_II"), d14 = mode("m_I_minus_m_IV");
  const auto& fit = fits["m_III_vs_m_II"];
  const double slope = fit.contains("slope") ? fit["slope"].get<double>() : NAN;
  const double r2 = fit.contains("r2") ? fit["r2"].get<double>() : NAN;
  const bool ok = frac_a >= 0.90 && d32 >= 0.10 && d32 <= 0.20 && d14 >= 0.30 && d14 <= 0.45 && slope >= 0.9 &&
                  slope <= 1.1;
  return {ok, fmt::format("{} samples/chain ({}), region A {:.1f}% of {}, mode(m_III-m_II) {:.4f}, "
                          "mode(m_I-m_IV) {:.4f}, slope {:.4f} (R2 {:.3f})",
                          summary.samples_per_chain, summary.converged ? "Rhat converged" : "budget reached",
                          100 * frac_a, fits["samples"].get<int>(), d32, d14, slope, r2)};
}

Outcome ppc_containment() {
  const auto cfg = config::preset("klatt-desk");
  if (desk_store.empty() || !std::filesystem::exists(store::join(desk_store, "run_metadata.json")))
    return {false, "desk-scale store missing"};
  const auto out = temp_dir("desk_ppc");
  workflows::cmd_analyze(cfg, desk_store, {"ppc"}, out, threads());
  const auto env = store::read_table(store::join(out, "ppc_envelope.csv"));
  const auto reps = store::read_table(store::join(out, "ppc_replicates.csv"));
  const std::size_t points = env.rows();
  std::size_t violations = 0, replicates = 0;
  for (const auto& comp : cfg.components) {
    const auto& lo = env.column(fmt::format("lower_{}_mol_per_m3", comp));
    const auto& hi = env.column(fmt::format("upper_{}_mol_per_m3", comp));
    const auto& c = reps.column(fmt::format("c_{}_mol_per_m3", comp));
    replicates = c.size() / points;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] < lo[i % points] || c[i] > hi[i % points]) ++violations;
  }

  // Identical replicates give a zero-width envelope.
  const auto op = cfg.operating_point;
  const auto css = network::simulate_to_css(cfg.plant, op);
  const auto profile = network::axial_profile(css.state, cfg.plant, op);
  const std::vector<network::AxialProfile> same(3, profile);
  const auto zero = analysis::ppc_envelope(same);
  bool zero_width = true;
  for (std::size_t i = 0; i < zero.lower.size(); ++i) zero_width = zero_width && zero.lower[i] == zero.upper[i];

  double width = 0.0;
  for (const auto& comp : cfg.components) {
    const auto& lo = env.column(fmt::format("lower_{}_mol_per_m3", comp));
    const auto& hi = env.column(fmt::format("upper_{}_mol_per_m3", comp));
    for (std::size_t p = 0; p < points; ++p) width = std::max(width, hi[p] - lo[p]);
  }
  return {violations == 0 && zero_width && replicates >= 2,
          fmt::format("{} replicates x {} points, {} violations, max envelope width {:.1f} mol/m3, "
                      "identical-replicate envelope zero width: {}",
                      replicates, points, violations, width, zero_width ? "yes" : "no")};
}

// 8 -------------------------------------------------------------------------
Outcome pareto_oracle() {
  sampler::Rng rng(2024, 8);
  int mismatches = 0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 1000);
    largest = std::max(largest, n);
    const bool grid = trial % 2 == 0;  // coarse grid forces ties
    std::vector<std::pair<double, double>> p(n);
    for (auto& x : p) {
      x = {rng.uniform(), rng.uniform()};
      if (grid) x = {std::round(x.first * 10), std::round(x.second * 10)};
    }
    const auto fast = analysis::pareto_front(p);
    std::vector<bool> slow(n, true);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (p[j].first >= p[i].first && p[j].second >= p[i].second &&
            (p[j].first > p[i].first || p[j].second > p[i].second))
          slow[i] = false;
    if (fast != slow) ++mismatches;
  }
  return {mismatches == 0, fmt::format("100 instances (largest N = {}), {} mismatches", largest, mismatches)};
}

}  // namespace

int main() {
  report(1, "m-plane mapping", 1, m_plane);
  report(2, "flowrate identities", 1, flow_identities);
  report(3, "column-solver oracle", 30, column_oracle);
  report(4, "reference forward sim", 600, reference_simulation);
  report(5, "sampler correctness", 120, sampler_correctness);
  report(6, "diagnostics oracles", 10, diagnostics_oracles);
  report(7, "desk-scale posterior", 4 * 3600, desk_posterior);
  report(8, "pareto oracle", 10, pareto_oracle);
  report(9, "ppc containment", 300, ppc_containment);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
