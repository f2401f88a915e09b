#include "workflows.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "diagnostics.hpp"
#include "errors.hpp"
#include "store.hpp"

namespace smbbayes::workflows {

using nlohmann::json;
using network::OperatingPoint;

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers; rethrows the
/// first failure in index order.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

OperatingPoint to_point(const sampler::Vector& v) {
  std::array<double, OperatingPoint::size> a{};
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = v[static_cast<Eigen::Index>(i)];
  return OperatingPoint::from_array(a);
}

sampler::Vector to_vector(const OperatingPoint& op) {
  const auto a = op.to_array();
  sampler::Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i];
  return v;
}

sampler::Box make_box(const config::RunConfig& cfg) {
  sampler::Box box;
  box.lower = sampler::Vector(OperatingPoint::size);
  box.upper = sampler::Vector(OperatingPoint::size);
  for (std::size_t i = 0; i < OperatingPoint::size; ++i) {
    box.lower[static_cast<Eigen::Index>(i)] = cfg.sampler.bounds.lower[i];
    box.upper[static_cast<Eigen::Index>(i)] = cfg.sampler.bounds.upper[i];
  }
  return box;
}

const std::array<std::string_view, 4> zone_labels{"I", "II", "III", "IV"};

std::string purity_class(double pu_extract, double pu_raffinate) {
  if (!(pu_extract >= 0.0) || !(pu_raffinate >= 0.0)) return "below";
  const double worst = std::min(pu_extract, pu_raffinate);
  if (worst >= 0.999) return "99.9";
  if (worst >= 0.99) return "99";
  return "below";
}

}  // namespace

std::vector<std::string> parameter_columns() {
  return {"L_m", "t_s_s", "Q_rec_m3_per_s", "Q_F_m3_per_s", "Q_D_m3_per_s", "Q_E_m3_per_s"};
}

std::vector<std::string> extras_names(const config::RunConfig& cfg) {
  std::vector<std::string> names;
  const std::array<std::pair<const char*, const char*>, 4> kinds{
      {{"cavg", "_mol_per_m3"}, {"Pu", ""}, {"Y", ""}, {"Pr", "_mol_per_m3_s"}}};
  for (const auto& [kind, unit] : kinds)
    for (const char* port : {"E", "R"})
      for (const auto& c : cfg.components) names.push_back(fmt::format("{}_{}_{}{}", kind, port, c, unit));
  for (auto z : zone_labels) names.push_back(fmt::format("m_{}", z));
  names.push_back("css_switches");
  return names;
}

PointResult evaluate_point(const config::RunConfig& cfg, const OperatingPoint& op) {
  PointResult r;
  const auto geometry = cfg.plant.geometry_for(op);
  r.flows = network::derive_flowrates(op, geometry);
  r.css = network::simulate_to_css(cfg.plant, op);
  try {
    r.record = performance::indicators(r.css.averages.extract, r.css.averages.raffinate, r.flows, op,
                                       cfg.plant.network, geometry);
    performance::apply_objective(r.record, cfg.objective);
  } catch (const Undefined&) {
    const std::size_t m = cfg.plant.isotherm.components();
    r.degenerate = true;
    r.record = {};
    r.record.extract_average = r.css.averages.extract;
    r.record.raffinate_average = r.css.averages.raffinate;
    for (auto* v : {&r.record.extract_purity, &r.record.raffinate_purity, &r.record.extract_yield,
                    &r.record.raffinate_yield, &r.record.extract_productivity, &r.record.raffinate_productivity})
      v->assign(m, 0.0);
  }
  r.ratios = analysis::flowrate_ratios(op, geometry, r.flows);
  r.region = analysis::classify_region(r.ratios, cfg.plant.isotherm);
  return r;
}

sampler::Evaluation evaluate_target(const config::RunConfig& cfg, const sampler::Vector& theta) {
  sampler::Evaluation e;
  e.extras.assign(extras_names(cfg).size(), nan_v);
  PointResult r;
  try {
    r = evaluate_point(cfg, to_point(theta));
  } catch (const Error&) {
    return e;
  }
  const auto& rec = r.record;
  std::size_t k = 0;
  for (const auto* pair : {&rec.extract_average, &rec.raffinate_average, &rec.extract_purity, &rec.raffinate_purity,
                           &rec.extract_yield, &rec.raffinate_yield, &rec.extract_productivity,
                           &rec.raffinate_productivity})
    for (double v : *pair) e.extras[k++] = v;
  for (double m : r.ratios.m) e.extras[k++] = m;
  e.extras[k++] = r.css.switches;
  if (r.degenerate) return e;
  e.h = rec.h;
  e.f = rec.f;
  e.g = rec.g;
  e.log_posterior = performance::log_likelihood(rec.h);
  return e;
}

// ---------------------------------------------------------------------------
// simulate

namespace {

json record_json(const config::RunConfig& cfg, const PointResult& r, const OperatingPoint& op) {
  json ports;
  const auto& rec = r.record;
  for (const auto& [port, avg, pu, y, pr] :
       {std::tuple{"extract", &rec.extract_average, &rec.extract_purity, &rec.extract_yield, &rec.extract_productivity},
        std::tuple{"raffinate", &rec.raffinate_average, &rec.raffinate_purity, &rec.raffinate_yield,
                   &rec.raffinate_productivity}}) {
    json comps;
    for (std::size_t i = 0; i < cfg.components.size(); ++i)
      comps[cfg.components[i]] = {{"average_mol_per_m3", num((*avg)[i])},
                                  {"purity", num((*pu)[i])},
                                  {"yield", num((*y)[i])},
                                  {"productivity_mol_per_m3_s", num((*pr)[i])}};
    ports[port] = comps;
  }
  json flows;
  for (int j = 0; j < 4; ++j) {
    flows[fmt::format("Q_{}_m3_per_s", zone_labels[j])] = r.flows.zone[j];
    flows[fmt::format("u_{}_m_per_s", zone_labels[j])] = r.flows.velocity[j];
  }
  flows["Q_R_m3_per_s"] = r.flows.raffinate;
  json ratios;
  for (int j = 0; j < 4; ++j) ratios[fmt::format("m_{}", zone_labels[j])] = r.ratios.m[j];
  json theta;
  const auto a = op.to_array();
  const auto cols = parameter_columns();
  for (std::size_t i = 0; i < a.size(); ++i) theta[cols[i]] = a[i];
  return {
      {"operating_point", theta},
      {"flowrates", flows},
      {"flowrate_ratios", ratios},
      {"region", analysis::region_name(r.region)},
      {"css", {{"converged", true}, {"switches", r.css.switches}, {"metric", r.css.metric}}},
      {"degenerate", r.degenerate},
      {"ports", ports},
      {"objective",
       {{"f", num(r.degenerate ? 0.0 : rec.f)},
        {"g", num(r.degenerate ? 0.0 : rec.g)},
        {"H", num(r.degenerate ? 0.0 : rec.h)},
        {"log_likelihood", r.degenerate ? json(nullptr) : json(performance::log_likelihood(rec.h))}}},
  };
}

}  // namespace

SimulateSummary cmd_simulate(const config::RunConfig& cfg, const OperatingPoint& op, const std::string& out_dir) {
  cfg.validate();
  const PointResult r = evaluate_point(cfg, op);
  store::ensure_directory(out_dir);

  const auto profile = network::axial_profile(r.css.state, cfg.plant, op);
  store::Table chrom;
  chrom.add("position_m", profile.position);
  for (std::size_t i = 0; i < cfg.components.size(); ++i)
    chrom.add(fmt::format("c_{}_mol_per_m3", cfg.components[i]), profile.concentration[i]);
  store::write_table(store::join(out_dir, "chromatogram.csv"), chrom);

  store::Table traces;
  const auto& ex = r.css.state.extract;
  const auto& ra = r.css.state.raffinate;
  std::vector<double> t(ex.samples());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = ex.time(k);
  traces.add("time_s", t);
  for (const auto& [name, trace] : {std::pair{"extract", &ex}, std::pair{"raffinate", &ra}}) {
    for (std::size_t i = 0; i < cfg.components.size(); ++i) {
      std::vector<double> v(trace->samples());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = trace->at(k, i);
      traces.add(fmt::format("{}_{}_mol_per_m3", name, cfg.components[i]), v);
    }
  }
  store::write_table(store::join(out_dir, "port_traces.csv"), traces);
  store::write_json(store::join(out_dir, "performance.json"), record_json(cfg, r, op));
  return {true, r.degenerate, r.css.switches, r.css.metric};
}

// ---------------------------------------------------------------------------
// sample

namespace {

sampler::Matrix fisher_initial(const config::RunConfig& cfg, const sampler::Vector& theta0,
                               const sampler::Vector& reg, int threads) {
  const Eigen::Index n = theta0.size();
  auto traces = [&](const sampler::Vector& theta) {
    const auto op = to_point(theta);
    const auto css = network::simulate_to_css(cfg.plant, op);
    const auto& ex = css.state.extract;
    const auto& ra = css.state.raffinate;
    const std::size_t m = ex.components();
    sampler::Vector out(static_cast<Eigen::Index>(2 * m * ex.samples()));
    Eigen::Index k = 0;
    for (const auto* tr : {&ex, &ra})
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t s = 0; s < tr->samples(); ++s) out[k++] = tr->at(s, i);
    return out;
  };
  std::vector<sampler::Vector> outputs(static_cast<std::size_t>(2 * n));
  std::vector<double> steps(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    steps[static_cast<std::size_t>(i)] =
        cfg.sampler.fisher_step * (theta0[i] != 0.0 ? std::abs(theta0[i]) : 1.0);
  parallel_for(outputs.size(), threads, [&](std::size_t job) {
    const auto i = static_cast<Eigen::Index>(job / 2);
    sampler::Vector x = theta0;
    x[i] += (job % 2 == 0 ? 1.0 : -1.0) * steps[static_cast<std::size_t>(i)];
    outputs[job] = traces(x);
  });
  sampler::Matrix jac(outputs[0].size(), n);
  for (Eigen::Index i = 0; i < n; ++i)
    jac.col(i) = (outputs[2 * i] - outputs[2 * i + 1]) / (2.0 * steps[static_cast<std::size_t>(i)]);
  return sampler::fisher_covariance(jac, cfg.sampler.sigma0, reg);
}

sampler::RunOptions run_options(const config::RunConfig& cfg, int threads) {
  sampler::RunOptions ro;
  const auto& s = cfg.sampler;
  ro.chains = s.chains;
  ro.budget = s.budget;
  ro.burn_in = s.effective_burn_in();
  ro.rhat_threshold = s.rhat_threshold;
  ro.monitor_interval = s.monitor_interval;
  ro.adapt_interval = s.adapt_interval;
  ro.adapt = s.adapt;
  ro.stop_on_convergence = s.stop_on_convergence;
  ro.threads = threads;
  ro.step.delayed_rejection = s.delayed_rejection;
  ro.step.shrink = s.dr_shrink;
  ro.regularization_scale = s.regularization;
  return ro;
}

json matrix_json(const sampler::Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

store::Table chain_table(const config::RunConfig& cfg, const sampler::Chain& chain) {
  store::Table t;
  const auto n = chain.samples.size();
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<double>(i + 1);
  t.add("iteration", col);
  const auto names = parameter_columns();
  for (std::size_t d = 0; d < names.size(); ++d) {
    for (std::size_t i = 0; i < n; ++i) col[i] = chain.samples[i].theta[static_cast<Eigen::Index>(d)];
    t.add(names[d], col);
  }
  auto field = [&](const char* name, auto get) {
    for (std::size_t i = 0; i < n; ++i) col[i] = get(chain.samples[i]);
    t.add(name, col);
  };
  field("log_posterior", [](const sampler::Sample& s) { return s.eval.log_posterior; });
  field("H", [](const sampler::Sample& s) { return s.eval.h; });
  field("f", [](const sampler::Sample& s) { return s.eval.f; });
  field("g", [](const sampler::Sample& s) { return s.eval.g; });
  field("stage", [](const sampler::Sample& s) { return static_cast<double>(static_cast<int>(s.stage)); });
  const auto extras = extras_names(cfg);
  for (std::size_t e = 0; e < extras.size(); ++e) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& x = chain.samples[i].eval.extras;
      col[i] = e < x.size() ? x[e] : nan_v;
    }
    t.add(extras[e], col);
  }
  return t;
}

json diagnostics_json(const config::RunConfig& cfg, const sampler::RunState& run, int burn_in) {
  const auto names = OperatingPoint::names();
  json rhat, ess, ci;
  const auto final_rhat = sampler::current_rhat(run, burn_in);
  double ess_sum = 0.0;
  int ess_count = 0;
  for (std::size_t d = 0; d < names.size(); ++d) {
    const std::string key(names[d]);
    rhat[key] = final_rhat.empty() ? json(nullptr) : num(final_rhat[d]);
    const auto chains = sampler::parameter_chains(run, burn_in, static_cast<Eigen::Index>(d));
    std::vector<diagnostics::ChainView> views(chains.begin(), chains.end());
    std::vector<double> pooled;
    for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
    try {
      const double e = diagnostics::effective_sample_size(views);
      ess[key] = e;
      ess_sum += e;
      ++ess_count;
    } catch (const Error&) {
      ess[key] = nullptr;
    }
    if (!pooled.empty()) {
      const auto [lo, hi] = diagnostics::credible_interval(pooled, cfg.sampler.credible_level);
      ci[key] = {{"lower", lo}, {"upper", hi}};
    } else {
      ci[key] = nullptr;
    }
  }
  json history = json::array();
  for (const auto& h : run.rhat_history) {
    json r = json::array();
    for (double x : h.rhat) r.push_back(num(x));
    history.push_back({{"samples_per_chain", h.samples}, {"rhat", r}});
  }
  json acceptance = json::array();
  for (std::size_t c = 0; c < run.chains.size(); ++c) {
    const auto& st = run.chains[c].state;
    const double it = static_cast<double>(std::max<long>(st.iteration, 1));
    acceptance.push_back({{"chain", c},
                          {"first_stage_rate", st.accepted_first / it},
                          {"second_stage_rate",
                           st.proposals_second > 0 ? json(static_cast<double>(st.accepted_second) / st.proposals_second)
                                                   : json(nullptr)},
                          {"total_rate", (st.accepted_first + st.accepted_second) / it}});
  }
  return {{"parameters", names},
          {"burn_in", burn_in},
          {"samples_per_chain", run.chains.empty() ? 0 : run.chains[0].samples.size()},
          {"converged", run.converged},
          {"rhat_threshold", cfg.sampler.rhat_threshold},
          {"rhat", rhat},
          {"rhat_history", history},
          {"ess", ess},
          {"ess_mean", ess_count ? json(ess_sum / ess_count) : json(nullptr)},
          {"credible_level", cfg.sampler.credible_level},
          {"credible_intervals", ci},
          {"acceptance", acceptance}};
}

void write_checkpoint(const std::string& out_dir, const sampler::RunState& run, const json& metadata) {
  json cp = store::checkpoint_to_json(run);
  cp["metadata"] = metadata;
  store::write_json(store::join(out_dir, "checkpoint.json"), cp);
}

}  // namespace

SampleSummary cmd_sample(const config::RunConfig& cfg, const std::string& out_dir, const SampleOptions& options) {
  cfg.validate();
  const sampler::Box box = make_box(cfg);
  const sampler::RunOptions ro = run_options(cfg, options.threads);
  const auto target = [&cfg](const sampler::Vector& theta) { return evaluate_target(cfg, theta); };
  store::ensure_directory(out_dir);

  sampler::RunState run;
  json metadata;
  if (!options.resume_path.empty()) {
    const json cp = store::read_json(options.resume_path);
    run = store::checkpoint_from_json(cp);
    if (!cp.contains("metadata")) throw InvalidInput("checkpoint is corrupt: missing run metadata");
    metadata = cp.at("metadata");
    if (static_cast<int>(run.chains.size()) != ro.chains)
      throw InvalidInput("checkpoint chain count does not match the config");
    for (const auto& c : run.chains)
      if (c.state.theta.size() != box.dims()) throw InvalidInput("checkpoint dimension does not match the config");
    if (options.seed && *options.seed != run.seed)
      throw InvalidInput("--seed differs from the seed stored in the checkpoint");
    if (metadata.value("config", json()) != config::to_json(cfg))
      throw InvalidInput("checkpoint was written with a different configuration");
  } else {
    const std::uint64_t seed = options.seed.value_or(cfg.sampler.seed);
    const sampler::Vector theta0 = to_vector(cfg.operating_point);
    if (!box.contains(theta0)) throw InvalidInput("operating_point lies outside sampler.bounds");
    const sampler::Vector reg = box.regularization(cfg.sampler.regularization);

    sampler::Matrix cov0;
    const std::string& kind = cfg.sampler.initial_covariance;
    if (kind == "fisher") {
      cov0 = fisher_initial(cfg, theta0, reg, options.threads);
    } else if (kind == "box") {
      cov0 = sampler::box_covariance(box, cfg.sampler.box_fraction);
      cov0 += reg.asDiagonal();
    } else {
      sampler::RunOptions po = ro;
      po.chains = 1;
      po.budget = cfg.sampler.pilot_samples;
      po.burn_in = 0;
      po.adapt = false;
      po.stop_on_convergence = false;
      sampler::Matrix pc = sampler::box_covariance(box, cfg.sampler.box_fraction);
      pc += reg.asDiagonal();
      const auto e0 = target(theta0);
      if (!e0.feasible()) throw NumericalError("reference operating point is not feasible for the pilot run");
      auto pilot = sampler::start_run(po, seed ^ 0x9e3779b97f4a7c15ULL, {theta0}, {e0}, pc);
      sampler::continue_run(pilot, po, box, target);
      sampler::Matrix rows(static_cast<Eigen::Index>(pilot.chains[0].samples.size()), box.dims());
      for (std::size_t i = 0; i < pilot.chains[0].samples.size(); ++i)
        rows.row(static_cast<Eigen::Index>(i)) = pilot.chains[0].samples[i].theta.transpose();
      cov0 = sampler::initial_covariance_pilot(rows, reg);
    }

    std::vector<sampler::Vector> points(static_cast<std::size_t>(ro.chains));
    std::vector<sampler::Evaluation> evals(points.size());
    parallel_for(points.size(), options.threads, [&](std::size_t c) {
      if (cfg.sampler.initial_points == "reference") {
        points[c] = theta0;
        evals[c] = target(theta0);
        return;
      }
      sampler::Rng rng(seed, 1000 + c);
      for (int attempt = 0; attempt < 100; ++attempt) {
        sampler::Vector x(box.dims());
        for (Eigen::Index d = 0; d < box.dims(); ++d) x[d] = box.lower[d] + rng.uniform() * (box.upper[d] - box.lower[d]);
        auto e = target(x);
        if (e.feasible()) {
          points[c] = x;
          evals[c] = std::move(e);
          return;
        }
      }
    });
    for (std::size_t c = 0; c < points.size(); ++c)
      if (!evals[c].feasible())
        throw NumericalError(fmt::format("chain {} found no feasible starting point", c));

    run = sampler::start_run(ro, seed, points, evals, cov0);

    json starts = json::array();
    for (const auto& p : points) {
      json row = json::array();
      for (Eigen::Index d = 0; d < p.size(); ++d) row.push_back(p[d]);
      starts.push_back(row);
    }
    metadata = {{"format", "smbbayes-run-1"},
                {"seed", seed},
                {"chains", ro.chains},
                {"budget", ro.budget},
                {"burn_in", ro.burn_in},
                {"monitor_interval", ro.monitor_interval},
                {"adapt_interval", ro.adapt_interval},
                {"adaptation", ro.adapt},
                {"delayed_rejection", ro.step.delayed_rejection},
                {"dr_shrink", ro.step.shrink},
                {"rhat_threshold", ro.rhat_threshold},
                {"penalty", cfg.objective.penalty},
                {"extract_purity_threshold", cfg.objective.extract_threshold},
                {"raffinate_purity_threshold", cfg.objective.raffinate_threshold},
                {"initial_covariance", kind},
                {"initial_covariance_matrix", matrix_json(cov0)},
                {"initial_points", starts},
                {"parameters", OperatingPoint::names()},
                {"parameter_columns", parameter_columns()},
                {"components", cfg.components},
                {"extras", extras_names(cfg)},
                {"config", config::to_json(cfg)}};
    store::write_json(store::join(out_dir, "run_metadata.json"), metadata);
  }
  store::write_json(store::join(out_dir, "run_metadata.json"), metadata);

  int rounds = 0;
  sampler::continue_run(run, ro, box, target, [&](const sampler::RunState& r) {
    ++rounds;
    const long total = static_cast<long>(r.chains[0].samples.size());
    const bool stop = options.max_rounds > 0 && rounds >= options.max_rounds && !r.finished;
    if (r.finished || stop || total % ro.adapt_interval == 0) write_checkpoint(out_dir, r, metadata);
    return !stop;
  });

  SampleSummary summary;
  summary.finished = run.finished;
  summary.converged = run.converged;
  summary.samples_per_chain = static_cast<long>(run.chains[0].samples.size());
  summary.rhat = sampler::current_rhat(run, ro.burn_in);
  if (!run.finished) return summary;

  for (std::size_t c = 0; c < run.chains.size(); ++c)
    store::write_table(store::join(out_dir, fmt::format("chain_{}.csv", c)), chain_table(cfg, run.chains[c]));
  store::write_json(store::join(out_dir, "diagnostics.json"), diagnostics_json(cfg, run, ro.burn_in));
  return summary;
}

// ---------------------------------------------------------------------------
// analyze

const std::vector<double>& StoredSamples::extra(const std::string& name) const {
  for (std::size_t i = 0; i < extras.size(); ++i)
    if (extras[i] == name) return values[i];
  throw InvalidInput(fmt::format("store has no column '{}'", name));
}

StoredSamples load_store(const std::string& dir) {
  StoredSamples s;
  const auto meta_path = store::join(dir, "run_metadata.json");
  const auto perf_path = store::join(dir, "performance.json");
  if (store::exists(meta_path)) {
    const json meta = store::read_json(meta_path);
    try {
      s.burn_in = meta.at("burn_in").get<int>();
      s.seed = meta.at("seed").get<std::uint64_t>();
      s.extras = meta.at("extras").get<std::vector<std::string>>();
      const int chains = meta.at("chains").get<int>();
      s.values.assign(s.extras.size(), {});
      const auto cols = parameter_columns();
      for (int c = 0; c < chains; ++c) {
        const auto path = store::join(dir, fmt::format("chain_{}.csv", c));
        if (!store::exists(path)) throw InvalidInput(fmt::format("store is incomplete: missing {}", path));
        const auto t = store::read_table(path);
        for (std::size_t r = static_cast<std::size_t>(s.burn_in); r < t.rows(); ++r) {
          std::array<double, OperatingPoint::size> a{};
          for (std::size_t d = 0; d < a.size(); ++d) a[d] = t.column(cols[d])[r];
          s.theta.push_back(OperatingPoint::from_array(a));
          s.chain.push_back(c);
          s.iteration.push_back(static_cast<long>(t.column("iteration")[r]));
          s.log_posterior.push_back(t.column("log_posterior")[r]);
          for (std::size_t e = 0; e < s.extras.size(); ++e) s.values[e].push_back(t.column(s.extras[e])[r]);
        }
      }
    } catch (const json::exception& e) {
      throw InvalidInput(fmt::format("{}: malformed run metadata ({})", meta_path, e.what()));
    }
    return s;
  }
  if (store::exists(perf_path)) {
    const json perf = store::read_json(perf_path);
    try {
      const auto& theta = perf.at("operating_point");
      const auto cols = parameter_columns();
      std::array<double, OperatingPoint::size> a{};
      for (std::size_t d = 0; d < a.size(); ++d) a[d] = theta.at(cols[d]).get<double>();
      s.theta.push_back(OperatingPoint::from_array(a));
      s.chain.push_back(0);
      s.iteration.push_back(1);
      const auto& ll = perf.at("objective").at("log_likelihood");
      s.log_posterior.push_back(ll.is_number() ? ll.get<double>() : nan_v);
      for (const auto& [port, key] : {std::pair{"extract", "E"}, std::pair{"raffinate", "R"}}) {
        for (const auto& [comp, v] : perf.at("ports").at(port).items()) {
          auto get = [&](const char* k) { return v.at(k).is_number() ? v.at(k).get<double>() : nan_v; };
          for (const auto& [kind, field, unit] :
               {std::tuple{"cavg", "average_mol_per_m3", "_mol_per_m3"}, std::tuple{"Pu", "purity", ""},
                std::tuple{"Y", "yield", ""}, std::tuple{"Pr", "productivity_mol_per_m3_s", "_mol_per_m3_s"}}) {
            s.extras.push_back(fmt::format("{}_{}_{}{}", kind, key, comp, unit));
            s.values.push_back({get(field)});
          }
        }
      }
    } catch (const json::exception& e) {
      throw InvalidInput(fmt::format("{}: malformed performance record ({})", perf_path, e.what()));
    }
    return s;
  }
  throw InvalidInput(fmt::format("no sample store in '{}' (expected run_metadata.json or performance.json)", dir));
}

std::vector<std::string> analysis_names() { return {"pareto", "marginals", "triangle", "ppc", "fits", "ci-table"}; }

namespace {

double value_or_nan(const StoredSamples& s, const std::string& name, std::size_t i) {
  for (std::size_t e = 0; e < s.extras.size(); ++e)
    if (s.extras[e] == name) return s.values[e][i];
  return nan_v;
}

std::string sig3(double v) { return std::isfinite(v) ? fmt::format("{:.3g}", v) : std::string("nan"); }

struct Derived {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

std::vector<Derived> parameter_series(const config::RunConfig& cfg, const StoredSamples& s) {
  std::vector<Derived> out;
  const auto names = OperatingPoint::names();
  const std::array<std::string, 6> units{"m", "s", "m3_per_s", "m3_per_s", "m3_per_s", "m3_per_s"};
  for (std::size_t d = 0; d < names.size(); ++d) {
    Derived p{std::string(names[d]), units[d], {}};
    for (const auto& op : s.theta) p.values.push_back(op.to_array()[d]);
    out.push_back(std::move(p));
  }
  Derived qr{"Q_R", "m3_per_s", {}}, q2{"Q_II", "m3_per_s", {}}, q3{"Q_III", "m3_per_s", {}},
      q4{"Q_IV", "m3_per_s", {}};
  for (const auto& op : s.theta) {
    // Same identities as derive_flowrates, without its feasibility check.
    qr.values.push_back(op.desorbent + op.feed - op.extract);
    q2.values.push_back(op.recycle - op.extract);
    q3.values.push_back(op.recycle - op.extract + op.feed);
    q4.values.push_back(op.recycle - op.desorbent);
  }
  (void)cfg;
  out.push_back(std::move(qr));
  out.push_back(std::move(q2));
  out.push_back(std::move(q3));
  out.push_back(std::move(q4));
  return out;
}

analysis::FlowrateRatios ratios_of(const config::RunConfig& cfg, const OperatingPoint& op) {
  const auto geometry = cfg.plant.geometry_for(op);
  return analysis::flowrate_ratios(op, geometry, network::derive_flowrates(op, geometry));
}

void analyze_pareto(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out) {
  const std::string fru = cfg.components.at(cfg.objective.extract_target);
  const std::string glc = cfg.components.at(cfg.objective.raffinate_target);
  const std::vector<std::pair<std::string, std::string>> pairs{
      {"Pu_E_" + fru, "Y_E_" + fru},
      {"Pu_R_" + glc, "Y_R_" + glc},
      {"Pu_R_" + glc, "Pu_E_" + fru},
      {"Y_R_" + glc, "Y_E_" + fru},
      {"Pu_E_" + fru, "Pr_E_" + fru + "_mol_per_m3_s"},
      {"Pu_R_" + glc, "Pr_R_" + glc + "_mol_per_m3_s"},
  };
  for (const auto& [x, y] : pairs) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.size(); ++i) pts.emplace_back(value_or_nan(s, x, i), value_or_nan(s, y, i));
    store::Table t;
    std::vector<double> chain(s.chain.begin(), s.chain.end());
    std::vector<double> iter(s.iteration.begin(), s.iteration.end());
    std::vector<double> xs, ys, front;
    const auto flags = pts.empty() ? std::vector<bool>{} : analysis::pareto_front(pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      xs.push_back(pts[i].first);
      ys.push_back(pts[i].second);
      front.push_back(flags[i] ? 1.0 : 0.0);
    }
    t.add("chain", chain);
    t.add("iteration", iter);
    t.add(x, xs);
    t.add(y, ys);
    t.add("on_front", front);
    store::write_table(store::join(out, fmt::format("pareto_{}__{}.csv", x, y)), t);
  }
}

json analyze_marginals(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out) {
  json skipped = json::array();
  for (const auto& p : parameter_series(cfg, s)) {
    try {
      const auto d = analysis::kernel_density(p.values);
      store::Table t;
      t.add(fmt::format("{}_{}", p.name, p.unit), d.x);
      t.add(fmt::format("density_per_{}", p.unit), d.density);
      store::write_table(store::join(out, fmt::format("marginal_{}.csv", p.name)), t);
    } catch (const Error& e) {
      skipped.push_back({{"parameter", p.name}, {"reason", e.what()}});
    }
  }
  return skipped;
}

void analyze_triangle(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out) {
  const std::string fru = cfg.components.at(cfg.objective.extract_target);
  const std::string glc = cfg.components.at(cfg.objective.raffinate_target);
  std::vector<std::vector<std::string>> rows23, rows41;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto m = ratios_of(cfg, s.theta[i]);
    const auto region = std::string(analysis::region_name(analysis::classify_region(m, cfg.plant.isotherm)));
    const auto cls = purity_class(value_or_nan(s, "Pu_E_" + fru, i), value_or_nan(s, "Pu_R_" + glc, i));
    const std::string ch = std::to_string(s.chain[i]), it = std::to_string(s.iteration[i]);
    rows23.push_back({ch, it, store::format_double(m.m2()), store::format_double(m.m3()), region, cls});
    rows41.push_back({ch, it, store::format_double(m.m4()), store::format_double(m.m1()), region, cls});
  }
  store::write_rows(store::join(out, "triangle_m23.csv"), {"chain", "iteration", "m_II", "m_III", "region", "purity_class"},
                    rows23);
  store::write_rows(store::join(out, "triangle_m41.csv"), {"chain", "iteration", "m_IV", "m_I", "region", "purity_class"},
                    rows41);
}

json analyze_ppc(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out, int threads) {
  if (s.size() == 0) throw InvalidInput("posterior predictive check needs a non-empty store");
  std::vector<std::size_t> picks;
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s.log_posterior[i] > s.log_posterior[best] || std::isnan(s.log_posterior[best])) best = i;
  picks.push_back(best);
  sampler::Rng rng(s.seed, 7000);
  for (int r = 0; r < cfg.sampler.ppc_replicates; ++r)
    picks.push_back(std::min(s.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.size()))));

  std::vector<std::optional<network::AxialProfile>> profiles(picks.size());
  std::vector<std::string> failures(picks.size());
  parallel_for(picks.size(), threads, [&](std::size_t k) {
    const auto& op = s.theta[picks[k]];
    try {
      const auto css = network::simulate_to_css(cfg.plant, op);
      profiles[k] = network::axial_profile(css.state, cfg.plant, op);
    } catch (const Error& e) {
      failures[k] = e.what();
    }
  });
  std::vector<network::AxialProfile> ok;
  std::vector<std::size_t> ok_index;
  json failed = json::array();
  for (std::size_t k = 0; k < picks.size(); ++k) {
    if (profiles[k]) {
      ok.push_back(*profiles[k]);
      ok_index.push_back(k);
    } else {
      failed.push_back({{"chain", s.chain[picks[k]]}, {"iteration", s.iteration[picks[k]]}, {"reason", failures[k]}});
    }
  }
  if (ok.size() < 2) throw NumericalError("posterior predictive check: fewer than two replicates succeeded");
  const auto env = analysis::ppc_envelope(ok);

  store::Table t;
  t.add("position_fraction", env.coordinate);
  for (std::size_t i = 0; i < cfg.components.size(); ++i) {
    t.add(fmt::format("lower_{}_mol_per_m3", cfg.components[i]), env.lower[i]);
    t.add(fmt::format("upper_{}_mol_per_m3", cfg.components[i]), env.upper[i]);
  }
  if (ok_index.front() == 0)
    for (std::size_t i = 0; i < cfg.components.size(); ++i)
      t.add(fmt::format("map_{}_mol_per_m3", cfg.components[i]), ok.front().concentration[i]);
  store::write_table(store::join(out, "ppc_envelope.csv"), t);

  store::Table reps;
  std::vector<double> rep, chain, iter, coord;
  std::vector<std::vector<double>> conc(cfg.components.size());
  for (std::size_t r = 0; r < ok.size(); ++r) {
    const auto idx = picks[ok_index[r]];
    for (std::size_t p = 0; p < env.coordinate.size(); ++p) {
      rep.push_back(static_cast<double>(ok_index[r]));
      chain.push_back(s.chain[idx]);
      iter.push_back(static_cast<double>(s.iteration[idx]));
      coord.push_back(env.coordinate[p]);
      for (std::size_t i = 0; i < conc.size(); ++i) conc[i].push_back(ok[r].concentration[i][p]);
    }
  }
  reps.add("replicate", rep);
  reps.add("chain", chain);
  reps.add("iteration", iter);
  reps.add("position_fraction", coord);
  for (std::size_t i = 0; i < conc.size(); ++i) reps.add(fmt::format("c_{}_mol_per_m3", cfg.components[i]), conc[i]);
  store::write_table(store::join(out, "ppc_replicates.csv"), reps);
  return {{"replicates_requested", picks.size()}, {"replicates_ok", ok.size()}, {"failed", failed}};
}

json fit_json(std::span<const double> x, std::span<const double> y) {
  try {
    const auto f = analysis::linear_fit(x, y);
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"n", x.size()}};
  } catch (const Error& e) {
    return {{"error", e.what()}, {"n", x.size()}};
  }
}

json histogram_json(std::span<const double> v) {
  try {
    const auto h = analysis::difference_histogram(v);
    return {{"mode", h.mode}, {"edges", h.edges}, {"counts", h.counts}};
  } catch (const Error& e) {
    return {{"error", e.what()}};
  }
}

void analyze_fits(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out) {
  std::vector<double> m1, m2, m3, m4, d32, d14;
  std::map<std::string, int> regions{{"A", 0}, {"B", 0}, {"C", 0}, {"D", 0}, {"E", 0}};
  for (const auto& op : s.theta) {
    const auto m = ratios_of(cfg, op);
    m1.push_back(m.m1());
    m2.push_back(m.m2());
    m3.push_back(m.m3());
    m4.push_back(m.m4());
    d32.push_back(m.m3() - m.m2());
    d14.push_back(m.m1() - m.m4());
    ++regions[std::string(analysis::region_name(analysis::classify_region(m, cfg.plant.isotherm)))];
  }
  json fractions;
  for (const auto& [k, v] : regions) fractions[k] = s.size() ? static_cast<double>(v) / s.size() : 0.0;
  const json j = {{"samples", s.size()},
                  {"m_III_vs_m_II", fit_json(m2, m3)},
                  {"m_I_vs_m_IV", fit_json(m4, m1)},
                  {"m_III_minus_m_II", histogram_json(d32)},
                  {"m_I_minus_m_IV", histogram_json(d14)},
                  {"region_fraction", fractions}};
  store::write_json(store::join(out, "fits.json"), j);
}

void analyze_ci(const config::RunConfig& cfg, const StoredSamples& s, const std::string& out) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : parameter_series(cfg, s)) {
    if (p.values.empty()) continue;
    const auto [lo, hi] = diagnostics::credible_interval(p.values, cfg.sampler.credible_level);
    double mu = p.values.front();
    if (lo != hi) {
      try {
        mu = analysis::kernel_density(p.values).mode();
      } catch (const Undefined&) {
      }
    }
    const double dl = mu != 0.0 ? (lo - mu) / mu * 100.0 : nan_v;
    const double du = mu != 0.0 ? (hi - mu) / mu * 100.0 : nan_v;
    rows.push_back({p.name, p.unit, sig3(mu), sig3(lo), sig3(hi), sig3(dl), sig3(du)});
  }
  store::write_rows(store::join(out, "ci_table.csv"),
                    {"parameter", "unit", "mu", "lower", "upper", "lower_deviation_pct", "upper_deviation_pct"}, rows);
}

}  // namespace

void cmd_analyze(const config::RunConfig& cfg, const std::string& store_dir, const std::vector<std::string>& analyses,
                 const std::string& out_dir, int threads) {
  cfg.validate();
  std::vector<std::string> todo;
  const auto known = analysis_names();
  for (const auto& a : analyses) {
    if (a == "all") {
      todo.insert(todo.end(), known.begin(), known.end());
    } else if (std::find(known.begin(), known.end(), a) != known.end()) {
      todo.push_back(a);
    } else {
      throw InvalidInput(fmt::format("unknown analysis '{}' (known: pareto, marginals, triangle, ppc, fits, ci-table, all)", a));
    }
  }
  if (todo.empty()) return;
  const StoredSamples s = load_store(store_dir);
  store::ensure_directory(out_dir);
  json summary;
  for (const auto& a : todo) {
    if (a == "pareto") analyze_pareto(cfg, s, out_dir);
    if (a == "marginals") summary["marginals_skipped"] = analyze_marginals(cfg, s, out_dir);
    if (a == "triangle") analyze_triangle(cfg, s, out_dir);
    if (a == "ppc") summary["ppc"] = analyze_ppc(cfg, s, out_dir, threads);
    if (a == "fits") analyze_fits(cfg, s, out_dir);
    if (a == "ci-table") analyze_ci(cfg, s, out_dir);
  }
  summary["analyses"] = todo;
  summary["samples"] = s.size();
  store::write_json(store::join(out_dir, "analysis_summary.json"), summary);
}

}  // namespace smbbayes::workflows
