#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "errors.hpp"

namespace smbbayes::config {

using nlohmann::json;

int SamplerConfig::effective_burn_in() const {
  if (burn_in_fraction) return static_cast<int>(std::floor(*burn_in_fraction * budget));
  return burn_in;
}

void SamplerConfig::validate() const {
  bounds.validate();
  if (chains < 1) throw InvalidInput("sampler.chains must be >= 1");
  if (budget < 1) throw InvalidInput("sampler.budget must be >= 1");
  if (burn_in_fraction && !(*burn_in_fraction >= 0.0 && *burn_in_fraction < 1.0))
    throw InvalidInput("sampler.burn_in_fraction must lie in [0, 1)");
  const int b = effective_burn_in();
  if (b < 0 || b >= budget) throw InvalidInput("sampler.burn_in must be >= 0 and smaller than sampler.budget");
  if (!(rhat_threshold > 1.0)) throw InvalidInput("sampler.rhat_threshold must be > 1");
  if (monitor_interval < 1) throw InvalidInput("sampler.monitor_interval must be >= 1");
  if (adapt_interval < 1) throw InvalidInput("sampler.adapt_interval must be >= 1");
  if (!(dr_shrink > 0.0 && dr_shrink < 1.0)) throw InvalidInput("sampler.dr_shrink must lie in (0, 1)");
  if (initial_covariance != "fisher" && initial_covariance != "box" && initial_covariance != "pilot")
    throw InvalidInput("sampler.initial_covariance must be one of fisher, box, pilot");
  if (!(sigma0 > 0.0)) throw InvalidInput("sampler.sigma0 must be > 0");
  if (!(fisher_step > 0.0)) throw InvalidInput("sampler.fisher_step must be > 0");
  if (!(box_fraction > 0.0)) throw InvalidInput("sampler.box_fraction must be > 0");
  if (pilot_samples < 7) throw InvalidInput("sampler.pilot_samples must be >= 7");
  if (!(regularization > 0.0)) throw InvalidInput("sampler.regularization must be > 0");
  if (initial_points != "random" && initial_points != "reference")
    throw InvalidInput("sampler.initial_points must be random or reference");
  if (!(credible_level > 0.0 && credible_level <= 1.0))
    throw InvalidInput("sampler.credible_level must lie in (0, 1]");
  if (ppc_replicates < 2) throw InvalidInput("sampler.ppc_replicates must be >= 2");
}

void RunConfig::validate() const {
  if (components.size() != plant.isotherm.components())
    throw InvalidInput("plant.components must name every component of the isotherm");
  plant.validate();
  objective.validate(plant.isotherm.components());
  sampler.validate();
  if (output_dir.empty()) throw InvalidInput("paths.output_dir must not be empty");
}

std::string_view mode_name(transport::ColumnMode mode) {
  return mode == transport::ColumnMode::grm ? "grm" : "edm-equilibrium";
}

std::vector<std::string> preset_names() {
  return {"klatt-reference", "klatt-reference-high-purity", "klatt-desk"};
}

namespace {

RunConfig klatt_reference() {
  RunConfig c;
  const auto edm = transport::edm_limit_preset();
  auto& p = c.plant;
  p.geometry.length = 0.536;
  p.geometry.diameter = 2.6e-2;
  p.geometry.particle_radius = 3.25e-3 / 2.0;
  p.geometry.column_porosity = 0.38;
  p.geometry.particle_porosity = edm.particle_porosity;
  p.pore_diffusion = {edm.pore_diffusion, edm.pore_diffusion};
  p.film_mass_transfer = {edm.film_mass_transfer, edm.film_mass_transfer};
  p.isotherm.henry = {0.28, 0.54};
  p.disc = edm.disc;
  p.disc.axial_cells = 40;
  p.axial_dispersion = {1e-7, 1e-7, 1e-7, 1e-7};
  p.network.layout = {2, 2, 2, 2};
  p.network.feed_concentration = {3052.8, 3052.8};
  p.network.desorbent_concentration = {0.0, 0.0};
  p.network.css_tolerance = 1e-5;
  p.network.css_max_switches = 300;
  p.network.outlet_samples = 401;

  c.operating_point = {0.536, 1552.0, 1.395e-7, 2.00e-8, 4.14e-8, 3.48e-8};
  c.sampler.bounds.lower = {0.5, 1500.0, 1.0e-7, 1.5e-8, 3.5e-8, 3.0e-8};
  c.sampler.bounds.upper = {0.6, 1600.0, 1.8e-7, 2.5e-8, 4.5e-8, 4.0e-8};
  c.sampler.initial_points = "reference";
  return c;
}

}  // namespace

RunConfig preset(std::string_view name) {
  if (name == "klatt-reference") return klatt_reference();
  if (name == "klatt-reference-high-purity") {
    RunConfig c = klatt_reference();
    c.objective.extract_threshold = 0.999;
    c.objective.raffinate_threshold = 0.999;
    return c;
  }
  if (name == "klatt-desk") {
    RunConfig c = klatt_reference();
    c.plant.disc.mode = transport::ColumnMode::edm_equilibrium;
    c.plant.disc.axial_cells = 20;
    c.sampler.budget = 100;
    c.sampler.burn_in = 25;
    return c;
  }
  throw InvalidInput(fmt::format("unknown preset '{}' (known: {})", name, fmt::join(preset_names(), ", ")));
}

// ---------------------------------------------------------------------------
// JSON reading with field paths

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(std::string_view what, std::string_view key = {}) const {
    throw InvalidInput(fmt::format("config field '{}': {}", join(key), what));
  }

  std::string join(std::string_view key) const {
    if (key.empty()) return path_.empty() ? std::string("<root>") : path_;
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  bool has(std::string_view key) const {
    seen_.emplace_back(key);
    return j_.contains(std::string(key));
  }

  void number(std::string_view key, double& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_number()) fail("expected a number", key);
    out = v.get<double>();
    if (!std::isfinite(out)) fail("must be finite", key);
  }

  void integer(std::string_view key, int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_number_integer()) fail("expected an integer", key);
    out = v.get<int>();
  }

  void size(std::string_view key, std::size_t& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_number_unsigned()) fail("expected a non-negative integer", key);
    out = v.get<std::size_t>();
  }

  void u64(std::string_view key, std::uint64_t& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_number_unsigned()) fail("expected a non-negative integer", key);
    out = v.get<std::uint64_t>();
  }

  void boolean(std::string_view key, bool& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_boolean()) fail("expected true or false", key);
    out = v.get<bool>();
  }

  void string(std::string_view key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_string()) fail("expected a string", key);
    out = v.get<std::string>();
  }

  void numbers(std::string_view key, std::vector<double>& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(std::string(key));
    if (!v.is_array()) fail("expected an array of numbers", key);
    std::vector<double> r;
    for (const auto& x : v) {
      if (!x.is_number()) fail("expected an array of numbers", key);
      r.push_back(x.get<double>());
    }
    out = std::move(r);
  }

  template <std::size_t N>
  void fixed(std::string_view key, std::array<double, N>& out) const {
    if (!has(key)) return;
    std::vector<double> v;
    numbers(key, v);
    if (v.size() != N) fail(fmt::format("expected {} numbers", N), key);
    std::copy(v.begin(), v.end(), out.begin());
  }

  std::optional<Reader> child(std::string_view key) const {
    if (!has(key)) return std::nullopt;
    return Reader(j_.at(std::string(key)), join(key));
  }

  const json& value(std::string_view key) const { return j_.at(std::string(key)); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) fail("unknown field", k);
    }
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::vector<std::string> seen_;
};

transport::ColumnMode parse_mode(const std::string& s, const Reader& r) {
  if (s == "grm") return transport::ColumnMode::grm;
  if (s == "edm-equilibrium") return transport::ColumnMode::edm_equilibrium;
  r.fail("expected 'grm' or 'edm-equilibrium'", "mode");
}

std::size_t component_index(const RunConfig& c, const std::string& name, const Reader& r, std::string_view key) {
  for (std::size_t i = 0; i < c.components.size(); ++i)
    if (c.components[i] == name) return i;
  r.fail(fmt::format("unknown component '{}'", name), key);
}

}  // namespace

RunConfig from_json(const json& j, const RunConfig& base) {
  RunConfig c = base;
  Reader root(j, "");

  if (auto p = root.child("plant")) {
    std::vector<std::string> names;
    if (p->has("components")) {
      const auto& v = p->value("components");
      if (!v.is_array()) p->fail("expected an array of strings", "components");
      for (const auto& x : v) {
        if (!x.is_string()) p->fail("expected an array of strings", "components");
        names.push_back(x.get<std::string>());
      }
      c.components = names;
    }
    if (auto col = p->child("column")) {
      col->number("diameter", c.plant.geometry.diameter);
      col->number("particle_radius", c.plant.geometry.particle_radius);
      col->number("column_porosity", c.plant.geometry.column_porosity);
      col->number("particle_porosity", c.plant.geometry.particle_porosity);
      col->finish();
    }
    p->numbers("henry", c.plant.isotherm.henry);
    p->numbers("pore_diffusion", c.plant.pore_diffusion);
    p->numbers("film_mass_transfer", c.plant.film_mass_transfer);
    if (p->has("layout")) {
      std::array<double, 4> layout{};
      p->fixed("layout", layout);
      for (int k = 0; k < 4; ++k) {
        if (layout[k] != std::floor(layout[k])) p->fail("expected integers", "layout");
        c.plant.network.layout[k] = static_cast<int>(layout[k]);
      }
    }
    p->numbers("feed_concentration", c.plant.network.feed_concentration);
    p->numbers("desorbent_concentration", c.plant.network.desorbent_concentration);
    p->finish();
  }

  if (auto o = root.child("operating_point")) {
    o->number("L", c.operating_point.length);
    o->number("t_s", c.operating_point.switch_time);
    o->number("Q_rec", c.operating_point.recycle);
    o->number("Q_F", c.operating_point.feed);
    o->number("Q_D", c.operating_point.desorbent);
    o->number("Q_E", c.operating_point.extract);
    o->finish();
  }

  if (auto s = root.child("solver")) {
    std::string mode(mode_name(c.plant.disc.mode));
    s->string("mode", mode);
    c.plant.disc.mode = parse_mode(mode, *s);
    s->integer("axial_cells", c.plant.disc.axial_cells);
    s->integer("radial_cells", c.plant.disc.radial_cells);
    s->number("abs_tol", c.plant.disc.abs_tol);
    s->number("rel_tol", c.plant.disc.rel_tol);
    s->number("initial_step", c.plant.disc.initial_step);
    s->number("max_step", c.plant.disc.max_step);
    s->fixed("axial_dispersion", c.plant.axial_dispersion);
    s->number("css_tolerance", c.plant.network.css_tolerance);
    s->integer("css_max_switches", c.plant.network.css_max_switches);
    s->size("outlet_samples", c.plant.network.outlet_samples);
    s->finish();
  }

  if (auto o = root.child("objective")) {
    std::string extract = c.components.at(std::min(c.objective.extract_target, c.components.size() - 1));
    std::string raffinate = c.components.at(std::min(c.objective.raffinate_target, c.components.size() - 1));
    o->string("extract_component", extract);
    o->string("raffinate_component", raffinate);
    c.objective.extract_target = component_index(c, extract, *o, "extract_component");
    c.objective.raffinate_target = component_index(c, raffinate, *o, "raffinate_component");
    o->number("extract_purity_threshold", c.objective.extract_threshold);
    o->number("raffinate_purity_threshold", c.objective.raffinate_threshold);
    o->number("penalty", c.objective.penalty);
    o->finish();
  }

  if (auto s = root.child("sampler")) {
    auto& sc = c.sampler;
    if (auto b = s->child("bounds")) {
      const auto& names = network::OperatingPoint::names();
      for (std::size_t i = 0; i < names.size(); ++i) {
        std::array<double, 2> lh{sc.bounds.lower[i], sc.bounds.upper[i]};
        b->fixed(names[i], lh);
        sc.bounds.lower[i] = lh[0];
        sc.bounds.upper[i] = lh[1];
      }
      b->finish();
    }
    s->integer("chains", sc.chains);
    s->integer("budget", sc.budget);
    s->integer("burn_in", sc.burn_in);
    if (s->has("burn_in_fraction")) {
      const auto& v = s->value("burn_in_fraction");
      if (v.is_null()) {
        sc.burn_in_fraction.reset();
      } else {
        double f = 0.0;
        s->number("burn_in_fraction", f);
        sc.burn_in_fraction = f;
      }
    }
    s->number("rhat_threshold", sc.rhat_threshold);
    s->boolean("stop_on_convergence", sc.stop_on_convergence);
    s->u64("seed", sc.seed);
    s->integer("monitor_interval", sc.monitor_interval);
    s->integer("adapt_interval", sc.adapt_interval);
    s->boolean("adapt", sc.adapt);
    s->boolean("delayed_rejection", sc.delayed_rejection);
    s->number("dr_shrink", sc.dr_shrink);
    s->string("initial_covariance", sc.initial_covariance);
    s->number("sigma0", sc.sigma0);
    s->number("fisher_step", sc.fisher_step);
    s->number("box_fraction", sc.box_fraction);
    s->integer("pilot_samples", sc.pilot_samples);
    s->number("regularization", sc.regularization);
    s->string("initial_points", sc.initial_points);
    s->number("credible_level", sc.credible_level);
    s->integer("ppc_replicates", sc.ppc_replicates);
    s->finish();
  }

  if (auto p = root.child("paths")) {
    p->string("output_dir", c.output_dir);
    p->finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig from_json(const json& j) { return from_json(j, preset("klatt-reference")); }

json to_json(const RunConfig& c) {
  json j;
  const auto& p = c.plant;
  j["plant"] = {
      {"components", c.components},
      {"column",
       {{"diameter", p.geometry.diameter},
        {"particle_radius", p.geometry.particle_radius},
        {"column_porosity", p.geometry.column_porosity},
        {"particle_porosity", p.geometry.particle_porosity}}},
      {"henry", p.isotherm.henry},
      {"pore_diffusion", p.pore_diffusion},
      {"film_mass_transfer", p.film_mass_transfer},
      {"layout", p.network.layout},
      {"feed_concentration", p.network.feed_concentration},
      {"desorbent_concentration", p.network.desorbent_concentration},
  };
  const auto& op = c.operating_point;
  j["operating_point"] = {{"L", op.length},        {"t_s", op.switch_time}, {"Q_rec", op.recycle},
                          {"Q_F", op.feed},        {"Q_D", op.desorbent},   {"Q_E", op.extract}};
  j["solver"] = {
      {"mode", mode_name(p.disc.mode)},
      {"axial_cells", p.disc.axial_cells},
      {"radial_cells", p.disc.radial_cells},
      {"abs_tol", p.disc.abs_tol},
      {"rel_tol", p.disc.rel_tol},
      {"initial_step", p.disc.initial_step},
      {"max_step", p.disc.max_step},
      {"axial_dispersion", p.axial_dispersion},
      {"css_tolerance", p.network.css_tolerance},
      {"css_max_switches", p.network.css_max_switches},
      {"outlet_samples", p.network.outlet_samples},
  };
  j["objective"] = {
      {"extract_component", c.components.at(c.objective.extract_target)},
      {"raffinate_component", c.components.at(c.objective.raffinate_target)},
      {"extract_purity_threshold", c.objective.extract_threshold},
      {"raffinate_purity_threshold", c.objective.raffinate_threshold},
      {"penalty", c.objective.penalty},
  };
  const auto& s = c.sampler;
  json bounds;
  const auto& names = network::OperatingPoint::names();
  for (std::size_t i = 0; i < names.size(); ++i)
    bounds[std::string(names[i])] = {s.bounds.lower[i], s.bounds.upper[i]};
  j["sampler"] = {
      {"bounds", bounds},
      {"chains", s.chains},
      {"budget", s.budget},
      {"burn_in", s.burn_in},
      {"burn_in_fraction", s.burn_in_fraction ? json(*s.burn_in_fraction) : json(nullptr)},
      {"rhat_threshold", s.rhat_threshold},
      {"stop_on_convergence", s.stop_on_convergence},
      {"seed", s.seed},
      {"monitor_interval", s.monitor_interval},
      {"adapt_interval", s.adapt_interval},
      {"adapt", s.adapt},
      {"delayed_rejection", s.delayed_rejection},
      {"dr_shrink", s.dr_shrink},
      {"initial_covariance", s.initial_covariance},
      {"sigma0", s.sigma0},
      {"fisher_step", s.fisher_step},
      {"box_fraction", s.box_fraction},
      {"pilot_samples", s.pilot_samples},
      {"regularization", s.regularization},
      {"initial_points", s.initial_points},
      {"credible_level", s.credible_level},
      {"ppc_replicates", s.ppc_replicates},
  };
  j["paths"] = {{"output_dir", c.output_dir}};
  return j;
}

RunConfig parse_string(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(fmt::format("config is not valid JSON: {}", e.what()));
  }
  return from_json(j);
}

RunConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

std::string dump(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace smbbayes::config
