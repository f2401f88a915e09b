#include "store.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "errors.hpp"

namespace smbbayes::store {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<double>& Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw InvalidInput(fmt::format("table has no column '{}'", name));
}

bool Table::has(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

void Table::add(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows()) throw InvalidInput("table columns must have equal length");
  header.push_back(std::move(name));
  columns.push_back(std::move(values));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

void write_table(const std::string& path, const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i) out += ',';
      out += format_double(table.columns[i][r]);
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_rows(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::string out = fmt::format("{}\n", fmt::join(header, ","));
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw InvalidInput("CSV row width does not match the header");
    out += fmt::format("{}\n", fmt::join(r, ","));
  }
  write_text(path, out);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& s, const std::string& path, std::size_t row) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidInput(fmt::format("{}: non-numeric cell '{}' in row {}", path, s, row));
  return v;
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(fmt::format("cannot open '{}'", path));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(fmt::format("{}: missing header row", path));
  t.header = split(line);
  t.columns.assign(t.header.size(), {});
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw InvalidInput(fmt::format("{}: row {} has {} cells, expected {}", path, row, cells.size(), t.header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) t.columns[i].push_back(parse_cell(cells[i], path, row));
  }
  return t;
}

void write_text(const std::string& path, std::string_view text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput(fmt::format("cannot write '{}'", path));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw InvalidInput(fmt::format("cannot write '{}'", path));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw InvalidInput(fmt::format("cannot write '{}': {}", path, ec.message()));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("{}: malformed JSON ({})", path, e.what()));
  }
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) throw InvalidInput(fmt::format("cannot create directory '{}'", path));
}

bool exists(const std::string& path) { return fs::exists(path); }

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// ---------------------------------------------------------------------------
// Checkpoints. Non-finite doubles are stored as strings.

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double get_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw InvalidInput("checkpoint: malformed number");
}

json vec(const sampler::Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

sampler::Vector get_vec(const json& j) {
  sampler::Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = get_num(j[i]);
  return v;
}

json eval_json(const sampler::Evaluation& e) {
  json extras = json::array();
  for (double x : e.extras) extras.push_back(num(x));
  return {{"log_posterior", num(e.log_posterior)}, {"h", num(e.h)}, {"f", num(e.f)}, {"g", num(e.g)},
          {"extras", extras}};
}

sampler::Evaluation get_eval(const json& j) {
  sampler::Evaluation e;
  e.log_posterior = get_num(j.at("log_posterior"));
  e.h = get_num(j.at("h"));
  e.f = get_num(j.at("f"));
  e.g = get_num(j.at("g"));
  for (const auto& x : j.at("extras")) e.extras.push_back(get_num(x));
  return e;
}

}  // namespace

json checkpoint_to_json(const sampler::RunState& run) {
  json chains = json::array();
  for (const auto& c : run.chains) {
    json samples = json::array();
    for (const auto& s : c.samples)
      samples.push_back({{"theta", vec(s.theta)}, {"eval", eval_json(s.eval)}, {"stage", static_cast<int>(s.stage)}});
    json cov = json::array();
    const auto& m = c.proposal.covariance();
    for (Eigen::Index r = 0; r < m.rows(); ++r) cov.push_back(vec(m.row(r).transpose()));
    chains.push_back({
        {"theta", vec(c.state.theta)},
        {"eval", eval_json(c.state.eval)},
        {"iteration", c.state.iteration},
        {"accepted_first", c.state.accepted_first},
        {"accepted_second", c.state.accepted_second},
        {"proposals_second", c.state.proposals_second},
        {"rng", c.rng.state()},
        {"covariance", cov},
        {"samples", samples},
    });
  }
  json history = json::array();
  for (const auto& h : run.rhat_history) {
    json r = json::array();
    for (double x : h.rhat) r.push_back(num(x));
    history.push_back({{"samples", h.samples}, {"rhat", r}});
  }
  return {{"format", "smbbayes-checkpoint-1"},
          {"seed", run.seed},
          {"frozen", run.frozen},
          {"converged", run.converged},
          {"finished", run.finished},
          {"rhat_history", history},
          {"chains", chains}};
}

sampler::RunState checkpoint_from_json(const json& j) {
  try {
    if (j.at("format") != "smbbayes-checkpoint-1") throw InvalidInput("checkpoint: unknown format");
    sampler::RunState run;
    run.seed = j.at("seed").get<std::uint64_t>();
    run.frozen = j.at("frozen").get<bool>();
    run.converged = j.at("converged").get<bool>();
    run.finished = j.at("finished").get<bool>();
    for (const auto& h : j.at("rhat_history")) {
      sampler::RhatRecord r;
      r.samples = h.at("samples").get<long>();
      for (const auto& x : h.at("rhat")) r.rhat.push_back(get_num(x));
      run.rhat_history.push_back(std::move(r));
    }
    for (const auto& c : j.at("chains")) {
      sampler::Chain chain;
      chain.state.theta = get_vec(c.at("theta"));
      chain.state.eval = get_eval(c.at("eval"));
      chain.state.iteration = c.at("iteration").get<long>();
      chain.state.accepted_first = c.at("accepted_first").get<long>();
      chain.state.accepted_second = c.at("accepted_second").get<long>();
      chain.state.proposals_second = c.at("proposals_second").get<long>();
      chain.rng.restore(c.at("rng").get<std::string>());
      const auto& cov = c.at("covariance");
      const auto n = static_cast<Eigen::Index>(cov.size());
      sampler::Matrix m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) m.row(r) = get_vec(cov[static_cast<std::size_t>(r)]).transpose();
      chain.proposal = sampler::Proposal(m);
      for (const auto& s : c.at("samples")) {
        const int stage = s.at("stage").get<int>();
        if (stage < 0 || stage > 2) throw InvalidInput("checkpoint: bad stage flag");
        chain.samples.push_back({get_vec(s.at("theta")), get_eval(s.at("eval")), static_cast<sampler::Stage>(stage)});
      }
      run.chains.push_back(std::move(chain));
    }
    if (run.chains.empty()) throw InvalidInput("checkpoint: no chains");
    return run;
  } catch (const json::exception& e) {
    throw InvalidInput(fmt::format("checkpoint is corrupt: {}", e.what()));
  } catch (const NumericalError& e) {
    throw InvalidInput(fmt::format("checkpoint is corrupt: {}", e.what()));
  }
}

}  // namespace smbbayes::store
