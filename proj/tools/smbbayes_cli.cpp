#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "smbbayes/smbbayes.h"

namespace {

struct Common {
  std::string config_path;
  std::string preset;
  std::string out = "out";
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  auto* config = cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "bundled preset (klatt-reference, klatt-reference-high-purity, klatt-desk)")
      ->excludes(config);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads (default: available cores)")
      ->envname("SMBBAYES_THREADS")
      ->check(CLI::PositiveNumber);
}

int fail(smb_status s) {
  std::fprintf(stderr, "error: %s\n", smb_last_error());
  return static_cast<int>(s);
}

int threads_of(const Common& c) {
  if (c.threads > 0) return c.threads;
  const unsigned n = std::thread::hardware_concurrency();
  return n > 0 ? static_cast<int>(n) : 1;
}

smb_status load(const Common& c, smb_config** cfg) {
  if (!c.config_path.empty()) return smb_config_load_file(c.config_path.c_str(), cfg);
  return smb_config_from_preset(c.preset.empty() ? "klatt-reference" : c.preset.c_str(), cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian MCMC design of four-zone SMB chromatography"};
  app.require_subcommand(1);

  Common sim_c, smp_c, ana_c;
  std::vector<double> theta;
  auto* sim = app.add_subcommand("simulate", "simulate one operating point to cyclic steady state");
  add_common(sim, sim_c);
  sim->add_option("--theta", theta, "operating point L t_s Q_rec Q_F Q_D Q_E (SI units)")->expected(6);

  std::optional<std::uint64_t> seed;
  std::string resume;
  int max_rounds = 0;
  auto* smp = app.add_subcommand("sample", "sample the posterior over operating points");
  add_common(smp, smp_c);
  smp->add_option("--seed", seed, "RNG seed (overrides the config)");
  smp->add_option("--resume", resume, "checkpoint file to continue from")->check(CLI::ExistingFile);
  smp->add_option("--max-rounds", max_rounds, "stop after this many monitoring rounds")->group("");

  std::string store;
  std::vector<std::string> analyses;
  auto* ana = app.add_subcommand("analyze", "post-process a sample store");
  add_common(ana, ana_c);
  ana->add_option("--store", store, "directory written by sample or simulate")->required();
  ana->add_option("--analyses", analyses, "pareto, marginals, triangle, ppc, fits, ci-table or all")
      ->delimiter(',')
      ->expected(0, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : SMB_ERR_INVALID_INPUT;
  }

  const Common& c = sim->parsed() ? sim_c : smp->parsed() ? smp_c : ana_c;
  smb_config* cfg = nullptr;
  if (smb_status s = load(c, &cfg); s != SMB_OK) return fail(s);

  smb_status s = SMB_OK;
  if (sim->parsed()) {
    s = smb_simulate(cfg, theta.empty() ? nullptr : theta.data(), c.out.c_str());
    if (s == SMB_OK) std::printf("wrote %s\n", c.out.c_str());
  } else if (smp->parsed()) {
    smb_sample_options o;
    smb_sample_options_init(&o);
    if (seed) {
      o.has_seed = 1;
      o.seed = *seed;
    }
    o.threads = threads_of(c);
    o.resume_path = resume.empty() ? nullptr : resume.c_str();
    o.max_rounds = max_rounds;
    int finished = 0;
    s = smb_sample(cfg, c.out.c_str(), &o, &finished);
    if (s == SMB_OK) std::printf(finished ? "wrote %s\n" : "stopped early; checkpoint in %s\n", c.out.c_str());
  } else {
    std::vector<const char*> names;
    for (const auto& a : analyses) names.push_back(a.c_str());
    s = smb_analyze(cfg, store.c_str(), names.data(), names.size(), c.out.c_str(), threads_of(c));
  }
  smb_config_free(cfg);
  return s == SMB_OK ? 0 : fail(s);
}
