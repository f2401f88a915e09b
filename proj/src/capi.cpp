#include "smbbayes/smbbayes.h"

#include <array>
#include <cstring>
#include <memory>
#include <exception>
#include <string>

#include "analysis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "workflows.hpp"

struct smb_config {
  smbbayes::config::RunConfig value;
};

namespace {

thread_local std::string last_error;

template <class Fn>
smb_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return SMB_OK;
  } catch (const smbbayes::InvalidInput& e) {
    last_error = e.what();
    return SMB_ERR_INVALID_INPUT;
  } catch (const smbbayes::NumericalError& e) {
    last_error = e.what();
    return SMB_ERR_NUMERICAL;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SMB_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SMB_ERR_INVALID_INPUT;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw smbbayes::InvalidInput(std::string(what) + " must not be NULL");
}

smbbayes::network::OperatingPoint point(const smb_config* config, const double* theta) {
  if (theta == nullptr) return config->value.operating_point;
  std::array<double, smbbayes::network::OperatingPoint::size> a{};
  std::memcpy(a.data(), theta, sizeof(double) * a.size());
  return smbbayes::network::OperatingPoint::from_array(a);
}

char* copy_string(const std::string& s) {
  auto* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

smb_status make_config(smb_config** out, auto&& build) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto cfg = std::make_unique<smb_config>(smb_config{build()});
    cfg->value.validate();
    *out = cfg.release();
  });
}

}  // namespace

extern "C" {

smb_status smb_config_from_preset(const char* name, smb_config** out) {
  return make_config(out, [&] {
    require(name, "name");
    return smbbayes::config::preset(name);
  });
}

smb_status smb_config_load_file(const char* path, smb_config** out) {
  return make_config(out, [&] {
    require(path, "path");
    return smbbayes::config::load_file(path);
  });
}

smb_status smb_config_from_json(const char* text, smb_config** out) {
  return make_config(out, [&] {
    require(text, "text");
    return smbbayes::config::parse_string(text);
  });
}

smb_status smb_config_to_json(const smb_config* config, char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = copy_string(smbbayes::config::dump(config->value));
  });
}

void smb_config_free(smb_config* config) { delete config; }

void smb_string_free(char* text) { delete[] text; }

smb_status smb_config_operating_point(const smb_config* config, double theta[SMB_PARAMETERS]) {
  return guarded([&] {
    require(config, "config");
    require(theta, "theta");
    const auto a = config->value.operating_point.to_array();
    std::memcpy(theta, a.data(), sizeof(double) * a.size());
  });
}

smb_status smb_flowrates(const smb_config* config, const double theta[SMB_PARAMETERS], double out[5]) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const auto op = point(config, theta);
    const auto flows = smbbayes::network::derive_flowrates(op, config->value.plant.geometry_for(op));
    for (int j = 0; j < 4; ++j) out[j] = flows.zone[j];
    out[4] = flows.raffinate;
  });
}

smb_status smb_flowrate_ratios(const smb_config* config, const double theta[SMB_PARAMETERS], double out[4]) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const auto op = point(config, theta);
    const auto geometry = config->value.plant.geometry_for(op);
    const auto m = smbbayes::analysis::flowrate_ratios(op, geometry, smbbayes::network::derive_flowrates(op, geometry));
    for (int j = 0; j < 4; ++j) out[j] = m.m[j];
  });
}

smb_status smb_simulate(const smb_config* config, const double* theta, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    smbbayes::workflows::cmd_simulate(config->value, point(config, theta), out_dir);
  });
}

void smb_sample_options_init(smb_sample_options* options) {
  if (options == nullptr) return;
  *options = smb_sample_options{0, 0, 1, nullptr, 0};
}

smb_status smb_sample(const smb_config* config, const char* out_dir, const smb_sample_options* options,
                      int* finished) {
  return guarded([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    smbbayes::workflows::SampleOptions o;
    if (options != nullptr) {
      if (options->has_seed) o.seed = options->seed;
      o.threads = options->threads > 0 ? options->threads : 1;
      if (options->resume_path != nullptr) o.resume_path = options->resume_path;
      o.max_rounds = options->max_rounds > 0 ? options->max_rounds : -1;
    }
    const auto summary = smbbayes::workflows::cmd_sample(config->value, out_dir, o);
    if (finished != nullptr) *finished = summary.finished ? 1 : 0;
  });
}

smb_status smb_analyze(const smb_config* config, const char* store_dir, const char* const* analyses, size_t count,
                       const char* out_dir, int threads) {
  return guarded([&] {
    require(config, "config");
    require(store_dir, "store_dir");
    require(out_dir, "out_dir");
    if (count > 0) require(analyses, "analyses");
    std::vector<std::string> names;
    for (size_t i = 0; i < count; ++i) {
      require(analyses[i], "analysis name");
      names.emplace_back(analyses[i]);
    }
    smbbayes::workflows::cmd_analyze(config->value, store_dir, names, out_dir, threads > 0 ? threads : 1);
  });
}

const char* smb_last_error(void) { return last_error.c_str(); }

}  // extern "C"
