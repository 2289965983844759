#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blindrestore/retinex.hpp"
#include "blindrestore/solver.hpp"

namespace br {

// Every tunable of the pipeline as one flat key=value set. Unknown keys are
// rejected; serialization round-trips bit-exactly through the text form.
struct AppConfig {
  RetinexConfig retinex;
  RestoreConfig restore;
  int threads = 0;    // 0 = hardware concurrency
  int save_bits = 8;  // output raster depth
};

namespace config_detail {

struct Entry {
  std::string key;
  std::function<std::string(const AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&)> set;
};

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad real value for " + key + ": '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

inline std::string real_str(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> r;
    auto add_real = [&r](const std::string& key, std::function<double&(AppConfig&)> ref) {
      r.push_back({key,
                   [ref](const AppConfig& c) { return real_str(ref(const_cast<AppConfig&>(c))); },
                   [key, ref](AppConfig& c, const std::string& v) { ref(c) = parse_real(key, v); }});
    };
    auto add_int = [&r](const std::string& key, std::function<int&(AppConfig&)> ref) {
      r.push_back({key,
                   [ref](const AppConfig& c) { return std::to_string(ref(const_cast<AppConfig&>(c))); },
                   [key, ref](AppConfig& c, const std::string& v) { ref(c) = parse_int(key, v); }});
    };
    auto add_bool = [&r](const std::string& key, std::function<bool&(AppConfig&)> ref) {
      r.push_back({key,
                   [ref](const AppConfig& c) { return ref(const_cast<AppConfig&>(c)) ? "1" : "0"; },
                   [key, ref](AppConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); }});
    };

    // retinex
    add_real("eta0", [](AppConfig& c) -> double& { return c.retinex.eta0; });
    add_real("eta1", [](AppConfig& c) -> double& { return c.retinex.eta1; });
    add_real("bandwidth", [](AppConfig& c) -> double& { return c.retinex.bandwidth; });
    add_int("window", [](AppConfig& c) -> int& { return c.retinex.window; });
    add_int("patch_radius", [](AppConfig& c) -> int& { return c.retinex.patch_radius; });
    add_real("tau", [](AppConfig& c) -> double& { return c.retinex.tau; });
    add_int("retinex_iters", [](AppConfig& c) -> int& { return c.retinex.iter_max; });
    add_real("log_floor", [](AppConfig& c) -> double& { return c.retinex.log_floor; });
    add_int("weight_refresh", [](AppConfig& c) -> int& { return c.retinex.weight_refresh; });
    add_real("eps_nl", [](AppConfig& c) -> double& { return c.retinex.eps_nl; });
    add_real("retinex_tol", [](AppConfig& c) -> double& { return c.retinex.stop_tol; });

    // reconstruction functional
    add_real("gamma", [](AppConfig& c) -> double& { return c.restore.gamma; });
    add_real("lambda", [](AppConfig& c) -> double& { return c.restore.lambda; });
    add_real("beta0", [](AppConfig& c) -> double& { return c.restore.beta0; });
    add_real("beta1", [](AppConfig& c) -> double& { return c.restore.beta1; });
    add_real("beta2", [](AppConfig& c) -> double& { return c.restore.beta2; });
    add_real("beta", [](AppConfig& c) -> double& { return c.restore.beta; });
    add_real("residual_tol", [](AppConfig& c) -> double& { return c.restore.residual_tol; });
    add_real("change_tol", [](AppConfig& c) -> double& { return c.restore.change_tol; });
    add_int("admm_iters", [](AppConfig& c) -> int& { return c.restore.max_admm_iters; });

    // kernel schedule
    add_int("kernel_init", [](AppConfig& c) -> int& { return c.restore.kernel_size_init; });
    add_int("kernel_max", [](AppConfig& c) -> int& { return c.restore.kernel_size_max; });
    add_int("outer_iters", [](AppConfig& c) -> int& { return c.restore.max_outer_iters; });
    add_int("kernel_burn_in", [](AppConfig& c) -> int& { return c.restore.kernel_burn_in; });
    add_int("kernel_update_every", [](AppConfig& c) -> int& { return c.restore.kernel_update_every; });
    add_int("kernel_iters", [](AppConfig& c) -> int& { return c.restore.max_kernel_iters; });
    add_real("kernel_tol", [](AppConfig& c) -> double& { return c.restore.kernel_tol; });
    add_real("ring_stop", [](AppConfig& c) -> double& { return c.restore.ring_mass_stop; });

    // inner solves
    add_int("inner_sweeps", [](AppConfig& c) -> int& { return c.restore.inner_sweeps; });
    add_real("inner_tol", [](AppConfig& c) -> double& { return c.restore.inner_tol; });
    add_real("cg_tol", [](AppConfig& c) -> double& { return c.restore.cg_tol; });
    add_int("cg_iters", [](AppConfig& c) -> int& { return c.restore.cg_max_iters; });

    // structure-adaptive TGV
    add_real("alpha0_max", [](AppConfig& c) -> double& { return c.restore.tgv.alpha0_max; });
    add_real("alpha0_min", [](AppConfig& c) -> double& { return c.restore.tgv.alpha0_min; });
    add_real("alpha1_max", [](AppConfig& c) -> double& { return c.restore.tgv.alpha1_max; });
    add_real("alpha1_min", [](AppConfig& c) -> double& { return c.restore.tgv.alpha1_min; });
    add_real("tensor_sigma", [](AppConfig& c) -> double& { return c.restore.tensor_sigma; });
    add_real("chi", [](AppConfig& c) -> double& { return c.restore.chi; });

    // shearlet system
    add_int("levels", [](AppConfig& c) -> int& { return c.restore.levels; });
    add_int("shears", [](AppConfig& c) -> int& { return c.restore.shears; });
    add_int("fan_size", [](AppConfig& c) -> int& { return c.restore.fan_size; });

    // pipeline
    add_int("patch_size", [](AppConfig& c) -> int& { return c.restore.patch_size; });
    add_int("overlap", [](AppConfig& c) -> int& { return c.restore.overlap; });
    add_bool("estimate_kernel", [](AppConfig& c) -> bool& { return c.restore.estimate_kernel; });
    add_bool("retinex_enabled", [](AppConfig& c) -> bool& { return c.restore.retinex_enabled; });
    add_int("threads", [](AppConfig& c) -> int& { return c.threads; });
    add_int("save_bits", [](AppConfig& c) -> int& { return c.save_bits; });
    return r;
  }();
  return entries;
}

}  // namespace config_detail

inline void apply_config_value(AppConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : config_detail::registry())
    if (e.key == key) {
      e.set(cfg, value);
      return;
    }
  throw ConfigError("config: unknown key '" + key + "'");
}

inline std::string serialize_config(const AppConfig& cfg) {
  std::ostringstream os;
  for (const auto& e : config_detail::registry()) os << e.key << "=" << e.get(cfg) << "\n";
  return os.str();
}

// Flat UTF-8 key=value lines; '#' starts a comment.
inline void apply_config_text(AppConfig& cfg, std::istream& in, const std::string& origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
    };
    strip(key);
    strip(value);
    apply_config_value(cfg, key, value);
  }
}

inline void apply_config_file(AppConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open config file");
  apply_config_text(cfg, in, path);
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : config_detail::registry()) keys.push_back(e.key);
  return keys;
}

}  // namespace br
