#pragma once

// Experiment configuration: a JSON document merged over a fixed defaults
// table. Keys not present in the defaults are rejected with their full path.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqzem/design.hpp"
#include "sqzem/error.hpp"
#include "sqzem/fock.hpp"
#include "sqzem/integrator.hpp"

namespace sqzem::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Every key the tool understands, with its default. `null` marks optional
/// values whose default is derived from other keys (documented alongside).
inline json default_config() {
  return json::parse(R"({
  "experiment": "design",
  "params": {
    "delta1": 1000.0,
    "delta2": 1000.0,
    "xi": 800.0,
    "omega_m": 1.0,
    "g": 0.001,
    "kappa": 0.02,
    "gamma_m": 0.001,
    "n_th": 0.0,
    "omega_d": null,
    "xi_min": 1.0,
    "xi_max": null
  },
  "probe": {
    "epsilon_over_kappa": 0.1
  },
  "blockade": {
    "g1_values": [0.25, 0.5, 1.0],
    "g1": 1.0,
    "delta0": null,
    "kappa": 0.1,
    "Q": 1000.0,
    "n_th": 0.0
  },
  "truncation": {
    "blockade": [6, 14],
    "blockade_check": [6, 28],
    "oracle": [5, 12],
    "frames": [12, 12, 8],
    "dissipator": [15, 15, 2],
    "rwa": [8, 8, 6]
  },
  "grids": {
    "xi_points": 400,
    "xi_closest": 1e-7,
    "xi_beyond_points": 10,
    "r0_max": 7.0,
    "r0_points": 141,
    "delta0_step": 0.05,
    "delta0_below": 0.5,
    "delta0_above": 3.5,
    "peak_tol": 1e-4,
    "g2_t_end_kappa": 20.0,
    "g2_points": 201,
    "horizon_kappa": 10.0,
    "horizon_points": 201
  },
  "verify": {
    "dissipator_r0": 0.3,
    "dissipator_g": 0.1,
    "dissipator_max_occupation": 5,
    "dissipator_tol": 1e-10,
    "frames_r0": 0.5,
    "frames_omega_sum": 1.0,
    "frames_kappa": 2.0,
    "frames_g": 0.1,
    "frames_gamma_m": 0.01,
    "frames_tol": 0.01,
    "rwa_r0": 0.5,
    "rwa_gM": 0.25,
    "rwa_kappa": 1.0,
    "rwa_gamma_m": 0.01,
    "rwa_ratio_valid": 20.0,
    "rwa_ratio_invalid": 5.0,
    "rwa_tol": 0.05
  },
  "tolerances": {
    "relative": 1e-8,
    "absolute": 1e-10
  },
  "output": "results"
})");
}

/// One line per key for --help.
inline std::string describe_defaults() {
  static const std::vector<std::pair<std::string, std::string>> notes = {
      {"experiment", "design | spectrum | g2 | verify (set by the subcommand)"},
      {"params.delta1", "cavity detuning Delta_1 (units of omega_m)"},
      {"params.delta2", "cavity detuning Delta_2"},
      {"params.xi", "parametric coupling for single-point runs"},
      {"params.omega_m", "mechanical frequency, the frequency unit"},
      {"params.g", "bare radiation-pressure coupling"},
      {"params.kappa", "cavity decay rate"},
      {"params.gamma_m", "mechanical decay rate"},
      {"params.n_th", "thermal phonon number"},
      {"params.omega_d", "flux drive frequency; metadata only"},
      {"params.xi_min", "lower end of the xi sweep"},
      {"params.xi_max", "upper end of the xi sweep; null = just below xi0 = (delta1+delta2)/2"},
      {"probe.epsilon_over_kappa", "weak-probe amplitude epsilon_eff / kappa (<= 0.2)"},
      {"blockade.g1_values", "G1/omega_m values of the excitation spectra"},
      {"blockade.g1", "G1/omega_m of the g2 run"},
      {"blockade.delta0", "probe detuning of the g2 run; null = -G1^2/omega_m"},
      {"blockade.kappa", "decay of the first Bogoliubov mode"},
      {"blockade.Q", "mechanical quality factor, gamma_m = omega_m / Q"},
      {"blockade.n_th", "thermal phonon number of the blockade runs"},
      {"truncation.blockade", "Fock cutoffs (mode, phonon) of spectra and g2"},
      {"truncation.blockade_check", "larger cutoffs used to check g2 convergence"},
      {"truncation.oracle", "cutoffs of the dense-exponentiation cross-check"},
      {"truncation.frames", "cutoffs of the lab vs Bogoliubov dynamics check"},
      {"truncation.dissipator", "cutoffs of the superoperator identity check"},
      {"truncation.rwa", "cutoffs of the rotating-wave check"},
      {"grids.xi_points", "points in the log-dense xi sweep"},
      {"grids.xi_closest", "relative gap (xi0 - xi)/xi0 of the last sweep point"},
      {"grids.xi_beyond_points", "error-marked rows when xi_max >= xi0"},
      {"grids.r0_max", "upper end of the r0 sweep"},
      {"grids.r0_points", "points in the r0 sweep"},
      {"grids.delta0_step", "coarse spectrum step before peak refinement"},
      {"grids.delta0_below", "spectrum range below the zero-phonon line"},
      {"grids.delta0_above", "spectrum range above the zero-phonon line"},
      {"grids.peak_tol", "peak position tolerance of the refinement"},
      {"grids.g2_t_end_kappa", "g2 trajectory length in units of 1/kappa"},
      {"grids.g2_points", "samples of the g2 trajectory"},
      {"grids.horizon_kappa", "verification horizon in units of 1/kappa"},
      {"grids.horizon_points", "samples of the verification trajectories"},
      {"verify.dissipator_r0", "squeezing of the superoperator identity check"},
      {"verify.dissipator_g", "radiation-pressure coupling of that check"},
      {"verify.dissipator_max_occupation", "projector onto occupations <= this"},
      {"verify.dissipator_tol", "relative tolerance of the identity"},
      {"verify.frames_r0", "squeezing of the frame dynamics check"},
      {"verify.frames_omega_sum", "Omega_1 + Omega_2 of the frame check"},
      {"verify.frames_kappa", "cavity decay of the frame check"},
      {"verify.frames_g", "radiation-pressure coupling of the frame check"},
      {"verify.frames_gamma_m", "mechanical decay of the frame check"},
      {"verify.frames_tol", "time-averaged relative deviation allowed"},
      {"verify.rwa_r0", "squeezing of the rotating-wave check"},
      {"verify.rwa_gM", "g sinh r0 cosh r0 of the rotating-wave check"},
      {"verify.rwa_kappa", "cavity decay of the rotating-wave check"},
      {"verify.rwa_gamma_m", "mechanical decay of the rotating-wave check"},
      {"verify.rwa_ratio_valid", "rwa_ratio of the case expected to pass"},
      {"verify.rwa_ratio_invalid", "rwa_ratio of the case expected to fail"},
      {"verify.rwa_tol", "time-averaged relative deviation allowed"},
      {"tolerances.relative", "integrator relative tolerance"},
      {"tolerances.absolute", "integrator absolute tolerance"},
      {"output", "output directory"},
  };
  const json defaults = default_config();
  std::ostringstream os;
  for (const auto& [key, note] : notes) {
    const json& value = defaults[json::json_pointer("/" + [&] {
      std::string p = key;
      for (auto& c : p) {
        if (c == '.') c = '/';
      }
      return p;
    }())];
    os << "  " << key << " = " << value.dump() << "\n      " << note << "\n";
  }
  return os.str();
}

/// Named parameter sets: fig2 (design curves), fig3a (spectra), fig3b (blockade).
inline json preset(const std::string& name) {
  if (name == "fig2") {
    return {{"experiment", "design"},
            {"params", {{"delta1", 1000.0}, {"delta2", 1000.0}, {"g", 0.001}, {"kappa", 0.02}}}};
  }
  if (name == "fig3a") {
    return {{"experiment", "spectrum"},
            {"blockade", {{"g1_values", {0.25, 0.5, 1.0}}, {"kappa", 0.1}, {"Q", 1000.0}, {"n_th", 0.0}}},
            {"probe", {{"epsilon_over_kappa", 0.1}}}};
  }
  if (name == "fig3b") {
    return {{"experiment", "g2"},
            {"blockade", {{"g1", 1.0}, {"delta0", nullptr}, {"kappa", 0.1}, {"Q", 1000.0}, {"n_th", 0.0}}},
            {"probe", {{"epsilon_over_kappa", 0.1}}}};
  }
  throw Error(Errc::config, "unknown preset '" + name + "' (fig2, fig3a, fig3b)");
}

namespace detail {

inline bool compatible(const json& def, const json& value) {
  if (def.is_null()) return value.is_null() || value.is_number();
  if (def.is_number()) return value.is_number();
  if (def.is_string()) return value.is_string();
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_array()) {
    if (!value.is_array()) return false;
    for (const auto& v : value) {
      if (!v.is_number()) return false;
    }
    return true;
  }
  return def.is_object() && value.is_object();
}

}  // namespace detail

/// Merges `patch` over `config`, rejecting unknown keys and type changes.
/// Keys whose default is null accept numbers or null.
inline void apply_patch(json& config, const json& patch) {
  // Type checks are against the defaults table so a null default stays optional.
  static const json defaults = default_config();
  json shadow = config;
  std::function<void(json&, const json&, const json&, const std::string&)> walk =
      [&](json& target, const json& def, const json& p, const std::string& path) {
        if (!p.is_object()) {
          throw Error(Errc::config,
                      "expected an object at '" + (path.empty() ? "<root>" : path) + "'");
        }
        for (const auto& [key, value] : p.items()) {
          const std::string where = path.empty() ? key : path + "." + key;
          if (!def.contains(key)) throw Error(Errc::config, "unknown config key '" + where + "'");
          if (def[key].is_object()) {
            walk(target[key], def[key], value, where);
            continue;
          }
          if (!detail::compatible(def[key], value)) {
            throw Error(Errc::config, "wrong type for '" + where + "': got " + value.dump());
          }
          target[key] = value;
        }
      };
  walk(shadow, defaults, patch, "");
  config = std::move(shadow);
}

/// `a.b.c=value`; the value is parsed as JSON when possible, else taken as a string.
inline json parse_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::config, "--set expects key=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw Error(Errc::config, "empty segment in key '" + key + "'");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config, "cannot open config file '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::config, "config file '" + path + "' is not valid JSON");
  return j;
}

// Typed views of the resolved document.

inline SystemParams system_params(const json& c) {
  const json& p = c.at("params");
  SystemParams s;
  s.delta1 = p.at("delta1");
  s.delta2 = p.at("delta2");
  s.xi = p.at("xi");
  s.omega_m = p.at("omega_m");
  s.g = p.at("g");
  s.kappa = p.at("kappa");
  s.gamma_m = p.at("gamma_m");
  s.n_th = p.at("n_th");
  if (!p.at("omega_d").is_null()) s.omega_d = p.at("omega_d").get<double>();
  return s;
}

inline TruncationSpec truncation(const json& c, const std::string& which, int modes) {
  const auto dims = c.at("truncation").at(which).get<std::vector<double>>();
  std::vector<int> cut;
  for (double d : dims) {
    if (d != std::floor(d)) {
      throw Error(Errc::config, "truncation." + which + " must hold integers");
    }
    cut.push_back(static_cast<int>(d));
  }
  if (static_cast<int>(cut.size()) != modes) {
    throw Error(Errc::config, "truncation." + which + " needs " + std::to_string(modes) +
                                  " cutoffs");
  }
  try {
    return TruncationSpec(cut);
  } catch (const Error& e) {
    throw Error(Errc::config, "truncation." + which + ": " + e.what());
  }
}

inline Tolerance tolerance(const json& c) {
  Tolerance t;
  t.relative = c.at("tolerances").at("relative");
  t.absolute = c.at("tolerances").at("absolute");
  if (!(t.relative > 0.0) || !(t.absolute > 0.0)) {
    throw Error(Errc::config, "tolerances must be positive");
  }
  return t;
}

inline int positive_int(const json& c, const std::string& section, const std::string& key) {
  const double v = c.at(section).at(key);
  if (v != std::floor(v) || v < 1) {
    throw Error(Errc::config, section + "." + key + " must be a positive integer");
  }
  return static_cast<int>(v);
}

}  // namespace sqzem::cli
