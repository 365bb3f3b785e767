// Scenario configs: a single JSON file describing material overrides,
// geometry, field and drive, the NV ensemble, model constants and exactly
// one task block. Parsing is strict: unknown keys are rejected with the
// offending key path and the nearest valid key suggested.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridsim/coupling.hpp"
#include "hybridsim/dynamics.hpp"
#include "hybridsim/magnonics.hpp"
#include "hybridsim/odmr.hpp"
#include "hybridsim/params.hpp"
#include "hybridsim/sensing.hpp"

namespace hybridsim {

using nlohmann::json;

// Configuration failure with the key path that caused it. The CLI maps
// this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace config_detail {

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& path, bool strict) {
  if (!strict || !obj.is_object()) return;
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.count(key)) continue;
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& candidate : allowed) {
      const std::size_t d = levenshtein(key, candidate);
      if (d < best_d) {
        best_d = d;
        best = candidate;
      }
    }
    std::string msg = "unknown key \"" + path + (path.empty() ? "" : ".") + key + "\"";
    if (!best.empty() && best_d <= std::max<std::size_t>(3, key.size() / 2)) {
      msg += "; did you mean \"" + best + "\"?";
    }
    throw ConfigError(msg);
  }
}

inline double get_num(const json& obj, const std::string& key, double fallback,
                      const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) {
    throw ConfigError("\"" + path + "." + key + "\" must be a number");
  }
  return obj.at(key).get<double>();
}

inline int get_int(const json& obj, const std::string& key, int fallback,
                   const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer()) {
    throw ConfigError("\"" + path + "." + key + "\" must be an integer");
  }
  return obj.at(key).get<int>();
}

inline bool get_bool(const json& obj, const std::string& key, bool fallback,
                     const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) {
    throw ConfigError("\"" + path + "." + key + "\" must be a boolean");
  }
  return obj.at(key).get<bool>();
}

inline std::string get_str(const json& obj, const std::string& key,
                           const std::string& fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) {
    throw ConfigError("\"" + path + "." + key + "\" must be a string");
  }
  return obj.at(key).get<std::string>();
}

}  // namespace config_detail

// Either an explicit value list or a linear {min, max, count} spec.
struct GridSpec {
  std::vector<double> values;

  static GridSpec parse(const json& j, const std::string& path, bool strict) {
    GridSpec g;
    if (j.is_array()) {
      for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("\"" + path + "\" entries must be numbers");
        g.values.push_back(v.get<double>());
      }
    } else if (j.is_object()) {
      config_detail::check_keys(j, {"min", "max", "count"}, path, strict);
      const double lo = config_detail::get_num(j, "min", 0.0, path);
      const double hi = config_detail::get_num(j, "max", 0.0, path);
      const int n = config_detail::get_int(j, "count", 0, path);
      if (n < 2 || !(hi > lo)) {
        throw ConfigError("\"" + path + "\" needs max > min and count >= 2");
      }
      g.values.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        g.values.push_back(lo + (hi - lo) * i / (n - 1));
      }
    } else {
      throw ConfigError("\"" + path + "\" must be an array or {min, max, count}");
    }
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      if (!std::isfinite(g.values[i])) {
        throw ConfigError("\"" + path + "\" has non-finite entries");
      }
      if (i > 0 && g.values[i] <= g.values[i - 1]) {
        throw ConfigError("\"" + path + "\" must be strictly increasing");
      }
    }
    return g;
  }
};

enum class TaskKind {
  kDispersion,
  kTransmission,
  kOdmrMap,
  kRabi,
  kSequence,
  kAmplification,
  kSensing
};

inline const char* task_name(TaskKind k) {
  switch (k) {
    case TaskKind::kDispersion: return "dispersion";
    case TaskKind::kTransmission: return "transmission";
    case TaskKind::kOdmrMap: return "odmr_map";
    case TaskKind::kRabi: return "rabi";
    case TaskKind::kSequence: return "sequence";
    case TaskKind::kAmplification: return "amplification";
    case TaskKind::kSensing: return "sensing";
  }
  return "?";
}

enum class RabiMode { kSingle, kMatchedPair, kPowerSweep };
enum class RabiChannel { kAuto, kAntenna, kSpinWave };

struct RabiTask {
  RabiMode mode = RabiMode::kSingle;
  RabiChannel channel = RabiChannel::kAuto;
  double t_max = 2.0;  // us
  int points = 400;
  double detuning = 0.0;  // MHz
  double rabi_decay_time = std::numeric_limits<double>::infinity();
  // matched_pair / power_sweep share the matched-transition anchor
  double b_low = 15.0;
  double b_high = 145.0;
  double f_seed = 2862.0;
  std::vector<double> powers_mw;  // power_sweep only
};

struct SequenceRun {
  std::string name = "hahn";
  std::string kind = "hahn";  // "hahn" | "cpmg"
  int n_pulses = 1;
  double t2 = 1.54;    // us
  double alpha = 1.0;  // stretch exponent
};

struct SequenceTask {
  std::vector<SequenceRun> runs;
  GridSpec t_grid;  // total free-evolution times, us
  bool fit = true;
};

struct AmplificationTask {
  std::vector<double> x_um;
  double b_low = 15.0;
  double b_high = 145.0;
  double f_target = 2862.0;
  double f_tol = 10.0;
};

struct SensingTask {
  SensingConfig config;
  double leak_field_scale = 20.0;
  double resonance_tol = 5.0;
  bool auto_orient = true;  // solve theta_nv so a transition meets f_cavity
  std::optional<GridSpec> sweep_b;  // drive-field sweep, gauss
};

struct VisibilityThresholds {
  double contrast = 0.005;  // ODMR visibility
  double rabi_mhz = 0.5;    // Rabi visibility
};

struct ScenarioConfig {
  MaterialParams material;
  DeviceGeometry geometry;
  FieldConfig field;  // theta + single b_ext
  std::optional<GridSpec> b_grid;
  DriveConfig drive;
  std::optional<GridSpec> f_grid;

  // NV ensemble: explicit orientations win over the seeded ensemble.
  std::vector<double> explicit_orientations;  // radians
  int ensemble_count = 64;
  std::uint64_t seed = 1234;

  MagnonicsModel mag_model;
  OdmrModel odmr_model;
  QuenchModel quench_model;
  std::optional<double> kappa_sw;  // absent -> auto-calibrated
  CouplingCalibration calibration;
  double msl_rolloff_per_ghz = 0.0;
  VisibilityThresholds visibility;

  TaskKind task = TaskKind::kDispersion;
  int dispersion_points = 400;
  RabiTask rabi;
  SequenceTask sequence;
  AmplificationTask amplification;
  SensingTask sensing;

  std::string output_dir = "out";

  std::vector<double> ensemble(std::optional<std::uint64_t> seed_override = {}) const {
    if (!explicit_orientations.empty()) return explicit_orientations;
    return ensemble_orientations(ensemble_count, seed_override.value_or(seed));
  }
};

namespace config_detail {

inline void parse_material(const json& j, MaterialParams& m, bool strict) {
  check_keys(j,
             {"gamma_m_mhz_per_g", "four_pi_ms_g", "thickness_um", "alpha_gilbert",
              "gamma_e_mhz_per_g", "d_zfs_mhz", "allow_nonstandard_zfs"},
             "material", strict);
  m.gamma_m = get_num(j, "gamma_m_mhz_per_g", m.gamma_m, "material");
  m.four_pi_ms = get_num(j, "four_pi_ms_g", m.four_pi_ms, "material");
  m.thickness = get_num(j, "thickness_um", m.thickness, "material");
  m.alpha_gilbert = get_num(j, "alpha_gilbert", m.alpha_gilbert, "material");
  m.gamma_e = get_num(j, "gamma_e_mhz_per_g", m.gamma_e, "material");
  m.d_zfs = get_num(j, "d_zfs_mhz", m.d_zfs, "material");
  m.allow_nonstandard_zfs =
      get_bool(j, "allow_nonstandard_zfs", m.allow_nonstandard_zfs, "material");
}

inline void parse_geometry(const json& j, DeviceGeometry& g, bool strict) {
  check_keys(j, {"msl_width_um", "msl_separation_um", "nd_x_um", "nd_z_nm"},
             "geometry", strict);
  g.msl_width = get_num(j, "msl_width_um", g.msl_width, "geometry");
  g.msl_separation = get_num(j, "msl_separation_um", g.msl_separation, "geometry");
  g.nd_x = get_num(j, "nd_x_um", g.nd_x, "geometry");
  g.nd_z = get_num(j, "nd_z_nm", g.nd_z, "geometry");
}

inline void parse_model(const json& j, ScenarioConfig& cfg, bool strict) {
  check_keys(j,
             {"k_min_rad_per_um", "k_max_rad_per_um", "k_spacing_rad_per_um", "rho_nr",
              "line_width_mhz", "line_cutoff_mhz", "vg_rel_step", "ferromagnet_enabled",
              "odmr", "quench", "kappa_sw_g_per_sqrt_mw", "calibration",
              "msl_rolloff_per_ghz", "visibility"},
             "model", strict);
  auto& m = cfg.mag_model;
  m.k_min = get_num(j, "k_min_rad_per_um", m.k_min, "model");
  m.k_max = get_num(j, "k_max_rad_per_um", m.k_max, "model");
  m.k_spacing = get_num(j, "k_spacing_rad_per_um", m.k_spacing, "model");
  m.rho_nr = get_num(j, "rho_nr", m.rho_nr, "model");
  m.line_width = get_num(j, "line_width_mhz", m.line_width, "model");
  m.line_cutoff = get_num(j, "line_cutoff_mhz", m.line_cutoff, "model");
  m.vg_rel_step = get_num(j, "vg_rel_step", m.vg_rel_step, "model");
  m.ferromagnet_enabled =
      get_bool(j, "ferromagnet_enabled", m.ferromagnet_enabled, "model");

  if (j.contains("odmr")) {
    const json& o = j.at("odmr");
    check_keys(o, {"contrast_max", "linewidth_mhz", "saturation"}, "model.odmr", strict);
    cfg.odmr_model.contrast_max =
        get_num(o, "contrast_max", cfg.odmr_model.contrast_max, "model.odmr");
    cfg.odmr_model.linewidth =
        get_num(o, "linewidth_mhz", cfg.odmr_model.linewidth, "model.odmr");
    cfg.odmr_model.saturation =
        get_num(o, "saturation", cfg.odmr_model.saturation, "model.odmr");
  }
  if (j.contains("quench")) {
    const json& q = j.at("quench");
    check_keys(q, {"coefficient_per_mw", "bandwidth_mhz"}, "model.quench", strict);
    cfg.quench_model.coefficient =
        get_num(q, "coefficient_per_mw", cfg.quench_model.coefficient, "model.quench");
    cfg.quench_model.bandwidth =
        get_num(q, "bandwidth_mhz", cfg.quench_model.bandwidth, "model.quench");
  }
  if (j.contains("kappa_sw_g_per_sqrt_mw")) {
    if (!j.at("kappa_sw_g_per_sqrt_mw").is_number()) {
      throw ConfigError("\"model.kappa_sw_g_per_sqrt_mw\" must be a number");
    }
    cfg.kappa_sw = j.at("kappa_sw_g_per_sqrt_mw").get<double>();
    if (!(*cfg.kappa_sw > 0.0)) {
      throw ConfigError("\"model.kappa_sw_g_per_sqrt_mw\" must be > 0");
    }
  }
  if (j.contains("calibration")) {
    const json& c = j.at("calibration");
    check_keys(c,
               {"x_ref_um", "b_low_g", "b_high_g", "f_seed_mhz",
                "target_amplification", "f_tol_mhz"},
               "model.calibration", strict);
    auto& cal = cfg.calibration;
    cal.x_ref = get_num(c, "x_ref_um", cal.x_ref, "model.calibration");
    cal.b_low = get_num(c, "b_low_g", cal.b_low, "model.calibration");
    cal.b_high = get_num(c, "b_high_g", cal.b_high, "model.calibration");
    cal.f_seed = get_num(c, "f_seed_mhz", cal.f_seed, "model.calibration");
    cal.target = get_num(c, "target_amplification", cal.target, "model.calibration");
    cal.f_tol = get_num(c, "f_tol_mhz", cal.f_tol, "model.calibration");
  }
  cfg.msl_rolloff_per_ghz =
      get_num(j, "msl_rolloff_per_ghz", cfg.msl_rolloff_per_ghz, "model");
  if (j.contains("visibility")) {
    const json& v = j.at("visibility");
    check_keys(v, {"contrast", "rabi_mhz"}, "model.visibility", strict);
    cfg.visibility.contrast =
        get_num(v, "contrast", cfg.visibility.contrast, "model.visibility");
    cfg.visibility.rabi_mhz =
        get_num(v, "rabi_mhz", cfg.visibility.rabi_mhz, "model.visibility");
  }
}

inline void parse_nv(const json& j, ScenarioConfig& cfg, bool strict) {
  check_keys(j, {"orientations_deg", "orientations_rad", "ensemble"}, "nv", strict);
  if (j.contains("orientations_deg") || j.contains("orientations_rad")) {
    const bool deg = j.contains("orientations_deg");
    const json& arr = deg ? j.at("orientations_deg") : j.at("orientations_rad");
    if (!arr.is_array() || arr.empty()) {
      throw ConfigError("\"nv.orientations\" must be a non-empty array");
    }
    for (const auto& v : arr) {
      if (!v.is_number()) throw ConfigError("\"nv.orientations\" must hold numbers");
      const double th = deg ? deg_to_rad(v.get<double>()) : v.get<double>();
      if (th < 0.0 || th > kPi / 2.0 + 1e-12) {
        throw ConfigError("\"nv.orientations\" angles must lie in [0, 90] degrees");
      }
      cfg.explicit_orientations.push_back(th);
    }
  }
  if (j.contains("ensemble")) {
    const json& e = j.at("ensemble");
    check_keys(e, {"count", "seed"}, "nv.ensemble", strict);
    cfg.ensemble_count = get_int(e, "count", cfg.ensemble_count, "nv.ensemble");
    if (cfg.ensemble_count <= 0) throw ConfigError("\"nv.ensemble.count\" must be > 0");
    if (e.contains("seed")) {
      if (!e.at("seed").is_number_unsigned() && !e.at("seed").is_number_integer()) {
        throw ConfigError("\"nv.ensemble.seed\" must be an integer");
      }
      cfg.seed = e.at("seed").get<std::uint64_t>();
    }
  }
}

inline void parse_task(const json& root, ScenarioConfig& cfg, bool strict) {
  const std::vector<std::pair<std::string, TaskKind>> kinds = {
      {"dispersion", TaskKind::kDispersion},
      {"transmission", TaskKind::kTransmission},
      {"odmr_map", TaskKind::kOdmrMap},
      {"rabi", TaskKind::kRabi},
      {"sequence", TaskKind::kSequence},
      {"amplification", TaskKind::kAmplification},
      {"sensing", TaskKind::kSensing}};
  int found = 0;
  for (const auto& [name, kind] : kinds) {
    if (root.contains(name)) {
      ++found;
      cfg.task = kind;
    }
  }
  if (found != 1) {
    throw ConfigError("config must contain exactly one task block (found " +
                      std::to_string(found) + ")");
  }

  switch (cfg.task) {
    case TaskKind::kDispersion: {
      const json& t = root.at("dispersion");
      check_keys(t, {"points"}, "dispersion", strict);
      cfg.dispersion_points = get_int(t, "points", cfg.dispersion_points, "dispersion");
      if (cfg.dispersion_points < 2) {
        throw ConfigError("\"dispersion.points\" must be >= 2");
      }
      break;
    }
    case TaskKind::kTransmission: {
      check_keys(root.at("transmission"), {}, "transmission", strict);
      if (!cfg.b_grid || !cfg.f_grid) {
        throw ConfigError("transmission task requires field.b_grid and drive.f_grid");
      }
      break;
    }
    case TaskKind::kOdmrMap: {
      check_keys(root.at("odmr_map"), {}, "odmr_map", strict);
      if (!cfg.b_grid || !cfg.f_grid) {
        throw ConfigError("odmr_map task requires field.b_grid and drive.f_grid");
      }
      break;
    }
    case TaskKind::kRabi: {
      const json& t = root.at("rabi");
      check_keys(t,
                 {"mode", "channel", "t_max_us", "points", "detuning_mhz",
                  "rabi_decay_time_us", "b_low_g", "b_high_g", "f_seed_mhz",
                  "powers_mw"},
                 "rabi", strict);
      const std::string mode = get_str(t, "mode", "single", "rabi");
      if (mode == "single") {
        cfg.rabi.mode = RabiMode::kSingle;
      } else if (mode == "matched_pair") {
        cfg.rabi.mode = RabiMode::kMatchedPair;
      } else if (mode == "power_sweep") {
        cfg.rabi.mode = RabiMode::kPowerSweep;
      } else {
        throw ConfigError("\"rabi.mode\" must be single | matched_pair | power_sweep");
      }
      const std::string ch = get_str(t, "channel", "auto", "rabi");
      if (ch == "auto") {
        cfg.rabi.channel = RabiChannel::kAuto;
      } else if (ch == "antenna") {
        cfg.rabi.channel = RabiChannel::kAntenna;
      } else if (ch == "spin_wave") {
        cfg.rabi.channel = RabiChannel::kSpinWave;
      } else {
        throw ConfigError("\"rabi.channel\" must be auto | antenna | spin_wave");
      }
      cfg.rabi.t_max = get_num(t, "t_max_us", cfg.rabi.t_max, "rabi");
      cfg.rabi.points = get_int(t, "points", cfg.rabi.points, "rabi");
      cfg.rabi.detuning = get_num(t, "detuning_mhz", cfg.rabi.detuning, "rabi");
      cfg.rabi.rabi_decay_time =
          get_num(t, "rabi_decay_time_us", cfg.rabi.rabi_decay_time, "rabi");
      cfg.rabi.b_low = get_num(t, "b_low_g", cfg.rabi.b_low, "rabi");
      cfg.rabi.b_high = get_num(t, "b_high_g", cfg.rabi.b_high, "rabi");
      cfg.rabi.f_seed = get_num(t, "f_seed_mhz", cfg.rabi.f_seed, "rabi");
      if (t.contains("powers_mw")) {
        cfg.rabi.powers_mw = GridSpec::parse(t.at("powers_mw"), "rabi.powers_mw",
                                             strict)
                                 .values;
      }
      if (cfg.rabi.t_max <= 0.0 || cfg.rabi.points < 2) {
        throw ConfigError("\"rabi\" needs t_max_us > 0 and points >= 2");
      }
      if (cfg.rabi.mode == RabiMode::kPowerSweep && cfg.rabi.powers_mw.size() < 3) {
        throw ConfigError("\"rabi.powers_mw\" needs >= 3 powers for a power sweep");
      }
      break;
    }
    case TaskKind::kSequence: {
      const json& t = root.at("sequence");
      check_keys(t, {"runs", "t_grid", "fit"}, "sequence", strict);
      if (!t.contains("runs") || !t.at("runs").is_array() || t.at("runs").empty()) {
        throw ConfigError("\"sequence.runs\" must be a non-empty array");
      }
      for (const auto& r : t.at("runs")) {
        check_keys(r, {"name", "kind", "n_pulses", "t2_us", "alpha"}, "sequence.runs",
                   strict);
        SequenceRun run;
        run.name = get_str(r, "name", "", "sequence.runs");
        run.kind = get_str(r, "kind", "hahn", "sequence.runs");
        if (run.kind != "hahn" && run.kind != "cpmg") {
          throw ConfigError("\"sequence.runs.kind\" must be hahn | cpmg");
        }
        run.n_pulses = get_int(r, "n_pulses", run.kind == "hahn" ? 1 : 3,
                               "sequence.runs");
        run.t2 = get_num(r, "t2_us", run.t2, "sequence.runs");
        run.alpha = get_num(r, "alpha", run.alpha, "sequence.runs");
        if (run.name.empty()) run.name = run.kind;
        if (run.n_pulses < 1) throw ConfigError("\"sequence.runs.n_pulses\" must be >= 1");
        cfg.sequence.runs.push_back(run);
      }
      if (!t.contains("t_grid")) throw ConfigError("\"sequence.t_grid\" is required");
      cfg.sequence.t_grid = GridSpec::parse(t.at("t_grid"), "sequence.t_grid", strict);
      cfg.sequence.fit = get_bool(t, "fit", cfg.sequence.fit, "sequence");
      break;
    }
    case TaskKind::kAmplification: {
      const json& t = root.at("amplification");
      check_keys(t, {"x_um", "b_low_g", "b_high_g", "f_target_mhz", "f_tol_mhz"},
                 "amplification", strict);
      if (!t.contains("x_um")) throw ConfigError("\"amplification.x_um\" is required");
      cfg.amplification.x_um =
          GridSpec::parse(t.at("x_um"), "amplification.x_um", strict).values;
      cfg.amplification.b_low =
          get_num(t, "b_low_g", cfg.amplification.b_low, "amplification");
      cfg.amplification.b_high =
          get_num(t, "b_high_g", cfg.amplification.b_high, "amplification");
      cfg.amplification.f_target =
          get_num(t, "f_target_mhz", cfg.amplification.f_target, "amplification");
      cfg.amplification.f_tol =
          get_num(t, "f_tol_mhz", cfg.amplification.f_tol, "amplification");
      break;
    }
    case TaskKind::kSensing: {
      const json& t = root.at("sensing");
      check_keys(t,
                 {"gamma_target_mhz_per_g", "n_targets", "f_cavity_mhz", "kappa_mhz",
                  "g_single_mhz", "b_drive_g", "pump_time_us", "tau_grid",
                  "leak_field_g_per_unit", "resonance_tol_mhz", "auto_orient",
                  "sweep_b_g"},
                 "sensing", strict);
      auto& s = cfg.sensing;
      s.config.gamma_target =
          get_num(t, "gamma_target_mhz_per_g", s.config.gamma_target, "sensing");
      s.config.n_targets = get_int(t, "n_targets", s.config.n_targets, "sensing");
      s.config.f_cavity = get_num(t, "f_cavity_mhz", s.config.f_cavity, "sensing");
      s.config.kappa = get_num(t, "kappa_mhz", s.config.kappa, "sensing");
      s.config.g_single = get_num(t, "g_single_mhz", s.config.g_single, "sensing");
      s.config.b_drive = get_num(t, "b_drive_g", s.config.b_drive, "sensing");
      s.config.pump_time = get_num(t, "pump_time_us", s.config.pump_time, "sensing");
      if (!t.contains("tau_grid")) throw ConfigError("\"sensing.tau_grid\" is required");
      s.config.tau_grid = GridSpec::parse(t.at("tau_grid"), "sensing.tau_grid",
                                          strict)
                              .values;
      s.leak_field_scale =
          get_num(t, "leak_field_g_per_unit", s.leak_field_scale, "sensing");
      s.resonance_tol = get_num(t, "resonance_tol_mhz", s.resonance_tol, "sensing");
      s.auto_orient = get_bool(t, "auto_orient", s.auto_orient, "sensing");
      if (t.contains("sweep_b_g")) {
        s.sweep_b = GridSpec::parse(t.at("sweep_b_g"), "sensing.sweep_b_g", strict);
      }
      break;
    }
  }
}

}  // namespace config_detail

inline ScenarioConfig parse_config_json(const json& root, bool strict = true) {
  using namespace config_detail;
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  check_keys(root,
             {"material", "geometry", "field", "drive", "nv", "model", "output",
              "dispersion", "transmission", "odmr_map", "rabi", "sequence",
              "amplification", "sensing"},
             "", strict);

  ScenarioConfig cfg;
  if (root.contains("material")) parse_material(root.at("material"), cfg.material, strict);
  if (root.contains("geometry")) parse_geometry(root.at("geometry"), cfg.geometry, strict);

  if (root.contains("field")) {
    const json& f = root.at("field");
    check_keys(f, {"b_gauss", "b_grid", "theta_rad"}, "field", strict);
    cfg.field.b_ext = get_num(f, "b_gauss", cfg.field.b_ext, "field");
    cfg.field.theta = get_num(f, "theta_rad", cfg.field.theta, "field");
    if (f.contains("b_grid")) {
      cfg.b_grid = GridSpec::parse(f.at("b_grid"), "field.b_grid", strict);
      if (cfg.b_grid->values.front() < 0.0) {
        throw ConfigError("\"field.b_grid\" must be >= 0");
      }
    }
  }
  if (root.contains("drive")) {
    const json& d = root.at("drive");
    check_keys(d, {"power_mw", "frequency_mhz", "f_grid", "impedance_ohm"}, "drive",
               strict);
    cfg.drive.power = get_num(d, "power_mw", cfg.drive.power, "drive");
    cfg.drive.frequency = get_num(d, "frequency_mhz", cfg.drive.frequency, "drive");
    cfg.drive.impedance = get_num(d, "impedance_ohm", cfg.drive.impedance, "drive");
    if (d.contains("f_grid")) {
      cfg.f_grid = GridSpec::parse(d.at("f_grid"), "drive.f_grid", strict);
    }
  }
  if (root.contains("nv")) parse_nv(root.at("nv"), cfg, strict);
  if (root.contains("model")) parse_model(root.at("model"), cfg, strict);
  if (root.contains("output")) {
    const json& o = root.at("output");
    check_keys(o, {"dir"}, "output", strict);
    cfg.output_dir = get_str(o, "dir", cfg.output_dir, "output");
  }
  config_detail::parse_task(root, cfg, strict);

  // surface invariant violations now, as config errors with key paths
  try {
    cfg.material.validate();
    cfg.geometry.validate();
    cfg.field.validate();
    cfg.drive.validate();
    cfg.mag_model.validate();
    cfg.odmr_model.validate();
    cfg.quench_model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline ScenarioConfig parse_config(const std::string& path, bool strict = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    // recover line/column from the byte offset
    std::ifstream again(path, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(again)),
                     std::istreambuf_iterator<char>());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("JSON parse error in " + path + " at line " +
                      std::to_string(line) + ", column " + std::to_string(col) + ": " +
                      e.what());
  }
  return parse_config_json(root, strict);
}

// Resolved-config echo for the run manifest.
inline json config_to_json(const ScenarioConfig& cfg) {
  json j;
  j["material"] = {{"gamma_m_mhz_per_g", cfg.material.gamma_m},
                   {"four_pi_ms_g", cfg.material.four_pi_ms},
                   {"thickness_um", cfg.material.thickness},
                   {"alpha_gilbert", cfg.material.alpha_gilbert},
                   {"gamma_e_mhz_per_g", cfg.material.gamma_e},
                   {"d_zfs_mhz", cfg.material.d_zfs}};
  j["geometry"] = {{"msl_width_um", cfg.geometry.msl_width},
                   {"msl_separation_um", cfg.geometry.msl_separation},
                   {"nd_x_um", cfg.geometry.nd_x},
                   {"nd_z_nm", cfg.geometry.nd_z}};
  j["field"] = {{"b_gauss", cfg.field.b_ext}, {"theta_rad", cfg.field.theta}};
  if (cfg.b_grid) j["field"]["b_grid"] = cfg.b_grid->values;
  j["drive"] = {{"power_mw", cfg.drive.power},
                {"frequency_mhz", cfg.drive.frequency},
                {"impedance_ohm", cfg.drive.impedance}};
  if (cfg.f_grid) j["drive"]["f_grid"] = cfg.f_grid->values;
  if (!cfg.explicit_orientations.empty()) {
    j["nv"] = {{"orientations_rad", cfg.explicit_orientations}};
  } else {
    j["nv"] = {{"ensemble", {{"count", cfg.ensemble_count}, {"seed", cfg.seed}}}};
  }
  j["model"] = {{"k_min_rad_per_um", cfg.mag_model.k_min},
                {"k_max_rad_per_um", cfg.mag_model.resolved_k_max(cfg.material)},
                {"k_spacing_rad_per_um", cfg.mag_model.k_spacing},
                {"rho_nr", cfg.mag_model.rho_nr},
                {"line_width_mhz", cfg.mag_model.line_width},
                {"line_cutoff_mhz", cfg.mag_model.line_cutoff},
                {"ferromagnet_enabled", cfg.mag_model.ferromagnet_enabled},
                {"msl_rolloff_per_ghz", cfg.msl_rolloff_per_ghz},
                {"odmr",
                 {{"contrast_max", cfg.odmr_model.contrast_max},
                  {"linewidth_mhz", cfg.odmr_model.linewidth},
                  {"saturation", cfg.odmr_model.saturation}}},
                {"quench",
                 {{"coefficient_per_mw", cfg.quench_model.coefficient},
                  {"bandwidth_mhz", cfg.quench_model.bandwidth}}}};
  if (cfg.kappa_sw) j["model"]["kappa_sw_g_per_sqrt_mw"] = *cfg.kappa_sw;
  j["task"] = task_name(cfg.task);
  j["output"] = {{"dir", cfg.output_dir}};
  return j;
}

}  // namespace hybridsim
