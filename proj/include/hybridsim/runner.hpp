// Scenario execution: dispatches the config's task block to the simulation
// modules, writes the task's CSV datasets plus a JSON run manifest with
// content digests, and reports errors in a structured way.
#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridsim/coupling.hpp"
#include "hybridsim/csv.hpp"
#include "hybridsim/digest.hpp"
#include "hybridsim/dynamics.hpp"
#include "hybridsim/magnonics.hpp"
#include "hybridsim/odmr.hpp"
#include "hybridsim/params.hpp"
#include "hybridsim/scenario.hpp"
#include "hybridsim/sensing.hpp"

#ifndef HYBRIDSIM_VERSION
#define HYBRIDSIM_VERSION "dev"
#endif

namespace hybridsim {

struct RunOptions {
  std::optional<std::string> out_dir;       // overrides config output.dir
  std::optional<std::uint64_t> seed;        // overrides nv.ensemble.seed
  int threads = 0;                          // 0 -> HYBRIDSIM_THREADS or hardware
};

struct ManifestEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::string digest;
};

struct RunManifest {
  std::string version = HYBRIDSIM_VERSION;
  std::string task;
  std::uint64_t seed = 0;
  json config;
  std::vector<ManifestEntry> files;
  double timing_ms = 0.0;
  std::string status = "ok";
  std::string error;

  json to_json() const {
    json j;
    j["version"] = version;
    j["task"] = task;
    j["seed"] = seed;
    j["config"] = config;
    j["files"] = json::array();
    for (const auto& f : files) {
      j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"digest", f.digest}});
    }
    j["timing_ms"] = timing_ms;
    j["status"] = status;
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace runner_detail {

namespace fs = std::filesystem;

struct TaskIo {
  fs::path dir;
  std::vector<std::string> files;

  std::string path(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }

  void write_json(const std::string& name, const json& j) {
    const std::string p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + p);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + p);
  }
};

// kappa_sw as configured, auto-calibrated at the theta = 0 anchor, or 0
// when the ferromagnet is disabled (no spin-wave channel at all).
inline double resolve_kappa_sw(const ScenarioConfig& cfg) {
  if (cfg.kappa_sw) return *cfg.kappa_sw;
  if (!cfg.mag_model.ferromagnet_enabled) return 0.0;
  FieldConfig anchor;
  anchor.b_ext = cfg.calibration.b_high;
  anchor.theta = 0.0;
  return calibrate_kappa_sw(cfg.material, cfg.geometry, anchor, cfg.mag_model,
                            cfg.calibration);
}

struct NdDrive {
  double b_antenna = 0.0;
  double b_sw = 0.0;
  double b_total = 0.0;  // channel-selected, MSL response applied
};

inline NdDrive drive_at_nd(const ScenarioConfig& cfg, const FieldConfig& field,
                           const DriveConfig& drive, double kappa_sw,
                           RabiChannel channel) {
  NdDrive out;
  out.b_antenna = drive.power > 0.0 ? antenna_field(drive, cfg.geometry) : 0.0;
  if (kappa_sw > 0.0) {
    out.b_sw =
        sw_drive_field(drive, cfg.geometry, field, cfg.material, cfg.mag_model, kappa_sw)
            .amplitude;
  }
  double b = 0.0;
  switch (channel) {
    case RabiChannel::kAuto: b = out.b_antenna + out.b_sw; break;
    case RabiChannel::kAntenna: b = out.b_antenna; break;
    case RabiChannel::kSpinWave: b = out.b_sw; break;
  }
  out.b_total = b * msl_response(drive.frequency, cfg.msl_rolloff_per_ghz);
  return out;
}

// NV polar angle whose lower transition sits at f_mhz in the given field
// (monotone in theta on [0, pi/2]).
inline double orient_for_frequency(double f_mhz, double b_gauss,
                                   const MaterialParams& params) {
  auto f_lower = [&](double theta) {
    return transition_frequencies(NVConfig::from(params, theta, b_gauss)).first;
  };
  double lo = 0.0, hi = kPi / 2.0;
  const double f_lo = f_lower(lo), f_hi = f_lower(hi);
  if (f_mhz < std::min(f_lo, f_hi) - 1e-9 || f_mhz > std::max(f_lo, f_hi) + 1e-9) {
    throw std::invalid_argument(
        "no NV orientation places the lower transition at " + std::to_string(f_mhz) +
        " MHz at " + std::to_string(b_gauss) + " G");
  }
  const bool increasing = f_hi > f_lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((f_lower(mid) < f_mhz) == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g.push_back(lo + (hi - lo) * i / (n - 1));
  return g;
}

inline void run_dispersion(const ScenarioConfig& cfg, TaskIo& io) {
  const ModeKind kind = mode_kind_for_theta(cfg.field.theta);
  const double k_max = cfg.mag_model.resolved_k_max(cfg.material);
  const double k_lo = std::max(cfg.mag_model.k_min, k_max * 1e-4);
  const auto k_grid = linear_grid(k_lo, k_max, cfg.dispersion_points);

  std::vector<std::vector<double>> rows;
  rows.reserve(k_grid.size());
  for (double k : k_grid) {
    const double f = dispersion_frequency(kind, k, cfg.field, cfg.material);
    const double vg =
        group_velocity(kind, k, cfg.field, cfg.material, cfg.mag_model.vg_rel_step);
    const double L =
        decay_length(kind, k, cfg.field, cfg.material, cfg.mag_model.vg_rel_step);
    const double eta = excitation_efficiency(k, cfg.geometry, cfg.field,
                                             cfg.mag_model.rho_nr);
    rows.push_back({k, f, vg, L, eta});
  }
  const std::string file =
      kind == ModeKind::kDesw ? "disp_desw.csv" : "disp_bvmsw.csv";
  emit_csv(io.path(file),
           {"k_rad_per_um", "frequency_mhz", "group_velocity_m_per_s",
            "decay_length_um", "efficiency"},
           rows);

  const auto edges = band_edges(cfg.field, cfg.material, k_max, cfg.mag_model.k_min);
  json summary;
  summary["family"] = kind == ModeKind::kDesw ? "desw" : "bvmsw";
  summary["band_f_min_mhz"] = edges.first;
  summary["band_f_max_mhz"] = edges.second;
  summary["kittel_mhz"] = dispersion_frequency(kind, 0.0, cfg.field, cfg.material);
  io.write_json("summary.json", summary);
}

inline void run_transmission(const ScenarioConfig& cfg, TaskIo& io, int threads) {
  const auto& b_grid = cfg.b_grid->values;
  const auto& f_grid = cfg.f_grid->values;
  const auto map = transmission_map(b_grid, f_grid, cfg.geometry, cfg.material,
                                    cfg.field, cfg.mag_model, threads);

  std::vector<std::string> headers{"b_gauss"};
  for (double f : f_grid) headers.push_back(format_double(f));
  std::vector<std::vector<double>> rows(b_grid.size());
  for (std::size_t bi = 0; bi < b_grid.size(); ++bi) {
    rows[bi].reserve(f_grid.size() + 1);
    rows[bi].push_back(b_grid[bi]);
    for (std::size_t fi = 0; fi < f_grid.size(); ++fi) rows[bi].push_back(map.at(bi, fi));
  }
  emit_csv(io.path("transmission.csv"), headers, rows);

  // Band edges over the ladder's own k range, per field row.
  const double k_max = cfg.mag_model.resolved_k_max(cfg.material);
  const int n_modes = static_cast<int>(std::floor(k_max / cfg.mag_model.k_spacing + 1e-9));
  json edges = json::array();
  for (double b : b_grid) {
    FieldConfig field = cfg.field;
    field.b_ext = b;
    if (b == 0.0 || n_modes < 1) {
      edges.push_back({{"b_gauss", b}, {"f_min_mhz", 0.0}, {"f_max_mhz", 0.0}});
      continue;
    }
    const auto e = band_edges(field, cfg.material, n_modes * cfg.mag_model.k_spacing,
                              cfg.mag_model.k_spacing);
    edges.push_back({{"b_gauss", b}, {"f_min_mhz", e.first}, {"f_max_mhz", e.second}});
  }
  json summary;
  summary["band_edges"] = std::move(edges);
  summary["line_cutoff_mhz"] = cfg.mag_model.line_cutoff;
  summary["line_width_mhz"] = cfg.mag_model.line_width;
  io.write_json("summary.json", summary);
}

inline void run_odmr_map(const ScenarioConfig& cfg, TaskIo& io, int threads,
                         std::optional<std::uint64_t> seed_override) {
  const auto thetas = cfg.ensemble(seed_override);
  const double kappa_sw = resolve_kappa_sw(cfg);
  const auto& b_grid = cfg.b_grid->values;
  const auto& f_grid = cfg.f_grid->values;
  const auto map =
      odmr_map(b_grid, f_grid, thetas, cfg.field, cfg.drive, cfg.material, cfg.geometry,
               cfg.mag_model, cfg.odmr_model, cfg.quench_model, kappa_sw,
               cfg.msl_rolloff_per_ghz, threads);

  std::vector<std::string> headers{"b_gauss"};
  for (double f : f_grid) headers.push_back(format_double(f));
  std::vector<std::vector<double>> rows(b_grid.size());
  double peak = 0.0, integrated = 0.0;
  std::optional<double> onset;
  for (std::size_t bi = 0; bi < b_grid.size(); ++bi) {
    rows[bi].reserve(f_grid.size() + 1);
    rows[bi].push_back(b_grid[bi]);
    double row_max = 0.0;
    for (std::size_t fi = 0; fi < f_grid.size(); ++fi) {
      const double c = map.at(bi, fi);
      rows[bi].push_back(c);
      row_max = std::max(row_max, c);
      integrated += c;
    }
    peak = std::max(peak, row_max);
    if (!onset && row_max >= cfg.visibility.contrast) onset = b_grid[bi];
  }
  emit_csv(io.path("odmr.csv"), headers, rows);

  json summary;
  summary["peak_contrast"] = peak;
  summary["integrated_contrast"] = integrated;
  summary["visibility_contrast"] = cfg.visibility.contrast;
  summary["power_mw"] = cfg.drive.power;
  summary["theta_rad"] = cfg.field.theta;
  if (onset) {
    summary["onset_b_gauss"] = *onset;
  } else {
    summary["onset_b_gauss"] = nullptr;
  }
  io.write_json("summary.json", summary);
}

inline void run_rabi(const ScenarioConfig& cfg, TaskIo& io) {
  const auto t_grid = linear_grid(0.0, cfg.rabi.t_max, cfg.rabi.points);
  DecoherenceParams dec;
  dec.rabi_decay_time = cfg.rabi.rabi_decay_time;

  const bool needs_sw = cfg.rabi.channel != RabiChannel::kAntenna;
  const double kappa_sw = needs_sw ? resolve_kappa_sw(cfg) : 0.0;

  auto emit_trace = [&](const std::string& name, double omega) {
    const auto trace = rabi_trace(omega, cfg.rabi.detuning, t_grid, dec);
    std::vector<std::vector<double>> rows(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      rows[i] = {t_grid[i], trace[i]};
    }
    emit_csv(io.path(name), {"time_us", "signal"}, rows);
  };

  json summary;
  switch (cfg.rabi.mode) {
    case RabiMode::kSingle: {
      const NdDrive nd =
          drive_at_nd(cfg, cfg.field, cfg.drive, kappa_sw, cfg.rabi.channel);
      const double omega = rabi_frequency(nd.b_total, cfg.material);
      emit_trace("rabi.csv", omega);
      summary["omega_mhz"] = omega;
      summary["b_antenna_g"] = nd.b_antenna;
      summary["b_sw_g"] = nd.b_sw;
      summary["visible"] = omega >= cfg.visibility.rabi_mhz;
      break;
    }
    case RabiMode::kMatchedPair: {
      const MatchedOrientation match = find_matching_orientation(
          cfg.rabi.f_seed, cfg.rabi.b_low, cfg.rabi.b_high, cfg.material);
      DriveConfig drive = cfg.drive;
      drive.frequency = match.f_common;
      FieldConfig low = cfg.field;
      low.b_ext = cfg.rabi.b_low;
      FieldConfig high = cfg.field;
      high.b_ext = cfg.rabi.b_high;
      const NdDrive nd_low = drive_at_nd(cfg, low, drive, kappa_sw, cfg.rabi.channel);
      const NdDrive nd_high = drive_at_nd(cfg, high, drive, kappa_sw, cfg.rabi.channel);
      const double omega_low = rabi_frequency(nd_low.b_total, cfg.material);
      const double omega_high = rabi_frequency(nd_high.b_total, cfg.material);
      emit_trace("rabi_low_field.csv", omega_low);
      emit_trace("rabi_high_field.csv", omega_high);
      summary["theta_nv_deg"] = rad_to_deg(match.theta_nv);
      summary["f_common_mhz"] = match.f_common;
      summary["omega_low_mhz"] = omega_low;
      summary["omega_high_mhz"] = omega_high;
      summary["b_sw_high_g"] = nd_high.b_sw;
      summary["b_antenna_g"] = nd_low.b_antenna;
      summary["omega_visibility_mhz"] = cfg.visibility.rabi_mhz;
      summary["low_visible"] = omega_low >= cfg.visibility.rabi_mhz;
      summary["high_visible"] = omega_high >= cfg.visibility.rabi_mhz;
      break;
    }
    case RabiMode::kPowerSweep: {
      auto omega_of_power = [&](double p_mw) {
        DriveConfig d = cfg.drive;
        d.power = p_mw;
        const NdDrive nd = drive_at_nd(cfg, cfg.field, d, kappa_sw, cfg.rabi.channel);
        return rabi_frequency(nd.b_total, cfg.material);
      };
      const PowerScaling scaling =
          power_scaling_check(cfg.rabi.powers_mw, omega_of_power);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < scaling.sqrt_powers.size(); ++i) {
        const double p = scaling.sqrt_powers[i] * scaling.sqrt_powers[i];
        rows.push_back({p, scaling.sqrt_powers[i], scaling.omegas[i]});
      }
      emit_csv(io.path("power_scaling.csv"),
               {"power_mw", "sqrt_power_sqrt_mw", "omega_mhz"}, rows);
      summary["slope_mhz_per_sqrt_mw"] = scaling.slope;
      summary["intercept_mhz"] = scaling.intercept;
      summary["r_squared"] = scaling.r_squared;
      summary["max_omega_mhz"] =
          *std::max_element(scaling.omegas.begin(), scaling.omegas.end());
      break;
    }
  }
  io.write_json("summary.json", summary);
}

inline void run_sequence(const ScenarioConfig& cfg, TaskIo& io) {
  const double kappa_sw = resolve_kappa_sw(cfg);
  const NdDrive nd = drive_at_nd(cfg, cfg.field, cfg.drive, kappa_sw, RabiChannel::kAuto);
  const double omega = rabi_frequency(nd.b_total, cfg.material);
  if (omega <= 0.0) {
    throw std::runtime_error("sequence: configured drive produces zero Rabi frequency");
  }

  json fits;
  fits["pulse_omega_mhz"] = omega;
  for (const SequenceRun& run : cfg.sequence.runs) {
    DecoherenceParams dec;
    dec.t2 = run.t2;
    dec.stretch_exponent = run.alpha;

    const auto& t_grid = cfg.sequence.t_grid.values;
    std::vector<double> amplitude;
    amplitude.reserve(t_grid.size());
    for (double t : t_grid) {
      const PulseSequence seq = run.kind == "hahn"
                                    ? make_hahn(t, omega)
                                    : make_cpmg(run.n_pulses, t, omega);
      amplitude.push_back(echo_amplitude(seq, 0.0, dec));
    }
    std::vector<std::vector<double>> rows(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      rows[i] = {t_grid[i], amplitude[i]};
    }
    emit_csv(io.path(run.name + ".csv"), {"total_time_us", "amplitude"}, rows);

    if (cfg.sequence.fit) {
      const EnvelopeFit fit = fit_envelope(t_grid, amplitude);
      fits[run.name] = {{"t2_us", fit.t2},
                        {"alpha", fit.alpha},
                        {"rms_residual", fit.rms_residual},
                        {"generator_t2_us", run.t2},
                        {"generator_alpha", run.alpha}};
    }
  }
  io.write_json("fits.json", fits);
}

inline void run_amplification(const ScenarioConfig& cfg, TaskIo& io) {
  const double kappa_sw = resolve_kappa_sw(cfg);
  const auto& task = cfg.amplification;

  std::vector<std::vector<double>> rows;
  json summary;
  for (double x : task.x_um) {
    const AmplificationResult r =
        amplification(x, task.b_low, task.b_high, task.f_target, cfg.material,
                      cfg.geometry, cfg.field, cfg.mag_model, kappa_sw, task.f_tol);
    rows.push_back({x, r.ratio});
    if (rows.size() == 1) {
      summary["f_common_mhz"] = r.f_common;
      summary["theta_nv_deg"] = rad_to_deg(r.theta_nv);
      summary["mode_k_rad_per_um"] = r.mode.k;
      summary["mode_decay_length_um"] = r.mode.decay_length;
    }
  }
  emit_csv(io.path("amplification.csv"), {"x_um", "amplification"}, rows);
  summary["kappa_sw_g_per_sqrt_mw"] = kappa_sw;
  io.write_json("summary.json", summary);
}

inline void run_sensing(const ScenarioConfig& cfg, TaskIo& io) {
  const auto& task = cfg.sensing;
  SensingContext ctx;
  ctx.params = cfg.material;
  ctx.geometry = cfg.geometry;
  ctx.field = cfg.field;
  ctx.mag_model = cfg.mag_model;
  ctx.leak_field_scale = task.leak_field_scale;
  ctx.resonance_tol = task.resonance_tol;

  double theta_nv;
  if (task.auto_orient) {
    theta_nv = orient_for_frequency(task.config.f_cavity, cfg.field.b_ext, cfg.material);
  } else if (!cfg.explicit_orientations.empty()) {
    theta_nv = cfg.explicit_orientations.front();
  } else {
    throw std::runtime_error(
        "sensing: provide nv.orientations or set sensing.auto_orient");
  }
  const NVConfig nv = NVConfig::from(cfg.material, theta_nv, cfg.field.b_ext);

  const SensingTrace trace =
      run_protocol(task.config, nv, DecoherenceParams::none(), ctx);
  std::vector<std::vector<double>> rows(trace.tau_grid.size());
  for (std::size_t i = 0; i < trace.tau_grid.size(); ++i) {
    rows[i] = {trace.tau_grid[i], trace.nv_population[i]};
  }
  emit_csv(io.path("sensing_trace.csv"), {"tau_us", "population"}, rows);

  json summary;
  summary["theta_nv_deg"] = rad_to_deg(theta_nv);
  summary["target_rabi_mhz"] = target_rabi(task.config);
  summary["cavity_amplitude"] = cavity_amplitude(task.config);
  summary["nv_rabi_mhz"] = trace.nv_rabi;
  summary["inferred_rabi_mhz"] = trace.inferred_rabi;
  summary["n_targets"] = task.config.n_targets;
  summary["n_estimate"] = estimate_concentration(trace, task.config, ctx);
  summary["b_match_g"] = 2.0 * task.config.f_cavity / task.config.gamma_target;

  if (task.sweep_b) {
    const auto& b_grid = task.sweep_b->values;
    const auto response = sweep_drive_field(task.config, b_grid, ctx);
    std::vector<std::vector<double>> sweep_rows(b_grid.size());
    double best_b = b_grid.front(), best_r = -1.0;
    for (std::size_t i = 0; i < b_grid.size(); ++i) {
      sweep_rows[i] = {b_grid[i], response[i]};
      if (response[i] > best_r) {
        best_r = response[i];
        best_b = b_grid[i];
      }
    }
    emit_csv(io.path("sensing_sweep.csv"), {"b_drive_g", "nv_rabi_mhz"}, sweep_rows);
    summary["sweep_peak_b_g"] = best_b;
    summary["sweep_step_g"] = b_grid.size() > 1 ? b_grid[1] - b_grid[0] : 0.0;
  }
  io.write_json("sensing_summary.json", summary);
}

}  // namespace runner_detail

inline RunManifest run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();

  RunManifest manifest;
  manifest.task = task_name(cfg.task);
  manifest.seed = opts.seed.value_or(cfg.seed);
  manifest.config = config_to_json(cfg);
  manifest.config["nv_seed_effective"] = manifest.seed;

  runner_detail::TaskIo io;
  io.dir = fs::path(opts.out_dir.value_or(cfg.output_dir));
  fs::create_directories(io.dir);

  try {
    switch (cfg.task) {
      case TaskKind::kDispersion: runner_detail::run_dispersion(cfg, io); break;
      case TaskKind::kTransmission:
        runner_detail::run_transmission(cfg, io, opts.threads);
        break;
      case TaskKind::kOdmrMap:
        runner_detail::run_odmr_map(cfg, io, opts.threads, opts.seed);
        break;
      case TaskKind::kRabi: runner_detail::run_rabi(cfg, io); break;
      case TaskKind::kSequence: runner_detail::run_sequence(cfg, io); break;
      case TaskKind::kAmplification: runner_detail::run_amplification(cfg, io); break;
      case TaskKind::kSensing: runner_detail::run_sensing(cfg, io); break;
    }
  } catch (const std::exception& e) {
    manifest.status = "error";
    manifest.error = e.what();
  }

  for (const std::string& name : io.files) {
    const fs::path p = io.dir / name;
    if (!fs::exists(p)) continue;
    const FileDigest d = digest_file(p.string());
    manifest.files.push_back({name, d.bytes, d.hex()});
  }
  std::sort(manifest.files.begin(), manifest.files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.name < b.name; });

  manifest.timing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  std::ofstream out(io.dir / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest.json");
  out << manifest.to_json().dump(2) << '\n';
  return manifest;
}

}  // namespace hybridsim
