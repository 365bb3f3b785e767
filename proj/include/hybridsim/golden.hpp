// Curated scenario regressions: each case runs one scenario config through
// the CLI binary and checks structural, tolerance-based predicates on the
// emitted datasets (never pixel comparisons). Some predicates compare two
// cases' outputs (for example the reversed-field power requirement).
#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridsim/coupling.hpp"
#include "hybridsim/csv.hpp"
#include "hybridsim/nv_spin.hpp"
#include "hybridsim/scenario.hpp"

namespace hybridsim {

struct GoldenCase {
  std::string name;
  std::string config_file;  // relative to the scenarios directory
  std::string subcommand;
  std::string anchor;  // what physical statement the case pins down
};

inline std::vector<GoldenCase> golden_cases() {
  return {
      {"dispersion_band", "dispersion_145g.json", "dispersion",
       "surface-mode band at 145 G spans [1479.3, 2898.0] MHz within 1 MHz"},
      {"transmission_support", "transmission_map.json", "transmission",
       "field-referenced transmission support tracks the band edges per field"},
      {"odmr_surface_40uw", "odmr_surface_40uw.json", "odmr-map",
       "at 40 uW the only visible contrast is spin-wave driven, onset in [45, 90] G"},
      {"odmr_surface_4mw", "odmr_surface_4mw.json", "odmr-map",
       "at 4 mW a broad off-resonant quench feature appears inside the band"},
      {"odmr_reversed_field", "odmr_reversed_field.json", "odmr-map",
       "reversing the field requires >= 100x the power for equal peak contrast"},
      {"odmr_volume_modes", "odmr_volume_modes.json", "odmr-map",
       "volume modes at equal power give smaller integrated contrast than surface"},
      {"matched_transition_rabi", "matched_rabi.json", "rabi",
       "matched orientation near 78 deg drives at ~2862 MHz; spin-wave channel "
       "oscillates at 1 uW where the antenna channel cannot"},
      {"amplification_distance", "amplification_distance.json", "amplification",
       "amplification 100 at 20 um by calibration, 80/20 ratio in [3.0, 4.5]"},
      {"rabi_power_scaling", "power_scaling.json", "rabi",
       "Rabi frequency linear in sqrt(P) with R^2 > 0.999 and ~zero intercept"},
      {"echo_envelopes", "echo_envelopes.json", "sequence",
       "envelope fits recover (1.54 us, alpha 1) and (2.78 us, alpha 2) to 0.5%"},
      {"sensing_protocol", "sensing_protocol.json", "sensing",
       "response peaks at the Rabi-matching drive field; concentration round-trips "
       "within 2%"},
  };
}

struct GoldenCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct GoldenCaseResult {
  std::string name;
  bool ran = false;
  int exit_code = -1;
  std::vector<GoldenCheck> checks;

  bool pass() const {
    if (!ran) return false;
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

struct GoldenReport {
  std::vector<GoldenCaseResult> results;

  bool all_pass() const {
    for (const auto& r : results) {
      if (!r.pass()) return false;
    }
    return !results.empty();
  }

  json to_json() const {
    json j = json::array();
    for (const auto& r : results) {
      json checks = json::array();
      for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
      }
      j.push_back({{"case", r.name},
                   {"ran", r.ran},
                   {"exit_code", r.exit_code},
                   {"pass", r.pass()},
                   {"checks", checks}});
    }
    return j;
  }
};

namespace golden_detail {

namespace fs = std::filesystem;

inline json load_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("golden: cannot open " + p.string());
  return json::parse(in);
}

inline void check(GoldenCaseResult& r, const std::string& name, bool pass,
                  const std::string& detail) {
  r.checks.push_back({name, pass, detail});
}

inline std::string fmt(double v) { return format_double(v); }

// Map CSV layout: header "b_gauss", f values; rows lead with b.
struct MapData {
  std::vector<double> b, f;
  std::vector<std::vector<double>> cells;  // [b][f]

  static MapData load(const fs::path& p) {
    const CsvTable t = read_csv(p.string());
    MapData m;
    for (std::size_t i = 1; i < t.headers.size(); ++i) {
      m.f.push_back(std::stod(t.headers[i]));
    }
    for (const auto& row : t.rows) {
      m.b.push_back(row[0]);
      m.cells.emplace_back(row.begin() + 1, row.end());
    }
    return m;
  }

  double row_max(std::size_t bi) const {
    double v = 0.0;
    for (double c : cells[bi]) v = std::max(v, c);
    return v;
  }

  double total() const {
    double v = 0.0;
    for (const auto& row : cells) {
      for (double c : row) v += c;
    }
    return v;
  }
};

}  // namespace golden_detail

// Executes every golden case through the CLI and evaluates its predicates.
inline GoldenReport run_golden_suite(const std::string& cli_binary,
                                     const std::string& scenarios_dir,
                                     const std::string& out_root, int threads = 1) {
  namespace fs = std::filesystem;
  using namespace golden_detail;

  GoldenReport report;
  fs::create_directories(out_root);

  for (const GoldenCase& c : golden_cases()) {
    GoldenCaseResult r;
    r.name = c.name;
    const fs::path out_dir = fs::path(out_root) / c.name;
    const std::string cmd = "\"" + cli_binary + "\" " + c.subcommand + " --config \"" +
                            (fs::path(scenarios_dir) / c.config_file).string() +
                            "\" --out \"" + out_dir.string() + "\" --threads " +
                            std::to_string(threads) + " > /dev/null";
    r.exit_code = std::system(cmd.c_str());
    r.ran = r.exit_code == 0;
    report.results.push_back(r);
  }

  auto result_of = [&](const std::string& name) -> GoldenCaseResult& {
    for (auto& r : report.results) {
      if (r.name == name) return r;
    }
    throw std::logic_error("golden: unknown case " + name);
  };
  auto out_of = [&](const std::string& name) {
    return fs::path(out_root) / name;
  };

  // dispersion_band
  {
    GoldenCaseResult& r = result_of("dispersion_band");
    if (r.ran) {
      const json s = load_json(out_of(r.name) / "summary.json");
      const double f_min = s.at("band_f_min_mhz").get<double>();
      const double f_max = s.at("band_f_max_mhz").get<double>();
      check(r, "band_f_min", std::abs(f_min - 1479.3039) <= 1.0,
            "f_min = " + fmt(f_min) + " MHz vs 1479.3 +- 1");
      check(r, "band_f_max", std::abs(f_max - 2898.0) <= 1.0,
            "f_max = " + fmt(f_max) + " MHz vs 2898.0 +- 1");
      const CsvTable t = read_csv((out_of(r.name) / "disp_desw.csv").string());
      const std::size_t fc = t.column("frequency_mhz");
      bool monotone = true;
      for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (t.rows[i][fc] <= t.rows[i - 1][fc]) monotone = false;
      }
      check(r, "frequency_monotone", monotone, "surface branch increases with k");
    }
  }

  // transmission_support
  {
    GoldenCaseResult& r = result_of("transmission_support");
    if (r.ran) {
      const MapData m = MapData::load(out_of(r.name) / "transmission.csv");
      const json s = load_json(out_of(r.name) / "summary.json");
      const double cell = m.f[1] - m.f[0];

      bool zero_row_ok = false;
      for (std::size_t bi = 0; bi < m.b.size(); ++bi) {
        if (m.b[bi] == 0.0) {
          zero_row_ok = true;
          for (double v : m.cells[bi]) {
            if (v != 0.0) zero_row_ok = false;
          }
        }
      }
      check(r, "zero_field_row", zero_row_ok, "reference-subtracted row is exactly 0");

      for (double b_test : {50.0, 100.0, 150.0, 200.0, 250.0}) {
        std::size_t bi = 0;
        for (std::size_t i = 0; i < m.b.size(); ++i) {
          if (std::abs(m.b[i] - b_test) < 1e-9) bi = i;
        }
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t fi = 0; fi < m.f.size(); ++fi) {
          if (m.cells[bi][fi] > 0.0) {
            if (!any) lo = m.f[fi];
            hi = m.f[fi];
            any = true;
          }
        }
        double f_min = 0.0, f_max = 0.0;
        for (const auto& e : s.at("band_edges")) {
          if (std::abs(e.at("b_gauss").get<double>() - b_test) < 1e-9) {
            f_min = e.at("f_min_mhz").get<double>();
            f_max = e.at("f_max_mhz").get<double>();
          }
        }
        const bool ok = any && std::abs(lo - f_min) <= cell && std::abs(hi - f_max) <= cell;
        check(r, "support_" + std::to_string(static_cast<int>(b_test)) + "g", ok,
              "support [" + fmt(lo) + ", " + fmt(hi) + "] vs band [" + fmt(f_min) +
                  ", " + fmt(f_max) + "] within one cell (" + fmt(cell) + " MHz)");
      }
    }
  }

  // odmr cases need the two surface-power maps and their summaries
  {
    GoldenCaseResult& r40 = result_of("odmr_surface_40uw");
    GoldenCaseResult& r4 = result_of("odmr_surface_4mw");
    if (r40.ran) {
      const json s = load_json(out_of(r40.name) / "summary.json");
      const MapData m = MapData::load(out_of(r40.name) / "odmr.csv");
      const double vis = s.at("visibility_contrast").get<double>();
      const bool has_onset = !s.at("onset_b_gauss").is_null();
      const double onset = has_onset ? s.at("onset_b_gauss").get<double>() : -1.0;
      check(r40, "onset_in_window", has_onset && onset >= 45.0 && onset <= 90.0,
            "onset = " + fmt(onset) + " G vs [45, 90]");
      bool quiet_below = true;
      bool active_near_145 = false;
      for (std::size_t bi = 0; bi < m.b.size(); ++bi) {
        if (m.b[bi] < 45.0 && m.row_max(bi) >= vis) quiet_below = false;
        if (std::abs(m.b[bi] - 145.0) <= 5.0 && m.row_max(bi) >= vis) {
          active_near_145 = true;
        }
      }
      check(r40, "no_contrast_below_45g", quiet_below,
            "every row below 45 G stays under the visibility threshold");
      check(r40, "contrast_at_145g", active_near_145,
            "rows near 145 G show spin-wave-driven contrast");
    }
    if (r40.ran && r4.ran) {
      // quench pedestal: in-band cell far from every NV transition,
      // visible at 4 mW, invisible at 40 uW
      const ScenarioConfig cfg = parse_config(
          (fs::path(scenarios_dir) / "odmr_surface_4mw.json").string());
      const auto thetas = cfg.ensemble();
      const MapData m4 = MapData::load(out_of(r4.name) / "odmr.csv");
      const MapData m40 = MapData::load(out_of(r40.name) / "odmr.csv");
      double best4 = 0.0, at40 = 1.0, best_b = 0.0, best_f = 0.0;
      for (std::size_t bi = 0; bi < m4.b.size(); ++bi) {
        const double b = m4.b[bi];
        if (b < 100.0) continue;
        FieldConfig field = cfg.field;
        field.b_ext = b;
        const auto edges = band_edges(field, cfg.material,
                                      cfg.mag_model.resolved_k_max(cfg.material),
                                      cfg.mag_model.k_spacing);
        std::vector<double> trans;
        for (double th : thetas) {
          const auto tr = transition_frequencies(NVConfig::from(cfg.material, th, b));
          trans.push_back(tr.first);
          trans.push_back(tr.second);
        }
        for (std::size_t fi = 0; fi < m4.f.size(); ++fi) {
          const double f = m4.f[fi];
          if (f < edges.first + 20.0 || f > edges.second - 20.0) continue;
          double nearest = 1e9;
          for (double tf : trans) nearest = std::min(nearest, std::abs(tf - f));
          if (nearest < 60.0) continue;
          if (m4.cells[bi][fi] > best4) {
            best4 = m4.cells[bi][fi];
            at40 = m40.cells[bi][fi];
            best_b = b;
            best_f = f;
          }
        }
      }
      check(r4, "pedestal_visible_4mw", best4 >= 0.01,
            "off-resonant in-band contrast " + fmt(best4) + " at (" + fmt(best_b) +
                " G, " + fmt(best_f) + " MHz)");
      check(r4, "pedestal_gone_40uw", best4 >= 0.01 && at40 < 0.005,
            "same cell at 40 uW reads " + fmt(at40));
    }

    GoldenCaseResult& rpi = result_of("odmr_reversed_field");
    if (rpi.ran && r40.ran) {
      const json spi = load_json(out_of(rpi.name) / "summary.json");
      const json s40 = load_json(out_of(r40.name) / "summary.json");
      const double peak_pi = spi.at("peak_contrast").get<double>();
      const double peak_0 = s40.at("peak_contrast").get<double>();
      const double p_ratio = spi.at("power_mw").get<double>() /
                             s40.at("power_mw").get<double>();
      check(rpi, "reversed_needs_100x",
            p_ratio >= 100.0 && peak_pi < peak_0,
            "peak " + fmt(peak_pi) + " at " + fmt(p_ratio) +
                "x the power still below the theta = 0 peak " + fmt(peak_0));
    }

    GoldenCaseResult& rv = result_of("odmr_volume_modes");
    if (rv.ran && r4.ran) {
      const json sv = load_json(out_of(rv.name) / "summary.json");
      const json s4 = load_json(out_of(r4.name) / "summary.json");
      const double iv = sv.at("integrated_contrast").get<double>();
      const double i0 = s4.at("integrated_contrast").get<double>();
      check(rv, "volume_weaker_than_surface", iv < i0,
            "integrated contrast " + fmt(iv) + " < " + fmt(i0) + " at equal power");
    }
  }

  // matched_transition_rabi
  {
    GoldenCaseResult& r = result_of("matched_transition_rabi");
    if (r.ran) {
      const json s = load_json(out_of(r.name) / "summary.json");
      const double theta = s.at("theta_nv_deg").get<double>();
      const double f_common = s.at("f_common_mhz").get<double>();
      check(r, "matched_theta", theta > 75.0 && theta < 90.0,
            "theta_nv = " + fmt(theta) + " deg vs (75, 90)");
      check(r, "common_frequency", std::abs(f_common - 2862.0) <= 5.0,
            "f_common = " + fmt(f_common) + " MHz vs 2862 +- 5");
      check(r, "sw_channel_visible", s.at("high_visible").get<bool>(),
            "omega_high = " + fmt(s.at("omega_high_mhz").get<double>()) + " MHz");
      check(r, "antenna_channel_invisible", !s.at("low_visible").get<bool>(),
            "omega_low = " + fmt(s.at("omega_low_mhz").get<double>()) + " MHz");
      const CsvTable hi = read_csv((out_of(r.name) / "rabi_high_field.csv").string());
      const CsvTable lo = read_csv((out_of(r.name) / "rabi_low_field.csv").string());
      double hi_min = 1.0, lo_min = 1.0;
      for (const auto& row : hi.rows) hi_min = std::min(hi_min, row[1]);
      for (const auto& row : lo.rows) lo_min = std::min(lo_min, row[1]);
      check(r, "sw_trace_oscillates", hi_min < 0.5,
            "spin-wave trace minimum " + fmt(hi_min));
      check(r, "antenna_trace_flat", lo_min > 0.9,
            "antenna trace minimum " + fmt(lo_min));
    }
  }

  // amplification_distance
  {
    GoldenCaseResult& r = result_of("amplification_distance");
    if (r.ran) {
      const CsvTable t = read_csv((out_of(r.name) / "amplification.csv").string());
      const json s = load_json(out_of(r.name) / "summary.json");
      auto amp_at = [&](double x) {
        for (const auto& row : t.rows) {
          if (std::abs(row[0] - x) < 1e-9) return row[1];
        }
        throw std::runtime_error("golden: amplification row missing");
      };
      const double a20 = amp_at(20.0), a80 = amp_at(80.0), a235 = amp_at(235.0);
      check(r, "calibrated_at_20um", std::abs(a20 - 100.0) <= 1e-6 * 100.0,
            "amplification(20 um) = " + fmt(a20));
      check(r, "ratio_80_over_20", a80 / a20 >= 3.0 && a80 / a20 <= 4.5,
            "ratio = " + fmt(a80 / a20) + " vs [3.0, 4.5]");

      const ScenarioConfig cfg = parse_config(
          (fs::path(scenarios_dir) / "amplification_distance.json").string());
      const double L = s.at("mode_decay_length_um").get<double>();
      const double wire20 = strip_field(1.0, cfg.geometry.msl_width, 20.0,
                                        cfg.geometry.nd_z_um());
      const double wire235 = strip_field(1.0, cfg.geometry.msl_width, 235.0,
                                         cfg.geometry.nd_z_um());
      const double predicted = a20 * (wire20 / wire235) * std::exp(-(235.0 - 20.0) / L);
      check(r, "extrapolation_235um", std::abs(a235 - predicted) <= 0.10 * predicted,
            "amplification(235 um) = " + fmt(a235) + " vs extrapolated " +
                fmt(predicted) + " +- 10%");
      bool increasing = true;
      for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (t.rows[i][0] <= 80.0 && t.rows[i][1] <= t.rows[i - 1][1]) increasing = false;
      }
      check(r, "increasing_20_to_80", increasing, "amplification grows with distance");
    }
  }

  // rabi_power_scaling
  {
    GoldenCaseResult& r = result_of("rabi_power_scaling");
    if (r.ran) {
      const json s = load_json(out_of(r.name) / "summary.json");
      const double r2 = s.at("r_squared").get<double>();
      const double intercept = std::abs(s.at("intercept_mhz").get<double>());
      const double max_omega = s.at("max_omega_mhz").get<double>();
      check(r, "r_squared", r2 > 0.999, "R^2 = " + fmt(r2));
      check(r, "zero_intercept", intercept <= 1e-3 * max_omega,
            "intercept " + fmt(intercept) + " MHz vs 0.1% of " + fmt(max_omega));
    }
  }

  // echo_envelopes
  {
    GoldenCaseResult& r = result_of("echo_envelopes");
    if (r.ran) {
      const json fits = load_json(out_of(r.name) / "fits.json");
      auto close = [](double v, double ref, double rel) {
        return std::abs(v - ref) <= rel * ref;
      };
      const double h_t2 = fits.at("hahn").at("t2_us").get<double>();
      const double h_a = fits.at("hahn").at("alpha").get<double>();
      const double c_t2 = fits.at("cpmg3").at("t2_us").get<double>();
      const double c_a = fits.at("cpmg3").at("alpha").get<double>();
      check(r, "hahn_fit", close(h_t2, 1.54, 0.005) && close(h_a, 1.0, 0.005),
            "hahn (T2, alpha) = (" + fmt(h_t2) + ", " + fmt(h_a) + ")");
      check(r, "cpmg3_fit", close(c_t2, 2.78, 0.005) && close(c_a, 2.0, 0.005),
            "cpmg3 (T2, alpha) = (" + fmt(c_t2) + ", " + fmt(c_a) + ")");
    }
  }

  // sensing_protocol
  {
    GoldenCaseResult& r = result_of("sensing_protocol");
    if (r.ran) {
      const json s = load_json(out_of(r.name) / "sensing_summary.json");
      const double peak_b = s.at("sweep_peak_b_g").get<double>();
      const double match_b = s.at("b_match_g").get<double>();
      const double step = s.at("sweep_step_g").get<double>();
      check(r, "matching_peak", std::abs(peak_b - match_b) <= step,
            "peak at " + fmt(peak_b) + " G vs matching condition " + fmt(match_b) +
                " G (step " + fmt(step) + ")");
      const double n_est = s.at("n_estimate").get<double>();
      const double n_true = s.at("n_targets").get<double>();
      check(r, "concentration_round_trip",
            std::abs(n_est - n_true) <= 0.02 * n_true,
            "estimate " + fmt(n_est) + " vs " + fmt(n_true) + " +- 2%");
      const double inferred = s.at("inferred_rabi_mhz").get<double>();
      const double predicted = s.at("nv_rabi_mhz").get<double>();
      check(r, "trace_frequency", std::abs(inferred - predicted) <= 0.02 * predicted,
            "inferred " + fmt(inferred) + " MHz vs chain " + fmt(predicted) + " MHz");
    }
  }

  return report;
}

}  // namespace hybridsim
