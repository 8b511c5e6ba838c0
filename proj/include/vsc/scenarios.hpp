/*
 * Copyright 2026 The vsc-impedance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Scenario suites: rated power, current-loop bandwidth, stationary-frame PR
// control and feedforward variants. Each scenario sweeps the analytic model
// (DQ only), the reduced CPL model and the FRA on the averaged simulator,
// then judges the deviations against fixed thresholds.

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vsc/analytic.hpp"
#include "vsc/fixtures.hpp"
#include "vsc/fra.hpp"
#include "vsc/reduced.hpp"
#include "vsc/report.hpp"
#include "vsc/stability.hpp"

namespace vsc {

enum class Suite { Powers, Bandwidth, AlphaBeta, Feedforward, All };

inline Suite parse_suite(std::string_view s) {
  if (s == "powers") return Suite::Powers;
  if (s == "bandwidth") return Suite::Bandwidth;
  if (s == "alphabeta") return Suite::AlphaBeta;
  if (s == "feedforward") return Suite::Feedforward;
  if (s == "all") return Suite::All;
  throw Error(ErrorKind::InvalidConfig, "compare_report.run_scenario_suite",
              "unknown suite '" + std::string(s) + "'");
}

/// Pass/fail thresholds. These are project choices: the reference results
/// are Bode plots without numeric tolerances.
struct Thresholds {
  double match_db = 1.0;
  double match_deg = 5.0;
  double ideal_model_db = 0.5;      // analytic vs reduced with ideal feedforward
  double mismatch_constant_db = 3.0;
  double mismatch_filtered_db = 1.5;
  double stiff_source_ohm = 0.1;    // resistive source for the bandwidth stability check
};

inline std::string thresholds_footer(const Thresholds& t) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "thresholds (project choices, not taken from measured data): match %g dB / %g deg; "
                "ideal-feedforward model error < %g dB; mismatch detection > %g dB (constant "
                "feedforward), > %g dB (filtered feedforward); bandwidth stability against a "
                "%g ohm source\n",
                t.match_db, t.match_deg, t.ideal_model_db, t.mismatch_constant_db,
                t.mismatch_filtered_db, t.stiff_source_ohm);
  return buf;
}

struct ScenarioCheck {
  std::string description;
  bool passed = false;
};

struct NamedDeviation {
  std::string label;  // "a vs b"
  DeviationMetrics metrics;
};

struct ScenarioResult {
  std::string suite;
  std::string name;
  ConverterDesign design;
  ControllerSpec controller;
  FrequencyGrid grid;
  std::optional<SweepResult> analytic;  // Z_iT
  ImpedanceCurve reduced;
  SweepResult fra;
  std::vector<NamedDeviation> deviations;
  std::optional<StabilityReport> stability;
  std::vector<ScenarioCheck> checks;
  std::vector<std::string> notes;

  bool passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  const DeviationMetrics* deviation(std::string_view label) const {
    for (const auto& d : deviations)
      if (d.label == label) return &d.metrics;
    return nullptr;
  }
};

struct ScenarioOptions {
  FrequencyGrid grid{10.0, 2000.0, 20};
  FrequencyBand model_band{10.0, 1000.0};     // analytic vs reduced, feedforward suite
  FrequencyBand bandwidth_band{10.0, 100.0};  // analytic vs reduced, bandwidth suite
  FrequencyGrid stability_grid{1.0, 5000.0, 400};
  FraOptions fra;
  Thresholds thresholds;
  unsigned jobs = 1;
};

namespace detail {

struct ScenarioSpec {
  std::string suite;
  std::string name;
  ConverterDesign design;
  ControllerSpec controller;
};

inline double band_mag(const DeviationMetrics& m) {
  return m.per_band.empty() || m.per_band.front().points == 0 ? 0.0
                                                              : m.per_band.front().max_mag_dev_db;
}

inline std::string fmt_db(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g dB", v);
  return buf;
}

inline ScenarioResult sweep_scenario(const ScenarioSpec& spec, const ScenarioOptions& opt) {
  ScenarioResult r;
  r.suite = spec.suite;
  r.name = spec.name;
  r.design = spec.design;
  r.controller = spec.controller;
  r.grid = opt.grid;
  try {
    if (spec.controller.frame == Frame::DQ)
      r.analytic = sweep_analytic(spec.design, spec.controller, opt.grid, opt.jobs).total;
    r.reduced = sweep_reduced(reduced_model_for(spec.design, true), opt.grid);
    r.fra = sweep_fra(spec.design, spec.controller, opt.grid, opt.fra, opt.jobs);
  } catch (const Error& e) {
    throw Error(e.kind(), "compare_report.run_scenario_suite",
                spec.suite + "/" + spec.name + ": " + e.what(), e.frequency_hz());
  }
  const FrequencyBand bands[] = {opt.model_band, opt.bandwidth_band};
  auto add = [&](std::string label, const ImpedanceCurve& a, const ImpedanceCurve& b) {
    if (a.empty() || b.empty()) return;
    r.deviations.push_back({std::move(label), deviation_metrics(a, b, bands)});
  };
  if (r.analytic) {
    add("fra vs analytic", r.fra.curve, r.analytic->curve);
    add("analytic vs reduced", r.analytic->curve, r.reduced);
  }
  add("fra vs reduced", r.fra.curve, r.reduced);
  r.checks.push_back({"FRA sweep complete (" + std::to_string(r.fra.curve.size()) + "/" +
                          std::to_string(opt.grid.points) + " points)",
                      r.fra.faults.empty()});
  return r;
}

inline void check_match(ScenarioResult& r, std::string_view label, const Thresholds& t) {
  const DeviationMetrics* m = r.deviation(label);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.*s within %g dB / %g deg (worst %.3g dB, %.3g deg)",
                static_cast<int>(label.size()), label.data(), t.match_db, t.match_deg,
                m ? m->max_mag_dev_db : 0.0, m ? m->max_phase_dev_deg : 0.0);
  r.checks.push_back({buf, m && m->max_mag_dev_db <= t.match_db && m->max_phase_dev_deg <= t.match_deg});
}

inline void check_band_below(ScenarioResult& r, std::string_view label, double limit_db) {
  const DeviationMetrics* m = r.deviation(label);
  const double v = m ? band_mag(*m) : 0.0;
  r.checks.push_back({std::string(label) + " below " + fmt_db(limit_db) + " in 10 Hz-1 kHz (" +
                          fmt_db(v) + ")",
                      m && v < limit_db});
}

inline void check_band_above(ScenarioResult& r, std::string_view label, double limit_db) {
  const DeviationMetrics* m = r.deviation(label);
  const double v = m ? band_mag(*m) : 0.0;
  r.checks.push_back({std::string(label) + " flagged above " + fmt_db(limit_db) +
                          " in 10 Hz-1 kHz (" + fmt_db(v) + ")",
                      m && v > limit_db});
}

inline std::vector<ScenarioResult> run_powers(const ScenarioOptions& opt) {
  using namespace fixtures;
  const ScenarioSpec specs[] = {
      {"powers", "5kw", design_5kw(), controller_5kw()},
      {"powers", "40kw", design_40kw(), controller_40kw()},
      {"powers", "150kw", design_150kw(), controller_150kw()},
  };
  std::vector<ScenarioResult> out;
  for (const auto& s : specs) {
    ScenarioResult r = sweep_scenario(s, opt);
    check_match(r, "fra vs analytic", opt.thresholds);
    check_match(r, "fra vs reduced", opt.thresholds);
    check_band_below(r, "analytic vs reduced", opt.thresholds.ideal_model_db);
    out.push_back(std::move(r));
  }
  return out;
}

// Filtered (1 kHz) feedforward: with ideal feedforward the analytic model is
// the CPL exactly for any regulator, so the bandwidth has nothing to act on.
inline std::vector<ScenarioResult> run_bandwidth(const ScenarioOptions& opt) {
  using namespace fixtures;
  const Feedforward ff = Feedforward::filtered(1000.0);
  const ScenarioSpec specs[] = {
      {"bandwidth", "160hz", design_5kw(), controller_5kw(ff)},
      {"bandwidth", "15hz", design_5kw(), controller_5kw_15hz(ff)},
  };
  std::vector<ScenarioResult> out;
  const FrequencyGrid& sg = opt.stability_grid;
  SourceParams stiff;
  stiff.r = opt.thresholds.stiff_source_ohm;
  const ImpedanceCurve z_s = build_source_impedance(SourceKind::R, stiff, sg);
  for (const auto& s : specs) {
    ScenarioResult r = sweep_scenario(s, opt);
    check_match(r, "fra vs analytic", opt.thresholds);
    const AnalyticSweep dense = sweep_analytic(s.design, s.controller, sg, opt.jobs);
    r.stability = analyze_stability(z_s, dense.total.curve, {}, dense.total.faults);
    char buf[128];
    std::snprintf(buf, sizeof buf, "stable against a %g ohm source (verdict %s, winding %d)",
                  opt.thresholds.stiff_source_ohm, std::string(to_string(r.stability->verdict)).c_str(),
                  r.stability->winding_number);
    r.checks.push_back({buf, r.stability->verdict == Verdict::Stable});
    out.push_back(std::move(r));
  }
  const DeviationMetrics* fast = out[0].deviation("analytic vs reduced");
  const DeviationMetrics* slow = out[1].deviation("analytic vs reduced");
  const double d_fast = fast && fast->per_band.size() > 1 ? fast->per_band[1].max_mag_dev_db : 0.0;
  const double d_slow = slow && slow->per_band.size() > 1 ? slow->per_band[1].max_mag_dev_db : 0.0;
  out[1].checks.push_back({"analytic vs reduced in 10-100 Hz exceeds the 160 Hz controller (" +
                               fmt_db(d_slow) + " > " + fmt_db(d_fast) + ")",
                           d_slow > d_fast});
  return out;
}

inline std::vector<ScenarioResult> run_alphabeta(const ScenarioOptions& opt) {
  ScenarioResult r =
      sweep_scenario({"alphabeta", "pr_ideal", fixtures::design_5kw(), fixtures::controller_5kw_pr()}, opt);
  check_match(r, "fra vs reduced", opt.thresholds);
  std::vector<ScenarioResult> out;
  out.push_back(std::move(r));
  return out;
}

inline std::vector<ScenarioResult> run_feedforward(const ScenarioOptions& opt) {
  using namespace fixtures;
  const Thresholds& t = opt.thresholds;
  const Feedforward filt = Feedforward::filtered(1000.0);
  std::vector<ScenarioResult> out;

  ScenarioResult ideal = sweep_scenario({"feedforward", "dq_ideal", design_5kw(), controller_5kw()}, opt);
  check_match(ideal, "fra vs analytic", t);
  check_band_below(ideal, "analytic vs reduced", t.ideal_model_db);

  ScenarioResult constant = sweep_scenario(
      {"feedforward", "dq_constant", design_5kw(), controller_5kw(Feedforward::constant())}, opt);
  check_band_above(constant, "analytic vs reduced", t.mismatch_constant_db);
  check_band_above(constant, "fra vs reduced", t.mismatch_constant_db);

  ScenarioResult filtered =
      sweep_scenario({"feedforward", "dq_filtered_1khz", design_5kw(), controller_5kw(filt)}, opt);
  check_band_above(filtered, "analytic vs reduced", t.mismatch_filtered_db);
  check_band_above(filtered, "fra vs reduced", t.mismatch_filtered_db);

  check_match(filtered, "fra vs analytic", t);
  constant.notes.emplace_back(
      "fra vs analytic is reported only: the analytic model has no controller sampling, which "
      "matters once the feedforward no longer cancels the DC voltage");

  const double d_i = band_mag(*ideal.deviation("analytic vs reduced"));
  const double d_c = band_mag(*constant.deviation("analytic vs reduced"));
  const double d_f = band_mag(*filtered.deviation("analytic vs reduced"));
  filtered.checks.push_back({"ordering constant > filtered > ideal (" + fmt_db(d_c) + " > " +
                                 fmt_db(d_f) + " > " + fmt_db(d_i) + ")",
                             d_c > d_f && d_f > d_i});
  out.push_back(std::move(ideal));
  out.push_back(std::move(constant));
  out.push_back(std::move(filtered));

  ScenarioResult ab_c = sweep_scenario(
      {"feedforward", "ab_constant", design_5kw(), controller_5kw_pr(Feedforward::constant())}, opt);
  check_band_above(ab_c, "fra vs reduced", t.mismatch_constant_db);
  ScenarioResult ab_f =
      sweep_scenario({"feedforward", "ab_filtered_1khz", design_5kw(), controller_5kw_pr(filt)}, opt);
  check_band_above(ab_f, "fra vs reduced", t.mismatch_filtered_db);
  out.push_back(std::move(ab_c));
  out.push_back(std::move(ab_f));
  return out;
}

}  // namespace detail

inline std::vector<ScenarioResult> run_scenario_suite(Suite suite, const ScenarioOptions& opt = {}) {
  std::vector<ScenarioResult> out;
  auto append = [&](std::vector<ScenarioResult> v) {
    for (auto& r : v) out.push_back(std::move(r));
  };
  if (suite == Suite::Powers || suite == Suite::All) append(detail::run_powers(opt));
  if (suite == Suite::Bandwidth || suite == Suite::All) append(detail::run_bandwidth(opt));
  if (suite == Suite::AlphaBeta || suite == Suite::All) append(detail::run_alphabeta(opt));
  if (suite == Suite::Feedforward || suite == Suite::All) append(detail::run_feedforward(opt));
  return out;
}

inline std::string scenario_id(const ScenarioResult& r) { return r.suite + "_" + r.name; }

inline std::string format_report(const ScenarioResult& r, const Thresholds& t = {}) {
  std::string o;
  char buf[256];
  auto line = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof buf, f, args...);
    o += buf;
  };
  line("scenario %s/%s\n", r.suite.c_str(), r.name.c_str());
  const ConverterDesign& d = r.design;
  line("design: V_i %g V, P_o %g W, L %g H, C_i %g F, esr %g ohm, r %g ohm\n", d.v_dc_nominal,
       d.p_out, d.filter_inductance, d.dc_capacitance, d.dc_cap_esr, d.filter_resistance);
  const ControllerSpec& c = r.controller;
  if (const auto* pi = std::get_if<PiRegulator>(&c.regulator)) {
    line("controller: DQ PI k_p %g tau_i %g s", pi->k_p, pi->tau_i);
  } else {
    const auto& pr = std::get<PrRegulator>(c.regulator);
    line("controller: alpha-beta PR k_p %g k_r %g 1/s w_r %g rad/s w_c %g rad/s", pr.k_p, pr.k_r,
         pr.resonant_frequency, pr.damping);
  }
  line(", feedforward %s, f_ctrl %g Hz\n", to_string(c.feedforward).c_str(), c.control_rate);
  line("grid: %g-%g Hz, %zu log points\n", r.grid.f_min, r.grid.f_max, r.grid.points);
  if (d.p_out > 0.0) line("R_CPL %.6g ohm\n", r_cpl(d));
  for (const auto& f : r.fra.faults) line("fra fault at %g Hz: %s\n", f.frequency_hz, f.message.c_str());
  for (const auto& dev : r.deviations) {
    const auto& m = dev.metrics;
    line("%-20s max %.4g dB at %g Hz, max %.4g deg at %g Hz", dev.label.c_str(), m.max_mag_dev_db,
         m.frequency_of_worst_mag, m.max_phase_dev_deg, m.frequency_of_worst_phase);
    for (const auto& b : m.per_band)
      if (b.points > 0) line("; %g-%g Hz: %.4g dB", b.band.f_lo, b.band.f_hi, b.max_mag_dev_db);
    o += '\n';
  }
  if (r.stability) {
    const auto& s = *r.stability;
    line("stability: verdict %s, winding %d, GM %g dB, PM %g deg, middlebrook %s\n",
         std::string(to_string(s.verdict)).c_str(), s.winding_number, s.margins.gain_margin_db,
         s.margins.phase_margin_deg, s.middlebrook.ok ? "ok" : "violated");
  }
  for (const auto& n : r.notes) o += "note: " + n + "\n";
  for (const auto& ch : r.checks) o += (ch.passed ? "PASS " : "FAIL ") + ch.description + "\n";
  o += r.passed() ? "result: PASS\n" : "result: FAIL\n";
  o += thresholds_footer(t);
  return o;
}

/// Writes <id>.txt, <id>_{analytic,reduced,fra}.csv and <id>.svg per scenario
/// plus summary.txt. Returns the summary text.
inline std::string write_report_bundle(const std::vector<ScenarioResult>& results,
                                       const std::filesystem::path& dir, const Thresholds& t = {}) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorKind::IoFailure, "compare_report.run_scenario_suite",
                "cannot create " + dir.string());
  std::string summary;
  for (const auto& r : results) {
    const std::string id = scenario_id(r);
    atomic_write_file(dir / (id + ".txt"), format_report(r, t));
    std::vector<BodeSeries> series;
    if (r.analytic && !r.analytic->curve.empty()) {
      emit_csv(r.analytic->curve, dir / (id + "_analytic.csv"));
      series.push_back({&r.analytic->curve, "analytic", false});
    }
    emit_csv(r.reduced, dir / (id + "_reduced.csv"));
    series.push_back({&r.reduced, "reduced", false});
    if (!r.fra.curve.empty()) {
      emit_csv(r.fra.curve, dir / (id + "_fra.csv"));
      series.push_back({&r.fra.curve, "fra", true});
    }
    emit_bode_svg(series, dir / (id + ".svg"), r.suite + "/" + r.name);
    summary += (r.passed() ? "PASS " : "FAIL ") + r.suite + "/" + r.name + "\n";
  }
  summary += thresholds_footer(t);
  atomic_write_file(dir / "summary.txt", summary);
  return summary;
}

}  // namespace vsc
