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

// Command-line front end. Exit codes: 0 success, 2 invalid input,
// 3 numerical failure, 4 scenario threshold failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vsc/analytic.hpp"
#include "vsc/config.hpp"
#include "vsc/fra.hpp"
#include "vsc/reduced.hpp"
#include "vsc/report.hpp"
#include "vsc/scenarios.hpp"
#include "vsc/stability.hpp"

namespace {

using namespace vsc;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

const char* kConventions =
    "vsc_cli 0.1.0\n"
    "transform: amplitude-invariant Clarke/Park, d axis on the grid voltage, "
    "P = 1.5 (v_d i_d + v_q i_q)\n"
    "phasor: peak amplitude, A sin(2 pi f t + phi) -> A exp(j phi), t from the first window sample\n"
    "impedance: Z = V / I, I flowing from the DC source into the converter port\n"
    "curve csv: f_hz,re_ohm,im_ohm\n";

FrequencyGrid parse_grid(const std::string& text) {
  const auto fields = detail::split_fields(text);
  double lo = 0.0, hi = 0.0, n = 0.0;
  if (fields.size() != 3 || !detail::parse_double(fields[0], lo) ||
      !detail::parse_double(fields[1], hi) || !detail::parse_double(fields[2], n) || n < 1.0 ||
      n != std::floor(n))
    throw Error(ErrorKind::InvalidConfig, "cli.grid", "--grid expects fmin,fmax,n");
  FrequencyGrid g{lo, hi, static_cast<std::size_t>(n)};
  g.validate();
  return g;
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void report_faults(const std::vector<PointFault>& faults) {
  for (const auto& f : faults) warn("skipped " + std::to_string(f.frequency_hz) + " Hz: " + f.message);
}

FraOptions fra_options(const RunConfig& cfg) {
  FraOptions o;
  o.sim = cfg.sim;
  o.series_resistance = cfg.source.series_resistance;
  return o;
}

/// Averaged-model validity ceiling: points above f_sw / 5 are dropped.
std::vector<double> below_ceiling(const FrequencyGrid& g, const ConverterDesign& d) {
  const double ceiling = d.switching_frequency / 5.0;
  std::vector<double> kept;
  for (double f : g.frequencies())
    if (f <= ceiling * (1.0 + 1e-12)) kept.push_back(f);
  if (kept.size() != g.points)
    warn("dropping " + std::to_string(g.points - kept.size()) +
         " point(s) above f_sw/5 = " + format_double(ceiling) + " Hz (averaged-model limit)");
  if (kept.empty())
    throw Error(ErrorKind::InvalidConfig, "cli.extract-sweep", "no grid points below f_sw/5");
  return kept;
}

void write_svg(const std::optional<std::string>& path, const ImpedanceCurve& c, const std::string& label) {
  if (!path) return;
  const BodeSeries s[] = {{&c, label, false}};
  emit_bode_svg(s, *path, label);
}

std::string stability_text(const StabilityReport& r, const std::string& source, const std::string& load) {
  std::string o;
  char buf[256];
  auto line = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof buf, f, args...);
    o += buf;
  };
  o += "source: " + source + "\nload: " + load + "\n";
  line("samples: %zu (%g-%g Hz)\n", r.minor_loop.size(), r.minor_loop.frequency(0),
       r.minor_loop.frequency(r.minor_loop.size() - 1));
  line("verdict: %s\n", std::string(to_string(r.verdict)).c_str());
  line("winding_number: %d\n", r.winding_number);
  line("gain_margin_db: %g\n", r.margins.gain_margin_db);
  line("phase_margin_deg: %g\n", r.margins.phase_margin_deg);
  for (std::size_t k = 0; k < r.margins.gain_crossovers_hz.size(); ++k)
    line("gain crossover %g Hz, phase margin %g deg\n", r.margins.gain_crossovers_hz[k],
         r.margins.phase_margins_deg[k]);
  for (std::size_t k = 0; k < r.margins.phase_crossovers_hz.size(); ++k)
    line("phase crossover %g Hz, gain margin %g dB\n", r.margins.phase_crossovers_hz[k],
         r.margins.gain_margins_db[k]);
  line("middlebrook: %s (worst |T| %g dB)\n", r.middlebrook.ok ? "ok" : "violated",
       r.middlebrook.worst_gain_db);
  for (const auto& n : r.notes) o += "note: " + n + "\n";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-signal DC input impedance of a grid-tie two-level VSC"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // --jobs may follow the subcommand
  unsigned jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  bool version = false;
  app.add_flag("--version", version, "Print version and model conventions");

  std::string config, grid_text, out, svg_text, capture, source, load, suite = "all";
  double freq = 0.0, duration = 0.0, amplitude = 0.0;
  std::optional<std::string> svg;

  auto* c_an = app.add_subcommand("sweep-analytic", "Analytic total input impedance Z_iT");
  c_an->add_option("--config", config)->required();
  c_an->add_option("--grid", grid_text, "fmin,fmax,n")->required();
  c_an->add_option("--out", out)->required();
  c_an->add_option("--svg", svg);

  auto* c_red = app.add_subcommand("sweep-reduced", "Reduced CPL model");
  c_red->add_option("--config", config)->required();
  c_red->add_option("--grid", grid_text)->required();
  c_red->add_option("--out", out)->required();
  c_red->add_option("--svg", svg);

  auto* c_sim = app.add_subcommand("simulate", "Averaged time-domain simulation");
  c_sim->add_option("--config", config)->required();
  c_sim->add_option("--duration", duration)->required()->check(CLI::PositiveNumber);
  c_sim->add_option("--out", out)->required();

  auto* c_ex = app.add_subcommand("extract", "FRA at one frequency on the simulator");
  c_ex->add_option("--config", config)->required();
  c_ex->add_option("--freq", freq)->required();
  c_ex->add_option("--amplitude", amplitude, "Tone amplitude [V], default 1% of V_i");

  auto* c_exs = app.add_subcommand("extract-sweep", "FRA sweep on the simulator");
  c_exs->add_option("--config", config)->required();
  c_exs->add_option("--grid", grid_text)->required();
  c_exs->add_option("--out", out)->required();
  c_exs->add_option("--svg", svg);
  c_exs->add_option("--amplitude", amplitude);

  auto* c_cap = app.add_subcommand("process-capture", "Impedance from a t_s,v_V,i_A capture");
  c_cap->add_option("--capture", capture)->required();
  c_cap->add_option("--freq", freq)->required();

  auto* c_st = app.add_subcommand("stability", "Minor-loop stability of a source/load pair");
  c_st->add_option("--source", source, "Curve CSV or builtin:R:R=..|RL:..|RLC:L=..,C=..,R=..[,Rd=..,Cd=..]")
      ->required();
  c_st->add_option("--load", load, "Load impedance curve CSV")->required();
  c_st->add_option("--report", out)->required();

  auto* c_sc = app.add_subcommand("scenarios", "Run the scenario suites and write a report bundle");
  c_sc->add_option("--suite", suite)
      ->check(CLI::IsMember({"powers", "bandwidth", "alphabeta", "feedforward", "all"}));
  std::string out_dir = "scenarios_out";
  c_sc->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInvalid;
  }
  if (version) {
    std::cout << kConventions;
    return kExitOk;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return kExitInvalid;
  }

  try {
    if (*c_an) {
      const RunConfig cfg = load_config(config);
      const AnalyticSweep s = sweep_analytic(cfg.design, cfg.controller, parse_grid(grid_text), jobs);
      report_faults(s.total.faults);
      emit_csv(s.total.curve, out);
      write_svg(svg, s.total.curve, "analytic Z_iT");
    } else if (*c_red) {
      const RunConfig cfg = load_config(config);
      const ImpedanceCurve c = sweep_reduced(reduced_model_for(cfg.design, true), parse_grid(grid_text));
      emit_csv(c, out);
      write_svg(svg, c, "reduced");
    } else if (*c_sim) {
      const RunConfig cfg = load_config(config);
      SimConfig sc = cfg.sim;
      sc.duration = duration;
      atomic_write_file(out, trace_to_csv(simulate(cfg.design, cfg.controller, cfg.source, sc)));
    } else if (*c_ex) {
      const RunConfig cfg = load_config(config);
      if (freq > cfg.design.switching_frequency / 5.0)
        warn("frequency above f_sw/5, outside the averaged model's validity");
      const double a = amplitude > 0.0 ? amplitude : default_injection_amplitude(cfg.design);
      const FraPoint p = extract_point(cfg.design, cfg.controller, freq, a, fra_options(cfg));
      if (p.amplitude != a) warn("tone amplitude raised to " + format_double(p.amplitude) + " V");
      std::cout << kCurveCsvHeader << "\n"
                << format_double(freq) << "," << format_double(p.z.real()) << ","
                << format_double(p.z.imag()) << "\n";
    } else if (*c_exs) {
      const RunConfig cfg = load_config(config);
      const std::vector<double> kept = below_ceiling(parse_grid(grid_text), cfg.design);
      const double a = amplitude > 0.0 ? amplitude : default_injection_amplitude(cfg.design);
      const FraOptions opt = fra_options(cfg);
      auto pts = parallel_map(kept.size(), jobs, [&](std::size_t k) -> std::variant<Complex, PointFault> {
        try {
          return extract_impedance_at(cfg.design, cfg.controller, kept[k], a, opt);
        } catch (const Error& e) {
          return PointFault{kept[k], e.kind(), e.what()};
        }
      });
      std::vector<double> f;
      std::vector<Complex> z;
      std::vector<PointFault> faults;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        if (const auto* v = std::get_if<Complex>(&pts[k])) {
          f.push_back(kept[k]);
          z.push_back(*v);
        } else {
          faults.push_back(std::get<PointFault>(pts[k]));
        }
      }
      report_faults(faults);
      const ImpedanceCurve c(std::move(f), std::move(z));
      if (c.empty()) throw faults.empty() ? Error(ErrorKind::LowSignal, "cli.extract-sweep", "no points")
                                          : Error(faults.front().kind, "cli.extract-sweep", faults.front().message);
      emit_csv(c, out);
      write_svg(svg, c, "fra");
    } else if (*c_cap) {
      const Complex z = process_capture(fs::path(capture), freq);
      std::cout << kCurveCsvHeader << "\n"
                << format_double(freq) << "," << format_double(z.real()) << ","
                << format_double(z.imag()) << "\n";
    } else if (*c_st) {
      const ImpedanceCurve z_l = read_curve_csv(load);
      ImpedanceCurve z_s;
      constexpr std::string_view kBuiltin = "builtin:";
      if (source.starts_with(kBuiltin)) {
        const auto [kind, params] = parse_source_spec(std::string_view(source).substr(kBuiltin.size()));
        std::vector<double> f(z_l.frequencies().begin(), z_l.frequencies().end());
        z_s = build_source_impedance(kind, params, f);
      } else {
        z_s = read_curve_csv(source);
      }
      const StabilityReport r = analyze_stability(z_s, z_l);
      const std::string text = stability_text(r, source, load);
      atomic_write_file(out, text);
      std::cout << "verdict: " << to_string(r.verdict) << " (winding " << r.winding_number << ")\n";
    } else if (*c_sc) {
      ScenarioOptions opt;
      opt.jobs = jobs;
      const auto results = run_scenario_suite(parse_suite(suite), opt);
      std::cout << write_report_bundle(results, out_dir, opt.thresholds);
      for (const auto& r : results)
        if (!r.passed()) return kExitThreshold;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.kind()) ? kExitInvalid : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
