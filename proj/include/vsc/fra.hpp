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

// Software frequency response analyzer. A tone is injected in the DC source,
// the port voltage and current are reduced to phasors at the tone frequency
// over a window holding an integer number of periods, and Z = V / I.
//
// Phasors use the peak convention: A sin(2 pi f t + phi) -> A e^{j phi}, with
// t measured from t0 (the time of the first sample in the window).

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <span>

#include "vsc/curve.hpp"
#include "vsc/io.hpp"
#include "vsc/parallel.hpp"
#include "vsc/sim.hpp"

namespace vsc {

/// A window of `length` samples holding exactly `periods` cycles of the bin.
struct CoherentWindow {
  std::size_t length = 0;
  std::size_t periods = 0;
  double frequency = 0.0;  // bin frequency periods * fs / length
};

inline CoherentWindow coherent_window(std::size_t available, double sample_rate, double f_target) {
  const char* where = "fra_extract.goertzel_phasor";
  if (!(f_target > 0.0) || !(sample_rate > 0.0))
    throw Error(ErrorKind::NonCoherentWindow, where, "need f_target > 0 and sample_rate > 0",
                f_target);
  const double per_period = sample_rate / f_target;
  auto periods = static_cast<std::size_t>(std::floor(static_cast<double>(available) / per_period));
  while (periods >= 5) {
    const auto len = static_cast<std::size_t>(std::llround(static_cast<double>(periods) * per_period));
    if (len <= available) {
      const double f_bin = static_cast<double>(periods) * sample_rate / static_cast<double>(len);
      if (std::abs(f_bin - f_target) > 1e-3 * f_target)
        throw Error(ErrorKind::NonCoherentWindow, where,
                    "cannot fit an integer number of periods within 0.1%", f_target);
      return {len, periods, f_bin};
    }
    --periods;
  }
  throw Error(ErrorKind::NonCoherentWindow, where, "fewer than 5 periods available", f_target);
}

/// DFT bin k of the first n samples via the Goertzel recursion. The window
/// mean is removed first; it is orthogonal to every k != 0 and only costs
/// precision in the resonator.
inline Complex goertzel_bin(std::span<const double> x, std::size_t n, std::size_t k) {
  const double mean =
      std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
  const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
  const double coeff = 2.0 * std::cos(w);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s0 = (x[i] - mean) + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return std::polar(1.0, w) * s1 - s2;
}

struct PhasorEstimate {
  Complex phasor;
  double noise = 0.0;  // largest adjacent-bin phasor magnitude
  CoherentWindow window;
};

inline PhasorEstimate estimate_phasor(std::span<const double> samples, double sample_rate,
                                      double f_target, double t0 = 0.0) {
  const CoherentWindow win = coherent_window(samples.size(), sample_rate, f_target);
  const double scale = 2.0 / static_cast<double>(win.length);
  const Complex bin = goertzel_bin(samples, win.length, win.periods);
  // A sin(wn + phi) lands in bin k as -j (N/2) A e^{j phi}.
  Complex ph = Complex{0.0, 1.0} * scale * bin;
  ph *= std::polar(1.0, -kTwoPi * win.frequency * t0);
  const double lo = std::abs(goertzel_bin(samples, win.length, win.periods - 1)) * scale;
  const double hi = std::abs(goertzel_bin(samples, win.length, win.periods + 1)) * scale;
  return {ph, std::max(lo, hi), win};
}

inline Complex goertzel_phasor(std::span<const double> samples, double sample_rate,
                               double f_target, double t0 = 0.0) {
  return estimate_phasor(samples, sample_rate, f_target, t0).phasor;
}

/// Current phasor must sit 60 dB above the noise estimate (adjacent bins, or
/// double-precision roundoff relative to the signal level).
inline void require_signal(const PhasorEstimate& i_est, std::span<const double> i_samples,
                           const char* where, double f_hz) {
  double level = 1.0;
  for (double v : i_samples.first(i_est.window.length)) level = std::max(level, std::abs(v));
  const double floor = std::max(i_est.noise, 1e-12 * level);
  if (!(std::abs(i_est.phasor) > 1e3 * floor))
    throw Error(ErrorKind::LowSignal, where, "current response below 60 dB over the noise floor",
                f_hz);
}

struct FraOptions {
  SimConfig sim{2e-6, 0.0, 5, true};
  double series_resistance = 0.05;
  std::optional<double> settle_time;  // default: max(0.2 s, 10 grid periods, 5 tone periods)
  double min_measure_time = 0.1;      // measurement window, at least 5 tone periods
  bool auto_retry = true;             // raise the amplitude on LowSignal, up to 10% of V_i
};

struct FraPoint {
  Complex z;
  Complex v;
  Complex i;
  double amplitude = 0.0;
  double settle_time = 0.0;
};

inline double default_settle_time(const ConverterDesign& design, double f_p) {
  const double grid_period = kTwoPi / design.grid.fundamental_angular_frequency;
  return std::max({0.2, 10.0 * grid_period, 5.0 / f_p});
}

/// One FRA measurement on the averaged simulator.
inline FraPoint extract_point(const ConverterDesign& design, const ControllerSpec& ctrl, double f_p,
                              double amplitude, const FraOptions& opt = {}) {
  const char* where = "fra_extract.extract_impedance_at";
  design.validate();
  if (!(f_p > 0.0) || f_p > design.switching_frequency / 5.0 * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidConfig, where,
                "injection frequency must be in (0, f_sw/5] for the averaged model", f_p);
  const double settle = opt.settle_time.value_or(default_settle_time(design, f_p));
  const double measure_periods = std::ceil(std::max(5.0, opt.min_measure_time * f_p));
  const double guard_amplitude = 0.1 * design.v_dc_nominal;
  // The tone is placed on the bin of the measurement window (within 0.1% of
  // f_p) so it leaks nothing into the neighbouring bins used as noise floor.
  const double fs = 1.0 / (opt.sim.plant_step * static_cast<double>(opt.sim.record_decimation));
  const double window = std::round(measure_periods * fs / f_p);
  const double f_inj = measure_periods * fs / window;
  if (!(window > 0.0) || std::abs(f_inj - f_p) > 1e-3 * f_p)
    throw Error(ErrorKind::NonCoherentWindow, where,
                "record rate too low for a coherent window at this frequency", f_p);

  double a = amplitude;
  while (true) {
    SourceSpec src{design.v_dc_nominal, opt.series_resistance, Injection{f_inj, a}};
    SimConfig cfg = opt.sim;
    cfg.duration = settle + (window + 4.0) / fs;
    SimTrace tr;
    try {
      tr = simulate(design, ctrl, src, cfg);
    } catch (const Error& e) {
      throw Error(e.kind(), where, e.what(), f_p);
    }
    const auto first = static_cast<std::size_t>(
        std::lower_bound(tr.time.begin(), tr.time.end(), settle - 1e-12) - tr.time.begin());
    const std::span<const double> v(tr.v_dc.data() + first, tr.size() - first);
    const std::span<const double> i(tr.i_dc_port.data() + first, tr.size() - first);
    const double t0 = tr.time[first];
    const PhasorEstimate ve = estimate_phasor(v, tr.sample_rate(), f_inj, t0);
    const PhasorEstimate ie = estimate_phasor(i, tr.sample_rate(), f_inj, t0);
    try {
      require_signal(ie, i, where, f_p);
    } catch (const Error&) {
      if (opt.auto_retry && a > 0.0 && a < guard_amplitude) {
        a = std::min(2.0 * a, guard_amplitude);
        continue;
      }
      throw;
    }
    return {ve.phasor / ie.phasor, ve.phasor, ie.phasor, a, settle};
  }
}

inline Complex extract_impedance_at(const ConverterDesign& design, const ControllerSpec& ctrl,
                                    double f_p, double amplitude, const FraOptions& opt = {}) {
  return extract_point(design, ctrl, f_p, amplitude, opt).z;
}

/// Default tone amplitude: 1% of the nominal DC voltage.
inline double default_injection_amplitude(const ConverterDesign& design) {
  return 0.01 * design.v_dc_nominal;
}

inline SweepResult sweep_fra(const ConverterDesign& design, const ControllerSpec& ctrl,
                             const FrequencyGrid& grid, const FraOptions& opt = {},
                             unsigned jobs = 1) {
  design.validate();
  ctrl.validate();
  const auto f = grid.frequencies();
  const double amp = default_injection_amplitude(design);
  auto pts = parallel_map(f.size(), jobs, [&](std::size_t k) -> std::variant<Complex, PointFault> {
    try {
      return extract_impedance_at(design, ctrl, f[k], amp, opt);
    } catch (const Error& e) {
      return PointFault{f[k], e.kind(), e.what()};
    }
  });
  SweepResult out;
  std::vector<double> ff;
  std::vector<Complex> zz;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (const auto* z = std::get_if<Complex>(&pts[k])) {
      ff.push_back(f[k]);
      zz.push_back(*z);
    } else {
      out.faults.push_back(std::get<PointFault>(pts[k]));
    }
  }
  out.curve = ImpedanceCurve(std::move(ff), std::move(zz));
  return out;
}

/// Oscilloscope-style capture: time, voltage, current.
struct Capture {
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> i;
};

/// Header `t_s,v_V,i_A`; the simulator's trace layout (`t_s,v_dc_V,
/// i_dc_port_A,...`) is accepted as well. Time must be strictly increasing and
/// uniform within 1 ppm.
inline Capture capture_from_csv(std::string_view text) {
  const char* where = "fra_extract.process_capture";
  std::vector<std::string> header;
  auto cols = detail::parse_numeric_csv(text, 3, header, ErrorKind::MalformedCapture, where);
  const bool ok = header[0] == "t_s" && (header[1] == "v_V" || header[1] == "v_dc_V") &&
                  (header[2] == "i_A" || header[2] == "i_dc_port_A");
  if (!ok) throw Error(ErrorKind::MalformedCapture, where, "expected columns t_s,v_V,i_A");
  Capture c{std::move(cols[0]), std::move(cols[1]), std::move(cols[2])};
  if (c.t.size() < 2) throw Error(ErrorKind::MalformedCapture, where, "too few samples");
  const double dt = (c.t.back() - c.t.front()) / static_cast<double>(c.t.size() - 1);
  for (std::size_t k = 1; k < c.t.size(); ++k) {
    const double step = c.t[k] - c.t[k - 1];
    if (!(step > 0.0) || std::abs(step - dt) > 1e-6 * dt)
      throw Error(ErrorKind::MalformedCapture, where,
                  "non-uniform time base at row " + std::to_string(k + 1));
  }
  return c;
}

inline Complex process_capture(const Capture& c, double f_p) {
  const char* where = "fra_extract.process_capture";
  const double fs = static_cast<double>(c.t.size() - 1) / (c.t.back() - c.t.front());
  const PhasorEstimate ve = estimate_phasor(c.v, fs, f_p, c.t.front());
  const PhasorEstimate ie = estimate_phasor(c.i, fs, f_p, c.t.front());
  require_signal(ie, c.i, where, f_p);
  return ve.phasor / ie.phasor;
}

inline Complex process_capture(const std::filesystem::path& path, double f_p) {
  return process_capture(capture_from_csv(read_text_file(path, "fra_extract.process_capture")), f_p);
}

}  // namespace vsc
