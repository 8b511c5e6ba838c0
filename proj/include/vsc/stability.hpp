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

// Source/load interconnection stability from sampled impedances.
//
// The minor-loop gain is T = Z_s / Z_L. With no right-half-plane poles in T
// the interconnection is stable iff the Nyquist plot of T does not encircle
// -1; the gain/phase margins and the Middlebrook condition |T| < 1 are
// reported alongside.

#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vsc/curve.hpp"
#include "vsc/io.hpp"

namespace vsc {

/// Minor-loop gain samples share the impedance curve container.
using LoopCurve = ImpedanceCurve;

inline LoopCurve minor_loop_gain(const ImpedanceCurve& z_source, const ImpedanceCurve& z_load,
                                 std::span<const PointFault> load_faults = {}) {
  const char* where = "stability.minor_loop_gain";
  std::vector<double> grid;
  try {
    grid = intersection_grid(z_source, z_load);
  } catch (const Error& e) {
    throw Error(ErrorKind::NoOverlap, where, e.what());
  }
  for (const auto& p : load_faults)
    if (p.kind == ErrorKind::InfiniteImpedance && p.frequency_hz >= grid.front() &&
        p.frequency_hz <= grid.back())
      throw Error(ErrorKind::DivisionByOpenCircuit, where, "load open-circuit marker in range",
                  p.frequency_hz);
  const ImpedanceCurve zs = resample(z_source, grid);
  const ImpedanceCurve zl = resample(z_load, grid);
  std::vector<Complex> t(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (zl.value(k) == Complex{})
      throw Error(ErrorKind::ZeroLoadImpedance, where, "zero load impedance", grid[k]);
    t[k] = zs.value(k) / zl.value(k);
  }
  return LoopCurve(std::move(grid), std::move(t));
}

struct MiddlebrookResult {
  bool ok = true;
  double worst_gain_db = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> offending_bands;  // [f_lo, f_hi] in Hz
};

/// |T| must stay `margin_db` below unity at every sample.
inline MiddlebrookResult middlebrook_check(const LoopCurve& t, double margin_db = 6.0) {
  MiddlebrookResult r;
  const double limit = std::pow(10.0, -margin_db / 20.0);
  bool in_band = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double m = std::abs(t.value(k));
    r.worst_gain_db = std::max(r.worst_gain_db, to_db(m));
    if (m >= limit) {
      r.ok = false;
      if (!in_band) r.offending_bands.emplace_back(t.frequency(k), t.frequency(k));
      r.offending_bands.back().second = t.frequency(k);
      in_band = true;
    } else {
      in_band = false;
    }
  }
  return r;
}

struct Margins {
  double gain_margin_db = std::numeric_limits<double>::infinity();
  double phase_margin_deg = std::numeric_limits<double>::infinity();
  std::vector<double> gain_crossovers_hz;   // |T| = 1
  std::vector<double> phase_margins_deg;    // one per gain crossover
  std::vector<double> phase_crossovers_hz;  // arg T = +-180 (mod 360)
  std::vector<double> gain_margins_db;      // one per phase crossover

  bool has_crossover() const { return !gain_crossovers_hz.empty() || !phase_crossovers_hz.empty(); }
};

/// Crossovers interpolated linearly in log-frequency (log-magnitude and
/// unwrapped phase). Headline margins are the worst over all crossovers.
inline Margins gmpm_margins(const LoopCurve& t) {
  Margins m;
  const std::size_t n = t.size();
  if (n == 0) return m;
  const auto ph = unwrap_phase_deg(t.values());
  std::vector<double> lm(n), lf(n);
  for (std::size_t k = 0; k < n; ++k) {
    lm[k] = std::log(std::abs(t.value(k)));
    lf[k] = std::log(t.frequency(k));
  }
  auto add_gain_xover = [&](double f, double phase) {
    m.gain_crossovers_hz.push_back(f);
    m.phase_margins_deg.push_back(180.0 - std::abs(wrap_deg(phase)));
  };
  auto add_phase_xover = [&](double f, double log_mag) {
    m.phase_crossovers_hz.push_back(f);
    m.gain_margins_db.push_back(-20.0 * log_mag / std::log(10.0));
  };
  auto is_odd_180 = [](double p) {
    const double r = std::remainder(p - 180.0, 360.0);
    return r == 0.0;
  };

  for (std::size_t k = 0; k < n; ++k) {
    if (lm[k] == 0.0 && (k == 0 || lm[k - 1] != 0.0)) add_gain_xover(t.frequency(k), ph[k]);
    if (is_odd_180(ph[k]) && (k == 0 || !is_odd_180(ph[k - 1]) || ph[k - 1] != ph[k]))
      add_phase_xover(t.frequency(k), lm[k]);
    if (k + 1 == n) break;

    if (lm[k] != 0.0 && lm[k + 1] != 0.0 && (lm[k] < 0.0) != (lm[k + 1] < 0.0)) {
      const double a = lm[k] / (lm[k] - lm[k + 1]);
      add_gain_xover(std::exp(lf[k] + a * (lf[k + 1] - lf[k])), ph[k] + a * (ph[k + 1] - ph[k]));
    }
    // Odd multiples of 180 degrees strictly inside (ph[k], ph[k+1]).
    const double lo = std::min(ph[k], ph[k + 1]);
    const double hi = std::max(ph[k], ph[k + 1]);
    for (double c = 180.0 + 360.0 * std::ceil((lo - 180.0) / 360.0); c <= hi; c += 360.0) {
      if (c == lo || c == hi) continue;
      const double a = (c - ph[k]) / (ph[k + 1] - ph[k]);
      m.phase_crossovers_hz.push_back(std::exp(lf[k] + a * (lf[k + 1] - lf[k])));
      m.gain_margins_db.push_back(-20.0 * (lm[k] + a * (lm[k + 1] - lm[k])) / std::log(10.0));
    }
  }
  // Phase crossovers found inside segments are appended after exact hits;
  // restore frequency order.
  {
    std::vector<std::size_t> idx(m.phase_crossovers_hz.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return m.phase_crossovers_hz[a] < m.phase_crossovers_hz[b];
    });
    std::vector<double> f, g;
    for (auto i : idx) {
      f.push_back(m.phase_crossovers_hz[i]);
      g.push_back(m.gain_margins_db[i]);
    }
    m.phase_crossovers_hz = std::move(f);
    m.gain_margins_db = std::move(g);
  }
  for (double pm : m.phase_margins_deg) m.phase_margin_deg = std::min(m.phase_margin_deg, pm);
  for (double gm : m.gain_margins_db) m.gain_margin_db = std::min(m.gain_margin_db, gm);
  return m;
}

/// Largest angle a polygon edge of the Nyquist contour may subtend at -1.
inline constexpr double kMaxNyquistStepDeg = 30.0;

/// Winding number of the closed contour T(-jw) ∪ T(jw) about -1
/// (counter-clockwise positive). The negative-frequency half is the
/// conjugate mirror of the samples; the contour is closed through the lowest
/// and the highest sampled frequencies.
inline int nyquist_winding(const LoopCurve& t) {
  const char* where = "stability.nyquist_winding";
  const std::size_t n = t.size();
  if (n == 0) throw Error(ErrorKind::RefineGridNeeded, where, "empty minor-loop curve");
  std::vector<Complex> pts;
  std::vector<double> freq;
  pts.reserve(2 * n);
  for (std::size_t k = n; k-- > 0;) {
    pts.push_back(std::conj(t.value(k)) + 1.0);
    freq.push_back(t.frequency(k));
  }
  for (std::size_t k = 0; k < n; ++k) {
    pts.push_back(t.value(k) + 1.0);
    freq.push_back(t.frequency(k));
  }
  for (std::size_t k = 0; k < pts.size(); ++k)
    if (std::abs(pts[k]) < 1e-9)
      throw Error(ErrorKind::PointOnContour, where, "minor-loop gain passes through -1", freq[k]);
  double total = 0.0;
  const double max_step = deg_to_rad(kMaxNyquistStepDeg);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const std::size_t j = (k + 1) % pts.size();
    const double step = std::arg(pts[j] / pts[k]);
    if (std::abs(step) > max_step)
      throw Error(ErrorKind::RefineGridNeeded, where,
                  "phase of 1 + T moves more than 30 degrees between samples", freq[k]);
    total += step;
  }
  return static_cast<int>(std::lround(total / kTwoPi));
}

enum class Verdict { Stable, Unstable, Marginal };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "Stable";
    case Verdict::Unstable: return "Unstable";
    case Verdict::Marginal: return "Marginal";
  }
  return "?";
}

struct StabilityOptions {
  double middlebrook_margin_db = 6.0;
  double gain_margin_threshold_db = 1.0;
  double phase_margin_threshold_deg = 5.0;
  bool assume_no_rhp_poles = true;
};

struct StabilityReport {
  LoopCurve minor_loop;
  Margins margins;
  int winding_number = 0;
  bool point_on_contour = false;
  MiddlebrookResult middlebrook;
  Verdict verdict = Verdict::Stable;
  std::vector<std::string> notes;
};

/// Judges the interconnection. Winding drives Stable/Unstable; a margin closer
/// to zero than its threshold downgrades Stable to Marginal.
inline StabilityReport analyze_stability(const ImpedanceCurve& z_source,
                                         const ImpedanceCurve& z_load,
                                         const StabilityOptions& opt = {},
                                         std::span<const PointFault> load_faults = {}) {
  StabilityReport r;
  r.minor_loop = minor_loop_gain(z_source, z_load, load_faults);
  r.margins = gmpm_margins(r.minor_loop);
  r.middlebrook = middlebrook_check(r.minor_loop, opt.middlebrook_margin_db);
  try {
    r.winding_number = nyquist_winding(r.minor_loop);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::PointOnContour) throw;
    r.point_on_contour = true;
    r.notes.emplace_back(e.what());
  }
  if (r.point_on_contour) {
    r.verdict = Verdict::Marginal;
  } else if (r.winding_number != 0) {
    r.verdict = Verdict::Unstable;
  } else {
    const bool thin_gm = std::abs(r.margins.gain_margin_db) < opt.gain_margin_threshold_db;
    const bool thin_pm = std::abs(r.margins.phase_margin_deg) < opt.phase_margin_threshold_deg;
    r.verdict = (thin_gm || thin_pm) ? Verdict::Marginal : Verdict::Stable;
  }

  if (!opt.assume_no_rhp_poles)
    r.notes.emplace_back(
        "no-RHP-pole premise not asserted: the winding number alone does not decide stability");
  if (r.margins.gain_crossovers_hz.size() == 1 && r.margins.phase_crossovers_hz.size() <= 1 &&
      !r.point_on_contour) {
    const bool gmpm_stable =
        r.margins.phase_margin_deg > 0.0 &&
        (r.margins.phase_crossovers_hz.empty() || r.margins.gain_margin_db > 0.0);
    if (gmpm_stable != (r.winding_number == 0))
      r.notes.emplace_back("GMPM classification disagrees with the Nyquist winding number");
  }
  if (!r.margins.has_crossover())
    r.notes.emplace_back("no crossover: margins are infinite, Middlebrook path decides");
  return r;
}

// Source impedance fixtures -------------------------------------------------

enum class SourceKind { R, RL, RLC, FromFile };

/// R: series resistance. RL: R + sL. RLC: (R + sL) in parallel with C, with
/// an optional damping branch r_damp (+ c_damp in series when given) across C.
struct SourceParams {
  double r = 0.0;
  double l = 0.0;
  double c = 0.0;
  std::optional<double> r_damp;
  std::optional<double> c_damp;
  std::filesystem::path file;
};

inline Complex source_impedance_at(SourceKind kind, const SourceParams& p, Complex s) {
  switch (kind) {
    case SourceKind::R: return p.r;
    case SourceKind::RL: return p.r + s * p.l;
    case SourceKind::RLC: {
      Complex y = 1.0 / (p.r + s * p.l) + s * p.c;
      if (p.r_damp) {
        const Complex zd = *p.r_damp + (p.c_damp ? 1.0 / (s * *p.c_damp) : Complex{});
        y += 1.0 / zd;
      }
      return 1.0 / y;
    }
    case SourceKind::FromFile: break;
  }
  throw Error(ErrorKind::InvalidConfig, "stability.build_source_impedance",
              "from_file sources have no closed form");
}

inline ImpedanceCurve build_source_impedance(SourceKind kind, const SourceParams& p,
                                             std::span<const double> frequencies) {
  const char* where = "stability.build_source_impedance";
  if (kind == SourceKind::FromFile) {
    try {
      return read_curve_csv(p.file);
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedCurveFile, where, e.what());
    }
  }
  if (kind == SourceKind::RLC && !(p.l > 0.0 && p.c > 0.0))
    throw Error(ErrorKind::InvalidConfig, where, "RLC source needs L > 0 and C > 0");
  std::vector<Complex> z;
  z.reserve(frequencies.size());
  for (double f : frequencies) z.push_back(source_impedance_at(kind, p, {0.0, kTwoPi * f}));
  return ImpedanceCurve({frequencies.begin(), frequencies.end()}, std::move(z));
}

inline ImpedanceCurve build_source_impedance(SourceKind kind, const SourceParams& p,
                                             const FrequencyGrid& grid) {
  const auto f = grid.frequencies();
  return build_source_impedance(kind, p, f);
}

/// Parses "R:R=0.1", "RL:R=0.1,L=1e-4" or "RLC:L=1e-4,C=24e-6,R=0.01[,Rd=2][,Cd=96e-6]".
inline std::pair<SourceKind, SourceParams> parse_source_spec(std::string_view spec) {
  const char* where = "stability.build_source_impedance";
  const auto colon = spec.find(':');
  const std::string_view kind_s = spec.substr(0, colon);
  SourceKind kind;
  if (kind_s == "R") kind = SourceKind::R;
  else if (kind_s == "RL") kind = SourceKind::RL;
  else if (kind_s == "RLC") kind = SourceKind::RLC;
  else throw Error(ErrorKind::InvalidConfig, where, "unknown source kind '" + std::string(kind_s) + "'");
  SourceParams p;
  if (colon != std::string_view::npos) {
    for (auto field : detail::split_fields(spec.substr(colon + 1))) {
      const auto eq = field.find('=');
      double v;
      if (eq == std::string_view::npos || !detail::parse_double(field.substr(eq + 1), v))
        throw Error(ErrorKind::InvalidConfig, where, "bad parameter '" + std::string(field) + "'");
      const auto key = field.substr(0, eq);
      if (key == "R") p.r = v;
      else if (key == "L") p.l = v;
      else if (key == "C") p.c = v;
      else if (key == "Rd") p.r_damp = v;
      else if (key == "Cd") p.c_damp = v;
      else throw Error(ErrorKind::InvalidConfig, where, "unknown parameter '" + std::string(key) + "'");
    }
  }
  return {kind, p};
}

}  // namespace vsc
