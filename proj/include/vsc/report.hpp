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

#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vsc/curve.hpp"
#include "vsc/io.hpp"

namespace vsc {

struct FrequencyBand {
  double f_lo = 0.0;
  double f_hi = 0.0;
};

struct BandDeviation {
  FrequencyBand band;
  std::size_t points = 0;
  double max_mag_dev_db = std::numeric_limits<double>::quiet_NaN();
  double max_phase_dev_deg = std::numeric_limits<double>::quiet_NaN();
  double frequency_of_worst_mag = std::numeric_limits<double>::quiet_NaN();
  double frequency_of_worst_phase = std::numeric_limits<double>::quiet_NaN();
};

struct DeviationMetrics {
  double max_mag_dev_db = 0.0;
  double max_phase_dev_deg = 0.0;
  double frequency_of_worst_mag = 0.0;
  double frequency_of_worst_phase = 0.0;
  std::vector<BandDeviation> per_band;
};

/// Bode-style distance between two curves on their common grid: magnitude in
/// dB and phase in degrees (difference taken modulo 360, so unwrapping
/// offsets between the curves do not count).
inline DeviationMetrics deviation_metrics(const ImpedanceCurve& a, const ImpedanceCurve& b,
                                          std::span<const FrequencyBand> bands = {}) {
  std::vector<double> grid;
  try {
    grid = intersection_grid(a, b);
  } catch (const Error& e) {
    throw Error(ErrorKind::NoOverlap, "compare_report.deviation_metrics", e.what());
  }
  const ImpedanceCurve ra = resample(a, grid);
  const ImpedanceCurve rb = resample(b, grid);
  std::vector<double> mag(grid.size()), phase(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    mag[k] = std::abs(to_db(std::abs(ra.value(k))) - to_db(std::abs(rb.value(k))));
    phase[k] = std::abs(wrap_deg(rad_to_deg(std::arg(ra.value(k)) - std::arg(rb.value(k)))));
  }
  DeviationMetrics m;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (mag[k] > m.max_mag_dev_db) {
      m.max_mag_dev_db = mag[k];
      m.frequency_of_worst_mag = grid[k];
    }
    if (phase[k] > m.max_phase_dev_deg) {
      m.max_phase_dev_deg = phase[k];
      m.frequency_of_worst_phase = grid[k];
    }
  }
  if (m.frequency_of_worst_mag == 0.0) m.frequency_of_worst_mag = grid.front();
  if (m.frequency_of_worst_phase == 0.0) m.frequency_of_worst_phase = grid.front();
  for (const auto& band : bands) {
    BandDeviation bd;
    bd.band = band;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] < band.f_lo || grid[k] > band.f_hi) continue;
      if (bd.points++ == 0) {
        bd.max_mag_dev_db = -1.0;
        bd.max_phase_dev_deg = -1.0;
      }
      if (mag[k] > bd.max_mag_dev_db) {
        bd.max_mag_dev_db = mag[k];
        bd.frequency_of_worst_mag = grid[k];
      }
      if (phase[k] > bd.max_phase_dev_deg) {
        bd.max_phase_dev_deg = phase[k];
        bd.frequency_of_worst_phase = grid[k];
      }
    }
    m.per_band.push_back(bd);
  }
  return m;
}

inline void emit_csv(const ImpedanceCurve& curve, const std::filesystem::path& path) {
  if (curve.empty())
    throw Error(ErrorKind::IoFailure, "compare_report.emit_csv", "refusing to write an empty curve");
  atomic_write_file(path, curve_to_csv(curve));
}

struct BodeSeries {
  const ImpedanceCurve* curve = nullptr;
  std::string label;
  bool markers = false;  // draw sample markers in addition to the line
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

/// Two stacked Bode axes (|Z| in dB ohm, phase in degrees) over log
/// frequency. Output bytes depend only on the inputs.
inline std::string bode_svg(std::span<const BodeSeries> series, std::string_view title = {}) {
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  const double width = 820, height = 640, left = 80, right = 170, top = 40, gap = 50;
  const double plot_w = width - left - right;
  const double plot_h = (height - top - gap - 50) / 2.0;

  double f_lo = std::numeric_limits<double>::infinity(), f_hi = 0.0;
  double m_lo = std::numeric_limits<double>::infinity(), m_hi = -m_lo;
  double p_lo = m_lo, p_hi = -m_lo;
  std::vector<std::vector<double>> phases;
  for (const auto& s : series) {
    const auto& c = *s.curve;
    phases.push_back(unwrap_phase_deg(c.values()));
    for (std::size_t k = 0; k < c.size(); ++k) {
      f_lo = std::min(f_lo, c.frequency(k));
      f_hi = std::max(f_hi, c.frequency(k));
      const double db = to_db(std::abs(c.value(k)));
      m_lo = std::min(m_lo, db);
      m_hi = std::max(m_hi, db);
      p_lo = std::min(p_lo, phases.back()[k]);
      p_hi = std::max(p_hi, phases.back()[k]);
    }
  }
  const double d_lo = std::floor(std::log10(f_lo));
  double d_hi = std::ceil(std::log10(f_hi));
  if (d_hi <= d_lo) d_hi = d_lo + 1.0;
  m_lo = 10.0 * std::floor(m_lo / 10.0);
  m_hi = 10.0 * std::ceil(m_hi / 10.0);
  if (m_hi <= m_lo) m_hi = m_lo + 10.0;
  p_lo = 45.0 * std::floor(p_lo / 45.0);
  p_hi = 45.0 * std::ceil(p_hi / 45.0);
  if (p_hi <= p_lo) p_hi = p_lo + 45.0;

  auto x_of = [&](double f) { return left + (std::log10(f) - d_lo) / (d_hi - d_lo) * plot_w; };
  const double top2 = top + plot_h + gap;
  auto y_mag = [&](double db) { return top + (m_hi - db) / (m_hi - m_lo) * plot_h; };
  auto y_ph = [&](double p) { return top2 + (p_hi - p) / (p_hi - p_lo) * plot_h; };

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + detail::fmt("%.0f", width) +
       "\" height=\"" + detail::fmt("%.0f", height) + "\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    o += "<text x=\"" + detail::fmt("%.1f", left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::xml_escape(title) + "</text>\n";

  auto axis = [&](double y0, double lo, double hi, double step, const char* unit, auto y_of) {
    o += "<g class=\"axis\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect x=\"" + detail::fmt("%.1f", left) + "\" y=\"" + detail::fmt("%.1f", y0) + "\" width=\"" +
         detail::fmt("%.1f", plot_w) + "\" height=\"" + detail::fmt("%.1f", plot_h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = d_lo; d <= d_hi + 1e-9; d += 1.0) {
      const double x = x_of(std::pow(10.0, d));
      o += "<line x1=\"" + detail::fmt("%.2f", x) + "\" y1=\"" + detail::fmt("%.2f", y0) + "\" x2=\"" +
           detail::fmt("%.2f", x) + "\" y2=\"" + detail::fmt("%.2f", y0 + plot_h) +
           "\" stroke=\"#cccccc\"/>\n";
      o += "<text x=\"" + detail::fmt("%.2f", x) + "\" y=\"" + detail::fmt("%.2f", y0 + plot_h + 14) +
           "\" text-anchor=\"middle\">1e" + detail::fmt("%.0f", d) + "</text>\n";
    }
    for (double v = lo; v <= hi + 1e-9; v += step) {
      const double y = y_of(v);
      o += "<line x1=\"" + detail::fmt("%.2f", left) + "\" y1=\"" + detail::fmt("%.2f", y) + "\" x2=\"" +
           detail::fmt("%.2f", left + plot_w) + "\" y2=\"" + detail::fmt("%.2f", y) +
           "\" stroke=\"#eeeeee\"/>\n";
      o += "<text x=\"" + detail::fmt("%.2f", left - 6) + "\" y=\"" + detail::fmt("%.2f", y + 4) +
           "\" text-anchor=\"end\">" + detail::fmt("%g", v) + "</text>\n";
    }
    o += "<text x=\"16\" y=\"" + detail::fmt("%.2f", y0 + plot_h / 2) + "\">" + unit + "</text>\n";
    o += "</g>\n";
  };
  const double m_step = std::max(10.0, 10.0 * std::ceil((m_hi - m_lo) / 80.0));
  const double p_step = std::max(45.0, 45.0 * std::ceil((p_hi - p_lo) / 360.0));
  axis(top, m_lo, m_hi, m_step, "dB&#937;", y_mag);
  axis(top2, p_lo, p_hi, p_step, "deg", y_ph);
  o += "<text x=\"" + detail::fmt("%.2f", left + plot_w / 2) + "\" y=\"" +
       detail::fmt("%.2f", height - 8) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">frequency [Hz]</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& c = *series[i].curve;
    const char* color = kColors[i % std::size(kColors)];
    std::string mag_pts, ph_pts;
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double x = x_of(c.frequency(k));
      mag_pts += detail::fmt("%.2f", x) + "," + detail::fmt("%.2f", y_mag(to_db(std::abs(c.value(k))))) + " ";
      ph_pts += detail::fmt("%.2f", x) + "," + detail::fmt("%.2f", y_ph(phases[i][k])) + " ";
    }
    if (!mag_pts.empty()) mag_pts.pop_back();
    if (!ph_pts.empty()) ph_pts.pop_back();
    o += "<polyline class=\"magnitude\" fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + mag_pts + "\"/>\n";
    o += "<polyline class=\"phase\" fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + ph_pts + "\"/>\n";
    if (series[i].markers) {
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double x = x_of(c.frequency(k));
        o += "<circle cx=\"" + detail::fmt("%.2f", x) + "\" cy=\"" +
             detail::fmt("%.2f", y_mag(to_db(std::abs(c.value(k))))) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
        o += "<circle cx=\"" + detail::fmt("%.2f", x) + "\" cy=\"" + detail::fmt("%.2f", y_ph(phases[i][k])) +
             "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
      }
    }
    const double ly = top + 14.0 + 18.0 * static_cast<double>(i);
    const double lx = left + plot_w + 12.0;
    o += "<line x1=\"" + detail::fmt("%.2f", lx) + "\" y1=\"" + detail::fmt("%.2f", ly - 4) + "\" x2=\"" +
         detail::fmt("%.2f", lx + 20) + "\" y2=\"" + detail::fmt("%.2f", ly - 4) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + detail::fmt("%.2f", lx + 26) + "\" y=\"" + detail::fmt("%.2f", ly) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::xml_escape(series[i].label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

inline void emit_bode_svg(std::span<const BodeSeries> series, const std::filesystem::path& path,
                          std::string_view title = {}) {
  if (series.empty())
    throw Error(ErrorKind::IoFailure, "compare_report.emit_bode_svg", "no curves to plot");
  for (const auto& s : series)
    if (s.curve == nullptr || s.curve->empty())
      throw Error(ErrorKind::IoFailure, "compare_report.emit_bode_svg",
                  "refusing to plot an empty curve '" + s.label + "'");
  atomic_write_file(path, bode_svg(series, title));
}

}  // namespace vsc
