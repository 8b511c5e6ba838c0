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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vsc/error.hpp"

namespace vsc {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double rad_to_deg(double r) { return r * 180.0 / kPi; }
inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double to_db(double magnitude) { return 20.0 * std::log10(magnitude); }

/// Wraps an angle in degrees to (-180, 180].
inline double wrap_deg(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w <= 0.0) w += 360.0;
  return w - 180.0;
}

/// Log-spaced frequency grid.
struct FrequencyGrid {
  double f_min = 1.0;
  double f_max = 1.0e3;
  std::size_t points = 2;

  // A single-point grid degenerates to {f_min}.
  void validate() const {
    const char* where = "model_core.FrequencyGrid";
    if (!(f_min > 0.0) || !std::isfinite(f_max))
      throw Error(ErrorKind::InvalidConfig, where, "f_min must be > 0 and f_max finite");
    if (points == 0) throw Error(ErrorKind::InvalidConfig, where, "points must be >= 1");
    if (points >= 2 && !(f_min < f_max))
      throw Error(ErrorKind::InvalidConfig, where, "f_min must be < f_max");
  }

  std::vector<double> frequencies() const {
    validate();
    std::vector<double> f(points);
    if (points == 1) {
      f[0] = f_min;
      return f;
    }
    const double lo = std::log10(f_min);
    const double step = (std::log10(f_max) - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k)
      f[k] = std::pow(10.0, lo + step * static_cast<double>(k));
    f.front() = f_min;
    f.back() = f_max;
    return f;
  }
};

/// Frequency-indexed complex impedance samples.
class ImpedanceCurve {
 public:
  ImpedanceCurve() = default;
  ImpedanceCurve(std::vector<double> frequencies, std::vector<Complex> values)
      : f_(std::move(frequencies)), z_(std::move(values)) {
    const char* where = "model_core.ImpedanceCurve";
    if (f_.size() != z_.size())
      throw Error(ErrorKind::InvalidConfig, where, "frequency/value length mismatch");
    for (std::size_t k = 0; k < f_.size(); ++k) {
      if (!(f_[k] > 0.0) || !std::isfinite(f_[k]))
        throw Error(ErrorKind::InvalidConfig, where, "frequencies must be positive and finite");
      if (k > 0 && !(f_[k] > f_[k - 1]))
        throw Error(ErrorKind::InvalidConfig, where, "frequencies must be strictly increasing",
                    f_[k]);
      if (!std::isfinite(z_[k].real()) || !std::isfinite(z_[k].imag()))
        throw Error(ErrorKind::InvalidConfig, where, "non-finite impedance sample", f_[k]);
    }
  }

  std::size_t size() const noexcept { return f_.size(); }
  bool empty() const noexcept { return f_.empty(); }
  std::span<const double> frequencies() const noexcept { return f_; }
  std::span<const Complex> values() const noexcept { return z_; }
  double frequency(std::size_t k) const { return f_.at(k); }
  Complex value(std::size_t k) const { return z_.at(k); }

  friend bool operator==(const ImpedanceCurve&, const ImpedanceCurve&) = default;

 private:
  std::vector<double> f_;
  std::vector<Complex> z_;
};

/// A sweep point that could not be evaluated. InfiniteImpedance faults are
/// open-circuit markers; everything else is a failed point.
struct PointFault {
  double frequency_hz = 0.0;
  ErrorKind kind = ErrorKind::SingularSystem;
  std::string message;
};

struct SweepResult {
  ImpedanceCurve curve;
  std::vector<PointFault> faults;

  bool has_open_circuit_in(double lo, double hi) const {
    return std::any_of(faults.begin(), faults.end(), [&](const PointFault& p) {
      return p.kind == ErrorKind::InfiniteImpedance && p.frequency_hz >= lo &&
             p.frequency_hz <= hi;
    });
  }
};

/// Standard +-180 degree jump removal, in degrees.
inline std::vector<double> unwrap_phase_deg(std::span<const Complex> z) {
  std::vector<double> out(z.size());
  double prev_raw = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double raw = rad_to_deg(std::arg(z[k]));
    out[k] = k == 0 ? raw : out[k - 1] + wrap_deg(raw - prev_raw);
    prev_raw = raw;
  }
  return out;
}

/// Interpolates a curve at arbitrary frequencies inside its range: log-magnitude
/// and unwrapped phase are linear in log-frequency. Exact sample frequencies
/// return the stored value untouched.
class CurveInterpolator {
 public:
  explicit CurveInterpolator(const ImpedanceCurve& curve)
      : curve_(curve), phase_(unwrap_phase_deg(curve.values())) {}

  Complex at(double f) const {
    const auto fs = curve_.frequencies();
    const auto zs = curve_.values();
    auto it = std::lower_bound(fs.begin(), fs.end(), f);
    if (it == fs.end() || (it == fs.begin() && *it != f))
      throw Error(ErrorKind::NoOverlap, "curve.interpolate", "frequency outside curve range", f);
    const std::size_t hi = static_cast<std::size_t>(it - fs.begin());
    if (*it == f) return zs[hi];
    const std::size_t lo = hi - 1;
    const double t = (std::log(f) - std::log(fs[lo])) / (std::log(fs[hi]) - std::log(fs[lo]));
    const double m0 = std::abs(zs[lo]);
    const double m1 = std::abs(zs[hi]);
    if (m0 == 0.0 || m1 == 0.0) return zs[lo] + t * (zs[hi] - zs[lo]);
    const double mag = std::exp(std::log(m0) + t * (std::log(m1) - std::log(m0)));
    const double ph = phase_[lo] + t * (phase_[hi] - phase_[lo]);
    return std::polar(mag, deg_to_rad(ph));
  }

 private:
  const ImpedanceCurve& curve_;
  std::vector<double> phase_;
};

/// Union of both sample sets restricted to the overlap of the two ranges.
inline std::vector<double> intersection_grid(const ImpedanceCurve& a, const ImpedanceCurve& b) {
  if (a.empty() || b.empty())
    throw Error(ErrorKind::NoOverlap, "curve.intersection_grid", "empty curve");
  const double lo = std::max(a.frequencies().front(), b.frequencies().front());
  const double hi = std::min(a.frequencies().back(), b.frequencies().back());
  if (lo > hi) throw Error(ErrorKind::NoOverlap, "curve.intersection_grid", "disjoint ranges");
  std::vector<double> out;
  for (const auto* c : {&a, &b})
    for (double f : c->frequencies())
      if (f >= lo && f <= hi) out.push_back(f);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline ImpedanceCurve resample(const ImpedanceCurve& c, std::span<const double> grid) {
  CurveInterpolator interp(c);
  std::vector<Complex> z;
  z.reserve(grid.size());
  for (double f : grid) z.push_back(interp.at(f));
  return ImpedanceCurve({grid.begin(), grid.end()}, std::move(z));
}

}  // namespace vsc
