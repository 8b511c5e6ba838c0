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

// Closed-loop small-signal input impedance of a DQ current-controlled VSC.
//
// The DC-voltage perturbation v^ drives four coupled responses, the AC
// currents (G_idvi, G_iqvi, A/V) and the duties (G_ddvi, G_dqvi, 1/V):
//
//   (sL + r) G_idvi = w0 L G_iqvi + V_i G_ddvi + D_d
//   (sL + r) G_iqvi = -w0 L G_idvi + V_i G_dqvi + D_q
//   V_i G_ddvi = -(D_d H(s) + Gc(s) G_idvi + w0 L G_iqvi)
//   V_i G_dqvi = -(D_q H(s) + Gc(s) G_iqvi - w0 L G_idvi)
//
// H(s) is the feedforward path (1 for an ideally sensed DC voltage) and Gc the
// current regulator. The bridge input impedance is then
//
//   Z_i = (2/3) / (I_d G_ddvi + D_d G_idvi + I_q G_dqvi + D_q G_iqvi)
//
// and the port impedance Z_iT is Z_i in parallel with the DC-link capacitor.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "vsc/curve.hpp"
#include "vsc/model.hpp"
#include "vsc/parallel.hpp"

namespace vsc {

template <std::size_t N>
using CMatrix = std::array<std::array<Complex, N>, N>;

template <std::size_t N>
using CVector = std::array<Complex, N>;

/// LU factorization with partial pivoting for small dense complex systems.
template <std::size_t N>
class DenseLu {
 public:
  explicit DenseLu(const CMatrix<N>& a) : lu_(a) {
    for (std::size_t i = 0; i < N; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t p = k;
      for (std::size_t i = k + 1; i < N; ++i)
        if (std::abs(lu_[i][k]) > std::abs(lu_[p][k])) p = i;
      if (p != k) {
        std::swap(lu_[p], lu_[k]);
        std::swap(perm_[p], perm_[k]);
      }
      if (lu_[k][k] == Complex{}) {
        singular_ = true;
        return;
      }
      for (std::size_t i = k + 1; i < N; ++i) {
        lu_[i][k] /= lu_[k][k];
        for (std::size_t j = k + 1; j < N; ++j) lu_[i][j] -= lu_[i][k] * lu_[k][j];
      }
    }
    // Reciprocal condition number in the infinity norm, from the explicit
    // inverse (cheap at this size).
    double norm_a = 0.0;
    for (const auto& row : a) {
      double sum = 0.0;
      for (const auto& v : row) sum += std::abs(v);
      norm_a = std::max(norm_a, sum);
    }
    CMatrix<N> inv{};
    for (std::size_t j = 0; j < N; ++j) {
      CVector<N> e{};
      e[j] = 1.0;
      const auto col = solve(e);
      for (std::size_t i = 0; i < N; ++i) inv[i][j] = col[i];
    }
    double norm_inv = 0.0;
    for (const auto& row : inv) {
      double sum = 0.0;
      for (const auto& v : row) sum += std::abs(v);
      norm_inv = std::max(norm_inv, sum);
    }
    rcond_ = (norm_a > 0.0 && std::isfinite(norm_inv)) ? 1.0 / (norm_a * norm_inv) : 0.0;
  }

  bool singular() const { return singular_; }
  double rcond() const { return singular_ ? 0.0 : rcond_; }

  CVector<N> solve(const CVector<N>& b) const {
    CVector<N> x{};
    for (std::size_t i = 0; i < N; ++i) {
      Complex acc = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) acc -= lu_[i][j] * x[j];
      x[i] = acc;
    }
    for (std::size_t i = N; i-- > 0;) {
      Complex acc = x[i];
      for (std::size_t j = i + 1; j < N; ++j) acc -= lu_[i][j] * x[j];
      x[i] = acc / lu_[i][i];
    }
    return x;
  }

 private:
  CMatrix<N> lu_;
  std::array<std::size_t, N> perm_{};
  bool singular_ = false;
  double rcond_ = 0.0;
};

/// Below this reciprocal condition number the coupled system is treated as
/// singular.
inline constexpr double kSingularRcond = 1e-13;

struct CoupledTfs {
  Complex g_idvi;  // A/V
  Complex g_iqvi;  // A/V
  Complex g_ddvi;  // 1/V
  Complex g_dqvi;  // 1/V
};

/// The coupled system as A x = b with x = [G_idvi, G_iqvi, G_ddvi, G_dqvi].
struct CoupledSystem {
  CMatrix<4> a;
  CVector<4> b;
};

inline CoupledSystem build_coupled_system(const ConverterDesign& design, const OperatingPoint& op,
                                          const ControllerSpec& ctrl, Complex s) {
  const double v_i = design.v_dc_nominal;
  const double w_l = design.grid.fundamental_angular_frequency * design.filter_inductance;
  const Complex z_l = s * design.filter_inductance + design.filter_resistance;
  const Complex gc = regulator_tf(ctrl.regulator, s);
  const Complex h = feedforward_tf(ctrl.feedforward, s);
  CoupledSystem sys;
  sys.a = {{{z_l, -w_l, -v_i, 0.0},
            {w_l, z_l, 0.0, -v_i},
            {gc, w_l, v_i, 0.0},
            {-w_l, gc, 0.0, v_i}}};
  sys.b = {op.d_d, op.d_q, -op.d_d * h, -op.d_q * h};
  return sys;
}

/// Largest per-equation residual |A x - b|, scaled row-wise by
/// sum_j |a_ij| max|x| + |b_i| (normwise backward error). Rows whose terms
/// all vanish, as at zero power, then stay at roundoff level.
inline double coupled_relative_residual(const CoupledSystem& sys, const CVector<4>& x) {
  double x_max = 0.0;
  for (const auto& v : x) x_max = std::max(x_max, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    Complex r = -sys.b[i];
    double scale = std::abs(sys.b[i]);
    for (std::size_t j = 0; j < 4; ++j) {
      r += sys.a[i][j] * x[j];
      scale += std::abs(sys.a[i][j]) * x_max;
    }
    if (scale > 0.0) worst = std::max(worst, std::abs(r) / scale);
  }
  return worst;
}

inline CoupledTfs solve_coupled_tfs(const ConverterDesign& design, const OperatingPoint& op,
                                    const ControllerSpec& ctrl, Complex s) {
  const char* where = "analytic_impedance.solve_coupled_tfs";
  const double f_hz = std::abs(s.imag()) / kTwoPi;
  if (ctrl.frame != Frame::DQ)
    throw Error(ErrorKind::UnsupportedFrame, where, "analytic impedance requires the DQ frame");
  if (s == Complex{}) throw Error(ErrorKind::DegenerateFrequency, where, "s = 0", 0.0);

  const CoupledSystem sys = build_coupled_system(design, op, ctrl, s);
  const DenseLu<4> lu(sys.a);
  if (lu.singular() || lu.rcond() < kSingularRcond)
    throw Error(ErrorKind::SingularSystem, where, "coupled 4x4 system is numerically singular", f_hz);
  CVector<4> x = lu.solve(sys.b);
  for (const auto& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorKind::SingularSystem, where, "non-finite solution", f_hz);
  if (coupled_relative_residual(sys, x) >= 1e-10)
    throw Error(ErrorKind::SingularSystem, where, "residual check failed", f_hz);
  // Components under the solver's error bound are zero (ideal feedforward
  // cancels the current responses exactly).
  double x_max = 0.0;
  for (const auto& v : x) x_max = std::max(x_max, std::abs(v));
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() / lu.rcond() * x_max;
  for (auto& v : x)
    if (std::abs(v) < floor) v = Complex{};
  return {x[0], x[1], x[2], x[3]};
}

/// Z_i = (2/3) / (I_d G_ddvi + D_d G_idvi + I_q G_dqvi + D_q G_iqvi).
/// A vanishing denominator is an open circuit (InfiniteImpedance).
inline Complex inverter_input_impedance(const CoupledTfs& tfs, const OperatingPoint& op) {
  const Complex terms[] = {op.i_d * tfs.g_ddvi, op.d_d * tfs.g_idvi, op.i_q * tfs.g_dqvi,
                           op.d_q * tfs.g_iqvi};
  Complex den{};
  double scale = 0.0;
  for (const auto& t : terms) {
    den += t;
    scale += std::abs(t);
  }
  if (!(std::abs(den) > 1e-15 * scale) || scale == 0.0)
    throw Error(ErrorKind::InfiniteImpedance, "analytic_impedance.inverter_input_impedance",
                "bridge draws no small-signal current (open circuit)");
  return (2.0 / 3.0) / den;
}

inline Complex capacitor_impedance(double c_i, double esr, Complex s) {
  if (s == Complex{})
    throw Error(ErrorKind::DegenerateFrequency, "analytic_impedance.capacitor_impedance",
                "capacitor is open at s = 0", 0.0);
  return esr + 1.0 / (s * c_i);
}

/// Parallel combination of the bridge and capacitor branches.
inline Complex total_input_impedance(Complex z_i, Complex z_ci) {
  const Complex sum = z_ci + z_i;
  if (!(std::abs(sum) > 1e-15 * (std::abs(z_i) + std::abs(z_ci))))
    throw Error(ErrorKind::ResonantSingularity, "analytic_impedance.total_input_impedance",
                "parallel resonance pole");
  return z_ci * z_i / sum;
}

struct AnalyticSweep {
  SweepResult inverter;  // Z_i, open-circuit markers where it is infinite
  SweepResult total;     // Z_iT
};

namespace detail {

struct AnalyticPoint {
  std::optional<Complex> z_i;
  std::optional<Complex> z_it;
  std::optional<PointFault> fault_i;
  std::optional<PointFault> fault_it;
};

inline SweepResult assemble(std::span<const double> f,
                            const std::vector<std::optional<Complex>>& z,
                            const std::vector<std::optional<PointFault>>& faults) {
  std::vector<double> ff;
  std::vector<Complex> zz;
  SweepResult out;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (z[k]) {
      ff.push_back(f[k]);
      zz.push_back(*z[k]);
    }
    if (faults[k]) out.faults.push_back(*faults[k]);
  }
  out.curve = ImpedanceCurve(std::move(ff), std::move(zz));
  return out;
}

}  // namespace detail

/// Z_i and Z_iT on a frequency grid. Per-point failures become faults
/// attributed to their frequency; the sweep itself only throws for invalid
/// inputs.
inline AnalyticSweep sweep_analytic(const ConverterDesign& design, const ControllerSpec& ctrl,
                                    const FrequencyGrid& grid, unsigned jobs = 1) {
  design.validate();
  ctrl.validate();
  if (ctrl.frame != Frame::DQ)
    throw Error(ErrorKind::UnsupportedFrame, "analytic_impedance.sweep_analytic",
                "analytic impedance requires the DQ frame");
  const OperatingPoint op = solve_operating_point(design);
  const std::vector<double> f = grid.frequencies();

  auto points = parallel_map(f.size(), jobs, [&](std::size_t k) {
    detail::AnalyticPoint p;
    const Complex s{0.0, kTwoPi * f[k]};
    std::optional<Complex> z_i;
    try {
      z_i = inverter_input_impedance(solve_coupled_tfs(design, op, ctrl, s), op);
      p.z_i = z_i;
    } catch (const Error& e) {
      p.fault_i = PointFault{f[k], e.kind(), e.what()};
      if (e.kind() != ErrorKind::InfiniteImpedance) {
        p.fault_it = p.fault_i;
        return p;
      }
    }
    try {
      const Complex z_c = capacitor_impedance(design.dc_capacitance, design.dc_cap_esr, s);
      p.z_it = z_i ? total_input_impedance(*z_i, z_c) : z_c;
    } catch (const Error& e) {
      p.fault_it = PointFault{f[k], e.kind(), e.what()};
    }
    return p;
  });

  std::vector<std::optional<Complex>> zi(f.size()), zit(f.size());
  std::vector<std::optional<PointFault>> fi(f.size()), fit(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    zi[k] = points[k].z_i;
    zit[k] = points[k].z_it;
    fi[k] = points[k].fault_i;
    fit[k] = points[k].fault_it;
  }
  return {detail::assemble(f, zi, fi), detail::assemble(f, zit, fit)};
}

}  // namespace vsc
