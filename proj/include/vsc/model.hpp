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

// Converter and controller description, frame transforms and the steady-state
// operating point of a grid-tie two-level VSC.
//
// Conventions used throughout the library:
//  * amplitude-invariant Clarke/Park, so P = 3/2 (v_d i_d + v_q i_q);
//  * the d axis is aligned with the grid voltage (v_gq = 0), ideal sync;
//  * per-axis converter voltage is d * v_dc and the DC-side bridge current is
//    3/2 (d_d i_d + d_q i_q);
//  * AC current is positive from the converter into the grid.

#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <type_traits>
#include <string>
#include <variant>

#include "vsc/curve.hpp"
#include "vsc/error.hpp"

namespace vsc {

struct GridSpec {
  double phase_voltage_amplitude = 230.0 * std::numbers::sqrt2;  // peak, = v_gd
  double fundamental_angular_frequency = kTwoPi * 50.0;          // rad/s

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct ConverterDesign {
  double v_dc_nominal = 700.0;        // V_i [V]
  double p_out = 0.0;                 // P_o [W]
  double efficiency = 1.0;            // eta
  double filter_inductance = 1e-3;    // L [H]
  double filter_resistance = 0.0;     // r [ohm]
  double dc_capacitance = 24e-6;      // C_i [F]
  double dc_cap_esr = 0.0;            // [ohm]
  double switching_frequency = 10e3;  // [Hz]
  GridSpec grid;

  friend bool operator==(const ConverterDesign&, const ConverterDesign&) = default;

  void validate() const {
    const char* where = "model_core.ConverterDesign";
    auto need = [&](bool ok, const char* field, const char* rule) {
      if (!ok) throw Error(ErrorKind::InvalidDesign, where, std::string("design.") + field + " " + rule);
    };
    need(v_dc_nominal > 0.0 && std::isfinite(v_dc_nominal), "v_dc_nominal", "must be > 0");
    need(p_out >= 0.0 && std::isfinite(p_out), "p_out", "must be >= 0");
    need(efficiency > 0.0 && efficiency <= 1.0, "efficiency", "must be in (0, 1]");
    need(filter_inductance > 0.0 && std::isfinite(filter_inductance), "filter_inductance", "must be > 0");
    need(filter_resistance >= 0.0 && std::isfinite(filter_resistance), "filter_resistance", "must be >= 0");
    need(dc_capacitance > 0.0 && std::isfinite(dc_capacitance), "dc_capacitance", "must be > 0");
    need(dc_cap_esr >= 0.0 && std::isfinite(dc_cap_esr), "dc_cap_esr", "must be >= 0");
    need(switching_frequency > 0.0 && std::isfinite(switching_frequency), "switching_frequency", "must be > 0");
    need(grid.phase_voltage_amplitude > 0.0 && std::isfinite(grid.phase_voltage_amplitude),
         "grid.phase_voltage_amplitude", "must be > 0");
    need(grid.fundamental_angular_frequency > 0.0 && std::isfinite(grid.fundamental_angular_frequency),
         "grid.fundamental_angular_frequency", "must be > 0");
  }
};

enum class Frame { DQ, AlphaBeta };

/// Series PI: k_p (1 + 1/(tau_i s)). tau_i = +inf gives a pure P regulator.
struct PiRegulator {
  double k_p = 1.0;
  double tau_i = 14.3e-3;

  friend bool operator==(const PiRegulator&, const PiRegulator&) = default;
};

/// k_p + k_r s / (s^2 + 2 w_c s + w_r^2); w_c = 0 is the ideal resonator.
struct PrRegulator {
  double k_p = 1.0;
  double k_r = 1.0;                   // [1/s]
  double resonant_frequency = kTwoPi * 50.0;  // w_r [rad/s]
  double damping = 0.0;               // w_c [rad/s]

  friend bool operator==(const PrRegulator&, const PrRegulator&) = default;
};

using Regulator = std::variant<PiRegulator, PrRegulator>;

/// How the DC voltage enters the duty computation d = u / v_ff.
struct Feedforward {
  enum class Kind { Ideal, Constant, Filtered };
  Kind kind = Kind::Ideal;
  double bandwidth_hz = 0.0;  // only for Filtered

  static Feedforward ideal() { return {Kind::Ideal, 0.0}; }
  static Feedforward constant() { return {Kind::Constant, 0.0}; }
  static Feedforward filtered(double bw_hz) { return {Kind::Filtered, bw_hz}; }

  friend bool operator==(const Feedforward&, const Feedforward&) = default;
};

inline std::string to_string(const Feedforward& ff) {
  switch (ff.kind) {
    case Feedforward::Kind::Ideal: return "ideal";
    case Feedforward::Kind::Constant: return "constant";
    case Feedforward::Kind::Filtered: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "filtered(%g Hz)", ff.bandwidth_hz);
      return buf;
    }
  }
  return "?";
}

struct ControllerSpec {
  Frame frame = Frame::DQ;
  Regulator regulator = PiRegulator{};
  Feedforward feedforward;
  double control_rate = 10e3;  // f_ctrl [Hz]

  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;

  void validate() const {
    const char* where = "model_core.ControllerSpec";
    if (const auto* pi = std::get_if<PiRegulator>(&regulator)) {
      if (!std::isfinite(pi->k_p))
        throw Error(ErrorKind::InvalidConfig, where, "controller.regulator.k_p must be finite");
      if (!(pi->tau_i > 0.0))
        throw Error(ErrorKind::InvalidConfig, where, "controller.regulator.tau_i must be > 0");
    } else {
      const auto& pr = std::get<PrRegulator>(regulator);
      if (!std::isfinite(pr.k_p) || !std::isfinite(pr.k_r))
        throw Error(ErrorKind::InvalidConfig, where, "controller.regulator gains must be finite");
      if (!(pr.resonant_frequency > 0.0))
        throw Error(ErrorKind::InvalidConfig, where,
                    "controller.regulator.resonant_frequency must be > 0");
      if (!(pr.damping >= 0.0))
        throw Error(ErrorKind::InvalidConfig, where, "controller.regulator.damping must be >= 0");
    }
    if (feedforward.kind == Feedforward::Kind::Filtered && !(feedforward.bandwidth_hz > 0.0))
      throw Error(ErrorKind::InvalidConfig, where,
                  "controller.feedforward.bandwidth_hz must be > 0");
    if (!(control_rate > 0.0) || !std::isfinite(control_rate))
      throw Error(ErrorKind::InvalidConfig, where, "controller.control_rate must be > 0");
  }
};

/// Steady-state quantities the small-signal model is linearized around.
struct OperatingPoint {
  double i_d = 0.0;
  double i_q = 0.0;
  double d_d = 0.0;
  double d_q = 0.0;
};

/// Unity power factor operating point: I_q = 0, I_d = 2 P_o / (3 v_gd), duties
/// from the steady-state filter KVL.
inline OperatingPoint solve_operating_point(const ConverterDesign& design) {
  design.validate();
  const double v_gd = design.grid.phase_voltage_amplitude;
  const double w_l = design.grid.fundamental_angular_frequency * design.filter_inductance;
  OperatingPoint op;
  op.i_d = 2.0 * design.p_out / (3.0 * v_gd);
  op.i_q = 0.0;
  op.d_d = (v_gd + design.filter_resistance * op.i_d - w_l * op.i_q) / design.v_dc_nominal;
  op.d_q = (design.filter_resistance * op.i_q + w_l * op.i_d) / design.v_dc_nominal;
  const double m = std::hypot(op.d_d, op.d_q);
  if (m > 1.0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "duty magnitude %.6g exceeds 1", m);
    throw Error(ErrorKind::InfeasibleOperatingPoint, "model_core.solve_operating_point", buf);
  }
  return op;
}

inline Complex pi_tf(const PiRegulator& pi, Complex s) {
  if (s == Complex{})
    throw Error(ErrorKind::DegenerateFrequency, "model_core.pi_tf", "integrator pole at s = 0", 0.0);
  return pi.k_p * (1.0 + 1.0 / (pi.tau_i * s));
}

inline Complex pr_tf(const PrRegulator& pr, Complex s) {
  const double w = pr.resonant_frequency;
  const Complex den = s * s + 2.0 * pr.damping * s + w * w;
  if (den == Complex{})
    throw Error(ErrorKind::DegenerateFrequency, "model_core.pr_tf", "evaluated on the resonant pole",
                std::abs(s.imag()) / kTwoPi);
  return pr.k_p + pr.k_r * s / den;
}

inline Complex regulator_tf(const Regulator& reg, Complex s) {
  return std::visit(
      [&](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, PiRegulator>)
          return pi_tf(r, s);
        else
          return pr_tf(r, s);
      },
      reg);
}

/// Transfer from the DC-voltage perturbation to the feedforward divisor.
inline Complex feedforward_tf(const Feedforward& ff, Complex s) {
  switch (ff.kind) {
    case Feedforward::Kind::Ideal: return 1.0;
    case Feedforward::Kind::Constant: return 0.0;
    case Feedforward::Kind::Filtered: return 1.0 / (1.0 + s / (kTwoPi * ff.bandwidth_hz));
  }
  return 1.0;
}

struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;
};

struct DqPair {
  double d = 0.0;
  double q = 0.0;
};

struct Abc {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

inline AlphaBeta clarke(double a, double b, double c) {
  return {(2.0 * a - b - c) / 3.0, (b - c) / std::numbers::sqrt3};
}

/// Zero-sequence free inverse.
inline Abc inverse_clarke(AlphaBeta ab) {
  const double h = 0.5 * std::numbers::sqrt3 * ab.beta;
  return {ab.alpha, -0.5 * ab.alpha + h, -0.5 * ab.alpha - h};
}

inline DqPair park(AlphaBeta ab, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {ab.alpha * c + ab.beta * s, -ab.alpha * s + ab.beta * c};
}

inline AlphaBeta inverse_park(DqPair dq, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {dq.d * c - dq.q * s, dq.d * s + dq.q * c};
}

}  // namespace vsc
