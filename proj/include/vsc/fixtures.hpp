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

// Reference converter designs. The 5/40/150 kW sets are sized for the
// smallest workable DC-link capacitor at 10 kHz switching; all three share
// V_i = 700 V and eta = 1 (R_CPL = -490000 / P_o). The grid is 230 V rms,
// 50 Hz. The 60 kW commercial unit lumps its LCL filter inductances into one
// L and keeps the measured capacitor ESR.

#pragma once

#include "vsc/model.hpp"

namespace vsc::fixtures {

inline ConverterDesign design_5kw() {
  ConverterDesign d;
  d.v_dc_nominal = 700.0;
  d.p_out = 5e3;
  d.filter_inductance = 1e-3;
  d.dc_capacitance = 24e-6;
  return d;
}

inline ConverterDesign design_40kw() {
  ConverterDesign d = design_5kw();
  d.p_out = 40e3;
  d.filter_inductance = 0.3e-3;
  d.dc_capacitance = 80e-6;
  return d;
}

inline ConverterDesign design_150kw() {
  ConverterDesign d = design_5kw();
  d.p_out = 150e3;
  d.filter_inductance = 0.06e-3;
  d.dc_capacitance = 270e-6;
  return d;
}

/// 60 kW commercial converter, operated at 21 kW.
inline ConverterDesign design_commercial() {
  ConverterDesign d = design_5kw();
  d.p_out = 21e3;
  d.filter_inductance = 0.5e-3 + 0.2e-3;
  d.dc_capacitance = 14.1e-3;
  d.dc_cap_esr = 0.005;
  return d;
}

inline ControllerSpec dq_pi(double k_p, double tau_i, Feedforward ff = Feedforward::ideal()) {
  return {Frame::DQ, PiRegulator{k_p, tau_i}, ff, 10e3};
}

inline ControllerSpec controller_5kw(Feedforward ff = Feedforward::ideal()) { return dq_pi(1.0, 14.3e-3, ff); }
inline ControllerSpec controller_40kw(Feedforward ff = Feedforward::ideal()) { return dq_pi(0.3, 4.3e-3, ff); }
inline ControllerSpec controller_150kw(Feedforward ff = Feedforward::ideal()) { return dq_pi(0.06, 8.75e-4, ff); }
inline ControllerSpec controller_commercial(Feedforward ff = Feedforward::ideal()) {
  return dq_pi(0.7, 14.3e-3, ff);
}

/// Current-loop crossover k_p / L: the 5 kW controller sits at 1000 rad/s
/// (about 160 Hz). The low-bandwidth variant scales k_p to 15 Hz and keeps
/// the integral time constant.
inline ControllerSpec controller_5kw_15hz(Feedforward ff = Feedforward::ideal()) {
  return dq_pi(kTwoPi * 15.0 * design_5kw().filter_inductance, 14.3e-3, ff);
}

/// Stationary-frame PR equivalent of the 5 kW PI: k_r = k_p / tau_i maps the
/// dq integrator onto a resonator at the grid frequency.
inline ControllerSpec controller_5kw_pr(Feedforward ff = Feedforward::ideal()) {
  PrRegulator pr;
  pr.k_p = 1.0;
  pr.k_r = 1.0 / 14.3e-3;
  pr.resonant_frequency = GridSpec{}.fundamental_angular_frequency;
  pr.damping = 0.0;
  return {Frame::AlphaBeta, pr, ff, 10e3};
}

}  // namespace vsc::fixtures
