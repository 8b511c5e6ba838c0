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

// Reduced-order input impedance: a constant power load R_CPL = -V_i^2 eta / P_o
// in parallel with the DC-link capacitor, Z = R_CPL / (1 + R_CPL C_i s).

#pragma once

#include <optional>

#include "vsc/analytic.hpp"
#include "vsc/curve.hpp"
#include "vsc/model.hpp"

namespace vsc {

struct ReducedModel {
  double r_cpl = -98.0;           // ohm, negative
  double c_i = 24e-6;             // F
  std::optional<double> esr;      // capacitor ESR; absent = ideal capacitor

  void validate() const {
    if (!(r_cpl < 0.0) || !(c_i > 0.0) || (esr && !(*esr >= 0.0)))
      throw Error(ErrorKind::InvalidConfig, "reduced_model.ReducedModel",
                  "need r_cpl < 0, c_i > 0, esr >= 0");
  }
};

inline double r_cpl(const ConverterDesign& design) {
  design.validate();
  if (design.p_out == 0.0)
    throw Error(ErrorKind::ZeroPower, "reduced_model.r_cpl",
                "no constant-power resistance at P_o = 0");
  return -design.v_dc_nominal * design.v_dc_nominal * design.efficiency / design.p_out;
}

/// The ESR is carried over only when requested (it is not part of the
/// classic first-order model).
inline ReducedModel reduced_model_for(const ConverterDesign& design, bool with_esr = false) {
  ReducedModel m{r_cpl(design), design.dc_capacitance, std::nullopt};
  if (with_esr) m.esr = design.dc_cap_esr;
  return m;
}

inline Complex reduced_total_impedance(const ReducedModel& m, Complex s) {
  m.validate();
  const char* where = "reduced_model.reduced_total_impedance";
  if (m.esr) {
    if (s == Complex{}) return m.r_cpl;
    const Complex z_c = *m.esr + 1.0 / (s * m.c_i);
    const Complex sum = z_c + m.r_cpl;
    if (!(std::abs(sum) > 1e-15 * (std::abs(z_c) + std::abs(m.r_cpl))))
      throw Error(ErrorKind::ResonantSingularity, where, "parallel resonance pole",
                  std::abs(s.imag()) / kTwoPi);
    return m.r_cpl * z_c / sum;
  }
  const Complex den = 1.0 + m.r_cpl * m.c_i * s;
  if (!(std::abs(den) > 1e-15))
    throw Error(ErrorKind::ResonantSingularity, where, "pole of the reduced model",
                std::abs(s.imag()) / kTwoPi);
  return m.r_cpl / den;
}

inline ImpedanceCurve sweep_reduced(const ReducedModel& m, const FrequencyGrid& grid) {
  const auto f = grid.frequencies();
  std::vector<Complex> z;
  z.reserve(f.size());
  for (double fk : f) z.push_back(reduced_total_impedance(m, {0.0, kTwoPi * fk}));
  return ImpedanceCurve(f, std::move(z));
}

}  // namespace vsc
