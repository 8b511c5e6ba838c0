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

// Switching-averaged time-domain model of the grid-tie VSC fed from a
// perturbable DC source through a series resistance.
//
// The plant is integrated with fixed-step RK4 between controller samples; the
// controller runs at control_rate and its voltage command is held over each
// period. Constant and filtered feedforward divide the command once per
// sample, so the duty is held as well. Ideal feedforward divides by the
// instantaneous port voltage, so the bridge reproduces the held command
// exactly whatever the DC voltage does within the period. The
// plant is written in the controller's frame (rotating dq or stationary
// alpha-beta); both describe the same balanced three-phase circuit on an
// ideal grid.

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "vsc/model.hpp"

namespace vsc {

struct Injection {
  double frequency = 100.0;  // Hz
  double amplitude = 7.0;    // V peak

  friend bool operator==(const Injection&, const Injection&) = default;
};

struct SourceSpec {
  double v_nominal = 700.0;
  double series_resistance = 0.05;
  std::optional<Injection> injection;

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;

  static SourceSpec for_design(const ConverterDesign& design) {
    return {design.v_dc_nominal, 0.05, std::nullopt};
  }

  void validate() const {
    const char* where = "averaged_sim.SourceSpec";
    if (!(v_nominal > 0.0) || !std::isfinite(v_nominal))
      throw Error(ErrorKind::InvalidConfig, where, "source.v_nominal must be > 0");
    if (!(series_resistance > 0.0) || !std::isfinite(series_resistance))
      throw Error(ErrorKind::InvalidConfig, where, "source.series_resistance must be > 0");
    if (injection) {
      if (!(injection->frequency > 0.0) || !std::isfinite(injection->frequency))
        throw Error(ErrorKind::InvalidConfig, where, "source.injection.frequency must be > 0");
      if (!(injection->amplitude >= 0.0) || !(injection->amplitude < 0.2 * v_nominal))
        throw Error(ErrorKind::InvalidConfig, where,
                    "source.injection.amplitude must be in [0, 0.2 v_nominal)");
    }
  }

  double voltage(double t) const {
    if (!injection) return v_nominal;
    return v_nominal + injection->amplitude * std::sin(kTwoPi * injection->frequency * t);
  }
};

struct SimConfig {
  double plant_step = 2e-6;            // dt [s]
  double duration = 0.5;               // [s]
  std::size_t record_decimation = 5;
  bool start_at_operating_point = true;  // else starts from rest

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Recorded signals. Currents and duties are always stored in the dq frame
/// (alpha-beta runs are rotated with the ideal grid angle). Energies are
/// cumulative from t = 0 and integrated alongside the plant.
struct SimTrace {
  Frame frame = Frame::DQ;
  double sample_period = 0.0;
  std::vector<double> time;
  std::vector<double> v_dc;       // port voltage
  std::vector<double> i_dc_port;  // source current into the converter port
  std::vector<double> i_d;
  std::vector<double> i_q;
  std::vector<double> duty_d;
  std::vector<double> duty_q;
  std::vector<double> v_cap;
  std::vector<double> e_source;   // J delivered by the DC source
  std::vector<double> e_grid;     // J delivered to the grid
  std::vector<double> e_loss;     // J dissipated in source, ESR and filter resistances

  std::size_t size() const { return time.size(); }
  double sample_rate() const { return 1.0 / sample_period; }
};

namespace detail {

/// Discrete PI, backward Euler integral.
class DiscretePi {
 public:
  DiscretePi(const PiRegulator& pi, double ts) : k_p_(pi.k_p), tau_i_(pi.tau_i), ts_(ts) {}

  double step(double error) {
    integral_ += ts_ * error;
    return k_p_ * (error + integral_ / tau_i_);
  }
  void preload_output(double out) {
    if (std::isfinite(tau_i_) && k_p_ != 0.0) integral_ = out * tau_i_ / k_p_;
  }

 private:
  double k_p_;
  double tau_i_;
  double ts_;
  double integral_ = 0.0;
};

/// Discrete PR: proportional path plus a Tustin resonator prewarped at the
/// resonant frequency, transposed direct form II.
class DiscretePr {
 public:
  DiscretePr(const PrRegulator& pr, double ts) : k_p_(pr.k_p) {
    const double w = pr.resonant_frequency;
    const double k = w / std::tan(0.5 * w * ts);
    const double a0 = k * k + 2.0 * pr.damping * k + w * w;
    b0_ = pr.k_r * k / a0;
    b2_ = -b0_;
    a1_ = 2.0 * (w * w - k * k) / a0;
    a2_ = (k * k - 2.0 * pr.damping * k + w * w) / a0;
  }

  double step(double error) {
    const double y = b0_ * error + s1_;
    s1_ = -a1_ * y + s2_;
    s2_ = b2_ * error - a2_ * y;
    return k_p_ * error + y;
  }

 private:
  double k_p_;
  double b0_, b2_, a1_, a2_;
  double s1_ = 0.0, s2_ = 0.0;
};

enum State : std::size_t { kIx, kIy, kVc, kEsrc, kEgrid, kEloss, kStates };
using StateVec = std::array<double, kStates>;

struct PlantParams {
  Frame frame;
  double l, r, c, esr, w0, v_gd;
  const SourceSpec* source;
};

struct PortSolution {
  double v;       // port voltage
  double i_src;   // source current
  double i_cap;   // capacitor current
};

inline PortSolution solve_port(const PlantParams& p, double v_c, double v_src, double i_bridge) {
  const double rs = p.source->series_resistance;
  const double v = (v_c + p.esr * (v_src / rs - i_bridge)) / (1.0 + p.esr / rs);
  const double i_src = (v_src - v) / rs;
  return {v, i_src, i_src - i_bridge};
}

/// Held controller output. With `instantaneous` the bridge voltage equals
/// (ux, uy) and the duty follows the port voltage; otherwise the duty is
/// (ux, uy) / v_div.
struct Modulation {
  double ux = 0.0, uy = 0.0;
  double v_div = 1.0;
  bool instantaneous = false;
};

struct Drive {
  double dx, dy;
  PortSolution port;
};

inline Drive drive(const PlantParams& p, const Modulation& m, const StateVec& x, double v_src) {
  if (!m.instantaneous) {
    const double dx = m.ux / m.v_div, dy = m.uy / m.v_div;
    return {dx, dy, solve_port(p, x[kVc], v_src, 1.5 * (dx * x[kIx] + dy * x[kIy]))};
  }
  // i_bridge = p_u / v; with ESR the port voltage solves a quadratic.
  const double p_u = 1.5 * (m.ux * x[kIx] + m.uy * x[kIy]);
  const double rs = p.source->series_resistance;
  double v = x[kVc];
  if (p.esr > 0.0) {
    const double a = 1.0 + p.esr / rs;
    const double b = x[kVc] + p.esr * v_src / rs;
    v = 0.5 * (b + std::sqrt(std::max(0.0, b * b - 4.0 * a * p.esr * p_u))) / a;
  }
  const double dx = m.ux / v, dy = m.uy / v;
  return {dx, dy, solve_port(p, x[kVc], v_src, p_u / v)};
}

inline StateVec plant_derivative(const PlantParams& p, const StateVec& x, double t,
                                 const Modulation& m) {
  const double v_src = p.source->voltage(t);
  const auto [dx, dy, port] = drive(p, m, x, v_src);
  double vgx, vgy;
  StateVec d{};
  if (p.frame == Frame::DQ) {
    vgx = p.v_gd;
    vgy = 0.0;
    d[kIx] = (-p.r * x[kIx] + p.w0 * p.l * x[kIy] + dx * port.v - vgx) / p.l;
    d[kIy] = (-p.r * x[kIy] - p.w0 * p.l * x[kIx] + dy * port.v - vgy) / p.l;
  } else {
    vgx = p.v_gd * std::cos(p.w0 * t);
    vgy = p.v_gd * std::sin(p.w0 * t);
    d[kIx] = (-p.r * x[kIx] + dx * port.v - vgx) / p.l;
    d[kIy] = (-p.r * x[kIy] + dy * port.v - vgy) / p.l;
  }
  d[kVc] = port.i_cap / p.c;
  d[kEsrc] = v_src * port.i_src;
  d[kEgrid] = 1.5 * (vgx * x[kIx] + vgy * x[kIy]);
  d[kEloss] = p.source->series_resistance * port.i_src * port.i_src +
              p.esr * port.i_cap * port.i_cap +
              1.5 * p.r * (x[kIx] * x[kIx] + x[kIy] * x[kIy]);
  return d;
}

inline StateVec axpy(const StateVec& x, double h, const StateVec& k) {
  StateVec out;
  for (std::size_t i = 0; i < kStates; ++i) out[i] = x[i] + h * k[i];
  return out;
}

}  // namespace detail

/// Integrates the averaged converter. Throws NumericalDivergence or
/// ModulationSaturation (with the time of the first violation).
inline SimTrace simulate(const ConverterDesign& design, const ControllerSpec& ctrl,
                         const SourceSpec& source, const SimConfig& cfg) {
  const char* where = "averaged_sim.simulate";
  design.validate();
  ctrl.validate();
  source.validate();

  const bool is_pi = std::holds_alternative<PiRegulator>(ctrl.regulator);
  if ((ctrl.frame == Frame::DQ) != is_pi)
    throw Error(ErrorKind::InvalidConfig, where,
                "DQ control needs a PI regulator and alpha-beta control a PR regulator");
  const double ts = 1.0 / ctrl.control_rate;
  const double dt = cfg.plant_step;
  if (!(dt > 0.0) || dt > ts / 10.0 * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidConfig, where, "sim.plant_step must be in (0, 1/(10 f_ctrl)]");
  const auto n_sub = static_cast<std::size_t>(std::llround(ts / dt));
  if (std::abs(static_cast<double>(n_sub) * dt - ts) > 1e-9 * ts)
    throw Error(ErrorKind::InvalidConfig, where,
                "sim.plant_step must divide the control period exactly");
  const double tau_fast = (source.series_resistance + design.dc_cap_esr) * design.dc_capacitance;
  if (dt > 2.5 * tau_fast)
    throw Error(ErrorKind::InvalidConfig, where,
                "sim.plant_step too large for the source/DC-link time constant (RK4 stability)");
  if (!(cfg.duration > 0.0) || !std::isfinite(cfg.duration))
    throw Error(ErrorKind::InvalidConfig, where, "sim.duration must be > 0");
  if (cfg.record_decimation == 0)
    throw Error(ErrorKind::InvalidConfig, where, "sim.record_decimation must be >= 1");

  const OperatingPoint op = solve_operating_point(design);
  const double w0 = design.grid.fundamental_angular_frequency;
  const double v_gd = design.grid.phase_voltage_amplitude;
  const double w_l = w0 * design.filter_inductance;
  const double i_d_ref = op.i_d;
  const double i_q_ref = op.i_q;

  detail::PlantParams plant{ctrl.frame,  design.filter_inductance,
                            design.filter_resistance, design.dc_capacitance,
                            design.dc_cap_esr,        w0,
                            v_gd,         &source};

  detail::StateVec x{};
  std::optional<detail::DiscretePi> pi_d, pi_q;
  std::optional<detail::DiscretePr> pr_a, pr_b;
  if (is_pi) {
    pi_d.emplace(std::get<PiRegulator>(ctrl.regulator), ts);
    pi_q.emplace(std::get<PiRegulator>(ctrl.regulator), ts);
  } else {
    pr_a.emplace(std::get<PrRegulator>(ctrl.regulator), ts);
    pr_b.emplace(std::get<PrRegulator>(ctrl.regulator), ts);
  }

  if (cfg.start_at_operating_point) {
    const double p_bridge = 1.5 * (op.i_d * (v_gd + design.filter_resistance * op.i_d));
    const double vs = source.v_nominal;
    const double disc = vs * vs - 4.0 * source.series_resistance * p_bridge;
    if (disc < 0.0)
      throw Error(ErrorKind::InfeasibleOperatingPoint, where,
                  "source cannot deliver the rated power through its series resistance");
    x[detail::kVc] = 0.5 * (vs + std::sqrt(disc));
    x[detail::kIx] = op.i_d;  // t = 0: alpha-beta and dq coincide
    x[detail::kIy] = op.i_q;
    if (is_pi) {
      pi_d->preload_output(design.filter_resistance * op.i_d);
      pi_q->preload_output(design.filter_resistance * op.i_q);
    }
  } else {
    x[detail::kVc] = source.v_nominal;
  }

  double v_filtered = x[detail::kVc];
  const double ff_alpha = ctrl.feedforward.kind == Feedforward::Kind::Filtered
                              ? 1.0 - std::exp(-kTwoPi * ctrl.feedforward.bandwidth_hz * ts)
                              : 0.0;

  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.duration / dt));
  const std::size_t sat_limit =
      static_cast<std::size_t>(std::ceil(ctrl.control_rate * kTwoPi / w0));  // one fundamental
  std::size_t sat_run = 0;
  std::optional<double> first_sat;

  SimTrace tr;
  tr.frame = ctrl.frame;
  tr.sample_period = dt * static_cast<double>(cfg.record_decimation);
  const std::size_t n_rec = n_steps / cfg.record_decimation + 1;
  for (auto* v : {&tr.time, &tr.v_dc, &tr.i_dc_port, &tr.i_d, &tr.i_q, &tr.duty_d, &tr.duty_q,
                  &tr.v_cap, &tr.e_source, &tr.e_grid, &tr.e_loss})
    v->reserve(n_rec);

  detail::Modulation mod;  // held command in the plant frame
  mod.instantaneous = ctrl.feedforward.kind == Feedforward::Kind::Ideal;
  mod.v_div = x[detail::kVc];

  for (std::size_t n = 0; n <= n_steps; ++n) {
    const double t = static_cast<double>(n) * dt;

    if (n % n_sub == 0) {
      const double v_meas = detail::drive(plant, mod, x, source.voltage(t)).port.v;
      double v_ff = v_meas;
      switch (ctrl.feedforward.kind) {
        case Feedforward::Kind::Ideal: v_ff = v_meas; break;
        case Feedforward::Kind::Constant: v_ff = design.v_dc_nominal; break;
        case Feedforward::Kind::Filtered:
          v_filtered += ff_alpha * (v_meas - v_filtered);
          v_ff = v_filtered;
          break;
      }
      double ux, uy;
      if (is_pi) {
        const double id = x[detail::kIx];
        const double iq = x[detail::kIy];
        ux = v_gd + pi_d->step(i_d_ref - id) - w_l * iq;
        uy = pi_q->step(i_q_ref - iq) + w_l * id;
      } else {
        const double th = w0 * t;
        const AlphaBeta ref = inverse_park({i_d_ref, i_q_ref}, th);
        ux = v_gd * std::cos(th) + pr_a->step(ref.alpha - x[detail::kIx]);
        uy = v_gd * std::sin(th) + pr_b->step(ref.beta - x[detail::kIy]);
      }
      if (!(std::abs(v_ff) > 0.0) || !std::isfinite(v_ff))
        throw Error(ErrorKind::NumericalDivergence, where, "feedforward voltage collapsed");
      const double m = std::hypot(ux, uy) / v_ff;
      if (m > 1.0) {
        if (!first_sat) first_sat = t;
        if (++sat_run > sat_limit) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "|d| > 1 persistently, first violation at t = %.6g s",
                        *first_sat);
          throw Error(ErrorKind::ModulationSaturation, where, buf);
        }
        ux /= m;
        uy /= m;
      } else {
        sat_run = 0;
      }
      mod.ux = ux;
      mod.uy = uy;
      mod.v_div = v_ff;
    }

    if (n % cfg.record_decimation == 0) {
      const auto [dx, dy, port] = detail::drive(plant, mod, x, source.voltage(t));
      tr.time.push_back(t);
      tr.v_dc.push_back(port.v);
      tr.i_dc_port.push_back(port.i_src);
      tr.v_cap.push_back(x[detail::kVc]);
      tr.e_source.push_back(x[detail::kEsrc]);
      tr.e_grid.push_back(x[detail::kEgrid]);
      tr.e_loss.push_back(x[detail::kEloss]);
      if (ctrl.frame == Frame::DQ) {
        tr.i_d.push_back(x[detail::kIx]);
        tr.i_q.push_back(x[detail::kIy]);
        tr.duty_d.push_back(dx);
        tr.duty_q.push_back(dy);
      } else {
        const double th = w0 * t;
        const DqPair i = park({x[detail::kIx], x[detail::kIy]}, th);
        const DqPair d = park({dx, dy}, th);
        tr.i_d.push_back(i.d);
        tr.i_q.push_back(i.q);
        tr.duty_d.push_back(d.d);
        tr.duty_q.push_back(d.q);
      }
    }
    if (n == n_steps) break;

    const auto k1 = detail::plant_derivative(plant, x, t, mod);
    const auto k2 = detail::plant_derivative(plant, detail::axpy(x, 0.5 * dt, k1), t + 0.5 * dt, mod);
    const auto k3 = detail::plant_derivative(plant, detail::axpy(x, 0.5 * dt, k2), t + 0.5 * dt, mod);
    const auto k4 = detail::plant_derivative(plant, detail::axpy(x, dt, k3), t + dt, mod);
    for (std::size_t i = 0; i < detail::kStates; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    bool finite = true;
    for (double v : x) finite = finite && std::isfinite(v);
    if (!finite || std::abs(x[detail::kVc]) > 5.0 * source.v_nominal) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "state diverged at t = %.6g s", t + dt);
      throw Error(ErrorKind::NumericalDivergence, where, buf);
    }
  }
  return tr;
}

/// Current from the DC source into the converter port (capacitor branch
/// included).
inline std::span<const double> dc_port_current(const SimTrace& trace) { return trace.i_dc_port; }

/// Energy stored in the DC-link capacitor and the filter inductors at sample k.
inline double stored_energy(const SimTrace& trace, const ConverterDesign& design, std::size_t k) {
  const double v = trace.v_cap[k];
  const double i2 = trace.i_d[k] * trace.i_d[k] + trace.i_q[k] * trace.i_q[k];
  return 0.5 * design.dc_capacitance * v * v + 0.75 * design.filter_inductance * i2;
}

}  // namespace vsc
