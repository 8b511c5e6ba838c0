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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vsc/fixtures.hpp"
#include "vsc/model.hpp"

namespace vsc {
namespace {

constexpr double kVgd = 325.26911934581187;  // 230 V rms

ConverterDesign random_design(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ConverterDesign d;
  d.v_dc_nominal = 650.0 + 400.0 * u(rng);
  d.p_out = 1e3 + 2e5 * u(rng);
  d.filter_inductance = 2e-5 + 2e-3 * u(rng);
  d.filter_resistance = 0.05 * u(rng);
  d.dc_capacitance = 1e-5 + 1e-3 * u(rng);
  return d;
}

TEST(OperatingPoint, ZeroPower) {
  ConverterDesign d = fixtures::design_5kw();
  d.p_out = 0.0;
  const auto op = solve_operating_point(d);
  EXPECT_EQ(op.i_d, 0.0);
  EXPECT_EQ(op.i_q, 0.0);
  EXPECT_NEAR(op.d_d, 0.46467, 1e-5);
  EXPECT_EQ(op.d_q, 0.0);
}

// Independent oracle: bisection on the DC/AC power balance with the duties
// taken from the steady-state filter equations.
double id_by_power_balance(const ConverterDesign& d) {
  const double v = d.grid.phase_voltage_amplitude, wl = d.grid.fundamental_angular_frequency * d.filter_inductance;
  auto residual = [&](double id) {
    const double dd = (v + d.filter_resistance * id) / d.v_dc_nominal;
    const double dq = wl * id / d.v_dc_nominal;
    const double p_dc = 1.5 * d.v_dc_nominal * (id * dd + 0.0 * dq);
    return p_dc - 1.5 * d.filter_resistance * id * id - d.p_out;
  };
  double lo = 0.0, hi = 1e4;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(OperatingPoint, FiveKilowatt) {
  const auto d = fixtures::design_5kw();
  const auto op = solve_operating_point(d);
  EXPECT_NEAR(op.i_d, 10.2479, 1e-4);
  EXPECT_NEAR(op.i_d, id_by_power_balance(d), 1e-9);
  EXPECT_NEAR(op.d_q, 4.599e-3, 1e-6);
  EXPECT_NEAR(op.d_q, kTwoPi * 50.0 * 1e-3 * op.i_d / 700.0, 1e-15);
}

TEST(OperatingPoint, Infeasible) {
  ConverterDesign d = fixtures::design_5kw();
  d.v_dc_nominal = 300.0;
  try {
    solve_operating_point(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleOperatingPoint);
  }
}

TEST(OperatingPoint, InvalidDesignNamesField) {
  ConverterDesign d = fixtures::design_5kw();
  d.efficiency = 1.5;
  try {
    solve_operating_point(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDesign);
    EXPECT_NE(std::string(e.what()).find("design.efficiency"), std::string::npos);
  }
}

TEST(OperatingPointProperty, KvlResidualsAndPowerConsistency) {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int n = 0; n < 500; ++n) {
    const ConverterDesign d = random_design(rng);
    OperatingPoint op;
    try {
      op = solve_operating_point(d);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const double v = d.v_dc_nominal, r = d.filter_resistance;
    const double wl = d.grid.fundamental_angular_frequency * d.filter_inductance;
    EXPECT_LT(std::abs(-r * op.i_d + wl * op.i_q + op.d_d * v - d.grid.phase_voltage_amplitude), 1e-9 * v);
    EXPECT_LT(std::abs(-r * op.i_q - wl * op.i_d + op.d_q * v), 1e-9 * v);
    EXPECT_LE(std::hypot(op.d_d, op.d_q), 1.0);
    const double p_dc = 1.5 * v * (op.i_d * op.d_d + op.i_q * op.d_q);
    const double p_ac = d.p_out + 1.5 * r * (op.i_d * op.i_d + op.i_q * op.i_q);
    EXPECT_NEAR(p_dc / p_ac, 1.0, 1e-9);
  }
  EXPECT_GT(checked, 400);
}

TEST(PiTf, Examples) {
  const Complex s1{0.0, kTwoPi * 1000.0};
  const Complex g1 = pi_tf({1.0, 14.3e-3}, s1);
  EXPECT_NEAR(g1.real(), 1.0, 1e-12);
  EXPECT_NEAR(g1.imag(), -0.011129, 1e-6);
  EXPECT_NEAR(g1.imag(), -1.0 / (14.3e-3 * kTwoPi * 1000.0), 1e-15);

  const Complex g2 = pi_tf({0.3, 4.3e-3}, {0.0, kTwoPi * 100.0});
  EXPECT_NEAR(g2.real(), 0.3, 1e-12);
  EXPECT_NEAR(g2.imag(), -0.3 / (4.3e-3 * kTwoPi * 100.0), 1e-15);
  EXPECT_NEAR(g2.imag(), -0.111036, 1e-5);

  const Complex g3 = pi_tf({1.0, std::numeric_limits<double>::infinity()}, {0.0, 123.0});
  EXPECT_EQ(g3, Complex(1.0, 0.0));
}

TEST(PiTf, ZeroFrequencyIsDegenerate) {
  try {
    pi_tf({1.0, 1e-3}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFrequency);
  }
}

TEST(PiTfProperty, ConjugateSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int n = 0; n < 200; ++n) {
    const PiRegulator pi{std::abs(u(rng)) * 1e-3, 1e-4 + std::abs(u(rng)) * 1e-5};
    const Complex s{u(rng), u(rng)};
    const Complex a = pi_tf(pi, std::conj(s));
    const Complex b = std::conj(pi_tf(pi, s));
    EXPECT_LT(std::abs(a - b), 1e-14 * std::abs(b));
  }
}

TEST(PrTf, ResonantPeak) {
  PrRegulator pr;
  pr.k_p = 1.0;
  pr.k_r = 100.0;
  pr.resonant_frequency = kTwoPi * 50.0;
  pr.damping = 0.0;
  EXPECT_NEAR(std::abs(pr_tf(pr, {0.0, kTwoPi * 49.999})), 100.0 / (2.0 * kTwoPi * 1e-3), 10.0);
  pr.damping = 5.0;
  // k_p + k_r / (2 w_c) at the resonance
  const Complex at_res = pr_tf(pr, {0.0, kTwoPi * 50.0});
  EXPECT_NEAR(at_res.real(), 1.0 + 100.0 / 10.0, 1e-9);
  EXPECT_NEAR(at_res.imag(), 0.0, 1e-9);
}

TEST(FeedforwardTf, Modes) {
  const Complex s{0.0, kTwoPi * 1000.0};
  EXPECT_EQ(feedforward_tf(Feedforward::ideal(), s), Complex(1.0));
  EXPECT_EQ(feedforward_tf(Feedforward::constant(), s), Complex(0.0));
  const Complex h = feedforward_tf(Feedforward::filtered(1000.0), s);
  EXPECT_NEAR(h.real(), 0.5, 1e-15);
  EXPECT_NEAR(h.imag(), -0.5, 1e-15);
}

TEST(Transforms, Examples) {
  const AlphaBeta ab = clarke(1.0, -0.5, -0.5);
  EXPECT_NEAR(ab.alpha, 1.0, 1e-15);
  EXPECT_NEAR(ab.beta, 0.0, 1e-15);

  const double th = 0.73;
  const double a = kVgd * std::cos(th);
  const double b = kVgd * std::cos(th - kTwoPi / 3.0);
  const double c = kVgd * std::cos(th + kTwoPi / 3.0);
  const DqPair dq = park(clarke(a, b, c), th);
  EXPECT_NEAR(dq.d, kVgd, 1e-12 * kVgd);
  EXPECT_NEAR(dq.q, 0.0, 1e-12 * kVgd);

  const DqPair r = park({0.0, 1.0}, kPi / 2.0);
  EXPECT_NEAR(r.d, 1.0, 1e-15);
  EXPECT_NEAR(r.q, 0.0, 1e-15);
}

TEST(TransformsProperty, RoundTripsAndPower) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int n = 0; n < 1000; ++n) {
    const double a = u(rng), b = u(rng), c = -a - b;
    const Abc back = inverse_clarke(clarke(a, b, c));
    EXPECT_NEAR(back.a, a, 1e-12);
    EXPECT_NEAR(back.b, b, 1e-12);
    EXPECT_NEAR(back.c, c, 1e-12);

    const AlphaBeta ab{u(rng), u(rng)};
    const double th = u(rng);
    const AlphaBeta ab2 = inverse_park(park(ab, th), th);
    EXPECT_NEAR(ab2.alpha, ab.alpha, 1e-12);
    EXPECT_NEAR(ab2.beta, ab.beta, 1e-12);

    // Amplitude-invariant scaling: p = v_a i_a + v_b i_b + v_c i_c = 1.5 (v_d i_d + v_q i_q).
    const double ia = u(rng), ib = u(rng), ic = -ia - ib;
    const DqPair v = park(clarke(a, b, c), th), i = park(clarke(ia, ib, ic), th);
    EXPECT_NEAR(a * ia + b * ib + c * ic, 1.5 * (v.d * i.d + v.q * i.q), 1e-10);
  }
}

TEST(ControllerSpec, Validation) {
  ControllerSpec c = fixtures::controller_5kw(Feedforward::filtered(0.0));
  EXPECT_THROW(c.validate(), Error);
  c = fixtures::dq_pi(1.0, -1.0);
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(fixtures::controller_5kw_pr().validate());
}

TEST(FrequencyGrid, SinglePointAndLogSpacing) {
  EXPECT_EQ(FrequencyGrid({5.0, 5.0, 1}).frequencies(), std::vector<double>{5.0});
  const auto f = FrequencyGrid{1.0, 1000.0, 4}.frequencies();
  ASSERT_EQ(f.size(), 4u);
  EXPECT_NEAR(f[1], 10.0, 1e-12);
  EXPECT_NEAR(f[2], 100.0, 1e-10);
  EXPECT_THROW((FrequencyGrid{10.0, 1.0, 5}.frequencies()), Error);
}

}  // namespace
}  // namespace vsc
