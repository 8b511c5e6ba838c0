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
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vsc/analytic.hpp"
#include "vsc/fixtures.hpp"
#include "vsc/fra.hpp"
#include "vsc/reduced.hpp"
#include "vsc/report.hpp"

namespace vsc {
namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoFailure;  // nothing thrown
}

std::vector<double> tone(double fs, std::size_t n, double a, double f, double phi, double dc = 0.0) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k)
    x[k] = dc + a * std::sin(kTwoPi * f * static_cast<double>(k) / fs + phi);
  return x;
}

Complex direct_dft(const std::vector<double>& x, std::size_t n, std::size_t k) {
  Complex acc{};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = -kTwoPi * static_cast<double>(k * i % n) / static_cast<double>(n);
    acc += x[i] * Complex{std::cos(w), std::sin(w)};
  }
  return acc;
}

Complex analytic_at(const ConverterDesign& d, const ControllerSpec& c, double f) {
  return sweep_analytic(d, c, FrequencyGrid{f, f, 1}).total.curve.value(0);
}

double db_dev(Complex a, Complex b) { return std::abs(to_db(std::abs(a)) - to_db(std::abs(b))); }
double deg_dev(Complex a, Complex b) { return std::abs(wrap_deg(rad_to_deg(std::arg(a) - std::arg(b)))); }

// --- goertzel_phasor -------------------------------------------------------

TEST(Goertzel, RecoversAmplitudeAndPhase) {
  const auto x = tone(20e3, 4000, 3.0, 50.0, 0.3);
  const Complex p = goertzel_phasor(x, 20e3, 50.0);
  EXPECT_LT(std::abs(p - std::polar(3.0, 0.3)), 1e-9);
}

TEST(Goertzel, ConstantGivesZero) {
  const std::vector<double> x(4000, 700.0);
  for (double f : {50.0, 100.0, 1000.0}) EXPECT_LT(std::abs(goertzel_phasor(x, 20e3, f)), 1e-9);
}

TEST(Goertzel, RejectsOtherIntegerPeriodTone) {
  auto x = tone(20e3, 4000, 3.0, 50.0, 0.3);
  const auto y = tone(20e3, 4000, 5.0, 120.0, -1.1);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += y[k];
  EXPECT_LT(std::abs(goertzel_phasor(x, 20e3, 50.0) - std::polar(3.0, 0.3)), 1e-9);
}

TEST(Goertzel, TrimsToWholePeriods) {
  // 10.7 periods available: the window keeps 10.
  const auto x = tone(20e3, 4280, 2.0, 50.0, -0.7);
  const auto est = estimate_phasor(x, 20e3, 50.0);
  EXPECT_EQ(est.window.periods, 10u);
  EXPECT_EQ(est.window.length, 4000u);
  EXPECT_LT(std::abs(est.phasor - std::polar(2.0, -0.7)), 1e-9);
}

TEST(Goertzel, TimeOriginShiftsPhase) {
  const double t0 = 0.0123;
  std::vector<double> x(4000);
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = std::sin(kTwoPi * 50.0 * (t0 + static_cast<double>(k) / 20e3) + 0.4);
  EXPECT_LT(std::abs(goertzel_phasor(x, 20e3, 50.0, t0) - std::polar(1.0, 0.4)), 1e-9);
}

TEST(Goertzel, MatchesDirectDft) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {400u, 1000u, 4096u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng) + 3.0;
    double norm = 0.0;
    for (double v : x) norm += std::abs(v);
    for (std::size_t k : {1u, 5u, 17u, 100u}) {
      const Complex g = goertzel_bin(x, n, k);
      EXPECT_LT(std::abs(g - direct_dft(x, n, k)) / norm, 1e-12) << n << " " << k;
    }
  }
}

TEST(Goertzel, TooFewPeriods) {
  const auto x = tone(20e3, 1600, 1.0, 50.0, 0.0);  // 4 periods
  EXPECT_EQ(kind_of([&] { goertzel_phasor(x, 20e3, 50.0); }), ErrorKind::NonCoherentWindow);
}

TEST(Goertzel, IncoherentRateRejected) {
  // 3.33 samples per period: 5 periods round to 17 samples, 2% off.
  const auto x = tone(1000.0, 17, 1.0, 300.0, 0.0);
  EXPECT_EQ(kind_of([&] { goertzel_phasor(x, 1000.0, 300.0); }), ErrorKind::NonCoherentWindow);
}

// --- process_capture -------------------------------------------------------

std::string capture_csv(double fs, double duration, Complex z, double t_start = 0.0) {
  // v = 700 + 7 sin(wt); i built so that V/I = z.
  const Complex v_ph = 7.0;
  const Complex i_ph = v_ph / z;
  const double i_dc = 5e3 / 700.0;
  std::string out = "t_s,v_V,i_A\n";
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = t_start + static_cast<double>(k) / fs;
    const double w = kTwoPi * 100.0 * (t - t_start);
    const double v = 700.0 + std::abs(v_ph) * std::sin(w + std::arg(v_ph));
    const double i = i_dc + std::abs(i_ph) * std::sin(w + std::arg(i_ph));
    out += format_double(t) + "," + format_double(v) + "," + format_double(i) + "\n";
  }
  return out;
}

Complex reduced_z100() {
  return reduced_total_impedance(reduced_model_for(fixtures::design_5kw()), Complex{0.0, kTwoPi * 100.0});
}

TEST(ProcessCapture, RecoversKnownImpedance) {
  const Complex z = reduced_z100();
  const Complex got = process_capture(capture_from_csv(capture_csv(20e3, 0.1, z)), 100.0);
  EXPECT_LT(std::abs(got / z - 1.0), 1e-6);
  // Nonzero start time.
  const Complex got2 = process_capture(capture_from_csv(capture_csv(20e3, 0.1, z, 1.25)), 100.0);
  EXPECT_LT(std::abs(got2 / z - 1.0), 1e-6);
}

TEST(ProcessCapture, RateInvariant) {
  const Complex z = reduced_z100();
  const Complex a = process_capture(capture_from_csv(capture_csv(20e3, 0.1, z)), 100.0);
  const Complex b = process_capture(capture_from_csv(capture_csv(40e3, 0.1, z)), 100.0);
  EXPECT_LT(std::abs(a / b - 1.0), 1e-9);
}

TEST(ProcessCapture, ZeroCurrentIsLowSignal) {
  std::string csv = "t_s,v_V,i_A\n";
  for (int k = 0; k <= 2000; ++k) {
    const double t = k / 20e3;
    csv += format_double(t) + "," + format_double(700.0 + 7.0 * std::sin(kTwoPi * 100.0 * t)) + ",0\n";
  }
  EXPECT_EQ(kind_of([&] { process_capture(capture_from_csv(csv), 100.0); }), ErrorKind::LowSignal);
}

TEST(ProcessCapture, MalformedInputs) {
  EXPECT_EQ(kind_of([] { capture_from_csv("t_s,v_V\n0,1\n1,2\n"); }), ErrorKind::MalformedCapture);
  EXPECT_EQ(kind_of([] { capture_from_csv("time,v,i\n0,1,2\n1,2,3\n"); }), ErrorKind::MalformedCapture);
  EXPECT_EQ(kind_of([] { capture_from_csv("t_s,v_V,i_A\n0,1,2\n0.1,1,2\n0.3,1,2\n"); }),
            ErrorKind::MalformedCapture);
  EXPECT_EQ(kind_of([] { capture_from_csv("t_s,v_V,i_A\n0,1,2\n0.1,x,2\n"); }),
            ErrorKind::MalformedCapture);
  EXPECT_EQ(kind_of([] { capture_from_csv(""); }), ErrorKind::MalformedCapture);
}

TEST(ProcessCapture, ShortCaptureIsNonCoherent) {
  const std::string csv = capture_csv(20e3, 0.04, reduced_z100());  // 4 periods
  EXPECT_EQ(kind_of([&] { process_capture(capture_from_csv(csv), 100.0); }),
            ErrorKind::NonCoherentWindow);
}

TEST(ProcessCapture, AcceptsTraceLayout) {
  const auto d = fixtures::design_5kw();
  SourceSpec src = SourceSpec::for_design(d);
  src.injection = Injection{100.0, 7.0};
  SimConfig cfg;
  cfg.duration = 0.3;
  const auto tr = simulate(d, fixtures::controller_5kw(), src, cfg);
  // Drop the settle part, then read the trace CSV back as a capture.
  SimTrace tail = tr;
  const std::size_t first = tr.size() / 3;
  for (auto* v : {&tail.time, &tail.v_dc, &tail.i_dc_port, &tail.i_d, &tail.i_q})
    v->erase(v->begin(), v->begin() + static_cast<std::ptrdiff_t>(first));
  const Complex z = process_capture(capture_from_csv(trace_to_csv(tail)), 100.0);
  const Complex ref = analytic_at(d, fixtures::controller_5kw(), 100.0);
  EXPECT_LT(db_dev(z, ref), 1.0);
  EXPECT_LT(deg_dev(z, ref), 5.0);
}

// --- extract_impedance_at --------------------------------------------------

TEST(ExtractImpedance, LowFrequencyLooksLikeConstantPower) {
  const auto d = fixtures::design_5kw();
  const auto c = fixtures::controller_5kw();
  const Complex z = extract_impedance_at(d, c, 10.0, 7.0);
  EXPECT_NEAR(std::abs(z), 98.0, 3.0);
  EXPECT_LT(std::abs(wrap_deg(rad_to_deg(std::arg(z)) - 180.0)), 10.0);
  const Complex ref = analytic_at(d, c, 10.0);
  EXPECT_LT(db_dev(z, ref), 1.0);
  EXPECT_LT(deg_dev(z, ref), 5.0);
}

TEST(ExtractImpedance, HighFrequencyMatchesAnalytic) {
  const auto d = fixtures::design_5kw();
  const auto c = fixtures::controller_5kw();
  const Complex z = extract_impedance_at(d, c, 2000.0, 7.0);
  const Complex ref = analytic_at(d, c, 2000.0);
  EXPECT_LT(db_dev(z, ref), 1.0);
  EXPECT_LT(deg_dev(z, ref), 5.0);
}

TEST(ExtractImpedance, ZeroAmplitudeIsLowSignal) {
  const auto d = fixtures::design_5kw();
  EXPECT_EQ(kind_of([&] { extract_impedance_at(d, fixtures::controller_5kw(), 100.0, 0.0); }),
            ErrorKind::LowSignal);
}

TEST(ExtractImpedance, AboveAveragingCeilingRejected) {
  const auto d = fixtures::design_5kw();
  EXPECT_EQ(kind_of([&] { extract_impedance_at(d, fixtures::controller_5kw(), 2500.0, 7.0); }),
            ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([&] { extract_impedance_at(d, fixtures::controller_5kw(), 0.0, 7.0); }),
            ErrorKind::InvalidConfig);
}

TEST(ExtractImpedance, ResponseIsLinearInAmplitude) {
  const auto d = fixtures::design_5kw();
  FraOptions opt;
  opt.auto_retry = false;
  const auto a = extract_point(d, fixtures::controller_5kw(), 100.0, 3.5, opt);
  const auto b = extract_point(d, fixtures::controller_5kw(), 100.0, 7.0, opt);
  EXPECT_LT(std::abs(b.i / (2.0 * a.i) - 1.0), 0.01);
  EXPECT_LT(std::abs(b.v / (2.0 * a.v) - 1.0), 0.01);
  EXPECT_LT(std::abs(b.z / a.z - 1.0), 0.01);
}

TEST(ExtractImpedance, SettleTimeInvariant) {
  const auto d = fixtures::design_5kw();
  FraOptions a, b;
  a.settle_time = 0.2;
  b.settle_time = 0.35;
  for (double f : {30.0, 300.0}) {
    const Complex za = extract_impedance_at(d, fixtures::controller_5kw(), f, 7.0, a);
    const Complex zb = extract_impedance_at(d, fixtures::controller_5kw(), f, 7.0, b);
    EXPECT_LT(std::abs(za / zb - 1.0), 1e-3) << f;
  }
}

TEST(ExtractImpedance, SettleTimeDefault) {
  const auto d = fixtures::design_5kw();
  EXPECT_DOUBLE_EQ(default_settle_time(d, 100.0), 0.2);
  EXPECT_DOUBLE_EQ(default_settle_time(d, 10.0), 0.5);
  EXPECT_DOUBLE_EQ(default_settle_time(d, 1.0), 5.0);
}

// --- sweep_fra -------------------------------------------------------------

TEST(SweepFra, SinglePointGrid) {
  const auto d = fixtures::design_5kw();
  const auto r = sweep_fra(d, fixtures::controller_5kw(), FrequencyGrid{200.0, 200.0, 1});
  ASSERT_EQ(r.curve.size(), 1u);
  EXPECT_DOUBLE_EQ(r.curve.frequency(0), 200.0);
  EXPECT_TRUE(r.faults.empty());
}

TEST(SweepFra, WorkerCountDoesNotChangeResult) {
  const auto d = fixtures::design_5kw();
  const FrequencyGrid g{50.0, 500.0, 3};
  const auto a = sweep_fra(d, fixtures::controller_5kw(), g, {}, 1);
  const auto b = sweep_fra(d, fixtures::controller_5kw(), g, {}, 4);
  EXPECT_EQ(a.curve, b.curve);
}

TEST(SweepFra, FailedPointsBecomeGaps) {
  const auto d = fixtures::design_5kw();
  const auto r = sweep_fra(d, fixtures::controller_5kw(), FrequencyGrid{1500.0, 6000.0, 3});
  EXPECT_EQ(r.curve.size(), 1u);
  ASSERT_EQ(r.faults.size(), 2u);
  for (const auto& f : r.faults) EXPECT_EQ(f.kind, ErrorKind::InvalidConfig);
}

struct Fixture {
  const char* name;
  ConverterDesign design;
  ControllerSpec ctrl;
};

class OracleEquivalence : public ::testing::TestWithParam<int> {};

TEST_P(OracleEquivalence, FraTracksAnalyticWithIdealFeedforward) {
  const std::vector<Fixture> all = {
      {"5kw", fixtures::design_5kw(), fixtures::controller_5kw()},
      {"40kw", fixtures::design_40kw(), fixtures::controller_40kw()},
      {"150kw", fixtures::design_150kw(), fixtures::controller_150kw()},
      {"commercial", fixtures::design_commercial(), fixtures::controller_commercial()},
  };
  const auto& fx = all[static_cast<std::size_t>(GetParam())];
  const FrequencyGrid g{10.0, 2000.0, 20};
  const auto fra = sweep_fra(fx.design, fx.ctrl, g, {}, 0);
  ASSERT_TRUE(fra.faults.empty()) << fx.name << ": " << fra.faults.front().message;
  const auto an = sweep_analytic(fx.design, fx.ctrl, g);
  const auto m = deviation_metrics(fra.curve, an.total.curve);
  EXPECT_LE(m.max_mag_dev_db, 1.0) << fx.name << " worst at " << m.frequency_of_worst_mag;
  EXPECT_LE(m.max_phase_dev_deg, 5.0) << fx.name << " worst at " << m.frequency_of_worst_phase;
}

INSTANTIATE_TEST_SUITE_P(Designs, OracleEquivalence, ::testing::Range(0, 4));

}  // namespace
}  // namespace vsc
