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
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "vsc/fixtures.hpp"
#include "vsc/io.hpp"
#include "vsc/reduced.hpp"
#include "vsc/stability.hpp"

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

SourceParams resistor(double r) {
  SourceParams p;
  p.r = r;
  return p;
}

ImpedanceCurve curve_of(const std::vector<double>& f, auto&& fn) {
  std::vector<Complex> z;
  for (double x : f) z.push_back(fn(x));
  return {f, z};
}

// Underdamped LC input filter against the 5 kW constant-power load.
SourceParams lc_filter(bool damped) {
  SourceParams p;
  p.r = 0.01;
  p.l = 100e-6;
  p.c = 24e-6;
  if (damped) {
    p.r_damp = 2.0;
    p.c_damp = 96e-6;
  }
  return p;
}

Complex load_z(Complex s) { return reduced_total_impedance(reduced_model_for(fixtures::design_5kw()), s); }

// Winding of 1 + T(jw) about the origin over the whole imaginary axis,
// sampled densely through w = w_s tan(theta). T is finite at both ends
// (T -> C_load / C_filter), so the contour closes on itself.
int brute_force_winding(const SourceParams& p) {
  const std::size_t n = 400000;
  const double ws = kTwoPi * 3000.0;
  double total = 0.0;
  Complex prev{};
  Complex first{};
  for (std::size_t k = 0; k < n; ++k) {
    const double th = -kPi / 2 + kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    const Complex s{0.0, ws * std::tan(th)};
    const Complex q = 1.0 + source_impedance_at(SourceKind::RLC, p, s) / load_z(s);
    if (k == 0) first = q;
    else total += std::arg(q / prev);
    prev = q;
  }
  total += std::arg(first / prev);
  return static_cast<int>(std::lround(total / kTwoPi));
}

std::vector<double> dense(std::size_t points) { return FrequencyGrid{1.0, 1e6, points}.frequencies(); }

ImpedanceCurve load_curve(const std::vector<double>& f) {
  return sweep_reduced(reduced_model_for(fixtures::design_5kw()), FrequencyGrid{f.front(), f.back(), f.size()});
}

// --- minor_loop_gain -------------------------------------------------------

TEST(MinorLoop, StiffSourceIsSmall) {
  const FrequencyGrid g{10.0, 1000.0, 50};
  const auto zs = build_source_impedance(SourceKind::R, resistor(0.1), g);
  const auto t = minor_loop_gain(zs, sweep_reduced(reduced_model_for(fixtures::design_5kw()), g));
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double f = t.frequency(k);
    const double oracle = 0.1 / std::abs(load_z({0.0, kTwoPi * f}));
    EXPECT_NEAR(std::abs(t.value(k)), oracle, 1e-12);
  }
  const auto at100 = minor_loop_gain(build_source_impedance(SourceKind::R, resistor(0.1), FrequencyGrid{100.0, 100.0, 1}),
                                     sweep_reduced(reduced_model_for(fixtures::design_5kw()), FrequencyGrid{100.0, 100.0, 1}));
  EXPECT_NEAR(std::abs(at100.value(0)), 0.1 / 54.922, 1e-7);
}

TEST(MinorLoop, SameCurvesGiveOne) {
  const auto z = load_curve(dense(200));
  const auto t = minor_loop_gain(z, z);
  for (auto v : t.values()) EXPECT_LT(std::abs(v - 1.0), 1e-14);
}

TEST(MinorLoop, ResonantFilterExceedsOne) {
  const auto f = dense(4000);
  const auto t = minor_loop_gain(build_source_impedance(SourceKind::RLC, lc_filter(false), f), load_curve(f));
  double peak = 0.0, f_peak = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (std::abs(t.value(k)) > peak) {
      peak = std::abs(t.value(k));
      f_peak = t.frequency(k);
    }
  EXPECT_GT(peak, 1.0);
  EXPECT_NEAR(f_peak, 3250.0, 100.0);
}

TEST(MinorLoop, ResamplesOntoOverlap) {
  const auto zs = build_source_impedance(SourceKind::R, resistor(0.1), FrequencyGrid{1.0, 100.0, 30});
  const auto zl = load_curve(FrequencyGrid{10.0, 1000.0, 40}.frequencies());
  const auto t = minor_loop_gain(zs, zl);
  EXPECT_GE(t.frequency(0), 10.0);
  EXPECT_LE(t.frequency(t.size() - 1), 100.0);
}

TEST(MinorLoop, Errors) {
  const auto a = build_source_impedance(SourceKind::R, resistor(0.1), FrequencyGrid{1.0, 10.0, 5});
  const auto b = load_curve(FrequencyGrid{100.0, 1000.0, 5}.frequencies());
  EXPECT_EQ(kind_of([&] { minor_loop_gain(a, b); }), ErrorKind::NoOverlap);

  const auto c = load_curve(FrequencyGrid{1.0, 10.0, 5}.frequencies());
  const std::vector<PointFault> open{{5.0, ErrorKind::InfiniteImpedance, "open"}};
  EXPECT_EQ(kind_of([&] { minor_loop_gain(a, c, open); }), ErrorKind::DivisionByOpenCircuit);

  const ImpedanceCurve zero({1.0, 10.0}, {Complex{}, Complex{}});
  EXPECT_EQ(kind_of([&] { minor_loop_gain(a, zero); }), ErrorKind::ZeroLoadImpedance);
}

// --- middlebrook_check -----------------------------------------------------

TEST(Middlebrook, Examples) {
  const FrequencyGrid g{10.0, 1000.0, 50};
  const auto small = minor_loop_gain(build_source_impedance(SourceKind::R, resistor(0.1), g),
                                     load_curve(g.frequencies()));
  const auto ok = middlebrook_check(small);
  EXPECT_TRUE(ok.ok);
  EXPECT_TRUE(ok.offending_bands.empty());

  const auto z = load_curve(g.frequencies());
  EXPECT_FALSE(middlebrook_check(minor_loop_gain(z, z)).ok);

  const auto f = dense(4000);
  const auto res = middlebrook_check(
      minor_loop_gain(build_source_impedance(SourceKind::RLC, lc_filter(false), f), load_curve(f)));
  EXPECT_FALSE(res.ok);
  ASSERT_EQ(res.offending_bands.size(), 1u);
  EXPECT_LT(res.offending_bands[0].first, 3250.0);
  EXPECT_GT(res.offending_bands[0].second, 3250.0);
}

TEST(Middlebrook, MarginIsConfigurable) {
  const ImpedanceCurve t({1.0, 2.0}, {Complex{0.6}, Complex{0.6}});
  EXPECT_FALSE(middlebrook_check(t).ok);
  EXPECT_TRUE(middlebrook_check(t, 3.0).ok);
  EXPECT_NEAR(middlebrook_check(t, 3.0).worst_gain_db, to_db(0.6), 1e-12);
}

// --- gmpm_margins ----------------------------------------------------------

TEST(Gmpm, FirstOrderLagHasNoCrossover) {
  const auto f = FrequencyGrid{1.0, 1e4, 200}.frequencies();
  const auto t = curve_of(f, [](double x) { return 1.0 / Complex{1.0, x / 100.0}; });
  const auto m = gmpm_margins(t);
  EXPECT_FALSE(m.has_crossover());
  EXPECT_TRUE(std::isinf(m.gain_margin_db));
  EXPECT_TRUE(std::isinf(m.phase_margin_deg));
}

TEST(Gmpm, PhaseMarginAtUnityGain) {
  const auto f = FrequencyGrid{10.0, 1e4, 137}.frequencies();
  const auto t = curve_of(f, [](double x) { return std::polar(300.0 / x, deg_to_rad(-150.0)); });
  const auto m = gmpm_margins(t);
  ASSERT_EQ(m.gain_crossovers_hz.size(), 1u);
  EXPECT_NEAR(m.gain_crossovers_hz[0], 300.0, 1e-9);
  EXPECT_NEAR(m.phase_margin_deg, 30.0, 1e-9);
}

TEST(Gmpm, GainMarginAtPhaseCrossing) {
  const auto f = FrequencyGrid{10.0, 1e4, 137}.frequencies();
  // Phase linear in log f, crossing -180 at 200 Hz; |T| = 0.5.
  const auto t = curve_of(f, [](double x) {
    return std::polar(0.5, deg_to_rad(-180.0 - 20.0 * std::log(x / 200.0)));
  });
  const auto m = gmpm_margins(t);
  ASSERT_EQ(m.phase_crossovers_hz.size(), 1u);
  EXPECT_NEAR(m.phase_crossovers_hz[0], 200.0, 1e-6);
  EXPECT_NEAR(m.gain_margin_db, 6.0206, 1e-4);
}

TEST(Gmpm, WorstCaseOverCrossovers) {
  const auto f = FrequencyGrid{10.0, 1e4, 400}.frequencies();
  // |T| = 1 at 100 Hz (phase -120) and at 1 kHz (phase -170).
  const auto t = curve_of(f, [](double x) {
    const double lm = std::log(x / 100.0) * std::log(x / 1000.0) * -0.3;
    const double ph = -120.0 - 50.0 * std::log(x / 100.0) / std::log(10.0);
    return std::polar(std::exp(lm), deg_to_rad(ph));
  });
  const auto m = gmpm_margins(t);
  ASSERT_EQ(m.gain_crossovers_hz.size(), 2u);
  EXPECT_NEAR(m.phase_margins_deg[0], 60.0, 0.5);
  EXPECT_NEAR(m.phase_margins_deg[1], 10.0, 0.5);
  EXPECT_DOUBLE_EQ(m.phase_margin_deg, m.phase_margins_deg[1]);
  EXPECT_LT(m.gain_crossovers_hz[0], m.gain_crossovers_hz[1]);
}

// --- nyquist_winding -------------------------------------------------------

TEST(Nyquist, InsideUnitDiskIsZero) {
  const auto f = FrequencyGrid{10.0, 1000.0, 100}.frequencies();
  const auto t = minor_loop_gain(build_source_impedance(SourceKind::R, resistor(0.1), f), load_curve(f));
  EXPECT_EQ(nyquist_winding(t), 0);
}

TEST(Nyquist, UndampedFilterEncirclesMinusOne) {
  const auto f = dense(40000);
  const auto t = minor_loop_gain(build_source_impedance(SourceKind::RLC, lc_filter(false), f), load_curve(f));
  const int w = nyquist_winding(t);
  EXPECT_EQ(w, brute_force_winding(lc_filter(false)));
  EXPECT_NE(w, 0);
  EXPECT_EQ(w, -2);
}

TEST(Nyquist, DampedFilterDoesNot) {
  const auto f = dense(40000);
  const auto t = minor_loop_gain(build_source_impedance(SourceKind::RLC, lc_filter(true), f), load_curve(f));
  EXPECT_EQ(nyquist_winding(t), 0);
  EXPECT_EQ(brute_force_winding(lc_filter(true)), 0);
}

TEST(Nyquist, DoublingDensityKeepsVerdict) {
  for (bool damped : {false, true}) {
    const auto f1 = dense(20000), f2 = dense(40000);
    const auto r1 = analyze_stability(build_source_impedance(SourceKind::RLC, lc_filter(damped), f1), load_curve(f1));
    const auto r2 = analyze_stability(build_source_impedance(SourceKind::RLC, lc_filter(damped), f2), load_curve(f2));
    EXPECT_EQ(r1.winding_number, r2.winding_number) << damped;
    EXPECT_EQ(r1.verdict, r2.verdict) << damped;
  }
}

TEST(Nyquist, CoarseGridNeedsRefinement) {
  const auto f = dense(60);
  const auto t = minor_loop_gain(build_source_impedance(SourceKind::RLC, lc_filter(false), f), load_curve(f));
  EXPECT_EQ(kind_of([&] { nyquist_winding(t); }), ErrorKind::RefineGridNeeded);
}

TEST(Nyquist, PointOnContour) {
  const auto f = FrequencyGrid{1.0, 100.0, 50}.frequencies();
  auto t = curve_of(f, [](double x) { return std::polar(1.0, -kPi * x / 100.0); });  // hits -1 at 100 Hz
  EXPECT_EQ(kind_of([&] { nyquist_winding(t); }), ErrorKind::PointOnContour);
  const auto ones = ImpedanceCurve(f, std::vector<Complex>(f.size(), 1.0));
  EXPECT_EQ(analyze_stability(t, ones).verdict, Verdict::Marginal);
}

// --- analyze_stability -----------------------------------------------------

TEST(Verdict, StiffSourceStable) {
  const auto f = FrequencyGrid{1.0, 5000.0, 400}.frequencies();
  const auto r = analyze_stability(build_source_impedance(SourceKind::R, resistor(0.1), f), load_curve(f));
  EXPECT_EQ(r.verdict, Verdict::Stable);
  EXPECT_EQ(r.winding_number, 0);
  EXPECT_TRUE(r.middlebrook.ok);
}

TEST(Verdict, LcFixtures) {
  const auto f = dense(40000);
  const auto un = analyze_stability(build_source_impedance(SourceKind::RLC, lc_filter(false), f), load_curve(f));
  EXPECT_EQ(un.verdict, Verdict::Unstable);
  const auto ok = analyze_stability(build_source_impedance(SourceKind::RLC, lc_filter(true), f), load_curve(f));
  EXPECT_EQ(ok.verdict, Verdict::Stable);
  for (const auto& n : ok.notes) EXPECT_EQ(n.find("disagrees"), std::string::npos) << n;
}

TEST(Verdict, ThinGainMarginIsMarginal) {
  // |T| = 0.95 circling once per half contour; -1 stays outside.
  const auto f = FrequencyGrid{1.0, 1000.0, 2000}.frequencies();
  const auto t = curve_of(f, [](double x) { return std::polar(0.95, -kTwoPi * std::log(x) / std::log(1000.0)); });
  const auto ones = ImpedanceCurve(f, std::vector<Complex>(f.size(), 1.0));
  const auto r = analyze_stability(t, ones);
  EXPECT_EQ(r.winding_number, 0);
  EXPECT_NEAR(r.margins.gain_margin_db, -to_db(0.95), 1e-6);
  EXPECT_EQ(r.verdict, Verdict::Marginal);
  StabilityOptions loose;
  loose.gain_margin_threshold_db = 0.1;
  EXPECT_EQ(analyze_stability(t, ones, loose).verdict, Verdict::Stable);
}

TEST(Verdict, UnstableIffWindingNonzero) {
  const auto f = dense(40000);
  for (double rd : {0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
    SourceParams p = lc_filter(true);
    p.r_damp = rd;
    const auto r = analyze_stability(build_source_impedance(SourceKind::RLC, p, f), load_curve(f));
    EXPECT_EQ(r.verdict == Verdict::Unstable, r.winding_number != 0) << rd;
    EXPECT_EQ(r.winding_number, brute_force_winding(p)) << rd;
  }
}

TEST(Verdict, RhpPremiseNoted) {
  const auto f = FrequencyGrid{1.0, 5000.0, 400}.frequencies();
  StabilityOptions opt;
  opt.assume_no_rhp_poles = false;
  const auto r = analyze_stability(build_source_impedance(SourceKind::R, resistor(0.1), f), load_curve(f), opt);
  EXPECT_FALSE(r.notes.empty());
}

// --- build_source_impedance ------------------------------------------------

TEST(SourceImpedance, Resistive) {
  const auto z = build_source_impedance(SourceKind::R, resistor(0.1), FrequencyGrid{1.0, 1e4, 30});
  for (auto v : z.values()) EXPECT_EQ(v, Complex(0.1));
}

TEST(SourceImpedance, RlcPeakAtResonance) {
  SourceParams p = lc_filter(false);
  const auto z = build_source_impedance(SourceKind::RLC, p, FrequencyGrid{1e3, 1e4, 20001});
  std::size_t best = 0;
  for (std::size_t k = 0; k < z.size(); ++k)
    if (std::abs(z.value(k)) > std::abs(z.value(best))) best = k;
  const double f_res = 1.0 / (kTwoPi * std::sqrt(p.l * p.c));
  EXPECT_NEAR(f_res, 3248.7, 0.1);
  EXPECT_NEAR(z.frequency(best), f_res, 0.005 * f_res);
}

TEST(SourceImpedance, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "vsc_stability_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "zs.csv";
  const auto z = build_source_impedance(SourceKind::RLC, lc_filter(true), FrequencyGrid{1.0, 1e4, 77});
  atomic_write_file(path, curve_to_csv(z));
  SourceParams p;
  p.file = path;
  EXPECT_EQ(build_source_impedance(SourceKind::FromFile, p, FrequencyGrid{}), z);
  atomic_write_file(path, "f_hz,re_ohm\n1,2\n");
  EXPECT_EQ(kind_of([&] { build_source_impedance(SourceKind::FromFile, p, FrequencyGrid{}); }),
            ErrorKind::MalformedCurveFile);
  p.file = dir / "missing.csv";
  EXPECT_EQ(kind_of([&] { build_source_impedance(SourceKind::FromFile, p, FrequencyGrid{}); }),
            ErrorKind::MalformedCurveFile);
  std::filesystem::remove_all(dir);
}

TEST(SourceImpedance, ParseSpec) {
  auto [k1, p1] = parse_source_spec("R:R=0.1");
  EXPECT_EQ(k1, SourceKind::R);
  EXPECT_EQ(p1.r, 0.1);
  auto [k2, p2] = parse_source_spec("RLC:L=1e-4,C=24e-6,R=0.01,Rd=2,Cd=96e-6");
  EXPECT_EQ(k2, SourceKind::RLC);
  EXPECT_EQ(p2.l, 1e-4);
  EXPECT_EQ(p2.c, 24e-6);
  EXPECT_EQ(p2.r_damp, 2.0);
  EXPECT_EQ(p2.c_damp, 96e-6);
  EXPECT_EQ(kind_of([] { parse_source_spec("LC:L=1"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_source_spec("R:X=1"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_source_spec("R:R=abc"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { build_source_impedance(SourceKind::RLC, resistor(1.0), FrequencyGrid{}); }),
            ErrorKind::InvalidConfig);
}

}  // namespace
}  // namespace vsc
