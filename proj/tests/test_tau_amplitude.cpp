#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "tauclock/tau_amplitude.hpp"

using namespace tauclock;

namespace {

std::vector<LambdaAmplitude> synthetic_points(std::size_t n, double Lambda, auto&& f) {
  std::vector<LambdaAmplitude> pts(n);
  const double step = 2.0 * Lambda / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double l = -Lambda + static_cast<double>(k) * step;
    pts[k] = {l, f(l)};
  }
  return pts;
}

TauAmplitudeDistribution scenario_dist(const fixtures::Setup& s, double Lambda, std::size_t n, Taper taper) {
  return invert_to_tau(lambda_scan(s.packet, s.barrier, s.x, s.T_total, Lambda, n), s.T_total, taper);
}

std::size_t argmax_abs(const TauAmplitudeDistribution& d) {
  const auto v = d.values();
  return static_cast<std::size_t>(
      std::max_element(v.begin(), v.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); }) - v.begin());
}

}  // namespace

TEST(Inversion, PurePhaseGivesSpike) {
  const double tau0 = 3.0 * std::numbers::pi / 8.0;  // on the grid for Lambda = 8
  const auto pts = synthetic_points(256, 8.0, [&](double l) { return std::polar(1.0, -l * tau0); });
  const auto d = invert_to_tau(pts, 10.0, Taper::none());
  EXPECT_DOUBLE_EQ(d.tau_step(), std::numbers::pi / 8.0);
  const auto k = argmax_abs(d);
  EXPECT_LT(std::abs(d.tau(k) - tau0), d.tau_step());
  EXPECT_NEAR(std::abs(d.values()[k]) * d.tau_step(), 1.0, 1e-12);
  EXPECT_LT(std::abs(sum_rule_check(d) - 1.0), 1e-10);
  EXPECT_LT(d.leakage(), 1e-12);
  EXPECT_NEAR(complex_time(d).re, tau0, 1e-10);
}

TEST(Inversion, OffGridPhasePeaksWithinOneStep) {
  const double tau0 = 2.345;
  const auto pts = synthetic_points(1024, 20.0, [&](double l) { return std::polar(1.0, -l * tau0); });
  const auto d = invert_to_tau(pts, 10.0, Taper::raised_cosine(0.1));
  EXPECT_LT(std::abs(d.tau(argmax_abs(d)) - tau0), d.tau_step());
}

TEST(Inversion, CosineHasMirrorPeakCountedAsLeakage) {
  const double tau0 = 2.0;
  const auto pts = synthetic_points(512, 16.0, [&](double l) { return cplx(std::cos(l * tau0), 0.0); });
  const auto d = invert_to_tau(pts, 10.0, Taper::none());
  const auto v = d.values();
  double best_pos = 0.0, best_neg = 0.0, where_pos = 0.0, where_neg = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double a = std::abs(v[k]);
    if (d.tau(k) > 0 && a > best_pos) best_pos = a, where_pos = d.tau(k);
    if (d.tau(k) < 0 && a > best_neg) best_neg = a, where_neg = d.tau(k);
  }
  EXPECT_NEAR(where_pos, tau0, d.tau_step());
  EXPECT_NEAR(where_neg, -tau0, d.tau_step());
  EXPECT_NEAR(best_pos, best_neg, 1e-12);
  EXPECT_NEAR(d.leakage(), 0.5, 0.05);
  EXPECT_FALSE(d.converged());
  try {
    complex_time(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(Inversion, SpikeMomentsAndTwoSpikeMean) {
  // 0.6 delta(tau - pi) + 0.4 delta(tau - 3 pi), both on the grid.
  const double h = std::numbers::pi / 8.0;
  const double t1 = 8 * h, t2 = 24 * h;
  const auto pts = synthetic_points(256, 8.0, [&](double l) {
    return 0.6 * std::polar(1.0, -l * t1) + 0.4 * std::polar(1.0, -l * t2);
  });
  const auto d = invert_to_tau(pts, 12.0, Taper::none());
  EXPECT_LT(std::abs(nth_moment(d, 0) - 1.0), 1e-14);
  EXPECT_LT(std::abs(complex_time(d).value() - (0.6 * t1 + 0.4 * t2)), 1e-10);
  EXPECT_LT(std::abs(nth_moment(d, 2) - (0.6 * t1 * t1 + 0.4 * t2 * t2)), 1e-9);
  EXPECT_LT(std::abs(nth_moment(d, 3) - (0.6 * t1 * t1 * t1 + 0.4 * t2 * t2 * t2)), 1e-8);
  EXPECT_THROW(nth_moment(d, 4), Error);
}

TEST(Inversion, RejectsNonUniformGrid) {
  auto pts = synthetic_points(256, 8.0, [](double) { return cplx(1.0, 0.0); });
  pts[100].lambda += 1e-3;
  try {
    invert_to_tau(pts, 10.0, Taper::none());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(Inversion, VanishingTotalIsDegenerate) {
  // A~ = e^{-i l t1} - e^{-i l t2}: the two spikes cancel in the total.
  const double h = std::numbers::pi / 8.0;
  const auto pts = synthetic_points(256, 8.0, [&](double l) {
    return std::polar(1.0, -l * 8 * h) - std::polar(1.0, -l * 16 * h);
  });
  const auto d = invert_to_tau(pts, 12.0, Taper::none());
  try {
    complex_time(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_transition);
  }
}

TEST(LambdaScan, GridAndDeterminism) {
  const auto s = fixtures::opaque();
  const auto a = lambda_scan(s.packet, s.barrier, s.x, s.T_total, 20.0, 4096);
  const auto b = lambda_scan(s.packet, s.barrier, s.x, s.T_total, 20.0, 4096);
  ASSERT_EQ(a.points.size(), 4096u);
  EXPECT_DOUBLE_EQ(a.points.front().lambda, -2.0 - 20.0);
  EXPECT_DOUBLE_EQ(a.points[1].lambda - a.points[0].lambda, 40.0 / 4096.0);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    EXPECT_EQ(a.points[k].lambda, b.points[k].lambda);
    EXPECT_EQ(a.points[k].value, b.points[k].value);
  }
  // Evaluating in reverse order gives the same values.
  const TransmittedAmplitude amp(s.packet, s.barrier, s.x, s.T_total);
  for (std::size_t k = a.points.size(); k-- > a.points.size() - 50;)
    EXPECT_EQ(amp(a.points[k].lambda), a.points[k].value);
}

TEST(LambdaScan, RejectsBadGrid) {
  const auto s = fixtures::opaque();
  EXPECT_THROW(lambda_scan(s.packet, s.barrier, s.x, s.T_total, 20.0, 1000), Error);
  EXPECT_THROW(lambda_scan(s.packet, s.barrier, s.x, s.T_total, 20.0, 128), Error);
  EXPECT_THROW(lambda_scan(s.packet, s.barrier, s.x, s.T_total, 0.0, 4096), Error);
}

TEST(SumRule, FreeScenario) {
  const auto s = fixtures::free_classical();
  const auto d = scenario_dist(s, 40.0, 8192, Taper::raised_cosine(0.1));
  ASSERT_TRUE(d.converged());
  EXPECT_LT(fixtures::rel(sum_rule_check(d), s.amplitude()(0.0)), 1e-6);
}

TEST(SumRule, OpaqueScenarioSurvivesCancellation) {
  const auto s = fixtures::opaque();
  const auto d = scenario_dist(s, 40.0, 8192, Taper::raised_cosine(0.15));
  ASSERT_TRUE(d.converged());
  const cplx a0 = s.amplitude()(0.0);
  EXPECT_LT(fixtures::rel(a0, fixtures::kAmpOpaque), 1e-10);
  // |A~(0)| is tiny next to the typical |A(tau)| dtau.
  EXPECT_GT(d.max_abs() * d.tau_step() / std::abs(a0), 10.0);
  EXPECT_LT(fixtures::rel(sum_rule_check(d), a0), 1e-3);
}

TEST(PhaseMap, MatchesFullPipeline) {
  const auto f = fixtures::opaque_free();
  const auto s = fixtures::opaque();
  const auto free_dist = scenario_dist(f, 40.0, 8192, Taper::raised_cosine(0.1));
  const auto full = scenario_dist(s, 40.0, 8192, Taper::raised_cosine(0.1));
  const auto mapped = rect_phase_map(free_dist, 2.0);
  ASSERT_EQ(mapped.size(), full.size());
  double dev = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    EXPECT_DOUBLE_EQ(mapped.tau(k), full.tau(k));
    dev = std::max(dev, std::abs(mapped.values()[k] - full.values()[k]));
    EXPECT_NEAR(std::abs(mapped.values()[k]), std::abs(free_dist.values()[k]), 1e-15);
  }
  EXPECT_LT(dev, 1e-4 * free_dist.max_abs());
  EXPECT_DOUBLE_EQ(mapped.meta().reference_height, 2.0);
}

TEST(PhaseMap, ZeroHeightIsIdentityAndNeedsFreeInput) {
  const auto f = fixtures::opaque_free();
  const auto d = scenario_dist(f, 20.0, 4096, Taper::raised_cosine(0.1));
  const auto m = rect_phase_map(d, 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_EQ(m.values()[k], d.values()[k]);
  EXPECT_THROW(rect_phase_map(rect_phase_map(d, 1.0), 1.0), Error);
}

TEST(Leakage, RefinementLadderIsMonotone) {
  for (const auto& s : {fixtures::opaque(), fixtures::free_classical()}) {
    const double l1 = scenario_dist(s, 20.0, 4096, Taper::raised_cosine(0.1)).leakage();
    const double l2 = scenario_dist(s, 40.0, 8192, Taper::raised_cosine(0.15)).leakage();
    const double l3 = scenario_dist(s, 80.0, 16384, Taper::raised_cosine(0.2)).leakage();
    EXPECT_GT(l1, l2);
    EXPECT_GT(l2, l3);
    EXPECT_LT(l2, kLeakageLimit);
    EXPECT_LT(l3, kLeakageLimit);
  }
}

TEST(Leakage, NarrowWindowIsUnconverged) {
  const auto s = fixtures::opaque();
  const auto d = scenario_dist(s, 20.0 * kTwoPi / s.T_total, 256, Taper::raised_cosine(0.1));
  EXPECT_FALSE(d.converged());
  EXPECT_GT(d.leakage(), kLeakageLimit);
}

TEST(ComplexTime, ClassicalLimitBothPipelines) {
  const auto s = fixtures::free_classical();
  const auto d = scenario_dist(s, 40.0, 8192, Taper::raised_cosine(0.1));
  const auto m = complex_time(d);
  const auto g = complex_time_by_derivative(s.packet, s.barrier, s.x, s.T_total);
  for (const auto& t : {m, g}) {
    EXPECT_NEAR(t.re, 5.0, 0.1);
    EXPECT_LT(std::abs(t.im), 0.1);
  }
  EXPECT_LT(fixtures::rel(m.value(), g.value()), 1e-3);
  EXPECT_LT(fixtures::rel(g.value(), fixtures::kTauFree), 1e-8);
}

TEST(ComplexTime, DerivativeMatchesReferenceValues) {
  const std::pair<fixtures::Setup, cplx> cases[] = {
      {fixtures::opaque(), fixtures::kTauOpaque},
      {fixtures::thin(), fixtures::kTauThin},
      {fixtures::semiclassical(), fixtures::kTauSemiclassical},
      {fixtures::exceeds_total(), fixtures::kTauExceeds},
  };
  for (const auto& [s, ref] : cases) {
    const auto t = complex_time_by_derivative(s.packet, s.barrier, s.x, s.T_total);
    EXPECT_LT(fixtures::rel(t.value(), ref), 1e-8);
    EXPECT_DOUBLE_EQ(t.modulus * t.modulus, t.re * t.re + t.im * t.im);
  }
}

TEST(ComplexTime, MomentMatchesDerivativeWhenTunnelling) {
  struct Case {
    fixtures::Setup s;
    double Lambda;
    std::size_t n;
    double taper;
  };
  for (const auto& [s, Lambda, n, taper] : {Case{fixtures::opaque(), 40.0, 8192, 0.15},
                                            Case{fixtures::thin(), 80.0, 16384, 0.3}}) {
    const auto d = scenario_dist(s, Lambda, n, Taper::raised_cosine(taper));
    ASSERT_TRUE(d.converged());
    const auto g = complex_time_by_derivative(s.packet, s.barrier, s.x, s.T_total);
    EXPECT_LT(fixtures::rel(complex_time(d).value(), g.value()), 1e-3);
  }
}

TEST(ComplexTime, PurePhaseDerivativeIsExact) {
  const double tau0 = 1.7;
  const auto g = complex_time_by_derivative([&](double l) { return 0.3 * std::polar(1.0, -l * tau0); }, 1e-2);
  EXPECT_NEAR(g.re, tau0, 1e-12);
  EXPECT_NEAR(g.im, 0.0, 1e-12);
  EXPECT_THROW(complex_time_by_derivative([](double) { return cplx(0.0, 0.0); }, 1e-2), Error);
}

TEST(ComplexTime, CentralDifferenceIsSecondOrder) {
  const auto amp = fixtures::thin().amplitude();
  const cplx ref = fixtures::kTauThin;
  const double e1 = std::abs(central_difference_time(amp, 0.02) - ref);
  const double e2 = std::abs(central_difference_time(amp, 0.01) - ref);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(ComplexTime, AnomalyIsFiniteAndLarge) {
  const auto s = fixtures::exceeds_total();
  EXPECT_TRUE(tunnels(s.packet, s.barrier));
  const auto g = complex_time_by_derivative(s.packet, s.barrier, s.x, s.T_total);
  EXPECT_TRUE(std::isfinite(g.modulus));
  EXPECT_GT(g.modulus, s.T_total);
}

TEST(Moments, SemiclassicalSecondMomentIsSquaredMean) {
  const auto s = fixtures::semiclassical();
  const auto d = scenario_dist(s, 40.0, 4096, Taper::raised_cosine(0.1));
  ASSERT_TRUE(d.converged());
  const cplx m1 = nth_moment(d, 1);
  EXPECT_NEAR(m1.real(), 2.0, 0.04);
  EXPECT_LT(std::abs(nth_moment(d, 2) - m1 * m1) / std::abs(m1 * m1), 0.05);
  EXPECT_NEAR(nth_moment(d, 0).real(), 1.0, 1e-14);
}
