#include <gtest/gtest.h>

#include <cmath>

#include "tauclock/interferometer.hpp"

using namespace tauclock;

namespace {

TwoPathConfig arms(cplx G1, cplx G2, double t1, double t2, double w, double T = 4.0) {
  return {G1, G2, t1, t2, w, T};
}

}  // namespace

TEST(TwoPath, NoFieldGivesSumOfArms) {
  const auto c = arms({0.3, 0.1}, {0.2, -0.4}, 1.0, 3.0, 0.0);
  const auto st = two_path_state(c);
  const double s = std::numbers::sqrt2 / 2.0;
  EXPECT_LT(std::abs(st.up() - s * (c.G1 + c.G2)), 1e-16);
  EXPECT_LT(std::abs(st.down() - s * (c.G1 + c.G2)), 1e-16);
}

TEST(TwoPath, SingleArmIsPureRotation) {
  const auto r = precession_angles(arms(1.0, 0.0, 1.5, 3.0, 0.2));
  EXPECT_NEAR(r.delta_phi, 0.3, 1e-15);
  EXPECT_NEAR(r.delta_theta, 0.0, 1e-15);
}

TEST(TwoPath, SymmetricArms) {
  const auto c = arms(0.5, 0.5, 1.0, 3.0, 1e-3);
  EXPECT_NEAR(precession_angles(c).delta_phi, 2e-3, 1e-8);
  EXPECT_NEAR(precession_angles(c).tau_inferred.re, 2.0, 1e-3);
  const auto t = weak_mean_time(c);
  EXPECT_DOUBLE_EQ(t.re, 2.0);
  EXPECT_DOUBLE_EQ(t.im, 0.0);
  EXPECT_FALSE(classify(t, c.T_total).any());
}

TEST(TwoPath, NegativeMeanTime) {
  const auto c = arms(1.0, -0.9, 1.0, 3.0, 1e-5);
  const auto t = weak_mean_time(c);
  EXPECT_NEAR(t.re, -17.0, 1e-12);
  EXPECT_EQ(t.im, 0.0);
  EXPECT_NEAR(precession_angles(c).tau_inferred.re, -17.0, 0.1);
  const auto f = classify(t, c.T_total);
  EXPECT_TRUE(f.negative);
  EXPECT_FALSE(f.exceeds_total);
  EXPECT_GT(t.modulus, c.T_total);
}

TEST(TwoPath, MeanTimeBeyondTotal) {
  const auto c = arms(1.0, -1.1, 1.0, 3.0, 1e-5);
  const auto t = weak_mean_time(c);
  EXPECT_NEAR(t.re, 23.0, 1e-12);
  EXPECT_TRUE(classify(t, c.T_total).exceeds_total);
  EXPECT_NEAR(precession_angles(c).tau_inferred.re, 23.0, 0.1);
}

TEST(TwoPath, ComplexMeanTime) {
  const auto c = arms(1.0, {0.0, 1.0}, 0.0, 2.0, 1e-4);
  const auto t = weak_mean_time(c);
  EXPECT_NEAR(t.re, 1.0, 1e-15);
  EXPECT_NEAR(t.im, 1.0, 1e-15);
  const auto r = precession_angles(c);
  EXPECT_NEAR(r.tau_inferred.re, 1.0, 1e-3);
  EXPECT_NEAR(r.tau_inferred.im, 1.0, 1e-3);
}

TEST(TwoPath, WeakLimitQuartering) {
  const TwoPathConfig cases[] = {arms(1.0, -0.9, 1.0, 3.0, 0.0), arms(1.0, -1.1, 1.0, 3.0, 0.0),
                                 arms(1.0, {0.3, 0.4}, 0.5, 2.5, 0.0)};
  for (auto c : cases) {
    const auto t = weak_mean_time(c);
    double prev_re = 0.0, prev_im = 0.0;
    for (double w : {4e-3, 2e-3, 1e-3}) {
      c.omega_L = w;
      const auto r = precession_angles(c);
      const double er = std::abs(r.tau_inferred.re - t.re);
      const double ei = std::abs(r.tau_inferred.im - t.im);
      if (prev_re > 0.0) {
        EXPECT_GE(prev_re / er, 3.0);
        EXPECT_LE(prev_re / er, 5.0);
      }
      if (prev_im > 0.0) {
        EXPECT_GE(prev_im / ei, 3.0);
        EXPECT_LE(prev_im / ei, 5.0);
      }
      prev_re = er;
      prev_im = t.im != 0.0 ? ei : 0.0;
    }
  }
}

TEST(TwoPath, CancellingArmsAreDegenerate) {
  try {
    weak_mean_time(arms(0.7, -0.7, 1.0, 3.0, 1e-3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_transition);
  }
  try {
    precession_angles(arms(0.7, -0.7, 1.0, 3.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_transition);
  }
}

TEST(TwoPath, ConfigValidation) {
  EXPECT_THROW(two_path_state(arms(1.0, 1.0, -1.0, 1.0, 0.1)), Error);
  EXPECT_THROW(two_path_state(arms(1.0, 1.0, 1.0, 5.0, 0.1)), Error);
  EXPECT_THROW(two_path_state(arms(1.0, 1.0, 1.0, 1.0, 0.1, 0.0)), Error);
}

TEST(Alphas, Examples) {
  auto a = solve_alphas(0.0, 1.0, 2.0);
  EXPECT_LT(std::abs(a.alpha1 - -1.0), 1e-15);
  EXPECT_LT(std::abs(a.alpha2 - 2.0), 1e-15);
  a = solve_alphas(1.0, 3.0, 2.0);
  EXPECT_LT(std::abs(a.alpha1 - 0.5), 1e-15);
  EXPECT_LT(std::abs(a.alpha2 - 0.5), 1e-15);
  a = solve_alphas(1.0, 3.0, {1.0, 1.0});
  EXPECT_LT(std::abs(a.alpha1 - cplx(1.0, -0.5)), 1e-15);
  EXPECT_LT(std::abs(a.alpha2 - cplx(0.0, 0.5)), 1e-15);
  EXPECT_LT(std::abs(alpha_mean(a, 1.0, 3.0) - cplx(1.0, 1.0)), 1e-15);
  try {
    solve_alphas(2.0, 2.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(Alphas, RoundTripAnyComplexTime) {
  for (int i = 0; i < 200; ++i) {
    const double t1 = 0.1 * i, t2 = 7.0 - 0.03 * i;
    const cplx tb(std::sin(1.3 * i) * 40.0, std::cos(0.7 * i) * 25.0);
    const auto a = solve_alphas(t1, t2, tb);
    EXPECT_LT(std::abs(a.alpha1 + a.alpha2 - 1.0), 1e-12);
    EXPECT_LT(std::abs(alpha_mean(a, t1, t2) - tb), 1e-12 * std::max(1.0, std::abs(tb)));
    // Weak mean time of arms weighted by the alphas reproduces tau-bar.
    const auto t = weak_mean_time(arms(a.alpha1, a.alpha2, t1, t2, 0.0, 10.0));
    EXPECT_LT(std::abs(t.value() - tb), 1e-11 * std::max(1.0, std::abs(tb)));
  }
}

TEST(Alphas, SecondMomentIsNotSquaredMean) {
  const auto a = solve_alphas(1.0, 3.0, 2.0);
  EXPECT_NEAR(alpha_second_moment(a, 1.0, 3.0).real(), 5.0, 1e-14);
  EXPECT_GT(std::abs(alpha_second_moment(a, 1.0, 3.0) - 4.0), 0.5);
  // With one alpha zero the classical relation holds.
  const auto b = solve_alphas(1.0, 3.0, 1.0);
  EXPECT_NEAR(std::abs(alpha_second_moment(b, 1.0, 3.0) - 1.0), 0.0, 1e-14);
}

TEST(Sweep, RowsAndDegeneratePoint) {
  const auto rows = phase_sweep(arms(0.5, 0.5, 1.0, 3.0, 1e-3), 4);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_DOUBLE_EQ(rows[0].tau.re, 2.0);
  EXPECT_TRUE(rows[2].degenerate);  // phi = pi cancels the arms
  EXPECT_TRUE(std::isnan(rows[2].tau.re));
  // phi = pi/2: tau = (1 + 3i) / (1 + i) = 2 + i.
  EXPECT_NEAR(rows[1].tau.re, 2.0, 1e-14);
  EXPECT_NEAR(rows[1].tau.im, 1.0, 1e-14);
  EXPECT_NEAR(rows[1].phi_rate, 2.0, 1e-2);
  EXPECT_NEAR(rows[1].theta_rate, 1.0, 1e-2);
}
