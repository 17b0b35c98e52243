#include <gtest/gtest.h>

#include <cmath>

#include "tauclock/wavepacket.hpp"

using namespace tauclock;

TEST(WavePacket, GaussianIsNormalised) {
  const auto g = make_gaussian_packet(1.0, 0.05, -20.0, 1.0);
  EXPECT_NEAR(packet_norm(g), 1.0, 1e-12);
  EXPECT_EQ(g.size(), 512u);
  EXPECT_NEAR(g.p_min(), 0.7, 1e-14);
  EXPECT_NEAR(g.p_max(), 1.3, 1e-14);
  EXPECT_NEAR(mean_momentum(g), 1.0, 1e-12);
}

TEST(WavePacket, PositionDensityIntegratesToOne) {
  const auto g = make_gaussian_packet(1.0, 0.2, 0.0, 1.0, 256);
  // |G0(x)|^2 is a Gaussian of width 1/(2 dp) = 2.5 centred on x_c = 0.
  double sum = 0.0;
  const double h = 0.05;
  for (double x = -40.0; x <= 40.0; x += h) sum += std::norm(position_amplitude(g, x)) * h;
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(WavePacket, PeakMovesWithGroupVelocity) {
  const auto g = make_gaussian_packet(2.0, 0.1, -10.0, 1.0);
  EXPECT_NEAR(peak_position(g, 0.0, -30.0, 10.0), -10.0, 1e-6);
  EXPECT_NEAR(peak_position(g, 5.0, -10.0, 20.0), 0.0, 1e-6);
  // Heavier particle moves slower.
  const auto h = make_gaussian_packet(2.0, 0.1, -10.0, 4.0);
  EXPECT_NEAR(peak_position(h, 20.0, -20.0, 20.0), 0.0, 1e-6);
}

TEST(WavePacket, EvolvedMatchesFreePropagation) {
  const auto g = make_gaussian_packet(1.0, 0.1, -5.0, 1.0);
  const auto e = g.evolved(3.0);
  EXPECT_NEAR(e.x_c(), -2.0, 1e-14);
  for (double x : {-6.0, -2.0, 0.5, 3.0}) {
    const cplx a = position_amplitude(e, x);
    const cplx b = position_amplitude(g, x, 3.0);
    EXPECT_LT(std::abs(a - b), 1e-13);
  }
  EXPECT_NEAR(packet_norm(e), 1.0, 1e-12);
}

TEST(WavePacket, TruncationKeepsGridSpacing) {
  const auto g = make_gaussian_packet(1.0, 0.05, 0.0, 1.0);
  const auto t = g.truncated(100, 50);
  EXPECT_EQ(t.size(), 50u);
  EXPECT_DOUBLE_EQ(t.p_step(), g.p_step());
  EXPECT_DOUBLE_EQ(t.momentum(0), g.momentum(100));
  EXPECT_THROW(g.truncated(500, 50), Error);
}

TEST(WavePacket, RejectsBadParameters) {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  EXPECT_EQ(kind_of([] { make_gaussian_packet(1.0, 0.0, 0.0, 1.0); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([] { make_gaussian_packet(1.0, -0.1, 0.0, 1.0); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([] { make_gaussian_packet(1.0, 0.1, 0.0, 0.0); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([] { make_gaussian_packet(1.0, 0.1, 0.0, 1.0, 8); }), ErrorKind::invalid_parameter);
  EXPECT_EQ(kind_of([] { make_gaussian_packet(1.0, 0.1, 0.0, 1.0, 512, 3.0); }), ErrorKind::invalid_parameter);
}
