#pragma once

#include <cmath>
#include <complex>

#include "tauclock/scattering.hpp"
#include "tauclock/tau_amplitude.hpp"
#include "tauclock/wavepacket.hpp"

namespace fixtures {

using tauclock::BarrierSpec;
using tauclock::cplx;
using tauclock::WavePacket;

/// Packet, barrier and detection settings shared by tests and the
/// acceptance run.
struct Setup {
  WavePacket packet;
  BarrierSpec barrier;
  double x;
  double T_total;

  tauclock::TransmittedAmplitude amplitude() const { return {packet, barrier, x, T_total}; }
};

/// mu = 1, p0 = 1, dp = 0.05 through V = 2, d = 5: kappa d = 8.7.
inline Setup opaque() {
  return {tauclock::make_gaussian_packet(1.0, 0.05, -20.0, 1.0), BarrierSpec::rectangle(2.0, 5.0), 30.0, 60.0};
}

/// The same packet geometry with no barrier (V = 0, d = 5).
inline Setup opaque_free() {
  return {tauclock::make_gaussian_packet(1.0, 0.05, -20.0, 1.0), BarrierSpec::rectangle(0.0, 5.0), 30.0, 60.0};
}

/// V = 0, dp = 0.02, p0 = 1, d = 5: classical traversal time mu d / p0 = 5.
inline Setup free_classical() {
  return {tauclock::make_gaussian_packet(1.0, 0.02, -150.0, 1.0), BarrierSpec::rectangle(0.0, 5.0), 50.0, 200.0};
}

/// Thin barrier V = 1, d = 1: tunnelling with sizeable transmission.
inline Setup thin() {
  return {tauclock::make_gaussian_packet(1.0, 0.05, -20.0, 1.0), BarrierSpec::rectangle(1.0, 1.0), 30.0, 60.0};
}

/// p0 d = 50, far in the semiclassical regime.
inline Setup semiclassical() {
  return {tauclock::make_gaussian_packet(5.0, 0.02, -150.0, 1.0), BarrierSpec::rectangle(0.0, 10.0), 50.0, 40.0};
}

/// A short total time with a long barrier: |tau-bar| exceeds T_total.
inline Setup exceeds_total() {
  return {tauclock::make_gaussian_packet(1.0, 0.05, -20.0, 1.0), BarrierSpec::rectangle(1.5, 8.0), 10.0, 4.0};
}

/// Reference complex times (i d ln A~/d lambda at lambda = 0), computed
/// independently with 512-point trapezoid packets in extended precision.
inline constexpr cplx kTauOpaque{0.23527819192957827, -3.077916552218981};
inline constexpr cplx kTauFree{5.003908995681024, -0.0006252754692251181};
inline constexpr cplx kTauThin{0.79368021523855, -0.7807127645064733};
inline constexpr cplx kTauSemiclassical{2.000063915129507, -2.03828806796035e-06};
inline constexpr cplx kTauExceeds{0.7469100920746673, -5.813925848843586};

/// Matching A~(0) values.
inline constexpr cplx kAmpOpaque{3.174600216292511e-05, 1.7745176024268136e-05};
inline constexpr cplx kAmpFree{0.12335858169226878, 0.023235587239354302};
inline constexpr cplx kAmpThin{0.04468152981695467, -0.09172586033784182};
inline constexpr cplx kAmpSemiclassical{0.03238973726442099, 0.12206457019507969};

inline double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace fixtures
