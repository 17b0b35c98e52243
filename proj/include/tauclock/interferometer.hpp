#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/larmor_clock.hpp"
#include "tauclock/tau_amplitude.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

/// Two-arm interferometer: arm amplitudes at the detector (any extra arm
/// phase is folded into G2), in-field durations per arm, field strength and
/// total transit time.
struct TwoPathConfig {
  cplx G1{1.0, 0.0};
  cplx G2{0.0, 0.0};
  double tau1 = 0.0;
  double tau2 = 0.0;
  double omega_L = 0.0;
  double T_total = 1.0;

  void validate() const {
    detail::require(T_total > 0.0 && std::isfinite(T_total), ErrorKind::invalid_parameter, "T_total must be positive");
    detail::require(tau1 >= 0.0 && tau1 <= T_total, ErrorKind::invalid_parameter, "tau1 must lie in [0, T_total]");
    detail::require(tau2 >= 0.0 && tau2 <= T_total, ErrorKind::invalid_parameter, "tau2 must lie in [0, T_total]");
    detail::require(std::isfinite(omega_L), ErrorKind::invalid_parameter, "omega_L must be finite");
  }
};

/// Relative amplitudes of the two durations, alpha1 + alpha2 = 1.
struct AlphaPair {
  cplx alpha1;
  cplx alpha2;
};

/// G1 exp(-i omega_L sigma_z tau1 / 2)|up_x> + G2 exp(-i omega_L sigma_z tau2 / 2)|up_x>.
inline SpinState two_path_state(const TwoPathConfig& c) {
  c.validate();
  const double s = std::numbers::sqrt2 / 2.0;
  const double a1 = 0.5 * c.omega_L * c.tau1;
  const double a2 = 0.5 * c.omega_L * c.tau2;
  const cplx up = s * (c.G1 * std::polar(1.0, -a1) + c.G2 * std::polar(1.0, -a2));
  const cplx down = s * (c.G1 * std::polar(1.0, a1) + c.G2 * std::polar(1.0, a2));
  return SpinState::spin_half(up, down);
}

/// (tau1 G1 + tau2 G2) / (G1 + G2).
inline ComplexTime weak_mean_time(const TwoPathConfig& c) {
  const cplx den = c.G1 + c.G2;
  detail::require(std::abs(den) > 1e-14 * (std::abs(c.G1) + std::abs(c.G2)), ErrorKind::degenerate_transition,
                  "G1 + G2 = 0: the two arms cancel and the mean time is undefined");
  return ComplexTime((c.tau1 * c.G1 + c.tau2 * c.G2) / den);
}

/// Baz readout of the two-path spinor.
inline ClockReadout precession_angles(const TwoPathConfig& c) { return baz_angles(two_path_state(c), c.omega_L); }

/// alpha1 = (tau_bar - tau2)/(tau1 - tau2), alpha2 = 1 - alpha1.
inline AlphaPair solve_alphas(double tau1, double tau2, cplx tau_bar) {
  detail::require(tau1 != tau2, ErrorKind::invalid_input, "tau1 and tau2 must differ");
  const cplx a1 = (tau_bar - tau2) / (tau1 - tau2);
  const cplx a2 = -(tau_bar - tau1) / (tau1 - tau2);
  const double scale = std::max({1.0, std::abs(tau_bar), std::abs(tau1), std::abs(tau2)});
  detail::require(std::abs(a1 + a2 - 1.0) <= 1e-12 * std::max(1.0, std::abs(a1)) &&
                      std::abs(a1 * tau1 + a2 * tau2 - tau_bar) <= 1e-12 * scale * std::max(1.0, std::abs(a1)),
                  ErrorKind::validation, "alpha reconstruction failed");
  return {a1, a2};
}

/// alpha1 tau1 + alpha2 tau2.
inline cplx alpha_mean(const AlphaPair& a, double tau1, double tau2) { return a.alpha1 * tau1 + a.alpha2 * tau2; }

/// alpha1 tau1^2 + alpha2 tau2^2, which differs from the squared mean unless
/// one alpha vanishes.
inline cplx alpha_second_moment(const AlphaPair& a, double tau1, double tau2) {
  return a.alpha1 * tau1 * tau1 + a.alpha2 * tau2 * tau2;
}

/// Where Re tau-bar falls relative to the classical range [0, T_total].
struct AnomalyFlags {
  bool negative = false;
  bool exceeds_total = false;

  bool any() const noexcept { return negative || exceeds_total; }
};

inline AnomalyFlags classify(const ComplexTime& tau, double T_total) {
  return {tau.re < 0.0, tau.re > T_total};
}

/// One row of a sweep of the extra arm phase: G2 -> G2 exp(i phi).
struct SweepRow {
  double phi = 0.0;
  bool degenerate = false;
  ComplexTime tau;
  double phi_rate = 0.0;    // delta_phi / omega_L
  double theta_rate = 0.0;  // delta_theta / omega_L
};

/// phi_k = 2 pi k / n_points, k = 0..n_points-1. Rows where the arms cancel
/// are kept and marked degenerate, with NaN entries.
inline std::vector<SweepRow> phase_sweep(const TwoPathConfig& base, std::size_t n_points) {
  detail::require(n_points >= 1, ErrorKind::invalid_parameter, "sweep needs at least one point");
  detail::require(base.omega_L != 0.0, ErrorKind::invalid_parameter, "sweep needs a nonzero omega_L");
  base.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<SweepRow> rows(n_points);
  for (std::size_t k = 0; k < n_points; ++k) {
    SweepRow& row = rows[k];
    row.phi = kTwoPi * static_cast<double>(k) / static_cast<double>(n_points);
    TwoPathConfig c = base;
    c.G2 = base.G2 * std::polar(1.0, row.phi);
    try {
      row.tau = weak_mean_time(c);
      const auto r = precession_angles(c);
      row.phi_rate = r.delta_phi / c.omega_L;
      row.theta_rate = r.delta_theta / c.omega_L;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_transition) throw;
      row.degenerate = true;
      row.tau = ComplexTime(cplx(nan, nan));
      row.phi_rate = nan;
      row.theta_rate = nan;
    }
  }
  return rows;
}

}  // namespace tauclock
