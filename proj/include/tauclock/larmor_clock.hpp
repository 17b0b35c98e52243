#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/tau_amplitude.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

/// Spin-j state sum_m gamma_m |m> in the j_z basis, stored in ascending m
/// (index 0 is m = -j). j is kept as the integer 2j.
class SpinState {
 public:
  SpinState(int twice_j, std::vector<cplx> amps) : twice_j_(twice_j), amps_(std::move(amps)) {
    detail::require(twice_j_ >= 1, ErrorKind::invalid_parameter, "spin must be at least 1/2");
    detail::require(amps_.size() == static_cast<std::size_t>(twice_j_ + 1), ErrorKind::invalid_parameter,
                    "spin-j state needs 2j+1 amplitudes");
  }

  /// Spin-1/2 state from its (up, down) components, i.e. m = +1/2 and m = -1/2.
  static SpinState spin_half(cplx up, cplx down) { return SpinState(1, {down, up}); }

  int twice_j() const noexcept { return twice_j_; }
  double j() const noexcept { return 0.5 * twice_j_; }
  std::size_t dim() const noexcept { return amps_.size(); }
  double m(std::size_t i) const noexcept { return static_cast<double>(i) - j(); }
  std::span<const cplx> amps() const noexcept { return amps_; }
  cplx operator[](std::size_t i) const noexcept { return amps_[i]; }

  cplx up() const noexcept { return amps_.back(); }
  cplx down() const noexcept { return amps_.front(); }

  double norm2() const noexcept {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }

  bool is_normalized(double tol = 1e-12) const noexcept { return std::abs(norm2() - 1.0) <= tol; }

  SpinState normalized() const {
    const double n = norm2();
    detail::require(n > 0.0, ErrorKind::degenerate_transition, "zero spin state cannot be normalised");
    std::vector<cplx> a(amps_);
    for (auto& v : a) v /= std::sqrt(n);
    return SpinState(twice_j_, std::move(a));
  }

 private:
  int twice_j_;
  std::vector<cplx> amps_;
};

namespace detail {

inline void require_same_spin(const SpinState& a, const SpinState& b) {
  require(a.twice_j() == b.twice_j(), ErrorKind::invalid_input, "spin states have different j");
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace detail

/// Spin coherent state pointing along polar angle theta and azimuth phi:
/// gamma_m = sqrt(C(2j, j+m)) cos(theta/2)^(j+m) sin(theta/2)^(j-m) exp(-i m phi).
/// theta = pi/2, phi = 0 is the state polarised along +x.
inline SpinState spin_coherent(int twice_j, double theta, double phi) {
  detail::require(twice_j >= 1, ErrorKind::invalid_parameter, "spin must be at least 1/2");
  std::vector<cplx> a(static_cast<std::size_t>(twice_j + 1));
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  for (int i = 0; i <= twice_j; ++i) {
    const int up = i;               // j + m
    const int down = twice_j - i;   // j - m
    const double m = static_cast<double>(i) - 0.5 * twice_j;
    const double mag = std::sqrt(detail::binomial(twice_j, up)) * std::pow(c, up) * std::pow(s, down);
    a[static_cast<std::size_t>(i)] = std::polar(mag, -m * phi);
  }
  return SpinState(twice_j, std::move(a));
}

inline SpinState spin_up_x(int twice_j) { return spin_coherent(twice_j, 0.5 * std::numbers::pi, 0.0); }

/// <beta|gamma>
inline cplx overlap(const SpinState& beta, const SpinState& gamma) {
  detail::require_same_spin(beta, gamma);
  cplx s{};
  for (std::size_t i = 0; i < beta.dim(); ++i) s += std::conj(beta[i]) * gamma[i];
  return s;
}

/// <beta|j_z|gamma>
inline cplx jz_element(const SpinState& beta, const SpinState& gamma) {
  detail::require_same_spin(beta, gamma);
  cplx s{};
  for (std::size_t i = 0; i < beta.dim(); ++i) s += gamma.m(i) * std::conj(beta[i]) * gamma[i];
  return s;
}

/// exp(-i angle j_z)|gamma>
inline SpinState rotate_z(const SpinState& gamma, double angle) {
  std::vector<cplx> a(gamma.amps().begin(), gamma.amps().end());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= std::polar(1.0, -gamma.m(i) * angle);
  return SpinState(gamma.twice_j(), std::move(a));
}

/// Gamma(tau | omega_L, beta, gamma) = <beta| exp(-i omega_L tau j_z) |gamma>.
inline cplx gamma_kernel(double tau, double omega_L, const SpinState& beta, const SpinState& gamma) {
  detail::require_same_spin(beta, gamma);
  cplx s{};
  for (std::size_t i = 0; i < beta.dim(); ++i)
    s += std::conj(beta[i]) * gamma[i] * std::polar(1.0, -gamma.m(i) * omega_L * tau);
  return s;
}

/// Final (unnormalised) spin state from the shifted-potential amplitudes:
/// component m is A~(x <- G0 | m omega_L) gamma_m. `amplitude` is any callable
/// lambda -> A~(lambda) evaluated exactly at the 2j+1 shifts.
template <class AmplitudeFn>
SpinState final_spin_state(const AmplitudeFn& amplitude, double omega_L, const SpinState& gamma) {
  std::vector<cplx> a(gamma.dim());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = amplitude(gamma.m(i) * omega_L) * gamma[i];
  return SpinState(gamma.twice_j(), std::move(a));
}

/// Same as above but reading A~ from a finished scan. Every shift m omega_L
/// must be a scan node; nothing is interpolated.
inline SpinState final_spin_state(const LambdaScan& scan, double omega_L, const SpinState& gamma) {
  auto lookup = [&](double lambda) {
    const double tol = 1e-12 * std::max(1.0, std::abs(lambda));
    for (const auto& pt : scan.points)
      if (std::abs(pt.lambda - lambda) <= tol) return pt.value;
    throw Error(ErrorKind::invalid_input,
                "lambda scan has no node at lambda = " + std::to_string(lambda) + " (interpolation is not used)");
  };
  return final_spin_state(lookup, omega_L, gamma);
}

/// Final spin state by direct superposition of rotated states,
/// \int dtau A(tau) exp(-i omega_L tau j_z)|gamma>, over the whole tau grid.
inline SpinState final_spin_state(const TauAmplitudeDistribution& dist, double omega_L, const SpinState& gamma) {
  std::vector<cplx> a(gamma.dim());
  const auto v = dist.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double m = gamma.m(i);
    cplx s{};
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * std::polar(1.0, -m * omega_L * dist.tau(k));
    a[i] = s * dist.tau_step() * gamma[i];
  }
  return SpinState(gamma.twice_j(), std::move(a));
}

/// P(beta, x <- gamma, G0) = |<beta|final>|^2.
inline double detection_probability(const SpinState& final_state, const SpinState& beta) {
  return std::norm(overlap(beta, final_state));
}

/// Z(beta, gamma) = <beta|j_z|gamma> / <beta|gamma>.
inline cplx weak_ratio(const SpinState& beta, const SpinState& gamma) {
  const cplx ov = overlap(beta, gamma);
  detail::require(std::abs(ov) > 1e-12, ErrorKind::use_quadratic_probe,
                  "probe is orthogonal to the initial spin; use the quadratic (orthogonal-probe) response");
  return jz_element(beta, gamma) / ov;
}

/// [P(omega_L) - P(0)] / P(0), evaluated exactly.
template <class AmplitudeFn>
double weak_relative_change(const AmplitudeFn& amplitude, const SpinState& beta, const SpinState& gamma,
                            double omega_L) {
  detail::require(std::abs(overlap(beta, gamma)) > 1e-12, ErrorKind::use_quadratic_probe,
                  "probe is orthogonal to the initial spin; use the quadratic (orthogonal-probe) response");
  const double p0 = detection_probability(final_spin_state(amplitude, 0.0, gamma), beta);
  detail::require(p0 > 0.0, ErrorKind::degenerate_transition, "detection probability vanishes without field");
  const double p = detection_probability(final_spin_state(amplitude, omega_L, gamma), beta);
  return (p - p0) / p0;
}

/// First-order prediction for weak_relative_change:
/// 2 omega_L (Re Z Im tau + Im Z Re tau), the omega_L -> 0 limit of
/// |1 - i omega_L tau Z|^2 - 1.
inline double linear_response(cplx Z, const ComplexTime& tau, double omega_L) {
  return 2.0 * omega_L * (Z.real() * tau.im + Z.imag() * tau.re);
}

/// |tau-bar| from an orthogonal probe, P ~ omega_L^2 |tau|^2 |A~(0)|^2 |<beta|j_z|gamma>|^2.
inline double modulus_from_orthogonal_probe(double probability, double omega_L, double amplitude_at_zero,
                                            const SpinState& beta, const SpinState& gamma) {
  const double element = std::abs(jz_element(beta, gamma));
  detail::require(element > 0.0 && omega_L > 0.0 && amplitude_at_zero > 0.0, ErrorKind::invalid_input,
                  "orthogonal probe has no linear coupling");
  return std::sqrt(probability) / (omega_L * amplitude_at_zero * element);
}

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double length() const noexcept { return std::sqrt(x * x + y * y + z * z); }
  double in_plane() const noexcept { return std::hypot(x, y); }
};

/// (<sigma_x>, <sigma_y>, <sigma_z>) of the normalised spin-1/2 state.
inline BlochVector bloch_vector(const SpinState& state) {
  detail::require(state.twice_j() == 1, ErrorKind::invalid_input, "Bloch vector needs spin 1/2");
  const double n = state.norm2();
  detail::require(n > 0.0, ErrorKind::degenerate_transition, "zero spin state has no direction");
  const cplx a = state.up();
  const cplx b = state.down();
  const cplx ab = std::conj(a) * b;
  return {2.0 * ab.real() / n, 2.0 * ab.imag() / n, (std::norm(a) - std::norm(b)) / n};
}

/// Angles read off a spin-1/2 Larmor clock.
struct ClockReadout {
  double delta_phi = 0.0;    // precession in the xy-plane
  double delta_theta = 0.0;  // tilt out of the xy-plane, towards +z
  double omega_L = 0.0;
  ComplexTime tau_inferred;  // (delta_phi, delta_theta) / omega_L; NaN when omega_L = 0
};

/// delta_phi = atan2(<sigma_y>, <sigma_x>), delta_theta = asin(<sigma_z>) of
/// the normalised final state. For omega_L -> 0 these tend to
/// omega_L Re tau-bar and omega_L Im tau-bar.
inline ClockReadout baz_angles(const SpinState& final_state, double omega_L) {
  detail::require(final_state.twice_j() == 1, ErrorKind::invalid_input, "Baz readout needs spin 1/2");
  const auto b = bloch_vector(final_state);
  ClockReadout r;
  r.delta_phi = std::atan2(b.y, b.x);
  r.delta_theta = std::asin(std::clamp(b.z, -1.0, 1.0));
  r.omega_L = omega_L;
  if (omega_L != 0.0) {
    r.tau_inferred = ComplexTime(cplx(r.delta_phi / omega_L, r.delta_theta / omega_L));
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.tau_inferred = ComplexTime(cplx(nan, nan));
  }
  return r;
}

}  // namespace tauclock
