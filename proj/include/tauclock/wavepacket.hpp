#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"

namespace tauclock {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace detail {

inline double trapezoid_weight(std::size_t i, std::size_t n) noexcept {
  return (i == 0 || i + 1 == n) ? 0.5 : 1.0;
}

}  // namespace detail

/// Momentum-space description of an initial wave packet (hbar = 1),
///
///   G0(x) = \int a(p - p0) exp(i p x) dp,
///
/// sampled on a uniform, strictly increasing momentum grid. Normalisation is
/// 2*pi * sum |a|^2 * step = 1, which makes \int |G0(x)|^2 dx = 1.
class WavePacket {
 public:
  WavePacket(double p0, double dp, double x_c, double mu, double p_first, double p_step,
             std::vector<cplx> amplitudes)
      : p0_(p0), dp_(dp), x_c_(x_c), mu_(mu), p_first_(p_first), p_step_(p_step),
        amplitudes_(std::move(amplitudes)) {
    detail::require(dp_ > 0.0 && std::isfinite(dp_), ErrorKind::invalid_parameter,
                    "momentum spread dp must be positive");
    detail::require(mu_ > 0.0 && std::isfinite(mu_), ErrorKind::invalid_parameter,
                    "mass mu must be positive");
    detail::require(p_step_ > 0.0 && std::isfinite(p_step_), ErrorKind::invalid_parameter,
                    "momentum grid must be strictly increasing");
    detail::require(amplitudes_.size() >= 2, ErrorKind::invalid_parameter,
                    "momentum grid needs at least two points");
  }

  double p0() const noexcept { return p0_; }
  double dp() const noexcept { return dp_; }
  double x_c() const noexcept { return x_c_; }
  double mu() const noexcept { return mu_; }

  std::size_t size() const noexcept { return amplitudes_.size(); }
  double p_step() const noexcept { return p_step_; }
  double momentum(std::size_t i) const noexcept { return p_first_ + static_cast<double>(i) * p_step_; }
  double p_min() const noexcept { return momentum(0); }
  double p_max() const noexcept { return momentum(size() - 1); }
  std::span<const cplx> amplitudes() const noexcept { return amplitudes_; }

  /// Largest kinetic energy p^2/(2 mu) on the grid.
  double max_energy() const noexcept {
    double p = std::max(std::abs(p_min()), std::abs(p_max()));
    return p * p / (2.0 * mu_);
  }

  /// The packet after free evolution for time t: a(p) -> a(p) exp(-i p^2 t / 2mu).
  /// The nominal centre moves with the group velocity p0/mu.
  WavePacket evolved(double t) const {
    std::vector<cplx> a(amplitudes_);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double p = momentum(i);
      a[i] *= std::polar(1.0, -p * p * t / (2.0 * mu_));
    }
    return WavePacket(p0_, dp_, x_c_ + p0_ * t / mu_, mu_, p_first_, p_step_, std::move(a));
  }

  /// Keeps grid points [first, first + count).
  WavePacket truncated(std::size_t first, std::size_t count) const {
    detail::require(first + count <= size() && count >= 2, ErrorKind::invalid_parameter,
                    "truncation range outside the momentum grid");
    std::vector<cplx> a(amplitudes_.begin() + static_cast<std::ptrdiff_t>(first),
                        amplitudes_.begin() + static_cast<std::ptrdiff_t>(first + count));
    return WavePacket(p0_, dp_, x_c_, mu_, momentum(first), p_step_, std::move(a));
  }

 private:
  double p0_;
  double dp_;
  double x_c_;
  double mu_;
  double p_first_;
  double p_step_;
  std::vector<cplx> amplitudes_;
};

/// 2*pi * sum |a|^2 * step, summed left to right.
inline double packet_norm(const WavePacket& packet) {
  double sum = 0.0;
  for (const cplx& a : packet.amplitudes()) sum += std::norm(a);
  return kTwoPi * sum * packet.p_step();
}

/// Gaussian packet a(q) ~ exp(-q^2/(4 dp^2) - i q x_c) on p0 +- span*dp with
/// n_points samples (end points included). The grid is not renormalised after
/// truncation beyond what the construction itself does; the tail mass outside
/// +-6 dp is below 1e-8.
inline WavePacket make_gaussian_packet(double p0, double dp, double x_c, double mu,
                                       std::size_t n_points = 512, double span = 6.0) {
  detail::require(dp > 0.0 && std::isfinite(dp), ErrorKind::invalid_parameter,
                  "momentum spread dp must be positive");
  detail::require(mu > 0.0 && std::isfinite(mu), ErrorKind::invalid_parameter,
                  "mass mu must be positive");
  detail::require(n_points >= 16, ErrorKind::invalid_parameter, "n_points must be at least 16");
  detail::require(span >= 6.0, ErrorKind::invalid_parameter, "span must be at least 6");
  detail::require(std::isfinite(p0) && std::isfinite(x_c), ErrorKind::invalid_parameter,
                  "p0 and x_c must be finite");

  const double p_first = p0 - span * dp;
  const double step = 2.0 * span * dp / static_cast<double>(n_points - 1);
  std::vector<cplx> a(n_points);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double q = p_first + static_cast<double>(i) * step - p0;
    a[i] = std::exp(cplx(-q * q / (4.0 * dp * dp), -q * x_c));
    sum += std::norm(a[i]);
  }
  const double scale = 1.0 / std::sqrt(kTwoPi * sum * step);
  for (auto& v : a) v *= scale;
  return WavePacket(p0, dp, x_c, mu, p_first, step, std::move(a));
}

/// \int a(p - p0) exp(i p x - i p^2 t / 2mu) dp by the trapezoid rule on the
/// packet grid. At t_free = 0 this is G0(x).
inline cplx position_amplitude(const WavePacket& packet, double x, double t_free = 0.0) {
  const auto a = packet.amplitudes();
  const double two_mu = 2.0 * packet.mu();
  cplx sum{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = packet.momentum(i);
    sum += detail::trapezoid_weight(i, a.size()) * a[i] * std::polar(1.0, p * x - p * p * t_free / two_mu);
  }
  return sum * packet.p_step();
}

/// Mean momentum 2*pi * sum p |a|^2 step / norm.
inline double mean_momentum(const WavePacket& packet) {
  double num = 0.0;
  double den = 0.0;
  const auto a = packet.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += packet.momentum(i) * std::norm(a[i]);
    den += std::norm(a[i]);
  }
  return num / den;
}

/// Location of the maximum of |position_amplitude| on [x_lo, x_hi] at time
/// t_free: coarse scan with n_scan points followed by golden-section refinement.
inline double peak_position(const WavePacket& packet, double t_free, double x_lo, double x_hi,
                            std::size_t n_scan = 401) {
  detail::require(x_hi > x_lo && n_scan >= 3, ErrorKind::invalid_parameter, "bad peak search window");
  const double h = (x_hi - x_lo) / static_cast<double>(n_scan - 1);
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < n_scan; ++i) {
    const double v = std::abs(position_amplitude(packet, x_lo + static_cast<double>(i) * h, t_free));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = x_lo + static_cast<double>(best == 0 ? 0 : best - 1) * h;
  double b = x_lo + static_cast<double>(std::min(best + 1, n_scan - 1)) * h;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return -std::abs(position_amplitude(packet, x, t_free)); };
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 80 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace tauclock
