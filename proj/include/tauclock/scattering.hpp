#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

/// One piece of a piecewise-constant potential.
struct Segment {
  double width;
  double height;
};

/// Piecewise-constant potential occupying [0, d]. A rectangular barrier is the
/// single-segment case.
class BarrierSpec {
 public:
  static BarrierSpec rectangle(double V, double d) { return BarrierSpec({Segment{d, V}}); }
  static BarrierSpec piecewise(std::vector<Segment> segments) { return BarrierSpec(std::move(segments)); }

  std::span<const Segment> segments() const noexcept { return segments_; }
  bool is_rectangle() const noexcept { return segments_.size() == 1; }
  double width() const noexcept { return width_; }

  /// Height of a rectangular barrier (first segment otherwise).
  double height() const noexcept { return segments_.front().height; }

  double max_height() const noexcept {
    double v = segments_.front().height;
    for (const auto& s : segments_) v = std::max(v, s.height);
    return v;
  }

  /// Width-weighted mean height, (1/d) \int V(x) dx.
  double mean_height() const noexcept {
    double acc = 0.0;
    for (const auto& s : segments_) acc += s.width * s.height;
    return acc / width_;
  }

  /// V(x) + lambda on [0, d].
  BarrierSpec shifted(double lambda) const {
    std::vector<Segment> s(segments_);
    for (auto& seg : s) seg.height += lambda;
    return BarrierSpec(std::move(s));
  }

 private:
  explicit BarrierSpec(std::vector<Segment> segments) : segments_(std::move(segments)) {
    detail::require(!segments_.empty(), ErrorKind::invalid_parameter, "barrier needs at least one segment");
    width_ = 0.0;
    for (const auto& s : segments_) {
      detail::require(s.width > 0.0 && std::isfinite(s.width), ErrorKind::invalid_parameter,
                      "segment widths must be positive");
      detail::require(std::isfinite(s.height), ErrorKind::invalid_parameter, "segment heights must be finite");
      width_ += s.width;
    }
  }

  std::vector<Segment> segments_;
  double width_ = 0.0;
};

/// Every packet momentum is classically reflected by the barrier
/// (p^2 / 2mu below the highest segment).
inline bool tunnels(const WavePacket& packet, const BarrierSpec& barrier) {
  return packet.max_energy() < barrier.max_height();
}

namespace detail {

/// cosh(sqrt(z)) and sinh(sqrt(z))/sqrt(z) for real z, both entire in z, so
/// the kinetic-energy sign change at E = V needs no special casing. For large
/// positive z the common factor exp(sqrt(z)) is pulled out into log_scale.
struct ScaledCoshSinhc {
  double c;
  double s;
  double log_scale;
};

inline ScaledCoshSinhc cosh_sinhc(double z) noexcept {
  if (std::abs(z) < 0.25) {
    // Taylor series: sum z^k/(2k)!, sum z^k/(2k+1)!
    double c = 1.0;
    double s = 1.0;
    double tc = 1.0;
    double ts = 1.0;
    for (int k = 1; k < 20; ++k) {
      tc *= z / ((2.0 * k - 1.0) * (2.0 * k));
      ts *= z / ((2.0 * k) * (2.0 * k + 1.0));
      c += tc;
      s += ts;
      if (std::abs(tc) < 1e-18 && std::abs(ts) < 1e-18) break;
    }
    return {c, s, 0.0};
  }
  if (z > 0.0) {
    const double r = std::sqrt(z);
    if (r < 20.0) return {std::cosh(r), std::sinh(r) / r, 0.0};
    const double e = std::exp(-2.0 * r);
    return {0.5 * (1.0 + e), 0.5 * (1.0 - e) / r, r};
  }
  const double r = std::sqrt(-z);
  return {std::cos(r), std::sin(r) / r, 0.0};
}

inline void require_momentum(double p, double mu) {
  require(p > 0.0 && std::isfinite(p), ErrorKind::invalid_parameter, "momentum p must be positive");
  require(mu > 0.0 && std::isfinite(mu), ErrorKind::invalid_parameter, "mass mu must be positive");
}

/// Real transfer matrix acting on (psi, psi') from x = 0 to x = d, stored as
/// exp(log_scale) * m.
struct ScaledTransfer {
  double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
  double log_scale = 0.0;
};

inline ScaledTransfer transfer_matrix(double p, std::span<const Segment> segments, double lambda, double mu) {
  ScaledTransfer t;
  for (const auto& seg : segments) {
    const double k2 = 2.0 * mu * (seg.height + lambda) - p * p;
    const auto cs = cosh_sinhc(k2 * seg.width * seg.width);
    const double a11 = cs.c, a12 = seg.width * cs.s, a21 = k2 * seg.width * cs.s, a22 = cs.c;
    const double n11 = a11 * t.m11 + a12 * t.m21;
    const double n12 = a11 * t.m12 + a12 * t.m22;
    const double n21 = a21 * t.m11 + a22 * t.m21;
    const double n22 = a21 * t.m12 + a22 * t.m22;
    const double big = std::max({std::abs(n11), std::abs(n12), std::abs(n21), std::abs(n22)});
    t.m11 = n11 / big;
    t.m12 = n12 / big;
    t.m21 = n21 / big;
    t.m22 = n22 / big;
    t.log_scale += cs.log_scale + std::log(big);
  }
  return t;
}

}  // namespace detail

/// Transmission and reflection amplitudes for a wave exp(ipx) incident from
/// the left: r exp(-ipx) is reflected and t exp(ipx) is found for x > d.
struct ScatteringAmplitudes {
  cplx t;
  cplx r;
};

/// Closed-form transmission amplitude of a rectangular barrier of height V
/// and width d, with the convention that t exp(ipx) is the transmitted wave
/// (V = 0 gives t = 1). Negative V (a well) and E > V use the same formula.
inline cplx rect_transmission(double p, double V, double d, double mu) {
  detail::require_momentum(p, mu);
  detail::require(d > 0.0 && std::isfinite(d), ErrorKind::invalid_parameter, "barrier width d must be positive");
  const double k2 = 2.0 * mu * V - p * p;
  const auto cs = detail::cosh_sinhc(k2 * d * d);
  const cplx den(2.0 * cs.c, (k2 - p * p) / p * d * cs.s);
  return 2.0 * std::exp(-cs.log_scale) * std::polar(1.0, -p * d) / den;
}

/// Transfer-matrix scattering amplitudes through all segments of the barrier
/// (shifted by lambda). The matrix product is carried in a scaled form, so
/// opaque stacks give tiny but finite t rather than overflowing.
inline ScatteringAmplitudes piecewise_scattering(double p, const BarrierSpec& barrier, double mu,
                                                 double lambda = 0.0) {
  detail::require_momentum(p, mu);
  const auto m = detail::transfer_matrix(p, barrier.segments(), lambda, mu);
  const cplx den(m.m11 + m.m22, m.m21 / p - p * m.m12);
  const cplx t = 2.0 * std::exp(-m.log_scale) * std::polar(1.0, -p * barrier.width()) / den;
  const cplx r = 2.0 * cplx(m.m22, -p * m.m12) / den - 1.0;
  return {t, r};
}

inline cplx piecewise_transmission(double p, const BarrierSpec& barrier, double mu) {
  return piecewise_scattering(p, barrier, mu).t;
}

/// The transmitted packet amplitude for the composite potential V(x) + lambda.
struct LambdaAmplitude {
  double lambda;
  cplx value;
};

/// Evaluates
///
///   A~(x <- G0 | lambda) = \int a(p - p0) t(p; V + lambda) exp(i p x - i p^2 T / 2mu) dp
///
/// for one packet, barrier, detection point and total time. Everything that
/// does not depend on lambda is precomputed, so a lambda scan costs one
/// transmission amplitude per grid momentum and lambda. The trapezoid sum runs
/// left to right over the momentum grid.
class TransmittedAmplitude {
 public:
  TransmittedAmplitude(const WavePacket& packet, const BarrierSpec& barrier, double x, double T_total)
      : barrier_(barrier), mu_(packet.mu()), x_(x), T_total_(T_total) {
    detail::require(x > barrier.width(), ErrorKind::unsupported_configuration,
                    "detection point must lie behind the barrier (x > d)");
    detail::require(T_total > 0.0 && std::isfinite(T_total), ErrorKind::invalid_parameter,
                    "T_total must be positive");
    detail::require(packet.p_min() > 0.0, ErrorKind::invalid_parameter,
                    "all packet momenta must be positive");
    const auto a = packet.amplitudes();
    momenta_.resize(a.size());
    weights_.resize(a.size());
    ceiling_ = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double p = packet.momentum(i);
      momenta_[i] = p;
      weights_[i] = detail::trapezoid_weight(i, a.size()) * packet.p_step() * a[i] *
                    std::polar(1.0, p * x - p * p * T_total / (2.0 * mu_));
      ceiling_ += std::abs(weights_[i]);
    }
  }

  cplx operator()(double lambda) const {
    cplx sum{};
    if (barrier_.is_rectangle()) {
      const double U = barrier_.height() + lambda;
      const double d = barrier_.width();
      for (std::size_t i = 0; i < momenta_.size(); ++i) {
        const double p = momenta_[i];
        const double k2 = 2.0 * mu_ * U - p * p;
        const auto cs = detail::cosh_sinhc(k2 * d * d);
        const cplx den(2.0 * cs.c, (k2 - p * p) / p * d * cs.s);
        sum += weights_[i] * (2.0 * std::exp(-cs.log_scale) * std::polar(1.0, -p * d) / den);
      }
    } else {
      for (std::size_t i = 0; i < momenta_.size(); ++i)
        sum += weights_[i] * piecewise_scattering(momenta_[i], barrier_, mu_, lambda).t;
    }
    return sum;
  }

  /// Upper bound on |A~(lambda)| from |t| <= 1: sum of |quadrature weights|.
  double ceiling() const noexcept { return ceiling_; }

  const BarrierSpec& barrier() const noexcept { return barrier_; }
  double x() const noexcept { return x_; }
  double T_total() const noexcept { return T_total_; }

 private:
  BarrierSpec barrier_;
  double mu_;
  double x_;
  double T_total_;
  double ceiling_;
  std::vector<double> momenta_;
  std::vector<cplx> weights_;
};

inline LambdaAmplitude lambda_amplitude(const WavePacket& packet, const BarrierSpec& barrier, double lambda,
                                        double x, double T_total) {
  return {lambda, TransmittedAmplitude(packet, barrier, x, T_total)(lambda)};
}

}  // namespace tauclock
