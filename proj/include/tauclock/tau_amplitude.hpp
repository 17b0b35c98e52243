#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/parallel.hpp"
#include "tauclock/scattering.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

/// Distributions whose reconstructed |A| mass outside [0, T_total] is at or
/// above this fraction are marked unconverged.
inline constexpr double kLeakageLimit = 0.01;

/// Smallest |A(x <- G0)| accepted as a denominator.
inline constexpr double kDegenerateGuard = 1e-300;

/// Smallest |sum A| / sum |A| accepted by the moments.
inline constexpr double kCancellationGuard = 1e-12;

/// Window applied to the lambda samples before inversion.
struct Taper {
  enum class Kind { none, raised_cosine };

  Kind kind = Kind::raised_cosine;
  double fraction = 0.1;  // of the samples at each end, raised_cosine only

  static Taper none() { return {Kind::none, 0.0}; }
  static Taper raised_cosine(double fraction) {
    detail::require(fraction >= 0.0 && fraction <= 0.5, ErrorKind::invalid_parameter,
                    "taper fraction must lie in [0, 0.5]");
    return {Kind::raised_cosine, fraction};
  }

  std::vector<double> weights(std::size_t n) const {
    std::vector<double> w(n, 1.0);
    if (kind == Kind::none) return w;
    const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < m; ++i) {
      const double v = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
      w[i] = v;
      w[n - 1 - i] = v;
    }
    return w;
  }

  std::string describe() const {
    if (kind == Kind::none) return "none";
    return "raised-cosine(" + std::to_string(fraction) + ")";
  }
};

/// Uniform lambda samples of A~ together with the reference height the
/// window was anchored on.
///
/// The window covers composite in-region heights V_ref + lambda in
/// [-Lambda, Lambda), i.e. lambda in [-V_ref - Lambda, -V_ref + Lambda), where
/// V_ref is the mean barrier height. Anchoring on the composite height makes
/// scans for different barrier heights sample the same set of potentials.
struct LambdaScan {
  double reference_height = 0.0;
  double Lambda = 0.0;
  std::vector<LambdaAmplitude> points;
};

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// A~ on n_lambda uniform points; sample k sits at
/// lambda_k = -V_ref - Lambda + k * 2 Lambda / n_lambda.
inline LambdaScan lambda_scan(const WavePacket& packet, const BarrierSpec& barrier, double x, double T_total,
                              double Lambda, std::size_t n_lambda) {
  detail::require(Lambda > 0.0 && std::isfinite(Lambda), ErrorKind::invalid_parameter, "Lambda must be positive");
  detail::require(n_lambda >= 256 && is_power_of_two(n_lambda), ErrorKind::invalid_parameter,
                  "n_lambda must be a power of two >= 256");
  const TransmittedAmplitude amplitude(packet, barrier, x, T_total);
  LambdaScan scan;
  scan.reference_height = barrier.mean_height();
  scan.Lambda = Lambda;
  scan.points.resize(n_lambda);
  const double first = -scan.reference_height - Lambda;
  const double step = 2.0 * Lambda / static_cast<double>(n_lambda);
  parallel_for(n_lambda, [&](std::size_t k) {
    const double lambda = first + static_cast<double>(k) * step;
    scan.points[k] = {lambda, amplitude(lambda)};
  });
  return scan;
}

/// Window and grid bookkeeping carried by a reconstructed distribution.
struct WindowMeta {
  double Lambda = 0.0;
  double lambda_first = 0.0;
  double lambda_step = 0.0;
  std::size_t n_lambda = 0;
  Taper taper = Taper::none();
  double reference_height = 0.0;
};

/// Complex amplitude A(x <- G0 | tau) on a uniform tau grid. The grid spans a
/// full period of the discrete inversion, so content at tau < 0 or
/// tau > T_total stays visible and is reported as leakage.
class TauAmplitudeDistribution {
 public:
  TauAmplitudeDistribution(double tau_first, double tau_step, std::vector<cplx> values, double T_total,
                           WindowMeta meta = {})
      : tau_first_(tau_first), tau_step_(tau_step), values_(std::move(values)), T_total_(T_total),
        meta_(std::move(meta)) {
    detail::require(tau_step_ > 0.0 && std::isfinite(tau_step_), ErrorKind::invalid_input,
                    "tau grid must be uniform and increasing");
    detail::require(!values_.empty(), ErrorKind::invalid_input, "empty distribution");
    detail::require(T_total_ > 0.0, ErrorKind::invalid_parameter, "T_total must be positive");
    double inside = 0.0;
    double outside = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double t = tau(k);
      const double a = std::abs(values_[k]);
      if (t >= 0.0 && t <= T_total_)
        inside += a;
      else
        outside += a;
    }
    const double total = inside + outside;
    leakage_ = total > 0.0 ? outside / total : 0.0;
  }

  std::size_t size() const noexcept { return values_.size(); }
  double tau(std::size_t k) const noexcept { return tau_first_ + static_cast<double>(k) * tau_step_; }
  double tau_step() const noexcept { return tau_step_; }
  std::span<const cplx> values() const noexcept { return values_; }
  double T_total() const noexcept { return T_total_; }
  const WindowMeta& meta() const noexcept { return meta_; }

  /// (sum of |A| outside [0, T_total]) / (sum of |A|).
  double leakage() const noexcept { return leakage_; }
  bool converged() const noexcept { return leakage_ < kLeakageLimit; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  double tau_first_;
  double tau_step_;
  std::vector<cplx> values_;
  double T_total_;
  WindowMeta meta_;
  double leakage_ = 0.0;
};

namespace detail {

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// out_k = sum_j in_j exp(+2 pi i j k / n). FFTW_ESTIMATE planning on
/// fftw_malloc'd buffers yields the same plan, hence the same bits, every run.
inline std::vector<cplx> backward_dft(std::span<const cplx> in) {
  const int n = static_cast<int>(in.size());
  std::unique_ptr<fftw_complex, FftwFree> buf_in(fftw_alloc_complex(in.size()));
  std::unique_ptr<fftw_complex, FftwFree> buf_out(fftw_alloc_complex(in.size()));
  require(buf_in && buf_out, ErrorKind::io, "fftw allocation failed");
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(n, buf_in.get(), buf_out.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  for (std::size_t j = 0; j < in.size(); ++j) {
    buf_in.get()[j][0] = in[j].real();
    buf_in.get()[j][1] = in[j].imag();
  }
  fftw_execute(plan);
  std::vector<cplx> out(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = cplx(buf_out.get()[k][0], buf_out.get()[k][1]);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace detail

/// Discrete form of A(tau) = (2 pi)^-1 \int d lambda exp(i lambda tau) A~(lambda):
///
///   A(tau_k) = (dlambda / 2 pi) sum_j exp(i lambda_j tau_k) w_j A~(lambda_j),
///
/// with tau_k = k * pi / Lambda for k = -n/2 .. n/2 - 1 and w the taper.
inline TauAmplitudeDistribution invert_to_tau(std::span<const LambdaAmplitude> points, double T_total,
                                              Taper taper, double reference_height = 0.0) {
  const std::size_t n = points.size();
  detail::require(n >= 2, ErrorKind::invalid_input, "need at least two lambda samples");
  const double first = points.front().lambda;
  const double step = (points.back().lambda - first) / static_cast<double>(n - 1);
  detail::require(step > 0.0, ErrorKind::invalid_input, "lambda grid must be increasing");
  for (std::size_t j = 0; j < n; ++j) {
    const double expected = first + static_cast<double>(j) * step;
    detail::require(std::abs(points[j].lambda - expected) <= 1e-9 * step, ErrorKind::invalid_input,
                    "lambda grid is not uniform");
  }
  const auto w = taper.weights(n);
  std::vector<cplx> f(n);
  for (std::size_t j = 0; j < n; ++j) f[j] = w[j] * points[j].value;
  const auto b = detail::backward_dft(f);

  const double dtau = kTwoPi / (static_cast<double>(n) * step);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<cplx> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i) - half;
    const std::size_t idx = static_cast<std::size_t>((k % static_cast<std::ptrdiff_t>(n) + static_cast<std::ptrdiff_t>(n)) %
                                                     static_cast<std::ptrdiff_t>(n));
    const double tau = static_cast<double>(k) * dtau;
    values[i] = (step / kTwoPi) * std::polar(1.0, first * tau) * b[idx];
  }
  WindowMeta meta;
  meta.Lambda = 0.5 * step * static_cast<double>(n);
  meta.lambda_first = first;
  meta.lambda_step = step;
  meta.n_lambda = n;
  meta.taper = taper;
  meta.reference_height = reference_height;
  return TauAmplitudeDistribution(-static_cast<double>(half) * dtau, dtau, std::move(values), T_total, meta);
}

inline TauAmplitudeDistribution invert_to_tau(const LambdaScan& scan, double T_total, Taper taper) {
  return invert_to_tau(scan.points, T_total, taper, scan.reference_height);
}

/// sum_k A(tau_k) dtau over the whole grid; equals A~(0) when lambda = 0 is a
/// grid node with unit taper weight.
inline cplx sum_rule_check(const TauAmplitudeDistribution& dist) {
  cplx sum{};
  for (const auto& v : dist.values()) sum += v;
  return sum * dist.tau_step();
}

/// tau-bar = re + i im.
struct ComplexTime {
  double re = 0.0;
  double im = 0.0;
  double modulus = 0.0;

  ComplexTime() = default;
  explicit ComplexTime(cplx z) : re(z.real()), im(z.imag()), modulus(std::hypot(z.real(), z.imag())) {}
  cplx value() const noexcept { return {re, im}; }
};

/// sum tau^n A / sum A, n in {0, 1, 2, 3}.
inline cplx nth_moment(const TauAmplitudeDistribution& dist, int n) {
  detail::require(n >= 0 && n <= 3, ErrorKind::invalid_parameter, "moment order must be 0..3");
  detail::require(dist.converged(), ErrorKind::invalid_input,
                  "distribution not converged (leakage " + std::to_string(dist.leakage()) + ")");
  cplx num{};
  cplx den{};
  double mass = 0.0;
  const auto v = dist.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double t = dist.tau(k);
    num += std::pow(t, n) * v[k];
    den += v[k];
    mass += std::abs(v[k]);
  }
  // A total at round-off level relative to sum |A| counts as vanishing too.
  const double total = std::abs(den);
  detail::require(total * dist.tau_step() > kDegenerateGuard && total > kCancellationGuard * mass,
                  ErrorKind::degenerate_transition,
                  "total amplitude vanishes; the mean duration is undefined");
  return num / den;
}

/// tau-bar = \int tau A dtau / \int A dtau from the reconstructed distribution.
inline ComplexTime complex_time(const TauAmplitudeDistribution& dist) { return ComplexTime(nth_moment(dist, 1)); }

/// i * ln[A~(h) / A~(-h)] / (2h): central difference of i d ln A~ / d lambda.
template <class AmplitudeFn>
cplx central_difference_time(const AmplitudeFn& amplitude, double h) {
  const cplx plus = amplitude(h);
  const cplx minus = amplitude(-h);
  detail::require(std::abs(plus) > kDegenerateGuard && std::abs(minus) > kDegenerateGuard,
                  ErrorKind::degenerate_transition, "shifted amplitude vanishes");
  return cplx(0.0, 1.0) * std::log(plus / minus) / (2.0 * h);
}

/// tau-bar = i d ln A~ / d lambda at lambda = 0, by Richardson-extrapolated
/// central differences. The step is halved until successive extrapolations
/// agree to 1e-9 relative or stop improving. Independent of any tau grid.
template <class AmplitudeFn>
ComplexTime complex_time_by_derivative(const AmplitudeFn& amplitude, double delta_lambda) {
  detail::require(delta_lambda > 0.0, ErrorKind::invalid_parameter, "delta_lambda must be positive");
  detail::require(std::abs(amplitude(0.0)) > kDegenerateGuard, ErrorKind::degenerate_transition,
                  "transition amplitude vanishes; the complex time is undefined");
  double h = delta_lambda;
  // Keep the first step inside the principal branch of the log.
  for (int i = 0; i < 40 && std::abs(std::arg(amplitude(h) / amplitude(-h))) > 0.5; ++i) h *= 0.5;
  cplx d_prev = central_difference_time(amplitude, h);
  h *= 0.5;
  cplx d_cur = central_difference_time(amplitude, h);
  cplx r_prev = (4.0 * d_cur - d_prev) / 3.0;
  double change_prev = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 12; ++level) {
    h *= 0.5;
    const cplx d_next = central_difference_time(amplitude, h);
    const cplx r = (4.0 * d_next - d_cur) / 3.0;
    const double change = std::abs(r - r_prev);
    if (change <= 1e-9 * std::max(1.0, std::abs(r))) return ComplexTime(r);
    if (change > change_prev) return ComplexTime(r_prev);  // round-off floor reached
    change_prev = change;
    r_prev = r;
    d_cur = d_next;
  }
  return ComplexTime(r_prev);
}

inline ComplexTime complex_time_by_derivative(const WavePacket& packet, const BarrierSpec& barrier, double x,
                                              double T_total, double delta_lambda = 1e-2) {
  const TransmittedAmplitude amplitude(packet, barrier, x, T_total);
  return complex_time_by_derivative(amplitude, delta_lambda);
}

/// Distribution for the rectangular barrier of height V obtained from the
/// free one: A(tau) = exp(-i V tau) A0(tau).
inline TauAmplitudeDistribution rect_phase_map(const TauAmplitudeDistribution& free_dist, double V) {
  detail::require(free_dist.meta().reference_height == 0.0, ErrorKind::invalid_input,
                  "phase map needs a distribution computed without barrier (V = 0)");
  std::vector<cplx> values(free_dist.values().begin(), free_dist.values().end());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] *= std::polar(1.0, -V * free_dist.tau(k));
  WindowMeta meta = free_dist.meta();
  meta.reference_height = V;
  meta.lambda_first -= V;
  return TauAmplitudeDistribution(free_dist.tau(0), free_dist.tau_step(), std::move(values), free_dist.T_total(),
                                  meta);
}

}  // namespace tauclock
