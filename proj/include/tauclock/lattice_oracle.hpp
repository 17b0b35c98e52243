#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tauclock/error.hpp"
#include "tauclock/parallel.hpp"
#include "tauclock/wavepacket.hpp"

namespace tauclock {

inline constexpr std::size_t kMaxLatticeSites = 8;
inline constexpr std::size_t kMaxLatticeSteps = 12;
inline constexpr double kMaxLatticePaths = 1e7;

/// A small discrete-time system: N applications of a one-step unitary U
/// (U(to, from) is the hop amplitude), with a marked region of sites standing
/// in for the barrier. A path spends one step of duration dt in the region for
/// every step that arrives on a region site.
struct LatticeSpec {
  std::size_t n_sites = 0;
  std::vector<std::size_t> region;
  Eigen::MatrixXcd hop;
  std::size_t n_steps = 0;
  double dt = 1.0;
  std::size_t start = 0;
  std::size_t end = 0;

  double T_total() const noexcept { return static_cast<double>(n_steps) * dt; }

  bool in_region(std::size_t site) const noexcept {
    return std::find(region.begin(), region.end(), site) != region.end();
  }

  double path_count() const noexcept {
    return std::pow(static_cast<double>(n_sites), static_cast<double>(n_steps));
  }

  void validate() const {
    detail::require(n_sites >= 1 && n_sites <= kMaxLatticeSites, ErrorKind::invalid_parameter,
                    "n_sites must lie in 1..8");
    detail::require(static_cast<std::size_t>(hop.rows()) == n_sites && static_cast<std::size_t>(hop.cols()) == n_sites,
                    ErrorKind::invalid_parameter, "hop matrix must be n_sites x n_sites");
    const Eigen::MatrixXcd defect = hop.adjoint() * hop - Eigen::MatrixXcd::Identity(hop.rows(), hop.cols());
    detail::require(defect.cwiseAbs().maxCoeff() < 1e-12, ErrorKind::invalid_parameter, "hop matrix is not unitary");
    // The full lattice is accepted as a region: it is the "always inside" edge case.
    detail::require(!region.empty(), ErrorKind::invalid_parameter, "region must not be empty");
    for (std::size_t i = 0; i < region.size(); ++i) {
      detail::require(region[i] < n_sites, ErrorKind::invalid_parameter, "region site out of range");
      for (std::size_t j = 0; j < i; ++j)
        detail::require(region[i] != region[j], ErrorKind::invalid_parameter, "region lists a site twice");
    }
    detail::require(n_steps <= kMaxLatticeSteps, ErrorKind::too_large_lattice, "n_steps must not exceed 12");
    detail::require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_parameter, "dt must be positive");
    detail::require(start < n_sites && end < n_sites, ErrorKind::invalid_parameter, "start/end site out of range");
  }
};

/// A_n for tau_n = n * dt, n = 0..N.
struct DiscreteTauAmplitudes {
  std::vector<cplx> amps;
  double dt = 1.0;

  cplx total() const {
    cplx s{};
    for (const auto& a : amps) s += a;
    return s;
  }
};

namespace detail {

inline void enumerate_paths(const LatticeSpec& spec, std::size_t site, std::size_t step, std::size_t count, cplx amp,
                            std::vector<std::vector<cplx>>& bins) {
  if (step == spec.n_steps) {
    bins[site][count] += amp;
    return;
  }
  for (std::size_t next = 0; next < spec.n_sites; ++next) {
    const cplx hop = spec.hop(static_cast<Eigen::Index>(next), static_cast<Eigen::Index>(site));
    enumerate_paths(spec, next, step + 1, count + (spec.in_region(next) ? 1 : 0), amp * hop, bins);
  }
}

}  // namespace detail

/// Exhaustive path sum binned by time in the region, for every end site:
/// result[end][n]. The first step is sharded across workers and the shards are
/// added in site order.
inline std::vector<DiscreteTauAmplitudes> path_sum_tau_all_ends(const LatticeSpec& spec) {
  spec.validate();
  detail::require(spec.path_count() <= kMaxLatticePaths, ErrorKind::too_large_lattice,
                  "path count n_sites^N exceeds 1e7");
  const std::size_t bins_per_end = spec.n_steps + 1;
  std::vector<std::vector<cplx>> total(spec.n_sites, std::vector<cplx>(bins_per_end));
  if (spec.n_steps == 0) {
    total[spec.start][0] = 1.0;
  } else {
    std::vector<std::vector<std::vector<cplx>>> shards(
        spec.n_sites, std::vector<std::vector<cplx>>(spec.n_sites, std::vector<cplx>(bins_per_end)));
    parallel_for(spec.n_sites, [&](std::size_t first) {
      const cplx amp = spec.hop(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(spec.start));
      detail::enumerate_paths(spec, first, 1, spec.in_region(first) ? 1 : 0, amp, shards[first]);
    });
    for (std::size_t first = 0; first < spec.n_sites; ++first)
      for (std::size_t e = 0; e < spec.n_sites; ++e)
        for (std::size_t n = 0; n < bins_per_end; ++n) total[e][n] += shards[first][e][n];
  }
  std::vector<DiscreteTauAmplitudes> out(spec.n_sites);
  for (std::size_t e = 0; e < spec.n_sites; ++e) out[e] = {std::move(total[e]), spec.dt};
  return out;
}

inline DiscreteTauAmplitudes path_sum_tau(const LatticeSpec& spec) {
  auto all = path_sum_tau_all_ends(spec);
  return std::move(all[spec.end]);
}

/// (end, start) entry of (P U)^N, where P multiplies region sites by
/// exp(-i lambda dt): the amplitude in the lattice with the region raised by
/// lambda. Equals sum_n A_n exp(-i lambda n dt).
inline cplx lattice_lambda_amplitude(const LatticeSpec& spec, double lambda) {
  spec.validate();
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(spec.n_sites));
  psi(static_cast<Eigen::Index>(spec.start)) = 1.0;
  const cplx phase = std::polar(1.0, -lambda * spec.dt);
  for (std::size_t step = 0; step < spec.n_steps; ++step) {
    psi = (spec.hop * psi).eval();
    for (std::size_t s : spec.region) psi(static_cast<Eigen::Index>(s)) *= phase;
  }
  return psi(static_cast<Eigen::Index>(spec.end));
}

/// Both routes to A_n and their largest disagreement.
struct EquivalenceReport {
  std::vector<cplx> path_sum;
  std::vector<cplx> fourier;
  cplx propagator;  // (U^N)(end, start)
  double max_discrepancy = 0.0;
  double dt = 1.0;
};

/// A_n by enumeration and by inverting lattice_lambda_amplitude over
/// lambda_k = 2 pi k / ((N+1) dt), k = 0..N, which is an exact DFT pair.
inline EquivalenceReport equivalence_report(const LatticeSpec& spec) {
  EquivalenceReport rep;
  rep.dt = spec.dt;
  rep.path_sum = path_sum_tau(spec).amps;
  const std::size_t m = spec.n_steps + 1;
  std::vector<cplx> shifted(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double lambda = kTwoPi * static_cast<double>(k) / (static_cast<double>(m) * spec.dt);
    shifted[k] = lattice_lambda_amplitude(spec, lambda);
  }
  rep.fourier.assign(m, cplx{});
  for (std::size_t n = 0; n < m; ++n) {
    cplx acc{};
    for (std::size_t k = 0; k < m; ++k) {
      const double arg = kTwoPi * static_cast<double>((k * n) % m) / static_cast<double>(m);
      acc += shifted[k] * std::polar(1.0, arg);
    }
    rep.fourier[n] = acc / static_cast<double>(m);
  }
  rep.propagator = lattice_lambda_amplitude(spec, 0.0);
  for (std::size_t n = 0; n < m; ++n)
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(rep.path_sum[n] - rep.fourier[n]));
  return rep;
}

/// Haar-distributed unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of R's diagonal absorbed into Q.
inline Eigen::MatrixXcd random_unitary(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = cplx(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

/// The two-site example: U = [[c, s], [s, c]] with c = cos(theta), s = -i sin(theta).
inline Eigen::MatrixXcd two_site_hop(double theta) {
  Eigen::MatrixXcd u(2, 2);
  const cplx c(std::cos(theta), 0.0);
  const cplx s(0.0, -std::sin(theta));
  u << c, s, s, c;
  return u;
}

}  // namespace tauclock
