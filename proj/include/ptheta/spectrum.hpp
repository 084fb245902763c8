#pragma once

// Spectral values q̃_j: the q ∈ (0,1) at which θ(q,·) has a double real zero.
//
// Location is two-phase. Complex-pair counting is a robust integer away from
// the spectrum and is bisected down to a narrow bracket; the 2-D Newton
// iteration on (θ, ∂θ/∂x) = 0 then takes over, where it is well posed.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptheta/errors.hpp"
#include "ptheta/evalcore.hpp"
#include "ptheta/qparam.hpp"
#include "ptheta/zerofinder.hpp"

namespace ptheta {

struct SpectralValue {
  int index = 0;
  double q_value = 0.0;
  double double_zero_x = 0.0;
  /// |θ| and |∂θ/∂x| at (q_value, double_zero_x).
  std::pair<double, double> residuals{0.0, 0.0};
};

enum class Provenance { computed, cached };

inline const char* to_string(Provenance p) { return p == Provenance::computed ? "computed" : "cached"; }

struct SpectrumTable {
  std::vector<SpectralValue> entries;
  double tolerance = 0.0;
  Provenance provenance = Provenance::computed;
  /// Set when the table stops short of the requested j_max.
  std::optional<std::string> cutoff;
  /// Notes on anything unexpected met during the scan (e.g. a pair count jumping by more than 1).
  std::vector<std::string> events;
};

struct PairCountPolicy {
  /// Disk |x| ≤ |q|^{−(k+1/2)}; defaults to the tail-start policy k₀(q).
  std::optional<int> k_radius;
  /// Tail zeros certified just outside the disk.
  int certify_beyond = 2;
  double newton_tol = 1e-14;
  /// A non-real zero with |imag| ≤ collision_rel·|real| is too close to call.
  double collision_rel = 1e-6;
};

struct PairCountResult {
  int pairs = 0;
  ZeroSet zeros;
  std::vector<TailZero> tail;
};

inline PairCountResult complex_pair_census(const QParam& q, const PairCountPolicy& policy = {}) {
  q.require_positive();
  const int k_r = policy.k_radius.value_or(tail_start_policy(q));
  PairCountResult out{0, find_zeros_in_disk(q, ladder_radius(q, k_r), policy.newton_tol), {}};
  for (const auto& z : out.zeros.zeros) {
    const double im = std::abs(z.location.imag());
    if (z.multiplicity > 1)
      throw NearSpectralAmbiguity("multiple zero present: q is at a spectral value");
    if (im > 0.0 && im <= policy.collision_rel * std::abs(z.location.real()))
      throw NearSpectralAmbiguity("near-spectral ambiguity: complex pair within collision tolerance of the real axis");
    if (z.location.imag() > 0.0) ++out.pairs;
  }
  for (int i = 0; i < policy.certify_beyond; ++i)
    out.tail.push_back(certify_tail_zero(q, out.zeros.tail_start_k + i));
  return out;
}

/// Number of conjugate pairs of non-real zeros of θ(q,·) for q ∈ (0,1).
inline int complex_pair_count(const QParam& q, const PairCountPolicy& policy = {}) {
  return complex_pair_census(q, policy).pairs;
}

struct DoubleZeroOptions {
  int max_iter = 60;
  /// Half-width (relative to |x|) of the circle that must enclose exactly the double zero.
  double enclosure_rel = 1e-3;
  int scan_points = 4000;
};

namespace detail {

struct Jet {
  double f, fx, fq, fxx, fxq;
  double scale;
};

inline Jet theta_jet(double q, double x) {
  const auto qp = QParam::real(q);
  const double eps = relative_target(qp, std::abs(x), 1e-20);
  const auto f = eval_theta(qp, x, eps);
  Jet j;
  j.f = f.value.real();
  j.fx = eval_theta_derivative(qp, x, 1, 0, eps).value.real();
  j.fq = eval_theta_derivative(qp, x, 0, 1, eps).value.real();
  j.fxx = eval_theta_derivative(qp, x, 2, 0, eps).value.real();
  j.fxq = eval_theta_derivative(qp, x, 1, 1, eps).value.real();
  j.scale = std::max(1.0, f.term_magnitude);
  return j;
}

/// No real zero of θ(q,·) in (x_double, 0) apart from the double zero itself.
inline void check_rightmost(double q, double x, const DoubleZeroOptions& opt) {
  const auto qp = QParam::real(q);
  const double r = opt.enclosure_rel * std::abs(x);
  const int m = count_zeros_argument_principle(qp, x, r);
  if (m != 2)
    throw RightmostCheckFailed("expected a double zero inside the enclosure circle, found " + std::to_string(m));
  const double a = x + r;
  const double eps = relative_target(qp, std::abs(x), 1e-20);
  for (int i = 0; i <= opt.scan_points; ++i) {
    const double t = a * (1.0 - static_cast<double>(i) / opt.scan_points);
    const auto f = eval_theta(qp, t, eps);
    if (!(f.value.real() > f.error_bound))
      throw RightmostCheckFailed("a real zero lies to the right of the double zero");
  }
}

}  // namespace detail

/// 2-D Newton on F(q,x) = (θ, ∂θ/∂x) from (q_init, x_init).
inline SpectralValue refine_double_zero(double q_init, double x_init, double tol,
                                        const DoubleZeroOptions& opt = {}) {
  if (!(q_init > 0.0 && q_init < 1.0)) throw DomainError("q_init must lie in (0,1)");
  if (!(x_init < 0.0)) throw DomainError("x_init must be negative");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  double q = q_init;
  double x = x_init;
  bool converged = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    const auto j = detail::theta_jet(q, x);
    const double det = j.fx * j.fxq - j.fq * j.fxx;
    if (!(std::abs(det) > 1e-14 * (std::abs(j.fx * j.fxq) + std::abs(j.fq * j.fxx))))
      throw SingularJacobian("singular Jacobian in double-zero Newton");
    const double dq = (j.fx * j.fx - j.f * j.fxx) / det;
    const double dx = (j.f * j.fxq - j.fq * j.fx) / det;
    q -= dq;
    x -= dx;
    if (!(q > 0.0 && q < 1.0) || !(x < 0.0) || !std::isfinite(q) || !std::isfinite(x))
      throw ConvergenceFailure("double-zero Newton left the domain", cplx(x, 0.0));
    if (std::abs(dq) <= 4e-16 * q && std::abs(dx) <= 4e-16 * std::abs(x)) {
      converged = true;
      break;
    }
    if (it >= 8 && std::abs(dq) <= 1e-14 * q && std::abs(dx) <= 1e-14 * std::abs(x)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceFailure("double-zero Newton did not converge", cplx(x, 0.0));
  const auto j = detail::theta_jet(q, x);
  SpectralValue sv;
  sv.q_value = q;
  sv.double_zero_x = x;
  sv.residuals = {std::abs(j.f), std::abs(j.fx)};
  if (!(sv.residuals.first <= tol * j.scale && sv.residuals.second <= tol * j.scale))
    throw ConvergenceFailure("double-zero residuals above tolerance", cplx(x, 0.0));
  detail::check_rightmost(q, x, opt);
  return sv;
}

struct LocateOptions {
  double coarse_width = 1e-7;
  double residual_tol = 1e-12;
  PairCountPolicy policy{};
};

/// q̃_j inside (q_lo, q_hi), where the pair count must rise from ≤ j−1 to ≥ j.
inline SpectralValue locate_spectral_value(int j, std::pair<double, double> bracket, double tol_q,
                                           const LocateOptions& opt = {}) {
  if (j < 1) throw DomainError("spectral index must be >= 1");
  auto [lo, hi] = bracket;
  if (!(0.0 < lo && lo < hi && hi < 1.0)) throw DomainError("invalid bracket: need 0 < q_lo < q_hi < 1");
  if (!(tol_q > 0.0)) throw DomainError("tol_q must be positive");
  int c_lo = 0;
  int c_hi = 0;
  PairCountResult at_hi;
  try {
    c_lo = complex_pair_count(QParam::real(lo), opt.policy);
    at_hi = complex_pair_census(QParam::real(hi), opt.policy);
    c_hi = at_hi.pairs;
  } catch (const NearSpectralAmbiguity&) {
    throw DomainError("invalid bracket: an endpoint sits on the spectrum");
  }
  if (!(c_lo <= j - 1 && c_hi >= j))
    throw DomainError("invalid bracket: pair counts " + std::to_string(c_lo) + " and " + std::to_string(c_hi) +
                      " do not straddle " + std::to_string(j));
  const double stop = std::max(opt.coarse_width, tol_q);
  while (hi - lo > stop) {
    const double mid = 0.5 * (lo + hi);
    PairCountResult r;
    try {
      r = complex_pair_census(QParam::real(mid), opt.policy);
    } catch (const NearSpectralAmbiguity&) {
      break;
    } catch (const ContourTooClose&) {
      // Two real zeros about to merge: |θ| between them drops below the
      // rounding floor, which is the same situation seen from the contour side.
      break;
    }
    if (r.pairs < c_lo || r.pairs > c_hi)
      throw PairCountNonMonotonic("pair count " + std::to_string(r.pairs) + " at q = " + std::to_string(mid) +
                                  " leaves the bracket range [" + std::to_string(c_lo) + ", " +
                                  std::to_string(c_hi) + "]");
    if (r.pairs >= j) {
      hi = mid;
      at_hi = std::move(r);
    } else {
      lo = mid;
    }
  }
  // The pair born at q̃_j is the one hugging the real axis just above it.
  double best = std::numeric_limits<double>::infinity();
  double x_init = 0.0;
  for (const auto& z : at_hi.zeros.zeros) {
    if (z.location.imag() <= 0.0) continue;
    const double ratio = z.location.imag() / std::abs(z.location.real());
    if (ratio < best) {
      best = ratio;
      x_init = z.location.real();
    }
  }
  if (!(x_init < 0.0)) throw CertificationFailure("no complex pair found above the bracket");
  auto sv = refine_double_zero(0.5 * (lo + hi), x_init, opt.residual_tol);
  sv.index = j;
  const double slack = 1e-6;
  if (sv.q_value < bracket.first - slack || sv.q_value > bracket.second + slack)
    throw CertificationFailure("double-zero Newton converged outside the bracket");
  return sv;
}

struct SpectrumScanOptions {
  double q_start = 0.05;
  double grid_step = 0.01;
  double tol_q = 1e-12;
  LocateOptions locate{};
};

/// Computes q̃_1..q̃_{j_max} by scanning pair counts on a q-grid for brackets.
///
/// Stops with `cutoff` set when the precision budget runs out (q̃_j → 1 needs
/// ever larger truncation orders).
inline SpectrumTable compute_spectrum(int j_max, const SpectrumScanOptions& opt = {},
                                      std::vector<SpectralValue> known = {}) {
  if (j_max < 1) throw DomainError("j_max must be >= 1");
  SpectrumTable table;
  table.tolerance = opt.locate.residual_tol;
  table.entries = std::move(known);
  double q_prev = table.entries.empty() ? opt.q_start : table.entries.back().q_value + opt.grid_step / 10;
  int c_prev = -1;
  try {
    if (table.entries.size() < static_cast<std::size_t>(j_max))
      c_prev = complex_pair_count(QParam::real(q_prev), opt.locate.policy);
    for (int j = static_cast<int>(table.entries.size()) + 1; j <= j_max; ++j) {
      double q_hi = q_prev;
      int c_hi = c_prev;
      while (c_hi < j) {
        q_prev = q_hi;
        c_prev = c_hi;
        q_hi = q_prev + opt.grid_step;
        if (!(q_hi < 1.0)) throw PrecisionBudgetExceeded("scan reached q = 1");
        for (int nudge = 0;; ++nudge) {
          try {
            c_hi = complex_pair_count(QParam::real(q_hi), opt.locate.policy);
            break;
          } catch (const NearSpectralAmbiguity&) {
            if (nudge >= 3) throw;
            q_hi += opt.grid_step / 10;
          } catch (const ContourTooClose&) {
            if (nudge >= 3) throw;
            q_hi += opt.grid_step / 10;
          }
        }
      }
      if (c_hi > j && c_prev == j - 1)
        table.events.push_back("pair count jumped from " + std::to_string(c_prev) + " to " + std::to_string(c_hi) +
                               " between q = " + std::to_string(q_prev) + " and " + std::to_string(q_hi));
      auto sv = locate_spectral_value(j, {q_prev, q_hi}, opt.tol_q, opt.locate);
      if (!table.entries.empty() && !(sv.q_value > table.entries.back().q_value))
        table.events.push_back("spectral value " + std::to_string(j) + " not above its predecessor");
      table.entries.push_back(sv);
      // The next scan restarts just above the new spectral value.
      q_prev = sv.q_value + opt.grid_step / 10;
      c_prev = complex_pair_count(QParam::real(q_prev), opt.locate.policy);
      if (c_prev < j)
        table.events.push_back("pair count below " + std::to_string(j) + " just above q̃_" + std::to_string(j));
    }
  } catch (const PrecisionBudgetExceeded& e) {
    table.cutoff = "precision budget exceeded after j = " + std::to_string(table.entries.size()) + ": " + e.what();
  } catch (const CertificationFailure& e) {
    // Near q = 1 the series cancels below double resolution on every contour
    // before the truncation budget trips; the certificates fail first.
    table.cutoff = "certification failed after j = " + std::to_string(table.entries.size()) + ": " + e.what();
  }
  return table;
}

/// Residuals of a stored entry re-evaluated from scratch.
inline std::pair<double, double> double_zero_residuals(double q, double x) {
  const auto j = detail::theta_jet(q, x);
  return {std::abs(j.f), std::abs(j.fx)};
}

inline bool validate_entry(const SpectralValue& sv, double tolerance) {
  if (!(sv.q_value > 0.0 && sv.q_value < 1.0) || !(sv.double_zero_x < 0.0)) return false;
  const auto j = detail::theta_jet(sv.q_value, sv.double_zero_x);
  return std::abs(j.f) <= tolerance * j.scale && std::abs(j.fx) <= tolerance * j.scale;
}

}  // namespace ptheta
