#pragma once

// Rigorous evaluation of the partial theta function
//
//     θ(q,x) = Σ_{j≥0} q^{j(j+1)/2} x^j ,
//
// its x- and q-derivatives, the bilateral series Θ*(q,x) = Σ_{j∈ℤ} q^{j(j+1)/2} x^j
// (by direct summation or by the triple product), and the remainder
// Ξ = θ − Θ* = −x^{-1} θ(q, 1/x).
//
// Every result carries an error bound = analytic truncation tail + rounding
// bound. Terms are generated by a long double recurrence and accumulated with
// Neumaier compensation, so the rounding part is dominated by the final
// conversion to double and stays below (N+2)·ε·Σ|term_j|.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include "ptheta/compensated.hpp"
#include "ptheta/errors.hpp"
#include "ptheta/qparam.hpp"

namespace ptheta {

/// Hard caps on series work.
struct EvalLimits {
  static constexpr int max_order = 1500;
  /// log10 of the largest term we accept; above this the rounding bound is meaningless.
  static constexpr double max_log10_magnitude = 300.0;
};

struct EvalResult {
  cplx value{};
  double error_bound = 0.0;
  int terms_used = 0;
  /// Σ|term_j| over the summed terms; the natural scale for residuals.
  double term_magnitude = 0.0;
};

/// Remainder Σ_{j≥start_index} |q|^{j(j+1)/2} |x|^j.
struct SeriesTail {
  int start_index = 0;
  double bound = 0.0;
};

enum class ThetaStarMethod { bilateral_sum, triple_product };

namespace detail {

inline constexpr long double u_ext = std::numeric_limits<long double>::epsilon() / 2;

inline long long tri(long long j) { return j * (j + 1) / 2; }

template <typename C>
C ipow(C base, long long n) {
  C result(1);
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

inline double falling(int j, int order) {
  double w = 1.0;
  for (int i = 0; i < order; ++i) w *= static_cast<double>(j - i);
  return w;
}

/// Weight of term j in ∂^dx_x ∂^dq_q of the series: (j)_dx · (j(j+1)/2)^dq.
inline double weight(int j, int dx, int dq) {
  double w = falling(j, dx);
  for (int i = 0; i < dq; ++i) w *= static_cast<double>(tri(j));
  return w;
}

inline int first_index(int dx, int dq) { return std::max(dx, dq > 0 ? 1 : 0); }

/// log of max_j |q|^{j(j+1)/2} r^j, i.e. the peak term on the circle |x| = r.
inline double log_peak_term(double aq, double r) {
  if (aq == 0.0 || r <= 1.0) return 0.0;
  const double la = std::log(aq);
  const double lr = std::log(r);
  double best = 0.0;
  for (int j = 1; j <= EvalLimits::max_order + 2; ++j) {
    best = std::max(best, static_cast<double>(tri(j)) * la + j * lr);
    if (static_cast<double>(j + 1) * la + lr < 0.0) break;
  }
  return best;
}

inline void check_magnitude_budget(double aq, double r) {
  if (log_peak_term(aq, r) > EvalLimits::max_log10_magnitude * std::log(10.0))
    throw PrecisionBudgetExceeded("series terms exceed the double range at this radius");
}

/// Bound on Σ_{j>N} weight(j) |q|^{e_j - dq} |x|^{j - dx}; +inf when the ratio test fails.
inline double tail_bound(double aq, double ax, int N, int dx, int dq) {
  const int j = std::max(N + 1, first_index(dx, dq));
  const long long pq = tri(j) - dq;
  const long long px = j - dx;
  if (aq == 0.0 && pq > 0) return 0.0;
  if (ax == 0.0 && px > 0) return 0.0;
  double log_t = std::log(weight(j, dx, dq));
  if (pq > 0) log_t += static_cast<double>(pq) * std::log(aq);
  if (px > 0) log_t += static_cast<double>(px) * std::log(ax);
  double ratio = 0.0;
  if (aq != 0.0 && ax != 0.0) {
    const double log_r = std::log(weight(j + 1, dx, dq) / weight(j, dx, dq)) + j * std::log(aq) +
                         std::log(ax);
    ratio = std::exp(log_r);
  }
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return std::exp(log_t) / (1.0 - ratio);
}

struct TermSum {
  lcplx value{};
  long double abs_sum = 0.0L;
  /// Bound on the extended-precision rounding of the generated terms.
  long double generation_error = 0.0L;
};

/// Σ_{j=first}^{last} weight(j) q^{e_j - dq} x^{j - dx} by the recurrence p_{j+1} = p_j q^{j+1} x.
inline TermSum sum_terms(lcplx q, lcplx x, int last, int dx, int dq) {
  const int first = first_index(dx, dq);
  TermSum out;
  if (last < first) return out;
  lcplx p = ipow(q, tri(first) - dq) * ipow(x, first - dx);
  lcplx qpow = ipow(q, first);
  ComplexNeumaierSum<long double> acc;
  long double abs_sum = 0.0L;
  long double gen = 0.0L;
  for (int j = first; j <= last; ++j) {
    const lcplx term = static_cast<long double>(weight(j, dx, dq)) * p;
    acc.add(term);
    const long double a = std::abs(term);
    abs_sum += a;
    gen += 3.0L * static_cast<long double>(j + 2) * (j + 2) * u_ext * a;
    qpow *= q;
    p *= qpow * x;
  }
  out.value = acc.result();
  out.abs_sum = abs_sum;
  out.generation_error = gen + 4.0L * u_ext * abs_sum;
  return out;
}

inline void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("target_eps must be positive");
}

inline void require_finite(cplx x) {
  if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw DomainError("x must be finite");
}

inline void check_sum_budget(long double abs_sum) {
  if (!(abs_sum < 1e300L)) throw PrecisionBudgetExceeded("term magnitudes exceed double range");
}

}  // namespace detail

/// Smallest N with |q|^{N+1} r < 1/2 and |q|^{(N+1)(N+2)/2} r^{N+1} / (1 − |q|^{N+1} r) ≤ eps.
inline int truncation_order(const QParam& q, double radius, double target_eps) {
  detail::require_eps(target_eps);
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw DomainError("radius must be finite");
  const double aq = q.modulus();
  if (aq == 0.0 || radius == 0.0) return 0;
  detail::check_magnitude_budget(aq, radius);
  const double la = std::log(aq);
  const double lr = std::log(radius);
  const double le = std::log(target_eps);
  for (int N = 0; N <= EvalLimits::max_order; ++N) {
    const double log_a = (N + 1) * la + lr;
    if (!(log_a < std::log(0.5))) continue;
    const double log_tail = static_cast<double>(detail::tri(N + 1)) * la + (N + 1) * lr -
                            std::log1p(-std::exp(log_a));
    if (log_tail <= le) return N;
  }
  throw PrecisionBudgetExceeded("precision budget exceeded: truncation order cap reached");
}

/// Geometric bound on the series remainder from start_index on (valid while |q|^start |x| < 1).
inline SeriesTail series_tail(const QParam& q, double radius, int start_index) {
  if (start_index < 0) throw DomainError("start_index must be >= 0");
  const double aq = q.modulus();
  SeriesTail t{start_index, 0.0};
  if (start_index == 0) {
    // The j = 0 term is 1; fold it in explicitly.
    const double rest = detail::tail_bound(aq, radius, 0, 0, 0);
    t.bound = 1.0 + rest;
    return t;
  }
  t.bound = detail::tail_bound(aq, radius, start_index - 1, 0, 0);
  return t;
}

/// ∂^dx_x ∂^dq_q θ(q,x) with a truncation tail ≤ target_eps.
inline EvalResult eval_theta_derivative(const QParam& q, cplx x, int dx, int dq, double target_eps) {
  detail::require_eps(target_eps);
  detail::require_finite(x);
  if (dx < 0 || dx > 4 || dq < 0 || dq > 1) throw DomainError("unsupported derivative order");
  const double aq = q.modulus();
  const double ax = std::abs(x);
  int N = truncation_order(q, ax, target_eps);
  while (detail::tail_bound(aq, ax, N, dx, dq) > target_eps) {
    if (++N > EvalLimits::max_order)
      throw PrecisionBudgetExceeded("precision budget exceeded: derivative truncation cap");
  }
  const auto s = detail::sum_terms(lcplx(q.value()), lcplx(x), N, dx, dq);
  detail::check_sum_budget(s.abs_sum);
  EvalResult r;
  r.value = cplx(s.value);
  r.term_magnitude = static_cast<double>(s.abs_sum);
  r.terms_used = N;
  r.error_bound = detail::tail_bound(aq, ax, N, dx, dq) + (N + 2) * DBL_EPSILON * r.term_magnitude +
                  static_cast<double>(s.generation_error);
  return r;
}

inline EvalResult eval_theta(const QParam& q, cplx x, double target_eps) {
  return eval_theta_derivative(q, x, 0, 0, target_eps);
}

inline EvalResult eval_theta_dx(const QParam& q, cplx x, double target_eps) {
  return eval_theta_derivative(q, x, 1, 0, target_eps);
}

inline EvalResult eval_theta_dq(const QParam& q, cplx x, double target_eps) {
  return eval_theta_derivative(q, x, 0, 1, target_eps);
}

/// Absolute target that sits `rel` below the peak term on |x| = radius.
inline double relative_target(const QParam& q, double radius, double rel) {
  detail::check_magnitude_budget(q.modulus(), radius);
  const double peak = std::exp(detail::log_peak_term(q.modulus(), radius));
  return rel * std::max(1.0, peak);
}

namespace detail {

struct XiParts {
  lcplx value{};
  long double abs_sum = 0.0L;
  double tail = 0.0;
  int terms = 0;
};

/// Ξ(q,x) = −Σ_{m≥0} q^{m(m+1)/2} x^{−m−1}, truncated with tail ≤ eps.
inline XiParts xi_ext(const QParam& q, lcplx x, double eps) {
  const double ax = static_cast<double>(std::abs(x));
  const double inv = 1.0 / ax;
  const int N = truncation_order(q, inv, eps * ax);
  const lcplx xinv = 1.0L / x;
  const auto s = sum_terms(lcplx(q.value()), xinv, N, 0, 0);
  XiParts out;
  out.value = -xinv * s.value;
  out.abs_sum = s.abs_sum * static_cast<long double>(inv);
  out.tail = tail_bound(q.modulus(), inv, N, 0, 0) * inv;
  out.terms = N;
  return out;
}

struct ProductParts {
  lcplx value{};
  double error_bound = 0.0;
  int factors = 0;
};

/// Π_{m≥1}(1−q^m)(1+y q^m)(1+y^{-1} q^{m−1}) truncated once the remaining
/// factors are within `rel_eps` of 1 (relative) or within `abs_eps` absolutely.
///
/// When exact_k ≥ 1 the factor (1 + y q^{exact_k}) is replaced by the supplied
/// `exact_factor`; callers pass y = μ_k + δ with exact_factor = δ q^k so the
/// factor that vanishes at μ_k is formed without cancellation.
inline ProductParts triple_product_ext(lcplx q, lcplx y, double abs_eps, double rel_eps,
                                       int exact_k = 0, lcplx exact_factor = {}) {
  const long double aq = std::abs(q);
  const long double ay = std::abs(y);
  lcplx P(1.0L, 0.0L);
  long double pmag = 1.0L;
  long double pabs = 1.0L;
  lcplx qm(1.0L, 0.0L);  // q^m
  lcplx qm1(1.0L, 0.0L);  // q^{m-1}
  const lcplx yinv = 1.0L / y;
  auto absorb = [&](lcplx f, long double delta) {
    P *= f;
    pmag *= std::abs(f);
    pabs *= std::abs(f) + delta;
  };
  for (int m = 1; m <= EvalLimits::max_order * 4; ++m) {
    qm1 = qm;
    qm *= q;
    const long double cm = 3.0L * (m + 3) * u_ext;
    {
      const lcplx t = -qm;
      absorb(1.0L + t, cm * std::abs(t) + u_ext * std::abs(1.0L + t));
    }
    if (m == exact_k) {
      absorb(exact_factor, cm * std::abs(exact_factor));
    } else {
      const lcplx t = y * qm;
      absorb(1.0L + t, cm * std::abs(t) + u_ext * std::abs(1.0L + t));
    }
    {
      const lcplx t = qm1 * yinv;
      absorb(1.0L + t, cm * std::abs(t) + u_ext * std::abs(1.0L + t));
    }
    const long double a_next = std::pow(aq, static_cast<long double>(m + 1));
    const long double a_cur = std::pow(aq, static_cast<long double>(m));
    if (m < exact_k) continue;
    if (a_next * ay > 0.5L || a_cur / ay > 0.5L) continue;
    const long double S = (a_next * (1.0L + ay) + a_cur / ay) / (1.0L - aq);
    const long double rel_tail = std::expm1(S);
    const long double abs_tail = pabs * rel_tail;
    if (rel_tail <= rel_eps || abs_tail <= abs_eps || aq == 0.0L) {
      const long double rounding =
          (pabs - pmag) + 9.0L * m * u_ext * pabs + DBL_EPSILON * std::abs(P);
      ProductParts out;
      out.value = P;
      out.error_bound = static_cast<double>(rounding + abs_tail);
      out.factors = m;
      return out;
    }
  }
  throw PrecisionBudgetExceeded("precision budget exceeded: triple product did not converge");
}

}  // namespace detail

/// Θ*(q,x) = Σ_{j∈ℤ} q^{j(j+1)/2} x^j, either summed directly or via the triple product.
///
/// The bilateral truncation keeps j ∈ [−N−1, N]: indices j and −1−j share the
/// exponent j(j+1)/2, so both tails are cut at the same power of q. The triple
/// product is evaluated in the variable y = x itself (the squared variable of
/// the classical identity), so no roots are taken.
inline EvalResult eval_jacobi_theta_star(const QParam& q, cplx x, double target_eps,
                                         ThetaStarMethod method = ThetaStarMethod::bilateral_sum) {
  detail::require_eps(target_eps);
  detail::require_finite(x);
  if (x == cplx(0.0, 0.0)) throw DomainError("Θ* is undefined at x = 0");
  const double aq = q.modulus();
  const double ax = std::abs(x);
  EvalResult r;
  if (method == ThetaStarMethod::bilateral_sum) {
    const int N = std::max(truncation_order(q, ax, target_eps / 2),
                           truncation_order(q, 1.0 / ax, target_eps * ax / 2));
    const lcplx xl(x);
    const auto pos = detail::sum_terms(lcplx(q.value()), xl, N, 0, 0);
    const auto neg = detail::sum_terms(lcplx(q.value()), 1.0L / xl, N, 0, 0);
    const long double inv = 1.0L / static_cast<long double>(ax);
    const long double mag = pos.abs_sum + neg.abs_sum * inv;
    detail::check_sum_budget(mag);
    ComplexNeumaierSum<long double> acc;
    acc.add(pos.value);
    acc.add(neg.value / xl);
    r.value = cplx(acc.result());
    r.term_magnitude = static_cast<double>(mag);
    r.terms_used = 2 * N + 2;
    r.error_bound = detail::tail_bound(aq, ax, N, 0, 0) +
                    detail::tail_bound(aq, 1.0 / ax, N, 0, 0) / ax +
                    (N + 2) * DBL_EPSILON * r.term_magnitude;
    return r;
  }
  detail::check_magnitude_budget(aq, ax);
  const auto p = detail::triple_product_ext(lcplx(q.value()), lcplx(x), target_eps, 0.0L);
  if (!(std::abs(p.value) < 1e300L)) throw PrecisionBudgetExceeded("product exceeds double range");
  r.value = cplx(p.value);
  r.error_bound = p.error_bound;
  r.terms_used = p.factors;
  r.term_magnitude = static_cast<double>(std::abs(p.value));
  return r;
}

/// Ξ(q,x) = −Σ_{j=−∞}^{−1} q^{j(j+1)/2} x^j for |x| > 1, so that θ = Θ* + Ξ.
inline EvalResult eval_xi(const QParam& q, cplx x, double target_eps) {
  detail::require_eps(target_eps);
  detail::require_finite(x);
  if (!(std::abs(x) > 1.0)) throw DomainError("Ξ requires |x| > 1");
  const auto p = detail::xi_ext(q, lcplx(x), target_eps);
  EvalResult r;
  r.value = cplx(p.value);
  r.term_magnitude = static_cast<double>(p.abs_sum);
  r.terms_used = p.terms;
  r.error_bound = p.tail + (p.terms + 2) * DBL_EPSILON * r.term_magnitude;
  return r;
}

/// θ(q, μ_k + δ) with μ_k = −q^{−k}, accurate relative to |δ| even when δ is far below one ulp of μ_k.
///
/// Uses θ = Θ* + Ξ with Θ* from the triple product, whose factor 1 + y q^k equals δ q^k exactly.
struct TailPointValue {
  lcplx value{};
  lcplx point{};
  double error_bound = 0.0;
};

inline TailPointValue theta_near_tail_zero(const QParam& q, int k, lcplx offset) {
  q.require_nonzero();
  if (k < 1) throw DomainError("tail index k must be >= 1");
  const lcplx ql(q.value());
  const lcplx mu = -1.0L / detail::ipow(ql, k);
  const lcplx y = mu + offset;
  const double ay = static_cast<double>(std::abs(y));
  if (!(ay > 1.0)) throw DomainError("tail point must satisfy |x| > 1");
  detail::check_magnitude_budget(q.modulus(), ay);
  const lcplx factor = offset * detail::ipow(ql, k);
  const auto prod = detail::triple_product_ext(ql, y, 0.0, 1e-21L, k, factor);
  const auto xi = detail::xi_ext(q, y, 1e-21 / ay);
  TailPointValue out;
  out.value = prod.value + xi.value;
  out.point = y;
  out.error_bound = prod.error_bound + xi.tail +
                    static_cast<double>((xi.terms + 2) * detail::u_ext * 4 * xi.abs_sum);
  return out;
}

}  // namespace ptheta
