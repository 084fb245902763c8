#pragma once

// Product structure of θ(q,·) for fixed q:
//   * θ(q,x) = Π_k (1 + x/x_k) over all zeros −x_k,
//   * θ = P·ψ with P the degree-2j polynomial of the complex pairs (P(0) = 1)
//     and ψ the real-rooted factor, with the coefficient bounds
//     g_k ≤ q^{k(k+1)/2} / (D(1−q))^k for ψ = Σ g_k x^k,
//   * for q ∈ (−1,0), the sign-alternating real zeros.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ptheta/errors.hpp"
#include "ptheta/evalcore.hpp"
#include "ptheta/qparam.hpp"
#include "ptheta/zerofinder.hpp"

namespace ptheta {

struct ProductPoint {
  cplx x{};
  cplx product{};
  cplx theta{};
  double rel_error = 0.0;
  /// Π_{k>K}(1 + |x|/|x_k|) − 1 with |x_k| ≥ 0.9|q|^{−k}.
  double tail_factor_bound = 0.0;
};

struct ProductReport {
  int K = 0;
  std::vector<cplx> zeros_used;
  std::vector<ProductPoint> points;
};

struct ProductDecomposition {
  QParam q = QParam::real(0.0);
  /// Real zeros −ξ_k, decreasing (rightmost first), repeated by multiplicity.
  std::vector<double> real_zeros;
  /// One representative −η per conjugate pair, upper half plane, repeated by multiplicity.
  std::vector<cplx> complex_pairs;
  /// P(x) = Π (1 + x/η)(1 + x/η̄), ascending powers, constant term 1.
  std::vector<double> poly_coeffs;
  int K_used = 0;
  ZeroSet zero_set;

  /// Discriminant of each pair quadratic 1 + b x + a x²; all negative when no pair is real.
  std::vector<double> pair_discriminants() const {
    std::vector<double> out;
    for (const auto& z : complex_pairs) {
      const double n = std::norm(z);
      const double b = -2.0 * z.real() / n;
      const double a = 1.0 / n;
      out.push_back(b * b - 4.0 * a);
    }
    return out;
  }
};

enum class LPClass { LP_I, LP };

inline const char* to_string(LPClass c) { return c == LPClass::LP_I ? "LP_I" : "LP"; }

struct LimitSample {
  int k = 0;
  /// ξ_k q^k with ξ_k the zero certified in Ω_k.
  double value = 0.0;
};

struct LPClassReport {
  /// g_1..g_{k_max} of ψ = Π(1 + x/ξ_k), from the certified zeros plus surrogate tail.
  std::vector<double> g_coeffs;
  /// Same sums over the certified zeros only (a lower bound).
  std::vector<double> g_certified;
  double D_estimate = 0.0;
  std::vector<double> bound_margin;
  LPClass class_tag = LPClass::LP_I;
  std::vector<LimitSample> limit;
  int certified_zeros = 0;
};

struct NegativeQReport {
  double q = 0.0;
  /// −ξ̃_k with signs alternating; positive and negative zeros each in increasing modulus.
  /// When no alternating labeling exists, the real zeros in modulus order.
  std::vector<double> real_zeros_signed;
  bool sign_alternation_ok = false;
  /// Whether ordering the real zeros purely by modulus already alternates in sign.
  bool modulus_order_alternates = false;
  /// 1-based index from which |ξ̃_k| increases strictly through the computed range; 0 if none.
  int monotone_from = 0;
  int complex_pair_count = 0;
  bool r_has_no_real_roots = true;
  double disk_radius = 0.0;
  /// Set when the structure check fails.
  std::string failure;
};

namespace detail {

inline std::vector<cplx> expand_by_multiplicity(const ZeroSet& zs) {
  std::vector<cplx> out;
  for (const auto& z : zs.zeros)
    for (int i = 0; i < z.multiplicity; ++i) out.push_back(z.location);
  return out;
}

inline double surrogate_tail_factor(double aq, double ax, int K) {
  double s = 0.0;
  for (int k = K + 1; k < K + 4000; ++k) {
    const double t = ax * std::pow(aq, k) / 0.9;
    s += std::log1p(t);
    if (t < 1e-30) break;
  }
  return std::expm1(s);
}

}  // namespace detail

/// Compares Π_{k≤K}(1 + x/x_k) with θ(q,x) on `grid`.
inline ProductReport reconstruct_product(const QParam& q, int K, std::span<const cplx> grid) {
  q.require_nonzero();
  if (K < 1) throw DomainError("K must be >= 1");
  const auto zs = find_zeros_in_disk(q, ladder_radius(q, K + 1), 1e-15);
  auto zeros = detail::expand_by_multiplicity(zs);
  if (static_cast<int>(zeros.size()) < K) throw CertificationFailure("insufficient certified zeros for K");
  zeros.resize(static_cast<std::size_t>(K));
  ProductReport rep;
  rep.K = K;
  rep.zeros_used = zeros;
  for (const auto& x : grid) {
    ProductPoint p;
    p.x = x;
    lcplx prod(1.0L, 0.0L);
    for (const auto& z : zeros) prod *= 1.0L - lcplx(x) / lcplx(z);
    p.product = cplx(prod);
    p.theta = eval_theta(q, x, relative_target(q, std::abs(x), 1e-20)).value;
    p.rel_error = std::abs(p.theta - p.product) / std::abs(p.theta);
    p.tail_factor_bound = detail::surrogate_tail_factor(q.modulus(), std::abs(x), K);
    rep.points.push_back(p);
  }
  return rep;
}

namespace detail {

inline ProductDecomposition split_zero_set(const QParam& q, ZeroSet zs, double collision_rel) {
  ProductDecomposition d;
  d.q = q;
  for (const auto& z : zs.zeros) {
    const double im = z.location.imag();
    if (im != 0.0 && std::abs(im) <= collision_rel * std::abs(z.location.real()))
      throw NearSpectralAmbiguity("zero within the collision band of the real axis");
    for (int i = 0; i < z.multiplicity; ++i) {
      if (im == 0.0)
        d.real_zeros.push_back(z.location.real());
      else if (im > 0.0)
        d.complex_pairs.push_back(z.location);
    }
  }
  std::sort(d.real_zeros.begin(), d.real_zeros.end(), std::greater<>());
  d.poly_coeffs = {1.0};
  for (const auto& z : d.complex_pairs) {
    const double n = std::norm(z);
    const double quad[3] = {1.0, -2.0 * z.real() / n, 1.0 / n};
    std::vector<double> next(d.poly_coeffs.size() + 2, 0.0);
    for (std::size_t i = 0; i < d.poly_coeffs.size(); ++i)
      for (int j = 0; j < 3; ++j) next[i + j] += d.poly_coeffs[i] * quad[j];
    next[0] = 1.0;
    d.poly_coeffs = std::move(next);
  }
  d.K_used = zs.total_multiplicity();
  d.zero_set = std::move(zs);
  return d;
}

}  // namespace detail

/// θ = P·ψ for real q: complex pairs into P, real zeros into ψ.
inline ProductDecomposition decompose(const QParam& q, double collision_rel = 1e-6) {
  q.require_nonzero();
  if (!q.is_real()) throw DomainError("decompose requires real q");
  auto zs = find_zeros_in_disk(q, ladder_radius(q, tail_start_policy(q)), 1e-15);
  return detail::split_zero_set(q, std::move(zs), collision_rel);
}

/// P(x) evaluated by Horner.
inline cplx eval_poly(std::span<const double> coeffs, cplx x) {
  cplx acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

/// Largest tail index whose Ω_k certification stays inside the magnitude budget.
inline int feasible_tail_index(const QParam& q, double log10_limit = 250.0) {
  const double l = std::log10(1.0 / q.modulus());
  return static_cast<int>(std::floor(std::sqrt(2.0 * log10_limit / l))) - 2;
}

/// Coefficients g_k of ψ and the bound g_k ≤ q^{k(k+1)/2} / (D(1−q))^k.
inline LPClassReport lp_bound_check(const QParam& q, int k_max) {
  q.require_positive();
  if (k_max < 1) throw DomainError("k_max must be >= 1");
  const double qv = q.real_value();
  const auto dec = decompose(q);
  std::vector<double> xi;
  for (double z : dec.real_zeros) xi.push_back(-z);
  std::sort(xi.begin(), xi.end());

  LPClassReport rep;
  const int k_first = dec.zero_set.tail_start_k;
  const int k_last = std::max(k_first, feasible_tail_index(q));
  for (int k = k_first; k <= k_last; ++k) {
    const auto t = certify_tail_zero(q, k);
    if (t.zero.location.imag() != 0.0) throw StructureViolation("tail zero of real q is not real");
    xi.push_back(-t.zero.location.real());
    rep.limit.push_back({k, -t.zero.location.real() * std::pow(qv, k)});
  }
  for (double v : xi)
    if (!(v > 0.0)) throw StructureViolation("real zero of θ(q,·) with q > 0 is not negative");
  rep.certified_zeros = static_cast<int>(xi.size());

  // Zeros beyond the certified range enter only through the surrogates 0.9 q^{−k}.
  std::vector<double> xi_all = xi;
  for (int k = k_last + 1; k <= k_last + 400; ++k) {
    const double s = 0.9 * std::pow(qv, -k);
    if (!std::isfinite(s)) break;
    xi_all.push_back(s);
  }

  auto elementary = [k_max](const std::vector<double>& vals) {
    // Ascending recurrence over 1/ξ: all quantities positive, no cancellation.
    std::vector<double> e(static_cast<std::size_t>(k_max) + 1, 0.0);
    e[0] = 1.0;
    int n = 0;
    for (double v : vals) {
      const double w = 1.0 / v;
      ++n;
      for (int k = std::min(n, k_max); k >= 1; --k) e[k] += w * e[k - 1];
    }
    return e;
  };
  const auto g_upper = elementary(xi_all);
  const auto g_lower = elementary(xi);

  double D = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xi_all.size(); ++i)
    D = std::min(D, xi_all[i] * std::pow(qv, static_cast<double>(i + 1)));
  rep.D_estimate = D;
  if (!(D > 0.0)) throw StructureViolation("D estimate is not positive");

  for (int k = 1; k <= k_max; ++k) {
    rep.g_coeffs.push_back(g_upper[k]);
    rep.g_certified.push_back(g_lower[k]);
    if (!(g_lower[k] > 0.0)) throw StructureViolation("coefficient g_k is not positive");
    const double log_bound = 0.5 * k * (k + 1) * std::log(qv) - k * std::log(D * (1.0 - qv));
    rep.bound_margin.push_back(std::exp(log_bound - std::log(g_upper[k])));
  }
  rep.class_tag = LPClass::LP_I;
  return rep;
}

/// Default k_max for negative_q_report: as far as the magnitude budget comfortably allows, at most 30.
inline int default_negative_k_max(const QParam& q) {
  return std::clamp(feasible_tail_index(q, 150.0), 4, 30);
}

/// Structure of θ(q,·) for q ∈ (−1,0): alternating real zeros and the pair polynomial R.
///
/// The disk edge sits between the certified tail zeros near μ_{k_max} and
/// μ_{k_max+1}, so the real zeros inside must form a prefix of the labeled
/// sequence ending with the sign of μ_{k_max}. If no such alternating labeling
/// exists, sign_alternation_ok is false and `failure` says why; the report is
/// still returned so callers can show it.
inline NegativeQReport negative_q_report(const QParam& q, int k_max) {
  q.require_negative();
  if (k_max < 2) throw DomainError("k_max must be >= 2");
  certify_tail_zero(q, k_max);
  certify_tail_zero(q, k_max + 1);
  const auto zs = find_zeros_in_disk(q, ladder_radius(q, k_max), 1e-15);
  NegativeQReport rep;
  rep.q = q.real_value();
  rep.disk_radius = zs.disk_radius;
  std::vector<double> pos;
  std::vector<double> neg;
  std::vector<double> by_modulus;
  for (const auto& z : zs.zeros) {
    for (int i = 0; i < z.multiplicity; ++i) {
      if (z.location.imag() == 0.0) {
        const double v = z.location.real();
        (v > 0.0 ? pos : neg).push_back(v);
        by_modulus.push_back(v);
      } else if (z.location.imag() > 0.0) {
        ++rep.complex_pair_count;
        const double n = std::norm(z.location);
        const double b = -2.0 * z.location.real() / n;
        if (!(b * b - 4.0 / n < 0.0)) rep.r_has_no_real_roots = false;
      }
    }
  }
  std::sort(by_modulus.begin(), by_modulus.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  rep.modulus_order_alternates = true;
  for (std::size_t i = 0; i + 1 < by_modulus.size(); ++i)
    if (by_modulus[i] * by_modulus[i + 1] >= 0.0) rep.modulus_order_alternates = false;

  // μ_k = −q^{−k} is positive for odd k when q < 0.
  const bool last_positive = k_max % 2 == 1;
  std::vector<double>& same = last_positive ? pos : neg;
  std::vector<double>& other = last_positive ? neg : pos;
  const long excess = static_cast<long>(same.size()) - static_cast<long>(other.size());
  if (excess != 0 && excess != 1) {
    rep.sign_alternation_ok = false;
    rep.failure = std::to_string(pos.size()) + " positive vs " + std::to_string(neg.size()) +
                  " negative real zeros inside the disk; an alternating sequence ending at μ_" +
                  std::to_string(k_max) + " needs the counts to match";
    rep.real_zeros_signed = by_modulus;
    return rep;
  }
  // Build the labeled sequence backwards: largest modulus of the required sign first.
  auto by_abs = [](double a, double b) { return std::abs(a) < std::abs(b); };
  std::sort(same.begin(), same.end(), by_abs);
  std::sort(other.begin(), other.end(), by_abs);
  std::vector<double> seq;
  bool want_same = true;
  while (!same.empty() || !other.empty()) {
    auto& src = want_same ? same : other;
    seq.push_back(src.back());
    src.pop_back();
    want_same = !want_same;
  }
  std::reverse(seq.begin(), seq.end());
  rep.real_zeros_signed = seq;
  rep.sign_alternation_ok = true;

  int from = static_cast<int>(seq.size());
  while (from > 1 && std::abs(seq[from - 2]) < std::abs(seq[from - 1])) --from;
  // `from` is now the 1-based start of the strictly increasing suffix.
  if (seq.size() < 3 || from > static_cast<int>(seq.size()) - 2) {
    rep.failure = "no monotone range of |ξ̃_k| found within the computed zeros";
    return rep;
  }
  rep.monotone_from = from;
  return rep;
}

/// Throws StructureViolation unless the report shows alternation and a monotone range.
inline void require_negative_q_structure(const NegativeQReport& r) {
  if (!r.sign_alternation_ok || r.monotone_from < 1 || !r.r_has_no_real_roots)
    throw StructureViolation("negative-q structure violated at q = " + std::to_string(r.q) + ": " +
                             (r.failure.empty() ? std::string("R has a real root") : r.failure));
}

}  // namespace ptheta
