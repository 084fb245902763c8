#pragma once

// Zeros of θ(q,·): asymptotic seeds near μ_k = −q^{−k}, Newton refinement,
// argument-principle counting, certification of tail zeros inside the disks
// Ω_k = {|x − μ_k| ≤ δ|μ_k|}, and complete certified zero sets in a disk.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ptheta/errors.hpp"
#include "ptheta/evalcore.hpp"
#include "ptheta/qparam.hpp"

namespace ptheta {

struct Zero {
  cplx location{};
  int multiplicity = 1;
  /// |θ(location)| / Σ|term_j|.
  double residual = 0.0;
  bool certified = false;
  double cert_radius = 0.0;
};

struct ZeroSet {
  QParam q = QParam::real(0.0);
  /// Radius actually certified; may exceed the requested one when a zero sits on that circle.
  double disk_radius = 0.0;
  double requested_radius = 0.0;
  std::vector<Zero> zeros;
  int tail_start_k = 0;
  int winding = 0;

  int total_multiplicity() const {
    int n = 0;
    for (const auto& z : zeros) n += z.multiplicity;
    return n;
  }
};

struct NewtonOutcome {
  Zero zero;
  int iterations = 0;
  /// Derivative vanished to working accuracy; multiplicity must come from classify_multiplicity.
  bool suspected_multiple = false;
};

struct TailZero {
  Zero zero;
  int k = 0;
  /// ζ_k − μ_k, resolved far below one ulp of μ_k.
  cplx offset{};
  /// |ζ_k + q^{−k}| · |q|^k.
  double scaled_offset = 0.0;
};

struct WindingReport {
  int winding = 0;
  double turns = 0.0;
  int evaluations = 0;
  /// min over samples of |θ| / error_bound.
  double min_margin = 0.0;
};

struct ZeroFinderOptions {
  double cluster_rel = 1e-8;
  double residual_tol = 1e-9;
  double boundary_gap = 0.03;
  int max_newton = 200;
};

inline bool zero_order(const Zero& a, const Zero& b) {
  const double ma = std::abs(a.location);
  const double mb = std::abs(b.location);
  if (std::abs(ma - mb) > 1e-12 * std::max(ma, mb)) return ma < mb;
  return std::arg(a.location) < std::arg(b.location);
}

/// k₀(q) = ⌈6 / log₁₀(1/|q|)⌉: first index handed to tail certification.
inline int tail_start_policy(const QParam& q) {
  q.require_nonzero();
  return static_cast<int>(std::ceil(6.0 / std::log10(1.0 / q.modulus())));
}

/// {−q^{−k} : k_min ≤ k ≤ k_max}.
inline std::vector<cplx> seed_zeros_asymptotic(const QParam& q, int k_min, int k_max) {
  q.require_nonzero();
  std::vector<cplx> out;
  if (k_max < k_min) return out;
  out.reserve(static_cast<std::size_t>(k_max - k_min + 1));
  for (int k = k_min; k <= k_max; ++k)
    out.push_back(cplx(-1.0L / detail::ipow(lcplx(q.value()), k)));
  return out;
}

namespace detail {

inline double contour_target(const QParam& q, double outer_radius) {
  return relative_target(q, outer_radius, 1e-19);
}

inline double wrap_angle(double a) {
  while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
  while (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
  return a;
}

class ContourWalker {
 public:
  ContourWalker(const QParam& q, cplx center, double radius)
      : q_(q), center_(center), radius_(radius),
        eps_(contour_target(q, std::abs(center) + radius)) {}

  cplx sample(double t) {
    const cplx x = center_ + radius_ * cplx(std::cos(t), std::sin(t));
    const auto r = eval_theta(q_, x, eps_);
    ++evaluations_;
    const double margin = std::abs(r.value) / std::max(r.error_bound, 1e-300);
    min_margin_ = std::min(min_margin_, margin);
    if (!(margin > 4.0))
      throw ContourTooClose("contour passes within the error bound of a zero");
    return r.value;
  }

  double segment(double t0, cplx f0, double t1, cplx f1, int depth) {
    const double tm = 0.5 * (t0 + t1);
    const cplx fm = sample(tm);
    const double d = std::arg(f1 / f0);
    const double d1 = std::arg(fm / f0);
    const double d2 = std::arg(f1 / fm);
    const bool smooth = std::abs(d) < std::numbers::pi / 2 && std::abs(d1) < std::numbers::pi / 2 &&
                        std::abs(d2) < std::numbers::pi / 2 && std::abs(d1 + d2 - d) < 1e-9;
    if (smooth) return d1 + d2;
    if (depth >= 48) throw WindingNotInteger("argument tracking did not resolve after max refinement");
    return segment(t0, f0, tm, fm, depth + 1) + segment(tm, fm, t1, f1, depth + 1);
  }

  WindingReport run(int initial_segments) {
    const int n = std::max(16, initial_segments);
    const double h = 2 * std::numbers::pi / n;
    const cplx start = sample(0.0);
    cplx prev = start;
    double total = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double t = i * h;
      const cplx cur = (i == n) ? start : sample(t);
      total += segment((i - 1) * h, prev, t, cur, 0);
      prev = cur;
    }
    WindingReport rep;
    rep.turns = total / (2 * std::numbers::pi);
    rep.winding = static_cast<int>(std::lround(rep.turns));
    rep.evaluations = evaluations_;
    rep.min_margin = min_margin_;
    if (std::abs(rep.turns - rep.winding) > 0.05)
      throw WindingNotInteger("winding number is not an integer");
    return rep;
  }

 private:
  const QParam& q_;
  cplx center_;
  double radius_;
  double eps_;
  int evaluations_ = 0;
  double min_margin_ = std::numeric_limits<double>::infinity();
};

}  // namespace detail

/// Winding number of θ(q,·) along |x − center| = radius, with sampling diagnostics.
inline WindingReport winding_report(const QParam& q, cplx center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("contour radius must be positive");
  const double outer = std::abs(center) + radius;
  // The phase of the dominant term turns about N times around the circle.
  const int n = truncation_order(q, outer, detail::contour_target(q, outer));
  detail::ContourWalker walker(q, center, radius);
  return walker.run(8 * (n + 2));
}

inline int count_zeros_argument_principle(const QParam& q, cplx center, double radius) {
  return winding_report(q, center, radius).winding;
}

/// Newton iteration on θ/θ′ from `seed`; tol is a relative step size.
inline NewtonOutcome refine_newton(const QParam& q, cplx seed, double tol, int max_iter = 100) {
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  if (!std::isfinite(seed.real()) || !std::isfinite(seed.imag())) throw DomainError("seed must be finite");
  NewtonOutcome out;
  cplx z = seed;
  for (int it = 1; it <= max_iter; ++it) {
    const double eps = relative_target(q, std::abs(z), 1e-20);
    const auto f = eval_theta(q, z, eps);
    out.iterations = it;
    if (f.value == cplx(0.0, 0.0) || std::abs(f.value) <= f.error_bound) {
      out.zero.location = z;
      out.zero.residual = std::abs(f.value) / std::max(f.term_magnitude, 1e-300);
      return out;
    }
    const auto d = eval_theta_dx(q, z, eps);
    if (std::abs(d.value) * std::max(1.0, std::abs(z)) <= 1e-7 * f.term_magnitude)
      out.suspected_multiple = true;
    if (d.value == cplx(0.0, 0.0)) throw ConvergenceFailure("θ′ vanished during Newton iteration", z);
    const cplx step = f.value / d.value;
    z -= step;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw ConvergenceFailure("Newton iterate diverged", z + step);
    if (std::abs(step) <= tol * std::max(1.0, std::abs(z))) {
      const auto fz = eval_theta(q, z, relative_target(q, std::abs(z), 1e-20));
      out.zero.location = z;
      out.zero.residual = std::abs(fz.value) / std::max(fz.term_magnitude, 1e-300);
      return out;
    }
  }
  throw ConvergenceFailure("Newton iteration did not converge", z);
}

/// Offset δ with θ(μ_k + δ) = 0, by Newton on the cancellation-free tail evaluation.
inline lcplx tail_zero_offset(const QParam& q, int k, int max_iter = 80) {
  lcplx off(0.0L, 0.0L);
  for (int it = 0; it < max_iter; ++it) {
    const auto tv = theta_near_tail_zero(q, k, off);
    if (tv.value == lcplx(0.0L, 0.0L)) return off;
    const cplx pt(tv.point);
    const auto d = eval_theta_dx(q, pt, relative_target(q, std::abs(pt), 1e-20));
    if (d.value == cplx(0.0, 0.0)) throw ConvergenceFailure("θ′ vanished near tail zero", pt);
    const lcplx step = tv.value / lcplx(d.value);
    off -= step;
    if (std::abs(step) <= 1e-17L * std::abs(off) + 1e-4000L) return off;
  }
  throw ConvergenceFailure("tail offset iteration did not converge", cplx(-1.0L / detail::ipow(lcplx(q.value()), k) + off));
}

/// Certifies the unique simple zero of θ in Ω_k(δ) = {|x − μ_k| ≤ delta_rel·|q|^{−k}}.
inline TailZero certify_tail_zero(const QParam& q, int k, double delta_rel = 0.1) {
  q.require_nonzero();
  if (k < 1) throw DomainError("k must be >= 1");
  if (!(delta_rel > 0.0 && delta_rel < 0.5)) throw DomainError("delta_rel must lie in (0, 0.5)");
  const lcplx mu = -1.0L / detail::ipow(lcplx(q.value()), k);
  const double r = delta_rel * static_cast<double>(std::abs(mu));
  int count = -1;
  try {
    count = count_zeros_argument_principle(q, cplx(mu), r);
  } catch (const ContourTooClose&) {
    throw TailRegimeNotReached("tail regime not reached: zero on the boundary of Ω_k", k, -1);
  } catch (const WindingNotInteger&) {
    throw TailRegimeNotReached("tail regime not reached: unresolved winding on Ω_k", k, -1);
  }
  if (count != 1)
    throw TailRegimeNotReached("tail regime not reached at k = " + std::to_string(k) + " (count " +
                                   std::to_string(count) + ")",
                               k, count);
  const lcplx off = tail_zero_offset(q, k);
  if (!(static_cast<double>(std::abs(off)) < r))
    throw CertificationFailure("tail zero refinement left Ω_k");
  const auto tv = theta_near_tail_zero(q, k, off);
  const cplx loc(mu + off);
  const auto scale = eval_theta(q, loc, relative_target(q, std::abs(loc), 1e-20));
  TailZero out;
  out.k = k;
  out.offset = cplx(off);
  out.scaled_offset = static_cast<double>(std::abs(off) * std::pow(static_cast<long double>(q.modulus()), k));
  out.zero.location = loc;
  out.zero.multiplicity = 1;
  out.zero.residual = static_cast<double>(std::abs(tv.value)) / std::max(scale.term_magnitude, 1e-300);
  out.zero.certified = true;
  out.zero.cert_radius = r;
  return out;
}

/// Multiplicity of the zero(s) enclosed by the circle of radius cluster_radius about the cluster centroid.
///
/// Throws ClusterContractViolation when the cluster points are themselves
/// separable into distinct certified simple zeros.
inline Zero classify_multiplicity(const QParam& q, std::span<const cplx> cluster, double cluster_radius) {
  if (cluster.empty()) throw DomainError("cluster must be nonempty");
  if (!(cluster_radius > 0.0)) throw DomainError("cluster_radius must be positive");
  cplx c{};
  for (const auto& p : cluster) c += p;
  c /= static_cast<double>(cluster.size());
  for (const auto& p : cluster)
    if (std::abs(p - c) >= cluster_radius) throw DomainError("cluster_radius does not enclose the cluster");
  if (cluster.size() >= 2) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cluster.size(); ++i)
      for (std::size_t j = i + 1; j < cluster.size(); ++j) dmin = std::min(dmin, std::abs(cluster[i] - cluster[j]));
    if (dmin > 0.0) {
      bool all_simple = true;
      for (const auto& p : cluster) {
        try {
          if (count_zeros_argument_principle(q, p, dmin / 3) != 1) all_simple = false;
        } catch (const CertificationFailure&) {
          all_simple = false;
        }
        if (!all_simple) break;
      }
      if (all_simple)
        throw ClusterContractViolation("cluster holds distinct certified zeros; their circles must be disjoint");
    }
  }
  const int m = count_zeros_argument_principle(q, c, cluster_radius);
  if (m == 0) throw CertificationFailure("cluster circle encloses no zero");
  Zero z;
  z.multiplicity = m;
  z.certified = true;
  z.cert_radius = cluster_radius;
  z.location = c;
  if (m == 1) {
    const auto n = refine_newton(q, c, 1e-15);
    if (std::abs(n.zero.location - c) < cluster_radius) z.location = n.zero.location;
  }
  const auto f = eval_theta(q, z.location, relative_target(q, std::abs(z.location), 1e-20));
  z.residual = std::abs(f.value) / std::max(f.term_magnitude, 1e-300);
  return z;
}

namespace detail {

/// p(z)/p′(z) for the degree-N truncation of θ.
inline lcplx newton_ratio(lcplx q, lcplx z, int degree) {
  const auto p = sum_terms(q, z, degree, 0, 0);
  const auto dp = sum_terms(q, z, degree, 1, 0);
  return p.value / dp.value;
}

}  // namespace detail

/// All roots of Σ_{j≤degree} q^{j(j+1)/2} x^j by Aberth–Ehrlich simultaneous iteration.
///
/// Seeds are the asymptotic points −q^{−k} turned off the real axis by
/// generic angles, which lands them on the Newton-polygon radii |q|^{−k}.
inline std::vector<cplx> truncated_series_roots(const QParam& q, int degree, int max_iter = 600) {
  q.require_nonzero();
  if (degree < 1) return {};
  const lcplx ql(q.value());
  std::vector<lcplx> z(static_cast<std::size_t>(degree));
  const auto seeds = seed_zeros_asymptotic(q, 1, degree);
  for (int k = 0; k < degree; ++k) {
    const long double ang = 0.35L + 0.45L * static_cast<long double>(k % 5);
    z[k] = lcplx(seeds[k]) * std::polar(1.0L, ang);
  }
  std::vector<char> done(z.size(), 0);
  for (int it = 0; it < max_iter; ++it) {
    bool all_done = true;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (done[i]) continue;
      all_done = false;
      lcplx ratio = detail::newton_ratio(ql, z[i], degree);
      if (!std::isfinite(std::abs(ratio))) {
        z[i] *= std::polar(1.01L, 0.3L);
        continue;
      }
      lcplx s(0.0L, 0.0L);
      for (std::size_t j = 0; j < z.size(); ++j)
        if (j != i) s += 1.0L / (z[i] - z[j]);
      const lcplx w = ratio / (1.0L - ratio * s);
      if (!std::isfinite(std::abs(w))) continue;
      z[i] -= w;
      if (std::abs(w) <= 1e-18L * std::abs(z[i])) done[i] = 1;
    }
    if (all_done) break;
  }
  std::vector<cplx> out;
  out.reserve(z.size());
  for (const auto& v : z) out.emplace_back(v);
  return out;
}

namespace detail {

struct Candidate {
  cplx location;
  int members = 1;
};

inline std::vector<Candidate> cluster_candidates(std::vector<cplx> pts, double cluster_rel) {
  std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  std::vector<Candidate> out;
  std::vector<cplx> sums;
  for (const auto& p : pts) {
    bool merged = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (std::abs(out[i].location - p) <= cluster_rel * std::max(1.0, std::abs(p))) {
        sums[i] += p;
        ++out[i].members;
        out[i].location = sums[i] / static_cast<double>(out[i].members);
        merged = true;
        break;
      }
    }
    if (!merged) {
      out.push_back({p, 1});
      sums.push_back(p);
    }
  }
  return out;
}

inline double adjusted_radius(double radius, std::vector<double> moduli, double gap) {
  std::sort(moduli.begin(), moduli.end());
  double r = radius;
  for (int guard = 0; guard < 64; ++guard) {
    auto hit = std::find_if(moduli.begin(), moduli.end(),
                            [&](double m) { return m >= r / (1 + gap) && m <= r * (1 + gap); });
    if (hit == moduli.end()) return r;
    auto next = std::find_if(hit, moduli.end(), [&](double m) { return m > *hit * (1 + 2 * gap); });
    r = next == moduli.end() ? *hit * (1 + 2 * gap) : std::sqrt(*hit * *next);
  }
  return r;
}

}  // namespace detail

/// Complete certified zero set of θ(q,·) in |x| ≤ radius.
///
/// Pipeline: truncate, Aberth on the truncated series, Newton polish on the
/// full series, deduplicate, certify each zero with a small argument-principle
/// circle, and match the total against the winding number on the boundary.
/// If a zero sits on the requested circle the boundary moves outward into the
/// next gap between zero moduli; disk_radius records the certified radius.
inline ZeroSet find_zeros_in_disk(const QParam& q, double radius, double tol,
                                  const ZeroFinderOptions& opt = {}) {
  q.require_nonzero();
  if (!(radius >= 1.0) || !std::isfinite(radius)) throw DomainError("radius must be >= 1");
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  const double aq = q.modulus();
  double poly_radius = 4.0 * radius;
  int degree = 0;
  for (;;) {
    try {
      degree = truncation_order(q, poly_radius, relative_target(q, poly_radius, 1e-18)) + 2;
      break;
    } catch (const PrecisionBudgetExceeded&) {
      if (poly_radius <= radius) throw;
      poly_radius = std::max(radius, poly_radius / 2);
    }
  }
  const double keep = std::min(1.6 * radius, 0.9 * poly_radius + 0.1 * radius);
  std::vector<cplx> polished;
  for (const auto& r : truncated_series_roots(q, degree)) {
    if (!std::isfinite(std::abs(r)) || std::abs(r) > keep) continue;
    try {
      auto n = refine_newton(q, r, tol, opt.max_newton);
      cplx z = n.zero.location;
      if (q.is_real() && z.imag() != 0.0 && std::abs(z.imag()) <= 1e-7 * std::abs(z)) {
        try {
          auto nr = refine_newton(q, cplx(z.real(), 0.0), tol, opt.max_newton);
          if (std::abs(nr.zero.location - z) <= 1e-6 * std::abs(z)) z = nr.zero.location;
        } catch (const ConvergenceFailure&) {
        }
      }
      if (std::abs(z) <= keep) polished.push_back(z);
    } catch (const ConvergenceFailure&) {
    }
  }
  if (q.is_real()) {
    // θ has real coefficients: keep the closed upper half plane and mirror it.
    std::vector<cplx> sym;
    for (const auto& z : polished)
      if (z.imag() >= 0.0) sym.push_back(z);
    for (const auto& z : polished)
      if (z.imag() > 0.0) sym.push_back(std::conj(z));
    polished = std::move(sym);
  }
  auto cands = detail::cluster_candidates(polished, opt.cluster_rel);

  std::vector<Zero> zeros;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const cplx z = cands[i].location;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cands.size(); ++j)
      if (j != i) dmin = std::min(dmin, std::abs(cands[j].location - z));
    double r = std::min(0.3 * dmin, 0.05 * std::max(1.0, std::abs(z)));
    int m = -1;
    for (int attempt = 0;; ++attempt) {
      try {
        m = count_zeros_argument_principle(q, z, r);
        break;
      } catch (const ContourTooClose&) {
        if (attempt == 2) throw;
        r *= 0.5;
      }
    }
    if (m <= 0) continue;
    Zero zero;
    zero.location = z;
    zero.multiplicity = m;
    zero.cert_radius = r;
    const auto f = eval_theta(q, z, relative_target(q, std::abs(z), 1e-20));
    zero.residual = std::abs(f.value) / std::max(f.term_magnitude, 1e-300);
    zero.certified = m > 1 || zero.residual <= opt.residual_tol;
    zeros.push_back(zero);
  }

  std::vector<double> moduli;
  for (const auto& z : zeros) moduli.push_back(std::abs(z.location));
  const double r_eff = detail::adjusted_radius(radius, moduli, opt.boundary_gap);
  const int winding = count_zeros_argument_principle(q, cplx(0.0, 0.0), r_eff);

  ZeroSet out{q, r_eff, radius, {}, 0, winding};
  for (const auto& z : zeros)
    if (std::abs(z.location) < r_eff) out.zeros.push_back(z);
  std::sort(out.zeros.begin(), out.zeros.end(), zero_order);
  const int found = out.total_multiplicity();
  if (found != winding)
    throw IncompleteZeroSet("incomplete zero set: found " + std::to_string(found) + " zeros, winding number " +
                                std::to_string(winding),
                            found, winding);
  for (const auto& z : out.zeros)
    if (!z.certified) throw CertificationFailure("zero residual above tolerance");
  int k_out = 1;
  while (0.9 * std::pow(aq, -k_out) <= r_eff) ++k_out;
  out.tail_start_k = std::max(tail_start_policy(q), k_out);
  return out;
}

/// Convenience: disk |x| ≤ |q|^{−(m+1/2)}, halfway (in log scale) between consecutive tail zeros.
inline double ladder_radius(const QParam& q, double m) {
  q.require_nonzero();
  return std::pow(q.modulus(), -(m + 0.5));
}

}  // namespace ptheta
