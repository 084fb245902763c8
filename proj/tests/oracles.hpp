#pragma once

// Test-side reference computations. Nothing here calls into the library's
// evaluation or root-finding code: terms are formed one at a time from
// logarithms instead of by recurrence, and polynomial roots come from a
// Durand–Kerner iteration rather than the library's Aberth stage.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using ld = long double;
using lc = std::complex<long double>;
using cd = std::complex<double>;

/// j(j+1)/2 weighted term: (j)_dx · (j(j+1)/2)_dq · q^{j(j+1)/2 − dq} x^{j − dx}, from logs.
inline lc term(lc q, lc x, int j, int dx, int dq) {
  ld w = 1;
  for (int i = 0; i < dx; ++i) w *= static_cast<ld>(j - i);
  const ld e = static_cast<ld>(j) * (j + 1) / 2;
  for (int i = 0; i < dq; ++i) w *= e - i;
  if (w == 0) return 0;
  if (j - dx == 0 && e - dq == 0) return w;
  if (x == lc(0) && j - dx > 0) return 0;
  if (q == lc(0) && e - dq > 0) return 0;
  lc lg = 0;
  if (e - dq != 0) lg += (e - dq) * std::log(q);
  if (j - dx != 0) lg += static_cast<ld>(j - dx) * std::log(x);
  return w * std::exp(lg);
}

/// Σ_{j<terms} by plain long double accumulation in order of j.
inline lc theta(lc q, lc x, int terms, int dx = 0, int dq = 0) {
  lc s = 0;
  for (int j = 0; j < terms; ++j) s += term(q, x, j, dx, dq);
  return s;
}

/// Enough terms that the neglected part is below long double resolution of the peak term.
inline int terms_for(ld aq, ld ax) {
  if (aq == 0) return 4;
  int j = 0;
  ld best = 0, cur = 0;
  for (;; ++j) {
    cur = static_cast<ld>(j) * (j + 1) / 2 * std::log(aq) + j * std::log(std::max(ax, ld(1e-300)));
    best = std::max(best, cur);
    if (j > 8 && cur < best - 60) break;
  }
  return j + 4;
}

inline lc theta_auto(lc q, lc x, int dx = 0, int dq = 0) {
  return theta(q, x, terms_for(std::abs(q), std::abs(x)), dx, dq);
}

/// Central difference in x of order h².
inline cd fd_dx(cd q, cd x, double h) {
  return cd((theta_auto(q, lc(x) + ld(h)) - theta_auto(q, lc(x) - ld(h))) / (2 * ld(h)));
}

inline cd fd_dq(cd q, cd x, double h) {
  return cd((theta_auto(lc(q) + ld(h), x) - theta_auto(lc(q) - ld(h), x)) / (2 * ld(h)));
}

/// Durand–Kerner on Σ_{j≤n} q^{j(j+1)/2} x^j in long double, seeded on the moduli ladder.
inline std::vector<lc> truncated_roots(cd qd, int n, int max_iter = 4000) {
  const lc q(qd);
  std::vector<lc> c(n + 1);
  for (int j = 0; j <= n; ++j) c[j] = term(q, 1, j, 0, 0);
  auto p = [&](lc z) {
    lc s = c[n];
    for (int j = n - 1; j >= 0; --j) s = s * z + c[j];
    return s;
  };
  std::vector<lc> z(n);
  const ld aq = std::abs(q);
  const ld arg = std::arg(q);
  for (int k = 1; k <= n; ++k) {
    // |roots| ≈ |q|^{-k}; rotate off the exact ladder so no two seeds coincide.
    z[k - 1] = std::polar(std::pow(aq, -ld(k)) * (1 + ld(0.01) * k / n), ld(M_PI) - k * arg + ld(0.4) + ld(0.7) * k);
  }
  for (int it = 0; it < max_iter; ++it) {
    ld worst = 0;
    for (int i = 0; i < n; ++i) {
      lc den = c[n];
      for (int j = 0; j < n; ++j)
        if (j != i) den *= (z[i] - z[j]);
      const lc step = p(z[i]) / den;
      z[i] -= step;
      worst = std::max(worst, std::abs(step) / std::abs(z[i]));
    }
    if (worst < ld(1e-17)) break;
  }
  return z;
}

/// Newton on the full series in long double.
inline lc polish(cd q, lc z, int iters = 60) {
  const lc ql(q);
  for (int i = 0; i < iters; ++i) {
    const lc f = theta_auto(ql, z);
    const lc d = theta_auto(ql, z, 1, 0);
    if (d == lc(0)) break;
    const lc step = f / d;
    z -= step;
    if (std::abs(step) <= std::abs(z) * ld(1e-19)) break;
  }
  return z;
}

/// Zeros of θ(q,·) with modulus < radius: truncated roots of degree n, then polished.
inline std::vector<cd> zeros_in_disk(cd q, double radius, int n = 80) {
  std::vector<cd> out;
  for (const auto& r : truncated_roots(q, n)) {
    if (!(std::abs(r) < 4 * radius)) continue;
    const lc z = polish(q, r);
    if (std::abs(z) < radius) out.push_back(cd(z));
  }
  std::sort(out.begin(), out.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });
  return out;
}

/// Uniform point in the annulus/disk of moduli [rmin, rmax] with random argument.
inline cd random_polar(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> r(rmin, rmax), a(-M_PI, M_PI);
  return std::polar(r(rng), a(rng));
}

}  // namespace oracle
