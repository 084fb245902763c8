#pragma once

#include <cmath>
#include <complex>

namespace ptheta {

/// Neumaier (improved Kahan-Babuska) accumulator.
///
/// Unlike plain Kahan summation the correction survives terms larger than the
/// running sum, which happens constantly in the alternating q-series near the
/// peak term.
template <typename Real>
struct NeumaierSum {
  Real sum = Real{0};
  Real compensation = Real{0};

  void add(Real value) {
    const Real t = sum + value;
    if (std::abs(sum) >= std::abs(value))
      compensation += (sum - t) + value;
    else
      compensation += (value - t) + sum;
    sum = t;
  }

  Real result() const { return sum + compensation; }
};

template <typename Real>
struct ComplexNeumaierSum {
  NeumaierSum<Real> re;
  NeumaierSum<Real> im;

  void add(const std::complex<Real>& v) {
    re.add(v.real());
    im.add(v.imag());
  }

  std::complex<Real> result() const { return {re.result(), im.result()}; }
};

}  // namespace ptheta
