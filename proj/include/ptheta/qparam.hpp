#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "ptheta/errors.hpp"

namespace ptheta {

using cplx = std::complex<double>;
using lcplx = std::complex<long double>;

static_assert(std::numeric_limits<long double>::digits >= 64,
              "term accumulation relies on an extended long double");

enum class QKind { positive_real, negative_real, complex };

inline const char* to_string(QKind k) {
  switch (k) {
    case QKind::positive_real: return "positive_real";
    case QKind::negative_real: return "negative_real";
    case QKind::complex: return "complex";
  }
  return "?";
}

/// The nome q of θ(q,·), validated to the open unit disk.
///
/// q = 0 is representable (evaluators return the constant 1) and is classified
/// as positive_real; theorem-level operations call require_nonzero().
class QParam {
 public:
  static QParam make(cplx v) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw DomainError("q must be finite");
    if (!(std::abs(v) < 1.0)) throw DomainError("|q| must be < 1");
    QKind kind = QKind::complex;
    if (v.imag() == 0.0) kind = v.real() < 0.0 ? QKind::negative_real : QKind::positive_real;
    return QParam(v, kind);
  }
  static QParam real(double v) { return make(cplx(v, 0.0)); }

  cplx value() const noexcept { return value_; }
  double modulus() const noexcept { return std::abs(value_); }
  QKind kind() const noexcept { return kind_; }
  bool is_real() const noexcept { return kind_ != QKind::complex; }
  bool is_zero() const noexcept { return value_ == cplx(0.0, 0.0); }

  double real_value() const {
    if (!is_real()) throw DomainError("operation requires real q");
    return value_.real();
  }

  const QParam& require_nonzero() const {
    if (is_zero()) throw DomainError("operation requires q != 0");
    return *this;
  }

  const QParam& require_positive() const {
    if (kind_ != QKind::positive_real || is_zero())
      throw DomainError("operation requires q in (0,1)");
    return *this;
  }

  const QParam& require_negative() const {
    if (kind_ != QKind::negative_real) throw DomainError("operation requires q in (-1,0)");
    return *this;
  }

 private:
  QParam(cplx v, QKind k) : value_(v), kind_(k) {}

  cplx value_;
  QKind kind_;
};

}  // namespace ptheta
