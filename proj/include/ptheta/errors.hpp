#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ptheta {

/// Base of every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain (|q| >= 1, x = 0 for Θ*, bad bracket, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Truncation cap reached or a term magnitude left the representable range.
class PrecisionBudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A numerical certificate could not be produced or contradicted itself.
class CertificationFailure : public Error {
 public:
  using Error::Error;
};

class ContourTooClose : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class WindingNotInteger : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class IncompleteZeroSet : public CertificationFailure {
 public:
  IncompleteZeroSet(const std::string& what, int found, int winding)
      : CertificationFailure(what), found_(found), winding_(winding) {}
  int found() const noexcept { return found_; }
  int winding() const noexcept { return winding_; }

 private:
  int found_;
  int winding_;
};

class TailRegimeNotReached : public CertificationFailure {
 public:
  TailRegimeNotReached(const std::string& what, int k, int count)
      : CertificationFailure(what), k_(k), count_(count) {}
  int k() const noexcept { return k_; }
  int count() const noexcept { return count_; }

 private:
  int k_;
  int count_;
};

class ConvergenceFailure : public CertificationFailure {
 public:
  ConvergenceFailure(const std::string& what, std::complex<double> last)
      : CertificationFailure(what), last_(last) {}
  std::complex<double> last_iterate() const noexcept { return last_; }

 private:
  std::complex<double> last_;
};

class NearSpectralAmbiguity : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class ClusterContractViolation : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class PairCountNonMonotonic : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class SingularJacobian : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

class RightmostCheckFailed : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

/// Theorem-level structure (alternation, positivity, bounds) was violated numerically.
class StructureViolation : public CertificationFailure {
 public:
  using CertificationFailure::CertificationFailure;
};

}  // namespace ptheta
