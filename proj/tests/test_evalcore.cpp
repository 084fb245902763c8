#include <gtest/gtest.h>

#include <cfloat>
#include <cmath>

#include "oracles.hpp"
#include "ptheta/evalcore.hpp"

using namespace ptheta;

namespace {

// Direct evaluation of the stopping rule, for comparison with truncation_order.
int smallest_order(double aq, double r, double eps) {
  for (int N = 0; N < 2000; ++N) {
    const double a = std::pow(aq, N + 1) * r;
    if (!(a < 0.5)) continue;
    const double tail = std::pow(aq, (N + 1) * (N + 2) / 2.0) * std::pow(r, N + 1) / (1 - a);
    if (tail <= eps) return N;
  }
  return -1;
}

cplx oracle_value(cplx q, cplx x, int dx = 0, int dq = 0) {
  return cplx(oracle::theta_auto(oracle::lc(q), oracle::lc(x), dx, dq));
}

}  // namespace

TEST(TruncationOrder, MatchesStoppingRule) {
  for (double q : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double r : {0.5, 1.0, 3.0, 20.0})
      for (double eps : {1e-8, 1e-12, 1e-15})
        EXPECT_EQ(truncation_order(QParam::real(q), r, eps), smallest_order(q, r, eps)) << q << " " << r << " " << eps;
}

TEST(TruncationOrder, HalfAtUnitRadius) {
  const int N = truncation_order(QParam::real(0.5), 1.0, 1e-15);
  EXPECT_EQ(N, smallest_order(0.5, 1.0, 1e-15));
  // Bound at N holds, bound at N-1 does not.
  EXPECT_LE(std::pow(0.5, (N + 1) * (N + 2) / 2.0) / (1 - std::pow(0.5, N + 1)), 1e-15);
  EXPECT_GT(std::pow(0.5, N * (N + 1) / 2.0) / (1 - std::pow(0.5, N)), 1e-15);
}

TEST(TruncationOrder, ZeroQNeedsNoTerms) {
  EXPECT_EQ(truncation_order(QParam::real(0.0), 1e6, 1e-15), 0);
}

TEST(TruncationOrder, NearUnitCircleStillFinite) {
  const double r = std::pow(0.95, -20.0);
  const int N = truncation_order(QParam::real(0.95), r, 1e-12);
  EXPECT_EQ(N, smallest_order(0.95, r, 1e-12));
  EXPECT_GT(N, 20);
}

TEST(TruncationOrder, CapRaisesBudgetError) {
  EXPECT_THROW(truncation_order(QParam::real(0.999), std::pow(0.999, -2000.0), 1e-15), PrecisionBudgetExceeded);
  EXPECT_THROW(truncation_order(QParam::real(0.5), 1.0, 0.0), DomainError);
}

TEST(QParamTest, DomainChecks) {
  EXPECT_THROW(QParam::real(1.0), DomainError);
  EXPECT_THROW(QParam::make({0.8, 0.8}), DomainError);
  EXPECT_THROW(QParam::real(NAN), DomainError);
  EXPECT_EQ(QParam::real(-0.3).kind(), QKind::negative_real);
  EXPECT_EQ(QParam::real(0.3).kind(), QKind::positive_real);
  EXPECT_EQ(QParam::make({0.3, 1e-300}).kind(), QKind::complex);
}

TEST(SeriesTailTest, DominatesTheRemainder) {
  const auto q = QParam::real(0.6);
  for (int start : {3, 5, 8}) {
    const double r = 1.5;
    const auto t = series_tail(q, r, start);
    long double rest = 0;
    for (int j = start; j < 400; ++j) rest += std::pow(0.6L, j * (j + 1) / 2.0L) * std::pow(1.5L, j);
    EXPECT_GE(t.bound, static_cast<double>(rest));
    EXPECT_LE(t.bound, 3.0 * static_cast<double>(rest));
  }
}

TEST(EvalTheta, ValueAtZeroIsExactlyOne) {
  for (cplx q : {cplx(0.3), cplx(-0.9), cplx(0.2, 0.5), cplx(0.0)}) {
    const auto r = eval_theta(QParam::make(q), 0.0, 1e-15);
    EXPECT_EQ(r.value, cplx(1.0, 0.0));
    EXPECT_LE(r.error_bound, 1e-15);
  }
}

TEST(EvalTheta, HalfAtOne) {
  const auto r = eval_theta(QParam::real(0.5), 1.0, 1e-15);
  const cplx ref = oracle_value(0.5, 1.0);
  EXPECT_NEAR(r.value.real(), 1.6416326, 5e-8);
  EXPECT_LE(std::abs(r.value - ref), r.error_bound);
}

TEST(EvalTheta, ConjugateSymmetryForRealQ) {
  const auto q = QParam::real(0.3);
  for (cplx w : {cplx(1.2, 0.7), cplx(-4.0, 2.5), cplx(0.1, -9.0)}) {
    const auto a = eval_theta(q, std::conj(w), 1e-14);
    const auto b = eval_theta(q, w, 1e-14);
    EXPECT_EQ(a.value, std::conj(b.value));
  }
}

TEST(EvalTheta, ErrorBoundCoversOracle) {
  const cplx qs[] = {0.3, -0.7, {0.5, 0.4}, 0.85, {-0.2, -0.6}};
  const cplx xs[] = {{2.0, 1.0}, -30.0, {0.0, 7.5}, -1000.0, {15.0, -40.0}};
  for (cplx q : qs)
    for (cplx x : xs) {
      const auto qp = QParam::make(q);
      const auto r = eval_theta(qp, x, relative_target(qp, std::abs(x), 1e-16));
      EXPECT_LE(std::abs(r.value - oracle_value(q, x)), r.error_bound) << q << " " << x;
    }
}

TEST(EvalThetaDx, AtOriginEqualsQ) {
  for (cplx q : {cplx(0.4), cplx(-0.6), cplx(0.1, 0.3)})
    EXPECT_EQ(eval_theta_dx(QParam::make(q), 0.0, 1e-15).value, q);
}

TEST(EvalThetaDx, MatchesFiniteDifference) {
  const double h = 1e-5;
  for (auto [q, x] : {std::pair<double, double>{0.5, 1.0}, {0.2, -1.0}, {0.7, -3.0}}) {
    const auto r = eval_theta_dx(QParam::real(q), x, 1e-15);
    const cplx fd = oracle::fd_dx(q, x, h);
    // O(h²) truncation of the central difference, with θ''' bounded by the oracle.
    const double third = std::abs(oracle_value(q, x, 3, 0));
    EXPECT_LE(std::abs(r.value - fd), r.error_bound + third * h * h + 1e-12) << q << " " << x;
  }
}

TEST(EvalThetaDq, AtOriginIsZero) {
  EXPECT_EQ(eval_theta_dq(QParam::real(0.4), 0.0, 1e-15).value, cplx(0.0));
}

TEST(EvalThetaDq, MatchesFiniteDifference) {
  const double h = 1e-5;
  for (auto [q, x] : {std::pair<double, double>{0.3, -5.0}, {0.5, 1.0}}) {
    const auto r = eval_theta_dq(QParam::real(q), x, 1e-15);
    const cplx fd = oracle::fd_dq(q, x, h);
    const double third = std::abs(oracle_value(q, x, 0, 3));
    EXPECT_LE(std::abs(r.value - fd), r.error_bound + third * h * h + 1e-12) << q << " " << x;
  }
}

TEST(EvalDerivatives, MatchOracleSums) {
  const auto q = QParam::make({0.45, -0.2});
  const cplx x(-3.0, 1.0);
  for (int dx = 0; dx <= 2; ++dx)
    for (int dq = 0; dq <= 1; ++dq) {
      const auto r = eval_theta_derivative(q, x, dx, dq, 1e-14);
      EXPECT_LE(std::abs(r.value - oracle_value(q.value(), x, dx, dq)), r.error_bound) << dx << dq;
    }
}

TEST(ThetaStar, VanishesAtMinusOne) {
  const auto q = QParam::real(0.4);
  for (auto m : {ThetaStarMethod::bilateral_sum, ThetaStarMethod::triple_product}) {
    const auto r = eval_jacobi_theta_star(q, -1.0, 1e-15, m);
    EXPECT_LE(std::abs(r.value), r.error_bound + 1e-300);
  }
}

TEST(ThetaStar, BilateralAgreesWithProduct) {
  const auto q = QParam::real(0.4);
  const auto a = eval_jacobi_theta_star(q, 2.0, 1e-15, ThetaStarMethod::bilateral_sum);
  const auto b = eval_jacobi_theta_star(q, 2.0, 1e-15, ThetaStarMethod::triple_product);
  EXPECT_LE(std::abs(a.value - b.value), a.error_bound + b.error_bound);
}

TEST(ThetaStar, FunctionalEquation) {
  const auto q = QParam::real(0.4);
  const cplx x = 2.0;
  const auto a = eval_jacobi_theta_star(q, x, 1e-15);
  const auto b = eval_jacobi_theta_star(q, q.value() * x, 1e-15);
  const double bound = a.error_bound + std::abs(q.value() * x) * b.error_bound + 4 * DBL_EPSILON * std::abs(a.value);
  EXPECT_LE(std::abs(a.value - q.value() * x * b.value), bound);
}

TEST(ThetaStar, ZeroArgumentIsDomainError) {
  EXPECT_THROW(eval_jacobi_theta_star(QParam::real(0.4), 0.0, 1e-15), DomainError);
}

TEST(Xi, SplitReassemblesTheta) {
  const auto q = QParam::real(0.4);
  const cplx x = 10.0;
  const auto t = eval_theta(q, x, 1e-14);
  const auto s = eval_jacobi_theta_star(q, x, 1e-14);
  const auto xi = eval_xi(q, x, 1e-14);
  EXPECT_LE(std::abs(t.value - (s.value + xi.value)), t.error_bound + s.error_bound + xi.error_bound);
}

TEST(Xi, CoefficientsBelowOneInModulus) {
  const auto q = QParam::real(0.4);
  for (double a : {3.0, 50.0, 1e6}) {
    const auto r = eval_xi(q, cplx(0.0, a), 1e-15);
    EXPECT_LE(std::abs(r.value), 1.0 / (a - 1.0) + r.error_bound);
  }
}

TEST(Xi, RealForRealArguments) {
  EXPECT_EQ(eval_xi(QParam::real(0.4), -7.0, 1e-15).value.imag(), 0.0);
  EXPECT_THROW(eval_xi(QParam::real(0.4), 0.5, 1e-15), DomainError);
}

TEST(EvalTheta, HugeArgumentIsBudgetError) {
  EXPECT_THROW(eval_theta(QParam::real(0.9), 1e40, 1e-12), PrecisionBudgetExceeded);
}
