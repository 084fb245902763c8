#include <gtest/gtest.h>

#include <cfloat>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ptheta/ptheta.hpp"

using namespace ptheta;

namespace {

// Fixed seeds keep failures reproducible.
std::mt19937_64 rng_for(std::uint64_t salt) { return std::mt19937_64(0x9e3779b97f4a7c15ULL ^ salt); }

cplx random_q(std::mt19937_64& rng, double rmin, double rmax, bool complex) {
  std::uniform_real_distribution<double> r(rmin, rmax);
  std::bernoulli_distribution sign(0.5);
  if (!complex) return sign(rng) ? r(rng) : -r(rng);
  return oracle::random_polar(rng, rmin, rmax);
}

}  // namespace

TEST(Property, ErrorBoundDominatesOracle) {
  auto rng = rng_for(1);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 200; ++i) {
    const cplx qv = random_q(rng, 0.02, 0.9, coin(rng));
    const auto q = QParam::make(qv);
    const cplx x = oracle::random_polar(rng, 0.0, std::pow(std::abs(qv), -8.0));
    const auto r = eval_theta(q, x, relative_target(q, std::abs(x), 1e-15));
    const cplx ref(oracle::theta_auto(oracle::lc(qv), oracle::lc(x)));
    EXPECT_LE(std::abs(r.value - ref), r.error_bound) << qv << " " << x;
  }
}

TEST(Property, DerivativeBoundsDominateOracle) {
  auto rng = rng_for(2);
  for (int i = 0; i < 60; ++i) {
    const cplx qv = random_q(rng, 0.05, 0.85, i % 2 == 0);
    const auto q = QParam::make(qv);
    const cplx x = oracle::random_polar(rng, 0.0, std::pow(std::abs(qv), -4.0));
    const int dx = i % 3, dq = (i / 3) % 2;
    const auto r = eval_theta_derivative(q, x, dx, dq, relative_target(q, std::abs(x), 1e-15));
    const cplx ref(oracle::theta_auto(oracle::lc(qv), oracle::lc(x), dx, dq));
    EXPECT_LE(std::abs(r.value - ref), r.error_bound) << qv << " " << x << " " << dx << dq;
  }
}

TEST(Property, FunctionalEquationOfThetaStar) {
  auto rng = rng_for(3);
  for (int i = 0; i < 100; ++i) {
    const cplx qv = random_q(rng, 0.05, 0.9, i % 2 == 1);
    const auto q = QParam::make(qv);
    const cplx x = oracle::random_polar(rng, 0.5, 3.0);
    const auto a = eval_jacobi_theta_star(q, x, 1e-15);
    const auto b = eval_jacobi_theta_star(q, qv * x, 1e-15);
    const double bound = a.error_bound + std::abs(qv * x) * b.error_bound + 4 * DBL_EPSILON * (1.0 + std::abs(a.value));
    EXPECT_LE(std::abs(a.value - qv * x * b.value), bound) << qv << " " << x;
  }
}

TEST(Property, TripleProductAgreesWithBilateralSum) {
  auto rng = rng_for(4);
  for (int i = 0; i < 100; ++i) {
    const cplx qv = random_q(rng, 0.05, 0.9, i % 2 == 0);
    const auto q = QParam::make(qv);
    const cplx x = oracle::random_polar(rng, 0.5, 3.0);
    const auto a = eval_jacobi_theta_star(q, x, 1e-15, ThetaStarMethod::bilateral_sum);
    const auto b = eval_jacobi_theta_star(q, x, 1e-15, ThetaStarMethod::triple_product);
    EXPECT_LE(std::abs(a.value - b.value), a.error_bound + b.error_bound) << qv << " " << x;
  }
}

TEST(Property, ZeroSetIsCompleteInItsDisk) {
  auto rng = rng_for(5);
  std::uniform_int_distribution<int> m(2, 7);
  for (int i = 0; i < 20; ++i) {
    const auto q = QParam::make(random_q(rng, 0.05, 0.6, i % 3 == 0));
    const auto zs = find_zeros_in_disk(q, ladder_radius(q, m(rng)), 1e-14);
    EXPECT_EQ(zs.total_multiplicity(), zs.winding) << q.value();
    EXPECT_EQ(zs.winding, count_zeros_argument_principle(q, 0.0, zs.disk_radius)) << q.value();
    for (const auto& z : zs.zeros) EXPECT_LT(std::abs(z.location), zs.disk_radius);
  }
}

TEST(Property, PositiveQRealZerosNegativeAndConjugateSymmetric) {
  auto rng = rng_for(6);
  std::uniform_real_distribution<double> r(0.05, 0.6);
  for (int i = 0; i < 15; ++i) {
    const double qv = r(rng);
    const auto q = QParam::real(qv);
    const auto zs = find_zeros_in_disk(q, ladder_radius(q, 8), 1e-14);
    for (const auto& z : zs.zeros) {
      if (z.location.imag() == 0.0) {
        EXPECT_LT(z.location.real(), 0.0) << qv;
        continue;
      }
      bool mirrored = false;
      for (const auto& w : zs.zeros)
        if (std::abs(w.location - std::conj(z.location)) <= 1e-12 * std::abs(z.location) &&
            w.multiplicity == z.multiplicity)
          mirrored = true;
      EXPECT_TRUE(mirrored) << qv << " " << z.location;
    }
  }
}

TEST(Property, SmallQLadderDiskHoldsExactlyMZeros) {
  auto rng = rng_for(7);
  std::uniform_real_distribution<double> r(0.01, 0.3);
  std::uniform_int_distribution<int> m(1, 9);
  for (int i = 0; i < 25; ++i) {
    const double qv = r(rng);
    const int mm = m(rng);
    const auto q = QParam::real(qv);
    EXPECT_EQ(find_zeros_in_disk(q, ladder_radius(q, mm), 1e-14).total_multiplicity(), mm) << qv << " " << mm;
  }
}

TEST(Property, TailOffsetsDecay) {
  for (double qv : {0.2, 0.45, -0.45, 0.6}) {
    const auto q = QParam::real(qv);
    const int k0 = tail_start_policy(q);
    double prev = 1.0;
    for (int k = k0; k <= k0 + 10; k += 2) {
      const auto t = certify_tail_zero(q, k);
      EXPECT_LT(t.scaled_offset, prev) << qv << " k=" << k;
      EXPECT_LT(t.scaled_offset, 0.1);
      prev = t.scaled_offset;
    }
  }
}
