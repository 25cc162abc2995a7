#include "graphuq/special.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "testutil.hpp"

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kPi = 3.14159265358979323846;

TEST(LogGamma, MatchesStandardLibraryAcrossRange) {
  // Log-spaced sweep over [1e-3, 1e6]; std::lgamma is the independent oracle.
  for (int i = 0; i <= 900; ++i) {
    const double x = std::pow(10.0, -3.0 + 9.0 * i / 900.0);
    const double got = graphuq::log_gamma(x);
    const double want = std::lgamma(x);
    EXPECT_LT(testutil::rel_err(got, want), 1e-10) << "x=" << x;
  }
}

TEST(LogGamma, KnownValues) {
  EXPECT_NEAR(graphuq::log_gamma(1.0), 0.0, 1e-14);
  EXPECT_NEAR(graphuq::log_gamma(2.0), 0.0, 1e-14);
  EXPECT_NEAR(graphuq::log_gamma(0.5), 0.5 * std::log(kPi), 1e-13);
  EXPECT_NEAR(graphuq::log_gamma(6.0), std::log(120.0), 1e-12);
}

TEST(LogGamma, RecurrenceIdentity) {
  for (double x : {0.01, 0.3, 1.7, 4.2, 88.0, 1234.5}) {
    const double lhs = graphuq::log_gamma(x + 1.0);
    const double rhs = graphuq::log_gamma(x) + std::log(x);
    EXPECT_LT(testutil::rel_err(lhs, rhs), 1e-12) << "x=" << x;
  }
}

TEST(LogGamma, RejectsNonPositiveArguments) {
  EXPECT_THROW(graphuq::log_gamma(0.0), std::domain_error);
  EXPECT_THROW(graphuq::log_gamma(-1.5), std::domain_error);
}

TEST(Digamma, MatchesFiniteDifferenceOfLogGamma) {
  for (double x : {0.05, 0.5, 1.0, 2.5, 7.9, 8.1, 40.0, 500.0}) {
    const double fd =
        testutil::central_diff([](double t) { return std::lgamma(t); }, x, 1e-6 * std::max(1.0, x));
    EXPECT_LT(testutil::rel_err(graphuq::digamma(x), fd), 1e-6) << "x=" << x;
  }
}

TEST(Digamma, KnownValues) {
  EXPECT_NEAR(graphuq::digamma(1.0), -kEulerGamma, 1e-13);
  EXPECT_NEAR(graphuq::digamma(0.5), -kEulerGamma - 2.0 * std::log(2.0), 1e-13);
  // psi(n) = H_{n-1} - gamma for integer n.
  EXPECT_NEAR(graphuq::digamma(10.0), testutil::harmonic(9) - kEulerGamma, 1e-13);
  EXPECT_NEAR(graphuq::digamma(102.0), testutil::harmonic(101) - kEulerGamma, 1e-12);
}

TEST(Digamma, RecurrenceIdentity) {
  for (double x : {0.02, 0.9, 3.3, 12.0, 999.0}) {
    EXPECT_NEAR(graphuq::digamma(x + 1.0), graphuq::digamma(x) + 1.0 / x,
                1e-12 * std::max(1.0, std::fabs(graphuq::digamma(x))))
        << "x=" << x;
  }
}

TEST(Digamma, RejectsNonPositiveArguments) {
  EXPECT_THROW(graphuq::digamma(0.0), std::domain_error);
  EXPECT_THROW(graphuq::digamma(-0.1), std::domain_error);
}

TEST(Trigamma, MatchesFiniteDifferenceOfDigamma) {
  for (double x : {0.05, 0.5, 1.0, 2.5, 7.9, 8.1, 40.0, 500.0}) {
    const double fd = testutil::central_diff([](double t) { return graphuq::digamma(t); }, x,
                                             1e-6 * std::max(1.0, x));
    EXPECT_LT(testutil::rel_err(graphuq::trigamma(x), fd), 1e-6) << "x=" << x;
  }
}

TEST(Trigamma, KnownValues) {
  EXPECT_NEAR(graphuq::trigamma(1.0), kPi * kPi / 6.0, 1e-13);
  EXPECT_NEAR(graphuq::trigamma(0.5), kPi * kPi / 2.0, 1e-12);
}

TEST(Trigamma, RecurrenceIdentity) {
  for (double x : {0.02, 0.9, 3.3, 12.0, 999.0}) {
    EXPECT_NEAR(graphuq::trigamma(x + 1.0), graphuq::trigamma(x) - 1.0 / (x * x), 1e-12)
        << "x=" << x;
  }
}

TEST(Trigamma, RejectsNonPositiveArguments) {
  EXPECT_THROW(graphuq::trigamma(0.0), std::domain_error);
  EXPECT_THROW(graphuq::trigamma(-3.0), std::domain_error);
}

}  // namespace
