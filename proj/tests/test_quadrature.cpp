#include <gtest/gtest.h>

#include <cmath>

#include "cgq/quadrature.hpp"

namespace {

// Exact integral of x^a y^b over {x, y >= 0, x + y <= 1}: a! b! / (a+b+2)!.
double reference_monomial(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

double apply_rule(const cgq::TriangleRule& rule, int a, int b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    // Reference triangle (0,0), (1,0), (0,1): x = lam1, y = lam2.
    const double x = rule.points[k][1];
    const double y = rule.points[k][2];
    acc += rule.weights[k] * std::pow(x, a) * std::pow(y, b);
  }
  return 0.5 * acc;
}

} // namespace

TEST(GaussLegendre, MidpointForOneNode) {
  const auto r = cgq::gauss_legendre_01(1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r.nodes[0], 0.5);
  EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
}

TEST(GaussLegendre, TwoNodesMatchAnalyticRoots) {
  const auto r = cgq::gauss_legendre_01(2);
  const double d = std::sqrt(3.0) / 6.0;
  EXPECT_NEAR(r.nodes[0], 0.5 - d, 1e-15);
  EXPECT_NEAR(r.nodes[1], 0.5 + d, 1e-15);
  EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
  EXPECT_NEAR(r.weights[1], 0.5, 1e-15);
}

TEST(GaussLegendre, ThreeNodesIntegrateQuintic) {
  const auto r = cgq::gauss_legendre_01(3);
  EXPECT_NEAR(r.integrate([](double s) { return std::pow(s, 5); }), 1.0 / 6.0, 1e-14);
}

TEST(GaussLegendre, ExactnessSymmetryAndOrderingUpToTwelve) {
  for (int q = 1; q <= 12; ++q) {
    const auto r = cgq::gauss_legendre_01(q);
    ASSERT_EQ(r.size(), static_cast<std::size_t>(q));
    double wsum = 0.0;
    for (int k = 0; k < q; ++k) {
      wsum += r.weights[k];
      EXPECT_GT(r.weights[k], 0.0);
      EXPECT_GT(r.nodes[k], 0.0);
      EXPECT_LT(r.nodes[k], 1.0);
      if (k > 0) {
        EXPECT_LT(r.nodes[k - 1], r.nodes[k]);
      }
      EXPECT_NEAR(r.nodes[k] + r.nodes[q - 1 - k], 1.0, 1e-14);
    }
    EXPECT_NEAR(wsum, 1.0, 1e-14) << "q=" << q;
    double worst = 0.0;
    for (int p = 0; p <= 2 * q - 1; ++p) {
      const double got = r.integrate([p](double s) { return std::pow(s, p); });
      worst = std::max(worst, std::abs(got - 1.0 / (p + 1)));
    }
    EXPECT_LE(worst, 1e-13) << "q=" << q;
  }
}

TEST(GaussLegendre, RejectsOutOfRangeOrder) {
  EXPECT_THROW(cgq::gauss_legendre_01(0), cgq::ConfigError);
  EXPECT_THROW(cgq::gauss_legendre_01(cgq::kMaxGaussOrder + 1), cgq::ConfigError);
}

TEST(TriangleRule, DegreeTwoIntegratesConstantToArea) {
  const auto r = cgq::triangle_rule(2);
  EXPECT_NEAR(apply_rule(r, 0, 0), 0.5, 1e-16);
}

TEST(TriangleRule, DegreeFourMonomialsMatchAnalyticValues) {
  const auto r = cgq::triangle_rule(4);
  EXPECT_NEAR(apply_rule(r, 2, 2), 1.0 / 180.0, 1e-15);
  EXPECT_NEAR(apply_rule(r, 4, 0), 1.0 / 30.0, 1e-15);
}

TEST(TriangleRule, ExactToDeclaredDegree) {
  for (int degree : {2, 4}) {
    const auto r = cgq::triangle_rule(degree);
    double wsum = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      EXPECT_GT(r.weights[k], 0.0);
      EXPECT_NEAR(r.points[k][0] + r.points[k][1] + r.points[k][2], 1.0, 1e-15);
      wsum += r.weights[k];
    }
    EXPECT_NEAR(wsum, 1.0, 1e-15);
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        EXPECT_NEAR(apply_rule(r, a, b), reference_monomial(a, b), 1e-15)
            << "degree " << degree << " monomial x^" << a << " y^" << b;
      }
    }
  }
}

TEST(TriangleRule, RejectsUnsupportedDegree) {
  EXPECT_THROW(cgq::triangle_rule(3), cgq::ConfigError);
  EXPECT_THROW(cgq::triangle_rule(6), cgq::ConfigError);
}
