#include "chcda/quadrature.hpp"
#include "chcda/space.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace chcda;

namespace {

// int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
double monomial_integral(int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); }

double rule_integral(const TriangleRule& rule, int a, int b) {
  double s = 0.0;
  for (const auto& qp : rule.points) s += qp.weight * std::pow(qp.point.x(), a) * std::pow(qp.point.y(), b);
  return s;
}

const std::array<Eigen::Vector2d, 6> kNodes = {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                                Eigen::Vector2d(0.5, 0), Eigen::Vector2d(0.5, 0.5),
                                                Eigen::Vector2d(0, 0.5)};

}  // namespace

TEST(Quadrature, DegreeSixRuleIsExactForMonomials) {
  const TriangleRule& rule = triangle_rule_degree6();
  EXPECT_EQ(rule.points.size(), 12u);
  EXPECT_GE(rule.degree, 6);
  for (int a = 0; a <= 6; ++a) {
    for (int b = 0; a + b <= 6; ++b) EXPECT_NEAR(rule_integral(rule, a, b), monomial_integral(a, b), 1e-14);
  }
  // and not exact for every degree-7 monomial
  double worst = 0.0;
  for (int a = 0; a <= 7; ++a) worst = std::max(worst, std::abs(rule_integral(rule, a, 7 - a) - monomial_integral(a, 7 - a)));
  EXPECT_GT(worst, 1e-8);
}

TEST(Quadrature, CollapsedRuleExactness) {
  for (int n : {2, 4, 5}) {
    const TriangleRule rule = collapsed_gauss_rule(n);
    EXPECT_EQ(rule.degree, 2 * n - 2);
    for (int a = 0; a <= rule.degree; ++a) {
      for (int b = 0; a + b <= rule.degree; ++b) {
        EXPECT_NEAR(rule_integral(rule, a, b), monomial_integral(a, b), 1e-14) << n << ' ' << a << ' ' << b;
      }
    }
  }
}

TEST(Quadrature, GaussLineRule) {
  for (int n = 1; n <= 6; ++n) {
    const LineRule rule = gauss_line_rule(n);
    EXPECT_EQ(rule.degree, 2 * n - 1);
    for (int k = 0; k <= rule.degree; ++k) {
      double s = 0.0;
      for (int q = 0; q < n; ++q) s += rule.weights[q] * std::pow(rule.nodes[q], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14);
    }
  }
  EXPECT_EQ(edge_rule().nodes.size(), 3u);
  EXPECT_THROW(gauss_line_rule(0), std::invalid_argument);
}

TEST(Basis, KroneckerAtNodes) {
  for (int j = 0; j < 6; ++j) {
    const BasisValues b = eval_basis(kNodes[j]);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(b.value[i], i == j ? 1.0 : 0.0, 1e-15);
  }
}

TEST(Basis, PartitionOfUnityAndDerivativeSums) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    double x = u(gen), y = u(gen);
    if (x + y > 1) x = 1 - x, y = 1 - y;
    const BasisValues b = eval_basis({x, y});
    double s = 0.0;
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 6; ++i) s += b.value[i], g += b.grad[i], h += b.hess[i];
    EXPECT_NEAR(s, 1.0, 1e-14);
    EXPECT_LT(g.norm(), 1e-13);
    EXPECT_LT(h.norm(), 1e-13);
  }
}

TEST(Basis, DerivativesMatchFiniteDifferences) {
  const Eigen::Vector2d p(0.23, 0.41);
  const double d = 1e-5;
  const BasisValues b = eval_basis(p);
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[axis] = d;
    const BasisValues bp = eval_basis(p + e), bm = eval_basis(p - e);
    for (int i = 0; i < 6; ++i) {
      EXPECT_NEAR((bp.value[i] - bm.value[i]) / (2 * d), b.grad[i][axis], 1e-9);
      EXPECT_NEAR(((bp.grad[i] - bm.grad[i]) / (2 * d) - b.hess[i].col(axis)).norm(), 0.0, 1e-8);
    }
  }
}

TEST(Basis, ReproducesXSquaredHessianOnEveryTriangle) {
  const auto space = Space::uniform(4);
  const Field f = interpolate_nodal(space, [](const Eigen::Vector2d& x) { return x.x() * x.x(); });
  Eigen::Matrix2d expected;
  expected << 2, 0, 0, 0;
  for (int t = 0; t < space->mesh().num_triangles(); ++t) {
    const auto loc = oracle::field_at(*space, f.values, t, space->geometry(t).to_physical({0.2, 0.3}));
    EXPECT_LT((loc.hess - expected).norm(), 1e-10);
  }
}

TEST(DofMap, CountAndContinuity) {
  for (int n : {2, 5, 16}) {
    const auto space = Space::uniform(n);
    EXPECT_EQ(space->num_dofs(), (2 * n + 1) * (2 * n + 1));
    // a DOF's node position is the same from every triangle that owns it
    std::vector<int> owners(space->num_dofs(), 0);
    for (int t = 0; t < space->mesh().num_triangles(); ++t) {
      const auto& dofs = space->dofs().element(t);
      for (int i = 0; i < 6; ++i) {
        EXPECT_LT((space->geometry(t).to_physical(kNodes[i]) - space->node(dofs[i])).norm(), 1e-14);
        ++owners[dofs[i]];
      }
    }
    for (int c : owners) EXPECT_GE(c, 1);
    // every lattice point maps to a DOF
    for (int b = 0; b <= 2 * n; ++b) {
      for (int a = 0; a <= 2 * n; ++a) {
        const int d = space->lattice_dof(a, b);
        ASSERT_GE(d, 0);
        EXPECT_LT((space->node(d) - Eigen::Vector2d(a, b) / (2.0 * n)).norm(), 1e-14);
      }
    }
  }
}

TEST(Interpolation, ConstantAndLinearReproduction) {
  const auto space = Space::uniform(6);
  const Field c = interpolate_nodal(space, [](const Eigen::Vector2d&) { return 2.5; });
  EXPECT_TRUE((c.values.array() == 2.5).all());
  const Field lin = interpolate_nodal(space, [](const Eigen::Vector2d& x) { return x.x() + x.y(); });
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(u(gen), u(gen));
    EXPECT_NEAR(evaluate_field(lin, p), p.x() + p.y(), 1e-14);
  }
  EXPECT_NEAR(evaluate_field(lin, {1.0, 1.0}), 2.0, 1e-14);
  EXPECT_THROW(evaluate_field(lin, {1.5, 0.0}), std::out_of_range);
}

TEST(Interpolation, QuadraticPatchTest) {
  const auto space = Space::uniform(3);
  auto q = [](const Eigen::Vector2d& x) { return 1 + 2 * x.x() - x.y() + 3 * x.x() * x.y() - x.x() * x.x() + 0.5 * x.y() * x.y(); };
  const Field f = interpolate_nodal(space, q);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d p(u(gen), u(gen));
    EXPECT_NEAR(evaluate_field(f, p), q(p), 1e-13);
  }
}

TEST(Interpolation, SineErrorConvergesAtThirdOrder) {
  auto f = [](const Eigen::Vector2d& x) { return std::sin(std::numbers::pi * x.x()); };
  std::vector<double> logs_h, logs_e;
  for (int n : {8, 16, 32, 64}) {
    const auto space = Space::uniform(n);
    const Field fi = interpolate_nodal(space, f);
    const double err2 = oracle::integrate(*space, [&](int t, const Eigen::Vector2d& x) {
      const double d = oracle::field_at(*space, fi.values, t, x).value - f(x);
      return d * d;
    });
    logs_h.push_back(std::log(space->mesh().h()));
    logs_e.push_back(0.5 * std::log(err2));
  }
  for (std::size_t k = 1; k < logs_h.size(); ++k) {
    const double slope = (logs_e[k] - logs_e[k - 1]) / (logs_h[k] - logs_h[k - 1]);
    EXPECT_NEAR(slope, 3.0, 0.15);
  }
}

TEST(Field, RejectsWrongSize) {
  const auto space = Space::uniform(2);
  EXPECT_THROW(Field(space, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  EXPECT_THROW(Field(nullptr, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  Field f(space);
  EXPECT_EQ(f.values.size(), 25);
  EXPECT_TRUE(f.all_finite());
  f.values[0] = std::nan("");
  EXPECT_FALSE(f.all_finite());
}
