#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "almostreg/ioffe.hpp"

using namespace almostreg;

namespace {

std::vector<Point> ball(const PointCloud& c, double center, double radius) {
  std::vector<Point> out;
  for (const Point& p : c)
    if (std::abs(p[0] - center) < radius) out.push_back(p);
  return out;
}

// Violations counted straight from the criterion's quantifiers.
std::size_t criterion_brute(const SampledMap& g, const PairSet& W, double c, const GammaFn& gamma,
                            const EpsLambdaTable& table) {
  std::size_t violations = 0;
  const PointCloud& dom = g.domain();
  auto val = [&](const Point& x) { return g.range()[g.values(*dom.index_of(x)).front()][0]; };
  for (const auto& [eps, lambda] : table)
    for (const Point& y : W.ys())
      for (const Point& u : dom) {
        const double ru = std::abs(val(u) - y[0]);
        bool constrained = false;
        for (const Point& x : W.fiber_over(y)) {
          const double rx = std::abs(val(x) - y[0]);
          if (ExtReal(rx) < ExtReal(c) * gamma(x) && eps < ru && ru <= rx - c * std::abs(u[0] - x[0]))
            constrained = true;
        }
        if (!constrained) continue;
        bool improved = false;
        for (const Point& v : dom)
          if (c * std::abs(u[0] - v[0]) <= ru - std::abs(val(v) - y[0]) - lambda * eps) improved = true;
        if (!improved) ++violations;
      }
  return violations;
}

}  // namespace

TEST(Ioffe, CriterionCountsMatchBruteForce) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> slope(0.3, 3.0), cdist(0.2, 3.5);
  const PointCloud dom = PointCloud::line(-1, 1, 0.05);
  const EpsLambdaTable table{{0.2, 0.2}, {0.1, 0.1}};
  for (int k = 0; k < 30; ++k) {
    const double a = slope(rng), c = cdist(rng);
    const double kink = (k % 3 == 0) ? 0.5 : 1.0;  // some piecewise-linear instances
    const SampledMap g =
        SampledMap::from_scalar(dom, [a, kink](double x) { return x > 0 ? a * kink * x : a * x; });
    const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), 0, 0.5));
    const GammaFn gamma = constant_gamma(ExtReal(0.5));
    const CriterionReport r = check_criterion(g, W, c, gamma, table);
    EXPECT_EQ(r.violation_count, criterion_brute(g, W, c, gamma, table)) << "instance " << k;
    EXPECT_EQ(r.passed, r.violation_count == 0);
  }
}

// Whenever the criterion passes, openness at c holds on W.
TEST(Ioffe, ImplicationOnRandomAffineMaps) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> slope(0.5, 3.0), shift(-0.2, 0.2), frac(0.3, 1.5);
  const PointCloud dom = PointCloud::line(-1, 1, 0.02);
  const EpsLambdaTable table{{0.08, 0.1}, {0.04, 0.1}};
  for (int k = 0; k < 30; ++k) {
    const double a = slope(rng), b = shift(rng), c = a * frac(rng);
    const SampledMap g = SampledMap::from_scalar(dom, [a, b](double x) { return a * x + b; });
    const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), b, 0.5));
    const GammaFn gamma = [](const Point& x) { return ExtReal(std::max(0.0, 0.5 - std::abs(x[0]))); };
    const CriterionReport crit = check_criterion(g, W, c, gamma, table);
    const ConclusionVerdict v = conclude_O(crit, g, W, c, gamma);
    EXPECT_TRUE(v.implication_holds) << "instance " << k;
  }
}

TEST(Ioffe, CubicFailsCriterionAndOpenness) {
  const PointCloud dom = PointCloud::line(-1, 1, 0.01);
  const SampledMap g = SampledMap::from_scalar(dom, [](double x) { return x * x * x; });
  const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), 0, 0.5));
  const GammaFn gamma = [](const Point& x) { return ExtReal(std::max(0.0, 0.5 - std::abs(x[0]))); };
  const CriterionReport crit = check_criterion(g, W, 1.0, gamma, {{0.08, 0.1}, {0.04, 0.1}, {0.02, 0.1}});
  EXPECT_FALSE(crit.passed);
  EXPECT_TRUE(std::is_sorted(crit.witnesses.begin(), crit.witnesses.end()));
  const ConclusionVerdict v = conclude_O(crit, g, W, 1.0, gamma);
  EXPECT_FALSE(v.openness.passed);
  EXPECT_TRUE(v.implication_holds);
}

TEST(Ioffe, CriterionInputValidation) {
  const SampledMap g = SampledMap::from_pairs({{{0}, {0}}, {{0}, {1}}});
  const PairSet W({{{0}, {0}}});
  EXPECT_THROW(check_criterion(g, W, 1.0, constant_gamma(ExtReal(1.0)), {{0.1, 0.1}}), std::invalid_argument);
  const SampledMap h = SampledMap::from_pairs({{{0}, {0}}});
  EXPECT_THROW(check_criterion(h, W, 1.0, constant_gamma(ExtReal(1.0)), {{0.1, 1.5}}), std::invalid_argument);
  EXPECT_THROW(check_criterion(h, PairSet(), 1.0, constant_gamma(ExtReal(1.0)), {{0.1, 0.1}}),
               std::invalid_argument);
}

TEST(Ioffe, NewtonDescentConverges) {
  const auto g = [](double x) { return 2 * x + 0.1 * x * x; };
  const auto dg = [](double x) { return 2 + 0.2 * x; };
  DescentProblem p;
  p.g = [g](const Point& u) { return Point{g(u[0])}; };
  p.complete_space = p.continuous = true;
  const DescentTrace tr = descent_solve(p, {0}, {0.8}, 1.5, newton_oracle_1d(g, dg),
                                        [](double) { return 0.1; }, 1e-10, 50);
  EXPECT_EQ(tr.status, DescentStatus::residual_below_eps);
  ASSERT_TRUE(tr.limit_point.has_value());
  EXPECT_NEAR(g((*tr.limit_point)[0]), 0.8, 1e-10);
  EXPECT_NEAR(tr.radius_bound, 0.8 / 1.5, 1e-15);
  for (const Point& u : tr.iterates) EXPECT_LE(std::abs(u[0]), tr.radius_bound + 1e-12);
  for (std::size_t k = 1; k < tr.residuals.size(); ++k) EXPECT_LT(tr.residuals[k], tr.residuals[k - 1]);
}

TEST(Ioffe, DescentRejectsBadOracle) {
  DescentProblem p;
  p.g = [](const Point& u) { return u; };
  const ImprovementOracle jump{"jump", [](const Point& u, const Point&, double, double) {
                                 return std::optional<Point>(Point{u[0] - 5.0});
                               }};
  const DescentTrace tr = descent_solve(p, {0}, {1}, 1.0, jump, [](double) { return 0.5; }, 1e-6, 10);
  EXPECT_EQ(tr.status, DescentStatus::oracle_exhausted);
  EXPECT_EQ(tr.rejected.size(), 1u);
  EXPECT_EQ(tr.iterates.size(), 1u);
  p.gamma = ExtReal(0.1);
  EXPECT_THROW(descent_solve(p, {0}, {1}, 1.0, jump, [](double) { return 0.5; }, 1e-6, 10),
               std::invalid_argument);
}

TEST(Ioffe, GridAndCoordinateOracles) {
  DescentProblem p;
  p.g = [](const Point& u) { return Point{3 * u[0]}; };
  const DescentTrace grid = descent_solve(p, {0}, {0.6}, 1.0, grid_scan_oracle(PointCloud::line(-1, 1, 0.01), p.g, 1.0),
                                          [](double) { return 0.5; }, 0.02, 100);
  EXPECT_EQ(grid.status, DescentStatus::residual_below_eps);
  const DescentTrace coord = descent_solve(p, {0}, {0.6}, 1.0, coordinate_scan_oracle(p.g, 1.0, 0.1, 1e-9),
                                           [](double) { return 0.5; }, 1e-6, 5000);
  EXPECT_EQ(coord.status, DescentStatus::residual_below_eps);
  EXPECT_NEAR(coord.iterates.back()[0], 0.2, 1e-6);
}

TEST(Ioffe, MilyutinGamma) {
  const PointCloud X = PointCloud::line(-2, 2, 0.5);
  const PointCloud U({{-0.5}, {0.0}, {0.5}});
  EXPECT_EQ(milyutin_gamma(U, X, {0}), ExtReal(1.0));
  EXPECT_EQ(milyutin_gamma(X, X, {0}), kInf);
  EXPECT_THROW(milyutin_gamma(U, X, {0.25}), std::invalid_argument);
}

TEST(Ioffe, ShrinkBetaAndSemilocal) {
  EXPECT_DOUBLE_EQ(shrink_beta(1, 1, 1, 1), 0.5);
  EXPECT_DOUBLE_EQ(shrink_beta(0.1, 1, 1, 1), 0.1);
  EXPECT_DOUBLE_EQ(semilocal_region(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(semilocal_region(1, 0.1), 0.1);
  EXPECT_THROW(shrink_beta(0, 1, 1, 1), std::invalid_argument);
  const SampledMap g = SampledMap::from_scalar(PointCloud::line(-1, 1, 0.01), [](double x) { return 2 * x; });
  const ShrinkBetaCheck s = shrink_beta_check(g, {0}, {0}, 0.5, 0.5, 2.0, 0.5, 0.01);
  EXPECT_TRUE(s.hypothesis.passed);
  EXPECT_TRUE(s.conclusion.passed);
  EXPECT_TRUE(semilocal_check(g, {0}, 0.5, 2.0, 0.01).passed);
}

TEST(Ioffe, SetValuedCriterionViewsAgree) {
  const PointCloud dom = PointCloud::line(-1, 1, 0.02);
  const SampledMap g = SampledMap::from_scalar(dom, [](double x) { return 2 * x; });
  const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), 0, 0.5));
  const GammaFn gamma = [](const Point& x) { return ExtReal(std::max(0.0, 0.5 - std::abs(x[0]))); };
  for (double c : {1.5, 2.5}) {
    const SetValuedCriterionReport r = setvalued_criterion(g, W, c, 0.25, gamma, {{0.08, 0.1}, {0.04, 0.1}});
    EXPECT_TRUE(r.agree) << c;
    EXPECT_EQ(r.passed, c < 2.0) << c;
  }
}

// With 1-Lipschitz gamma the weaker selection covers every exactly constrained u.
TEST(Ioffe, LipschitzGammaConstraintCoversExact) {
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> slope(0.3, 3.0), cdist(0.2, 3.5);
  const PointCloud dom = PointCloud::line(-1, 1, 0.05);
  const EpsLambdaTable table{{0.2, 0.2}, {0.1, 0.1}};
  const GammaFn gamma = [](const Point& x) { return ExtReal(std::max(0.0, 0.6 - std::abs(x[0]))); };
  for (int k = 0; k < 30; ++k) {
    const double a = slope(rng), b = slope(rng), c = cdist(rng);
    const SampledMap g = SampledMap::from_scalar(dom, [a, b](double x) { return x > 0 ? a * x : b * x; });
    const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), 0, 0.5));
    const CriterionReport exact = check_criterion(g, W, c, gamma, table);
    const CriterionReport weak = check_criterion(g, W, c, gamma, table, CriterionConstraint::lipschitz_gamma);
    EXPECT_GE(weak.violation_count, exact.violation_count) << "instance " << k;
    if (weak.passed) {
      EXPECT_TRUE(exact.passed) << "instance " << k;
    }
  }
}

TEST(Ioffe, LipschitzGammaConstraintRejectsSteepGamma) {
  const PointCloud dom = PointCloud::line(-1, 1, 0.05);
  const SampledMap g = SampledMap::from_scalar(dom, [](double x) { return 2 * x; });
  const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), 0, 0.5));
  const GammaFn steep = [](const Point& x) { return ExtReal(std::max(0.0, 1.5 - 3 * std::abs(x[0]))); };
  EXPECT_THROW(check_criterion(g, W, 1.0, steep, {{0.1, 0.1}}, CriterionConstraint::lipschitz_gamma),
               std::invalid_argument);
  EXPECT_NO_THROW(check_criterion(g, W, 1.0, steep, {{0.1, 0.1}}));
}
