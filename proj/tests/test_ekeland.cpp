#include <gtest/gtest.h>

#include <random>
#include <set>

#include "almostreg/ekeland.hpp"

using namespace almostreg;

namespace {

struct Instance {
  PointCloud cloud;
  std::vector<ExtReal> values;
  Objective phi;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0), val(0.05, 3.0);
  std::vector<Point> pts;
  std::vector<ExtReal> vals;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({coord(rng), coord(rng)});
    vals.emplace_back(val(rng));
  }
  PointCloud c(pts);
  return {c, vals, objective_from_table(c, vals)};
}

// Brute-force set of weak points: descent from x and no strict improvement anywhere.
std::set<std::size_t> weak_points_brute(const Instance& in, const QuasiPremetric& eta, const Point& x) {
  std::set<std::size_t> out;
  const double px = in.phi(x).value();
  for (std::size_t i = 0; i < in.cloud.size(); ++i) {
    const Point& u = in.cloud[i];
    if (in.values[i].value() + eta(u, x).to_double() > px + eta(x, x).to_double()) continue;
    bool stationary = true;
    for (std::size_t j = 0; j < in.cloud.size(); ++j)
      if (in.values[j].value() + eta(in.cloud[j], u).to_double() < in.values[i].value()) stationary = false;
    if (stationary) out.insert(i);
  }
  return out;
}

}  // namespace

TEST(Ekeland, ThreePointTrace) {
  const PointCloud c = PointCloud::line(0, 2, 1);
  const Objective phi = objective_from_table(c, {ExtReal(0.1), ExtReal(1.5), ExtReal(3.0)});
  const EkelandTrace tr = generate_trace(c, euclidean_metric(), phi, {2});
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr.points[1], (Point{0}));
  EXPECT_EQ(tr.alphas[0], ExtReal(0.1));
  EXPECT_EQ(tr.alphas[1], kInf);
  EXPECT_EQ(tr.termination, TraceTermination::alpha_infinite);
  EXPECT_DOUBLE_EQ(tr.slack[0], 1.0);
}

TEST(Ekeland, RequiresTriangleAxiom) {
  const PointCloud c = PointCloud::line(0, 1, 1);
  const Objective phi = objective_from_table(c, {ExtReal(1.0), ExtReal(1.0)});
  const QuasiPremetric no_a2([](const Point& x, const Point& u) { return ExtReal(euclidean_distance(x, u)); },
                             axioms({Axiom::A1}));
  EXPECT_THROW(generate_trace(c, no_a2, phi, {0}), std::invalid_argument);
}

TEST(Ekeland, ConstantObjectiveIsAlreadyStationary) {
  const PointCloud c = PointCloud::line(0, 1, 0.25);
  const Objective phi = objective_from_table(c, std::vector<ExtReal>(c.size(), ExtReal(1.0)));
  const EkelandCertificate w = weak_point(c, euclidean_metric(), phi, {0.5});
  EXPECT_EQ(w.point, (Point{0.5}));
  EXPECT_TRUE(w.stationarity_ok);
  EXPECT_EQ(w.trace_position, 1u);
}

TEST(Ekeland, EpsilonOutOfRangeRejected) {
  const PointCloud c = PointCloud::line(0, 1, 1);
  const Objective phi = objective_from_table(c, {ExtReal(1.0), ExtReal(0.5)});
  EXPECT_THROW(approx_point(c, euclidean_metric(), phi, {0}, 1.0), std::invalid_argument);
  EXPECT_THROW(approx_point(c, euclidean_metric(), phi, {0}, 0.0), std::invalid_argument);
}

// Descent law of the trace, checked pair by pair, on random instances.
TEST(Ekeland, TraceDescentLawProperty) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const Instance in = random_instance(rng, 20);
    const Point& x = in.cloud[k % 20];
    const EkelandTrace tr = generate_trace(in.cloud, euclidean_metric(), in.phi, x);
    for (std::size_t a = 0; a < tr.size(); ++a)
      for (std::size_t b = a + 1; b < tr.size(); ++b)
        EXPECT_LT(in.phi(tr.points[b]).value() + euclidean_distance(tr.points[b], tr.points[a]),
                  in.phi(tr.points[a]).value());
    EXPECT_EQ(tr.termination, TraceTermination::alpha_infinite);
    const TraceVerification v = verify_trace(in.cloud, tr, euclidean_metric(), in.phi,
                                             0.5 * in.phi(x).value());
    EXPECT_TRUE(v.pairs_ok);
    EXPECT_TRUE(v.n.has_value());
  }
}

// Weak point lies in the brute-force set of weak points.
TEST(Ekeland, WeakPointMatchesBruteForce) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 100; ++k) {
    const Instance in = random_instance(rng, 15);
    const Point& x = in.cloud[k % 15];
    const QuasiPremetric eta = (k % 2) ? euclidean_metric() : chebyshev_metric();
    const EkelandCertificate w = weak_point(in.cloud, eta, in.phi, x);
    const auto brute = weak_points_brute(in, eta, x);
    ASSERT_TRUE(w.index.has_value());
    EXPECT_TRUE(brute.count(*w.index)) << "instance " << k;
    EXPECT_TRUE(w.descent_ok);
    EXPECT_TRUE(w.stationarity_ok);
  }
}

TEST(Ekeland, ApproxPointCertifiesStationarity) {
  std::mt19937_64 rng(29);
  for (int k = 0; k < 60; ++k) {
    const Instance in = random_instance(rng, 15);
    const Point& x = in.cloud[k % 15];
    const double eps = 0.3 * in.phi(x).value();
    const EkelandCertificate a = approx_point(in.cloud, euclidean_metric(), in.phi, x, eps);
    EXPECT_TRUE(a.descent_ok);
    EXPECT_TRUE(a.stationarity_ok);
    // independent re-check of eps-stationarity
    for (std::size_t i = 0; i < in.cloud.size(); ++i)
      EXPECT_GT(in.values[i].value() + euclidean_distance(in.cloud[i], a.point), in.phi(a.point).value() - eps);
  }
}

TEST(Ekeland, TwoConstantConclusions) {
  const PointCloud c = PointCloud::line(-1, 1, 0.05);
  const auto phi = [](const Point& p) { return p[0] * p[0]; };
  const TwoConstantReport r = two_constant_point(c, euclidean_metric(), phi, {0.5}, 0.3, 0.5);
  EXPECT_TRUE(r.a_ok);
  EXPECT_TRUE(r.b_ok);
  EXPECT_TRUE(r.c_ok);
  EXPECT_NEAR(r.inf_phi, 0.0, 1e-12);
  EXPECT_THROW(two_constant_point(c, euclidean_metric(), phi, {0.9}, 0.3, 0.5), std::invalid_argument);
}

// (delta, r) sweep: the three conclusions always hold.
TEST(Ekeland, TwoConstantProperty) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(0.05, 1.0), r(0.05, 2.0);
  const PointCloud c = PointCloud::grid({-1, -1}, {1, 1}, 0.25);
  const auto phi = [](const Point& p) { return std::abs(p[0]) + 0.5 * p[1] * p[1]; };
  for (int k = 0; k < 50; ++k) {
    const double delta = d(rng);
    // pick a start with phi(x) in (inf, inf + delta]
    std::optional<Point> x;
    for (const Point& p : c)
      if (phi(p) > 0 && phi(p) <= delta) x = p;
    if (!x) continue;
    const TwoConstantReport rep = two_constant_point(c, euclidean_metric(), phi, *x, delta, r(rng));
    EXPECT_TRUE(rep.a_ok && rep.b_ok && rep.c_ok);
  }
}
