// Acceptance binary: one PASS/FAIL line per criterion; exits non-zero on any failure.
// Usage: acceptance <scenario-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "almostreg/ekeland.hpp"
#include "almostreg/ioffe.hpp"
#include "almostreg/linear.hpp"
#include "almostreg/perturb.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/scenario.hpp"

using namespace almostreg;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

/// Collects failure messages; the first few become the detail line.
class Tally {
 public:
  void require(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) msgs_ << (failures_ > 1 ? "; " : "") << what;
  }
  Outcome outcome(const std::string& summary) const {
    std::ostringstream s;
    s << summary << " (" << checks_ << " checks";
    if (failures_) s << ", " << failures_ << " failed: " << msgs_.str();
    s << ")";
    return {failures_ == 0, s.str()};
  }

 private:
  std::size_t checks_ = 0, failures_ = 0;
  std::ostringstream msgs_;
};

// ---- shared Ekeland instances ----

struct EkelandInstance {
  PointCloud cloud;
  std::vector<ExtReal> values;
  Objective phi;
  QuasiPremetric eta;
  Point x;
};

/// Even draws: Euclidean metric on a planar cloud. Odd draws: forward-time premetric on a line.
std::vector<EkelandInstance> ekeland_instances() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> coord(-1.0, 1.0), val(0.05, 3.0);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  std::vector<EkelandInstance> out;
  const QuasiPremetric forward = directional_premetric(DirectionSet(std::vector<Point>{Point{1.0}}), true);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = size(rng);
    const bool planar = k % 2 == 0;
    std::vector<Point> pts;
    std::vector<ExtReal> vals;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(planar ? Point{coord(rng), coord(rng)} : Point{coord(rng)});
      vals.emplace_back(val(rng));
    }
    PointCloud cloud(pts);
    Objective phi = objective_from_table(cloud, vals);
    const Point x = cloud[n / 2];
    out.push_back({cloud, vals, phi, planar ? euclidean_metric() : forward, x});
  }
  return out;
}

/// eps-stationarity of u over the whole cloud, straight from the definition.
bool stationary_brute(const EkelandInstance& in, const Point& u, double eps) {
  const ExtReal pu = in.phi(u);
  for (std::size_t i = 0; i < in.cloud.size(); ++i) {
    const ExtReal lhs = in.values[i] + in.eta(in.cloud[i], u);
    if (lhs.is_infinite()) continue;
    if (!(lhs.value() > pu.value() - eps)) return false;
  }
  return true;
}

Outcome criterion_ekeland_trace(const std::vector<EkelandInstance>& instances) {
  Tally t;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const EkelandInstance& in = instances[k];
    const EkelandTrace tr = generate_trace(in.cloud, in.eta, in.phi, in.x);
    const std::size_t N = tr.size();
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = a + 1; b < N; ++b)
        t.require(in.phi(tr.points[b]) + in.eta(tr.points[b], tr.points[a]) < in.phi(tr.points[a]),
                  "pair law, instance " + std::to_string(k));
    for (double f : {0.5, 0.1, 0.01}) {
      const double eps = f * in.phi(in.x).value();
      const TraceVerification v = verify_trace(in.cloud, tr, in.eta, in.phi, eps);
      t.require(v.pairs_ok, "verify_trace pairs, instance " + std::to_string(k));
      t.require(v.n.has_value(), "no n, instance " + std::to_string(k));
      if (!v.n) continue;
      // every index from n on is stationary and n is least
      const std::size_t n = *v.n;
      for (std::size_t j = n; j <= N; ++j)
        t.require(stationary_brute(in, tr.points[j - 1], eps), "not stationary past n, instance " + std::to_string(k));
      if (n > 1)
        t.require(!stationary_brute(in, tr.points[n - 2], eps), "n not least, instance " + std::to_string(k));
    }
  }
  return t.outcome(std::to_string(instances.size()) + " traces, pair law and n(eps) for 3 eps each");
}

Outcome criterion_weak_point(const std::vector<EkelandInstance>& instances) {
  Tally t;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const EkelandInstance& in = instances[k];
    const EkelandCertificate w = weak_point(in.cloud, in.eta, in.phi, in.x);
    const ExtReal pu = in.phi(w.point);
    for (std::size_t i = 0; i < in.cloud.size(); ++i)
      t.require(!(in.values[i] + in.eta(in.cloud[i], w.point) < pu), "stationarity, instance " + std::to_string(k));
    t.require(in.phi(w.point) + in.eta(w.point, in.x) <= in.phi(in.x) + in.eta(in.x, in.x),
              "descent, instance " + std::to_string(k));
  }
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> dd(0.05, 1.0), rd(0.05, 2.0);
  const PointCloud c = PointCloud::grid({-1, -1}, {1, 1}, 0.1);
  const auto phi = [](const Point& p) { return std::abs(p[0]) + 0.5 * p[1] * p[1]; };
  const QuasiPremetric eta = euclidean_metric();
  std::size_t draws = 0;
  while (draws < 50) {
    const double delta = dd(rng), r = rd(rng);
    std::optional<Point> x;
    for (const Point& p : c)
      if (phi(p) > 0 && phi(p) <= delta && (!x || phi(p) > phi(*x))) x = p;
    if (!x) continue;
    ++draws;
    const TwoConstantReport rep = two_constant_point(c, eta, phi, *x, delta, r);
    t.require(rep.a_ok && rep.b_ok, "two-constant (a)/(b), draw " + std::to_string(draws));
    // (c) recomputed here
    t.require(eta(rep.point, *x) <= ExtReal(r) + eta(*x, *x), "two-constant (c), draw " + std::to_string(draws));
  }
  return t.outcome("weak points on 200 instances, two-constant on 50 draws");
}

// ---- regularity ----

struct RateInstance {
  std::string label;
  SampledMap map;
  double rate;
};

std::vector<RateInstance> rate_instances() {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> slope(0.5, 3.0), shift(-0.3, 0.3), lin(0.5, 1.5);
  const PointCloud dom = PointCloud::line(-1, 1, 0.02);
  std::vector<RateInstance> out;
  for (int k = 0; k < 10; ++k) {
    const double a = slope(rng), b = shift(rng);
    out.push_back({"affine", SampledMap::from_scalar(dom, [a, b](double x) { return a * x + b; }), a});
  }
  for (int k = 0; k < 10; ++k) {
    const double a1 = slope(rng), a2 = slope(rng);
    out.push_back(
        {"piecewise", SampledMap::from_scalar(dom, [a1, a2](double x) { return x < 0 ? a1 * x : a2 * x; }),
         std::min(a1, a2)});
  }
  for (int k = 0; k < 10; ++k) {
    const double b = lin(rng);
    out.push_back({"cubic", SampledMap::from_scalar(dom, [b](double x) { return x * x * x + b * x; }), b});
  }
  return out;
}

Outcome criterion_equivalence() {
  Tally t;
  std::size_t disagreements = 0;
  for (const RateInstance& ri : rate_instances())
    for (double f : {0.5, 2.0}) {
      const double c = f * ri.rate;
      const EquivalenceReport r = equivalence_suite(make_instance(ri.map, constant_gamma(ExtReal(0.25)), c, 0.02));
      if (!r.agree) ++disagreements;
      std::ostringstream w;
      w << ri.label << " rate " << ri.rate << " c " << c;
      t.require(r.agree, "disagreement: " + w.str());
      t.require(r.openness.passed == (f < 1.0), "unexpected verdict: " + w.str());
    }
  return t.outcome("30 maps at 0.5x and 2x the rate, " + std::to_string(disagreements) + " disagreements");
}

Outcome criterion_product_laws() {
  Tally t;
  ModulusSearchConfig cfg;
  cfg.grid_step = 0.01;
  // distance-type estimates sit about tau/gamma below the exact value, so start wide
  cfg.gamma0 = 1.0;
  const PointCloud dom = PointCloud::line(-1, 1, 0.01);
  const std::vector<std::pair<std::string, SampledMap>> maps{
      {"2x", SampledMap::from_scalar(dom, [](double x) { return 2 * x; })},
      {"x+0.3sin", SampledMap::from_scalar(dom, [](double x) { return x + 0.3 * std::sin(x); })},
      {"two-branch", SampledMap::from_branches(dom, {[](const Point& x) { return std::optional<Point>(Point{2 * x[0]}); },
                                                     [](const Point& x) {
                                                       return std::optional<Point>(Point{3 * x[0] + 0.5});
                                                     }})},
  };
  using K = ModulusKind;
  const std::vector<std::pair<K, K>> laws{{K::sur, K::reg},       {K::popen, K::subreg}, {K::lopen, K::semireg},
                                          {K::reg, K::lip_inv},   {K::subreg, K::calm},  {K::semireg, K::incalm}};
  for (const auto& [name, g] : maps)
    for (const auto& [k1, k2] : laws) {
      const ModulusReport r1 = estimate_modulus(g, {0}, {0}, k1, cfg);
      const ModulusReport r2 = estimate_modulus(g, {0}, {0}, k2, cfg);
      const ProductLawVerdict v = verify_product_laws(r1, r2, 0.05);
      t.require(v.holds, name + " " + to_string(k1) + "/" + to_string(k2));
    }
  return t.outcome("3 maps, 6 laws each, tol 0.05, step 0.01");
}

// ---- Ioffe criterion ----

std::vector<Point> ball(const PointCloud& c, double center, double radius) {
  std::vector<Point> out;
  for (const Point& p : c)
    if (std::abs(p[0] - center) < radius) out.push_back(p);
  return out;
}

Outcome criterion_ioffe() {
  Tally t;
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> slope(0.5, 2.5), shift(-0.2, 0.2), frac(0.3, 0.8), sign(-1.0, 1.0);
  const PointCloud dom = PointCloud::line(-1, 1, 0.02);
  const EpsLambdaTable table{{0.08, 0.1}, {0.04, 0.1}};
  const GammaFn gamma = [](const Point& x) { return ExtReal(std::max(0.0, 0.5 - std::abs(x[0]))); };
  for (int k = 0; k < 30; ++k) {
    const double a = (sign(rng) < 0 ? -1.0 : 1.0) * slope(rng), b = shift(rng), c = std::abs(a) * frac(rng);
    const SampledMap g = SampledMap::from_scalar(dom, [a, b](double x) { return a * x + b; });
    const PairSet W = PairSet::product(ball(dom, 0, 0.5), ball(g.range(), b, 0.5));
    const CriterionReport crit = check_criterion(g, W, c, gamma, table);
    const ConclusionVerdict v = conclude_O(crit, g, W, c, gamma);
    const std::string id = "affine " + std::to_string(k);
    t.require(v.implication_holds, "implication, " + id);
    t.require(crit.passed, "criterion, " + id);
    t.require(v.openness.passed, "openness, " + id);
  }
  const PointCloud fine = PointCloud::line(-1, 1, 0.01);
  const SampledMap cube = SampledMap::from_scalar(fine, [](double x) { return x * x * x; });
  const PairSet W = PairSet::product(ball(fine, 0, 0.5), ball(cube.range(), 0, 0.5));
  const CriterionReport crit = check_criterion(cube, W, 1.0, gamma, {{0.08, 0.1}, {0.04, 0.1}, {0.02, 0.1}});
  const ConclusionVerdict v = conclude_O(crit, cube, W, 1.0, gamma);
  t.require(!crit.passed, "cubic criterion passed");
  t.require(!v.openness.passed, "cubic openness passed");
  t.require(v.implication_holds, "cubic implication");
  return t.outcome("30 affine instances pass both, cubic fails both");
}

Outcome criterion_descent() {
  Tally t;
  const auto g = [](double x) { return 2 * x; };
  const auto dg = [](double) { return 2.0; };
  DescentProblem p;
  p.g = [g](const Point& u) { return Point{g(u[0])}; };
  p.complete_space = p.continuous = true;
  const double c = 1.5;
  const DescentTrace tr =
      descent_solve(p, {0}, {0.8}, c, newton_oracle_1d(g, dg), [](double) { return 0.1; }, 1e-10, 50);
  const double final_residual = std::abs(g(tr.iterates.back()[0]) - 0.8);
  t.require(final_residual < 1e-9, "final residual");
  for (const Point& u : tr.iterates) t.require(std::abs(u[0]) <= 0.8 / 1.5 + 1e-12, "iterate outside the ball");
  for (std::size_t k = 0; k < tr.iterates.size(); ++k)
    for (std::size_t j = k + 1; j < tr.iterates.size(); ++j) {
      const double rk = std::abs(g(tr.iterates[k][0]) - 0.8), rj = std::abs(g(tr.iterates[j][0]) - 0.8);
      t.require(c * std::abs(tr.iterates[j][0] - tr.iterates[k][0]) <= rk - rj + 1e-12, "Cauchy estimate");
    }
  std::ostringstream s;
  s << tr.iterates.size() << " iterates, residual " << final_residual;
  return t.outcome(s.str());
}

// ---- perturbation ----

Outcome criterion_lg() {
  Tally t;
  ModulusSearchConfig cfg;
  cfg.grid_step = 0.01;
  cfg.gamma0 = 0.5;
  const PointCloud dom = PointCloud::line(-2, 2, 0.01);
  const std::vector<std::pair<std::string, std::function<double(double, double)>>> perturbations{
      {"0.3 sin", [](double x, double) { return 0.3 * std::sin(x); }},
      {"0.2 x^2", [](double x, double) { return 0.2 * x * x; }},
      {"shrink", [](double x, double a) { return -0.4 * a * x; }},
  };
  for (int k = 0; k < 20; ++k) {
    const double a = 0.5 + 2.5 * k / 19.0;
    const auto& [name, h] = perturbations[k % 3];
    const SampledMap F = SampledMap::from_scalar(dom, [a](double x) { return a * x + 0.1; });
    const InequalityReport r =
        lg_single_check(F, [&h, a](const Point& x) { return Point{h(x[0], a)}; }, {0}, {0.1}, cfg);
    std::ostringstream id;
    id << "rate " << a << " h " << name << " lhs " << r.lhs << " rhs " << r.rhs;
    t.require(!r.inconclusive && r.holds, id.str());
  }
  ModulusSearchConfig eq = cfg;
  eq.gamma0 = 1.0;
  const InequalityReport r = lg_single_check(SampledMap::from_scalar(dom, [](double x) { return 2 * x; }),
                                             [](const Point& x) { return Point{-0.5 * x[0]}; }, {0}, {0}, eq);
  t.require(r.holds, "equality case");
  t.require(std::abs(r.lhs - 1.5) <= 0.02, "equality lhs " + std::to_string(r.lhs));
  std::ostringstream s;
  s << "20 instances, equality case lhs " << r.lhs;
  return t.outcome(s.str());
}

Outcome criterion_constants() {
  Tally t;
  t.require(shrink_beta(1, 1, 1, 1) == 0.5, "shrink_beta(1,1,1,1)");
  t.require(constants_cor56(2, 1, 1, 10, 20).upper == 2.0, "constants_cor56 upper");
  const PointCloud d1 = PointCloud::line(-1, 1, 0.01);
  const SampledMap H = SampledMap::from_scalar(d1, [](double x) { return 0.2 * x; });
  const std::vector<SampledMap> Fs{SampledMap::from_scalar(d1, [](double x) { return x; }),
                                   SampledMap::from_scalar(d1, [](double x) { return 1.5 * x; }),
                                   SampledMap::from_scalar(d1, [](double x) { return x * x * x; })};
  std::size_t runs = 0;
  for (const SampledMap& F : Fs)
    for (const auto& [c, cp] : std::vector<std::pair<double, double>>{{0.9, 1.0}, {0.5, 1.0}, {0.3, 0.6}}) {
      PerturbationConstants k;
      k.c = c;
      k.c_prime = cp;
      k.ell = 0.2;
      k.a = ExtReal(0.2);
      k.b = ExtReal(0.2);
      k.r = ExtReal(0.1);
      k.delta = ExtReal(0.05);
      const ABCReport rep = lg_setvalued_check(F, H, {0}, {0}, {0}, k, 0.01);
      ++runs;
      const double lambda = (cp - c) / (2 * cp), alpha = 1 / (2 * cp);
      t.require(rep.constants.lambda == lambda, "lambda");
      t.require(rep.constants.alpha == alpha, "alpha");
      t.require(lambda > 0 && lambda < 1, "lambda range");
      t.require((c - k.ell) * alpha < 1, "alpha product");
      t.require(rep.constants.lambda_in_range && rep.constants.alpha_product_below_one, "reported ranges");
    }
  return t.outcome("exact endpoints, proof constants on " + std::to_string(runs) + " set-valued checks");
}

// ---- linear ----

DenseMatrix random_matrix(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  DenseMatrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = u(rng);
  return m;
}

Outcome criterion_linear() {
  Tally t;
  const NormSpec E1(NormKind::euclidean, 1), E2(NormKind::euclidean, 2), E3(NormKind::euclidean, 3);
  t.require(std::abs(sur_modulus(DenseMatrix::identity(2), E2, E2).value - 1.0) <= 1e-12, "identity");
  const DenseMatrix d = DenseMatrix::diagonal({3, 1});
  const double svd = sur_modulus(d, E2, E2, SurMethod::svd).value;
  const double grid = sur_modulus(d, E2, E2, SurMethod::grid).value;
  t.require(std::abs(svd - 1.0) <= 1e-12, "diag(3,1) svd");
  t.require(std::abs(svd - grid) <= 1e-4, "diag(3,1) svd/grid");
  const DenseMatrix row = DenseMatrix::from_rows({{1, 1}});
  for (SurMethod m : {SurMethod::svd, SurMethod::grid})
    t.require(std::abs(sur_modulus(row, E2, E1, m).value - std::sqrt(2.0)) <= 1e-4, "[1 1]");
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> lam(-3.0, 3.0);
  for (int k = 0; k < 500; ++k) {
    const DenseMatrix a = random_matrix(rng), b = random_matrix(rng);
    t.require(sur_lipschitz_check(a, b, E3, E3, 1e-8).passed, "Lipschitz law, pair " + std::to_string(k));
    const double sa = sur_modulus(a, E3, E3).value, l = lam(rng);
    t.require(std::abs(sur_modulus(l * a, E3, E3).value - std::abs(l) * sa) <= 1e-10 * (1 + std::abs(l) * sa),
              "homogeneity, pair " + std::to_string(k));
    t.require(sa <= opnorm(a, E3, E3) + 1e-12, "sur above opnorm, pair " + std::to_string(k));
  }
  return t.outcome("fixed matrices and 500 random 3x3 pairs");
}

Outcome criterion_determinism(const std::filesystem::path& dir) {
  Tally t;
  const auto scenarios = load_paths({dir});
  const std::string first = emit_report(run_suite(scenarios, {.seed = 7, .jobs = 0}), ReportFormat::machine);
  const std::string second = emit_report(run_suite(scenarios, {.seed = 7, .jobs = 1}), ReportFormat::machine);
  t.require(first == second, "machine reports differ");
  return t.outcome(std::to_string(scenarios.size()) + " scenarios, " + std::to_string(first.size()) +
                   " bytes, two runs");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <scenario-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::vector<EkelandInstance> ek;

  struct Criterion {
    std::string name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"ekeland trace law", 10, [&] { ek = ekeland_instances(); return criterion_ekeland_trace(ek); }},
      {"weak-point stationarity", 0, [&] { return criterion_weak_point(ek); }},
      {"equivalence loop", 0, criterion_equivalence},
      {"product laws", 60, criterion_product_laws},
      {"criterion implication", 0, criterion_ioffe},
      {"descent solver", 1, criterion_descent},
      {"lyusternik-graves", 0, criterion_lg},
      {"constants fidelity", 0, criterion_constants},
      {"linear moduli", 30, criterion_linear},
      {"determinism", 0, [&] { return criterion_determinism(dir); }},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs >= c.budget_s) {
      o.passed = false;
      o.detail += "; over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget";
    }
    all = all && o.passed;
    std::printf("criterion %2zu %s: %s - %s [%.2f s]\n", i + 1, o.passed ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs);
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
