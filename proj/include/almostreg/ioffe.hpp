#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "almostreg/ext_real.hpp"
#include "almostreg/linear.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/sampled_map.hpp"
#include "almostreg/spaces.hpp"

namespace almostreg {

/// Explicit set W of (x, y) pairs with its projections and fibers.
class PairSet {
 public:
  PairSet() = default;
  explicit PairSet(std::vector<std::pair<Point, Point>> pairs) : pairs_(std::move(pairs)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
  }

  static PairSet product(const std::vector<Point>& xs, const std::vector<Point>& ys) {
    std::vector<std::pair<Point, Point>> p;
    for (const Point& x : xs)
      for (const Point& y : ys) p.emplace_back(x, y);
    return PairSet(std::move(p));
  }

  const std::vector<std::pair<Point, Point>>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }
  bool contains(const Point& x, const Point& y) const {
    return std::binary_search(pairs_.begin(), pairs_.end(), std::make_pair(x, y));
  }

  std::vector<Point> xs() const { return distinct([](const auto& p) { return p.first; }); }
  std::vector<Point> ys() const { return distinct([](const auto& p) { return p.second; }); }

  /// Fiber W_{.,y}.
  std::vector<Point> fiber_over(const Point& y) const {
    std::vector<Point> out;
    for (const auto& [x, w] : pairs_)
      if (w == y) out.push_back(x);
    return out;
  }

 private:
  template <class Pick>
  std::vector<Point> distinct(Pick pick) const {
    std::vector<Point> out;
    for (const auto& p : pairs_) out.push_back(pick(p));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::pair<Point, Point>> pairs_;
};

/// (eps, lambda) rows; lambda in (0, 1].
using EpsLambdaTable = std::vector<std::pair<double, double>>;

inline EpsLambdaTable default_eps_lambda(const std::vector<double>& eps) {
  EpsLambdaTable t;
  for (double e : eps) t.emplace_back(e, std::min(1.0, e));
  return t;
}

struct CriterionWitness {
  double eps = 0.0;
  Point u;
  Point y;
  double residual = 0.0;

  friend bool operator<(const CriterionWitness& a, const CriterionWitness& b) {
    return std::tie(a.eps, a.u, a.y) < std::tie(b.eps, b.u, b.y);
  }
};

struct CriterionReport {
  bool passed = true;
  /// (eps, u, y) triples meeting the constraint.
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  std::vector<CriterionWitness> witnesses;
  double min_eps = 0.0;
};

namespace detail {

inline void validate_table(const EpsLambdaTable& table) {
  if (table.empty()) throw std::invalid_argument("eps_lambda: empty table");
  for (const auto& [e, l] : table) {
    if (!(e > 0.0)) throw std::invalid_argument("eps_lambda: eps must be positive");
    if (!(l > 0.0 && l <= 1.0)) throw std::invalid_argument("eps_lambda: lambda must lie in (0, 1]");
  }
}

inline void require_single_valued(const SampledMap& g) {
  for (std::size_t i = 0; i < g.domain().size(); ++i)
    if (g.values(i).size() > 1) throw std::invalid_argument("expected a single-valued sampled map");
}

inline void finalize(CriterionReport& rep) {
  std::sort(rep.witnesses.begin(), rep.witnesses.end());
  if (rep.witnesses.size() > kMaxWitnesses) rep.witnesses.resize(kMaxWitnesses);
  rep.passed = rep.violation_count == 0;
}

}  // namespace detail

/// Which sampled points u the improvement requirement applies to.
enum class CriterionConstraint {
  /// eps < rho(g(u),y) <= rho(g(x),y) - c d(u,x) with rho(g(x),y) < c gamma(x), for some fiber x.
  exact,
  /// u in the union of B(x, gamma(x)) over fiber x, with eps < rho(g(u),y) < c gamma(u).
  /// Needs gamma 1-Lipschitz on that union; it then covers every exactly constrained u.
  lipschitz_gamma,
};

inline const char* to_string(CriterionConstraint k) {
  return k == CriterionConstraint::exact ? "exact" : "lipschitz-gamma";
}

namespace detail {

/// |gamma(u) - gamma(u')| <= d(u,u') on the listed domain points.
inline void require_one_lipschitz(const SampledMap& g, const GammaFn& gamma, const std::vector<std::size_t>& idx) {
  const PointCloud& dom = g.domain();
  for (std::size_t a : idx)
    for (std::size_t b : idx) {
      const ExtReal ga = gamma(dom[a]), gb = gamma(dom[b]);
      if (ga.is_infinite() != gb.is_infinite() ||
          (ga.is_finite() && ga.value() - gb.value() > g.dx(dom[a], dom[b]) * (1.0 + kTriangleRelTol)))
        throw std::invalid_argument("check_criterion: gamma is not 1-Lipschitz on the enlarged set");
    }
}

}  // namespace detail

/**
 * Improvement criterion for a single-valued sampled map g over W.
 *
 * For every eps in the table, y in W_Y and sampled u with
 *   eps < rho(g(u),y) <= rho(g(x),y) - c d(u,x)  and  rho(g(x),y) < c gamma(x)
 * for some x in the fiber W_{.,y}, some sampled u' must satisfy
 *   c d(u,u') <= rho(g(u),y) - rho(g(u'),y) - lambda eps.
 * `constraint` selects the weaker selection of u described on CriterionConstraint.
 */
inline CriterionReport check_criterion(const SampledMap& g, const PairSet& W, double c, const GammaFn& gamma,
                                       const EpsLambdaTable& eps_lambda,
                                       CriterionConstraint constraint = CriterionConstraint::exact) {
  detail::validate_table(eps_lambda);
  detail::require_single_valued(g);
  if (!(c > 0.0)) throw std::invalid_argument("check_criterion: c must be positive");
  if (W.empty()) throw std::invalid_argument("check_criterion: W is empty");
  bool nonzero = false;
  for (const Point& x : W.xs())
    if (gamma(x) > ExtReal(0.0)) nonzero = true;
  if (!nonzero) throw std::invalid_argument("check_criterion: gamma vanishes identically on W_X");

  const PointCloud& dom = g.domain();
  std::vector<std::size_t> carrier;  // domain indices with a value
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (!g.values(i).empty()) carrier.push_back(i);
  auto value = [&](std::size_t i) -> const Point& { return g.range()[g.values(i).front()]; };

  CriterionReport rep;
  rep.min_eps = std::numeric_limits<double>::infinity();
  for (const auto& [e, l] : eps_lambda) rep.min_eps = std::min(rep.min_eps, e);

  for (const Point& y : W.ys()) {
    std::vector<double> res(carrier.size());
    for (std::size_t k = 0; k < carrier.size(); ++k) res[k] = g.dy(value(carrier[k]), y);
    // anchors: fiber points x in dom g with rho(g(x),y) < c gamma(x)
    std::vector<std::pair<Point, double>> anchors;
    for (const Point& x : W.fiber_over(y)) {
      const auto xi = dom.index_of(x);
      if (!xi || g.values(*xi).empty()) continue;
      const double r = g.dy(value(*xi), y);
      if (ExtReal(r) < ExtReal(c) * gamma(x)) anchors.emplace_back(x, r);
    }
    std::vector<bool> selected(carrier.size(), false);
    std::vector<double> slack(carrier.size(), -std::numeric_limits<double>::infinity());
    if (constraint == CriterionConstraint::exact) {
      if (anchors.empty()) continue;
      // slack(u) = max over anchors of rho(g(x),y) - c d(u,x)
      for (std::size_t k = 0; k < carrier.size(); ++k)
        for (const auto& [x, r] : anchors) slack[k] = std::max(slack[k], r - c * g.dx(dom[carrier[k]], x));
      for (std::size_t k = 0; k < carrier.size(); ++k) selected[k] = true;
    } else {
      std::vector<std::size_t> enlarged;
      for (std::size_t k = 0; k < carrier.size(); ++k) {
        const Point& u = dom[carrier[k]];
        for (const Point& x : W.fiber_over(y))
          if (ExtReal(g.dx(u, x)) < gamma(x)) {
            selected[k] = true;
            enlarged.push_back(carrier[k]);
            break;
          }
        if (!selected[k]) continue;
        const ExtReal bound = ExtReal(c) * gamma(u);
        // strict upper bound: keep u only when rho(g(u),y) < c gamma(u)
        slack[k] = ExtReal(res[k]) < bound ? res[k] : -std::numeric_limits<double>::infinity();
      }
      detail::require_one_lipschitz(g, gamma, enlarged);
    }
    for (const auto& [eps, lambda] : eps_lambda) {
      for (std::size_t k = 0; k < carrier.size(); ++k) {
        if (!selected[k] || !(eps < res[k] && res[k] <= slack[k])) continue;
        ++rep.checked;
        const Point& u = dom[carrier[k]];
        bool improved = false;
        for (std::size_t q = 0; q < carrier.size() && !improved; ++q)
          improved = c * g.dx(u, dom[carrier[q]]) <= res[k] - res[q] - lambda * eps;
        if (!improved) {
          ++rep.violation_count;
          rep.witnesses.push_back({eps, u, y, res[k]});
        }
      }
    }
  }
  detail::finalize(rep);
  return rep;
}

struct ConclusionVerdict {
  bool criterion_passed = false;
  CheckReport openness;
  /// criterion pass implies openness pass.
  bool implication_holds = true;
};

/**
 * Openness of g at c on W (x in W_X, targets in the fiber W_{x,.}) with the
 * closure tolerance set to the smallest eps of the criterion table, which is
 * the resolution the criterion certifies.
 */
inline ConclusionVerdict conclude_O(const CriterionReport& criterion, const SampledMap& g, const PairSet& W, double c,
                                    const GammaFn& gamma) {
  RegularityInstance inst(g);
  const std::vector<Point> xs = W.xs();
  for (const Point& x : xs) {
    const auto i = g.domain().index_of(x);
    if (!i) throw std::invalid_argument("conclude_O: W_X point outside the domain cloud");
    inst.U.push_back(*i);
  }
  inst.V = W.ys();
  inst.gamma = gamma;
  inst.constant = c;
  inst.closure_tol = criterion.min_eps;
  inst.grid_step = criterion.min_eps;
  inst.admissible = [&W, xs, V = inst.V](std::size_t a, std::size_t b) { return W.contains(xs[a], V[b]); };
  ConclusionVerdict v;
  v.criterion_passed = criterion.passed;
  v.openness = check_O(inst);
  v.implication_holds = !criterion.passed || v.openness.passed;
  return v;
}

// ---------------------------------------------------------------------------
// Descent solver

using ProposalFn = std::function<std::optional<Point>(const Point& u, const Point& y, double lambda, double eps)>;

struct ImprovementOracle {
  std::string name;
  ProposalFn propose;
};

enum class DescentStatus { residual_below_eps, oracle_exhausted, budget_exhausted };

inline const char* to_string(DescentStatus s) {
  switch (s) {
    case DescentStatus::residual_below_eps: return "residual-below-eps";
    case DescentStatus::oracle_exhausted: return "oracle-exhausted";
    default: return "budget-exhausted";
  }
}

struct DescentProblem {
  std::function<Point(const Point&)> g;
  QuasiPremetric domain_metric = euclidean_metric();
  QuasiPremetric range_metric = euclidean_metric();
  /// gamma(x) at the start point.
  ExtReal gamma = kInf;
  /// Declared properties; they only relabel the final iterate as a limit point.
  bool complete_space = false;
  bool continuous = false;
};

struct DescentTrace {
  std::vector<Point> iterates;
  std::vector<double> residuals;
  double radius_bound = 0.0;
  DescentStatus status = DescentStatus::budget_exhausted;
  std::optional<Point> limit_point;
  /// Proposals that failed the improvement inequality or an invariant.
  std::vector<Point> rejected;
};

/**
 * Iterates u_{k+1} = oracle(u_k) from u_1 = x until the residual rho(g(u), y)
 * drops to target_eps. Every proposal is re-validated against the improvement
 * inequality and the containment and Cauchy invariants before it is accepted.
 */
inline DescentTrace descent_solve(const DescentProblem& p, const Point& x, const Point& y, double c,
                                  const ImprovementOracle& oracle, const std::function<double(double)>& lambda_of_eps,
                                  double target_eps, std::size_t budget) {
  if (!(c > 0.0)) throw std::invalid_argument("descent_solve: c must be positive");
  if (!(target_eps > 0.0)) throw std::invalid_argument("descent_solve: target_eps must be positive");
  auto d = [&](const Point& a, const Point& b) { return p.domain_metric(a, b).to_double(); };
  auto residual = [&](const Point& u) { return p.range_metric(p.g(u), y).to_double(); };
  const double r0 = residual(x);
  if (!(ExtReal(r0) < ExtReal(c) * p.gamma))
    throw std::invalid_argument("descent_solve: rho(g(x), y) must be below c gamma(x)");

  DescentTrace tr;
  tr.radius_bound = r0 / c;
  tr.iterates.push_back(x);
  tr.residuals.push_back(r0);
  const double lambda = lambda_of_eps(target_eps);
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("descent_solve: lambda must lie in (0, 1]");
  // rounding allowance for the accumulated invariants only
  const double slack = 1e-12 * (1.0 + r0);

  while (true) {
    const Point u = tr.iterates.back();
    const double ru = tr.residuals.back();
    if (ru <= target_eps) {
      tr.status = DescentStatus::residual_below_eps;
      if (p.complete_space && p.continuous) tr.limit_point = u;
      break;
    }
    if (tr.iterates.size() > budget) {
      tr.status = DescentStatus::budget_exhausted;
      break;
    }
    const std::optional<Point> next = oracle.propose(u, y, lambda, target_eps);
    if (!next) {
      tr.status = DescentStatus::oracle_exhausted;
      break;
    }
    const double rn = residual(*next);
    bool ok = c * d(u, *next) <= ru - rn - lambda * target_eps;
    ok = ok && c * d(x, *next) <= c * tr.radius_bound + slack;
    for (std::size_t k = 0; ok && k < tr.iterates.size(); ++k)
      ok = c * d(tr.iterates[k], *next) <= tr.residuals[k] - rn + slack;
    if (!ok) {
      tr.rejected.push_back(*next);
      tr.status = DescentStatus::oracle_exhausted;
      break;
    }
    tr.iterates.push_back(*next);
    tr.residuals.push_back(rn);
  }
  return tr;
}

/// Full Newton step u' = u + J(u)^{-1} (y - g(u)) for square Jacobians.
inline ImprovementOracle newton_oracle(std::function<Point(const Point&)> g,
                                       std::function<DenseMatrix(const Point&)> jacobian) {
  return {"newton", [g = std::move(g), J = std::move(jacobian)](const Point& u, const Point& y, double, double)
                        -> std::optional<Point> {
            const auto step = solve_square(J(u), y - g(u));
            if (!step) return std::nullopt;
            return u + *step;
          }};
}

/// Scalar form of the Newton oracle with derivative g'.
inline ImprovementOracle newton_oracle_1d(std::function<double(double)> g, std::function<double(double)> dg) {
  return newton_oracle([g](const Point& u) { return Point{g(u.at(0))}; },
                       [dg](const Point& u) { return DenseMatrix(1, 1, {dg(u.at(0))}); });
}

/// Best-residual point of a search cloud among those meeting the improvement inequality.
inline ImprovementOracle grid_scan_oracle(PointCloud cloud, std::function<Point(const Point&)> g, double c,
                                          QuasiPremetric domain_metric = euclidean_metric(),
                                          QuasiPremetric range_metric = euclidean_metric()) {
  return {"grid-scan", [cloud = std::move(cloud), g = std::move(g), c, d = std::move(domain_metric),
                        rho = std::move(range_metric)](const Point& u, const Point& y, double lambda,
                                                       double eps) -> std::optional<Point> {
            const double ru = rho(g(u), y).to_double();
            std::optional<Point> best;
            double best_r = std::numeric_limits<double>::infinity();
            for (const Point& v : cloud) {
              const double rv = rho(g(v), y).to_double();
              if (c * d(u, v).to_double() <= ru - rv - lambda * eps && rv < best_r) {
                best_r = rv;
                best = v;
              }
            }
            return best;
          }};
}

/// Pattern search along +-coordinate steps, halving from initial_step to min_step.
inline ImprovementOracle coordinate_scan_oracle(std::function<Point(const Point&)> g, double c, double initial_step,
                                                double min_step, QuasiPremetric domain_metric = euclidean_metric(),
                                                QuasiPremetric range_metric = euclidean_metric()) {
  return {"coordinate-scan", [g = std::move(g), c, initial_step, min_step, d = std::move(domain_metric),
                              rho = std::move(range_metric)](const Point& u, const Point& y, double lambda,
                                                             double eps) -> std::optional<Point> {
            const double ru = rho(g(u), y).to_double();
            for (double s = initial_step; s >= min_step; s /= 2.0) {
              std::optional<Point> best;
              double best_r = std::numeric_limits<double>::infinity();
              for (std::size_t i = 0; i < u.size(); ++i)
                for (double sign : {1.0, -1.0}) {
                  Point v = u;
                  v[i] += sign * s;
                  const double rv = rho(g(v), y).to_double();
                  if (c * d(u, v).to_double() <= ru - rv - lambda * eps && rv < best_r) {
                    best_r = rv;
                    best = v;
                  }
                }
              if (best) return best;
            }
            return std::nullopt;
          }};
}

// ---------------------------------------------------------------------------
// Region and constant recipes

/// dist(x, X \ U) over the clouds; +inf when U covers X.
inline ExtReal milyutin_gamma(const PointCloud& U, const PointCloud& X, const Point& x,
                              const QuasiPremetric& d = euclidean_metric()) {
  if (!X.index_of(x)) throw std::invalid_argument("milyutin_gamma: x is not a point of the cloud");
  ExtReal best = kInf;
  for (const Point& p : X)
    if (!U.index_of(p)) best = min(best, d(x, p));
  return best;
}

inline double shrink_beta(double a, double b, double c, double r) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0 && r > 0.0)) throw std::invalid_argument("shrink_beta: inputs must be positive");
  return std::min({a, b, c * r / (1.0 + c)});
}

struct ShrinkBetaCheck {
  double beta = 0.0;
  /// Distance inequality with constant 1/c on B(xbar,a) x B(ybar,b) where dist(y,G(x)) < c r.
  CheckReport hypothesis;
  /// The same inequality on B(xbar,beta) x B(ybar,beta) without the proviso.
  CheckReport conclusion;
};

inline ShrinkBetaCheck shrink_beta_check(const SampledMap& m, const Point& xbar, const Point& ybar, double a, double b,
                                         double c, double r, double grid_step) {
  ShrinkBetaCheck out;
  out.beta = shrink_beta(a, b, c, r);
  RegularityInstance inst(m);
  inst.grid_step = grid_step;
  inst.eps_schedule = default_eps_schedule(inst.tau());
  inst.constant = 1.0 / c;
  inst.U = m.domain_ball(xbar, ExtReal(a));
  inst.V = m.range_ball(ybar, ExtReal(b));
  inst.gamma = constant_gamma(ExtReal(r));
  out.hypothesis = check_R(inst);
  inst.U = m.domain_ball(xbar, ExtReal(out.beta));
  inst.V = m.range_ball(ybar, ExtReal(out.beta));
  inst.gamma = constant_gamma(kInf);
  out.conclusion = check_R(inst);
  return out;
}

inline double semilocal_region(double r, double c) {
  if (!(r > 0.0 && c > 0.0)) throw std::invalid_argument("semilocal_region: r and c must be positive");
  return std::min(r / 2.0, c * r);
}

/// Inclusion B(g(x),ct) cap B(g(xbar),delta) inside closure g(B(x,t)) for x in B(xbar,delta), t < delta.
inline CheckReport semilocal_check(const SampledMap& g, const Point& xbar, double r, double c, double grid_step) {
  const double delta = semilocal_region(r, c);
  const auto xi = g.domain().index_of(xbar);
  if (!xi || g.values(*xi).size() != 1) throw std::invalid_argument("semilocal_check: g must be defined at xbar");
  RegularityInstance inst(g);
  inst.grid_step = grid_step;
  inst.constant = c;
  inst.U = g.domain_ball(xbar, ExtReal(delta));
  inst.V = g.range_ball(g.range()[g.values(*xi).front()], ExtReal(delta));
  inst.gamma = constant_gamma(ExtReal(delta));
  return check_O(inst);
}

// ---------------------------------------------------------------------------
// Set-valued criterion

struct SetValuedCriterionReport {
  CriterionReport projected;
  CriterionReport direct;
  bool agree = true;
  bool passed = true;
};

/**
 * Criterion with pairs (u',v') of the graph and the step measured by
 * max{d(u,u'), alpha rho(v,v')}. Evaluated twice: as the single-valued
 * criterion for the projection of the graph, and by a direct scan.
 */
inline SetValuedCriterionReport setvalued_criterion(const SampledMap& G, const PairSet& W, double c, double alpha,
                                                    const GammaFn& gamma, const EpsLambdaTable& eps_lambda) {
  const ProjectedMap pm = project_graph(G, alpha, c);
  detail::validate_table(eps_lambda);
  const std::size_t dx = pm.domain_dim;

  // W lifted to the graph: ((x,z), y) for (x,y) in W and z in G(x)
  std::vector<std::pair<Point, Point>> lifted;
  for (const auto& [x, y] : W.pairs()) {
    const auto xi = G.domain().index_of(x);
    if (!xi) continue;
    for (std::size_t j : G.values(*xi)) {
      Point p = x;
      p.insert(p.end(), G.range()[j].begin(), G.range()[j].end());
      lifted.emplace_back(std::move(p), y);
    }
  }
  SetValuedCriterionReport out;
  GammaFn lifted_gamma = [gamma, dx](const Point& p) {
    return gamma(Point(p.begin(), p.begin() + static_cast<long>(dx)));
  };
  if (lifted.empty()) {
    out.projected.min_eps = out.direct.min_eps = eps_lambda.front().first;
    return out;
  }
  out.projected = check_criterion(pm.map, PairSet(lifted), c, lifted_gamma, eps_lambda);

  // direct scan over graph pairs
  CriterionReport& rep = out.direct;
  rep.min_eps = std::numeric_limits<double>::infinity();
  for (const auto& [e, l] : eps_lambda) rep.min_eps = std::min(rep.min_eps, e);
  const auto& gp = G.pairs();
  auto omega = [&](std::size_t a, std::size_t b) {
    return std::max(G.dx(G.domain()[gp[a].first], G.domain()[gp[b].first]),
                    alpha * G.dy(G.range()[gp[a].second], G.range()[gp[b].second]));
  };
  for (const Point& y : W.ys()) {
    std::vector<double> res(gp.size());
    for (std::size_t k = 0; k < gp.size(); ++k) res[k] = G.dy(G.range()[gp[k].second], y);
    std::vector<std::size_t> anchors;
    for (const Point& x : W.fiber_over(y)) {
      const auto xi = G.domain().index_of(x);
      if (!xi) continue;
      for (std::size_t k = 0; k < gp.size(); ++k)
        if (gp[k].first == *xi && ExtReal(res[k]) < ExtReal(c) * gamma(x)) anchors.push_back(k);
    }
    if (anchors.empty()) continue;
    for (const auto& [eps, lambda] : eps_lambda) {
      for (std::size_t k = 0; k < gp.size(); ++k) {
        bool constrained = false;
        for (std::size_t a : anchors)
          if (eps < res[k] && res[k] <= res[a] - c * omega(k, a)) {
            constrained = true;
            break;
          }
        if (!constrained) continue;
        ++rep.checked;
        bool improved = false;
        for (std::size_t q = 0; q < gp.size() && !improved; ++q)
          improved = c * omega(k, q) <= res[k] - res[q] - lambda * eps;
        if (!improved) {
          ++rep.violation_count;
          Point u = G.domain()[gp[k].first];
          u.insert(u.end(), G.range()[gp[k].second].begin(), G.range()[gp[k].second].end());
          rep.witnesses.push_back({eps, std::move(u), y, res[k]});
        }
      }
    }
  }
  detail::finalize(rep);
  out.agree = out.projected.passed == out.direct.passed &&
              out.projected.violation_count == out.direct.violation_count;
  out.passed = out.projected.passed && out.agree;
  return out;
}

}  // namespace almostreg
