#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "almostreg/ext_real.hpp"
#include "almostreg/sampled_map.hpp"
#include "almostreg/spaces.hpp"

namespace almostreg {

using GammaFn = std::function<ExtReal(const Point&)>;

inline GammaFn constant_gamma(ExtReal g) {
  return [g](const Point&) { return g; };
}

/// t values scanned for the openness property inside (0, gamma(x)).
struct TGridConfig {
  int points_per_decade = 20;
  /// Adds the data breakpoints t = rho(v,y)/c, which makes the scan exact in t.
  bool breakpoints = true;
};

struct RegularityInstance {
  explicit RegularityInstance(SampledMap m) : map(std::move(m)) {}

  SampledMap map;
  /// Domain indices of U.
  std::vector<std::size_t> U;
  /// Target points V in the range space.
  std::vector<Point> V;
  GammaFn gamma;
  /// c for openness, mu for the two distance properties.
  double constant = 1.0;
  /// Strictly decreasing positive radii; the last one is the limit surrogate.
  std::vector<double> eps_schedule;
  double grid_step = 0.01;
  /// Defaults to 2 * grid_step.
  std::optional<double> closure_tol;
  TGridConfig t_grid;
  /// Optional restriction of the (x, v) pairs, by position in U and V.
  std::function<bool(std::size_t, std::size_t)> admissible;

  double tau() const { return closure_tol.value_or(2.0 * grid_step); }
};

inline std::vector<double> default_eps_schedule(double tau) { return {8.0 * tau, 4.0 * tau, 2.0 * tau, tau}; }

/// Instance over U = all of dom, V = all range points, eps schedule from the closure tolerance.
inline RegularityInstance make_instance(const SampledMap& map, GammaFn gamma, double constant, double grid_step) {
  RegularityInstance inst(map);
  inst.U = map.all_domain();
  inst.V = map.range().points();
  inst.gamma = std::move(gamma);
  inst.constant = constant;
  inst.grid_step = grid_step;
  inst.eps_schedule = default_eps_schedule(inst.tau());
  return inst;
}

/// One failed inclusion or inequality. For the distance properties `t` is empty,
/// `lhs` is the limit surrogate and `rhs` the allowed bound.
struct Violation {
  Point x;
  Point y;
  Point v;
  std::optional<double> t;
  double lhs = 0.0;
  double rhs = 0.0;

  friend bool operator<(const Violation& a, const Violation& b) {
    const double ta = a.t.value_or(-1.0), tb = b.t.value_or(-1.0);
    return std::tie(a.x, a.y, ta, a.v) < std::tie(b.x, b.y, tb, b.v);
  }
};

inline constexpr std::size_t kMaxWitnesses = 64;

struct CheckReport {
  std::string property;
  bool passed = true;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  /// Lexicographically smallest violations, at most kMaxWitnesses.
  std::vector<Violation> violations;
  /// False when some limit surrogate moved by more than the closure tolerance
  /// over the last two radii of the schedule.
  bool stabilized = true;
  std::size_t unstable = 0;
  std::vector<std::string> notes;
};

namespace detail {

inline void finalize(CheckReport& rep) {
  std::sort(rep.violations.begin(), rep.violations.end());
  if (rep.violations.size() > kMaxWitnesses) rep.violations.resize(kMaxWitnesses);
  rep.passed = rep.violation_count == 0;
  if (rep.unstable > 0) {
    rep.stabilized = false;
    rep.notes.push_back(std::to_string(rep.unstable) + " limit surrogates not stabilized within the closure tolerance");
  }
}

inline void add_violation(CheckReport& rep, Violation v) {
  ++rep.violation_count;
  rep.violations.push_back(std::move(v));
  // keep memory bounded while preserving the lexicographic minimum
  if (rep.violations.size() > 8 * kMaxWitnesses) {
    std::sort(rep.violations.begin(), rep.violations.end());
    rep.violations.resize(kMaxWitnesses);
  }
}

/// Distance tables shared by the three property checks.
struct Prepared {
  const RegularityInstance* inst = nullptr;
  std::size_t nu = 0, nv = 0;
  std::vector<ExtReal> gamma;  // per U position
  /// rho(range point j, V[b]) for every range index j.
  std::vector<double> range_to_v;
  /// min d(x,u) over graph pairs (u,w) with rho(w,v) <= tau; row-major nu x nv.
  std::vector<double> closure;
  /// Same with rho(w,v) < eps for each eps of the schedule.
  std::vector<std::vector<double>> limit;

  double rv(std::size_t j, std::size_t b) const { return range_to_v[j * nv + b]; }
  double cl(std::size_t a, std::size_t b) const { return closure[a * nv + b]; }
  double lim(std::size_t a, std::size_t b) const { return limit.back()[a * nv + b]; }
  bool admissible(std::size_t a, std::size_t b) const { return !inst->admissible || inst->admissible(a, b); }
};

inline void validate(const RegularityInstance& inst, bool needs_schedule) {
  if (inst.U.empty()) throw std::invalid_argument("regularity instance: U is empty");
  if (!inst.gamma) throw std::invalid_argument("regularity instance: gamma is undefined");
  if (!(inst.constant > 0.0)) throw std::invalid_argument("regularity instance: constant must be positive");
  bool nonzero = false;
  for (std::size_t i : inst.U) {
    if (i >= inst.map.domain().size()) throw std::out_of_range("regularity instance: U index out of range");
    if (inst.gamma(inst.map.domain()[i]) > ExtReal(0.0)) nonzero = true;
  }
  if (!nonzero) throw std::invalid_argument("regularity instance: gamma vanishes identically on U");
  if (needs_schedule) {
    if (inst.eps_schedule.empty()) throw std::invalid_argument("regularity instance: eps_schedule is empty");
    for (std::size_t k = 0; k < inst.eps_schedule.size(); ++k) {
      if (!(inst.eps_schedule[k] > 0.0)) throw std::invalid_argument("eps_schedule: radii must be positive");
      if (k > 0 && !(inst.eps_schedule[k] < inst.eps_schedule[k - 1]))
        throw std::invalid_argument("eps_schedule: radii must be strictly decreasing");
    }
  }
}

inline Prepared prepare(const RegularityInstance& inst, bool need_closure, bool need_limit) {
  const SampledMap& m = inst.map;
  Prepared P;
  P.inst = &inst;
  P.nu = inst.U.size();
  P.nv = inst.V.size();
  for (std::size_t i : inst.U) P.gamma.push_back(inst.gamma(m.domain()[i]));
  const std::size_t nr = m.range().size();
  P.range_to_v.resize(nr * P.nv);
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t b = 0; b < P.nv; ++b) P.range_to_v[j * P.nv + b] = m.dy(m.range()[j], inst.V[b]);

  // d(x, u) for x in U and every domain point u that carries a value
  const std::size_t nd = m.domain().size();
  std::vector<double> dxu(P.nu * nd, std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < P.nu; ++a)
    for (std::size_t u = 0; u < nd; ++u)
      if (!m.values(u).empty()) dxu[a * nd + u] = m.dx(m.domain()[inst.U[a]], m.domain()[u]);

  auto fill = [&](auto&& near) {
    std::vector<double> out(P.nu * P.nv, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> near_range;
    for (std::size_t b = 0; b < P.nv; ++b) {
      near_range.clear();
      for (std::size_t j = 0; j < nr; ++j)
        if (near(P.rv(j, b))) near_range.push_back(j);
      for (std::size_t a = 0; a < P.nu; ++a) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j : near_range)
          for (std::size_t u : m.preimage(j)) best = std::min(best, dxu[a * nd + u]);
        out[a * P.nv + b] = best;
      }
    }
    return out;
  };
  const double tau = inst.tau();
  if (need_closure) P.closure = fill([tau](double r) { return r <= tau; });
  if (need_limit)
    for (double eps : inst.eps_schedule) P.limit.push_back(fill([eps](double r) { return r < eps; }));
  return P;
}

inline std::vector<double> geometric_t_grid(const ExtReal& gamma, double top_if_infinite, double floor,
                                            int per_decade) {
  std::vector<double> ts;
  if (per_decade <= 0) return ts;
  const double top = gamma.is_infinite() ? top_if_infinite : gamma.value();
  for (int k = 1;; ++k) {
    const double t = top * std::pow(10.0, -static_cast<double>(k) / per_decade);
    if (t < floor) break;
    ts.push_back(t);
  }
  std::reverse(ts.begin(), ts.end());
  return ts;
}

/**
 * Openness at constant c: for x in U, y in G(x), admissible t and v in V with
 * rho(v,y) < c t, some graph pair (u,w) has d(x,u) < t and rho(w,v) <= tau.
 * With breakpoints the binding t is the infimum rho(v,y)/c, so the inclusion
 * reduces to closure(x,v) <= rho(v,y)/c.
 */
inline bool evaluate_O(const Prepared& P, double c, CheckReport* rep) {
  const RegularityInstance& inst = *P.inst;
  const SampledMap& m = inst.map;
  const bool exact = inst.t_grid.breakpoints;
  if (!exact && inst.t_grid.points_per_decade <= 0) throw std::invalid_argument("check_O: empty t-grid");
  const double top_inf = 2.0 * std::max(m.domain().diameter(), inst.grid_step);
  bool ok = true;
  for (std::size_t a = 0; a < P.nu; ++a) {
    const std::size_t xi = inst.U[a];
    const ExtReal g = P.gamma[a];
    if (!(g > ExtReal(0.0))) continue;
    std::vector<double> ts;
    if (!exact) {
      ts = geometric_t_grid(g, top_inf, 0.1 * inst.grid_step, inst.t_grid.points_per_decade);
      if (ts.empty()) continue;
    }
    for (std::size_t j : m.values(xi)) {
      for (std::size_t b = 0; b < P.nv; ++b) {
        if (!P.admissible(a, b)) continue;
        const double rho = P.rv(j, b);
        const double tstar = rho / c;
        if (!(ExtReal(tstar) < g)) continue;
        double t = 0.0;
        if (exact) {
          t = std::nextafter(tstar, std::numeric_limits<double>::infinity());
        } else {
          const auto it = std::upper_bound(ts.begin(), ts.end(), tstar);
          if (it == ts.end()) continue;
          t = *it;
        }
        if (rep) ++rep->checked;
        const double reach = P.cl(a, b);
        if (!(reach < t)) {
          ok = false;
          if (!rep) return false;
          add_violation(*rep, {m.domain()[xi], m.range()[j], inst.V[b], t, reach, t});
        }
      }
    }
  }
  return ok;
}

inline void count_unstable(const Prepared& P, std::size_t a, std::size_t b, double tau, CheckReport* rep) {
  if (!rep || P.limit.size() < 2) return;
  const double last = P.limit[P.limit.size() - 1][a * P.nv + b];
  const double prev = P.limit[P.limit.size() - 2][a * P.nv + b];
  const bool same_inf = std::isinf(last) && std::isinf(prev);
  if (!same_inf && !(std::abs(last - prev) <= tau)) ++rep->unstable;
}

/// Distance property: mu dist(v, G(x)) < gamma(x) implies limit(x,v) <= mu dist(v, G(x)) + tau.
inline bool evaluate_R(const Prepared& P, double mu, CheckReport* rep) {
  const RegularityInstance& inst = *P.inst;
  const SampledMap& m = inst.map;
  const double tau = inst.tau();
  bool ok = true;
  for (std::size_t a = 0; a < P.nu; ++a) {
    const std::size_t xi = inst.U[a];
    const auto& gx = m.values(xi);
    if (gx.empty()) continue;
    for (std::size_t b = 0; b < P.nv; ++b) {
      if (!P.admissible(a, b)) continue;
      std::size_t jbest = gx.front();
      double dist = P.rv(jbest, b);
      for (std::size_t j : gx)
        if (P.rv(j, b) < dist) {
          dist = P.rv(j, b);
          jbest = j;
        }
      if (!(ExtReal(mu * dist) < P.gamma[a])) continue;
      if (rep) ++rep->checked;
      count_unstable(P, a, b, tau, rep);
      const double lhs = P.lim(a, b);
      const double rhs = mu * dist + tau;
      if (!(lhs <= rhs)) {
        ok = false;
        if (!rep) return false;
        add_violation(*rep, {m.domain()[xi], m.range()[jbest], inst.V[b], std::nullopt, lhs, rhs});
      }
    }
  }
  return ok;
}

/// Inverse property: for (x,y) in the graph with x in U and v in V,
/// mu rho(y,v) < gamma(x) implies limit(x,v) <= mu rho(y,v) + tau.
inline bool evaluate_Linv(const Prepared& P, double mu, CheckReport* rep) {
  const RegularityInstance& inst = *P.inst;
  const SampledMap& m = inst.map;
  const double tau = inst.tau();
  bool ok = true;
  for (std::size_t a = 0; a < P.nu; ++a) {
    const std::size_t xi = inst.U[a];
    for (std::size_t j : m.values(xi)) {
      for (std::size_t b = 0; b < P.nv; ++b) {
        if (!P.admissible(a, b)) continue;
        const double rho = P.rv(j, b);
        if (!(ExtReal(mu * rho) < P.gamma[a])) continue;
        if (rep) ++rep->checked;
        count_unstable(P, a, b, tau, rep);
        const double lhs = P.lim(a, b);
        const double rhs = mu * rho + tau;
        if (!(lhs <= rhs)) {
          ok = false;
          if (!rep) return false;
          add_violation(*rep, {m.domain()[xi], m.range()[j], inst.V[b], std::nullopt, lhs, rhs});
        }
      }
    }
  }
  return ok;
}

}  // namespace detail

inline CheckReport check_O(const RegularityInstance& inst) {
  detail::validate(inst, false);
  if (!inst.t_grid.breakpoints && inst.t_grid.points_per_decade <= 0)
    throw std::invalid_argument("check_O: empty t-grid");
  const detail::Prepared P = detail::prepare(inst, true, false);
  CheckReport rep;
  rep.property = "O";
  detail::evaluate_O(P, inst.constant, &rep);
  detail::finalize(rep);
  return rep;
}

inline CheckReport check_R(const RegularityInstance& inst) {
  detail::validate(inst, true);
  const detail::Prepared P = detail::prepare(inst, false, true);
  CheckReport rep;
  rep.property = "R";
  detail::evaluate_R(P, inst.constant, &rep);
  detail::finalize(rep);
  return rep;
}

inline CheckReport check_Linv(const RegularityInstance& inst) {
  detail::validate(inst, true);
  const detail::Prepared P = detail::prepare(inst, false, true);
  CheckReport rep;
  rep.property = "Linv";
  detail::evaluate_Linv(P, inst.constant, &rep);
  detail::finalize(rep);
  return rep;
}

struct EquivalenceReport {
  CheckReport openness;
  CheckReport regularity;
  CheckReport inverse;
  bool agree = true;
  std::vector<std::string> notes;
};

/// Openness at c against both distance properties at 1/c; disagreements are reported, not reconciled.
inline EquivalenceReport equivalence_suite(const RegularityInstance& inst) {
  for (std::size_t i : inst.U)
    if (!(inst.gamma(inst.map.domain()[i]) > ExtReal(0.0)))
      throw std::invalid_argument("equivalence_suite: gamma must be positive on U");
  EquivalenceReport rep;
  rep.openness = check_O(inst);
  RegularityInstance dual = inst;
  dual.constant = 1.0 / inst.constant;
  rep.regularity = check_R(dual);
  rep.inverse = check_Linv(dual);
  rep.agree = rep.openness.passed == rep.regularity.passed && rep.regularity.passed == rep.inverse.passed;
  rep.notes.push_back("target points restricted to V; values of Y off the sampled set are not checked");
  if (!rep.agree)
    rep.notes.push_back(std::string("verdicts differ: O=") + (rep.openness.passed ? "pass" : "fail") +
                        " R=" + (rep.regularity.passed ? "pass" : "fail") +
                        " Linv=" + (rep.inverse.passed ? "pass" : "fail"));
  return rep;
}

/**
 * Openness with closed balls on both sides, scanned directly over the graph
 * pairs: for t >= rho(v,y)/c inside (0, gamma(x)) some pair (u,w) needs
 * d(x,u) <= t and rho(w,v) <= tau. The verdict is compared with check_O.
 */
inline CheckReport closed_ball_variant(const RegularityInstance& inst) {
  detail::validate(inst, false);
  const SampledMap& m = inst.map;
  const double tau = inst.tau();
  const double c = inst.constant;
  CheckReport rep;
  rep.property = "O-closed";
  for (std::size_t a = 0; a < inst.U.size(); ++a) {
    const Point& x = m.domain()[inst.U[a]];
    const ExtReal g = inst.gamma(x);
    for (std::size_t j : m.values(inst.U[a])) {
      const Point& y = m.range()[j];
      for (std::size_t b = 0; b < inst.V.size(); ++b) {
        if (inst.admissible && !inst.admissible(a, b)) continue;
        const Point& v = inst.V[b];
        const double t = m.dy(v, y) / c;
        if (!(ExtReal(t) < g)) continue;
        ++rep.checked;
        bool reached = false;
        for (const auto& [ui, wj] : m.pairs())
          if (m.dx(x, m.domain()[ui]) <= t && m.dy(m.range()[wj], v) <= tau) {
            reached = true;
            break;
          }
        if (!reached) detail::add_violation(rep, {x, y, v, t, std::numeric_limits<double>::infinity(), t});
      }
    }
  }
  detail::finalize(rep);
  const CheckReport open = check_O(inst);
  if (open.passed != rep.passed)
    rep.notes.push_back(std::string("verdict differs from the open-ball check (open ") +
                        (open.passed ? "passes" : "fails") + ")");
  return rep;
}

// ---------------------------------------------------------------------------
// Graph projection

/// Single-valued reformulation over the graph cloud: points (x,y), premetric
/// max{d(u,x), alpha rho(v,y)}, and the projection (x,y) -> y.
struct ProjectedMap {
  SampledMap map;
  double alpha = 0.0;
  std::size_t domain_dim = 0;
};

inline ProjectedMap project_graph(const SampledMap& g, double alpha, double c) {
  if (!(c > 0.0) || !(alpha > 0.0) || !(alpha < 1.0 / c))
    throw std::invalid_argument("project_graph: alpha must lie in (0, 1/c)");
  const std::size_t dx = g.domain().dim();
  std::vector<Point> pts;
  std::vector<SampledMap::IndexPair> proj;
  for (const auto& [i, j] : g.pairs()) {
    Point p = g.domain()[i];
    p.insert(p.end(), g.range()[j].begin(), g.range()[j].end());
    proj.emplace_back(pts.size(), j);
    pts.push_back(std::move(p));
  }
  const QuasiPremetric d = g.domain_metric(), rho = g.range_metric();
  QuasiPremetric omega(
      [d, rho, alpha, dx](const Point& p, const Point& q) {
        const Point px(p.begin(), p.begin() + static_cast<long>(dx)), qx(q.begin(), q.begin() + static_cast<long>(dx));
        const Point py(p.begin() + static_cast<long>(dx), p.end()), qy(q.begin() + static_cast<long>(dx), q.end());
        return max(d(px, qx), ExtReal(alpha) * rho(py, qy));
      },
      axioms({Axiom::A1, Axiom::A2, Axiom::A3}), "graph-max");
  return {SampledMap(PointCloud(std::move(pts)), g.range(), std::move(proj), omega, rho), alpha, dx};
}

/// The instance translated to the graph: U becomes the graph points over U,
/// gamma(x,y) = gamma(x); V and the constant are unchanged.
inline RegularityInstance project_instance(const RegularityInstance& inst, double alpha) {
  ProjectedMap pm = project_graph(inst.map, alpha, inst.constant);
  RegularityInstance out = inst;
  out.map = pm.map;
  out.U.clear();
  std::vector<bool> in_u(inst.map.domain().size(), false);
  for (std::size_t i : inst.U) in_u[i] = true;
  std::vector<std::size_t> origin;  // graph index -> original U position
  std::vector<std::size_t> upos(inst.map.domain().size(), 0);
  for (std::size_t a = 0; a < inst.U.size(); ++a) upos[inst.U[a]] = a;
  for (std::size_t k = 0; k < inst.map.pairs().size(); ++k)
    if (in_u[inst.map.pairs()[k].first]) {
      out.U.push_back(k);
      origin.push_back(upos[inst.map.pairs()[k].first]);
    }
  const std::size_t dx = pm.domain_dim;
  GammaFn g = inst.gamma;
  out.gamma = [g, dx](const Point& p) { return g(Point(p.begin(), p.begin() + static_cast<long>(dx))); };
  if (inst.admissible) {
    auto adm = inst.admissible;
    out.admissible = [adm, origin](std::size_t a, std::size_t b) { return adm(origin[a], b); };
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequence characterization of the distance property

struct SequenceCharacterization {
  std::vector<Point> ys;
  std::vector<double> distances;  ///< dist(x, G^{-1}(y_k))
  double bound = 0.0;             ///< kappa (dist(y, G(x)) + eps)
  bool sequence_ok = true;
  std::optional<std::size_t> failed_k;
  /// Limit surrogate dist(x, G^{-1}(B(y, eps / cap))) against the same bound.
  bool inequality_ok = true;
  bool consistent = true;
};

/**
 * Builds y_k with rho(y_k, y) < eps/k, k = 1..cap, each minimizing
 * dist(x, G^{-1}(y_k)) among the sampled values, and checks
 * dist(x, G^{-1}(y_k)) <= kappa (dist(y, G(x)) + eps).
 */
inline SequenceCharacterization sequence_characterization(const SampledMap& m, const Point& x, const Point& y,
                                                          double kappa, double eps, std::size_t cap = 8) {
  const auto xi = m.domain().index_of(x);
  if (!xi) throw std::invalid_argument("sequence_characterization: x is not a domain point");
  double dist_y = std::numeric_limits<double>::infinity();
  for (std::size_t j : m.values(*xi)) dist_y = std::min(dist_y, m.dy(y, m.range()[j]));
  if (std::isinf(dist_y)) throw std::invalid_argument("sequence_characterization: dist(y, G(x)) is infinite");
  SequenceCharacterization out;
  out.bound = kappa * (dist_y + eps);
  auto preimage_dist = [&](std::size_t j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t u : m.preimage(j)) best = std::min(best, m.dx(x, m.domain()[u]));
    return best;
  };
  double last_ball = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= cap; ++k) {
    const double radius = eps / static_cast<double>(k);
    std::optional<std::size_t> pick;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m.range().size(); ++j) {
      if (!(m.dy(m.range()[j], y) < radius)) continue;
      const double dj = preimage_dist(j);
      if (!pick || dj < best) {
        best = dj;
        pick = j;
      }
    }
    if (!pick) {
      out.sequence_ok = false;
      out.failed_k = k;
      break;
    }
    out.ys.push_back(m.range()[*pick]);
    out.distances.push_back(best);
    if (!(best <= out.bound) && out.sequence_ok) {
      out.sequence_ok = false;
      out.failed_k = k;
    }
    if (k == cap) last_ball = best;
  }
  // independent evaluation of the preimage distance of the smallest ball
  double ball = std::numeric_limits<double>::infinity();
  for (const auto& [ui, wj] : m.pairs())
    if (m.dy(m.range()[wj], y) < eps / static_cast<double>(cap)) ball = std::min(ball, m.dx(x, m.domain()[ui]));
  (void)last_ball;
  out.inequality_ok = ball <= out.bound;
  out.consistent = out.inequality_ok == out.sequence_ok;
  return out;
}

// ---------------------------------------------------------------------------
// Moduli

enum class ModulusKind { sur, reg, lip_inv, popen, subreg, calm, lopen, semireg, incalm };

inline const char* to_string(ModulusKind k) {
  switch (k) {
    case ModulusKind::sur: return "sur";
    case ModulusKind::reg: return "reg";
    case ModulusKind::lip_inv: return "lip_inv";
    case ModulusKind::popen: return "popen";
    case ModulusKind::subreg: return "subreg";
    case ModulusKind::calm: return "calm";
    case ModulusKind::lopen: return "lopen";
    case ModulusKind::semireg: return "semireg";
    default: return "incalm";
  }
}

inline std::optional<ModulusKind> modulus_kind_from_string(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(ModulusKind::incalm); ++k)
    if (s == to_string(static_cast<ModulusKind>(k))) return static_cast<ModulusKind>(k);
  return std::nullopt;
}

enum class Property { openness, regularity, inverse };

inline Property property_of(ModulusKind k) {
  switch (k) {
    case ModulusKind::sur:
    case ModulusKind::popen:
    case ModulusKind::lopen: return Property::openness;
    case ModulusKind::reg:
    case ModulusKind::subreg:
    case ModulusKind::semireg: return Property::regularity;
    default: return Property::inverse;
  }
}

/// Openness moduli are suprema of passing constants; the others are infima.
inline bool is_supremum_kind(ModulusKind k) { return property_of(k) == Property::openness; }

struct ModulusSearchConfig {
  double grid_step = 0.01;
  double gamma0 = 1.0;
  /// Relative change between successive neighborhoods counted as stable.
  double stabilization_tol = 0.05;
  int bisection_iterations = 40;
  std::optional<double> closure_tol;
  std::optional<double> bracket_lo;
  std::optional<double> bracket_hi;
};

struct GammaLevel {
  double gamma = 0.0;
  double lower = 0.0;
  ExtReal upper;
};

struct ModulusReport {
  ModulusKind kind = ModulusKind::sur;
  double lower = 0.0;
  ExtReal upper;
  std::vector<double> witness_ok;
  std::vector<double> witness_fail;
  double grid_resolution = 0.0;
  /// Neighborhood radius of the reported bracket.
  double gamma = 0.0;
  bool resolution_limited = false;
  std::vector<GammaLevel> ladder;
  Point x_ref;
  Point y_ref;
};

/**
 * The defining property of `kind` at (xbar, ybar) with neighborhood radius
 * gamma, as a regularity instance: around the point U and V are balls, the
 * pseudo-open family fixes V = {ybar}, the semiregular family fixes U = {xbar}.
 */
inline RegularityInstance modulus_instance(const SampledMap& m, const Point& xbar, const Point& ybar,
                                           ModulusKind kind, double gamma, double constant,
                                           const ModulusSearchConfig& cfg) {
  RegularityInstance inst(m);
  inst.gamma = constant_gamma(ExtReal(gamma));
  inst.constant = constant;
  inst.grid_step = cfg.grid_step;
  inst.closure_tol = cfg.closure_tol;
  inst.eps_schedule = default_eps_schedule(inst.tau());
  const auto xi = m.domain().index_of(xbar);
  if (!xi) throw std::invalid_argument("modulus_instance: reference x is not a domain point");
  switch (kind) {
    case ModulusKind::sur:
    case ModulusKind::reg:
    case ModulusKind::lip_inv:
      inst.U = m.domain_ball(xbar, ExtReal(gamma));
      inst.V = m.range_ball(ybar, ExtReal(gamma));
      break;
    case ModulusKind::popen:
    case ModulusKind::subreg:
    case ModulusKind::calm:
      inst.U = m.domain_ball(xbar, ExtReal(gamma));
      inst.V = {ybar};
      break;
    default:
      inst.U = {*xi};
      inst.V = m.range_ball(ybar, ExtReal(gamma));
      break;
  }
  return inst;
}

inline CheckReport check_property(const RegularityInstance& inst, Property p) {
  switch (p) {
    case Property::openness: return check_O(inst);
    case Property::regularity: return check_R(inst);
    default: return check_Linv(inst);
  }
}

namespace detail {

struct Bracket {
  double lower = 0.0;
  ExtReal upper;
  std::optional<double> ok;
  std::optional<double> fail;
};

inline Bracket bisect(const std::function<bool(double)>& pass, bool supremum, double lo, double hi, int iters) {
  Bracket b;
  if (supremum) {
    if (!pass(lo)) {
      b.lower = 0.0;
      b.upper = ExtReal(lo);
      b.fail = lo;
      return b;
    }
    if (pass(hi)) {
      b.lower = hi;
      b.upper = kInf;
      b.ok = hi;
      return b;
    }
    double a = lo, z = hi;
    for (int k = 0; k < iters; ++k) {
      const double mid = std::sqrt(a * z);
      (pass(mid) ? a : z) = mid;
    }
    b.lower = a;
    b.upper = ExtReal(z);
    b.ok = a;
    b.fail = z;
    return b;
  }
  if (pass(lo)) {
    b.lower = 0.0;
    b.upper = ExtReal(lo);
    b.ok = lo;
    return b;
  }
  if (!pass(hi)) {
    b.lower = hi;
    b.upper = kInf;
    b.fail = hi;
    return b;
  }
  double a = lo, z = hi;
  for (int k = 0; k < iters; ++k) {
    const double mid = std::sqrt(a * z);
    (pass(mid) ? z : a) = mid;
  }
  b.lower = a;
  b.upper = ExtReal(z);
  b.ok = z;
  b.fail = a;
  return b;
}

inline double point_estimate(ModulusKind kind, const Bracket& b) {
  return is_supremum_kind(kind) ? b.lower : b.upper.to_double();
}

inline bool stable(double prev, double cur, double tol) {
  if (std::isinf(prev) || std::isinf(cur)) return std::isinf(prev) && std::isinf(cur);
  const double scale = std::max(std::abs(prev), std::abs(cur));
  return scale == 0.0 || std::abs(prev - cur) <= tol * scale;
}

}  // namespace detail

/**
 * Bracket for one of the nine moduli at (xbar, ybar). For each radius of the
 * halving schedule gamma0, gamma0/2, ... the constant is bisected (geometric
 * midpoints) with the exhaustive property check as predicate. The schedule
 * stops at the first pair of successive radii whose estimates agree within
 * the stabilization tolerance, and the coarser of the two is reported; if no
 * pair agrees before gamma < 4 * grid_step the report is resolution limited.
 */
inline ModulusReport estimate_modulus(const SampledMap& m, const Point& xbar, const Point& ybar, ModulusKind kind,
                                      const ModulusSearchConfig& cfg = {}) {
  if (!m.contains(xbar, ybar)) throw std::invalid_argument("estimate_modulus: reference point is not on the graph");
  const double lo = cfg.bracket_lo.value_or(cfg.grid_step);
  const double hi = cfg.bracket_hi.value_or(
      std::max(1.0, m.domain().diameter() + m.range().diameter()) / cfg.grid_step);
  const Property prop = property_of(kind);

  ModulusReport rep;
  rep.kind = kind;
  rep.grid_resolution = cfg.grid_step;
  rep.x_ref = xbar;
  rep.y_ref = ybar;
  std::vector<detail::Bracket> brackets;
  std::optional<std::size_t> chosen;
  for (double gamma = cfg.gamma0; gamma >= 4.0 * cfg.grid_step; gamma /= 2.0) {
    const RegularityInstance inst = modulus_instance(m, xbar, ybar, kind, gamma, 1.0, cfg);
    const detail::Prepared P =
        detail::prepare(inst, prop == Property::openness, prop != Property::openness);
    auto pass = [&](double k) {
      switch (prop) {
        case Property::openness: return detail::evaluate_O(P, k, nullptr);
        case Property::regularity: return detail::evaluate_R(P, k, nullptr);
        default: return detail::evaluate_Linv(P, k, nullptr);
      }
    };
    brackets.push_back(detail::bisect(pass, is_supremum_kind(kind), lo, hi, cfg.bisection_iterations));
    rep.ladder.push_back({gamma, brackets.back().lower, brackets.back().upper});
    const std::size_t n = brackets.size();
    if (n >= 2 && detail::stable(detail::point_estimate(kind, brackets[n - 2]),
                                 detail::point_estimate(kind, brackets[n - 1]), cfg.stabilization_tol)) {
      chosen = n - 2;
      break;
    }
  }
  if (brackets.empty()) throw std::invalid_argument("estimate_modulus: gamma0 below the resolution floor");
  if (!chosen) {
    chosen = brackets.size() - 1;
    rep.resolution_limited = true;
  }
  const detail::Bracket& b = brackets[*chosen];
  rep.lower = b.lower;
  rep.upper = b.upper;
  rep.gamma = rep.ladder[*chosen].gamma;
  if (b.ok) rep.witness_ok.push_back(*b.ok);
  if (b.fail) rep.witness_fail.push_back(*b.fail);
  return rep;
}

struct ProductLawVerdict {
  bool holds = false;
  std::string law;
  /// Product bounds for paired kinds; the two brackets for equal kinds.
  ExtReal lower;
  ExtReal upper;
  double gamma = 0.0;
};

namespace detail {

inline std::optional<GammaLevel> level_at(const ModulusReport& r, double gamma) {
  for (const GammaLevel& l : r.ladder)
    if (l.gamma == gamma) return l;
  return std::nullopt;
}

inline GammaLevel level_or_reported(const ModulusReport& r, double gamma) {
  if (auto l = level_at(r, gamma)) return *l;
  return {r.gamma, r.lower, r.upper};
}

}  // namespace detail

/**
 * Product laws sur*reg = popen*subreg = lopen*semireg = 1 and the equalities
 * reg = lip_inv, subreg = calm, semireg = incalm, checked with interval
 * arithmetic on the brackets (0 * inf = 1). Both reports are compared at the
 * coarser of their reported radii when both ladders contain it.
 */
inline ProductLawVerdict verify_product_laws(const ModulusReport& r1, const ModulusReport& r2, double tol = 0.05) {
  using K = ModulusKind;
  auto is_pair = [](K a, K b) {
    return (a == K::sur && b == K::reg) || (a == K::popen && b == K::subreg) || (a == K::lopen && b == K::semireg);
  };
  auto is_equal = [](K a, K b) {
    return (a == K::reg && b == K::lip_inv) || (a == K::subreg && b == K::calm) ||
           (a == K::semireg && b == K::incalm);
  };
  const double gamma = std::max(r1.gamma, r2.gamma);
  ProductLawVerdict v;
  v.gamma = gamma;
  if (is_pair(r1.kind, r2.kind) || is_pair(r2.kind, r1.kind)) {
    const GammaLevel a = detail::level_or_reported(r1, gamma);
    const GammaLevel b = detail::level_or_reported(r2, gamma);
    v.law = std::string(to_string(r1.kind)) + "*" + to_string(r2.kind) + "=1";
    v.lower = ExtReal(a.lower) * ExtReal(b.lower);
    v.upper = a.upper * b.upper;
    v.holds = v.lower <= ExtReal(1.0 + tol) && v.upper >= ExtReal(1.0 - tol);
    return v;
  }
  if (is_equal(r1.kind, r2.kind) || is_equal(r2.kind, r1.kind)) {
    const GammaLevel a = detail::level_or_reported(r1, gamma);
    const GammaLevel b = detail::level_or_reported(r2, gamma);
    v.law = std::string(to_string(r1.kind)) + "=" + to_string(r2.kind);
    v.lower = ExtReal(std::max(a.lower, b.lower));
    v.upper = min(a.upper, b.upper);
    // overlapping brackets after widening each by the relative tolerance
    v.holds = ExtReal(a.lower) <= ExtReal(1.0 + tol) * b.upper && ExtReal(b.lower) <= ExtReal(1.0 + tol) * a.upper;
    return v;
  }
  throw std::invalid_argument(std::string("verify_product_laws: kinds ") + to_string(r1.kind) + " and " +
                              to_string(r2.kind) + " are not related by a law");
}

}  // namespace almostreg
