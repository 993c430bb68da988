#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "almostreg/ext_real.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/sampled_map.hpp"
#include "almostreg/spaces.hpp"

namespace almostreg {

using PointFn = std::function<Point(const Point&)>;

struct LipschitzEstimate {
  double value = 0.0;
  double radius = 0.0;
  std::optional<std::pair<Point, Point>> witness_pair;
};

/// Largest ratio rho(h(u),h(x)) / d(u,x) over sampled pairs in the open ball B(xbar, radius).
inline LipschitzEstimate estimate_lip(const PointFn& h, const Point& xbar, double radius, const PointCloud& cloud,
                                      const QuasiPremetric& d = euclidean_metric(),
                                      const QuasiPremetric& rho = euclidean_metric()) {
  const auto idx = eta_ball(d, cloud, xbar, ExtReal(radius), false);
  if (idx.size() < 2) throw std::invalid_argument("estimate_lip: fewer than two sampled points in the ball");
  std::vector<Point> vals;
  for (std::size_t i : idx) vals.push_back(h(cloud[i]));
  LipschitzEstimate est;
  est.radius = radius;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const double dist = d(cloud[idx[a]], cloud[idx[b]]).to_double();
      if (!(dist > 0.0)) continue;
      const double ratio = rho(vals[a], vals[b]).to_double() / dist;
      if (ratio > est.value || !est.witness_pair) {
        est.value = std::max(est.value, ratio);
        est.witness_pair = {cloud[idx[a]], cloud[idx[b]]};
      }
    }
  return est;
}

/**
 * Aubin-type rate of a sampled set-valued H near (xbar, wbar): the largest
 * dist(w, H(u')) / d(u,u') over u != u' in B(xbar, radius) and
 * w in H(u) cap B(wbar, v_radius).
 */
inline LipschitzEstimate estimate_lip(const SampledMap& H, const Point& xbar, const Point& wbar, double radius,
                                      double v_radius) {
  std::vector<std::size_t> idx;
  for (std::size_t i : H.domain_ball(xbar, ExtReal(radius)))
    if (!H.values(i).empty()) idx.push_back(i);
  if (idx.size() < 2) throw std::invalid_argument("estimate_lip: fewer than two sampled points in the ball");
  LipschitzEstimate est;
  est.radius = radius;
  for (std::size_t a : idx)
    for (std::size_t b : idx) {
      if (a == b) continue;
      const Point& u = H.domain()[a];
      const Point& u2 = H.domain()[b];
      const double dist = H.dx(u, u2);
      if (!(dist > 0.0)) continue;
      for (std::size_t j : H.values(a)) {
        const Point& w = H.range()[j];
        if (!(H.dy(w, wbar) < v_radius)) continue;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t k : H.values(b)) gap = std::min(gap, H.dy(w, H.range()[k]));
        const double ratio = gap / dist;
        if (ratio > est.value || !est.witness_pair) {
          est.value = std::max(est.value, ratio);
          est.witness_pair = {u, u2};
        }
      }
    }
  return est;
}

namespace detail {

/// Keeps a value only if it is farther than tol from every value kept before (lexicographic order).
inline std::vector<Point> dedupe_within(std::vector<Point> vals, double tol) {
  std::sort(vals.begin(), vals.end());
  std::vector<Point> kept;
  for (Point& v : vals) {
    bool near = false;
    for (const Point& k : kept)
      if (euclidean_distance(k, v) <= tol) {
        near = true;
        break;
      }
    if (!near) kept.push_back(std::move(v));
  }
  return kept;
}

}  // namespace detail

/// Pointwise Minkowski sum F(x) + H(x) over the common domain points, deduplicated within tol.
inline SampledMap minkowski_sum(const SampledMap& F, const SampledMap& H, double tol) {
  std::vector<std::pair<Point, Point>> pts;
  for (std::size_t i = 0; i < F.domain().size(); ++i) {
    const auto k = H.domain().index_of(F.domain()[i]);
    if (!k) continue;
    std::vector<Point> vals;
    for (std::size_t a : F.values(i))
      for (std::size_t b : H.values(*k)) vals.push_back(F.range()[a] + H.range()[b]);
    for (Point& v : detail::dedupe_within(std::move(vals), tol)) pts.emplace_back(F.domain()[i], std::move(v));
  }
  if (pts.empty()) throw std::invalid_argument("minkowski_sum: the sum has an empty graph");
  return SampledMap::from_pairs(pts).with_domain(F.domain());
}

/// Graph of F + h.
inline SampledMap add_function(const SampledMap& F, const PointFn& h) {
  std::vector<std::pair<Point, Point>> pts;
  for (const auto& [i, j] : F.pairs()) pts.emplace_back(F.domain()[i], F.range()[j] + h(F.domain()[i]));
  return SampledMap::from_pairs(pts).with_domain(F.domain());
}

struct InequalityRow {
  std::string quantity;
  double lower = 0.0;
  ExtReal upper;
};

/// lhs >= rhs - tol for lower-bound inequalities; inconclusive reports are never asserted.
struct InequalityReport {
  std::vector<InequalityRow> rows;
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  bool holds = false;
  bool inconclusive = false;
  std::vector<std::string> notes;
};

inline double lg_tolerance(double grid_step, double constants) { return 3.0 * grid_step * (1.0 + constants); }

namespace detail {


inline void note_resolution(InequalityReport& rep, const std::string& name, const ModulusReport& r) {
  if (r.resolution_limited) rep.notes.push_back(name + " is resolution limited");
}

}  // namespace detail

/**
 * sur(F+h)(xbar, zbar + h(xbar)) >= sur F(xbar, zbar) - lip h(xbar) on samples.
 * The Lipschitz rate is taken over B(xbar, 2 gamma), gamma being the larger
 * neighborhood radius of the two modulus reports, which is the window the
 * openness scans reach.
 */
inline InequalityReport lg_single_check(const SampledMap& F, const PointFn& h, const Point& xbar, const Point& zbar,
                                        const ModulusSearchConfig& cfg = {}) {
  if (!F.contains(xbar, zbar)) throw std::invalid_argument("lg_single_check: zbar is not a value of F at xbar");
  InequalityReport rep;
  const ModulusReport rF = estimate_modulus(F, xbar, zbar, ModulusKind::sur, cfg);
  const SampledMap G = add_function(F, h);
  const ModulusReport rG = estimate_modulus(G, xbar, zbar + h(xbar), ModulusKind::sur, cfg);
  const double gamma = std::max(rF.gamma, rG.gamma);
  const GammaLevel lf = detail::level_or_reported(rF, gamma);
  const GammaLevel lg = detail::level_or_reported(rG, gamma);
  const LipschitzEstimate lip = estimate_lip(h, xbar, 2.0 * gamma, F.domain());
  rep.rows.push_back({"sur F", lf.lower, lf.upper});
  rep.rows.push_back({"lip h", lip.value, ExtReal(lip.value)});
  rep.rows.push_back({"sur (F+h)", lg.lower, lg.upper});
  detail::note_resolution(rep, "sur F", rF);
  detail::note_resolution(rep, "sur (F+h)", rG);
  rep.lhs = lg.lower;
  rep.rhs = lf.lower - lip.value;
  rep.tol = lg_tolerance(cfg.grid_step, lf.lower + lip.value);
  if (lf.upper.is_infinite()) {
    rep.inconclusive = true;
    rep.notes.push_back("sur F exceeds the search bracket");
    return rep;
  }
  rep.holds = rep.lhs >= rep.rhs - rep.tol;
  return rep;
}

struct GravesVerdict {
  bool skipped = false;
  bool inconclusive = false;
  bool holds = false;
  std::vector<double> radii;
  std::vector<double> lip_ladder;
  double sur_f = 0.0;
  double sur_g = 0.0;
  double allowed = 0.0;
  std::string reason;
};

/**
 * Equal openness moduli for f and g when lip(f - g)(xbar) vanishes. The
 * surrogate for the vanishing rate is the Lipschitz ladder of f - g on
 * halving radii; the check is skipped when its last value exceeds tau0 and
 * inconclusive when it does not decrease.
 */
inline GravesVerdict graves_check(const PointFn& f, const PointFn& g, const PointCloud& domain, const Point& xbar,
                                  double radius, const ModulusSearchConfig& cfg = {}, double tau0 = 0.1) {
  GravesVerdict v;
  const PointFn diff = [&](const Point& x) { return f(x) - g(x); };
  for (double r = radius; r >= 2.0 * cfg.grid_step; r /= 2.0) {
    v.radii.push_back(r);
    v.lip_ladder.push_back(estimate_lip(diff, xbar, r, domain).value);
  }
  if (v.lip_ladder.empty()) throw std::invalid_argument("graves_check: radius below the grid resolution");
  if (v.lip_ladder.back() > tau0) {
    v.skipped = true;
    v.reason = "lip(f-g) surrogate stays above tau0";
    return v;
  }
  for (std::size_t k = 1; k < v.lip_ladder.size(); ++k)
    if (v.lip_ladder[k] > v.lip_ladder[k - 1] + 1e-12) {
      v.inconclusive = true;
      v.reason = "lip(f-g) surrogate does not decrease under radius shrinkage";
      return v;
    }
  const SampledMap mf = SampledMap::from_function(domain, f);
  const SampledMap mg = SampledMap::from_function(domain, g);
  const ModulusReport rf = estimate_modulus(mf, xbar, f(xbar), ModulusKind::sur, cfg);
  const ModulusReport rg = estimate_modulus(mg, xbar, g(xbar), ModulusKind::sur, cfg);
  const double gamma = std::max(rf.gamma, rg.gamma);
  v.sur_f = detail::level_or_reported(rf, gamma).lower;
  v.sur_g = detail::level_or_reported(rg, gamma).lower;
  const double lip = estimate_lip(diff, xbar, 2.0 * gamma, domain).value;
  v.allowed = lip + lg_tolerance(cfg.grid_step, std::max(v.sur_f, v.sur_g));
  v.holds = std::abs(v.sur_f - v.sur_g) <= v.allowed;
  return v;
}

// ---------------------------------------------------------------------------
// Set-valued perturbations

struct PerturbationConstants {
  double c = 0.0;
  double c_prime = 0.0;
  double ell = 0.0;
  ExtReal a = kInf;
  ExtReal b = kInf;
  ExtReal r = kInf;
  ExtReal delta = kInf;
};

/// Internal constants of the sum theorem's proof.
struct ProofConstants {
  double lambda = 0.0;
  double alpha = 0.0;
  bool lambda_in_range = false;
  bool alpha_product_below_one = false;
};

inline ProofConstants proof_constants(double c, double c_prime, double ell) {
  ProofConstants p;
  p.lambda = (c_prime - c) / (2.0 * c_prime);
  p.alpha = 1.0 / (2.0 * c_prime);
  p.lambda_in_range = p.lambda > 0.0 && p.lambda < 1.0;
  p.alpha_product_below_one = (c - ell) * p.alpha < 1.0;
  return p;
}

struct ConditionReport {
  bool passed = true;
  std::size_t checked = 0;
  std::size_t violation_count = 0;
  /// (u, value, target) triples, lexicographic, truncated.
  std::vector<std::vector<Point>> witnesses;
};

struct ABCReport {
  ProofConstants constants;
  ConditionReport A;
  ConditionReport B;
  ConditionReport C;
  bool hypotheses_hold = false;
  std::optional<CheckReport> conclusion;
  std::vector<std::string> notes;
};

namespace detail {

inline void add_witness(ConditionReport& rep, std::vector<Point> w) {
  ++rep.violation_count;
  rep.passed = false;
  rep.witnesses.push_back(std::move(w));
}

inline void finalize(ConditionReport& rep) {
  std::sort(rep.witnesses.begin(), rep.witnesses.end());
  if (rep.witnesses.size() > kMaxWitnesses) rep.witnesses.resize(kMaxWitnesses);
}

inline bool within(double dist, const ExtReal& r) { return ExtReal(dist) < r; }

}  // namespace detail

/**
 * Hypotheses (A), (B), (C) of the set-valued sum theorem by exhaustive scans,
 * and on success its conclusion: F + H has the openness property on
 * B(xbar, a) x B(zbar + wbar, b) for c - ell with gamma = r.
 *
 * (A) closed-ball openness of F with c' on the prescribed windows, closure
 *     read as distance at most tau;
 * (B) H(u) cap B(wbar, (a+r) ell + delta) inside H(u') + B[0, ell d(u,u') + tau];
 * (C) every value of F + H near zbar + wbar splits as z + w with w in
 *     H(u) cap B(wbar, (a+r) ell + delta) and z within grid_step of F(u).
 */
inline ABCReport lg_setvalued_check(const SampledMap& F, const SampledMap& H, const Point& xbar, const Point& zbar,
                                    const Point& wbar, const PerturbationConstants& k, double grid_step) {
  if (!(k.ell > 0.0 && k.ell < k.c && k.c < k.c_prime))
    throw std::invalid_argument("lg_setvalued_check: constants must satisfy 0 < ell < c < c'");
  for (const ExtReal& q : {k.a, k.b, k.r, k.delta})
    if (!(q > ExtReal(0.0))) throw std::invalid_argument("lg_setvalued_check: a, b, r, delta must be positive");
  if (!F.contains(xbar, zbar)) throw std::invalid_argument("lg_setvalued_check: zbar is not a value of F at xbar");
  if (!H.contains(xbar, wbar)) throw std::invalid_argument("lg_setvalued_check: wbar is not a value of H at xbar");

  ABCReport rep;
  rep.constants = proof_constants(k.c, k.c_prime, k.ell);
  if (!rep.constants.lambda_in_range || !rep.constants.alpha_product_below_one)
    throw std::logic_error("lg_setvalued_check: proof constants out of range");

  const double tau = 2.0 * grid_step;
  const ExtReal c(k.c), ell(k.ell);
  const ExtReal ar = k.a + k.r, a2r = k.a + k.r + k.r;

  // (A)
  {
    const ExtReal z_window = c * ar + k.b + k.delta;
    const ExtReal v_window = c * a2r + k.b + k.delta;
    for (std::size_t ui : F.domain_ball(xbar, ar)) {
      const Point& u = F.domain()[ui];
      for (std::size_t zj : F.values(ui)) {
        const Point& z = F.range()[zj];
        if (!detail::within(F.dy(z, zbar), z_window)) continue;
        for (std::size_t vj = 0; vj < F.range().size(); ++vj) {
          const Point& v = F.range()[vj];
          if (!detail::within(F.dy(v, zbar), v_window)) continue;
          const double t = F.dy(v, z) / k.c_prime;  // smallest t with v in B[z, c't]
          if (!(t > 0.0) || !detail::within(t, k.r)) continue;
          ++rep.A.checked;
          bool reached = false;
          for (const auto& [pi, pj] : F.pairs())
            if (F.dx(u, F.domain()[pi]) <= t && F.dy(F.range()[pj], v) <= tau) {
              reached = true;
              break;
            }
          if (!reached) detail::add_witness(rep.A, {u, z, v});
        }
      }
    }
  }
  // (B)
  {
    const ExtReal w_window = ar * ell + k.delta;
    const auto idx = H.domain_ball(xbar, a2r);
    for (std::size_t ui : idx)
      for (std::size_t wj : H.values(ui)) {
        const Point& w = H.range()[wj];
        if (!detail::within(H.dy(w, wbar), w_window)) continue;
        for (std::size_t u2 : idx) {
          if (u2 == ui) continue;
          ++rep.B.checked;
          const double allowed = k.ell * H.dx(H.domain()[ui], H.domain()[u2]) + tau;
          double gap = std::numeric_limits<double>::infinity();
          for (std::size_t q : H.values(u2)) gap = std::min(gap, H.dy(w, H.range()[q]));
          if (!(gap <= allowed)) detail::add_witness(rep.B, {H.domain()[ui], w, H.domain()[u2]});
        }
      }
  }
  // (C)
  const SampledMap S = minkowski_sum(F, H, grid_step);
  {
    const ExtReal w_window = ar * ell + k.delta;
    const ExtReal v_window = k.b + c * k.r;
    const Point sbar = zbar + wbar;
    for (std::size_t ui : S.domain_ball(xbar, ar)) {
      const Point& u = S.domain()[ui];
      const auto fi = F.domain().index_of(u);
      const auto hi = H.domain().index_of(u);
      for (std::size_t vj : S.values(ui)) {
        const Point& v = S.range()[vj];
        if (!detail::within(S.dy(v, sbar), v_window)) continue;
        ++rep.C.checked;
        bool split = false;
        if (fi && hi)
          for (std::size_t wj : H.values(*hi)) {
            const Point& w = H.range()[wj];
            if (!detail::within(H.dy(w, wbar), w_window)) continue;
            for (std::size_t zj : F.values(*fi))
              if (euclidean_distance(F.range()[zj] + w, v) <= grid_step) split = true;
            if (split) break;
          }
        if (!split) detail::add_witness(rep.C, {u, v});
      }
    }
  }
  detail::finalize(rep.A);
  detail::finalize(rep.B);
  detail::finalize(rep.C);
  rep.hypotheses_hold = rep.A.passed && rep.B.passed && rep.C.passed;
  if (!rep.hypotheses_hold) {
    rep.notes.push_back("hypotheses fail; conclusion not asserted");
    return rep;
  }
  RegularityInstance inst(S);
  inst.grid_step = grid_step;
  inst.constant = k.c - k.ell;
  inst.U = S.domain_ball(xbar, k.a);
  inst.V = S.range_ball(zbar + wbar, k.b);
  inst.gamma = constant_gamma(k.r);
  rep.conclusion = check_O(inst);
  return rep;
}

struct BetaInterval {
  bool empty = false;
  /// Admissible beta form the open interval (0, upper).
  double upper = 0.0;
  double from_a = 0.0;
  double from_b = 0.0;
};

/// beta < a / (3 + 2/(c - ell)) and beta < (b - diamH) / (3 (c + 1)).
inline BetaInterval constants_cor56(double c, double ell, double diamH, double a, double b) {
  if (!(ell < c)) throw std::invalid_argument("constants_cor56: need ell < c");
  BetaInterval out;
  out.from_a = a / (3.0 + 2.0 / (c - ell));
  out.from_b = (b - diamH) / (3.0 * (c + 1.0));
  out.upper = std::min(out.from_a, out.from_b);
  out.empty = !(diamH < b) || !(out.upper > 0.0);
  if (out.empty) out.upper = 0.0;
  return out;
}

struct SumStabilityReport {
  std::vector<double> xi;
  /// Largest passing beta per xi (0 when none of the ladder passes).
  std::vector<double> beta;
  bool stable = false;
  std::vector<std::string> notes;
};

/**
 * For each xi, the largest beta of the halving ladder from beta0 such that
 * every u in B(xbar, beta) and v in (F+H)(u) cap B(zbar+wbar, beta) splits
 * as z + w with z in F(u) cap B(zbar, xi) and w in H(u) cap B(wbar, xi).
 */
inline SumStabilityReport sum_stability_check(const SampledMap& F, const SampledMap& H, const Point& xbar,
                                              const Point& zbar, const Point& wbar, const std::vector<double>& xis,
                                              double grid_step, double beta0 = 1.0) {
  if (!F.contains(xbar, zbar)) throw std::invalid_argument("sum_stability_check: zbar is not a value of F at xbar");
  if (!H.contains(xbar, wbar)) throw std::invalid_argument("sum_stability_check: wbar is not a value of H at xbar");
  const SampledMap S = minkowski_sum(F, H, grid_step);
  const Point sbar = zbar + wbar;
  SumStabilityReport rep;
  rep.stable = true;
  auto decomposes = [&](double beta, double xi) {
    for (std::size_t ui : S.domain_ball(xbar, ExtReal(beta))) {
      const Point& u = S.domain()[ui];
      const auto fi = F.domain().index_of(u);
      const auto hi = H.domain().index_of(u);
      for (std::size_t vj : S.values(ui)) {
        const Point& v = S.range()[vj];
        if (!(S.dy(v, sbar) < beta)) continue;
        bool split = false;
        if (fi && hi)
          for (std::size_t zj : F.values(*fi)) {
            const Point& z = F.range()[zj];
            if (!(F.dy(z, zbar) < xi)) continue;
            for (std::size_t wj : H.values(*hi)) {
              const Point& w = H.range()[wj];
              if (H.dy(w, wbar) < xi && euclidean_distance(z + w, v) <= grid_step) {
                split = true;
                break;
              }
            }
            if (split) break;
          }
        if (!split) return false;
      }
    }
    return true;
  };
  for (double xi : xis) {
    double found = 0.0;
    for (double beta = beta0; beta > grid_step; beta /= 2.0)
      if (decomposes(beta, xi)) {
        found = beta;
        break;
      }
    rep.xi.push_back(xi);
    rep.beta.push_back(found);
    if (!(found > grid_step)) rep.stable = false;
  }
  rep.notes.push_back("finite xi schedule used as a surrogate for every xi > 0");
  return rep;
}

/// sur(F+H)(xbar, zbar + wbar) >= sur F(xbar, zbar) - lip H(xbar, wbar) for sum-stable pairs.
inline InequalityReport lg_sumstable_check(const SampledMap& F, const SampledMap& H, const Point& xbar,
                                           const Point& zbar, const Point& wbar, const ModulusSearchConfig& cfg = {},
                                           const std::vector<double>& xis = {0.5, 0.25, 0.1}) {
  const SumStabilityReport st = sum_stability_check(F, H, xbar, zbar, wbar, xis, cfg.grid_step);
  if (!st.stable) throw std::invalid_argument("lg_sumstable_check: the pair is not sum-stable on the schedule");
  InequalityReport rep;
  const SampledMap S = minkowski_sum(F, H, cfg.grid_step);
  const ModulusReport rF = estimate_modulus(F, xbar, zbar, ModulusKind::sur, cfg);
  const ModulusReport rS = estimate_modulus(S, xbar, zbar + wbar, ModulusKind::sur, cfg);
  const double gamma = std::max(rF.gamma, rS.gamma);
  const GammaLevel lf = detail::level_or_reported(rF, gamma);
  const GammaLevel ls = detail::level_or_reported(rS, gamma);
  const LipschitzEstimate lip = estimate_lip(H, xbar, wbar, 2.0 * gamma, 2.0 * gamma);
  rep.rows.push_back({"sur F", lf.lower, lf.upper});
  rep.rows.push_back({"lip H", lip.value, ExtReal(lip.value)});
  rep.rows.push_back({"sur (F+H)", ls.lower, ls.upper});
  detail::note_resolution(rep, "sur F", rF);
  detail::note_resolution(rep, "sur (F+H)", rS);
  rep.lhs = ls.lower;
  rep.rhs = lf.lower - lip.value;
  rep.tol = lg_tolerance(cfg.grid_step, lf.lower + lip.value);
  if (lf.upper.is_infinite()) {
    rep.inconclusive = true;
    rep.notes.push_back("sur F exceeds the search bracket");
    return rep;
  }
  rep.holds = rep.lhs >= rep.rhs - rep.tol;
  return rep;
}

/// Global sequence bound kappa / (1 - kappa ell) with kappa = 1/c.
inline double global_sequence_bound(double kappa, double ell) {
  if (!(kappa > 0.0 && ell >= 0.0 && kappa * ell < 1.0))
    throw std::invalid_argument("global_sequence_bound: need kappa > 0 and kappa ell < 1");
  return kappa / (1.0 - kappa * ell);
}

}  // namespace almostreg
