#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "almostreg/ext_real.hpp"
#include "almostreg/spaces.hpp"

namespace almostreg {

using Objective = std::function<ExtReal(const Point&)>;

/// Objective given as one value per cloud point; off-cloud points evaluate to +inf.
inline Objective objective_from_table(const PointCloud& cloud, std::vector<ExtReal> values) {
  if (values.size() != cloud.size()) throw std::invalid_argument("objective table size differs from cloud size");
  return [cloud, values = std::move(values)](const Point& p) {
    const auto i = cloud.index_of(p);
    return i ? values[*i] : kInf;
  };
}

enum class TraceTermination { alpha_infinite, budget_exhausted };

inline const char* to_string(TraceTermination t) {
  return t == TraceTermination::alpha_infinite ? "alpha-infinite" : "budget-exhausted";
}

struct EkelandTrace {
  std::vector<Point> points;
  /// Cloud index of each point; nullopt for an off-cloud start.
  std::vector<std::optional<std::size_t>> indices;
  std::vector<ExtReal> values;
  std::vector<ExtReal> alphas;
  std::vector<double> slack;
  TraceTermination termination = TraceTermination::alpha_infinite;

  std::size_t size() const { return points.size(); }
};

namespace detail {

inline void require_a2(const QuasiPremetric& eta) {
  if (!eta.claims(Axiom::A2)) throw std::invalid_argument("premetric does not claim the triangle axiom A2");
}

inline std::vector<ExtReal> tabulate(const Objective& phi, const PointCloud& cloud) {
  std::vector<ExtReal> v;
  v.reserve(cloud.size());
  for (const Point& p : cloud) v.push_back(phi(p));
  return v;
}

}  // namespace detail

/**
 * Exact descent sequence on a finite cloud. At step k the infimum
 * alpha_k of phi over the points u' with phi(u') + eta(u', u_k) < phi(u_k)
 * is found by exhaustive scan; the next point is the lowest-index minimizer.
 * Stops when alpha_k is +inf or after `budget` steps (default 10 * |cloud|).
 */
inline EkelandTrace generate_trace(const PointCloud& cloud, const QuasiPremetric& eta, const Objective& phi,
                                   const Point& x, std::optional<std::size_t> budget = std::nullopt) {
  detail::require_a2(eta);
  const ExtReal phi_x = phi(x);
  if (!(phi_x > ExtReal(0.0)) || phi_x.is_infinite())
    throw std::invalid_argument("generate_trace: phi(x) must lie in (0, inf)");
  const std::size_t max_steps = budget.value_or(10 * cloud.size());
  const std::vector<ExtReal> values = detail::tabulate(phi, cloud);

  EkelandTrace tr;
  tr.points.push_back(x);
  tr.indices.push_back(cloud.index_of(x));
  tr.values.push_back(phi_x);
  tr.termination = TraceTermination::budget_exhausted;
  for (std::size_t k = 1; k <= max_steps; ++k) {
    const Point& uk = tr.points.back();
    const ExtReal phi_uk = tr.values.back();
    ExtReal alpha = kInf;
    std::optional<std::size_t> argmin;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (values[i] + eta(cloud[i], uk) < phi_uk && values[i] < alpha) {
        alpha = values[i];
        argmin = i;
      }
    }
    tr.alphas.push_back(alpha);
    tr.slack.push_back(1.0 / static_cast<double>(k));
    if (!argmin) {
      tr.termination = TraceTermination::alpha_infinite;
      break;
    }
    tr.points.push_back(cloud[*argmin]);
    tr.indices.push_back(*argmin);
    tr.values.push_back(values[*argmin]);
  }
  return tr;
}

struct TraceVerification {
  bool pairs_ok = true;
  /// (k, j) index pairs, 1-based, where phi(u_j) + eta(u_j,u_k) < phi(u_k) fails.
  std::vector<std::pair<std::size_t, std::size_t>> pair_violations;
  /// Least 1-based n with eps-stationarity at every k >= n; nullopt if none.
  std::optional<std::size_t> n;
  /// For each k < n: a cloud index u' with phi(u') + eta(u', u_k) <= phi(u_k) - eps.
  std::vector<std::pair<std::size_t, std::size_t>> stationarity_witnesses;
};

namespace detail {

/// phi(u') + eta(u',u) > phi(u) - eps for every cloud point; returns a violating index otherwise.
inline std::optional<std::size_t> first_non_stationary(const PointCloud& cloud, const std::vector<ExtReal>& values,
                                                       const QuasiPremetric& eta, const Point& u,
                                                       const ExtReal& phi_u, double eps) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ExtReal lhs = values[i] + eta(cloud[i], u);
    if (lhs.is_infinite()) continue;
    if (phi_u.is_infinite()) return i;
    if (!(lhs.value() > phi_u.value() - eps)) return i;
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks the pairwise descent law of the trace and finds the least eps-stationary index.
inline TraceVerification verify_trace(const PointCloud& cloud, const EkelandTrace& trace, const QuasiPremetric& eta,
                                      const Objective& phi, double epsilon) {
  if (trace.points.empty()) throw std::invalid_argument("verify_trace: empty trace");
  const ExtReal phi1 = phi(trace.points.front());
  if (!(epsilon > 0.0) || !(ExtReal(epsilon) < phi1))
    throw std::invalid_argument("verify_trace: epsilon must lie in (0, phi(u_1))");
  TraceVerification rep;
  const std::size_t N = trace.size();
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t j = k + 1; j < N; ++j)
      if (!(phi(trace.points[j]) + eta(trace.points[j], trace.points[k]) < phi(trace.points[k])))
        rep.pair_violations.emplace_back(k + 1, j + 1);
  rep.pairs_ok = rep.pair_violations.empty();

  const std::vector<ExtReal> values = detail::tabulate(phi, cloud);
  std::vector<std::optional<std::size_t>> bad(N);
  for (std::size_t k = 0; k < N; ++k)
    bad[k] = detail::first_non_stationary(cloud, values, eta, trace.points[k], phi(trace.points[k]), epsilon);
  // least n such that every k >= n is stationary
  std::size_t n = N;
  while (n > 0 && !bad[n - 1]) --n;
  if (n < N || !bad[N - 1]) rep.n = n + 1;
  for (std::size_t k = 0; k < N; ++k)
    if (bad[k]) rep.stationarity_witnesses.emplace_back(k + 1, *bad[k]);
  return rep;
}

struct EkelandCertificate {
  Point point;
  std::optional<std::size_t> index;
  double epsilon = 0.0;
  bool descent_ok = false;
  bool stationarity_ok = false;
  /// Cloud indices violating stationarity, if any.
  std::vector<std::size_t> witnesses;
  /// Index in the trace (1-based) of the returned point.
  std::size_t trace_position = 1;
};

namespace detail {

inline bool descent_holds(const QuasiPremetric& eta, const Objective& phi, const Point& u, const Point& x) {
  return phi(u) + eta(u, x) <= phi(x) + eta(x, x);
}

inline void check_start(const QuasiPremetric& eta, const Objective& phi, const Point& x) {
  require_a2(eta);
  if (eta(x, x).is_infinite()) throw std::invalid_argument("eta(x,x) must be finite");
  const ExtReal px = phi(x);
  if (!(px > ExtReal(0.0)) || px.is_infinite()) throw std::invalid_argument("phi(x) must lie in (0, inf)");
}

}  // namespace detail

/**
 * Point u with phi(u) + eta(u,x) <= phi(x) + eta(x,x) and
 * phi(u') + eta(u',u) > phi(u) - eps for every cloud point u'.
 * Returns u_1 for a one-point trace, otherwise u_max{2, n(eps)}.
 */
inline EkelandCertificate approx_point(const PointCloud& cloud, const QuasiPremetric& eta, const Objective& phi,
                                       const Point& x, double epsilon) {
  detail::check_start(eta, phi, x);
  if (!(epsilon > 0.0) || !(ExtReal(epsilon) < phi(x)))
    throw std::invalid_argument("approx_point: epsilon must lie in (0, phi(x))");
  const EkelandTrace tr = generate_trace(cloud, eta, phi, x);
  std::size_t pos = 1;
  if (tr.size() > 1) {
    const TraceVerification ver = verify_trace(cloud, tr, eta, phi, epsilon);
    if (!ver.n) throw std::runtime_error("approx_point: budget exhausted before eps-stationarity");
    pos = std::max<std::size_t>(2, *ver.n);
  }
  EkelandCertificate cert;
  cert.point = tr.points[pos - 1];
  cert.index = tr.indices[pos - 1];
  cert.epsilon = epsilon;
  cert.trace_position = pos;
  cert.descent_ok = detail::descent_holds(eta, phi, cert.point, x);
  const std::vector<ExtReal> values = detail::tabulate(phi, cloud);
  const ExtReal phi_u = phi(cert.point);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ExtReal lhs = values[i] + eta(cloud[i], cert.point);
    if (lhs.is_infinite()) continue;
    if (!(lhs.value() > phi_u.value() - epsilon)) cert.witnesses.push_back(i);
  }
  cert.stationarity_ok = cert.witnesses.empty();
  return cert;
}

/**
 * Terminal point of the descent sequence: phi(u) + eta(u,x) <= phi(x) + eta(x,x)
 * and phi(u') + eta(u',u) >= phi(u) for every cloud point u'.
 *
 * @throws std::runtime_error if the budget runs out first.
 */
inline EkelandCertificate weak_point(const PointCloud& cloud, const QuasiPremetric& eta, const Objective& phi,
                                     const Point& x, std::optional<std::size_t> budget = std::nullopt) {
  detail::check_start(eta, phi, x);
  const EkelandTrace tr = generate_trace(cloud, eta, phi, x, budget);
  if (tr.termination != TraceTermination::alpha_infinite)
    throw std::runtime_error("weak_point: budget exhausted without termination");
  EkelandCertificate cert;
  cert.point = tr.points.back();
  cert.index = tr.indices.back();
  cert.trace_position = tr.size();
  cert.descent_ok = detail::descent_holds(eta, phi, cert.point, x);
  const ExtReal phi_u = phi(cert.point);
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (phi(cloud[i]) + eta(cloud[i], cert.point) < phi_u) cert.witnesses.push_back(i);
  cert.stationarity_ok = cert.witnesses.empty();
  return cert;
}

struct TwoConstantReport {
  Point point;
  std::optional<std::size_t> index;
  double inf_phi = 0.0;
  bool a_ok = false;  ///< phi(u) + (delta/r) eta(u,x) <= phi(x) + (delta/r) eta(x,x)
  bool b_ok = false;  ///< phi(u') + (delta/r) eta(u',u) >= phi(u) for all u'
  bool c_ok = false;  ///< eta(u,x) <= r + eta(x,x)
};

/**
 * Weak point of phi - inf phi under the scaled premetric (delta/r) eta,
 * with the three conclusions re-verified on the original data.
 */
inline TwoConstantReport two_constant_point(const PointCloud& cloud, const QuasiPremetric& eta,
                                            const std::function<double(const Point&)>& phi, const Point& x,
                                            double delta, double r) {
  if (!(delta > 0.0) || !(r > 0.0)) throw std::invalid_argument("two_constant_point: delta and r must be positive");
  double inf_phi = std::numeric_limits<double>::infinity();
  for (const Point& p : cloud) inf_phi = std::min(inf_phi, phi(p));
  if (!std::isfinite(inf_phi)) throw std::invalid_argument("two_constant_point: inf phi must be finite");
  const double phi_x = phi(x);
  if (!(phi_x > inf_phi)) throw std::invalid_argument("two_constant_point: phi(x) must exceed inf phi");
  if (phi_x > inf_phi + delta) throw std::invalid_argument("two_constant_point: phi(x) > inf phi + delta");

  const double k = delta / r;
  const QuasiPremetric steep = scaled(k, eta);
  const Objective shifted = [&phi, inf_phi](const Point& p) { return ExtReal(std::max(0.0, phi(p) - inf_phi)); };
  const EkelandCertificate w = weak_point(cloud, steep, shifted, x);

  TwoConstantReport rep;
  rep.point = w.point;
  rep.index = w.index;
  rep.inf_phi = inf_phi;
  const Point& u = w.point;
  const ExtReal su = steep(u, x);
  rep.a_ok = su.is_finite() && phi(u) + su.value() <= phi_x + steep(x, x).value();
  rep.b_ok = true;
  for (const Point& v : cloud) {
    const ExtReal s = steep(v, u);
    if (s.is_finite() && phi(v) + s.value() < phi(u)) rep.b_ok = false;
  }
  rep.c_ok = eta(u, x) <= ExtReal(r) + eta(x, x);
  return rep;
}

}  // namespace almostreg
