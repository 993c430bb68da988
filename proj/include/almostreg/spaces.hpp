#pragma once

#include <algorithm>
#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "almostreg/ext_real.hpp"

namespace almostreg {

using Point = std::vector<double>;

inline void require_same_dim(const Point& a, const Point& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
}

inline double euclidean_norm(const Point& p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return std::sqrt(s);
}

inline double euclidean_distance(const Point& a, const Point& b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline Point operator+(const Point& a, const Point& b) {
  require_same_dim(a, b);
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Point operator-(const Point& a, const Point& b) {
  require_same_dim(a, b);
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Point operator*(double k, const Point& a) {
  Point r(a);
  for (double& v : r) v *= k;
  return r;
}

/// Finite indexed set of points of one dimension, optionally labelled.
class PointCloud {
 public:
  PointCloud() = default;

  explicit PointCloud(std::vector<Point> points, std::vector<std::string> labels = {})
      : points_(std::move(points)), labels_(std::move(labels)) {
    if (points_.empty()) throw std::invalid_argument("PointCloud: empty");
    for (const Point& p : points_) require_same_dim(points_.front(), p);
    if (!labels_.empty() && labels_.size() != points_.size())
      throw std::invalid_argument("PointCloud: label count differs from point count");
  }

  /// Product grid lo..hi with the given step in every coordinate.
  static PointCloud grid(const Point& lo, const Point& hi, double step) {
    require_same_dim(lo, hi);
    if (!(step > 0.0)) throw std::invalid_argument("PointCloud::grid: step must be positive");
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const auto n = static_cast<long>(std::floor((hi[i] - lo[i]) / step + 1e-9));
      if (n < 0) throw std::invalid_argument("PointCloud::grid: hi < lo");
      std::vector<double> axis;
      for (long k = 0; k <= n; ++k) axis.push_back(lo[i] + static_cast<double>(k) * step);
      axes.push_back(std::move(axis));
    }
    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.size();
    std::vector<Point> pts;
    pts.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
      Point p(axes.size());
      std::size_t rest = flat;
      for (std::size_t i = axes.size(); i-- > 0;) {
        p[i] = axes[i][rest % axes[i].size()];
        rest /= axes[i].size();
      }
      pts.push_back(std::move(p));
    }
    return PointCloud(std::move(pts));
  }

  static PointCloud line(double lo, double hi, double step) { return grid({lo}, {hi}, step); }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.empty() ? 0 : points_.front().size(); }
  const Point& operator[](std::size_t i) const { return points_.at(i); }
  const std::vector<Point>& points() const { return points_; }
  const std::vector<std::string>& labels() const { return labels_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  std::optional<std::size_t> index_of(const Point& p) const {
    for (std::size_t i = 0; i < points_.size(); ++i)
      if (points_[i] == p) return i;
    return std::nullopt;
  }

  bool has_duplicates() const {
    std::vector<Point> sorted = points_;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (std::size_t j = i + 1; j < points_.size(); ++j)
        d = std::max(d, euclidean_distance(points_[i], points_[j]));
    return d;
  }

 private:
  std::vector<Point> points_;
  std::vector<std::string> labels_;
};

enum class Axiom { A1 = 0, A2 = 1, A3 = 2, A4 = 3 };

using AxiomSet = std::bitset<4>;

inline AxiomSet axioms(std::initializer_list<Axiom> list) {
  AxiomSet s;
  for (Axiom a : list) s.set(static_cast<std::size_t>(a));
  return s;
}

inline const char* axiom_name(Axiom a) {
  static constexpr std::array<const char*, 4> names{"A1", "A2", "A3", "A4"};
  return names[static_cast<std::size_t>(a)];
}

/// Extended-nonnegative two-point function with a declared set of axioms.
class QuasiPremetric {
 public:
  using Fn = std::function<ExtReal(const Point&, const Point&)>;

  QuasiPremetric() = default;
  QuasiPremetric(Fn fn, AxiomSet claimed, std::string name = "custom")
      : fn_(std::make_shared<Fn>(std::move(fn))), claimed_(claimed), name_(std::move(name)) {}

  ExtReal operator()(const Point& x, const Point& u) const {
    require_same_dim(x, u);
    return (*fn_)(x, u);
  }

  bool claims(Axiom a) const { return claimed_.test(static_cast<std::size_t>(a)); }
  AxiomSet claimed() const { return claimed_; }
  const std::string& name() const { return name_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  std::shared_ptr<const Fn> fn_;
  AxiomSet claimed_;
  std::string name_;
};

inline ExtReal eval_eta(const QuasiPremetric& eta, const Point& x, const Point& u) {
  return eta(x, u);
}

inline QuasiPremetric euclidean_metric() {
  return QuasiPremetric([](const Point& x, const Point& u) { return ExtReal(euclidean_distance(x, u)); },
                        axioms({Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4}), "euclidean");
}

/// Sup-norm distance.
inline QuasiPremetric chebyshev_metric() {
  return QuasiPremetric(
      [](const Point& x, const Point& u) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - u[i]));
        return ExtReal(m);
      },
      axioms({Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4}), "chebyshev");
}

/// eta(x,u) = (u - x)_+ on the real line.
inline QuasiPremetric positive_part() {
  return QuasiPremetric(
      [](const Point& x, const Point& u) {
        if (x.size() != 1) throw std::invalid_argument("positive_part: points must be 1-dimensional");
        return ExtReal(std::max(0.0, u[0] - x[0]));
      },
      axioms({Axiom::A1, Axiom::A2}), "positive-part");
}

/// k * eta for k > 0; the axiom claims are unchanged.
inline QuasiPremetric scaled(double k, const QuasiPremetric& eta) {
  if (!(k > 0.0) || std::isinf(k)) throw std::invalid_argument("scaled: factor must be positive and finite");
  return QuasiPremetric([k, eta](const Point& x, const Point& u) { return ExtReal(k) * eta(x, u); },
                        eta.claimed(), eta.name() + "*" + std::to_string(k));
}

/// eta*(x,u) = eta(u,x). A1-A3 claims carry over, A4 is dropped.
inline QuasiPremetric conjugate(const QuasiPremetric& eta) {
  AxiomSet s = eta.claimed();
  s.reset(static_cast<std::size_t>(Axiom::A4));
  return QuasiPremetric([eta](const Point& x, const Point& u) { return eta(u, x); }, s,
                        "conjugate(" + eta.name() + ")");
}

/// Finite set of Euclidean unit vectors.
class DirectionSet {
 public:
  explicit DirectionSet(std::vector<Point> directions) : dirs_(std::move(directions)) {
    if (dirs_.empty()) throw std::invalid_argument("DirectionSet: empty");
    for (const Point& d : dirs_) {
      require_same_dim(dirs_.front(), d);
      if (std::abs(euclidean_norm(d) - 1.0) > 1e-12)
        throw std::invalid_argument("DirectionSet: direction is not a unit vector");
    }
  }

  DirectionSet negated() const {
    std::vector<Point> neg;
    for (const Point& d : dirs_) neg.push_back(-1.0 * d);
    return DirectionSet(std::move(neg));
  }

  std::size_t dim() const { return dirs_.front().size(); }
  const std::vector<Point>& directions() const { return dirs_; }

 private:
  std::vector<Point> dirs_;
};

inline constexpr double kCollinearityTol = 1e-9;

/// Relative slack for triangle-type inequalities: one-ulp rounding of a sum
/// of distances must not read as a violation.
inline constexpr double kTriangleRelTol = 1e-12;

/// lhs > rhs beyond the relative rounding slack.
inline bool exceeds(const ExtReal& lhs, const ExtReal& rhs, double rel_tol) {
  if (rhs.is_infinite()) return false;
  if (lhs.is_infinite()) return true;
  return lhs.value() > rhs.value() + rel_tol * (1.0 + rhs.value());
}

/// Minimal time to reach u from x moving along a listed direction:
/// ||u - x|| when u - x is a nonnegative multiple of some direction, 0 if u = x, else +inf.
inline ExtReal directional_time(const DirectionSet& L, const Point& x, const Point& u) {
  require_same_dim(x, u);
  if (x.size() != L.dim()) throw std::invalid_argument("directional_time: dimension mismatch with directions");
  if (x == u) return ExtReal(0.0);
  const Point w = u - x;
  const double n = euclidean_norm(w);
  for (const Point& l : L.directions()) {
    double dev = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) dev = std::max(dev, std::abs(w[i] / n - l[i]));
    if (dev <= kCollinearityTol) return ExtReal(n);
  }
  return kInf;
}

/// T_L as a premetric. A1 and A3 always hold; A2 is claimed only when the
/// caller asserts that cone L is convex.
inline QuasiPremetric directional_premetric(const DirectionSet& L, bool cone_is_convex) {
  AxiomSet s = axioms({Axiom::A1, Axiom::A3});
  if (cone_is_convex) s.set(static_cast<std::size_t>(Axiom::A2));
  return QuasiPremetric([L](const Point& x, const Point& u) { return directional_time(L, x, u); }, s,
                        "directional-time");
}

using PartialMetric = std::function<double(const Point&, const Point&)>;

/// Rejection of a partial metric on a cloud, with the offending indices.
class PartialMetricViolation : public std::invalid_argument {
 public:
  PartialMetricViolation(const std::string& what, std::array<std::size_t, 3> triple)
      : std::invalid_argument(what), triple_(triple) {}
  std::array<std::size_t, 3> triple() const { return triple_; }

 private:
  std::array<std::size_t, 3> triple_;
};

/**
 * eta(x,u) = zeta(x,u) - zeta(x,x), after verifying on the cloud that
 * zeta(x,x) <= zeta(x,u) and zeta(x,u) <= zeta(x,z) + zeta(z,u) - zeta(z,z).
 *
 * @throws PartialMetricViolation with the witness triple (x, z, u) as cloud indices.
 */
inline QuasiPremetric induce_from_partial(const PartialMetric& zeta, const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  std::vector<double> z(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) z[i * n + j] = zeta(cloud[i], cloud[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (z[i * n + j] < 0.0) throw PartialMetricViolation("partial metric: negative value", {i, i, j});
      if (z[i * n + i] > z[i * n + j])
        throw PartialMetricViolation("partial metric: self-distance exceeds distance", {i, i, j});
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j)
        if (z[i * n + j] > z[i * n + k] + z[k * n + j] - z[k * n + k] +
                              kTriangleRelTol * (1.0 + std::abs(z[i * n + k] + z[k * n + j])))
          throw PartialMetricViolation("partial metric: triangle inequality fails", {i, k, j});
  return QuasiPremetric(
      [zeta](const Point& x, const Point& u) { return ExtReal(std::max(0.0, zeta(x, u) - zeta(x, x))); },
      axioms({Axiom::A1, Axiom::A2}), "partial-induced");
}

/// Cloud indices of the eta-ball around x: open uses eta(x,u) < r, closed uses <=.
inline std::vector<std::size_t> eta_ball(const QuasiPremetric& eta, const PointCloud& cloud, const Point& x,
                                         const ExtReal& r, bool closed) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (r.is_infinite()) {
      out.push_back(i);
      continue;
    }
    const ExtReal d = eta(x, cloud[i]);
    if (closed ? d <= r : d < r) out.push_back(i);
  }
  return out;
}

enum class AxiomStatus { holds, violated, not_assessed };

inline const char* to_string(AxiomStatus s) {
  switch (s) {
    case AxiomStatus::holds: return "holds";
    case AxiomStatus::violated: return "violated";
    default: return "not assessed";
  }
}

struct AxiomResult {
  AxiomStatus status = AxiomStatus::not_assessed;
  /// Violating index tuples: (x) for A1, (u, z, x) for A2, (u, x) for A3, (sequence) for A4.
  std::vector<std::vector<std::size_t>> violations;
};

struct AxiomReport {
  std::array<AxiomResult, 4> results;
  const AxiomResult& operator[](Axiom a) const { return results[static_cast<std::size_t>(a)]; }
};

struct SequenceCheckConfig {
  double tolerance = 1e-9;
  /// Fraction of each finite sequence treated as its tail.
  double tail_fraction = 0.5;
  /// Relative rounding slack for the triangle inequality.
  double triangle_rel_tol = kTriangleRelTol;
};

/**
 * Checks A1 and A3 on all points and pairs and A2 on all ordered triples.
 * A4 is checked only on the supplied index sequences; a sequence whose tail
 * is Cauchy within tolerance needs a cloud point u with eta(u, u_k) within
 * tolerance along the tail. Without sequences A4 stays "not assessed".
 */
inline AxiomReport check_axioms(const QuasiPremetric& eta, const PointCloud& cloud,
                                const std::vector<std::vector<std::size_t>>& sequences = {},
                                const SequenceCheckConfig& cfg = {}) {
  const std::size_t n = cloud.size();
  std::vector<ExtReal> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = eta(cloud[i], cloud[j]);
  auto at = [&](std::size_t i, std::size_t j) -> const ExtReal& { return m[i * n + j]; };

  AxiomReport rep;
  auto& a1 = rep.results[0];
  auto& a2 = rep.results[1];
  auto& a3 = rep.results[2];
  auto& a4 = rep.results[3];
  for (std::size_t i = 0; i < n; ++i)
    if (!(at(i, i) == ExtReal(0.0))) a1.violations.push_back({i});
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t z = 0; z < n; ++z)
      for (std::size_t x = 0; x < n; ++x)
        if (exceeds(at(u, x), at(u, z) + at(z, x), cfg.triangle_rel_tol)) a2.violations.push_back({u, z, x});
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t x = 0; x < n; ++x)
      if (cloud[u] != cloud[x] && !(at(u, x) > ExtReal(0.0))) a3.violations.push_back({u, x});
  a1.status = a1.violations.empty() ? AxiomStatus::holds : AxiomStatus::violated;
  a2.status = a2.violations.empty() ? AxiomStatus::holds : AxiomStatus::violated;
  a3.status = a3.violations.empty() ? AxiomStatus::holds : AxiomStatus::violated;

  if (!sequences.empty()) {
    const ExtReal tol(cfg.tolerance);
    bool any_premise = false;
    for (const auto& seq : sequences) {
      for (std::size_t k : seq)
        if (k >= n) throw std::out_of_range("check_axioms: sequence index out of range");
      if (seq.empty()) continue;
      const auto tail_len = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(cfg.tail_fraction * static_cast<double>(seq.size()))));
      const std::size_t start = seq.size() - std::min(tail_len, seq.size());
      bool cauchy = true;
      for (std::size_t k = start; k < seq.size() && cauchy; ++k)
        for (std::size_t j = k + 1; j < seq.size(); ++j)
          if (!(at(seq[j], seq[k]) <= tol)) {
            cauchy = false;
            break;
          }
      if (!cauchy) continue;
      any_premise = true;
      bool has_limit = false;
      for (std::size_t u = 0; u < n && !has_limit; ++u) {
        bool ok = true;
        for (std::size_t k = start; k < seq.size() && ok; ++k) ok = at(u, seq[k]) <= tol;
        has_limit = ok;
      }
      if (!has_limit) a4.violations.push_back(seq);
    }
    if (any_premise) a4.status = a4.violations.empty() ? AxiomStatus::holds : AxiomStatus::violated;
  }
  return rep;
}

}  // namespace almostreg
