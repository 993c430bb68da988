#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "almostreg/expression.hpp"
#include "almostreg/ext_real.hpp"
#include "almostreg/linear.hpp"
#include "almostreg/regularity.hpp"
#include "almostreg/sampled_map.hpp"
#include "almostreg/spaces.hpp"

namespace almostreg {

using json = nlohmann::ordered_json;

/// Scenario content that does not match its schema; `path` names the field.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// JSON value together with its dotted path, for schema errors that name the field.
class Field {
 public:
  Field(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const { throw SchemaError(path_, what); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Field operator[](const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    const auto it = j_->find(key);
    if (it == j_->end()) throw SchemaError(child_path(key), "required field is missing");
    return Field(*it, child_path(key));
  }

  std::optional<Field> opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return (*this)[key];
  }

  Field at(std::size_t i) const { return Field((*j_)[i], path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (j_->is_number()) return j_->get<double>();
    if (j_->is_string()) {
      const auto s = j_->get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
    }
    fail("expected a number");
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("expected a positive number");
    return v;
  }

  ExtReal ext() const {
    const double v = number();
    if (v < 0.0) fail("expected a nonnegative number or \"inf\"");
    return ExtReal(v);
  }

  std::size_t count() const {
    if (!j_->is_number_integer() || j_->get<long long>() < 0) fail("expected a nonnegative integer");
    return j_->get<std::size_t>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  /// A number is a 1-d point; an array of numbers is a point.
  Point point() const {
    if (j_->is_number()) return {number()};
    if (!j_->is_array() || j_->empty()) fail("expected a number or a nonempty array of numbers");
    Point p;
    for (std::size_t i = 0; i < j_->size(); ++i) p.push_back(at(i).number());
    return p;
  }

  std::vector<Point> points() const {
    std::vector<Point> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).point());
    return out;
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* j_;
  std::string path_;
};

namespace schema {

inline Expression expression(const Field& f, const VariableMap& vars) {
  try {
    return Expression::compile(f.string(), vars);
  } catch (const ExpressionError& e) {
    f.fail(e.what());
  }
}

/// Array of points, or {"lo", "hi", "step"} for a product grid.
inline PointCloud cloud(const Field& f) {
  try {
    if (f.raw().is_object()) return PointCloud::grid(f["lo"].point(), f["hi"].point(), f["step"].positive());
    return PointCloud(f.points());
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    f.fail(e.what());
  }
}

/// Scalar expression for 1-d values, array of expressions for vector values.
inline std::function<Point(const Point&)> vector_function(const Field& f, std::size_t dim) {
  const VariableMap vars = coordinate_variables("x", dim);
  if (f.raw().is_string()) {
    const Expression e = expression(f, vars);
    return [e](const Point& x) { return Point{e(x)}; };
  }
  std::vector<Expression> parts;
  for (std::size_t i = 0; i < f.size(); ++i) parts.push_back(expression(f.at(i), vars));
  if (parts.empty()) f.fail("expected at least one component");
  return [parts](const Point& x) {
    Point y;
    for (const Expression& e : parts) y.push_back(e(x));
    return y;
  };
}

inline AxiomSet axiom_set(const Field& f) {
  AxiomSet s;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const std::string a = f.at(i).string();
    if (a == "A1") s.set(0);
    else if (a == "A2") s.set(1);
    else if (a == "A3") s.set(2);
    else if (a == "A4") s.set(3);
    else f.at(i).fail("unknown axiom '" + a + "'");
  }
  return s;
}

/**
 * "euclidean" | "chebyshev" | "positive-part" or an object with "type":
 * directional {directions, convex}, partial {zeta}, expression {expr, axioms},
 * conjugate {of}, scaled {factor, of}. Partial metrics are validated on `cloud`.
 */
inline QuasiPremetric premetric(const Field& f, std::size_t dim, const PointCloud* cloud) {
  if (f.raw().is_string()) {
    const std::string name = f.string();
    if (name == "euclidean") return euclidean_metric();
    if (name == "chebyshev") return chebyshev_metric();
    if (name == "positive-part") {
      if (dim != 1) f.fail("positive-part needs 1-d points");
      return positive_part();
    }
    f.fail("unknown premetric '" + name + "'");
  }
  const std::string type = f["type"].string();
  if (type == "directional") {
    try {
      DirectionSet L(f["directions"].points());
      const bool convex = f.opt("convex") ? f["convex"].boolean() : false;
      return directional_premetric(L, convex);
    } catch (const SchemaError&) {
      throw;
    } catch (const std::exception& e) {
      f["directions"].fail(e.what());
    }
  }
  if (type == "partial") {
    const Expression z = expression(f["zeta"], pair_variables(dim));
    const PartialMetric zeta = [z](const Point& x, const Point& u) {
      Point xu = x;
      xu.insert(xu.end(), u.begin(), u.end());
      return z(xu);
    };
    if (!cloud) f.fail("partial metric needs a cloud");
    return induce_from_partial(zeta, *cloud);
  }
  if (type == "expression") {
    const Expression e = expression(f["expr"], pair_variables(dim));
    const AxiomSet s = f.opt("axioms") ? axiom_set(f["axioms"]) : AxiomSet{};
    return QuasiPremetric(
        [e](const Point& x, const Point& u) {
          Point xu = x;
          xu.insert(xu.end(), u.begin(), u.end());
          const double v = e(xu);
          return std::isinf(v) ? kInf : ExtReal(std::max(0.0, v));
        },
        s, e.text());
  }
  if (type == "conjugate") return conjugate(premetric(f["of"], dim, cloud));
  if (type == "scaled") return scaled(f["factor"].positive(), premetric(f["of"], dim, cloud));
  f["type"].fail("unknown premetric type '" + type + "'");
}

/**
 * Sampled map: {"domain": cloud, "branches": [expr | [expr...] | {expr, where}]}
 * or {"pairs": [[x, y], ...]}. A branch with "where" only applies where that
 * expression is nonnegative.
 */
inline SampledMap sampled_map(const Field& f) {
  if (f.has("pairs")) {
    const Field pf = f["pairs"];
    std::vector<std::pair<Point, Point>> pts;
    for (std::size_t i = 0; i < pf.size(); ++i) {
      const Field pair = pf.at(i);
      if (pair.size() != 2) pair.fail("expected [x, y]");
      pts.emplace_back(pair.at(0).point(), pair.at(1).point());
    }
    if (pts.empty()) pf.fail("graph is empty");
    SampledMap m = SampledMap::from_pairs(pts);
    if (f.has("domain")) {
      try {
        m = m.with_domain(cloud(f["domain"]));
      } catch (const SchemaError&) {
        throw;
      } catch (const std::exception& e) {
        f["domain"].fail(e.what());
      }
    }
    return m;
  }
  const PointCloud dom = cloud(f["domain"]);
  const Field bf = f["branches"];
  std::vector<std::function<std::optional<Point>(const Point&)>> branches;
  for (std::size_t i = 0; i < bf.size(); ++i) {
    const Field b = bf.at(i);
    if (b.raw().is_object()) {
      auto fn = vector_function(b["expr"], dom.dim());
      const Expression where = expression(b["where"], coordinate_variables("x", dom.dim()));
      branches.push_back([fn, where](const Point& x) -> std::optional<Point> {
        if (where(x) < 0.0) return std::nullopt;
        return fn(x);
      });
    } else {
      auto fn = vector_function(b, dom.dim());
      branches.push_back([fn](const Point& x) { return std::optional<Point>(fn(x)); });
    }
  }
  if (branches.empty()) bf.fail("expected at least one branch");
  try {
    return SampledMap::from_branches(dom, branches);
  } catch (const std::exception& e) {
    bf.fail(e.what());
  }
}

/// Number, "inf", or an expression in the domain coordinates.
inline GammaFn gamma(const Field& f, std::size_t dim) {
  if (f.raw().is_number() || (f.raw().is_string() && f.string() == "inf")) return constant_gamma(f.ext());
  const Expression e = expression(f, coordinate_variables("x", dim));
  return [e](const Point& x) {
    const double v = e(x);
    return std::isinf(v) ? kInf : ExtReal(std::max(0.0, v));
  };
}

/// "all", an explicit point list, or {"center", "radius"} (open ball).
inline std::vector<std::size_t> domain_subset(const Field& f, const SampledMap& m) {
  if (f.raw().is_string()) {
    if (f.string() != "all") f.fail("expected \"all\", a point list or a ball");
    return m.all_domain();
  }
  if (f.raw().is_object()) return m.domain_ball(f["center"].point(), f["radius"].ext());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto idx = m.domain().index_of(f.at(i).point());
    if (!idx) f.at(i).fail("point is not in the domain cloud");
    out.push_back(*idx);
  }
  return out;
}

/// "all" (the range cloud), an explicit point list, or {"center", "radius"} on the range cloud.
inline std::vector<Point> range_subset(const Field& f, const SampledMap& m) {
  if (f.raw().is_string()) {
    if (f.string() != "all") f.fail("expected \"all\", a point list or a ball");
    return m.range().points();
  }
  if (f.raw().is_object()) return m.range_ball(f["center"].point(), f["radius"].ext());
  return f.points();
}

inline DenseMatrix matrix(const Field& f) {
  std::vector<double> entries;
  const std::size_t rows = f.size();
  if (rows == 0) f.fail("matrix has no rows");
  const std::size_t cols = f.at(0).size();
  for (std::size_t i = 0; i < rows; ++i) {
    const Field row = f.at(i);
    if (row.size() != cols) row.fail("rows differ in length");
    for (std::size_t j = 0; j < cols; ++j) entries.push_back(row.at(j).number());
  }
  try {
    return DenseMatrix(rows, cols, std::move(entries));
  } catch (const std::exception& e) {
    f.fail(e.what());
  }
}

inline NormKind norm_kind(const Field& f) {
  const std::string s = f.string();
  if (s == "euclidean") return NormKind::euclidean;
  if (s == "sup") return NormKind::sup;
  if (s == "one") return NormKind::one;
  f.fail("unknown norm '" + s + "'");
}

inline ModulusKind modulus_kind(const Field& f) {
  const auto k = modulus_kind_from_string(f.string());
  if (!k) f.fail("unknown modulus kind '" + f.string() + "'");
  return *k;
}

}  // namespace schema

// ---------------------------------------------------------------------------
// Result encoding

/// Finite numbers rounded to 12 significant digits; infinities as "inf".
inline json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

inline json num(const ExtReal& v) { return num(v.to_double()); }

inline json point_json(const Point& p) {
  if (p.size() == 1) return num(p[0]);
  json a = json::array();
  for (double v : p) a.push_back(num(v));
  return a;
}

inline json points_json(const std::vector<Point>& ps) {
  json a = json::array();
  for (const Point& p : ps) a.push_back(point_json(p));
  return a;
}

}  // namespace almostreg
