#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "almostreg/spaces.hpp"

namespace almostreg {

class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("DenseMatrix: empty shape");
    if (a_.size() != rows * cols) throw std::invalid_argument("DenseMatrix: entry count does not match shape");
    for (double v : a_)
      if (!std::isfinite(v)) throw std::invalid_argument("DenseMatrix: non-finite entry");
  }
  DenseMatrix(std::size_t rows, std::size_t cols) : DenseMatrix(rows, cols, std::vector<double>(rows * cols, 0.0)) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static DenseMatrix diagonal(const std::vector<double>& d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("DenseMatrix: no rows");
    std::vector<double> e;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) throw std::invalid_argument("DenseMatrix: ragged rows");
      e.insert(e.end(), r.begin(), r.end());
    }
    return DenseMatrix(rows.size(), rows.front().size(), std::move(e));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }
  const std::vector<double>& entries() const { return a_; }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Point apply(const Point& x) const {
    if (x.size() != cols_) throw std::invalid_argument("DenseMatrix::apply: dimension mismatch");
    Point y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) {
    a.require_same_shape(b);
    for (std::size_t k = 0; k < a.a_.size(); ++k) a.a_[k] += b.a_[k];
    return a;
  }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) {
    a.require_same_shape(b);
    for (std::size_t k = 0; k < a.a_.size(); ++k) a.a_[k] -= b.a_[k];
    return a;
  }
  friend DenseMatrix operator*(double s, DenseMatrix a) {
    for (double& v : a.a_) v *= s;
    return a;
  }

  void require_same_shape(const DenseMatrix& b) const {
    if (rows_ != b.rows_ || cols_ != b.cols_) throw std::invalid_argument("DenseMatrix: shape mismatch");
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> a_;
};

enum class NormKind { euclidean, sup, one };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::euclidean: return "euclidean";
    case NormKind::sup: return "sup";
    default: return "one";
  }
}

struct NormSpec {
  NormKind kind = NormKind::euclidean;
  std::size_t dimension = 1;

  NormSpec(NormKind k, std::size_t dim) : kind(k), dimension(dim) {
    if (dim == 0) throw std::invalid_argument("NormSpec: dimension must be at least 1");
  }

  double norm(const Point& x) const {
    double s = 0.0;
    for (double v : x) {
      switch (kind) {
        case NormKind::euclidean: s += v * v; break;
        case NormKind::sup: s = std::max(s, std::abs(v)); break;
        case NormKind::one: s += std::abs(v); break;
      }
    }
    return kind == NormKind::euclidean ? std::sqrt(s) : s;
  }

  NormSpec dual() const {
    switch (kind) {
      case NormKind::sup: return {NormKind::one, dimension};
      case NormKind::one: return {NormKind::sup, dimension};
      default: return *this;
    }
  }
};

inline void require_shape(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny) {
  if (A.cols() != nx.dimension || A.rows() != ny.dimension)
    throw std::invalid_argument("matrix shape does not match the norm dimensions");
}

/**
 * Singular values by one-sided (Hestenes) Jacobi, sorted descending.
 *
 * Columns are orthogonalized pairwise in row-cyclic order until every pair
 * satisfies |a_i . a_j| <= 1e-12 |a_i| |a_j|. Wide matrices are transposed
 * first, so min(rows, cols) values are returned.
 */
inline std::vector<double> singular_values(const DenseMatrix& A, int max_sweeps = 80) {
  const DenseMatrix M = A.rows() >= A.cols() ? A : A.transpose();
  const std::size_t m = M.rows(), n = M.cols();
  std::vector<std::vector<double>> col(n, std::vector<double>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) col[j][i] = M(i, j);
  constexpr double kTol = 1e-12;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += col[p][i] * col[p][i];
          beta += col[q][i] * col[q][i];
          gamma += col[p][i] * col[q][i];
        }
        if (std::abs(gamma) <= kTol * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double xp = col[p][i], xq = col[q][i];
          col[p][i] = c * xp - s * xq;
          col[q][i] = s * xp + c * xq;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = euclidean_norm(col[j]);
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

inline double rank_cutoff(const std::vector<double>& sv) {
  return 1e-10 * std::max(1.0, sv.empty() ? 0.0 : sv.front());
}

inline std::size_t numerical_rank(const DenseMatrix& A) {
  const auto sv = singular_values(A);
  const double cut = rank_cutoff(sv);
  return static_cast<std::size_t>(std::count_if(sv.begin(), sv.end(), [cut](double s) { return s > cut; }));
}

namespace detail {

/// Deterministic mesh of the euclidean unit sphere in R^n.
inline std::vector<Point> sphere_mesh(std::size_t n, std::size_t k) {
  std::vector<Point> pts;
  if (n == 1) return {{1.0}, {-1.0}};
  if (n == 2) {
    for (std::size_t i = 0; i < k; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
      pts.push_back({std::cos(a), std::sin(a)});
    }
    return pts;
  }
  if (n == 3) {
    // Fibonacci lattice plus the coordinate directions
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < k; ++i) {
      const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(k);
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * static_cast<double>(i);
      pts.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
  } else {
    std::mt19937_64 rng(0x5eedULL + n);
    std::normal_distribution<double> g;
    for (std::size_t i = 0; i < k; ++i) {
      Point p(n);
      for (double& v : p) v = g(rng);
      const double nrm = euclidean_norm(p);
      for (double& v : p) v /= nrm;
      pts.push_back(std::move(p));
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (double s : {1.0, -1.0}) {
      Point e(n, 0.0);
      e[i] = s;
      pts.push_back(std::move(e));
    }
  return pts;
}

/// Radial projection of a euclidean mesh onto the unit sphere of `norm`.
inline std::vector<Point> norm_sphere_mesh(const NormSpec& norm, std::size_t k) {
  std::vector<Point> pts = sphere_mesh(norm.dimension, k);
  if (norm.kind == NormKind::euclidean) return pts;
  for (Point& p : pts) {
    const double s = norm.norm(p);
    for (double& v : p) v /= s;
  }
  return pts;
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::size_t base_mesh_size(std::size_t n) { return n <= 2 ? 3600 : 4000; }

/// Refines a mesh quantity until three successive refinements move it by at most 1e-6.
template <class Eval>
double refine_until_stable(Eval&& eval, std::size_t k0, int max_doublings = 6) {
  double prev = eval(k0);
  int calm = 0;
  std::size_t k = k0;
  for (int i = 0; i < max_doublings && calm < 3; ++i) {
    k *= 2;
    const double cur = eval(k);
    calm = std::abs(cur - prev) <= 1e-6 ? calm + 1 : 0;
    prev = cur;
  }
  return prev;
}

}  // namespace detail

/// Operator norm sup{|Ax|_ny : |x|_nx <= 1}; exact for every pair of the three norms.
inline double opnorm(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny) {
  require_shape(A, nx, ny);
  const std::size_t n = A.cols();
  if (nx.kind == NormKind::one) {
    // extreme points of the unit ball are +-e_j
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      Point e(n, 0.0);
      e[j] = 1.0;
      best = std::max(best, ny.norm(A.apply(e)));
    }
    return best;
  }
  if (nx.kind == NormKind::sup) {
    if (n > 20) throw std::invalid_argument("opnorm: sup-norm domain above 20 dimensions");
    double best = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      Point s(n);
      for (std::size_t j = 0; j < n; ++j) s[j] = (mask >> j) & 1U ? 1.0 : -1.0;
      best = std::max(best, ny.norm(A.apply(s)));
    }
    return best;
  }
  switch (ny.kind) {
    case NormKind::euclidean: return singular_values(A).front();
    case NormKind::sup: {
      double best = 0.0;
      for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += A(i, j) * A(i, j);
        best = std::max(best, std::sqrt(s));
      }
      return best;
    }
    default: {
      // |A|_{2->1} = max over sign vectors s of |A^T s|_2
      const DenseMatrix At = A.transpose();
      const NormSpec e(NormKind::euclidean, n);
      return opnorm(At, NormSpec(NormKind::sup, A.rows()), e);
    }
  }
}

enum class SurMethod { svd, grid };

struct LinearModulusReport {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  SurMethod method = SurMethod::svd;
  /// Directions scanned by the grid method (0 for svd).
  std::size_t mesh_size = 0;
};

namespace detail {

/// min over directions d of max_{x in mesh of S_X} <Ax, d> / |d|_{Y*}.
inline double sur_grid_value(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny, std::size_t k) {
  const std::vector<Point> xs = norm_sphere_mesh(nx, k);
  std::vector<Point> images;
  images.reserve(xs.size());
  for (const Point& x : xs) images.push_back(A.apply(x));
  const std::vector<Point> ds = sphere_mesh(ny.dimension, k);
  const NormSpec dual = ny.dual();
  double best = std::numeric_limits<double>::infinity();
  for (const Point& d : ds) {
    double support = 0.0;
    for (const Point& y : images) support = std::max(support, dot(y, d));
    best = std::min(best, support / dual.norm(d));
  }
  return best;
}

}  // namespace detail

/**
 * Modulus sup{c > 0 : c B_Y inside closure A(B_X)}.
 *
 * svd: for euclidean norms, the rows-th singular value of A (0 when A has
 * fewer columns or deficient row rank). grid: the support function of the
 * sampled image A(S_X) divided by the dual norm, minimized over a direction
 * mesh; the bracket is the value widened by the angular step times |A|.
 */
inline LinearModulusReport sur_modulus(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny,
                                       SurMethod method = SurMethod::svd) {
  require_shape(A, nx, ny);
  LinearModulusReport rep;
  rep.method = method;
  if (method == SurMethod::svd) {
    if (nx.kind != NormKind::euclidean || ny.kind != NormKind::euclidean)
      throw std::invalid_argument("sur_modulus: the svd method needs euclidean norms");
    double v = 0.0;
    if (A.rows() <= A.cols()) {
      const auto sv = singular_values(A);
      v = sv[A.rows() - 1];
      if (v <= rank_cutoff(sv)) v = 0.0;
    }
    rep.value = rep.lower = rep.upper = v;
    return rep;
  }
  const std::size_t k = detail::base_mesh_size(std::max(nx.dimension, ny.dimension));
  const bool euclid = nx.kind == NormKind::euclidean && ny.kind == NormKind::euclidean;
  auto eval = [&](std::size_t kk) { return detail::sur_grid_value(A, nx, ny, kk); };
  rep.value = euclid ? eval(k) : detail::refine_until_stable(eval, k);
  rep.mesh_size = k;
  const double angular = 2.0 * std::numbers::pi / static_cast<double>(k);
  const double slack = angular * opnorm(A, nx, ny);
  rep.lower = std::max(0.0, rep.value - slack);
  rep.upper = rep.value + slack;
  return rep;
}

/// inf{|Ax|_ny : |x|_nx = 1}: exact smallest singular value for euclidean norms, mesh minimum otherwise.
inline double injectivity_bound(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny) {
  require_shape(A, nx, ny);
  if (nx.kind == NormKind::euclidean && ny.kind == NormKind::euclidean) {
    if (A.rows() < A.cols()) return 0.0;
    const auto sv = singular_values(A);
    return sv.back() <= rank_cutoff(sv) ? 0.0 : sv.back();
  }
  auto eval = [&](std::size_t k) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& x : detail::norm_sphere_mesh(nx, k)) best = std::min(best, ny.norm(A.apply(x)));
    return best;
  };
  return detail::refine_until_stable(eval, detail::base_mesh_size(nx.dimension));
}

struct LinearVerdict {
  bool passed = true;
  bool skipped = false;
  std::string reason;
  double lhs = 0.0;
  double rhs = 0.0;
};

inline SurMethod default_method(const NormSpec& nx, const NormSpec& ny) {
  return nx.kind == NormKind::euclidean && ny.kind == NormKind::euclidean ? SurMethod::svd : SurMethod::grid;
}

/// Lower bound of the modulus by the injectivity constant (skipped without full row rank).
inline LinearVerdict harte_check(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny, double tol = 1e-8) {
  require_shape(A, nx, ny);
  LinearVerdict v;
  if (numerical_rank(A) < A.rows()) {
    v.skipped = true;
    v.reason = "range is not dense: rank below the number of rows";
    return v;
  }
  v.lhs = sur_modulus(A, nx, ny, default_method(nx, ny)).value;
  v.rhs = injectivity_bound(A, nx, ny);
  if (v.rhs <= 0.0) {
    v.reason = "injectivity bound is zero; nothing to check";
    return v;
  }
  v.passed = v.lhs >= v.rhs - tol;
  return v;
}

/// |sur A - sur B| <= |A - B|.
inline LinearVerdict sur_lipschitz_check(const DenseMatrix& A, const DenseMatrix& B, const NormSpec& nx,
                                         const NormSpec& ny, double tol = 1e-8) {
  A.require_same_shape(B);
  require_shape(A, nx, ny);
  const SurMethod m = default_method(nx, ny);
  LinearVerdict v;
  v.lhs = std::abs(sur_modulus(A, nx, ny, m).value - sur_modulus(B, nx, ny, m).value);
  v.rhs = opnorm(A - B, nx, ny);
  v.passed = v.lhs <= v.rhs + tol;
  return v;
}

struct OpenSetReport {
  bool passed = true;
  std::size_t samples = 0;
  double base_modulus = 0.0;
  double min_perturbed = std::numeric_limits<double>::infinity();
  double max_perturbation = 0.0;
};

/**
 * Samples perturbations E with |E| < fraction * sur A and checks sur(A + E) > 0.
 * The norm of each E is drawn uniformly from [0, fraction * sur A].
 */
inline OpenSetReport open_set_check(const DenseMatrix& A, const NormSpec& nx, const NormSpec& ny,
                                    std::size_t samples = 100, std::uint64_t seed = 1, double fraction = 0.99) {
  require_shape(A, nx, ny);
  const SurMethod m = default_method(nx, ny);
  OpenSetReport rep;
  rep.base_modulus = sur_modulus(A, nx, ny, m).value;
  if (!(rep.base_modulus > 0.0)) throw std::invalid_argument("open_set_check: the modulus of A is zero");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-1.0, 1.0), scale(0.0, 1.0);
  for (std::size_t s = 0; s < samples; ++s) {
    DenseMatrix E(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) E(i, j) = entry(rng);
    const double n = opnorm(E, nx, ny);
    const double target = scale(rng) * fraction * rep.base_modulus;
    E = (n > 0.0 ? target / n : 0.0) * E;
    const double pert = sur_modulus(A + E, nx, ny, m).value;
    rep.max_perturbation = std::max(rep.max_perturbation, opnorm(E, nx, ny));
    rep.min_perturbed = std::min(rep.min_perturbed, pert);
    if (!(pert > 0.0)) rep.passed = false;
    ++rep.samples;
  }
  return rep;
}

/// Solves a square system by Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<Point> solve_square(DenseMatrix A, Point b) {
  if (A.rows() != A.cols() || b.size() != A.rows()) throw std::invalid_argument("solve_square: shape mismatch");
  const std::size_t n = A.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
    if (std::abs(A(piv, k)) < 1e-14) return std::nullopt;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = A(i, k) / A(k, k);
      for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      b[i] -= f * b[k];
    }
  }
  Point x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= A(k, j) * x[j];
    x[k] = s / A(k, k);
  }
  return x;
}

}  // namespace almostreg
