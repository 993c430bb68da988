#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace almostreg {

/**
 * Nonnegative extended real: a finite value >= 0 or +infinity.
 *
 * Infinity is a separate flag, never a large float. Products follow the
 * convention 0 * inf = 1 used for paired moduli.
 */
class ExtReal {
 public:
  constexpr ExtReal() = default;

  ExtReal(double v) : value_(v) {  // NOLINT: implicit from finite reals
    if (std::isnan(v) || v < 0.0)
      throw std::domain_error("ExtReal: value must be a nonnegative real");
    if (std::isinf(v)) {
      infinite_ = true;
      value_ = 0.0;
    }
  }

  static constexpr ExtReal infinity() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  double value() const {
    if (infinite_) throw std::logic_error("ExtReal: value() of +inf");
    return value_;
  }

  /// IEEE view; +inf maps to the IEEE infinity.
  constexpr double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

  friend constexpr std::partial_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ || b.infinite_) {
      if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
      return a.infinite_ ? std::partial_ordering::greater : std::partial_ordering::less;
    }
    return a.value_ <=> b.value_;
  }

  friend ExtReal operator+(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtReal(a.value_ + b.value_);
  }

  /// 0 * inf = 1 (the paired-moduli convention); otherwise the usual rules.
  friend ExtReal operator*(const ExtReal& a, const ExtReal& b) {
    if (a.infinite_ && b.infinite_) return infinity();
    if (a.infinite_ || b.infinite_) {
      const double other = a.infinite_ ? b.value_ : a.value_;
      return other == 0.0 ? ExtReal(1.0) : infinity();
    }
    return ExtReal(a.value_ * b.value_);
  }

  /// Truncated difference: inf - finite = inf, finite - x clamps at 0.
  ExtReal minus(double x) const {
    if (infinite_) return infinity();
    return ExtReal(std::max(0.0, value_ - x));
  }

 private:
  bool infinite_ = false;
  double value_ = 0.0;
};

inline const ExtReal kInf = ExtReal::infinity();

inline ExtReal min(const ExtReal& a, const ExtReal& b) { return b < a ? b : a; }
inline ExtReal max(const ExtReal& a, const ExtReal& b) { return a < b ? b : a; }

/// Infimum of a range of ExtReal; +inf for an empty range.
template <class Range>
ExtReal inf_of(const Range& values) {
  ExtReal best = ExtReal::infinity();
  for (const ExtReal& v : values) best = min(best, v);
  return best;
}

/// Supremum of a range of ExtReal; 0 for an empty range.
template <class Range>
ExtReal sup_of(const Range& values) {
  ExtReal best(0.0);
  for (const ExtReal& v : values) best = max(best, v);
  return best;
}

inline std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
  if (x.is_infinite()) return os << "inf";
  return os << x.value();
}

}  // namespace almostreg
