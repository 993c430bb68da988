#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "almostreg/spaces.hpp"

namespace almostreg {

/// Finite graph of a set-valued map X => Y, stored as index pairs into two clouds.
class SampledMap {
 public:
  using IndexPair = std::pair<std::size_t, std::size_t>;

  SampledMap(PointCloud domain, PointCloud range, std::vector<IndexPair> pairs,
             QuasiPremetric domain_metric = euclidean_metric(), QuasiPremetric range_metric = euclidean_metric())
      : domain_(std::move(domain)),
        range_(std::move(range)),
        pairs_(std::move(pairs)),
        d_(std::move(domain_metric)),
        rho_(std::move(range_metric)) {
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
    values_.assign(domain_.size(), {});
    preimages_.assign(range_.size(), {});
    for (const auto& [i, j] : pairs_) {
      if (i >= domain_.size() || j >= range_.size()) throw std::out_of_range("SampledMap: pair index out of range");
      values_[i].push_back(j);
      preimages_[j].push_back(i);
    }
  }

  /// Graph from explicit point pairs; clouds are the sorted distinct components.
  static SampledMap from_pairs(const std::vector<std::pair<Point, Point>>& pts,
                               QuasiPremetric domain_metric = euclidean_metric(),
                               QuasiPremetric range_metric = euclidean_metric()) {
    if (pts.empty()) throw std::invalid_argument("SampledMap: empty graph");
    std::map<Point, std::size_t> xs, ys;
    for (const auto& [x, y] : pts) {
      xs.emplace(x, 0);
      ys.emplace(y, 0);
    }
    std::vector<Point> xv, yv;
    for (auto& [p, idx] : xs) {
      idx = xv.size();
      xv.push_back(p);
    }
    for (auto& [p, idx] : ys) {
      idx = yv.size();
      yv.push_back(p);
    }
    std::vector<IndexPair> ip;
    for (const auto& [x, y] : pts) ip.emplace_back(xs.at(x), ys.at(y));
    return SampledMap(PointCloud(std::move(xv)), PointCloud(std::move(yv)), std::move(ip), std::move(domain_metric),
                      std::move(range_metric));
  }

  /// Graph of a family of single-valued branches over a domain cloud; an empty
  /// optional from a branch means the point is not in that branch's domain.
  static SampledMap from_branches(const PointCloud& domain,
                                  const std::vector<std::function<std::optional<Point>(const Point&)>>& branches) {
    std::vector<std::pair<Point, Point>> pts;
    for (const Point& x : domain)
      for (const auto& b : branches)
        if (auto y = b(x)) pts.emplace_back(x, *y);
    SampledMap tmp = from_pairs(pts);
    return tmp.with_domain(domain);
  }

  static SampledMap from_function(const PointCloud& domain, const std::function<Point(const Point&)>& f) {
    return from_branches(domain, {[&f](const Point& x) { return std::optional<Point>(f(x)); }});
  }

  static SampledMap from_scalar(const PointCloud& domain, const std::function<double(double)>& f) {
    return from_function(domain, [&f](const Point& x) { return Point{f(x.at(0))}; });
  }

  const PointCloud& domain() const { return domain_; }
  const PointCloud& range() const { return range_; }
  const std::vector<IndexPair>& pairs() const { return pairs_; }
  const QuasiPremetric& domain_metric() const { return d_; }
  const QuasiPremetric& range_metric() const { return rho_; }

  /// Range indices of G(x) for domain index i.
  const std::vector<std::size_t>& values(std::size_t i) const { return values_.at(i); }
  /// Domain indices of G^{-1}(y) for range index j.
  const std::vector<std::size_t>& preimage(std::size_t j) const { return preimages_.at(j); }

  double dx(const Point& a, const Point& b) const { return finite(d_(a, b)); }
  double dy(const Point& a, const Point& b) const { return finite(rho_(a, b)); }

  bool contains(const Point& x, const Point& y) const {
    const auto i = domain_.index_of(x);
    const auto j = range_.index_of(y);
    if (!i || !j) return false;
    const auto& v = values_[*i];
    return std::find(v.begin(), v.end(), *j) != v.end();
  }

  SampledMap inverse() const {
    std::vector<IndexPair> rev;
    for (const auto& [i, j] : pairs_) rev.emplace_back(j, i);
    return SampledMap(range_, domain_, std::move(rev), rho_, d_);
  }

  SampledMap with_metrics(QuasiPremetric domain_metric, QuasiPremetric range_metric) const {
    return SampledMap(domain_, range_, pairs_, std::move(domain_metric), std::move(range_metric));
  }

  /// Same graph over a larger domain cloud (points outside dom G get no values).
  SampledMap with_domain(const PointCloud& domain) const {
    std::vector<IndexPair> ip;
    for (const auto& [i, j] : pairs_) {
      const auto k = domain.index_of(domain_[i]);
      if (!k) throw std::invalid_argument("with_domain: graph point outside the new domain cloud");
      ip.emplace_back(*k, j);
    }
    return SampledMap(domain, range_, std::move(ip), d_, rho_);
  }

  /// Open or closed ball of domain indices.
  std::vector<std::size_t> domain_ball(const Point& center, const ExtReal& r, bool closed = false) const {
    return eta_ball(d_, domain_, center, r, closed);
  }

  /// Open or closed ball of range points.
  std::vector<Point> range_ball(const Point& center, const ExtReal& r, bool closed = false) const {
    std::vector<Point> out;
    for (std::size_t j : eta_ball(rho_, range_, center, r, closed)) out.push_back(range_[j]);
    return out;
  }

  std::vector<std::size_t> all_domain() const {
    std::vector<std::size_t> idx(domain_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }

 private:
  static double finite(const ExtReal& v) { return v.to_double(); }

  PointCloud domain_;
  PointCloud range_;
  std::vector<IndexPair> pairs_;
  QuasiPremetric d_;
  QuasiPremetric rho_;
  std::vector<std::vector<std::size_t>> values_;
  std::vector<std::vector<std::size_t>> preimages_;
};

}  // namespace almostreg
