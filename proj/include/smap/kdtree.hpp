#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "smap/core.hpp"

namespace smap {

/// Static 3-d tree for exact nearest-neighbour queries. Squared distances are
/// computed as dx*dx + dy*dy + dz*dz, the same expression a linear scan uses,
/// so reported distances match brute force bit for bit.
class KdTree {
 public:
  struct Hit {
    std::size_t index = 0;
    double squared_distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    axis_.assign(points_.size(), 0);
    build(0, order_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const std::vector<Vec3>& points() const noexcept { return points_; }

  Hit nearest(const Vec3& q) const {
    Hit best;
    if (!points_.empty()) search(q, 0, order_.size(), best);
    return best;
  }

  static double squared_distance(const Vec3& a, const Vec3& b) noexcept {
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
  }

 private:
  static constexpr std::size_t kLeaf = 8;

  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= kLeaf) return;
    Vec3 mn = Vec3::Constant(std::numeric_limits<double>::infinity()), mx = -mn;
    for (std::size_t i = lo; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + std::ptrdiff_t(lo), order_.begin() + std::ptrdiff_t(mid),
                     order_.begin() + std::ptrdiff_t(hi), [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    axis_[mid] = static_cast<std::uint8_t>(axis);
    build(lo, mid);
    build(mid + 1, hi);
  }

  void search(const Vec3& q, std::size_t lo, std::size_t hi, Hit& best) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) consider(q, order_[i], best);
      return;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    const int axis = axis_[mid];
    consider(q, order_[mid], best);
    const double diff = q[axis] - points_[order_[mid]][axis];
    const bool left_first = diff < 0.0;
    if (left_first) search(q, lo, mid, best);
    else search(q, mid + 1, hi, best);
    if (diff * diff <= best.squared_distance) {
      if (left_first) search(q, mid + 1, hi, best);
      else search(q, lo, mid, best);
    }
  }

  void consider(const Vec3& q, std::size_t idx, Hit& best) const {
    const double d2 = squared_distance(q, points_[idx]);
    if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
      best.squared_distance = d2;
      best.index = idx;
    }
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<std::uint8_t> axis_;
};

}  // namespace smap
