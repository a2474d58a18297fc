#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semswarm/geometry.hpp"

namespace semswarm {

/// Uniform bucket grid over the unit torus with cell side >= the query radius.
///
/// Queries visit the 3x3 block of cells around a point, so any pair closer than
/// the build radius is reported. When fewer than 3 cells fit per side the grid
/// degrades to a single cell and every point is a candidate.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(std::span<const Vec2> positions, double radius) { rebuild(positions, radius); }

  void rebuild(std::span<const Vec2> positions, double radius);

  int cells_per_side() const { return cells_; }

  /// Calls fn(j) for every candidate index j in cells adjacent to p, in a fixed
  /// order. The caller filters by distance.
  template <typename Fn>
  void for_each_candidate(Vec2 p, Fn&& fn) const {
    if (cells_ == 1) {
      for (std::uint32_t j : order_) fn(j);
      return;
    }
    const int cx = cell_of(p.x);
    const int cy = cell_of(p.y);
    for (int dy = -1; dy <= 1; ++dy) {
      const int y = (cy + dy + cells_) % cells_;
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = (cx + dx + cells_) % cells_;
        const std::size_t c = static_cast<std::size_t>(y) * cells_ + x;
        for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k) fn(order_[k]);
      }
    }
  }

  /// Calls fn(begin, end, shift) for each run [begin, end) of order() covering
  /// every point within radius of p. Visits as many rings of cells as needed
  /// and skips cells entirely farther than radius. For a radius no larger than
  /// a cell the visiting order matches for_each_candidate.
  ///
  /// When the visited block does not cover the whole grid, each cell has one
  /// periodic image near p and `shift` holds it: for a point q in range,
  /// (q - p) + shift equals torus::delta(q, p). When the whole grid is covered
  /// fn receives std::nullopt and must use torus::delta.
  template <typename Fn>
  void for_each_range_within(Vec2 p, double radius, Fn&& fn) const {
    const int rings = static_cast<int>(std::ceil(radius * cells_));
    if (cells_ == 1 || (rings > 1 && 2 * rings + 1 >= cells_)) {
      if (!order_.empty()) {
        fn(std::uint32_t{0}, static_cast<std::uint32_t>(order_.size()), std::optional<Vec2>{});
      }
      return;
    }
    const int cx = cell_of(p.x);
    const int cy = cell_of(p.y);
    const int reach = rings <= 1 ? 1 : rings;
    const double fx = p.x * cells_ - cx;
    const double fy = p.y * cells_ - cy;
    const double limit = radius * cells_ * radius * cells_;
    for (int dy = -reach; dy <= reach; ++dy) {
      int lo = -reach;
      int hi = reach;
      if (rings > 1) {
        // Cells of this row that come closer than radius form the interval
        // lo..hi of offsets.
        const double gy = dy > 0 ? dy - fy : (dy < 0 ? fy - dy - 1.0 : 0.0);
        const double room = limit - gy * gy;
        if (room <= 0.0) continue;
        const double w = std::sqrt(room);
        hi = std::min(hi, static_cast<int>(std::ceil(fx + w)) - 1);
        lo = std::max(lo, static_cast<int>(std::floor(fx - 1.0 - w)) + 1);
      }
      const int ry = cy + dy;
      const int y = ry < 0 ? ry + cells_ : (ry >= cells_ ? ry - cells_ : ry);
      const double sy = ry < 0 ? -1.0 : (ry >= cells_ ? 1.0 : 0.0);
      const std::size_t row = static_cast<std::size_t>(y) * cells_;
      // Split cx+lo .. cx+hi at the torus seam; each piece is one run of order_.
      const int first = cx + lo;
      const int last = cx + hi;
      auto emit = [&](int x0, int x1, double sx) {
        const std::uint32_t b = start_[row + x0];
        const std::uint32_t e = start_[row + x1 + 1];
        if (b < e) fn(b, e, std::optional<Vec2>{Vec2{sx, sy}});
      };
      if (first < 0) emit(first + cells_, std::min(last, -1) + cells_, -1.0);
      if (last >= 0 && first < cells_) emit(std::max(first, 0), std::min(last, cells_ - 1), 0.0);
      if (last >= cells_) emit(std::max(first, cells_) - cells_, last - cells_, 1.0);
    }
  }

  /// Point indices grouped by cell; the ranges passed by for_each_range_within
  /// index into this.
  std::span<const std::uint32_t> order() const { return order_; }

  /// Indices j != self with toroidal distance < radius, ascending.
  std::vector<std::uint32_t> query(std::span<const Vec2> positions, std::uint32_t self,
                                   double radius) const;

 private:
  int cell_of(double v) const {
    int c = static_cast<int>(v * cells_);
    return c >= cells_ ? cells_ - 1 : (c < 0 ? 0 : c);
  }

  int cells_ = 1;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> order_;
};

}  // namespace semswarm
