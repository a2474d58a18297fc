#include "semswarm/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

namespace semswarm {

void SpatialGrid::rebuild(std::span<const Vec2> positions, double radius) {
  constexpr int kMaxCellsPerSide = 256;
  int cells = 1;
  if (radius > 0.0) {
    const double fit = std::floor(1.0 / radius);
    cells = fit >= kMaxCellsPerSide ? kMaxCellsPerSide : static_cast<int>(fit);
  } else {
    cells = kMaxCellsPerSide;
  }
  if (cells < 3) cells = 1;
  cells_ = cells;

  const std::size_t n_cells = static_cast<std::size_t>(cells_) * cells_;
  start_.assign(n_cells + 1, 0);
  order_.resize(positions.size());
  if (cells_ == 1) {
    for (std::uint32_t i = 0; i < positions.size(); ++i) order_[i] = i;
    start_[1] = static_cast<std::uint32_t>(positions.size());
    return;
  }

  std::vector<std::uint32_t> cell_index(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto c = static_cast<std::uint32_t>(cell_of(positions[i].y) * cells_ +
                                              cell_of(positions[i].x));
    cell_index[i] = c;
    ++start_[c + 1];
  }
  for (std::size_t c = 0; c < n_cells; ++c) start_[c + 1] += start_[c];
  std::vector<std::uint32_t> cursor(start_.begin(), start_.end() - 1);
  for (std::uint32_t i = 0; i < positions.size(); ++i) order_[cursor[cell_index[i]]++] = i;
}

std::vector<std::uint32_t> SpatialGrid::query(std::span<const Vec2> positions,
                                              std::uint32_t self, double radius) const {
  std::vector<std::uint32_t> out;
  const Vec2 p = positions[self];
  const double r2 = radius * radius;
  for_each_candidate(p, [&](std::uint32_t j) {
    if (j != self && torus::distance2(positions[j], p) < r2) out.push_back(j);
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace semswarm
