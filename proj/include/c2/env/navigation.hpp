#pragma once

#include <unordered_map>
#include <vector>

#include "c2/sim/terrain.hpp"

namespace c2::env {

/// Shortest-route steering over a fixed terrain grid. Distance fields are
/// computed per destination cell (8-connected, no corner cutting) and cached.
class Navigator {
 public:
  explicit Navigator(sim::TerrainGrid terrain);

  /// Heading (radians) to follow from `from` toward `to`: the direct bearing
  /// when the straight segment is clear, else toward the farthest visible
  /// cell on the shortest route.
  double route_heading(sim::Vec2 from, sim::Vec2 to);

  /// True iff every point of the segment lies on traversable terrain,
  /// sampled densely enough to catch cell corners.
  bool segment_clear(sim::Vec2 from, sim::Vec2 to) const;

  /// Route length in cells from the cell of `from` to the cell of `to`;
  /// infinity when unreachable.
  double route_length(sim::Vec2 from, sim::Vec2 to);

  const sim::TerrainGrid& terrain() const noexcept { return terrain_; }

 private:
  const std::vector<double>& field(sim::CellPos target);

  sim::TerrainGrid terrain_;
  std::unordered_map<int, std::vector<double>> cache_;
};

}  // namespace c2::env
