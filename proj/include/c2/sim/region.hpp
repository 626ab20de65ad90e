#pragma once

#include <string>
#include <vector>

#include "c2/sim/types.hpp"

namespace c2::sim {

/// Inclusive cell rectangle [x0, x1] x [y0, y1].
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(CellPos c) const noexcept { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  friend bool operator==(const CellRect&, const CellRect&) = default;
};

/// Named union of cell rectangles, used by scoring triggers.
struct Region {
  std::string name;
  std::vector<CellRect> rects;

  /// True iff floor(position) lies in any rect.
  bool contains(Vec2 position) const noexcept;
  bool contains(CellPos cell) const noexcept;

  friend bool operator==(const Region&, const Region&) = default;
};

}  // namespace c2::sim
