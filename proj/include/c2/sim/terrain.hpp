#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "c2/sim/types.hpp"

namespace c2::sim {

enum class Cell : std::uint8_t { Open = 0, Impassable = 1, Crossing = 2 };

/// Cell passability grid. Crossing cells are traversable, Impassable cells
/// are never traversable by any unit class.
class TerrainGrid {
 public:
  static constexpr int kMinSide = 8;

  /// Throws std::invalid_argument when width/height < 8 or cell_km <= 0.
  TerrainGrid(int width, int height, double cell_km, Cell fill = Cell::Open);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double cell_km() const noexcept { return cell_km_; }
  double diagonal_km() const noexcept;

  bool in_bounds(CellPos c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  bool in_bounds(Vec2 p) const noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x < width_ && p.y < height_;
  }

  Cell at(CellPos c) const { return cells_[index(c)]; }
  void set(CellPos c, Cell v) { cells_[index(c)] = v; }

  bool traversable(CellPos c) const noexcept { return in_bounds(c) && at(c) != Cell::Impassable; }
  bool traversable(Vec2 p) const noexcept { return in_bounds(p) && at(cell_of(p)) != Cell::Impassable; }

  const std::vector<Cell>& cells() const noexcept { return cells_; }

  /// One string per row: '.' open, '#' impassable, '=' crossing.
  std::vector<std::string> to_rows() const;

  friend bool operator==(const TerrainGrid&, const TerrainGrid&) = default;

 private:
  std::size_t index(CellPos c) const;

  int width_;
  int height_;
  double cell_km_;
  std::vector<Cell> cells_;
};

char to_char(Cell c) noexcept;

}  // namespace c2::sim
