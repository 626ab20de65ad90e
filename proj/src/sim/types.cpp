#include "c2/sim/region.hpp"
#include "c2/sim/terrain.hpp"
#include "c2/sim/types.hpp"
#include "c2/sim/world.hpp"

#include <cmath>
#include <stdexcept>

namespace c2::sim {

std::string_view to_string(Force f) noexcept { return f == Force::Blue ? "blue" : "red"; }

std::optional<Force> parse_force(std::string_view s) noexcept {
  if (s == "blue") return Force::Blue;
  if (s == "red") return Force::Red;
  return std::nullopt;
}

namespace {
constexpr std::array<std::string_view, kUnitClassCount> kClassNames = {
    "armor", "mech_infantry", "mortar", "aviation", "artillery", "anti_armor", "infantry"};
}  // namespace

std::string_view to_string(UnitClass c) noexcept { return kClassNames[index_of(c)]; }

std::optional<UnitClass> parse_unit_class(std::string_view s) noexcept {
  for (int i = 0; i < kUnitClassCount; ++i) {
    if (kClassNames[i] == s) return static_cast<UnitClass>(i);
  }
  return std::nullopt;
}

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Fired: return "fired";
    case EventKind::Hit: return "hit";
    case EventKind::Damaged: return "damaged";
    case EventKind::Destroyed: return "destroyed";
    case EventKind::Crossed: return "crossed";
    case EventKind::Retreated: return "retreated";
    case EventKind::FireMissionCalled: return "fire_mission_called";
    case EventKind::FireMissionImpact: return "fire_mission_impact";
    case EventKind::MoveBlocked: return "move_blocked";
    case EventKind::Diagnostic: return "diagnostic";
  }
  return "unknown";
}

std::string_view to_string(DiagnosticCode c) noexcept {
  switch (c) {
    case DiagnosticCode::None: return "none";
    case DiagnosticCode::UnknownUnit: return "unknown_unit";
    case DiagnosticCode::DeadUnit: return "dead_unit";
    case DiagnosticCode::DeadTarget: return "dead_target";
    case DiagnosticCode::InvalidTarget: return "invalid_target";
    case DiagnosticCode::OutOfRange: return "out_of_range";
    case DiagnosticCode::NotVisible: return "not_visible";
    case DiagnosticCode::NoAmmo: return "no_ammo";
    case DiagnosticCode::NoFireSupport: return "no_fire_support";
    case DiagnosticCode::OutOfFuel: return "out_of_fuel";
    case DiagnosticCode::WrongForce: return "wrong_force";
  }
  return "unknown";
}

// ---------------------------------------------------------------- terrain

TerrainGrid::TerrainGrid(int width, int height, double cell_km, Cell fill)
    : width_(width), height_(height), cell_km_(cell_km) {
  if (width < kMinSide || height < kMinSide) {
    throw std::invalid_argument("terrain must be at least 8x8 cells");
  }
  if (!(cell_km > 0.0) || !std::isfinite(cell_km)) {
    throw std::invalid_argument("cell_km must be a positive finite number");
  }
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

double TerrainGrid::diagonal_km() const noexcept {
  return std::hypot(static_cast<double>(width_), static_cast<double>(height_)) * cell_km_;
}

std::size_t TerrainGrid::index(CellPos c) const {
  if (!in_bounds(c)) throw std::out_of_range("terrain cell out of bounds");
  return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x);
}

char to_char(Cell c) noexcept {
  switch (c) {
    case Cell::Open: return '.';
    case Cell::Impassable: return '#';
    case Cell::Crossing: return '=';
  }
  return '?';
}

std::vector<std::string> TerrainGrid::to_rows() const {
  std::vector<std::string> rows;
  rows.reserve(height_);
  for (int y = 0; y < height_; ++y) {
    std::string row(static_cast<std::size_t>(width_), '.');
    for (int x = 0; x < width_; ++x) row[x] = to_char(at({x, y}));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------- regions

bool Region::contains(CellPos cell) const noexcept {
  for (const auto& r : rects) {
    if (r.contains(cell)) return true;
  }
  return false;
}

bool Region::contains(Vec2 position) const noexcept { return contains(cell_of(position)); }

}  // namespace c2::sim
