#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

namespace c2::sim {

enum class Force : std::uint8_t { Blue = 0, Red = 1 };

constexpr Force opposing(Force f) noexcept { return f == Force::Blue ? Force::Red : Force::Blue; }
constexpr int index_of(Force f) noexcept { return static_cast<int>(f); }

std::string_view to_string(Force f) noexcept;
std::optional<Force> parse_force(std::string_view s) noexcept;

enum class UnitClass : std::uint8_t {
  Armor = 0,
  MechInfantry,
  Mortar,
  Aviation,
  Artillery,
  AntiArmor,
  Infantry,
};

inline constexpr int kUnitClassCount = 7;

inline constexpr std::array<UnitClass, kUnitClassCount> kAllUnitClasses = {
    UnitClass::Armor,     UnitClass::MechInfantry, UnitClass::Mortar,  UnitClass::Aviation,
    UnitClass::Artillery, UnitClass::AntiArmor,    UnitClass::Infantry};

constexpr int index_of(UnitClass c) noexcept { return static_cast<int>(c); }

std::string_view to_string(UnitClass c) noexcept;
std::optional<UnitClass> parse_unit_class(std::string_view s) noexcept;

/// Continuous position in cell units. x grows east (columns), y grows south
/// (rows); a heading h points along (cos h, sin h).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  double norm() const noexcept { return std::hypot(x, y); }
};

struct CellPos {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(CellPos, CellPos) = default;
};

constexpr CellPos cell_of(Vec2 p) noexcept {
  return {static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))};
}

constexpr Vec2 center_of(CellPos c) noexcept { return {c.x + 0.5, c.y + 0.5}; }

using UnitId = std::int32_t;
inline constexpr UnitId kNoUnit = -1;

}  // namespace c2::sim
