#include "c2/env/navigation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace c2::env {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDenseSpacing = 0.1;  // cells
constexpr int kLookahead = 8;
constexpr std::size_t kMaxCachedFields = 128;

struct Step {
  int dx;
  int dy;
  double cost;
};

constexpr Step kSteps[] = {{1, 0, 1.0},  {-1, 0, 1.0}, {0, 1, 1.0},         {0, -1, 1.0},
                           {1, 1, std::numbers::sqrt2}, {1, -1, std::numbers::sqrt2}, {-1, 1, std::numbers::sqrt2}, {-1, -1, std::numbers::sqrt2}};

}  // namespace

Navigator::Navigator(sim::TerrainGrid terrain) : terrain_(std::move(terrain)) {}

const std::vector<double>& Navigator::field(sim::CellPos target) {
  const int w = terrain_.width();
  const int key = target.y * w + target.x;
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  if (cache_.size() >= kMaxCachedFields) cache_.clear();

  std::vector<double> dist(static_cast<std::size_t>(w) * terrain_.height(), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  if (terrain_.traversable(target)) {
    dist[key] = 0.0;
    open.push({0.0, key});
  }
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    if (d > dist[idx]) continue;
    const int x = idx % w;
    const int y = idx / w;
    for (const Step& s : kSteps) {
      const sim::CellPos next{x + s.dx, y + s.dy};
      if (!terrain_.traversable(next)) continue;
      if (s.dx != 0 && s.dy != 0 &&
          (!terrain_.traversable(sim::CellPos{x + s.dx, y}) || !terrain_.traversable(sim::CellPos{x, y + s.dy}))) {
        continue;
      }
      const int nidx = next.y * w + next.x;
      const double nd = d + s.cost;
      if (nd < dist[nidx]) {
        dist[nidx] = nd;
        open.push({nd, nidx});
      }
    }
  }
  return cache_.emplace(key, std::move(dist)).first->second;
}

bool Navigator::segment_clear(sim::Vec2 from, sim::Vec2 to) const {
  const sim::Vec2 d = to - from;
  const int samples = std::max(1, static_cast<int>(std::ceil(d.norm() / kDenseSpacing)));
  for (int i = 0; i <= samples; ++i) {
    if (!terrain_.traversable(from + d * (static_cast<double>(i) / samples))) return false;
  }
  return true;
}

double Navigator::route_length(sim::Vec2 from, sim::Vec2 to) {
  const sim::CellPos target = sim::cell_of(to);
  const sim::CellPos start = sim::cell_of(from);
  if (!terrain_.in_bounds(target) || !terrain_.in_bounds(start)) return kInf;
  return field(target)[start.y * terrain_.width() + start.x];
}

double Navigator::route_heading(sim::Vec2 from, sim::Vec2 to) {
  const auto bearing = [](sim::Vec2 a, sim::Vec2 b) { return std::atan2(b.y - a.y, b.x - a.x); };
  const sim::CellPos target = sim::cell_of(to);
  if (!terrain_.in_bounds(target) || !terrain_.in_bounds(from) || segment_clear(from, to)) return bearing(from, to);

  const auto& dist = field(target);
  const int w = terrain_.width();
  sim::CellPos cur = sim::cell_of(from);
  if (!std::isfinite(dist[cur.y * w + cur.x])) return bearing(from, to);

  // Walk downhill along the distance field and aim at the farthest cell
  // still reachable in a straight line.
  sim::Vec2 aim = sim::center_of(cur);
  for (int k = 0; k < kLookahead; ++k) {
    sim::CellPos best = cur;
    double best_d = dist[cur.y * w + cur.x];
    for (const Step& s : kSteps) {
      const sim::CellPos next{cur.x + s.dx, cur.y + s.dy};
      if (!terrain_.in_bounds(next)) continue;
      const double nd = dist[next.y * w + next.x];
      if (nd < best_d) {
        best = next;
        best_d = nd;
      }
    }
    if (best == cur) break;
    cur = best;
    const sim::Vec2 c = sim::center_of(cur);
    if (k > 0 && !segment_clear(from, c)) break;
    aim = c;
  }
  if ((aim - from).norm() < 1e-9) return bearing(from, to);
  return bearing(from, aim);
}

}  // namespace c2::env
