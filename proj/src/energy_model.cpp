#include "searchmesh/energy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "searchmesh/error.hpp"

namespace searchmesh::energy {
namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Held-Karp over subsets: best[mask][last] is the shortest path from start
// that visits exactly `mask` and ends at `last`.
double exact_open_path(std::span<const Point2> pts, const Point2& start) {
  const std::size_t m = pts.size();
  const std::size_t full = (std::size_t{1} << m) - 1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best((full + 1) * m, inf);
  for (std::size_t i = 0; i < m; ++i) best[(std::size_t{1} << i) * m + i] = distance(start, pts[i]);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    for (std::size_t last = 0; last < m; ++last) {
      const double here = best[mask * m + last];
      if (!(mask & (std::size_t{1} << last)) || here == inf) continue;
      for (std::size_t next = 0; next < m; ++next) {
        if (mask & (std::size_t{1} << next)) continue;
        const std::size_t nmask = mask | (std::size_t{1} << next);
        double& slot = best[nmask * m + next];
        slot = std::min(slot, here + distance(pts[last], pts[next]));
      }
    }
  }
  double answer = inf;
  for (std::size_t last = 0; last < m; ++last) answer = std::min(answer, best[full * m + last]);
  return answer;
}

double path_length(std::span<const Point2> pts, const std::vector<std::size_t>& order, const Point2& start) {
  double total = distance(start, pts[order.front()]);
  for (std::size_t i = 1; i < order.size(); ++i) total += distance(pts[order[i - 1]], pts[order[i]]);
  return total;
}

double heuristic_open_path(std::span<const Point2> pts, const Point2& start) {
  const std::size_t m = pts.size();
  std::vector<std::size_t> order;
  order.reserve(m);
  std::vector<bool> used(m, false);
  Point2 cur = start;
  for (std::size_t step = 0; step < m; ++step) {
    std::size_t pick = 0;
    double pick_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      const double d = distance(cur, pts[i]);
      if (d < pick_d) {
        pick_d = d;
        pick = i;
      }
    }
    used[pick] = true;
    order.push_back(pick);
    cur = pts[pick];
  }
  // 2-opt on the open path: reverse order[i..j] while it shortens the tour.
  double current = path_length(pts, order, start);
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        std::reverse(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(j) + 1);
        const double candidate = path_length(pts, order, start);
        if (candidate + 1e-12 < current) {
          current = candidate;
          improved = true;
        } else {
          std::reverse(order.begin() + static_cast<long>(i), order.begin() + static_cast<long>(j) + 1);
        }
      }
    }
  }
  return current;
}

}  // namespace

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void PowerProfile::validate() const {
  for (double v : {motor_w, payload_w, electronics_w, capacity_as, voltage_v, speed_mps}) {
    if (!std::isfinite(v) || v <= 0.0) throw StructuralError("power profile fields must be finite and positive");
  }
}

double flight_range(double soc, const PowerProfile& profile) {
  profile.validate();
  if (!finite_nonneg(soc) || soc > 1.0) throw StructuralError("state of charge must lie in [0, 1]");
  const double duration_s = soc * profile.max_flight_duration_s();
  return duration_s * profile.speed_mps;
}

PathLength assignment_distance(const Assignment& assignment, const Point2& start) {
  const auto& pts = assignment.waypoints;
  if (pts.empty()) throw StructuralError("assignment " + std::to_string(assignment.id) + " has no waypoints");
  if (!std::isfinite(start.x) || !std::isfinite(start.y)) throw StructuralError("start location must be finite");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw StructuralError("waypoints must be finite");
  }
  if (pts.size() <= kExactWaypointLimit) return {exact_open_path(pts, start), true};
  return {heuristic_open_path(pts, start), false};
}

std::vector<int> feasibility_flags(double soc, const PowerProfile& profile, std::span<const Assignment> assignments,
                                   const Point2& start) {
  const double range = flight_range(soc, profile);
  std::vector<int> flags;
  flags.reserve(assignments.size());
  for (const auto& a : assignments) flags.push_back(range >= assignment_distance(a, start).meters ? 1 : 0);
  return flags;
}

}  // namespace searchmesh::energy
