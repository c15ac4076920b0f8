#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace searchmesh::energy {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b);

/// Minimum cruise power budget and battery of one airframe.
struct PowerProfile {
  double motor_w = 0.0;
  double payload_w = 0.0;
  double electronics_w = 0.0;
  double capacity_as = 0.0;  // ampere-seconds
  double voltage_v = 0.0;
  double speed_mps = 0.0;

  double total_power_w() const { return motor_w + payload_w + electronics_w; }
  /// Seconds of flight on a full battery.
  double max_flight_duration_s() const { return capacity_as * voltage_v / total_power_w(); }
  void validate() const;
};

/// Waypoint set the UAV must sweep to complete goal `id`. Visiting order is
/// free; the shortest open path from the start location is used.
struct Assignment {
  int id = 0;
  std::vector<Point2> waypoints;
};

/// Largest waypoint count solved exactly.
inline constexpr std::size_t kExactWaypointLimit = 12;

struct PathLength {
  double meters = 0.0;
  bool exact = true;
};

/// Range in meters available at state of charge `soc`.
double flight_range(double soc, const PowerProfile& profile);

/// Shortest open path start -> w1 -> ... -> wm over all visiting orders.
/// Exact up to kExactWaypointLimit waypoints; nearest-neighbour + 2-opt above
/// that, reported with exact = false.
PathLength assignment_distance(const Assignment& assignment, const Point2& start);

/// flag[a] = 1 iff flight_range(soc) >= assignment_distance(a, start).
std::vector<int> feasibility_flags(double soc, const PowerProfile& profile, std::span<const Assignment> assignments,
                                   const Point2& start);

}  // namespace searchmesh::energy
