#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "searchmesh/energy_model.hpp"
#include "searchmesh/error.hpp"

using namespace searchmesh::energy;

namespace {

// 3600 s of flight at 5 m/s.
PowerProfile hour_at_five() {
  PowerProfile p;
  p.motor_w = 85.0;
  p.payload_w = 10.0;
  p.electronics_w = 5.0;
  p.capacity_as = 36000.0;
  p.voltage_v = 10.0;
  p.speed_mps = 5.0;
  return p;
}

}  // namespace

TEST_CASE("flight range") {
  const auto p = hour_at_five();
  CHECK(p.max_flight_duration_s() == doctest::Approx(3600.0));
  CHECK(flight_range(1.0, p) == doctest::Approx(18000.0));
  CHECK(flight_range(0.0, p) == 0.0);
  CHECK(flight_range(0.5, p) == doctest::Approx(flight_range(1.0, p) / 2.0));
}

TEST_CASE("range is monotone and linear in state of charge") {
  const auto p = hour_at_five();
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double soc = i / 100.0;
    const double r = flight_range(soc, p);
    CHECK(r >= prev);
    CHECK(r == doctest::Approx(soc * 18000.0));
    prev = r;
  }
}

TEST_CASE("assignment distance small cases") {
  CHECK(assignment_distance({1, {{10, 0}}}, {0, 0}).meters == doctest::Approx(10.0));
  CHECK(assignment_distance({1, {{2, 0}, {1, 0}}}, {0, 0}).meters == doctest::Approx(2.0));
}

TEST_CASE("assignment distance equals the all-orders oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-1000.0, 1000.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + trial % 7;
    Assignment a{1, {}};
    std::vector<oracle::Pt> pts;
    for (std::size_t i = 0; i < m; ++i) {
      a.waypoints.push_back({coord(rng), coord(rng)});
      pts.push_back({a.waypoints.back().x, a.waypoints.back().y});
    }
    const Point2 start{coord(rng), coord(rng)};
    const auto got = assignment_distance(a, start);
    CHECK(got.exact);
    CHECK(got.meters == doctest::Approx(oracle::brute_path({start.x, start.y}, pts)).epsilon(1e-12));
  }
}

TEST_CASE("feasibility flags") {
  const auto p = hour_at_five();
  const std::vector<Assignment> goals{{1, {{500, 0}}}, {2, {{18000, 0}}}, {3, {{18001, 0}}}};
  CHECK(feasibility_flags(1.0, p, goals, {0, 0}) == std::vector<int>{1, 1, 0});
  CHECK(feasibility_flags(0.0, p, goals, {0, 0}) == std::vector<int>{0, 0, 0});
  // Range and distance equal: inclusive.
  CHECK(feasibility_flags(0.5, p, goals, {9000, 0})[1] == 1);
}

TEST_CASE("flags never switch off as charge grows") {
  const auto p = hour_at_five();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(-9000.0, 9000.0);
  std::vector<Assignment> goals;
  for (int j = 1; j <= 4; ++j) goals.push_back({j, {{coord(rng), coord(rng)}, {coord(rng), coord(rng)}}});
  std::vector<int> prev(goals.size(), 0);
  for (int i = 0; i <= 50; ++i) {
    const auto f = feasibility_flags(i / 50.0, p, goals, {0, 0});
    for (std::size_t j = 0; j < f.size(); ++j) CHECK(f[j] >= prev[j]);
    prev = f;
  }
}

TEST_CASE("invalid inputs") {
  auto p = hour_at_five();
  p.speed_mps = 0.0;
  CHECK_THROWS_AS(p.validate(), searchmesh::StructuralError);
  CHECK_THROWS_AS(assignment_distance({1, {}}, {0, 0}), searchmesh::StructuralError);
}
