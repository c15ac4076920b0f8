#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "searchmesh/error.hpp"
#include "searchmesh/fault_model.hpp"

using namespace searchmesh;
using namespace searchmesh::fault;

namespace {

Eigen::MatrixXd ternary(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_int_distribution<int> pick(-1, 1);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = pick(rng);
  return m;
}

LinearizedPlant plant(Eigen::MatrixXd a, Eigen::MatrixXd b, Eigen::MatrixXd c) {
  LinearizedPlant p;
  p.a = std::move(a);
  p.b = std::move(b);
  p.c = std::move(c);
  return p;
}

}  // namespace

TEST_CASE("double integrator is controllable and observable from position") {
  Eigen::MatrixXd a(2, 2), b(2, 1), c(1, 2);
  a << 0, 1, 0, 0;
  b << 0, 1;
  c << 1, 0;
  const auto p = plant(a, b, c);
  CHECK(controllability_rank(p) == 2);
  CHECK(observability_rank(p) == 2);
  CHECK(classify_fault(p, true).index() == 1);
  CHECK(classify_fault(p, false).index() == 10);
}

TEST_CASE("unreachable second state loses controllability") {
  Eigen::MatrixXd a(2, 2), b(2, 1), c(1, 2);
  a << 1, 0, 0, 2;
  b << 1, 0;
  c << 1, 1;
  CHECK(controllability_rank(plant(a, b, c)) == 1);
}

TEST_CASE("no measurements gives observability rank 0") {
  Eigen::MatrixXd a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  CHECK(observability_rank(plant(a, b, Eigen::MatrixXd::Zero(1, 2))) == 0);
}

TEST_CASE("rank tests agree with exact elimination on random integer plants") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int n = 1; n <= 6; ++n) {
    for (int m = 1; m <= 2; ++m) {
      for (int trial = 0; trial < 40; ++trial) {
        Eigen::MatrixXd a = ternary(rng, n, n);
        Eigen::MatrixXd b = ternary(rng, n, m);
        // Sparse A makes rank-deficient cases common.
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (rng() % 3 == 0) a(i, j) = 0;
        const auto p = plant(a, b, b.transpose());
        CAPTURE(n);
        CAPTURE(trial);
        CHECK(controllability_rank(p) == oracle::bareiss_rank(oracle::to_integer(oracle::krylov(a, b))));
        CHECK(observability_rank(p) ==
              oracle::bareiss_rank(oracle::to_integer(oracle::krylov(a.transpose(), p.c.transpose()))));
        ++checked;
      }
    }
  }
  CHECK(checked == 480);
}

TEST_CASE("observability is controllability of the dual") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int p = 1 + static_cast<int>(rng() % 3);
    Eigen::MatrixXd a(n, n), c(p, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng() % 2 ? gauss(rng) : 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = rng() % 2 ? gauss(rng) : 0.0;
    const auto primal = plant(a, Eigen::MatrixXd::Zero(n, 1), c);
    const auto dual = plant(a.transpose(), c.transpose(), Eigen::MatrixXd::Zero(1, n));
    CHECK(observability_rank(primal) == controllability_rank(dual));
  }
}

TEST_CASE("class table rows") {
  using C = CtrlClass;
  using O = ObsClass;
  const std::pair<C, O> rows[] = {{C::controllable, O::observable},     {C::controllable, O::detectable},
                                  {C::stabilizable, O::observable},     {C::stabilizable, O::detectable},
                                  {C::controllable, O::undetectable},   {C::stabilizable, O::undetectable},
                                  {C::unstabilizable, O::observable},   {C::unstabilizable, O::detectable},
                                  {C::unstabilizable, O::undetectable}};
  for (int row = 1; row <= 9; ++row) {
    const auto [c, o] = rows[row - 1];
    CHECK(FaultState::compose(c, o, true).index() == row);
    CHECK(FaultState::compose(c, o, false).index() == row + 9);
  }
}

TEST_CASE("fault index round-trips through its components") {
  for (int f = 1; f <= 18; ++f) {
    const auto s = FaultState::from_index(f);
    CHECK(FaultState::compose(s.ctrl(), s.obs(), s.camera_ok()) == s);
    CHECK(s.camera_ok() == (f <= 9));
  }
  CHECK_THROWS_AS(FaultState::from_index(0), StructuralError);
  CHECK_THROWS_AS(FaultState::from_index(19), StructuralError);
}

TEST_CASE("severity tiers") {
  CHECK(severity_of(1) == Severity::healthy);
  for (int f = 2; f <= 4; ++f) CHECK(severity_of(f) == Severity::mild);
  for (int f = 5; f <= 18; ++f) CHECK(severity_of(f) == Severity::severe);
}

TEST_CASE("stability flags decide the class of a rank-deficient plant") {
  // Second mode is uncontrollable; stable at -1, unstable at +1.
  Eigen::MatrixXd b(2, 1), c(1, 2);
  b << 1, 0;
  c << 1, 1;
  for (const double pole : {-1.0, 1.0}) {
    Eigen::MatrixXd a(2, 2);
    a << -2, 0, 0, pole;
    auto p = plant(a, b, c);
    const auto flags = pbh_stability(p);
    CHECK(flags.stabilizable == (pole < 0));
    CHECK(flags.detectable);
    p.stable_uncontrollable = flags.stabilizable;
    p.stable_unobservable = flags.detectable;
    CHECK(classify_fault(p, true).ctrl() == (pole < 0 ? CtrlClass::stabilizable : CtrlClass::unstabilizable));
  }
}

TEST_CASE("plant JSON") {
  const auto p = parse_plant(R"({"A": [[0,1],[0,0]], "B": [[0],[1]], "C": [[1,0]]})");
  CHECK(p.a.rows() == 2);
  CHECK(classify_fault(p, true).index() == 1);
  CHECK_THROWS_AS(parse_plant(R"({"A": [[0,1],[0,0]], "B": [[0],[1],[2]], "C": [[1,0]]})"), StructuralError);
  CHECK_THROWS_AS(parse_plant("{"), StructuralError);
}
