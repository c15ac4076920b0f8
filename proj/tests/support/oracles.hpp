#pragma once

// Brute-force references the production code is checked against. Nothing
// here calls into the library under test.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Exact rank of an integer matrix by fraction-free elimination.
inline int bareiss_rank(std::vector<std::vector<__int128>> m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  __int128 prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && m[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(m[p], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / prev;
      m[i][c] = 0;
    }
    prev = m[r][c];
    ++r;
  }
  return static_cast<int>(r);
}

inline std::vector<std::vector<__int128>> to_integer(const Eigen::MatrixXd& m) {
  std::vector<std::vector<__int128>> out(static_cast<std::size_t>(m.rows()),
                                         std::vector<__int128>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<__int128>(std::llround(m(i, j)));
  return out;
}

/// [B AB ... A^(n-1)B] assembled column block by column block.
inline Eigen::MatrixXd krylov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out(n, b.cols() * n);
  Eigen::MatrixXd block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.middleCols(i * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return out;
}

struct Pt {
  double x, y;
};

/// Shortest open path from `start` through every waypoint, all orders tried.
inline double brute_path(Pt start, std::vector<Pt> wps) {
  std::vector<std::size_t> order(wps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    double len = 0.0;
    Pt at = start;
    for (auto i : order) {
      len += std::hypot(wps[i].x - at.x, wps[i].y - at.y);
      at = wps[i];
    }
    best = std::min(best, len);
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

/// Dense MDP: p[a](s, s'), cost(s, a), admissible(s, a).
struct DenseMdp {
  int n = 0;
  int m = 0;
  double gamma = 0.0;
  std::vector<Eigen::MatrixXd> p;
  Eigen::MatrixXd cost;
  std::vector<std::vector<bool>> admissible;

  DenseMdp(int states, int actions, double g)
      : n(states), m(actions), gamma(g), p(static_cast<std::size_t>(actions), Eigen::MatrixXd::Zero(states, states)),
        cost(Eigen::MatrixXd::Zero(states, actions)),
        admissible(static_cast<std::size_t>(states), std::vector<bool>(static_cast<std::size_t>(actions), true)) {}
};

/// Plain value iteration with dense products for a fixed sweep count.
inline Eigen::VectorXd dense_value_iteration(const DenseMdp& d, int sweeps) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d.n);
  for (int it = 0; it < sweeps; ++it) {
    Eigen::VectorXd next = Eigen::VectorXd::Constant(d.n, -std::numeric_limits<double>::infinity());
    for (int a = 0; a < d.m; ++a) {
      const Eigen::VectorXd q = -d.cost.col(a) + d.gamma * (d.p[static_cast<std::size_t>(a)] * v);
      for (int s = 0; s < d.n; ++s)
        if (d.admissible[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) next(s) = std::max(next(s), q(s));
    }
    v = next;
  }
  return v;
}

/// Dense q(s, a) for a given value vector; -inf where inadmissible.
inline Eigen::MatrixXd dense_q(const DenseMdp& d, const Eigen::VectorXd& v) {
  Eigen::MatrixXd q(d.n, d.m);
  for (int a = 0; a < d.m; ++a) {
    q.col(a) = -d.cost.col(a) + d.gamma * (d.p[static_cast<std::size_t>(a)] * v);
    for (int s = 0; s < d.n; ++s)
      if (!d.admissible[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)])
        q(s, a) = -std::numeric_limits<double>::infinity();
  }
  return q;
}

/// Exact value of one stationary policy.
inline Eigen::VectorXd evaluate_policy(const DenseMdp& d, const std::vector<int>& pi) {
  Eigen::MatrixXd pp(d.n, d.n);
  Eigen::VectorXd c(d.n);
  for (int s = 0; s < d.n; ++s) {
    const int a = pi[static_cast<std::size_t>(s)];
    pp.row(s) = d.p[static_cast<std::size_t>(a)].row(s);
    c(s) = d.cost(s, a);
  }
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(d.n, d.n) - d.gamma * pp;
  return lhs.fullPivLu().solve(-c);
}

struct PolicyOptimum {
  Eigen::VectorXd values;
  std::vector<int> policy;
};

/// Evaluates every stationary deterministic policy exactly and keeps the one
/// whose value dominates every other. Among equally good policies the first
/// one enumerated wins (state 0 varies fastest).
inline PolicyOptimum enumerate_policies(const DenseMdp& d) {
  PolicyOptimum best;
  best.values = Eigen::VectorXd::Constant(d.n, -std::numeric_limits<double>::infinity());
  std::vector<int> pi(static_cast<std::size_t>(d.n), 0);
  while (true) {
    bool ok = true;
    for (int s = 0; s < d.n; ++s)
      if (!d.admissible[static_cast<std::size_t>(s)][static_cast<std::size_t>(pi[static_cast<std::size_t>(s)])]) ok = false;
    if (ok) {
      const Eigen::VectorXd v = evaluate_policy(d, pi);
      if ((v.array() > best.values.array() + 1e-12).any() && (v.array() >= best.values.array() - 1e-12).all()) {
        best.values = v;
        best.policy = pi;
      }
    }
    int s = 0;
    for (; s < d.n; ++s) {
      if (++pi[static_cast<std::size_t>(s)] < d.m) break;
      pi[static_cast<std::size_t>(s)] = 0;
    }
    if (s == d.n) break;
  }
  return best;
}

}  // namespace oracle
