#pragma once

#include <random>

#include "oracles.hpp"
#include "searchmesh/mdp.hpp"

namespace toy {

/// Library model with exactly the dense oracle's rows.
inline searchmesh::mdp::MdpModel from_dense(const oracle::DenseMdp& d) {
  return searchmesh::mdp::MdpModel::build(
      static_cast<std::size_t>(d.n), static_cast<std::size_t>(d.m), d.gamma,
      [&](searchmesh::mdp::StateId s, searchmesh::mdp::ActionId a, searchmesh::mdp::RowWriter& row) {
        if (!d.admissible[s][a]) {
          row.forbid();
          return;
        }
        row.set_cost(d.cost(s, a));
        for (int t = 0; t < d.n; ++t)
          if (d.p[a](s, t) != 0.0) row.add(static_cast<searchmesh::mdp::StateId>(t), d.p[a](s, t));
      });
}

/// Random dense MDP: sparse-ish rows, nonnegative costs, every state keeps
/// action 0 admissible.
inline oracle::DenseMdp random_dense(std::mt19937_64& rng, int n, int m, double gamma, double cost_scale = 10.0) {
  oracle::DenseMdp d(n, m, gamma);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int a = 0; a < m; ++a) {
    for (int s = 0; s < n; ++s) {
      d.cost(s, a) = cost_scale * u(rng);
      if (a > 0 && u(rng) < 0.15) d.admissible[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = false;
      double sum = 0.0;
      for (int t = 0; t < n; ++t) {
        const double w = u(rng) < 0.5 ? u(rng) : 0.0;
        d.p[static_cast<std::size_t>(a)](s, t) = w;
        sum += w;
      }
      if (sum == 0.0) {
        d.p[static_cast<std::size_t>(a)](s, s) = 1.0;
      } else {
        d.p[static_cast<std::size_t>(a)].row(s) /= sum;
      }
    }
  }
  return d;
}

}  // namespace toy
