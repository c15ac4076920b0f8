#include "searchmesh/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "searchmesh/error.hpp"

namespace searchmesh::mdp {
namespace {

struct Chunk {
  std::vector<std::uint64_t> row_len;
  std::vector<StateId> next;
  std::vector<double> prob;
  std::vector<double> cost;
  std::vector<std::uint8_t> admissible;
};

template <typename Fn>
void parallel_for_ranges(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t step = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = std::min(n, w * step);
    const std::size_t hi = std::min(n, lo + step);
    pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
  }
  for (auto& t : pool) t.join();
}

template <typename T>
T best_backup(const MdpModel& model, StateId s, std::span<const T> values) {
  T best = -std::numeric_limits<T>::infinity();
  for (ActionId a = 0; a < model.action_count(); ++a) {
    if (!model.admissible(s, a)) continue;
    best = std::max(best, model.backup(s, a, values));
  }
  return best;
}

}  // namespace

MdpModel MdpModel::build(std::size_t state_count, std::size_t action_count, double gamma,
                         const RowGenerator& generator, unsigned workers) {
  if (state_count == 0 || action_count == 0) throw StructuralError("model needs at least one state and one action");
  if (state_count > std::numeric_limits<StateId>::max()) throw StructuralError("state count exceeds index width");
  if (!(gamma > 0.0 && gamma < 1.0)) throw StructuralError("discount factor must lie in (0, 1)");

  workers = std::max(1u, workers);
  std::vector<Chunk> chunks(workers);
  std::vector<std::size_t> chunk_lo(workers, 0);
  parallel_for_ranges(state_count, workers, [&](unsigned w, std::size_t lo, std::size_t hi) {
    chunk_lo[w] = lo;
    Chunk& c = chunks[w];
    const std::size_t rows = (hi - lo) * action_count;
    c.row_len.reserve(rows);
    c.cost.reserve(rows);
    c.admissible.reserve(rows);
    RowWriter writer;
    for (std::size_t s = lo; s < hi; ++s) {
      for (std::size_t a = 0; a < action_count; ++a) {
        writer.reset();
        generator(static_cast<StateId>(s), static_cast<ActionId>(a), writer);
        if (!writer.admissible_) {
          c.row_len.push_back(0);
          c.cost.push_back(0.0);
          c.admissible.push_back(0);
          continue;
        }
        c.row_len.push_back(writer.next_.size());
        c.cost.push_back(writer.cost_);
        c.admissible.push_back(1);
        c.next.insert(c.next.end(), writer.next_.begin(), writer.next_.end());
        c.prob.insert(c.prob.end(), writer.prob_.begin(), writer.prob_.end());
      }
    }
  });

  MdpModel m;
  m.state_count_ = state_count;
  m.action_count_ = action_count;
  m.gamma_ = gamma;
  std::size_t total = 0;
  for (const auto& c : chunks) total += c.next.size();
  if (workers == 1 || chunks.size() == 1) {
    Chunk& c = chunks.front();
    m.next_ = std::move(c.next);
    m.prob_ = std::move(c.prob);
    m.cost_ = std::move(c.cost);
    m.admissible_ = std::move(c.admissible);
  } else {
    m.next_.reserve(total);
    m.prob_.reserve(total);
    m.cost_.reserve(state_count * action_count);
    m.admissible_.reserve(state_count * action_count);
    for (auto& c : chunks) {
      m.next_.insert(m.next_.end(), c.next.begin(), c.next.end());
      m.prob_.insert(m.prob_.end(), c.prob.begin(), c.prob.end());
      m.cost_.insert(m.cost_.end(), c.cost.begin(), c.cost.end());
      m.admissible_.insert(m.admissible_.end(), c.admissible.begin(), c.admissible.end());
      c = Chunk{};
    }
  }
  m.row_begin_.assign(state_count * action_count + 1, 0);
  std::size_t r = 0;
  for (const auto& c : chunks) {
    for (auto len : c.row_len) {
      m.row_begin_[r + 1] = m.row_begin_[r] + len;
      ++r;
    }
  }
  m.validate();
  return m;
}

void MdpModel::validate() const {
  for (std::size_t s = 0; s < state_count_; ++s) {
    bool any = false;
    for (std::size_t a = 0; a < action_count_; ++a) {
      const std::size_t i = s * action_count_ + a;
      if (!admissible_[i]) continue;
      any = true;
      const auto where = " at state " + std::to_string(s) + ", action " + std::to_string(a);
      if (!std::isfinite(cost_[i]) || cost_[i] < 0.0) throw StructuralError("cost must be finite and nonnegative" + where);
      if (row_begin_[i] == row_begin_[i + 1]) throw StructuralError("admissible row has no successors" + where);
      double sum = 0.0;
      for (auto k = row_begin_[i]; k < row_begin_[i + 1]; ++k) {
        if (next_[k] >= state_count_) throw StructuralError("successor index out of range" + where);
        if (!(prob_[k] >= 0.0 && prob_[k] <= 1.0)) throw StructuralError("probability outside [0,1]" + where);
        sum += prob_[k];
      }
      if (std::abs(sum - 1.0) > 1e-9) throw StructuralError("row is not stochastic (sum " + std::to_string(sum) + ")" + where);
    }
    if (!any) throw StructuralError("state " + std::to_string(s) + " has no admissible action");
  }
}

ValueFunction bellman_sweep(const MdpModel& model, const ValueFunction& v, unsigned workers, SweepMethod method) {
  const std::size_t n = model.state_count();
  if (v.values.size() != n) throw StructuralError("value vector length does not match the model");
  ValueFunction out;
  out.sweeps = v.sweeps + 1;
  out.residual_history = v.residual_history;
  if (method == SweepMethod::gauss_seidel) {
    out.values = v.values;
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const double nv = best_backup<double>(model, static_cast<StateId>(s), out.values);
      residual = std::max(residual, std::abs(nv - out.values[s]));
      out.values[s] = nv;
    }
    out.residual = residual;
  } else {
    out.values.assign(n, 0.0);
    workers = std::max(1u, workers);
    std::vector<double> partial(workers, 0.0);
    parallel_for_ranges(n, workers, [&](unsigned w, std::size_t lo, std::size_t hi) {
      double local = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        const double nv = best_backup<double>(model, static_cast<StateId>(s), v.values);
        local = std::max(local, std::abs(nv - v.values[s]));
        out.values[s] = nv;
      }
      partial[w] = local;
    });
    out.residual = *std::max_element(partial.begin(), partial.end());
  }
  out.residual_history.push_back(out.residual);
  return out;
}

ValueFunction solve(const MdpModel& model, const SolveOptions& options) {
  if (!(options.eta > 0.0)) throw StructuralError("eta must be positive");
  const std::size_t n = model.state_count();
  std::vector<long double> cur(n, 0.0L), next(n, 0.0L);
  if (!options.initial.empty()) {
    if (options.initial.size() != n) throw StructuralError("initial values have the wrong length");
    std::copy(options.initial.begin(), options.initial.end(), cur.begin());
  }
  ValueFunction v;
  v.residual = std::numeric_limits<double>::infinity();
  const unsigned workers = std::max(1u, options.workers);
  std::vector<long double> partial(workers, 0.0L);
  while (v.sweeps < options.max_sweeps) {
    long double residual = 0.0L;
    if (options.method == SweepMethod::gauss_seidel) {
      for (std::size_t s = 0; s < n; ++s) {
        const long double nv = best_backup<long double>(model, static_cast<StateId>(s), cur);
        residual = std::max(residual, std::abs(nv - cur[s]));
        cur[s] = nv;
      }
    } else {
      std::fill(partial.begin(), partial.end(), 0.0L);
      parallel_for_ranges(n, workers, [&](unsigned w, std::size_t lo, std::size_t hi) {
        long double local = 0.0L;
        for (std::size_t s = lo; s < hi; ++s) {
          next[s] = best_backup<long double>(model, static_cast<StateId>(s), cur);
          local = std::max(local, std::abs(next[s] - cur[s]));
        }
        partial[w] = local;
      });
      residual = *std::max_element(partial.begin(), partial.end());
      cur.swap(next);
    }
    ++v.sweeps;
    v.residual = static_cast<double>(residual);
    v.residual_history.push_back(v.residual);
    if (options.progress) options.progress(v.sweeps, v.residual);
    if (v.residual < options.eta) {
      v.converged = true;
      break;
    }
  }
  v.values.assign(cur.begin(), cur.end());
  return v;
}

double q_value(const MdpModel& model, std::span<const double> values, StateId s, ActionId a) {
  if (s >= model.state_count() || a >= model.action_count()) throw StructuralError("state or action out of range");
  if (!model.admissible(s, a))
    throw StructuralError("action " + std::to_string(a) + " is not admissible in state " + std::to_string(s));
  return model.backup(s, a, values);
}

std::vector<std::optional<double>> q_values(const MdpModel& model, std::span<const double> values, StateId s) {
  if (s >= model.state_count()) throw StructuralError("state out of range");
  std::vector<std::optional<double>> q(model.action_count());
  for (ActionId a = 0; a < model.action_count(); ++a) {
    if (model.admissible(s, a)) q[a] = model.backup(s, a, values);
  }
  return q;
}

std::optional<std::size_t> argmax_with_ties(std::span<const std::optional<double>> q, double tie_tolerance) {
  std::optional<double> best;
  for (const auto& x : q) {
    if (x && (!best || *x > *best)) best = *x;
  }
  if (!best) return std::nullopt;
  const double slack = tie_tolerance * std::max(1.0, std::abs(*best));
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] && *q[i] >= *best - slack) return i;
  }
  return std::nullopt;
}

std::vector<ActionId> extract_policy(const MdpModel& model, std::span<const double> values, double tie_tolerance) {
  std::vector<ActionId> policy(model.state_count());
  std::vector<std::optional<double>> q(model.action_count());
  for (std::size_t s = 0; s < model.state_count(); ++s) {
    for (ActionId a = 0; a < model.action_count(); ++a) {
      q[a] = model.admissible(static_cast<StateId>(s), a)
                 ? std::optional<double>(model.backup(static_cast<StateId>(s), a, values))
                 : std::nullopt;
    }
    policy[s] = static_cast<ActionId>(*argmax_with_ties(q, tie_tolerance));
  }
  return policy;
}

}  // namespace searchmesh::mdp
