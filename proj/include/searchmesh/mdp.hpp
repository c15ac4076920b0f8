#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace searchmesh::mdp {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// Collects one (state, action) row while a model is being generated.
class RowWriter {
 public:
  /// Marks the action inadmissible in this state; any cost or successors
  /// written for it are discarded.
  void forbid() { admissible_ = false; }
  void set_cost(double cost) { cost_ = cost; }
  void add(StateId next, double prob) {
    next_.push_back(next);
    prob_.push_back(prob);
  }

 private:
  friend class MdpModel;
  void reset() {
    admissible_ = true;
    cost_ = 0.0;
    next_.clear();
    prob_.clear();
  }
  bool admissible_ = true;
  double cost_ = 0.0;
  std::vector<StateId> next_;
  std::vector<double> prob_;
};

using RowGenerator = std::function<void(StateId, ActionId, RowWriter&)>;

/// Finite discounted MDP with nonnegative costs J(s,a) and sparse successor
/// rows stored contiguously per (state, action). Immutable once built.
class MdpModel {
 public:
  struct Row {
    std::span<const StateId> next;
    std::span<const double> prob;
  };

  /// Generates every (state, action) row, splitting the state range across
  /// `workers` threads, then validates. Throws StructuralError on any
  /// malformed row.
  static MdpModel build(std::size_t state_count, std::size_t action_count, double gamma, const RowGenerator& generator,
                        unsigned workers = 1);

  std::size_t state_count() const { return state_count_; }
  std::size_t action_count() const { return action_count_; }
  double gamma() const { return gamma_; }
  std::size_t transition_count() const { return next_.size(); }

  bool admissible(StateId s, ActionId a) const { return admissible_[index(s, a)] != 0; }
  double cost(StateId s, ActionId a) const { return cost_[index(s, a)]; }
  Row row(StateId s, ActionId a) const {
    const auto i = index(s, a);
    const auto b = row_begin_[i];
    const auto n = row_begin_[i + 1] - b;
    return {std::span<const StateId>(next_.data() + b, n), std::span<const double>(prob_.data() + b, n)};
  }

  /// -J(s,a) + gamma * sum_s' P(s'|s,a) V(s'); no admissibility check.
  double backup(StateId s, ActionId a, std::span<const double> values) const {
    const auto i = index(s, a);
    double acc = 0.0;
    for (auto k = row_begin_[i]; k < row_begin_[i + 1]; ++k) acc += prob_[k] * values[next_[k]];
    return -cost_[i] + gamma_ * acc;
  }
  /// Same bracket accumulated in extended precision.
  long double backup(StateId s, ActionId a, std::span<const long double> values) const {
    const auto i = index(s, a);
    long double acc = 0.0L;
    for (auto k = row_begin_[i]; k < row_begin_[i + 1]; ++k) acc += prob_[k] * values[next_[k]];
    return -static_cast<long double>(cost_[i]) + gamma_ * acc;
  }

 private:
  std::size_t index(StateId s, ActionId a) const { return static_cast<std::size_t>(s) * action_count_ + a; }
  void validate() const;

  std::size_t state_count_ = 0;
  std::size_t action_count_ = 0;
  double gamma_ = 0.0;
  std::vector<std::uint64_t> row_begin_;
  std::vector<StateId> next_;
  std::vector<double> prob_;
  std::vector<double> cost_;
  std::vector<std::uint8_t> admissible_;
};

struct ValueFunction {
  std::vector<double> values;
  /// Sup-norm change of the last sweep; infinite before the first sweep.
  double residual = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

enum class SweepMethod { jacobi, gauss_seidel };

/// One Bellman backup of every state. Jacobi sweeps are split across
/// `workers` threads; Gauss-Seidel always runs on one thread.
ValueFunction bellman_sweep(const MdpModel& model, const ValueFunction& v, unsigned workers = 1,
                            SweepMethod method = SweepMethod::jacobi);

struct SolveOptions {
  double eta = 1e-6;
  std::size_t max_sweeps = 2000;
  unsigned workers = 1;
  SweepMethod method = SweepMethod::jacobi;
  /// Starting values; zeros when empty.
  std::vector<double> initial;
  /// Called after every sweep with (sweep, residual).
  std::function<void(std::size_t, double)> progress;
};

/// Value iteration until ||V' - V||_inf < eta or max_sweeps. The result's
/// `converged` flag says which one stopped it. The iterate is carried in
/// extended precision, so the residual sequence contracts by gamma well
/// below one ulp of the stored doubles; values are rounded on return.
ValueFunction solve(const MdpModel& model, const SolveOptions& options = {});

/// Bracket of the optimality equation for one admissible action. Throws
/// StructuralError for inadmissible actions.
double q_value(const MdpModel& model, std::span<const double> values, StateId s, ActionId a);

/// One entry per action; empty for inadmissible ones.
std::vector<std::optional<double>> q_values(const MdpModel& model, std::span<const double> values, StateId s);

/// Greedy policy; q-values within `tie_tolerance` (relative to max(1,|q|))
/// of the best count as ties and go to the lowest action index.
std::vector<ActionId> extract_policy(const MdpModel& model, std::span<const double> values,
                                     double tie_tolerance = 1e-9);

/// Index of the best entry with the same tie rule; nullopt entries skipped.
std::optional<std::size_t> argmax_with_ties(std::span<const std::optional<double>> q, double tie_tolerance = 1e-9);

}  // namespace searchmesh::mdp
