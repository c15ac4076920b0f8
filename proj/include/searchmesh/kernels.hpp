#pragma once

#include <vector>

#include "searchmesh/config.hpp"

namespace searchmesh {

struct Outcome {
  int value = 0;
  double prob = 0.0;
};

/// One-epoch fault evolution when no service is performed. Outcomes with zero
/// probability are omitted.
std::vector<Outcome> fault_kernel(int fault, const FaultProbabilities& p);

/// Pr(goal achieved in one epoch) for a UAV in fault state `fault`.
double achievement_probability(int fault, const GoalProbabilities& p);

/// One-epoch evolution of a priority flag. `p_achieve` is the probability that
/// the UAV working on it finishes it (0 when nobody does).
std::vector<Outcome> priority_kernel(int priority, double p_achieve, const GoalProbabilities& p);

}  // namespace searchmesh
