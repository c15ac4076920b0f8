#include "searchmesh/kernels.hpp"

#include "searchmesh/error.hpp"

namespace searchmesh {
namespace {

void spread(std::vector<Outcome>& out, int lo, int hi, double mass) {
  if (mass <= 0.0) return;
  const double each = mass / (hi - lo + 1);
  for (int f = lo; f <= hi; ++f) out.push_back({f, each});
}

void keep(std::vector<Outcome>& out, int value, double mass) {
  if (mass > 0.0) out.push_back({value, mass});
}

}  // namespace

std::vector<Outcome> fault_kernel(int fault, const FaultProbabilities& p) {
  if (fault < 1 || fault > 18) throw StructuralError("fault state outside 1..18");
  std::vector<Outcome> out;
  if (fault == 1) {
    keep(out, 1, 1.0 - p.healthy_to_mild);
    spread(out, 2, 4, p.healthy_to_mild);
  } else if (fault <= 4) {
    keep(out, fault, 1.0 - p.mild_worsens);
    spread(out, 5, 9, p.mild_worsens * (1.0 - p.worsened_to_camera));
    spread(out, 10, 18, p.mild_worsens * p.worsened_to_camera);
  } else if (fault <= 9) {
    keep(out, fault, 1.0 - p.severe_to_camera);
    spread(out, 10, 18, p.severe_to_camera);
  } else {
    keep(out, fault, p.camera_persists);
  }
  return out;
}

double achievement_probability(int fault, const GoalProbabilities& p) {
  if (fault == 1) return p.achieve_healthy;
  if (fault <= 9) return p.achieve_faulty;
  return p.achieve_camera_failed;
}

std::vector<Outcome> priority_kernel(int priority, double p_achieve, const GoalProbabilities& p) {
  std::vector<Outcome> out;
  if (priority == 0) {
    keep(out, 0, 1.0 - p.recurrence);
    keep(out, 1, p.recurrence / 2.0);
    keep(out, 2, p.recurrence / 2.0);
    return out;
  }
  if (priority != 1 && priority != 2) throw StructuralError("priority outside 0..2");
  keep(out, 0, p_achieve);
  const double open = 1.0 - p_achieve;
  keep(out, priority, open * (1.0 - p.drift));
  keep(out, 3 - priority, open * p.drift);
  return out;
}

}  // namespace searchmesh
