#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string_view>

namespace searchmesh::fault {

/// Linearization of a UAV about an equilibrium: x' = Ax + Bu, y = Cx.
/// The stability flags describe the uncontrollable / unobservable subspaces
/// and are determined offline; the rank tests decide full controllability
/// and observability.
struct LinearizedPlant {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  bool stable_uncontrollable = false;
  bool stable_unobservable = false;

  /// Throws StructuralError unless A is square, B has A's rows and C has A's
  /// columns.
  void validate() const;
};

enum class CtrlClass { controllable, stabilizable, unstabilizable };
enum class ObsClass { observable, detectable, undetectable };
enum class Severity { healthy, mild, severe };

std::string_view to_string(CtrlClass c);
std::string_view to_string(ObsClass o);
std::string_view to_string(Severity s);

inline constexpr int kFaultClasses = 9;
inline constexpr int kFaultStates = 2 * kFaultClasses;

/// One of the 18 discrete health states: the 9 controllability /
/// observability classes, shifted by 9 when the payload camera has failed.
class FaultState {
 public:
  /// Throws StructuralError for indices outside 1..18.
  static FaultState from_index(int index);
  static FaultState compose(CtrlClass ctrl, ObsClass obs, bool camera_ok);

  int index() const { return index_; }
  /// Row of the fault-class table, 1..9.
  int fault_class() const { return (index_ - 1) % kFaultClasses + 1; }
  bool camera_ok() const { return index_ <= kFaultClasses; }
  CtrlClass ctrl() const;
  ObsClass obs() const;
  Severity severity() const;

  friend bool operator==(FaultState, FaultState) = default;

 private:
  explicit FaultState(int index) : index_(index) {}
  int index_;
};

/// Severity tier straight from a fault index (1 healthy, 2..4 mild, rest
/// severe).
Severity severity_of(int fault_index);

/// Numerical rank with singular-value cutoff scale * sigma_max * 1e-10.
int numerical_rank(const Eigen::MatrixXd& m, double scale);

/// [B AB ... A^n B]
Eigen::MatrixXd controllability_matrix(const LinearizedPlant& plant);
/// [C; CA; ...; CA^n]
Eigen::MatrixXd observability_matrix(const LinearizedPlant& plant);

int controllability_rank(const LinearizedPlant& plant);
int observability_rank(const LinearizedPlant& plant);

FaultState classify_fault(const LinearizedPlant& plant, bool camera_ok);

/// PBH tests for users who only have the matrices. Writes the results into
/// the plant's stability flags.
struct StabilityFlags {
  bool stabilizable;
  bool detectable;
};
StabilityFlags pbh_stability(const LinearizedPlant& plant, bool continuous_time = true);

/// Reads a plant from JSON: {"A": [[..]], "B": [[..]], "C": [[..]],
/// "flags": {"stable_uncontrollable": bool, "stable_unobservable": bool}}.
/// Missing flags are computed with pbh_stability.
LinearizedPlant load_plant(const std::filesystem::path& path);
LinearizedPlant parse_plant(std::string_view json_text);

}  // namespace searchmesh::fault
