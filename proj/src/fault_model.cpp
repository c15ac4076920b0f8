#include "searchmesh/fault_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <complex>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "searchmesh/error.hpp"

namespace searchmesh::fault {
namespace {

struct ClassRow {
  CtrlClass ctrl;
  ObsClass obs;
};

// Fault-class table, rows 1..9.
constexpr std::array<ClassRow, kFaultClasses> kClassTable{{
    {CtrlClass::controllable, ObsClass::observable},
    {CtrlClass::controllable, ObsClass::detectable},
    {CtrlClass::stabilizable, ObsClass::observable},
    {CtrlClass::stabilizable, ObsClass::detectable},
    {CtrlClass::controllable, ObsClass::undetectable},
    {CtrlClass::stabilizable, ObsClass::undetectable},
    {CtrlClass::unstabilizable, ObsClass::observable},
    {CtrlClass::unstabilizable, ObsClass::detectable},
    {CtrlClass::unstabilizable, ObsClass::undetectable},
}};

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array()) throw StructuralError(std::string("plant field ") + name + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw StructuralError(std::string("plant field ") + name + " has ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<size_t>(c)).get<double>();
  }
  return m;
}

bool pbh_full_rank(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool continuous_time) {
  const Eigen::Index n = a.rows();
  if (n == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw StructuralError("eigen-decomposition failed in PBH test");
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    const bool stable = continuous_time ? lambda.real() < 0.0 : std::norm(lambda) < 1.0;
    if (stable) continue;
    Eigen::MatrixXcd m(n, n + b.cols());
    m.leftCols(n) = lambda * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>();
    m.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    const auto& sv = svd.singularValues();
    const double cutoff = std::max(n, b.cols()) * (sv.size() ? sv(0) : 0.0) * 1e-10;
    Eigen::Index rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > cutoff) ++rank;
    if (rank < n) return false;
  }
  return true;
}

}  // namespace

void LinearizedPlant::validate() const {
  if (a.rows() != a.cols()) throw StructuralError("A must be square");
  if (b.rows() != a.rows()) throw StructuralError("B must have as many rows as A");
  if (c.cols() != a.cols()) throw StructuralError("C must have as many columns as A");
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) throw StructuralError("plant matrices must be finite");
}

std::string_view to_string(CtrlClass c) {
  switch (c) {
    case CtrlClass::controllable: return "controllable";
    case CtrlClass::stabilizable: return "stabilizable";
    case CtrlClass::unstabilizable: return "unstabilizable";
  }
  return "?";
}

std::string_view to_string(ObsClass o) {
  switch (o) {
    case ObsClass::observable: return "observable";
    case ObsClass::detectable: return "detectable";
    case ObsClass::undetectable: return "undetectable";
  }
  return "?";
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::healthy: return "healthy";
    case Severity::mild: return "mild";
    case Severity::severe: return "severe";
  }
  return "?";
}

FaultState FaultState::from_index(int index) {
  if (index < 1 || index > kFaultStates)
    throw StructuralError("fault index " + std::to_string(index) + " outside 1..18");
  return FaultState(index);
}

FaultState FaultState::compose(CtrlClass ctrl, ObsClass obs, bool camera_ok) {
  for (int row = 0; row < kFaultClasses; ++row) {
    if (kClassTable[static_cast<size_t>(row)].ctrl == ctrl && kClassTable[static_cast<size_t>(row)].obs == obs)
      return FaultState(row + 1 + (camera_ok ? 0 : kFaultClasses));
  }
  throw StructuralError("unreachable fault class combination");
}

CtrlClass FaultState::ctrl() const { return kClassTable[static_cast<size_t>(fault_class() - 1)].ctrl; }
ObsClass FaultState::obs() const { return kClassTable[static_cast<size_t>(fault_class() - 1)].obs; }
Severity FaultState::severity() const { return severity_of(index_); }

Severity severity_of(int fault_index) {
  if (fault_index == 1) return Severity::healthy;
  if (fault_index >= 2 && fault_index <= 4) return Severity::mild;
  return Severity::severe;
}

int numerical_rank(const Eigen::MatrixXd& m, double scale) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double cutoff = scale * sv(0) * 1e-10;
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > cutoff) ++rank;
  return rank;
}

Eigen::MatrixXd controllability_matrix(const LinearizedPlant& plant) {
  plant.validate();
  const Eigen::Index n = plant.a.rows();
  const Eigen::Index m = plant.b.cols();
  Eigen::MatrixXd q(n, m * (n + 1));
  if (m == 0) return q;
  q.leftCols(m) = plant.b;
  for (Eigen::Index i = 1; i <= n; ++i) q.middleCols(m * i, m) = plant.a * q.middleCols(m * (i - 1), m);
  return q;
}

Eigen::MatrixXd observability_matrix(const LinearizedPlant& plant) {
  plant.validate();
  const Eigen::Index n = plant.a.rows();
  const Eigen::Index p = plant.c.rows();
  Eigen::MatrixXd o(p * (n + 1), n);
  if (p == 0) return o;
  o.topRows(p) = plant.c;
  for (Eigen::Index i = 1; i <= n; ++i) o.middleRows(p * i, p) = o.middleRows(p * (i - 1), p) * plant.a;
  return o;
}

int controllability_rank(const LinearizedPlant& plant) {
  const auto q = controllability_matrix(plant);
  return numerical_rank(q, static_cast<double>(std::max(plant.a.rows(), plant.b.cols())));
}

int observability_rank(const LinearizedPlant& plant) {
  const auto o = observability_matrix(plant);
  return numerical_rank(o, static_cast<double>(std::max(plant.a.rows(), plant.c.rows())));
}

FaultState classify_fault(const LinearizedPlant& plant, bool camera_ok) {
  const int n = static_cast<int>(plant.a.rows());
  CtrlClass ctrl = CtrlClass::controllable;
  if (controllability_rank(plant) < n)
    ctrl = plant.stable_uncontrollable ? CtrlClass::stabilizable : CtrlClass::unstabilizable;
  ObsClass obs = ObsClass::observable;
  if (observability_rank(plant) < n)
    obs = plant.stable_unobservable ? ObsClass::detectable : ObsClass::undetectable;
  return FaultState::compose(ctrl, obs, camera_ok);
}

StabilityFlags pbh_stability(const LinearizedPlant& plant, bool continuous_time) {
  plant.validate();
  return {pbh_full_rank(plant.a, plant.b, continuous_time),
          pbh_full_rank(plant.a.transpose(), plant.c.transpose(), continuous_time)};
}

LinearizedPlant parse_plant(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("plant file is not valid JSON: ") + e.what());
  }
  LinearizedPlant plant;
  try {
    plant.a = matrix_from_json(doc.at("A"), "A");
    plant.b = matrix_from_json(doc.at("B"), "B");
    plant.c = matrix_from_json(doc.at("C"), "C");
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("plant file is missing a matrix: ") + e.what());
  }
  if (plant.b.size() == 0) plant.b.resize(plant.a.rows(), 0);
  if (plant.c.size() == 0) plant.c.resize(0, plant.a.cols());
  plant.validate();
  const auto flags = doc.value("flags", nlohmann::json::object());
  if (flags.contains("stable_uncontrollable") && flags.contains("stable_unobservable")) {
    plant.stable_uncontrollable = flags["stable_uncontrollable"].get<bool>();
    plant.stable_unobservable = flags["stable_unobservable"].get<bool>();
  } else {
    const auto computed = pbh_stability(plant, doc.value("continuous_time", true));
    plant.stable_uncontrollable = flags.value("stable_uncontrollable", computed.stabilizable);
    plant.stable_unobservable = flags.value("stable_unobservable", computed.detectable);
  }
  return plant;
}

LinearizedPlant load_plant(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open plant file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plant(ss.str());
}

}  // namespace searchmesh::fault
