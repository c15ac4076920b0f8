#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "searchmesh/mdp.hpp"

namespace searchmesh {

/// Solved value function and greedy policy of one decision level, persisted
/// so the simulator and the service never re-solve.
///
/// Binary layout (little endian): magic "SMSNAP\0\0", u32 version, u32 kind
/// length + kind bytes, u64 state count, u32 action count, f64 gamma, f64 eta,
/// u64 sweeps, f64 residual, u8 converged, u64 config hash, f64[n] values,
/// u32[n] policy.
struct PolicySnapshot {
  static constexpr std::uint32_t kVersion = 1;

  std::string kind;
  std::uint64_t state_count = 0;
  std::uint32_t action_count = 0;
  double gamma = 0.0;
  double eta = 0.0;
  std::uint64_t sweeps = 0;
  double residual = 0.0;
  bool converged = false;
  std::uint64_t config_hash = 0;
  std::vector<double> values;
  std::vector<mdp::ActionId> policy;
};

void write_snapshot(const PolicySnapshot& snap, const std::filesystem::path& path);
PolicySnapshot read_snapshot(const std::filesystem::path& path);

/// FNV-1a over a file's bytes, hex encoded.
std::string file_digest(const std::filesystem::path& path);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace searchmesh
