#include "searchmesh/snapshot.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "searchmesh/error.hpp"

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

namespace searchmesh {
namespace {

constexpr std::array<char, 8> kMagic{'S', 'M', 'S', 'N', 'A', 'P', '\0', '\0'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw StructuralError("snapshot truncated");
  return v;
}

}  // namespace

void write_snapshot(const PolicySnapshot& snap, const std::filesystem::path& path) {
  if (snap.values.size() != snap.state_count || snap.policy.size() != snap.state_count)
    throw StructuralError("snapshot vectors do not match its state count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StructuralError("cannot write snapshot " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, PolicySnapshot::kVersion);
  put(out, static_cast<std::uint32_t>(snap.kind.size()));
  out.write(snap.kind.data(), static_cast<std::streamsize>(snap.kind.size()));
  put(out, snap.state_count);
  put(out, snap.action_count);
  put(out, snap.gamma);
  put(out, snap.eta);
  put(out, snap.sweeps);
  put(out, snap.residual);
  put(out, static_cast<std::uint8_t>(snap.converged ? 1 : 0));
  put(out, snap.config_hash);
  out.write(reinterpret_cast<const char*>(snap.values.data()),
            static_cast<std::streamsize>(snap.values.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(snap.policy.data()),
            static_cast<std::streamsize>(snap.policy.size() * sizeof(mdp::ActionId)));
  if (!out) throw StructuralError("failed writing snapshot " + path.string());
}

PolicySnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open snapshot " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw StructuralError(path.string() + " is not a policy snapshot");
  const auto version = get<std::uint32_t>(in);
  if (version != PolicySnapshot::kVersion)
    throw StructuralError("unsupported snapshot version " + std::to_string(version));
  PolicySnapshot snap;
  const auto kind_len = get<std::uint32_t>(in);
  if (kind_len > 256) throw StructuralError("corrupt snapshot header");
  snap.kind.resize(kind_len);
  in.read(snap.kind.data(), kind_len);
  snap.state_count = get<std::uint64_t>(in);
  snap.action_count = get<std::uint32_t>(in);
  snap.gamma = get<double>(in);
  snap.eta = get<double>(in);
  snap.sweeps = get<std::uint64_t>(in);
  snap.residual = get<double>(in);
  snap.converged = get<std::uint8_t>(in) != 0;
  snap.config_hash = get<std::uint64_t>(in);
  if (snap.state_count > (1ULL << 32)) throw StructuralError("corrupt snapshot state count");
  snap.values.resize(snap.state_count);
  snap.policy.resize(snap.state_count);
  in.read(reinterpret_cast<char*>(snap.values.data()), static_cast<std::streamsize>(snap.state_count * sizeof(double)));
  in.read(reinterpret_cast<char*>(snap.policy.data()),
          static_cast<std::streamsize>(snap.state_count * sizeof(mdp::ActionId)));
  if (!in) throw StructuralError("snapshot truncated");
  return snap;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot hash " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace searchmesh
