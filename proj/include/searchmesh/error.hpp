#pragma once

#include <stdexcept>
#include <string>

namespace searchmesh {

/// Raised when inputs violate a structural contract: mismatched dimensions,
/// malformed models, out-of-domain state fields, unreadable files.
class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace searchmesh
