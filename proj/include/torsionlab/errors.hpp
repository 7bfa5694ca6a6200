#pragma once

#include <stdexcept>
#include <string>

namespace torsionlab {

/// Malformed input: bad shapes, failed structural checks, unreadable files.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical check ran but missed its tolerance.
class ToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation is not defined for this input (e.g. logdet of a singular operator).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace torsionlab
