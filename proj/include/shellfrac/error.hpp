#pragma once

#include <stdexcept>
#include <string>

namespace shellfrac {

enum class ErrorCode {
  InvalidParameter = 1,
  ChartDegeneracy,
  Domain,
  DegenerateElement,
  InvalidMesh,
  Geometry,
  Input,
  MeshMismatch,
  Solvability,
  SolverFailure,
  NotDirichlet,
  PointLocation,
  Io,
  Config,
};

const char* error_code_name(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps it to an
// integer status code.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace shellfrac
