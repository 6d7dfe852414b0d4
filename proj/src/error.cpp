#include "shellfrac/error.hpp"

namespace shellfrac {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::ChartDegeneracy: return "chart-degeneracy";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::DegenerateElement: return "degenerate-element";
    case ErrorCode::InvalidMesh: return "invalid-mesh";
    case ErrorCode::Geometry: return "geometry";
    case ErrorCode::Input: return "input";
    case ErrorCode::MeshMismatch: return "mesh-mismatch";
    case ErrorCode::Solvability: return "solvability";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::NotDirichlet: return "not-dirichlet";
    case ErrorCode::PointLocation: return "point-location";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

}  // namespace shellfrac
