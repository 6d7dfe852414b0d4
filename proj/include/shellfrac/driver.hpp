#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shellfrac/adaptation.hpp"
#include "shellfrac/meshgen.hpp"
#include "shellfrac/solver.hpp"

namespace shellfrac {

// Complete description of a quasi-static run.
struct ScenarioSpec {
  std::string name = "cylinder";

  // Chart.
  ChartKind chart = ChartKind::Cylinder;
  double radius = 1.0;   // cylinder and sphere
  double length = 1.0;   // cylinder
  double xbar = 1.5707963267948966;  // sphere
  double ybar = 0.5235987755982988;  // sphere
  Rect flat_domain{0.0, 1.0, 0.0, 1.0};
  double lambda = 0.0;
  double mu = 1.0;

  // Geometry features.
  std::optional<Rect> notch;
  std::vector<HoleSpec> holes;
  double extension_depth = 0.1;
  bool dirichlet_bottom = true;
  double dirichlet_gap = 1e-3;

  // Model and time stepping.
  ModelParams model;
  double final_time = 2.2;

  // Algorithm controls.
  double tol = 1e-3;
  double tol_m = 1e-2;
  double tol_v = 2e-3;
  int max_it = 8;
  double target_h = 0.05;
  double h_min = 2.5e-4;
  double h_max = 0.25;
  int max_mesh_updates = 6;
  bool adapt = true;
  std::uint32_t seed = 12345u;
  double vtk_threshold = 1e-2;

  int num_steps() const;  // k, with t_i = i tau for i = 0..k
  double time(int i) const { return i * model.tau; }
};

// Checks every invariant of the spec; throws InvalidParameter.
void validate(const ScenarioSpec& spec);

// Scenario presets: the notched cylinder of length L, the notched sphere patch
// with half-height ybar, and a notch-free flat unit square.
ScenarioSpec cylinder_scenario(double L = 1.0);
ScenarioSpec sphere_scenario(double ybar = 0.5235987755982988);
ScenarioSpec flat_scenario();

SurfaceChart make_chart(const ScenarioSpec& spec);
// Physical rectangle of the chart (before extension).
Rect physical_domain(const ScenarioSpec& spec);
DomainSpec domain_spec(const ScenarioSpec& spec);
Triangulation build_scenario_mesh(const ScenarioSpec& spec, double target_h);

// g(t) on Dirichlet labels: +t, -t, 0. Throws NotDirichlet otherwise.
double boundary_value(const ScenarioSpec& spec, BoundaryLabel label, double t);
DirichletData boundary_data(const ScenarioSpec& spec, const Triangulation& mesh, double t);

// Config files: `key = value` lines, `#` comments, sections [chart], [notch],
// [hole] (repeatable), [extension], [bc], [params], [run].
ScenarioSpec parse_config(std::istream& is);
ScenarioSpec parse_config_string(const std::string& text);
ScenarioSpec load_config(const std::string& path);
void write_config(std::ostream& os, const ScenarioSpec& spec);
std::uint64_t params_hash(const ScenarioSpec& spec);

struct StepRecord {
  double time = 0.0;
  double crack_length = 0.0;  // kappa^{-1} D_h(v)
  int n_triangles = 0;
  double elastic = 0.0;
  double dissipation = 0.0;
  double total = 0.0;
  int altmin_sweeps = 0;
  int mesh_updates = 0;
  int stiffness_sign_violations = 0;
};

struct SimulationState {
  MeshPtr mesh;
  FeField u;
  FeField v;
  double time = 0.0;
  int step = 0;
};

// Per-step diagnostics not written to the CSV.
struct StepDiagnostics {
  double irreversibility_violation = 0.0;  // max(v_i - v_{i-1}) after transfer
  double v_min = 1.0;
  double v_max = 1.0;
  // F_h + penalty along each minimization on a fixed mesh: one trace per
  // alternating-minimization call, then the closing displacement/phase pair
  // starting from the transferred state.
  std::vector<std::vector<double>> sweep_traces;
};

struct RunOptions {
  std::string output_dir;  // empty: no files
  int vtk_every = 0;       // 0: only the final state
  int max_steps = -1;      // < 0: all steps
  bool verbose = false;
  std::function<void(const StepRecord&, const StepDiagnostics&, const SimulationState&)> on_step;
};

struct RunResult {
  std::vector<StepRecord> records;
  SimulationState final_state;
};

RunResult run(const ScenarioSpec& spec, const RunOptions& opts = {});

// kappa^{-1} times the dissipation part of the discrete energy.
double crack_length(const FeSpace& space, const FeField& v, const ModelParams& params);

// Legacy ASCII VTK of phi(x) + u(x) a_3(x). Cells whose minimum nodal v is
// below threshold are omitted.
void write_vtk(std::ostream& os, const SimulationState& state, const SurfaceChart& chart,
               double threshold);
// Writes <stem>.vtk (cut) and <stem>_full.vtk (all cells).
void export_vtk(const std::string& stem, const SimulationState& state, const SurfaceChart& chart,
                double threshold);

inline constexpr const char* kCsvHeader =
    "time,crack_length,n_triangles,elastic,dissipation,total,sweeps,mesh_updates,sign_violations";
void write_csv(std::ostream& os, const std::vector<StepRecord>& records);
void export_csv(const std::string& path, const std::vector<StepRecord>& records);
std::vector<StepRecord> read_csv(std::istream& is);

// Checkpoint directory: mesh.txt, u.txt, v.txt, scenario.cfg, meta.json.
void write_checkpoint(const std::string& dir, const ScenarioSpec& spec, const SimulationState& state);
struct Checkpoint {
  ScenarioSpec spec;
  SimulationState state;
};
Checkpoint read_checkpoint(const std::string& dir);

}  // namespace shellfrac
