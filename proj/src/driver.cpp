#include "shellfrac/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>

#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvalidParameter, what);
}

std::string step_stem(const std::string& dir, int step) {
  std::ostringstream os;
  os << dir << "/state_" << step;
  return os.str();
}

}  // namespace

int ScenarioSpec::num_steps() const {
  return static_cast<int>(std::llround(final_time / model.tau));
}

void validate(const ScenarioSpec& spec) {
  validate(spec.model);
  require(spec.tol > 0.0 && spec.tol_m > 0.0 && spec.tol_v > 0.0, "tolerances must be positive");
  require(spec.max_it >= 1, "max_it must be at least 1");
  require(spec.final_time >= 0.0 && std::isfinite(spec.final_time), "final_time must be >= 0");
  const double k = spec.final_time / spec.model.tau;
  require(std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k),
          "final_time must be an integer multiple of tau");
  require(spec.target_h > 0.0, "target_h must be positive");
  require(spec.h_min > 0.0 && spec.h_max >= spec.h_min, "need 0 < h_min <= h_max");
  require(spec.max_mesh_updates >= 1, "max_mesh_updates must be at least 1");
  require(spec.vtk_threshold >= 0.0, "vtk_threshold must be >= 0");
}

ScenarioSpec cylinder_scenario(double L) {
  ScenarioSpec s;
  s.name = "cylinder";
  s.chart = ChartKind::Cylinder;
  s.length = L;
  s.notch = Rect{-1e-3, 1e-3, 0.0, 0.3};
  return s;
}

ScenarioSpec sphere_scenario(double ybar) {
  ScenarioSpec s;
  s.name = "sphere";
  s.chart = ChartKind::Sphere;
  s.xbar = std::numbers::pi / 2;
  s.ybar = ybar;
  s.notch = Rect{-1e-3, 1e-3, -ybar, 0.3 - ybar};
  s.final_time = 2.4;
  return s;
}

ScenarioSpec flat_scenario() {
  ScenarioSpec s;
  s.name = "flat";
  s.chart = ChartKind::Flat;
  s.flat_domain = Rect{0.0, 1.0, 0.0, 1.0};
  s.extension_depth = 0.0;
  s.dirichlet_bottom = false;
  s.final_time = 0.0;
  return s;
}

SurfaceChart make_chart(const ScenarioSpec& spec) {
  switch (spec.chart) {
    case ChartKind::Cylinder: return make_cylinder(spec.radius, spec.length, spec.lambda, spec.mu);
    case ChartKind::Sphere: return make_sphere(spec.radius, spec.xbar, spec.ybar, spec.lambda, spec.mu);
    case ChartKind::Flat: return make_flat(spec.flat_domain, spec.lambda, spec.mu);
    case ChartKind::Custom: break;
  }
  fail(ErrorCode::InvalidParameter, "custom charts cannot be described by a scenario");
}

Rect physical_domain(const ScenarioSpec& spec) { return make_chart(spec).domain(); }

DomainSpec domain_spec(const ScenarioSpec& spec) {
  DomainSpec d;
  d.domain = physical_domain(spec);
  d.notch = spec.notch;
  d.holes = spec.holes;
  d.extension_depth = spec.extension_depth;
  d.dirichlet_bottom = spec.dirichlet_bottom;
  d.dirichlet_gap = spec.dirichlet_gap;
  d.seed = spec.seed;
  return d;
}

Triangulation build_scenario_mesh(const ScenarioSpec& spec, double target_h) {
  const DomainSpec d = domain_spec(spec);
  const SurfaceChart chart = make_chart(spec);
  const Rect ext = d.extended();
  for (const Vec2& corner : {Vec2(ext.x_min, ext.y_min), Vec2(ext.x_max, ext.y_max)}) {
    if (!chart.is_valid_point(corner))
      fail(ErrorCode::Geometry, "extended domain leaves the chart's validity region");
  }
  return build_domain_mesh(d, target_h);
}

double boundary_value(const ScenarioSpec&, BoundaryLabel label, double t) {
  switch (label) {
    case BoundaryLabel::DirichletPlus: return t;
    case BoundaryLabel::DirichletMinus: return -t;
    case BoundaryLabel::DirichletZero: return 0.0;
    default: break;
  }
  fail(ErrorCode::NotDirichlet, std::string("label ") + label_name(label) + " carries no Dirichlet data");
}

DirichletData boundary_data(const ScenarioSpec& spec, const Triangulation& mesh, double t) {
  return dirichlet_from_labels(mesh, [&](BoundaryLabel l) { return boundary_value(spec, l, t); });
}

double crack_length(const FeSpace& space, const FeField& v, const ModelParams& params) {
  const FeField u0 = FeField::constant(space.mesh_ptr(), 0.0);
  return energy(space, u0, v, nullptr, params).dissipation / params.kappa;
}

namespace {

struct Adapted {
  MeshPtr mesh;
  FeField u, v, prev;
};

// Metric from the current state, new mesh, and transfer of u, v and the bound.
Adapted adapt_mesh(const ScenarioSpec& spec, const FeSpace& space, const FeField& u,
                   const FeField& v, const FeField& prev) {
  const EstimatorReport rep = localized_estimator(space, u, v, prev, spec.model);
  const MetricField metric = build_metric(rep, space.mesh_ptr(), spec.tol,
                                          MetricClamp::from_sizes(spec.h_min, spec.h_max));
  MeshPtr mesh = remesh(metric);
  const TransferOperator op(space.mesh_ptr(), mesh);
  Adapted out;
  out.mesh = mesh;
  out.u = op.apply(u);
  out.v = op.apply(v, true);
  out.prev = op.apply(prev, true);
  // The bound is transferred with the same weights, so v <= prev holds up to
  // roundoff; enforce it exactly.
  out.v.values = out.v.values.cwiseMin(out.prev.values);
  return out;
}

}  // namespace

RunResult run(const ScenarioSpec& spec, const RunOptions& opts) {
  validate(spec);
  const SurfaceChart chart = make_chart(spec);
  const ModelParams& params = spec.model;
  SolverOptions sopts;
  sopts.max_sweeps = spec.max_it;
  sopts.tol_v = spec.tol_v;

  if (!opts.output_dir.empty()) std::filesystem::create_directories(opts.output_dir);

  MeshPtr mesh = std::make_shared<const Triangulation>(build_scenario_mesh(spec, spec.target_h));
  FeField u = FeField::constant(mesh, 0.0);
  FeField v = FeField::constant(mesh, 1.0);
  FeField prev = v;

  RunResult result;
  int k = spec.num_steps();
  if (opts.max_steps >= 0) k = std::min(k, opts.max_steps - 1);
  SimulationState state;
  for (int i = 0; i <= k; ++i) {
    const double t = spec.time(i);
    StepRecord rec;
    StepDiagnostics diag;
    rec.time = t;
    try {
      auto space = std::make_unique<FeSpace>(mesh, chart);
      DirichletData bc = boundary_data(spec, *mesh, t);
      int mesh_updates = 0;
      int sweeps = 0;
      if (spec.adapt) {
        for (;;) {
          const AltMinResult am = alternate_minimize(*space, u, v, prev, bc, params, sopts);
          sweeps += am.iterations;
          diag.sweep_traces.push_back(am.energy_trace);
          u = am.u;
          v = am.v;
          const int n_old = static_cast<int>(mesh->num_triangles());
          Adapted a = adapt_mesh(spec, *space, u, v, prev);
          ++mesh_updates;
          mesh = a.mesh;
          u = std::move(a.u);
          v = std::move(a.v);
          prev = std::move(a.prev);
          space = std::make_unique<FeSpace>(mesh, chart);
          bc = boundary_data(spec, *mesh, t);
          const int n_new = static_cast<int>(mesh->num_triangles());
          const double dn = std::abs(n_new - n_old) / static_cast<double>(n_old);
          if (opts.verbose) {
            std::cerr << "  t=" << t << " update " << mesh_updates << ": " << n_old << " -> " << n_new
                      << " triangles, sweeps " << am.iterations << ", dv " << am.final_increment << "\n";
          }
          if ((dn < spec.tol_m && am.final_increment < spec.tol_v) ||
              mesh_updates >= spec.max_mesh_updates)
            break;
        }
      }
      // Final minimization pair on the current mesh, starting from the
      // transferred state with the current boundary values.
      for (int l = 0; l < space->num_dofs(); ++l)
        if (bc.fixed[static_cast<std::size_t>(l)]) u.values(l) = bc.values(l);
      std::vector<double> closing{energy(*space, u, v, &prev, params).total};
      u = solve_displacement(*space, v, bc, params, sopts, &u);
      FeField vi = solve_phase(*space, u, prev, prev, params, sopts, &v);
      ++sweeps;
      diag.irreversibility_violation = (vi.values - prev.values).maxCoeff();
      diag.v_min = vi.values.minCoeff();
      diag.v_max = vi.values.maxCoeff();
      v = std::move(vi);
      const DiscreteEnergyParts e = energy(*space, u, v, nullptr, params);
      closing.push_back(energy(*space, u, v, &prev, params).total);
      diag.sweep_traces.push_back(std::move(closing));
      rec.crack_length = e.dissipation / params.kappa;
      rec.n_triangles = static_cast<int>(mesh->num_triangles());
      rec.elastic = e.elastic;
      rec.dissipation = e.dissipation;
      rec.total = e.elastic + e.dissipation;
      rec.altmin_sweeps = sweeps;
      rec.mesh_updates = mesh_updates;
      rec.stiffness_sign_violations =
          static_cast<int>(check_stiffness_sign(*mesh, chart).violations.size());
      prev = v;
      state = SimulationState{mesh, u, v, t, i};
    } catch (const Error&) {
      if (!opts.output_dir.empty()) {
        write_checkpoint(opts.output_dir + "/failed_step", spec,
                         SimulationState{mesh, u, v, t, i});
      }
      throw;
    }
    result.records.push_back(rec);
    if (opts.verbose) {
      std::cerr << "step " << i << " t=" << t << " crack_length=" << rec.crack_length
                << " triangles=" << rec.n_triangles << " vmin=" << diag.v_min << "\n";
    }
    if (!opts.output_dir.empty()) {
      const bool last = i == k;
      if (last || (opts.vtk_every > 0 && i % opts.vtk_every == 0))
        export_vtk(step_stem(opts.output_dir, i), state, chart, spec.vtk_threshold);
      export_csv(opts.output_dir + "/records.csv", result.records);
      if (last) write_checkpoint(opts.output_dir + "/checkpoint", spec, state);
    }
    if (opts.on_step) opts.on_step(rec, diag, state);
  }
  result.final_state = state;
  return result;
}

}  // namespace shellfrac
