#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "shellfrac.h"
#include "shellfrac/driver.hpp"
#include "shellfrac/error.hpp"

using namespace shellfrac;

struct sf_scenario {
  ScenarioSpec spec;
};

struct sf_mesh {
  MeshPtr mesh;
};

struct sf_run {
  RunResult result;
};

namespace {

thread_local std::string g_last_error;

sf_status to_status(ErrorCode c) { return static_cast<sf_status>(static_cast<int>(c)); }

struct NullArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void need(const void* p, const char* name) {
  if (!p) throw NullArgument(std::string(name) + " is NULL");
}

template <class F>
sf_status guarded_args(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SF_OK;
  } catch (const NullArgument& e) {
    g_last_error = e.what();
    return SF_ERR_NULL_ARGUMENT;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SF_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* sf_status_name(sf_status status) {
  switch (status) {
    case SF_OK: return "ok";
    case SF_ERR_NULL_ARGUMENT: return "null-argument";
    case SF_ERR_INTERNAL: return "internal";
    default: break;
  }
  const int c = static_cast<int>(status);
  if (c >= static_cast<int>(ErrorCode::InvalidParameter) && c <= static_cast<int>(ErrorCode::Config))
    return error_code_name(static_cast<ErrorCode>(c));
  return "unknown";
}

const char* sf_last_error(void) { return g_last_error.c_str(); }

sf_status sf_scenario_preset(const char* preset, sf_scenario** out) {
  return guarded_args([&] {
    need(preset, "preset");
    need(out, "out");
    const std::string p = preset;
    auto s = std::make_unique<sf_scenario>();
    if (p == "cylinder")
      s->spec = cylinder_scenario();
    else if (p == "sphere")
      s->spec = sphere_scenario();
    else if (p == "flat")
      s->spec = flat_scenario();
    else
      fail(ErrorCode::InvalidParameter, "unknown preset '" + p + "'");
    *out = s.release();
  });
}

sf_status sf_scenario_load(const char* path, sf_scenario** out) {
  return guarded_args([&] {
    need(path, "path");
    need(out, "out");
    auto s = std::make_unique<sf_scenario>();
    s->spec = load_config(path);
    *out = s.release();
  });
}

sf_status sf_scenario_parse(const char* text, sf_scenario** out) {
  return guarded_args([&] {
    need(text, "text");
    need(out, "out");
    auto s = std::make_unique<sf_scenario>();
    s->spec = parse_config_string(text);
    *out = s.release();
  });
}

sf_status sf_scenario_set_seed(sf_scenario* scenario, unsigned seed) {
  return guarded_args([&] {
    need(scenario, "scenario");
    scenario->spec.seed = seed;
  });
}

sf_status sf_scenario_to_config(const sf_scenario* scenario, char* buf, size_t size, size_t* needed) {
  return guarded_args([&] {
    need(scenario, "scenario");
    std::ostringstream os;
    write_config(os, scenario->spec);
    const std::string text = os.str();
    if (needed) *needed = text.size() + 1;
    if (buf && size > 0) {
      const std::size_t n = std::min(size - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

void sf_scenario_free(sf_scenario* scenario) { delete scenario; }

sf_status sf_mesh_build(const sf_scenario* scenario, double target_h, sf_mesh** out) {
  return guarded_args([&] {
    need(scenario, "scenario");
    need(out, "out");
    auto m = std::make_unique<sf_mesh>();
    m->mesh = std::make_shared<const Triangulation>(build_scenario_mesh(scenario->spec, target_h));
    *out = m.release();
  });
}

sf_status sf_mesh_read(const char* path, sf_mesh** out) {
  return guarded_args([&] {
    need(path, "path");
    need(out, "out");
    auto m = std::make_unique<sf_mesh>();
    m->mesh = std::make_shared<const Triangulation>(read_mesh(std::string(path)));
    *out = m.release();
  });
}

sf_status sf_mesh_write(const sf_mesh* mesh, const char* path) {
  return guarded_args([&] {
    need(mesh, "mesh");
    need(path, "path");
    write_mesh(std::string(path), *mesh->mesh);
  });
}

size_t sf_mesh_num_vertices(const sf_mesh* mesh) { return mesh ? mesh->mesh->num_vertices() : 0; }

size_t sf_mesh_num_triangles(const sf_mesh* mesh) { return mesh ? mesh->mesh->num_triangles() : 0; }

sf_status sf_mesh_vertices(const sf_mesh* mesh, double* xy) {
  return guarded_args([&] {
    need(mesh, "mesh");
    need(xy, "xy");
    for (std::size_t i = 0; i < mesh->mesh->num_vertices(); ++i) {
      xy[2 * i] = mesh->mesh->vertices()[i].x();
      xy[2 * i + 1] = mesh->mesh->vertices()[i].y();
    }
  });
}

sf_status sf_mesh_triangles(const sf_mesh* mesh, int* tri) {
  return guarded_args([&] {
    need(mesh, "mesh");
    need(tri, "tri");
    for (std::size_t t = 0; t < mesh->mesh->num_triangles(); ++t)
      for (int k = 0; k < 3; ++k) tri[3 * t + static_cast<std::size_t>(k)] = mesh->mesh->triangles()[t][k];
  });
}

sf_status sf_mesh_check_stiffness_sign(const sf_mesh* mesh, const sf_scenario* scenario,
                                       int* violations, int* pairs, size_t max_pairs,
                                       double* max_positive, double* tolerance) {
  return guarded_args([&] {
    need(mesh, "mesh");
    need(scenario, "scenario");
    need(violations, "violations");
    const StiffnessSignReport rep = check_stiffness_sign(*mesh->mesh, make_chart(scenario->spec));
    *violations = static_cast<int>(rep.violations.size());
    if (pairs) {
      for (std::size_t i = 0; i < std::min(max_pairs, rep.violations.size()); ++i) {
        pairs[2 * i] = rep.violations[i].first;
        pairs[2 * i + 1] = rep.violations[i].second;
      }
    }
    if (max_positive) *max_positive = rep.max_positive_offdiag;
    if (tolerance) *tolerance = rep.tolerance;
  });
}

void sf_mesh_free(sf_mesh* mesh) { delete mesh; }

sf_status sf_run_scenario(const sf_scenario* scenario, const char* output_dir, int vtk_every,
                          int max_steps, int verbose, sf_run** out) {
  return guarded_args([&] {
    need(scenario, "scenario");
    need(out, "out");
    if (vtk_every < 0) fail(ErrorCode::InvalidParameter, "vtk_every must be >= 0");
    RunOptions opts;
    if (output_dir) opts.output_dir = output_dir;
    opts.vtk_every = vtk_every;
    opts.max_steps = max_steps;
    opts.verbose = verbose != 0;
    auto r = std::make_unique<sf_run>();
    r->result = run(scenario->spec, opts);
    *out = r.release();
  });
}

size_t sf_run_num_records(const sf_run* run) { return run ? run->result.records.size() : 0; }

sf_status sf_run_record(const sf_run* run, size_t index, sf_step_record* out) {
  return guarded_args([&] {
    need(run, "run");
    need(out, "out");
    if (index >= run->result.records.size()) fail(ErrorCode::InvalidParameter, "record index out of range");
    const StepRecord& r = run->result.records[index];
    *out = sf_step_record{r.time,  r.crack_length,  r.n_triangles,  r.elastic,
                          r.dissipation, r.total, r.altmin_sweeps, r.mesh_updates,
                          r.stiffness_sign_violations};
  });
}

sf_status sf_run_final_mesh(const sf_run* run, sf_mesh** out) {
  return guarded_args([&] {
    need(run, "run");
    need(out, "out");
    if (!run->result.final_state.mesh) fail(ErrorCode::InvalidParameter, "run has no final state");
    auto m = std::make_unique<sf_mesh>();
    m->mesh = run->result.final_state.mesh;
    *out = m.release();
  });
}

sf_status sf_run_final_field(const sf_run* run, int which, double* values, size_t size) {
  return guarded_args([&] {
    need(run, "run");
    need(values, "values");
    const SimulationState& s = run->result.final_state;
    if (!s.mesh) fail(ErrorCode::InvalidParameter, "run has no final state");
    if (which != 0 && which != 1) fail(ErrorCode::InvalidParameter, "which must be 0 (u) or 1 (v)");
    const VecX& f = which == 0 ? s.u.values : s.v.values;
    if (size < static_cast<std::size_t>(f.size())) fail(ErrorCode::InvalidParameter, "buffer too small");
    for (Eigen::Index i = 0; i < f.size(); ++i) values[i] = f(i);
  });
}

void sf_run_free(sf_run* run) { delete run; }

sf_status sf_write_csv(const sf_run* run, const char* path) {
  return guarded_args([&] {
    need(run, "run");
    need(path, "path");
    export_csv(path, run->result.records);
  });
}

sf_status sf_estimate_checkpoint(const char* checkpoint_dir, const char* csv_path, double* global_xi) {
  return guarded_args([&] {
    need(checkpoint_dir, "checkpoint_dir");
    const Checkpoint cp = read_checkpoint(checkpoint_dir);
    const FeSpace space(cp.state.mesh, make_chart(cp.spec));
    const EstimatorReport rep =
        localized_estimator(space, cp.state.u, cp.state.v, cp.state.v, cp.spec.model);
    if (csv_path) write_estimator_csv(std::string(csv_path), rep);
    if (global_xi) *global_xi = rep.global_xi;
  });
}

}  // extern "C"
