#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shellfrac.h"

namespace {

int report(sf_status st) {
  if (st == SF_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", sf_status_name(st), sf_last_error());
  return 1;
}

int cmd_run(const std::string& config, const std::string& out_dir, int vtk_every, long seed,
            int max_steps, bool verbose) {
  sf_scenario* sc = nullptr;
  if (int rc = report(sf_scenario_load(config.c_str(), &sc))) return rc;
  if (seed >= 0) sf_scenario_set_seed(sc, static_cast<unsigned>(seed));
  sf_run* run = nullptr;
  const sf_status st = sf_run_scenario(sc, out_dir.empty() ? nullptr : out_dir.c_str(), vtk_every,
                                       max_steps, verbose ? 1 : 0, &run);
  sf_scenario_free(sc);
  if (int rc = report(st)) return rc;
  const size_t n = sf_run_num_records(run);
  std::printf("time,crack_length,n_triangles\n");
  for (size_t i = 0; i < n; ++i) {
    sf_step_record r;
    sf_run_record(run, i, &r);
    std::printf("%.6g,%.9g,%d\n", r.time, r.crack_length, r.n_triangles);
  }
  sf_run_free(run);
  return 0;
}

int cmd_check_mesh(const std::string& mesh_path, const std::string& config) {
  sf_scenario* sc = nullptr;
  if (int rc = report(sf_scenario_load(config.c_str(), &sc))) return rc;
  sf_mesh* mesh = nullptr;
  if (int rc = report(sf_mesh_read(mesh_path.c_str(), &mesh))) {
    sf_scenario_free(sc);
    return rc;
  }
  int count = 0;
  double max_pos = 0.0, tol = 0.0;
  std::vector<int> pairs(2 * 50);
  const sf_status st = sf_mesh_check_stiffness_sign(mesh, sc, &count, pairs.data(), 50, &max_pos, &tol);
  if (st == SF_OK) {
    std::printf("vertices %zu triangles %zu\n", sf_mesh_num_vertices(mesh), sf_mesh_num_triangles(mesh));
    std::printf("stiffness-sign violations %d (max positive off-diagonal %.3e, tolerance %.3e)\n",
                count, max_pos, tol);
    for (int i = 0; i < std::min(count, 50); ++i) std::printf("  %d %d\n", pairs[2 * i], pairs[2 * i + 1]);
    if (count > 50) std::printf("  ... %d more\n", count - 50);
  }
  sf_mesh_free(mesh);
  sf_scenario_free(sc);
  return report(st);
}

int cmd_estimate(const std::string& checkpoint, const std::string& out_dir) {
  const std::string csv = (out_dir.empty() ? checkpoint : out_dir) + "/estimator.csv";
  double xi = 0.0;
  if (int rc = report(sf_estimate_checkpoint(checkpoint.c_str(), csv.c_str(), &xi))) return rc;
  std::printf("global estimator %.9g\nper-element values written to %s\n", xi, csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field fracture of thin shells with anisotropic mesh adaptation"};
  app.require_subcommand(1);

  std::string config, out_dir, mesh_path, checkpoint;
  int vtk_every = 0, max_steps = -1;
  long seed = -1;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "run a scenario");
  run->add_option("config", config, "scenario config file")->required();
  run->add_option("--output-dir", out_dir, "directory for CSV, VTK and checkpoint files");
  run->add_option("--vtk-every", vtk_every, "write VTK every n steps (0: final step only)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "seed of the initial mesh lattice jitter")->check(CLI::NonNegativeNumber);
  run->add_option("--max-steps", max_steps, "stop after n time steps");
  run->add_flag("-v,--verbose", verbose, "progress on stderr");

  auto* check = app.add_subcommand("check-mesh", "stiffness-sign report for a mesh file");
  check->add_option("meshfile", mesh_path, "mesh in shellmesh format")->required();
  check->add_option("config", config, "scenario config file (chart)")->required();

  auto* est = app.add_subcommand("estimate", "estimator dump for a checkpoint");
  est->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  est->add_option("--output-dir", out_dir, "directory for estimator.csv");

  CLI11_PARSE(app, argc, argv);
  if (*run) return cmd_run(config, out_dir, vtk_every, seed, max_steps, verbose);
  if (*check) return cmd_check_mesh(mesh_path, config);
  return cmd_estimate(checkpoint, out_dir);
}
