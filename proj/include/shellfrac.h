#ifndef SHELLFRAC_H
#define SHELLFRAC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SF_API __declspec(dllexport)
#else
#define SF_API __attribute__((visibility("default")))
#endif

/* Status codes. Every function returning sf_status leaves a message for
   sf_last_error() on failure. */
typedef enum sf_status {
  SF_OK = 0,
  SF_ERR_INVALID_PARAMETER = 1,
  SF_ERR_CHART_DEGENERACY = 2,
  SF_ERR_DOMAIN = 3,
  SF_ERR_DEGENERATE_ELEMENT = 4,
  SF_ERR_INVALID_MESH = 5,
  SF_ERR_GEOMETRY = 6,
  SF_ERR_INPUT = 7,
  SF_ERR_MESH_MISMATCH = 8,
  SF_ERR_SOLVABILITY = 9,
  SF_ERR_SOLVER_FAILURE = 10,
  SF_ERR_NOT_DIRICHLET = 11,
  SF_ERR_POINT_LOCATION = 12,
  SF_ERR_IO = 13,
  SF_ERR_CONFIG = 14,
  SF_ERR_NULL_ARGUMENT = 99,
  SF_ERR_INTERNAL = 100
} sf_status;

/* Opaque handles. */
typedef struct sf_scenario sf_scenario;
typedef struct sf_mesh sf_mesh;
typedef struct sf_run sf_run;

typedef struct sf_step_record {
  double time;
  double crack_length;
  int n_triangles;
  double elastic;
  double dissipation;
  double total;
  int sweeps;
  int mesh_updates;
  int sign_violations;
} sf_step_record;

SF_API const char* sf_status_name(sf_status status);
/* Message of the last failure on the calling thread ("" if none). */
SF_API const char* sf_last_error(void);

/* Scenarios. preset is "cylinder", "sphere" or "flat". */
SF_API sf_status sf_scenario_preset(const char* preset, sf_scenario** out);
SF_API sf_status sf_scenario_load(const char* path, sf_scenario** out);
SF_API sf_status sf_scenario_parse(const char* text, sf_scenario** out);
SF_API sf_status sf_scenario_set_seed(sf_scenario* scenario, unsigned seed);
/* Writes the scenario in config syntax into buf (NUL terminated). *needed
   receives the required size including the terminator. */
SF_API sf_status sf_scenario_to_config(const sf_scenario* scenario, char* buf, size_t size,
                                       size_t* needed);
SF_API void sf_scenario_free(sf_scenario* scenario);

/* Meshes. */
SF_API sf_status sf_mesh_build(const sf_scenario* scenario, double target_h, sf_mesh** out);
SF_API sf_status sf_mesh_read(const char* path, sf_mesh** out);
SF_API sf_status sf_mesh_write(const sf_mesh* mesh, const char* path);
SF_API size_t sf_mesh_num_vertices(const sf_mesh* mesh);
SF_API size_t sf_mesh_num_triangles(const sf_mesh* mesh);
/* xy must hold 2 * num_vertices doubles, tri 3 * num_triangles ints. */
SF_API sf_status sf_mesh_vertices(const sf_mesh* mesh, double* xy);
SF_API sf_status sf_mesh_triangles(const sf_mesh* mesh, int* tri);
/* Number of vertex pairs violating the stiffness-sign condition for the
   scenario's chart; pairs (may be NULL) receives up to max_pairs index pairs,
   max_positive and tolerance (may be NULL) the largest positive off-diagonal
   entry and the test tolerance. */
SF_API sf_status sf_mesh_check_stiffness_sign(const sf_mesh* mesh, const sf_scenario* scenario,
                                              int* violations, int* pairs, size_t max_pairs,
                                              double* max_positive, double* tolerance);
SF_API void sf_mesh_free(sf_mesh* mesh);

/* Runs. output_dir may be NULL (no files); max_steps < 0 runs every step;
   vtk_every = 0 writes VTK only for the final step. */
SF_API sf_status sf_run_scenario(const sf_scenario* scenario, const char* output_dir, int vtk_every,
                                 int max_steps, int verbose, sf_run** out);
SF_API size_t sf_run_num_records(const sf_run* run);
SF_API sf_status sf_run_record(const sf_run* run, size_t index, sf_step_record* out);
SF_API sf_status sf_run_final_mesh(const sf_run* run, sf_mesh** out);
/* which: 0 for u, 1 for v; values must hold num_vertices doubles. */
SF_API sf_status sf_run_final_field(const sf_run* run, int which, double* values, size_t size);
SF_API void sf_run_free(sf_run* run);

/* Writes a CSV with records. */
SF_API sf_status sf_write_csv(const sf_run* run, const char* path);

/* Estimator dump for a checkpoint directory: per-element CSV
   "element_id,gamma,rho,xi" and the global estimator value. */
SF_API sf_status sf_estimate_checkpoint(const char* checkpoint_dir, const char* csv_path,
                                        double* global_xi);

#ifdef __cplusplus
}
#endif

#endif
