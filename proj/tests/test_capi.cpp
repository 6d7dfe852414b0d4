#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "shellfrac.h"

namespace fs = std::filesystem;

TEST_SUITE("capi") {

TEST_CASE("status names and null arguments") {
  CHECK(std::string(sf_status_name(SF_OK)) == "ok");
  CHECK(std::string(sf_status_name(SF_ERR_CONFIG)) == "config");
  CHECK(std::string(sf_status_name(SF_ERR_NULL_ARGUMENT)) == "null-argument");
  sf_scenario* s = nullptr;
  CHECK(sf_scenario_preset(nullptr, &s) == SF_ERR_NULL_ARGUMENT);
  CHECK(std::string(sf_last_error()).find("preset") != std::string::npos);
  CHECK(sf_scenario_preset("cylinder", nullptr) == SF_ERR_NULL_ARGUMENT);
  CHECK(sf_scenario_preset("torus", &s) == SF_ERR_INVALID_PARAMETER);
  CHECK(sf_scenario_parse("bogus = 1\n", &s) == SF_ERR_CONFIG);
  CHECK(sf_scenario_load("/nonexistent.cfg", &s) == SF_ERR_IO);
  CHECK(sf_mesh_num_vertices(nullptr) == 0);
  sf_scenario_free(nullptr);
  sf_mesh_free(nullptr);
  sf_run_free(nullptr);
}

TEST_CASE("scenario to config text") {
  sf_scenario* s = nullptr;
  REQUIRE(sf_scenario_preset("sphere", &s) == SF_OK);
  size_t needed = 0;
  REQUIRE(sf_scenario_to_config(s, nullptr, 0, &needed) == SF_OK);
  std::vector<char> buf(needed);
  REQUIRE(sf_scenario_to_config(s, buf.data(), buf.size(), nullptr) == SF_OK);
  sf_scenario* t = nullptr;
  REQUIRE(sf_scenario_parse(buf.data(), &t) == SF_OK);
  size_t needed2 = 0;
  sf_scenario_to_config(t, nullptr, 0, &needed2);
  CHECK(needed == needed2);
  sf_scenario_free(s);
  sf_scenario_free(t);
}

TEST_CASE("meshes") {
  sf_scenario* s = nullptr;
  REQUIRE(sf_scenario_preset("cylinder", &s) == SF_OK);
  sf_mesh* m = nullptr;
  REQUIRE(sf_mesh_build(s, 0.1, &m) == SF_OK);
  const size_t nv = sf_mesh_num_vertices(m), nt = sf_mesh_num_triangles(m);
  CHECK(nv > 0);
  std::vector<double> xy(2 * nv);
  std::vector<int> tri(3 * nt);
  CHECK(sf_mesh_vertices(m, xy.data()) == SF_OK);
  CHECK(sf_mesh_triangles(m, tri.data()) == SF_OK);
  for (int i : tri) REQUIRE((i >= 0 && static_cast<size_t>(i) < nv));

  const fs::path p = fs::temp_directory_path() / "shellfrac_capi_mesh.txt";
  REQUIRE(sf_mesh_write(m, p.string().c_str()) == SF_OK);
  sf_mesh* back = nullptr;
  REQUIRE(sf_mesh_read(p.string().c_str(), &back) == SF_OK);
  CHECK(sf_mesh_num_triangles(back) == nt);

  int violations = -1;
  double maxpos = -1, tol = -1;
  std::vector<int> pairs(20);
  CHECK(sf_mesh_check_stiffness_sign(m, s, &violations, pairs.data(), 10, &maxpos, &tol) == SF_OK);
  CHECK(violations >= 0);
  CHECK(tol > 0.0);
  CHECK(sf_mesh_check_stiffness_sign(m, s, nullptr, nullptr, 0, nullptr, nullptr) == SF_ERR_NULL_ARGUMENT);
  CHECK(sf_mesh_read("/nonexistent_mesh.txt", &back) != SF_OK);
  sf_mesh_free(back);
  sf_mesh_free(m);
  sf_scenario_free(s);
  fs::remove(p);
}

TEST_CASE("short run through the C interface") {
  const char* cfg =
      "name = capi\nfinal_time = 0.02\ntarget_h = 0.1\nadapt = false\n[params]\ntau = 0.01\n";
  sf_scenario* s = nullptr;
  REQUIRE(sf_scenario_parse(cfg, &s) == SF_OK);
  const fs::path dir = fs::temp_directory_path() / "shellfrac_capi_run";
  fs::remove_all(dir);
  sf_run* r = nullptr;
  REQUIRE(sf_run_scenario(s, dir.string().c_str(), 1, -1, 0, &r) == SF_OK);
  REQUIRE(sf_run_num_records(r) == 3);
  sf_step_record rec{};
  REQUIRE(sf_run_record(r, 2, &rec) == SF_OK);
  CHECK(rec.time == doctest::Approx(0.02));
  CHECK(rec.n_triangles > 0);
  CHECK(sf_run_record(r, 3, &rec) == SF_ERR_INVALID_PARAMETER);
  sf_mesh* fm = nullptr;
  REQUIRE(sf_run_final_mesh(r, &fm) == SF_OK);
  std::vector<double> v(sf_mesh_num_vertices(fm));
  CHECK(sf_run_final_field(r, 1, v.data(), v.size()) == SF_OK);
  for (double x : v) REQUIRE((x >= 0.0 && x <= 1.0));
  CHECK(sf_run_final_field(r, 2, v.data(), v.size()) == SF_ERR_INVALID_PARAMETER);
  CHECK(sf_run_final_field(r, 0, v.data(), 1) == SF_ERR_INVALID_PARAMETER);
  const fs::path csv = dir / "copy.csv";
  CHECK(sf_write_csv(r, csv.string().c_str()) == SF_OK);
  std::ifstream a(csv), b(dir / "records.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  double xi = -1.0;
  const fs::path est = dir / "estimator.csv";
  CHECK(sf_estimate_checkpoint((dir / "checkpoint").string().c_str(), est.string().c_str(), &xi) == SF_OK);
  CHECK(xi >= 0.0);
  CHECK(fs::exists(est));
  CHECK(sf_estimate_checkpoint((dir / "missing").string().c_str(), nullptr, nullptr) != SF_OK);
  sf_mesh_free(fm);
  sf_run_free(r);
  sf_scenario_free(s);
  fs::remove_all(dir);
}

}
