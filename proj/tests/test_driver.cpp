#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "shellfrac/driver.hpp"
#include "shellfrac/error.hpp"
#include "support.hpp"

using namespace shellfrac;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidParameter;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("shellfrac_test_" + name);
  fs::remove_all(p);
  return p;
}

// Notched flat strip loaded by +-t on the bottom edge of its extension.
ScenarioSpec flat_notched() {
  ScenarioSpec s = flat_scenario();
  s.name = "flat_notched";
  s.flat_domain = Rect{-0.5, 0.5, 0.0, 1.0};
  s.notch = Rect{-1e-3, 1e-3, 0.0, 0.3};
  s.extension_depth = 0.1;
  s.dirichlet_bottom = true;
  s.model.epsilon = 0.02;
  s.model.tau = 0.1;
  s.final_time = 0.3;
  s.target_h = 0.04;
  s.adapt = false;
  return s;
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("defaults") {
  const ScenarioSpec s = cylinder_scenario();
  CHECK(s.tol == 1e-3);
  CHECK(s.tol_m == 1e-2);
  CHECK(s.tol_v == 2e-3);
  CHECK(s.max_it == 8);
  CHECK(s.model.tau == 1e-2);
  CHECK(s.model.epsilon == 5e-3);
  CHECK(s.model.eta == 1e-5);
  CHECK(s.model.kappa == 1.0);
  CHECK(s.lambda == 0.0);
  CHECK(s.mu == 1.0);
  CHECK(s.num_steps() == 220);
  CHECK(s.time(191) == doctest::Approx(1.91));
}

TEST_CASE("validation") {
  ScenarioSpec s = cylinder_scenario();
  s.final_time = 0.015;
  CHECK(code_of([&] { validate(s); }) == ErrorCode::InvalidParameter);
  s = cylinder_scenario();
  s.max_it = 0;
  CHECK(code_of([&] { validate(s); }) == ErrorCode::InvalidParameter);
  s = cylinder_scenario();
  s.tol_v = 0.0;
  CHECK(code_of([&] { validate(s); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("boundary values") {
  const ScenarioSpec s = cylinder_scenario();
  CHECK(boundary_value(s, BoundaryLabel::DirichletPlus, 1.9) == 1.9);
  CHECK(boundary_value(s, BoundaryLabel::DirichletMinus, 0.0) == 0.0);
  CHECK(boundary_value(s, BoundaryLabel::DirichletMinus, 0.7) == -0.7);
  CHECK(boundary_value(s, BoundaryLabel::DirichletZero, 1.3) == 0.0);
  CHECK(code_of([&] { boundary_value(s, BoundaryLabel::Free, 1.0); }) == ErrorCode::NotDirichlet);
  CHECK(code_of([&] { boundary_value(s, BoundaryLabel::Notch, 1.0); }) == ErrorCode::NotDirichlet);
  CHECK(code_of([&] { boundary_value(s, BoundaryLabel::Hole, 1.0); }) == ErrorCode::NotDirichlet);
}

TEST_CASE("config round trip") {
  ScenarioSpec s = cylinder_scenario(2.0);
  s.holes = {{Vec2(0.3, 0.75), 0.15}};
  s.model.tau = 0.02;
  s.tol = 0.01;
  s.seed = 77;
  s.final_time = 3.0;
  std::ostringstream a;
  write_config(a, s);
  const ScenarioSpec back = parse_config_string(a.str());
  std::ostringstream b;
  write_config(b, back);
  CHECK(a.str() == b.str());
  CHECK(params_hash(s) == params_hash(back));
  ScenarioSpec other = back;
  other.tol = 0.02;
  CHECK(params_hash(other) != params_hash(back));
}

TEST_CASE("config parsing") {
  const ScenarioSpec s = parse_config_string(
      "# comment\nname = demo\nfinal_time = 0.1\n[chart]\ntype = sphere\nybar = pi/6\n[params]\ntau = 0.05\n");
  CHECK(s.chart == ChartKind::Sphere);
  CHECK(s.ybar == doctest::Approx(std::numbers::pi / 6));
  REQUIRE(s.notch.has_value());
  CHECK(s.notch->y_min == doctest::Approx(-std::numbers::pi / 6));
  CHECK(s.model.tau == 0.05);
  CHECK(s.num_steps() == 2);
  CHECK(code_of([] { parse_config_string("bogus = 1\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config_string("tol = 1\ntol = 2\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config_string("tol = abc\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config_string("[nowhere]\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config_string("final_time = 0.015\n"); }) == ErrorCode::Config);
  CHECK(code_of([] { load_config("/nonexistent/file.cfg"); }) == ErrorCode::Io);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"cylinder_L1", "cylinder_L2", "cylinder_desk", "cylinder_hole",
                           "cylinder_three_holes", "sphere", "sphere_hole"}) {
    const ScenarioSpec s = load_config(std::string(SHELLFRAC_CONFIG_DIR) + "/" + name + ".cfg");
    CHECK_NOTHROW(domain_spec(s));
  }
}

TEST_CASE("CSV") {
  StepRecord r;
  std::ostringstream one;
  write_csv(one, {r});
  CHECK(one.str() == std::string(kCsvHeader) + "\n0,0,0,0,0,0,0,0,0\n");
  std::vector<StepRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[static_cast<std::size_t>(i)].time = 0.1 * i + 1e-17;
    recs[static_cast<std::size_t>(i)].crack_length = std::numbers::pi / (i + 3);
    recs[static_cast<std::size_t>(i)].n_triangles = 100 + i;
    recs[static_cast<std::size_t>(i)].total = 1.0 / 3.0;
  }
  std::ostringstream os;
  write_csv(os, recs);
  std::istringstream is(os.str());
  const auto back = read_csv(is);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].time == recs[i].time);
    CHECK(back[i].crack_length == recs[i].crack_length);
    CHECK(back[i].n_triangles == recs[i].n_triangles);
    CHECK(back[i].total == recs[i].total);
  }
  CHECK(code_of([] { export_csv("/tmp/never.csv", {}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("VTK output") {
  const ScenarioSpec s = cylinder_scenario();
  const SurfaceChart chart = make_chart(s);
  const MeshPtr m = std::make_shared<const Triangulation>(build_scenario_mesh(s, 0.1));
  const FeField u = FeField::constant(m, 0.0);
  FeField v = FeField::constant(m, 1.0);
  v.values(0) = 0.0;
  const SimulationState st{m, u, v, 0.5, 3};
  std::ostringstream cut, full;
  write_vtk(cut, st, chart, 1e-2);
  write_vtk(full, st, chart, 0.0);
  std::istringstream is(full.str());
  std::string line;
  int cells_cut = -1, cells_full = -1;
  for (std::istringstream c(cut.str()); std::getline(c, line);)
    if (line.rfind("CELLS", 0) == 0) cells_cut = std::stoi(line.substr(6));
  double worst = 0.0;
  while (std::getline(is, line)) {
    if (line.rfind("POINTS", 0) == 0) {
      const int n = std::stoi(line.substr(7));
      for (int i = 0; i < n; ++i) {
        double x, y, z;
        is >> x >> y >> z;
        worst = std::max(worst, std::abs(std::hypot(x, y) - 1.0));
      }
    }
    if (line.rfind("CELLS", 0) == 0) cells_full = std::stoi(line.substr(6));
  }
  CHECK(worst < 1e-12);
  CHECK(cells_full == static_cast<int>(m->num_triangles()));
  CHECK(cells_cut == cells_full - static_cast<int>(m->vertex_triangles(0).size()));

  // Flat chart: the displacement is the z coordinate.
  const ScenarioSpec f = flat_scenario();
  const MeshPtr fm = std::make_shared<const Triangulation>(build_scenario_mesh(f, 0.25));
  const FeField fu = interpolate(fm, [](const Vec2& x) { return x.x() + 2 * x.y(); });
  std::ostringstream fv;
  write_vtk(fv, SimulationState{fm, fu, FeField::constant(fm, 1.0), 0.0, 0}, make_chart(f), 0.01);
  std::istringstream fis(fv.str());
  while (std::getline(fis, line))
    if (line.rfind("POINTS", 0) == 0) break;
  for (int i = 0; i < static_cast<int>(fm->num_vertices()); ++i) {
    double x, y, z;
    fis >> x >> y >> z;
    REQUIRE(std::abs(z - (x + 2 * y)) < 1e-12);
  }
}

TEST_CASE("zero-length run") {
  ScenarioSpec s = flat_notched();
  s.final_time = 0.0;
  const RunResult r = run(s);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].time == 0.0);
  CHECK(r.records[0].crack_length < 1e-12);
  CHECK(r.records[0].n_triangles >= 1);
}

TEST_CASE("checkpoint round trip and files") {
  ScenarioSpec s = flat_notched();
  s.final_time = 0.1;
  const fs::path dir = scratch("ckpt");
  RunOptions o;
  o.output_dir = dir.string();
  o.vtk_every = 1;
  const RunResult r = run(s, o);
  CHECK(fs::exists(dir / "records.csv"));
  CHECK(fs::exists(dir / "state_0.vtk"));
  CHECK(fs::exists(dir / "state_1_full.vtk"));
  const Checkpoint cp = read_checkpoint((dir / "checkpoint").string());
  CHECK(cp.state.step == 1);
  CHECK(cp.state.time == doctest::Approx(0.1));
  CHECK((cp.state.v.values - r.final_state.v.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((cp.state.u.values - r.final_state.u.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(cp.state.mesh->same_as(*r.final_state.mesh));
  CHECK(params_hash(cp.spec) == params_hash(s));
  fs::remove_all(dir);
}

TEST_CASE("symmetric loading gives a symmetric phase field") {
  ScenarioSpec s = flat_notched();
  s.target_h = 0.01;
  const RunResult r = run(s);
  const SimulationState& st = r.final_state;
  const PointLocator loc(st.mesh);
  double asym = 0.0, vmin = 1.0;
  for (int i = 0; i < static_cast<int>(st.mesh->num_vertices()); ++i) {
    const Vec2 x = st.mesh->vertex(i);
    // Skip the slit and the loaded strip, where the jump in boundary data is
    // resolved only by the local mesh.
    if (std::abs(x.x()) < 2e-3 || x.y() < 0.0) continue;
    const Vec2 mirror(-x.x(), x.y());
    const auto hit = loc.locate_towards(mirror, Vec2(-x.x() * 1.01, x.y()), 1e-9);
    const Tri& t = st.mesh->triangle(hit.triangle);
    double vm = 0.0;
    for (int k = 0; k < 3; ++k) vm += hit.bary[static_cast<std::size_t>(k)] * st.v.values(t[k]);
    asym = std::max(asym, std::abs(vm - st.v.values(i)));
    vmin = std::min(vmin, st.v.values(i));
  }
  CHECK(vmin < 0.9);
  CHECK(asym < 5e-2);
}

TEST_CASE("runs are deterministic and irreversible") {
  ScenarioSpec s = flat_notched();
  s.adapt = true;
  s.tol = 0.05;
  s.h_min = 0.005;
  s.final_time = 0.2;
  double worst = 0.0;
  RunOptions o;
  o.on_step = [&](const StepRecord&, const StepDiagnostics& d, const SimulationState&) {
    worst = std::max(worst, d.irreversibility_violation);
  };
  const RunResult a = run(s, o);
  const RunResult b = run(s);
  std::ostringstream ca, cb;
  write_csv(ca, a.records);
  write_csv(cb, b.records);
  CHECK(ca.str() == cb.str());
  CHECK(worst <= 1e-10);
  for (std::size_t i = 1; i < a.records.size(); ++i)
    CHECK(a.records[i].crack_length >= a.records[i - 1].crack_length - 1e-6);
}

}
