#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shellfrac/driver.hpp"
#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

std::string num17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  return os;
}

void check_stream(const std::ostream& os, const std::string& path) {
  if (!os) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

void write_values(const std::string& path, const VecX& values) {
  std::ofstream os = open_out(path);
  for (Eigen::Index i = 0; i < values.size(); ++i) os << format_double(values(i)) << "\n";
  check_stream(os, path);
}

VecX read_values(const std::string& path, std::size_t n) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::Io, "malformed value '" + tok + "' in '" + path + "'");
    }
  }
  if (vals.size() != n) fail(ErrorCode::Io, "'" + path + "' does not match the mesh size");
  return Eigen::Map<VecX>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace

void write_vtk(std::ostream& os, const SimulationState& state, const SurfaceChart& chart,
               double threshold) {
  const Triangulation& mesh = *state.mesh;
  const VecX& u = state.u.values;
  const VecX& v = state.v.values;
  std::vector<int> cells;
  for (int t = 0; t < static_cast<int>(mesh.num_triangles()); ++t) {
    const Tri& tri = mesh.triangle(t);
    const double vmin = std::min({v(tri[0]), v(tri[1]), v(tri[2])});
    if (!(vmin < threshold)) cells.push_back(t);
  }
  os << "# vtk DataFile Version 3.0\n"
     << "shellfrac t=" << num17(state.time) << " step=" << state.step << "\n"
     << "ASCII\nDATASET UNSTRUCTURED_GRID\n"
     << "POINTS " << mesh.num_vertices() << " double\n";
  for (int i = 0; i < static_cast<int>(mesh.num_vertices()); ++i) {
    const Vec2& x = mesh.vertex(i);
    const Vec3 p = chart.embed(x) + u(i) * chart.normal(x);
    os << num17(p.x()) << " " << num17(p.y()) << " " << num17(p.z()) << "\n";
  }
  os << "CELLS " << cells.size() << " " << 4 * cells.size() << "\n";
  for (int t : cells) {
    const Tri& tri = mesh.triangle(t);
    os << "3 " << tri[0] << " " << tri[1] << " " << tri[2] << "\n";
  }
  os << "CELL_TYPES " << cells.size() << "\n";
  for (std::size_t i = 0; i < cells.size(); ++i) os << "5\n";
  os << "CELL_DATA " << cells.size() << "\n"
     << "SCALARS v_h double 1\nLOOKUP_TABLE default\n";
  for (int t : cells) {
    const Tri& tri = mesh.triangle(t);
    os << num17((v(tri[0]) + v(tri[1]) + v(tri[2])) / 3.0) << "\n";
  }
  os << "SCALARS u_h double 1\nLOOKUP_TABLE default\n";
  for (int t : cells) {
    const Tri& tri = mesh.triangle(t);
    os << num17((u(tri[0]) + u(tri[1]) + u(tri[2])) / 3.0) << "\n";
  }
  os << "POINT_DATA " << mesh.num_vertices() << "\n"
     << "SCALARS v double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << num17(v(i)) << "\n";
  os << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (Eigen::Index i = 0; i < u.size(); ++i) os << num17(u(i)) << "\n";
}

void export_vtk(const std::string& stem, const SimulationState& state, const SurfaceChart& chart,
                double threshold) {
  {
    const std::string path = stem + ".vtk";
    std::ofstream os = open_out(path);
    write_vtk(os, state, chart, threshold);
    check_stream(os, path);
  }
  const std::string path = stem + "_full.vtk";
  std::ofstream os = open_out(path);
  write_vtk(os, state, chart, 0.0);
  check_stream(os, path);
}

void write_csv(std::ostream& os, const std::vector<StepRecord>& records) {
  os << kCsvHeader << "\n";
  for (const StepRecord& r : records) {
    os << num17(r.time) << "," << num17(r.crack_length) << "," << r.n_triangles << ","
       << num17(r.elastic) << "," << num17(r.dissipation) << "," << num17(r.total) << ","
       << r.altmin_sweeps << "," << r.mesh_updates << "," << r.stiffness_sign_violations << "\n";
  }
}

void export_csv(const std::string& path, const std::vector<StepRecord>& records) {
  if (records.empty()) fail(ErrorCode::InvalidParameter, "no records to export");
  std::ofstream os = open_out(path);
  write_csv(os, records);
  check_stream(os, path);
}

std::vector<StepRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) fail(ErrorCode::Io, "unexpected CSV header");
  std::vector<StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 9) fail(ErrorCode::Io, "CSV row with " + std::to_string(f.size()) + " fields");
    StepRecord r;
    try {
      r.time = std::stod(f[0]);
      r.crack_length = std::stod(f[1]);
      r.n_triangles = std::stoi(f[2]);
      r.elastic = std::stod(f[3]);
      r.dissipation = std::stod(f[4]);
      r.total = std::stod(f[5]);
      r.altmin_sweeps = std::stoi(f[6]);
      r.mesh_updates = std::stoi(f[7]);
      r.stiffness_sign_violations = std::stoi(f[8]);
    } catch (const std::exception&) {
      fail(ErrorCode::Io, "malformed CSV row '" + line + "'");
    }
    out.push_back(r);
  }
  return out;
}

void write_checkpoint(const std::string& dir, const ScenarioSpec& spec, const SimulationState& state) {
  std::filesystem::create_directories(dir);
  write_mesh(dir + "/mesh.txt", *state.mesh);
  write_values(dir + "/u.txt", state.u.values);
  write_values(dir + "/v.txt", state.v.values);
  {
    const std::string path = dir + "/scenario.cfg";
    std::ofstream os = open_out(path);
    write_config(os, spec);
    check_stream(os, path);
  }
  nlohmann::json meta;
  meta["time"] = state.time;
  meta["step"] = state.step;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(params_hash(spec)));
  meta["params_hash"] = hash;
  const std::string path = dir + "/meta.json";
  std::ofstream os = open_out(path);
  os << meta.dump() << "\n";
  check_stream(os, path);
}

Checkpoint read_checkpoint(const std::string& dir) {
  Checkpoint cp;
  cp.spec = load_config(dir + "/scenario.cfg");
  MeshPtr mesh = std::make_shared<const Triangulation>(read_mesh(dir + "/mesh.txt"));
  cp.state.mesh = mesh;
  cp.state.u = FeField(mesh, read_values(dir + "/u.txt", mesh->num_vertices()));
  cp.state.v = FeField(mesh, read_values(dir + "/v.txt", mesh->num_vertices()));
  std::ifstream is(dir + "/meta.json");
  if (!is) fail(ErrorCode::Io, "cannot open '" + dir + "/meta.json'");
  try {
    const nlohmann::json meta = nlohmann::json::parse(is);
    cp.state.time = meta.at("time").get<double>();
    cp.state.step = meta.at("step").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, std::string("malformed checkpoint metadata: ") + e.what());
  }
  return cp;
}

}  // namespace shellfrac
