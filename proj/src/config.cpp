#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "shellfrac/driver.hpp"
#include "shellfrac/error.hpp"

namespace shellfrac {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

// One parsed section; [hole] may appear several times.
struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> keys;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(int line, const std::string& what) {
  std::ostringstream os;
  os << "config line " << line << ": " << what;
  fail(ErrorCode::Config, os.str());
}

double to_double(const Entry& e, const std::string& key) {
  const std::string& s = e.value;
  double x = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    // Allow "pi" and simple fractions of it, e.g. pi/6.
    if (s == "pi") return std::numbers::pi;
    if (s.rfind("pi/", 0) == 0) {
      double d = 0.0;
      auto [p2, ec2] = std::from_chars(s.data() + 3, end, d);
      if (ec2 == std::errc() && p2 == end && d != 0.0) return std::numbers::pi / d;
    }
    config_error(e.line, "key '" + key + "' expects a number, got '" + s + "'");
  }
  return x;
}

int to_int(const Entry& e, const std::string& key) {
  int x = 0;
  const char* end = e.value.data() + e.value.size();
  auto [ptr, ec] = std::from_chars(e.value.data(), end, x);
  if (ec != std::errc() || ptr != end)
    config_error(e.line, "key '" + key + "' expects an integer, got '" + e.value + "'");
  return x;
}

bool to_bool(const Entry& e, const std::string& key) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  config_error(e.line, "key '" + key + "' expects true/false, got '" + e.value + "'");
}

class Reader {
public:
  explicit Reader(Section& s) : s_(s) {}
  template <class F>
  void get(const std::string& key, F&& apply) {
    auto it = s_.keys.find(key);
    if (it == s_.keys.end()) return;
    apply(it->second);
    s_.keys.erase(it);
  }
  void num(const std::string& key, double& out) {
    get(key, [&](const Entry& e) { out = to_double(e, key); });
  }
  void integer(const std::string& key, int& out) {
    get(key, [&](const Entry& e) { out = to_int(e, key); });
  }
  void flag(const std::string& key, bool& out) {
    get(key, [&](const Entry& e) { out = to_bool(e, key); });
  }
  bool has(const std::string& key) const { return s_.keys.count(key) != 0; }
  void finish() const {
    if (!s_.keys.empty()) {
      const auto& [k, e] = *s_.keys.begin();
      config_error(e.line, "unknown key '" + k + "' in section [" + s_.name + "]");
    }
  }

private:
  Section& s_;
};

std::string fmt(double x) { return format_double(x); }

}  // namespace

ScenarioSpec parse_config(std::istream& is) {
  std::vector<Section> sections(1);
  sections[0].name = "run";
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') config_error(line_no, "malformed section header");
      Section s;
      s.name = trim(line.substr(1, line.size() - 2));
      s.line = line_no;
      static const char* known[] = {"chart", "notch", "hole", "extension", "bc", "params", "run"};
      bool ok = false;
      for (const char* k : known) ok = ok || s.name == k;
      if (!ok) config_error(line_no, "unknown section [" + s.name + "]");
      sections.push_back(std::move(s));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) config_error(line_no, "expected 'key = value'");
    Section& cur = sections.back();
    if (cur.keys.count(key)) config_error(line_no, "duplicate key '" + key + "'");
    cur.keys[key] = Entry{value, line_no};
  }

  // The chart type fixes the preset the remaining keys override.
  std::string chart_type = "cylinder";
  for (Section& s : sections) {
    if (s.name != "chart") continue;
    Reader r(s);
    r.get("type", [&](const Entry& e) {
      chart_type = e.value;
      if (chart_type != "cylinder" && chart_type != "sphere" && chart_type != "flat")
        config_error(e.line, "unknown chart type '" + chart_type + "'");
    });
  }
  ScenarioSpec spec = chart_type == "sphere" ? sphere_scenario()
                      : chart_type == "flat" ? flat_scenario()
                                             : cylinder_scenario();
  bool holes_reset = false;
  bool ybar_set = false;
  for (Section& s : sections) {
    Reader r(s);
    if (s.name == "run") {
      r.get("name", [&](const Entry& e) { spec.name = e.value; });
      r.num("final_time", spec.final_time);
      r.num("target_h", spec.target_h);
      r.num("tol", spec.tol);
      r.num("tol_m", spec.tol_m);
      r.num("tol_v", spec.tol_v);
      r.integer("max_it", spec.max_it);
      r.num("h_min", spec.h_min);
      r.num("h_max", spec.h_max);
      r.integer("max_mesh_updates", spec.max_mesh_updates);
      r.flag("adapt", spec.adapt);
      r.num("vtk_threshold", spec.vtk_threshold);
      r.get("seed", [&](const Entry& e) {
        const int x = to_int(e, "seed");
        if (x < 0) config_error(e.line, "seed must be non-negative");
        spec.seed = static_cast<std::uint32_t>(x);
      });
    } else if (s.name == "chart") {
      r.num("radius", spec.radius);
      r.num("length", spec.length);
      r.num("xbar", spec.xbar);
      if (r.has("ybar")) ybar_set = true;
      r.num("ybar", spec.ybar);
      r.num("x_min", spec.flat_domain.x_min);
      r.num("x_max", spec.flat_domain.x_max);
      r.num("y_min", spec.flat_domain.y_min);
      r.num("y_max", spec.flat_domain.y_max);
      r.num("lambda", spec.lambda);
      r.num("mu", spec.mu);
    } else if (s.name == "notch") {
      bool enabled = true;
      r.flag("enabled", enabled);
      Rect n = spec.notch.value_or(Rect{-1e-3, 1e-3, 0.0, 0.3});
      r.num("x_min", n.x_min);
      r.num("x_max", n.x_max);
      r.num("y_min", n.y_min);
      r.num("y_max", n.y_max);
      if (enabled)
        spec.notch = n;
      else
        spec.notch.reset();
    } else if (s.name == "hole") {
      if (!holes_reset) spec.holes.clear();
      holes_reset = true;
      HoleSpec h;
      bool have_r = false, have_x = false, have_y = false;
      r.get("center_x", [&](const Entry& e) { h.center.x() = to_double(e, "center_x"); have_x = true; });
      r.get("center_y", [&](const Entry& e) { h.center.y() = to_double(e, "center_y"); have_y = true; });
      r.get("radius", [&](const Entry& e) { h.radius = to_double(e, "radius"); have_r = true; });
      if (!(have_r && have_x && have_y)) config_error(s.line, "[hole] needs center_x, center_y and radius");
      spec.holes.push_back(h);
    } else if (s.name == "extension") {
      r.num("depth", spec.extension_depth);
    } else if (s.name == "bc") {
      r.flag("dirichlet_bottom", spec.dirichlet_bottom);
      r.num("gap", spec.dirichlet_gap);
    } else if (s.name == "params") {
      r.num("kappa", spec.model.kappa);
      r.num("epsilon", spec.model.epsilon);
      r.num("eta", spec.model.eta);
      r.num("alpha", spec.model.alpha);
      r.num("tau", spec.model.tau);
    }
    r.finish();
  }
  // The sphere preset's notch follows ybar unless given explicitly.
  if (chart_type == "sphere" && ybar_set) {
    bool notch_given = false;
    for (const Section& s : sections) notch_given = notch_given || s.name == "notch";
    if (!notch_given) spec.notch = Rect{-1e-3, 1e-3, -spec.ybar, 0.3 - spec.ybar};
  }
  try {
    validate(spec);
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("invalid scenario: ") + e.what());
  }
  return spec;
}

ScenarioSpec parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ScenarioSpec load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
  return parse_config(is);
}

void write_config(std::ostream& os, const ScenarioSpec& s) {
  os << "name = " << s.name << "\n"
     << "final_time = " << fmt(s.final_time) << "\n"
     << "target_h = " << fmt(s.target_h) << "\n"
     << "tol = " << fmt(s.tol) << "\n"
     << "tol_m = " << fmt(s.tol_m) << "\n"
     << "tol_v = " << fmt(s.tol_v) << "\n"
     << "max_it = " << s.max_it << "\n"
     << "h_min = " << fmt(s.h_min) << "\n"
     << "h_max = " << fmt(s.h_max) << "\n"
     << "max_mesh_updates = " << s.max_mesh_updates << "\n"
     << "adapt = " << (s.adapt ? "true" : "false") << "\n"
     << "vtk_threshold = " << fmt(s.vtk_threshold) << "\n"
     << "seed = " << s.seed << "\n\n[chart]\n"
     << "type = " << chart_kind_name(s.chart) << "\n"
     << "radius = " << fmt(s.radius) << "\n"
     << "length = " << fmt(s.length) << "\n"
     << "xbar = " << fmt(s.xbar) << "\n"
     << "ybar = " << fmt(s.ybar) << "\n"
     << "x_min = " << fmt(s.flat_domain.x_min) << "\n"
     << "x_max = " << fmt(s.flat_domain.x_max) << "\n"
     << "y_min = " << fmt(s.flat_domain.y_min) << "\n"
     << "y_max = " << fmt(s.flat_domain.y_max) << "\n"
     << "lambda = " << fmt(s.lambda) << "\n"
     << "mu = " << fmt(s.mu) << "\n\n[notch]\n";
  if (s.notch) {
    os << "x_min = " << fmt(s.notch->x_min) << "\n"
       << "x_max = " << fmt(s.notch->x_max) << "\n"
       << "y_min = " << fmt(s.notch->y_min) << "\n"
       << "y_max = " << fmt(s.notch->y_max) << "\n";
  } else {
    os << "enabled = false\n";
  }
  for (const HoleSpec& h : s.holes) {
    os << "\n[hole]\ncenter_x = " << fmt(h.center.x()) << "\ncenter_y = " << fmt(h.center.y())
       << "\nradius = " << fmt(h.radius) << "\n";
  }
  os << "\n[extension]\ndepth = " << fmt(s.extension_depth) << "\n"
     << "\n[bc]\ndirichlet_bottom = " << (s.dirichlet_bottom ? "true" : "false") << "\n"
     << "gap = " << fmt(s.dirichlet_gap) << "\n"
     << "\n[params]\nkappa = " << fmt(s.model.kappa) << "\n"
     << "epsilon = " << fmt(s.model.epsilon) << "\n"
     << "eta = " << fmt(s.model.eta) << "\n"
     << "alpha = " << fmt(s.model.alpha) << "\n"
     << "tau = " << fmt(s.model.tau) << "\n";
}

std::uint64_t params_hash(const ScenarioSpec& spec) {
  std::ostringstream os;
  write_config(os, spec);
  // FNV-1a.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace shellfrac
