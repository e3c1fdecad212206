#include "wavelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <climits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wavelab {

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid configuration";
  for (const ConfigIssue& i : issues) {
    out += "\n  ";
    if (i.line > 0) {
      out += "line " + std::to_string(i.line) + ": ";
    }
    if (!i.key.empty()) {
      out += i.key + ": ";
    }
    out += i.message;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"mesh", {"dimension", "x0", "x1", "y0", "y1", "n", "nx", "ny"}},
      {"formulation", {"id", "degree"}},
      {"integrator", {"id", "steps", "dt", "cfl_fraction", "gamma", "beta", "reconstruction", "midpoint_path"}},
      {"material", {"rho", "k", "epsilon", "mu"}},
      {"profile", {"mode", "mode_y", "amplitude", "velocity_amplitude"}},
      {"solver", {"method", "tolerance", "max_iterations", "restart", "banded_threshold"}},
      {"compare", {"formulation", "integrator", "tol"}},
      {"energy", {"max_drift"}},
      {"cfl", {"min_fraction", "max_fraction", "points", "steps", "max_deviation"}},
      {"converge", {"cells", "dt_over_h", "final_time", "expected_order", "order_tolerance"}},
      {"output", {"dir", "prefix"}},
  };
  return keys;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view text) { scan(text); }

  std::vector<ConfigIssue>& issues() { return issues_; }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto it = entries_.find(section + "." + key);
    return it == entries_.end() ? nullptr : &it->second;
  }
  bool has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }
  int line_of(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    return e ? e->line : 0;
  }

  void issue(int line, std::string key, std::string message) {
    issues_.push_back({line, std::move(key), std::move(message)});
  }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) {
      return std::nullopt;
    }
    return e->value;
  }

  std::optional<double> real(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) {
      return std::nullopt;
    }
    double v = 0.0;
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      issue(e->line, section + "." + key, "expected a number, got '" + e->value + "'");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) {
      return std::nullopt;
    }
    return parse_integer(e->value, e->line, section + "." + key);
  }

  std::optional<std::vector<Index>> integer_list(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) {
      return std::nullopt;
    }
    std::vector<Index> out;
    std::stringstream ss(e->value);
    std::string item;
    bool ok = true;
    while (std::getline(ss, item, ',')) {
      const auto v = parse_integer(std::string(trim(item)), e->line, section + "." + key);
      ok = ok && v.has_value();
      if (v) {
        out.push_back(static_cast<Index>(*v));
      }
    }
    if (!ok) {
      return std::nullopt;
    }
    return out;
  }

 private:
  std::optional<long long> parse_integer(const std::string& s, int line, const std::string& key) {
    long long v = 0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) {
      issue(line, key, "expected an integer, got '" + s + "'");
      return std::nullopt;
    }
    return v;
  }

  void scan(std::string_view text) {
    std::string section;
    bool section_known = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) {
        line = line.substr(0, c);
      }
      line = trim(line);
      if (line.empty()) {
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          issue(line_no, "", "malformed section header");
          section_known = false;
          continue;
        }
        section = std::string(trim(line.substr(1, line.size() - 2)));
        section_known = known_keys().count(section) > 0;
        if (!section_known) {
          issue(line_no, section, "unknown section");
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        issue(line_no, "", "expected 'key = value'");
        continue;
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (section.empty()) {
        issue(line_no, key, "key outside of any section");
        continue;
      }
      if (!section_known) {
        continue;
      }
      const std::string full = section + "." + key;
      if (known_keys().at(section).count(key) == 0) {
        issue(line_no, full, "unknown key");
        continue;
      }
      if (value.empty()) {
        issue(line_no, full, "missing value");
        continue;
      }
      if (const auto it = entries_.find(full); it != entries_.end()) {
        issue(line_no, full, "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
        continue;
      }
      entries_[full] = Entry{value, line_no};
    }
  }

  std::map<std::string, Entry> entries_;
  std::vector<ConfigIssue> issues_;
};

template <class T>
void positive(Reader& r, const std::string& section, const std::string& key, const std::optional<T>& v) {
  if (v && !(*v > 0)) {
    r.issue(r.line_of(section, key), section + "." + key, "must be positive");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : ValidationError(join_issues(issues)), issues_(std::move(issues)) {}

MeshPtr DomainConfig::build() const {
  if (dimension == 1) {
    return build_interval_mesh(x0, x1, nx);
  }
  return build_rect_mesh({x0, x1}, {y0, y1}, nx, ny);
}

FormulationSpec RunConfig::spec(MeshPtr mesh) const {
  return FormulationSpec{formulation, std::move(mesh), degree, material};
}

IntegratorConfig RunConfig::integrator(const DiscreteSystem& system) const {
  return integrator_with(scheme, system);
}

IntegratorConfig RunConfig::integrator_with(Scheme which, const DiscreteSystem& system) const {
  IntegratorConfig cfg;
  cfg.scheme = which;
  cfg.steps = steps;
  cfg.midpoint_path = midpoint_path;
  if (which == scheme) {
    cfg.gamma = gamma;
    cfg.beta = beta;
    cfg.reconstruction = reconstruction;
  } else {
    cfg.gamma = 0.5;
    cfg.beta = which == Scheme::implicit_midpoint ? 0.25 : 0.0;
  }
  cfg.dt = dt ? *dt : *cfl_fraction * critical_time_step(system, solver);
  cfg.validate();
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  Reader r(text);
  RunConfig cfg;

  // mesh
  if (const auto d = r.integer("mesh", "dimension")) {
    if (*d != 1 && *d != 2) {
      r.issue(r.line_of("mesh", "dimension"), "mesh.dimension", "must be 1 or 2");
    } else {
      cfg.domain.dimension = static_cast<int>(*d);
    }
  }
  const bool two_d = cfg.domain.dimension == 2;
  if (auto v = r.real("mesh", "x0")) cfg.domain.x0 = *v;
  if (auto v = r.real("mesh", "x1")) cfg.domain.x1 = *v;
  if (auto v = r.real("mesh", "y0")) cfg.domain.y0 = *v;
  if (auto v = r.real("mesh", "y1")) cfg.domain.y1 = *v;
  if (!(cfg.domain.x1 > cfg.domain.x0)) {
    r.issue(r.line_of("mesh", "x1"), "mesh.x1", "must exceed mesh.x0");
  }
  if (two_d) {
    if (!(cfg.domain.y1 > cfg.domain.y0)) {
      r.issue(r.line_of("mesh", "y1"), "mesh.y1", "must exceed mesh.y0");
    }
    if (r.has("mesh", "n")) {
      r.issue(r.line_of("mesh", "n"), "mesh.n", "2D meshes take nx and ny");
    }
    for (const char* key : {"nx", "ny"}) {
      const auto v = r.integer("mesh", key);
      if (!r.has("mesh", key)) {
        r.issue(0, std::string("mesh.") + key, "missing required key");
      }
      positive(r, "mesh", key, v);
      if (v) {
        (key[1] == 'x' ? cfg.domain.nx : cfg.domain.ny) = static_cast<Index>(*v);
      }
    }
  } else {
    for (const char* key : {"y0", "y1", "nx", "ny"}) {
      if (r.has("mesh", key)) {
        r.issue(r.line_of("mesh", key), std::string("mesh.") + key, "only valid for 2D meshes");
      }
    }
    const auto n = r.integer("mesh", "n");
    if (!r.has("mesh", "n")) {
      r.issue(0, "mesh.n", "missing required key");
    }
    positive(r, "mesh", "n", n);
    if (n) {
      cfg.domain.nx = static_cast<Index>(*n);
    }
  }

  // formulation
  if (const auto id = r.text("formulation", "id")) {
    if (const auto k = parse_formulation_kind(*id)) {
      cfg.formulation = *k;
    } else {
      r.issue(r.line_of("formulation", "id"), "formulation.id", "unknown formulation '" + *id + "'");
    }
  } else {
    r.issue(0, "formulation.id", "missing required key");
  }
  if (const auto d = r.integer("formulation", "degree")) {
    positive(r, "formulation", "degree", d);
    cfg.degree = static_cast<int>(*d);
  }

  // integrator
  if (const auto id = r.text("integrator", "id")) {
    if (const auto s = parse_scheme(*id)) {
      cfg.scheme = *s;
    } else {
      r.issue(r.line_of("integrator", "id"), "integrator.id", "unknown integrator '" + *id + "'");
    }
  } else {
    r.issue(0, "integrator.id", "missing required key");
  }
  cfg.beta = cfg.scheme == Scheme::implicit_midpoint ? 0.25 : 0.0;
  if (const auto steps = r.integer("integrator", "steps")) {
    if (*steps < 0) {
      r.issue(r.line_of("integrator", "steps"), "integrator.steps", "must be non-negative");
    }
    cfg.steps = *steps;
  } else if (!r.has("integrator", "steps")) {
    r.issue(0, "integrator.steps", "missing required key");
  }
  cfg.dt = r.real("integrator", "dt");
  cfg.cfl_fraction = r.real("integrator", "cfl_fraction");
  positive(r, "integrator", "dt", cfg.dt);
  positive(r, "integrator", "cfl_fraction", cfg.cfl_fraction);
  if (r.has("integrator", "dt") && r.has("integrator", "cfl_fraction")) {
    r.issue(r.line_of("integrator", "cfl_fraction"), "integrator.dt, integrator.cfl_fraction",
            "give either dt or cfl_fraction, not both");
  }
  if (!r.has("integrator", "dt") && !r.has("integrator", "cfl_fraction")) {
    cfg.cfl_fraction = 0.9;
  }
  if (auto v = r.real("integrator", "gamma")) cfg.gamma = *v;
  if (auto v = r.real("integrator", "beta")) cfg.beta = *v;
  if (const auto s = r.text("integrator", "reconstruction")) {
    cfg.reconstruction = parse_reconstruction(*s);
    if (!cfg.reconstruction) {
      r.issue(r.line_of("integrator", "reconstruction"), "integrator.reconstruction", "unknown mode '" + *s + "'");
    }
  }
  if (const auto s = r.text("integrator", "midpoint_path")) {
    if (const auto p = parse_midpoint_path(*s)) {
      cfg.midpoint_path = *p;
    } else {
      r.issue(r.line_of("integrator", "midpoint_path"), "integrator.midpoint_path", "unknown path '" + *s + "'");
    }
  }
  {
    IntegratorConfig probe;
    probe.scheme = cfg.scheme;
    probe.dt = 1.0;
    probe.gamma = cfg.gamma;
    probe.beta = cfg.beta;
    probe.reconstruction = cfg.reconstruction;
    try {
      probe.validate();
    } catch (const Error& e) {
      r.issue(r.line_of("integrator", "id"), "integrator", e.what());
    }
  }

  // material
  const bool mechanical = r.has("material", "rho") || r.has("material", "k");
  const bool electromagnetic = r.has("material", "epsilon") || r.has("material", "mu");
  if (mechanical && electromagnetic) {
    r.issue(std::max(r.line_of("material", "epsilon"), r.line_of("material", "mu")), "material",
            "give (rho, k) or (epsilon, mu), not both");
  }
  {
    const auto a = r.real("material", electromagnetic ? "epsilon" : "rho");
    const auto b = r.real("material", electromagnetic ? "mu" : "k");
    positive(r, "material", electromagnetic ? "epsilon" : "rho", a);
    positive(r, "material", electromagnetic ? "mu" : "k", b);
    const double first = a && *a > 0 ? *a : 1.0;
    const double second = b && *b > 0 ? *b : 1.0;
    cfg.material = electromagnetic ? MaterialParams::electromagnetic(first, second) : MaterialParams(first, second);
  }

  // profile
  if (auto v = r.integer("profile", "mode")) cfg.profile.mode = static_cast<int>(*v);
  if (auto v = r.integer("profile", "mode_y")) cfg.profile.mode_y = static_cast<int>(*v);
  if (auto v = r.real("profile", "amplitude")) cfg.profile.amplitude = *v;
  if (auto v = r.real("profile", "velocity_amplitude")) cfg.profile.velocity_amplitude = *v;
  try {
    cfg.profile.validate();
  } catch (const Error& e) {
    r.issue(r.line_of("profile", "mode"), "profile", e.what());
  }

  // solver
  if (const auto s = r.text("solver", "method")) {
    if (const auto m = parse_solver_method(*s)) {
      cfg.solver.method = *m;
    } else {
      r.issue(r.line_of("solver", "method"), "solver.method", "unknown method '" + *s + "'");
    }
  }
  if (auto v = r.real("solver", "tolerance")) cfg.solver.tolerance = *v;
  if (auto v = r.integer("solver", "max_iterations")) cfg.solver.max_iterations = static_cast<int>(*v);
  if (auto v = r.integer("solver", "restart")) cfg.solver.restart = static_cast<int>(*v);
  if (auto v = r.integer("solver", "banded_threshold")) cfg.solver.banded_threshold = static_cast<Index>(*v);
  try {
    cfg.solver.validate();
  } catch (const Error& e) {
    r.issue(r.line_of("solver", "tolerance"), "solver", e.what());
  }

  // compare
  if (const auto id = r.text("compare", "formulation")) {
    cfg.compare.formulation = parse_formulation_kind(*id);
    if (!cfg.compare.formulation) {
      r.issue(r.line_of("compare", "formulation"), "compare.formulation", "unknown formulation '" + *id + "'");
    }
  }
  if (const auto id = r.text("compare", "integrator")) {
    cfg.compare.scheme = parse_scheme(*id);
    if (!cfg.compare.scheme) {
      r.issue(r.line_of("compare", "integrator"), "compare.integrator", "unknown integrator '" + *id + "'");
    }
  }
  if (const auto v = r.real("compare", "tol")) {
    if (*v < 0.0) {
      r.issue(r.line_of("compare", "tol"), "compare.tol", "must be non-negative");
    }
    cfg.tol = *v;
  }

  if (const auto v = r.real("energy", "max_drift")) {
    positive(r, "energy", "max_drift", std::optional<double>(*v));
    cfg.max_energy_drift = *v;
  }

  // cfl
  if (auto v = r.real("cfl", "min_fraction")) cfg.cfl.min_fraction = *v;
  if (auto v = r.real("cfl", "max_fraction")) cfg.cfl.max_fraction = *v;
  if (auto v = r.integer("cfl", "points")) cfg.cfl.points = static_cast<int>(*v);
  if (auto v = r.integer("cfl", "steps")) cfg.cfl.steps = *v;
  if (auto v = r.real("cfl", "max_deviation")) cfg.cfl.max_deviation = *v;
  if (!(cfg.cfl.min_fraction > 0.0) || !(cfg.cfl.max_fraction > cfg.cfl.min_fraction)) {
    r.issue(r.line_of("cfl", "max_fraction"), "cfl.min_fraction, cfl.max_fraction",
            "need 0 < min_fraction < max_fraction");
  }
  if (cfg.cfl.points < 2) {
    r.issue(r.line_of("cfl", "points"), "cfl.points", "need at least 2 points");
  }
  if (cfg.cfl.steps < 1) {
    r.issue(r.line_of("cfl", "steps"), "cfl.steps", "must be positive");
  }

  // converge
  if (auto v = r.integer_list("converge", "cells")) {
    for (Index n : *v) {
      if (n < 1) {
        r.issue(r.line_of("converge", "cells"), "converge.cells", "cell counts must be positive");
        break;
      }
    }
    cfg.converge.cells = *v;
  }
  if (auto v = r.real("converge", "dt_over_h")) cfg.converge.dt_over_h = *v;
  if (auto v = r.real("converge", "final_time")) cfg.converge.final_time = *v;
  cfg.converge.expected_order = r.real("converge", "expected_order");
  if (auto v = r.real("converge", "order_tolerance")) cfg.converge.order_tolerance = *v;
  positive(r, "converge", "dt_over_h", std::optional<double>(cfg.converge.dt_over_h));
  positive(r, "converge", "final_time", std::optional<double>(cfg.converge.final_time));

  if (auto v = r.text("output", "dir")) cfg.output_dir = *v;
  if (auto v = r.text("output", "prefix")) cfg.prefix = *v;

  if (!r.issues().empty()) {
    std::stable_sort(r.issues().begin(), r.issues().end(), [](const ConfigIssue& a, const ConfigIssue& b) {
      return (a.line == 0 ? INT_MAX : a.line) < (b.line == 0 ? INT_MAX : b.line);
    });
    throw ConfigError(std::move(r.issues()));
  }
  check_compatibility(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open configuration", path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw IoError("cannot read configuration", path);
  }
  return parse_config(ss.str());
}

void check_compatibility(const RunConfig& config) {
  const std::string id(to_string(config.formulation));
  if (config.formulation == FormulationKind::mixed_grad && config.domain.dimension != 1) {
    throw CompatibilityViolation(id + " needs a 1D mesh: the gradient image of 2D CG-1 is not a scalar space");
  }
  if (config.formulation == FormulationKind::maxwell_tm && config.domain.dimension != 2) {
    throw CompatibilityViolation(id + " needs a 2D mesh");
  }
  if (config.compare.formulation) {
    const auto other = *config.compare.formulation;
    if (other == FormulationKind::mixed_grad && config.domain.dimension != 1) {
      throw CompatibilityViolation("mixed-grad-vs needs a 1D mesh");
    }
    if (other == FormulationKind::maxwell_tm && config.domain.dimension != 2) {
      throw CompatibilityViolation("maxwell-tm needs a 2D mesh");
    }
  }
  if (config.domain.dimension == 2 && config.degree != 1) {
    throw UnsupportedSpace("2D formulations use the lowest-order spaces (degree 1)");
  }
  const bool newmark_a = config.scheme == Scheme::newmark;
  const bool newmark_b = config.compare.scheme.value_or(config.scheme) == Scheme::newmark;
  if ((newmark_a && config.formulation != FormulationKind::lagrangian) ||
      (newmark_b && config.compare.formulation.value_or(config.formulation) != FormulationKind::lagrangian)) {
    throw CompatibilityViolation("the Newmark family applies to lagrangian-2nd-order only");
  }
}

}  // namespace wavelab
