#include "sescc/cli/config.hpp"

#include "sescc/cli/toml_lite.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sescc::cli {

namespace {

using json = nlohmann::json;

void check_keys(const json& t, const std::set<std::string>& allowed, const std::string& where) {
  if (!t.is_object()) throw ConfigError("'" + where + "' must be a table");
  for (auto it = t.begin(); it != t.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double get_double(const json& t, const std::string& key, double fallback) {
  if (!t.contains(key)) return fallback;
  if (!t[key].is_number()) throw ConfigError("'" + key + "' must be a number");
  return t[key].get<double>();
}

int get_int(const json& t, const std::string& key, int fallback) {
  if (!t.contains(key)) return fallback;
  if (!t[key].is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return t[key].get<int>();
}

bool get_bool(const json& t, const std::string& key, bool fallback) {
  if (!t.contains(key)) return fallback;
  if (!t[key].is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return t[key].get<bool>();
}

std::string get_string(const json& t, const std::string& key, const std::string& fallback) {
  if (!t.contains(key)) return fallback;
  if (!t[key].is_string()) throw ConfigError("'" + key + "' must be a string");
  return t[key].get<std::string>();
}

std::vector<double> get_doubles(const json& t, const std::string& key, std::vector<double> fallback) {
  if (!t.contains(key)) return fallback;
  if (!t[key].is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : t[key]) {
    if (!v.is_number()) throw ConfigError("'" + key + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_ints(const json& t, const std::string& key) {
  if (!t.contains(key)) return {};
  if (!t[key].is_array()) throw ConfigError("'" + key + "' must be an array of integers");
  std::vector<int> out;
  for (const auto& v : t[key]) {
    if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

const std::set<std::string> kSiamKeys{"eps_c", "mu", "U", "eps_d", "V", "impurity_position"};

SiamParams read_siam(const json& t, const std::set<std::string>& extra, const std::string& where) {
  auto allowed = kSiamKeys;
  allowed.insert(extra.begin(), extra.end());
  check_keys(t, allowed, where);
  SiamParams p;
  p.eps_c = get_double(t, "eps_c", p.eps_c);
  p.mu = get_double(t, "mu", p.mu);
  p.U = get_double(t, "U", p.U);
  p.eps_d = get_doubles(t, "eps_d", p.eps_d);
  p.V = get_doubles(t, "V", p.V);
  p.impurity_position = get_int(t, "impurity_position", p.impurity_position);
  return p;
}

void write_siam(json& t, const SiamParams& p) {
  t["eps_c"] = p.eps_c;
  t["mu"] = p.mu;
  t["U"] = p.U;
  t["eps_d"] = p.eps_d;
  t["V"] = p.V;
  t["impurity_position"] = p.impurity_position;
}

RunConfig from_document(const json& doc) {
  check_keys(doc, {"reference", "electrons", "rank_max", "model", "subsystem", "flow", "solver", "grid", "output",
                   "sweep"},
             "document");
  RunConfig c;
  c.reference = get_string(doc, "reference", "");
  c.electrons = get_int(doc, "electrons", -1);
  c.rank_max = get_int(doc, "rank_max", 0);

  const json model = doc.value("model", json::object());
  c.model.kind = get_string(model, "kind", "siam");
  if (c.model.kind == "siam") {
    c.model.siam = read_siam(model, {"kind"}, "model");
  } else if (c.model.kind == "composite") {
    check_keys(model, {"kind", "lambda", "coupling", "a", "b"}, "model");
    c.model.lambda = get_double(model, "lambda", 0.0);
    if (model.contains("coupling")) {
      if (!model["coupling"].is_array()) throw ConfigError("'coupling' must be a list of [p, q] pairs");
      for (const auto& pr : model["coupling"]) {
        if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_integer() || !pr[1].is_number_integer())
          throw ConfigError("'coupling' must be a list of [p, q] pairs");
        c.model.coupling.emplace_back(pr[0].get<int>(), pr[1].get<int>());
      }
    }
    c.model.a = read_siam(model.value("a", json::object()), {}, "model.a");
    c.model.b = read_siam(model.value("b", json::object()), {}, "model.b");
  } else {
    throw ConfigError("model.kind must be 'siam' or 'composite'");
  }

  if (doc.contains("subsystem")) {
    if (!doc["subsystem"].is_array()) throw ConfigError("'subsystem' must be an array of tables");
    for (const auto& s : doc["subsystem"]) {
      check_keys(s, {"label", "R", "S"}, "subsystem");
      SubsystemSpec spec;
      spec.label = get_string(s, "label", "sub" + std::to_string(c.subsystems.size() + 1));
      for (int r : get_ints(s, "R")) spec.active.R.insert(r);
      for (int a : get_ints(s, "S")) spec.active.S.insert(a);
      c.subsystems.push_back(std::move(spec));
    }
  }
  const json flow = doc.value("flow", json::object());
  check_keys(flow, {"add_external"}, "flow");
  c.add_external = get_bool(flow, "add_external", false);

  const json solver = doc.value("solver", json::object());
  check_keys(solver, {"max_iter", "tol", "mixing", "diis_depth", "divergence"}, "solver");
  c.solver.max_iter = get_int(solver, "max_iter", c.solver.max_iter);
  c.solver.tol = get_double(solver, "tol", c.solver.tol);
  c.solver.mixing = get_double(solver, "mixing", c.solver.mixing);
  c.solver.diis_depth = get_int(solver, "diis_depth", c.solver.diis_depth);
  c.solver.divergence = get_double(solver, "divergence", c.solver.divergence);

  const json grid = doc.value("grid", json::object());
  check_keys(grid, {"omega_min", "omega_max", "step", "eta", "probes"}, "grid");
  c.grid.omega_min = get_double(grid, "omega_min", c.grid.omega_min);
  c.grid.omega_max = get_double(grid, "omega_max", c.grid.omega_max);
  c.grid.step = get_double(grid, "step", c.grid.step);
  c.grid.eta = get_double(grid, "eta", c.grid.eta);
  c.grid.probes = get_ints(grid, "probes");

  const json output = doc.value("output", json::object());
  check_keys(output, {"dir", "format"}, "output");
  c.output.dir = get_string(output, "dir", c.output.dir);
  c.output.format = get_string(output, "format", c.output.format);

  const json sweep = doc.value("sweep", json::object());
  check_keys(sweep, {"U", "eps_c_ratio"}, "sweep");
  c.sweep.U = get_doubles(sweep, "U", {});
  c.sweep.eps_c_ratio = get_double(sweep, "eps_c_ratio", c.sweep.eps_c_ratio);

  c.validate();
  return c;
}

std::vector<Spin> siam_spins(const SiamParams& p) { return siam_layout(p).spins(); }

}  // namespace

int RunConfig::n_orbitals() const {
  if (model.kind == "composite") return model.a.n_orbitals() + model.b.n_orbitals();
  return model.siam.n_orbitals();
}

SecondQuantizedOp RunConfig::hamiltonian() const {
  if (model.kind == "composite") {
    const auto ha = build_siam(model.a);
    const auto hb = shift_orbitals(build_siam(model.b), model.a.n_orbitals());
    return build_composite(ha, hb, hopping(model.coupling, 1.0), model.lambda);
  }
  return build_siam(model.siam);
}

std::vector<Spin> RunConfig::spins() const {
  if (model.kind == "composite") {
    auto s = siam_spins(model.a);
    const auto sb = siam_spins(model.b);
    s.insert(s.end(), sb.begin(), sb.end());
    return s;
  }
  return siam_spins(model.siam);
}

Determinant RunConfig::reference_det() const { return Determinant::from_string(reference); }

FrequencyGrid RunConfig::frequency_grid() const {
  return FrequencyGrid::uniform(grid.omega_min, grid.omega_max, grid.step, grid.eta);
}

std::pair<int, int> RunConfig::impurity() const {
  const auto lay = siam_layout(model.kind == "composite" ? model.a : model.siam);
  return {lay.impurity_up, lay.impurity_down};
}

std::vector<int> RunConfig::probes() const {
  if (!grid.probes.empty()) return grid.probes;
  return {impurity().first};
}

CCProblem RunConfig::problem() const {
  const auto ref = reference_det();
  const int n = ref.count();
  return CCProblem{hamiltonian(), ref, spins(), rank_max == 0 ? n : std::min(rank_max, n)};
}

void RunConfig::validate() const {
  try {
    if (model.kind == "siam") {
      model.siam.validate();
    } else if (model.kind == "composite") {
      model.a.validate();
      model.b.validate();
      if (!std::isfinite(model.lambda)) throw ConfigError("model.lambda must be finite");
    } else {
      throw ConfigError("model.kind must be 'siam' or 'composite'");
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  const int m = n_orbitals();
  for (const auto& [p, q] : model.coupling)
    if (p < 0 || q < 0 || p >= m || q >= m || p == q) throw ConfigError("coupling pair out of range");
  if (static_cast<int>(reference.size()) != m || reference.find_first_not_of("01") != std::string::npos)
    throw ConfigError("reference must be a 0/1 string of length " + std::to_string(m));
  const auto ref = reference_det();
  if (ref.count() == 0) throw ConfigError("reference has no electrons");
  if (electrons >= 0 && electrons != ref.count())
    throw ConfigError("reference holds " + std::to_string(ref.count()) + " electrons, config declares " +
                      std::to_string(electrons));
  if (rank_max < 0) throw ConfigError("rank_max must be >= 0");
  std::set<std::string> labels;
  for (const auto& s : subsystems) {
    for (int p : s.active.R)
      if (p < 0 || p >= m) throw ConfigError("subsystem " + s.label + ": orbital out of range");
    for (int p : s.active.S)
      if (p < 0 || p >= m) throw ConfigError("subsystem " + s.label + ": orbital out of range");
    try {
      s.active.validate(ref);
    } catch (const std::domain_error& e) {
      throw ConfigError("subsystem " + s.label + ": " + e.what());
    }
    if (!labels.insert(s.label).second) throw ConfigError("duplicate subsystem label " + s.label);
  }
  if (add_external && subsystems.empty()) throw ConfigError("flow.add_external needs a main subsystem");
  try {
    solver.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
  if (!(grid.step > 0) || !(grid.omega_max > grid.omega_min) || !(grid.eta > 0))
    throw ConfigError("grid needs step > 0, eta > 0 and omega_max > omega_min");
  for (int p : grid.probes)
    if (p < 0 || p >= m) throw ConfigError("grid probe out of range");
  if (output.format != "csv" && output.format != "json") throw ConfigError("output.format must be csv or json");
  if (output.dir.empty()) throw ConfigError("output.dir is empty");
  for (double u : sweep.U)
    if (!std::isfinite(u)) throw ConfigError("sweep.U must be finite");
}

RunConfig parse_config(const std::string& text) {
  try {
    return from_document(parse_toml(text));
  } catch (const TomlError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  json doc = json::object();
  doc["reference"] = c.reference;
  if (c.electrons >= 0) doc["electrons"] = c.electrons;
  doc["rank_max"] = c.rank_max;
  json model = json::object();
  model["kind"] = c.model.kind;
  if (c.model.kind == "composite") {
    model["lambda"] = c.model.lambda;
    json pairs = json::array();
    for (const auto& [p, q] : c.model.coupling) pairs.push_back(json::array({p, q}));
    model["coupling"] = pairs;
    write_siam(model["a"], c.model.a);
    write_siam(model["b"], c.model.b);
  } else {
    write_siam(model, c.model.siam);
  }
  doc["model"] = model;
  doc["flow"] = {{"add_external", c.add_external}};
  doc["solver"] = {{"max_iter", c.solver.max_iter},
                   {"tol", c.solver.tol},
                   {"mixing", c.solver.mixing},
                   {"diis_depth", c.solver.diis_depth},
                   {"divergence", c.solver.divergence}};
  doc["grid"] = {{"omega_min", c.grid.omega_min},
                 {"omega_max", c.grid.omega_max},
                 {"step", c.grid.step},
                 {"eta", c.grid.eta},
                 {"probes", c.grid.probes}};
  doc["output"] = {{"dir", c.output.dir}, {"format", c.output.format}};
  doc["sweep"] = {{"U", c.sweep.U}, {"eps_c_ratio", c.sweep.eps_c_ratio}};
  if (!c.subsystems.empty()) {
    json subs = json::array();
    for (const auto& s : c.subsystems)
      subs.push_back({{"label", s.label},
                      {"R", std::vector<int>(s.active.R.begin(), s.active.R.end())},
                      {"S", std::vector<int>(s.active.S.begin(), s.active.S.end())}});
    doc["subsystem"] = subs;
  }
  return write_toml(doc);
}

RunConfig paper_config() {
  RunConfig c;
  c.model.kind = "siam";
  c.model.siam = paper_siam();
  c.reference = paper_reference().to_string();
  c.electrons = 3;
  c.subsystems = {SubsystemSpec{ActiveSpace{{0}, {1}}, "main"}};
  c.add_external = true;
  c.sweep.U = {0.5, 1.0, 2.0, 4.0};
  c.validate();
  return c;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : serialize_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sescc::cli
