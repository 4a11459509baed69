#include "sescc/cli/commands.hpp"

#include "sescc/amplitude_io.hpp"
#include "sescc/ccgf.hpp"
#include "sescc/sesflow.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace sescc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace {

double r9(double x) { return std::isfinite(x) ? round_significant(x, 9) : x; }

json r9(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(r9(v[i]));
  return a;
}

json r9(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(r9(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

using Row = std::vector<std::string>;

class Artifacts {
 public:
  Artifacts(const RunConfig& cfg, std::string command)
      : dir_(cfg.output.dir), hash_(config_hash(cfg)), command_(std::move(command)), format_(cfg.output.format) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.toml") << "# " << kEngineVersion << " config_hash=" << hash_ << "\n"
                                        << serialize_config(cfg);
  }

  const std::string& format() const { return format_; }

  void write_json(const std::string& name, json j) const {
    j["engine_version"] = kEngineVersion;
    j["config_hash"] = hash_;
    j["command"] = command_;
    std::ofstream(dir_ / name) << j.dump(2) << "\n";
  }

  void write_csv(const std::string& name, const Row& header, const std::vector<Row>& rows) const {
    std::ofstream os(dir_ / name);
    os << "# engine_version=" << kEngineVersion << "\n# config_hash=" << hash_ << "\n# command=" << command_
       << "\n";
    auto line = [&](const Row& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
  }

  void write_jsonl(const std::string& name, const std::string& records) const {
    std::ofstream os(dir_ / name);
    std::istringstream in(records);
    std::string l;
    while (std::getline(in, l)) {
      if (l.empty()) continue;
      json j = json::parse(l);
      for (const char* k : {"energy", "residual"})
        if (j.contains(k)) j[k] = r9(j[k].get<double>());
      j["engine_version"] = kEngineVersion;
      j["config_hash"] = hash_;
      os << j.dump() << "\n";
    }
  }

  /// Key/value report, as JSON or as a two-column CSV.
  void write_report(const std::string& stem, const json& j) const {
    if (format_ == "json") {
      write_json(stem + ".json", j);
      return;
    }
    std::vector<Row> rows;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_structured()) continue;
      rows.push_back({it.key(), it->is_number() ? fmt9(it->get<double>()) : it->is_string() ? it->get<std::string>()
                                                                                             : it->dump()});
    }
    write_csv(stem + ".csv", {"quantity", "value"}, rows);
  }

 private:
  fs::path dir_;
  std::string hash_;
  std::string command_;
  std::string format_;
};

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

// Orbital groups whose mixing defines a "cross" amplitude: impurity vs bath,
// or subsystem A vs subsystem B.
std::vector<int> orbital_groups(const RunConfig& cfg) {
  std::vector<int> group(static_cast<std::size_t>(cfg.n_orbitals()), 1);
  if (cfg.model.kind == "composite") {
    for (int p = 0; p < cfg.model.a.n_orbitals(); ++p) group[static_cast<std::size_t>(p)] = 0;
  } else {
    const auto [up, down] = cfg.impurity();
    group[static_cast<std::size_t>(up)] = 0;
    group[static_cast<std::size_t>(down)] = 0;
  }
  return group;
}

bool is_cross(const Excitation& e, const std::vector<int>& group) {
  std::set<int> g;
  for (int p : e.holes) g.insert(group[static_cast<std::size_t>(p)]);
  for (int p : e.particles) g.insert(group[static_cast<std::size_t>(p)]);
  return g.size() > 1;
}

struct GroundState {
  CCProblem problem;
  OperatorMatrix H;
  std::vector<Excitation> manifold;
  CCSolution cc;
  AmplitudeSet lambda;
};

GroundState solve_ground(const RunConfig& cfg) {
  GroundState g{cfg.problem(), {}, {}, {}, {}};
  g.H = g.problem.hamiltonian_matrix();
  g.manifold = g.problem.manifold();
  g.cc = solve_t(g.H, g.problem.reference, g.manifold, cfg.solver);
  g.lambda = solve_lambda(similarity_transform(g.H, g.cc.T), g.cc.T, cfg.solver);
  return g;
}

json amplitude_dump(const AmplitudeSet& a) { return to_json(a, 9); }

std::vector<SubsystemSpec> flow_subsystems(const RunConfig& cfg, const std::vector<Excitation>& manifold,
                                           const Determinant& ref) {
  if (cfg.subsystems.empty()) return {SubsystemSpec{ActiveSpace::full(ref), "full"}};
  auto subs = cfg.subsystems;
  if (cfg.add_external) {
    auto ext = incremental_external_subsystems(manifold, subs.front().active);
    std::set<std::string> used;
    for (const auto& s : subs) used.insert(s.label);
    for (auto& e : ext) {
      while (used.count(e.label)) e.label += "_";
      used.insert(e.label);
      subs.push_back(std::move(e));
    }
  }
  return subs;
}

json heff_dump(const EffectiveHamiltonian& heff, const std::string& label) {
  json basis = json::array({"ref"});
  for (const auto& e : heff.internal) basis.push_back(e.label());
  const auto pair = diagonalize_heff(heff);
  return {{"label", label},
          {"flavor", to_string(heff.flavor)},
          {"R", std::vector<int>(heff.active.R.begin(), heff.active.R.end())},
          {"S", std::vector<int>(heff.active.S.begin(), heff.active.S.end())},
          {"basis", basis},
          {"matrix", r9(heff.matrix)},
          {"eigenvalue", r9(pair.energy)},
          {"right", r9(pair.right)},
          {"left", r9(pair.left)}};
}

int run_sweep(const RunConfig& cfg, const Artifacts& art, std::ostream& log) {
  if (cfg.model.kind != "siam") throw ConfigError("sweep needs a siam model");
  if (cfg.subsystems.empty()) throw ConfigError("sweep needs a main subsystem");
  const std::vector<double> us = cfg.sweep.U.empty() ? std::vector<double>{cfg.model.siam.U} : cfg.sweep.U;
  const auto main = cfg.subsystems.front();
  std::vector<Row> rows;
  json records = json::array();
  for (double u : us) {
    RunConfig c = cfg;
    c.model.siam.U = u;
    c.model.siam.eps_c = cfg.sweep.eps_c_ratio * u;
    const auto prob = c.problem();
    const auto sector = prob.sector();
    const auto H = prob.hamiltonian_matrix();
    const auto manifold = prob.manifold();
    const auto [up, down] = c.impurity();
    const auto ed = exact_diagonalize(prob.hamiltonian, sector);
    const double e_exact = ed.ground_energy();
    const double d_exact = ground_expectation(ed, double_occupancy_op(up, down));
    auto subs = incremental_external_subsystems(manifold, main.active);
    subs.insert(subs.begin(), main);
    for (std::size_t n = 0; n < subs.size(); ++n) {
      const std::vector<SubsystemSpec> used(subs.begin(), subs.begin() + static_cast<long>(n) + 1);
      const auto st = flow_iterate(H, prob.reference, manifold, used, c.solver);
      const auto t_cov = restricted(st.T, st.covered);
      const auto lam = solve_lambda(similarity_transform(H, t_cov), t_cov, c.solver);
      const double docc = double_occupancy(t_cov, lam, sector, up, down);
      rows.push_back({fmt9(u), fmt9(c.model.siam.eps_c), std::to_string(n), std::to_string(used.size()),
                      fmt9(st.energy), fmt9(e_exact), fmt9(std::abs(st.energy - e_exact)), fmt9(docc),
                      fmt9(d_exact)});
      records.push_back({{"U", r9(u)},
                         {"eps_c", r9(c.model.siam.eps_c)},
                         {"n_external", n},
                         {"n_subsystems", used.size()},
                         {"energy", r9(st.energy)},
                         {"exact_energy", r9(e_exact)},
                         {"deviation", r9(std::abs(st.energy - e_exact))},
                         {"double_occupancy", r9(docc)},
                         {"exact_double_occupancy", r9(d_exact)}});
      log << "U=" << fmt9(u) << " n_external=" << n << " |E-E_exact|=" << fmt9(std::abs(st.energy - e_exact))
          << "\n";
    }
  }
  if (art.format() == "json")
    art.write_json("sweep.json", {{"rows", records}});
  else
    art.write_csv("sweep.csv",
                  {"U", "eps_c", "n_external", "n_subsystems", "energy", "exact_energy", "deviation",
                   "double_occupancy", "exact_double_occupancy"},
                  rows);
  return kOk;
}

double nearest_distance(double x, const std::vector<double>& set) {
  double best = INFINITY;
  for (double y : set) best = std::min(best, std::abs(x - y));
  return best;
}

}  // namespace

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
  const Artifacts art(cfg, "solve");
  const auto g = solve_ground(cfg);
  const auto S = s_from_lambda(g.lambda);
  const auto ed = exact_diagonalize(g.problem.hamiltonian, g.problem.sector());
  const auto ref = g.problem.reference;
  int full_rank = 0;
  for (const auto& e : enumerate_excitations(ref, ref.count(), g.problem.spins)) full_rank = std::max(full_rank, e.rank());
  int used_rank = 0;
  for (const auto& e : g.manifold) used_rank = std::max(used_rank, e.rank());
  const bool truncated = used_rank < full_rank;

  const auto groups = orbital_groups(cfg);
  json zero = json::array(), cross = json::array(), table = json::array();
  bool cross_zero = true;
  std::vector<Row> rows;
  for (const auto& e : g.manifold) {
    const double t = g.cc.T.at(e);
    if (std::abs(t) < 1e-12) zero.push_back(e.label());
    if (is_cross(e, groups)) {
      cross.push_back(e.label());
      cross_zero = cross_zero && std::abs(t) < 1e-12;
    }
    table.push_back({{"signature", e.label()}, {"t", r9(t)}, {"lambda", r9(g.lambda.at(e))}, {"s", r9(S.at(e))}});
    rows.push_back({"\"" + e.label() + "\"", join(e.holes), join(e.particles), fmt9(t), fmt9(g.lambda.at(e)),
                    fmt9(S.at(e))});
  }

  json report{{"energy", r9(g.cc.energy)},
              {"energy_label", truncated ? "truncated" : "exact"},
              {"exact_energy", r9(ed.ground_energy())},
              {"energy_error", r9(g.cc.energy - ed.ground_energy())},
              {"rank_max", used_rank},
              {"full_rank", full_rank},
              {"iterations", g.cc.iterations},
              {"residual_norm", r9(g.cc.residual_norm)},
              {"reference", ref.to_string()},
              {"cross_amplitudes_zero", cross_zero},
              {"cross_amplitudes", cross},
              {"zero_amplitudes", zero}};
  if (art.format() == "json") {
    report["amplitudes"] = table;
    art.write_json("report.json", report);
  } else {
    art.write_report("report", report);
    art.write_csv("amplitudes.csv", {"signature", "holes", "particles", "t", "lambda", "s"}, rows);
  }
  art.write_json("T.json", amplitude_dump(g.cc.T));
  art.write_json("lambda.json", amplitude_dump(g.lambda));
  art.write_json("S.json", amplitude_dump(S));

  log << "E_CC = " << fmt9(g.cc.energy) << " (" << (truncated ? "truncated" : "exact") << ", " << g.cc.iterations
      << " iterations)\n"
      << "E_ED = " << fmt9(ed.ground_energy()) << "\n";
  if (cross_zero) log << "all cross amplitudes vanish\n";
  return kOk;
}

int cmd_flow(const RunConfig& cfg, std::ostream& log) {
  const Artifacts art(cfg, "flow");
  const auto prob = cfg.problem();
  const auto H = prob.hamiltonian_matrix();
  const auto manifold = prob.manifold();
  const auto subs = flow_subsystems(cfg, manifold, prob.reference);
  const auto st = flow_iterate(H, prob.reference, manifold, subs, cfg.solver);
  const auto ed = exact_diagonalize(prob.hamiltonian, prob.sector());

  art.write_jsonl("flow_trace.jsonl", trace_jsonl(st));
  for (std::size_t i = 0; i < st.heffs.size(); ++i)
    art.write_json("heff_" + subs[i].label + ".json", heff_dump(st.heffs[i], subs[i].label));

  json energies = json::object();
  for (std::size_t i = 0; i < subs.size(); ++i) energies[subs[i].label] = r9(st.energies[i]);
  json covered = json::array(), uncovered = json::array();
  for (const auto& e : st.covered) covered.push_back(e.label());
  for (const auto& e : st.uncovered) uncovered.push_back(e.label());
  json report{{"energy", r9(st.energy)},
              {"exact_energy", r9(ed.ground_energy())},
              {"deviation", r9(std::abs(st.energy - ed.ground_energy()))},
              {"iterations", st.iteration},
              {"max_spread", r9(st.max_spread)},
              {"n_subsystems", subs.size()},
              {"n_uncovered", st.uncovered.size()},
              {"subsystem_energies", energies},
              {"covered", covered},
              {"uncovered", uncovered}};
  if (art.format() == "csv")
    for (std::size_t i = 0; i < subs.size(); ++i) report["energy[" + subs[i].label + "]"] = r9(st.energies[i]);
  art.write_report("flow", report);
  art.write_json("T.json", amplitude_dump(st.T));
  log << "flow: " << subs.size() << " subsystems, " << st.iteration << " iterations, E = " << fmt9(st.energy)
      << ", spread = " << fmt9(st.max_spread) << "\n";
  if (!cfg.sweep.U.empty()) return run_sweep(cfg, art, log);
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const Artifacts art(cfg, "sweep");
  return run_sweep(cfg, art, log);
}

int cmd_spectral(const RunConfig& cfg, std::ostream& log) {
  const Artifacts art(cfg, "spectral");
  const int n = cfg.reference_det().count(), m = cfg.n_orbitals();
  if (n >= m) throw ConfigError("spectral needs at least one virtual orbital");
  const auto g = solve_ground(cfg);
  const auto ctx = make_gf_context(g.problem.hamiltonian, g.cc.T, g.lambda, g.cc.energy);
  const auto grid = cfg.frequency_grid();
  const auto probes = cfg.probes();
  const ActiveSpace h = cfg.subsystems.empty() ? ActiveSpace::full(g.problem.reference) : cfg.subsystems.front().active;
  const auto amps = embedding_amplitudes(ctx, h);

  const auto g_cc = gf_matrix(ctx, probes, grid);
  auto g_ses = GreenFunctionResult::zeros(grid, probes);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const auto vals = gf_effective(ctx, probes[k], probes[k], h, amps, grid);
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t w = 0; w < grid.size(); ++w) {
      g_ses.hole[w](kk, kk) = vals[w].hole;
      g_ses.particle[w](kk, kk) = vals[w].particle;
    }
  }
  const auto ed_n = exact_diagonalize(g.problem.hamiltonian, g.problem.sector());
  const auto ed_m = exact_diagonalize(g.problem.hamiltonian, build_sector(m, n - 1));
  const auto ed_p = exact_diagonalize(g.problem.hamiltonian, build_sector(m, n + 1));
  const auto g_ed = lehmann_gf(ed_n, ed_m, ed_p, probes, grid);
  const Eigen::MatrixXd a_cc = spectral_function(g_cc), a_ses = spectral_function(g_ses),
                        a_ed = spectral_function(g_ed);

  Row header{"omega"};
  for (int p : probes)
    for (const char* meth : {"ccgf", "ses_ccgf", "ed"}) header.push_back(std::string("A_") + meth + "_" + std::to_string(p));
  std::vector<Row> rows;
  json spectra = json::array();
  for (std::size_t w = 0; w < grid.size(); ++w) {
    const auto ww = static_cast<Eigen::Index>(w);
    Row r{fmt9(grid.omegas[w])};
    json pt{{"omega", r9(grid.omegas[w])}};
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      r.push_back(fmt9(a_cc(kk, ww)));
      r.push_back(fmt9(a_ses(kk, ww)));
      r.push_back(fmt9(a_ed(kk, ww)));
      pt[std::to_string(probes[k])] = {{"ccgf", r9(a_cc(kk, ww))}, {"ses_ccgf", r9(a_ses(kk, ww))}, {"ed", r9(a_ed(kk, ww))}};
    }
    rows.push_back(std::move(r));
    spectra.push_back(std::move(pt));
  }

  std::vector<Row> pole_rows;
  json pole_list = json::array();
  auto add_poles = [&](const std::string& method, int probe, const std::vector<Pole>& ps) {
    for (const auto& p : ps) {
      pole_rows.push_back({method, std::to_string(probe), fmt9(p.position), fmt9(p.weight)});
      pole_list.push_back({{"method", method}, {"probe", probe}, {"position", r9(p.position)}, {"weight", r9(p.weight)}});
    }
  };
  std::vector<double> hbar_poles;
  for (double e : hbar_spectrum(ctx, XYKind::X)) hbar_poles.push_back(-e);
  for (double e : hbar_spectrum(ctx, XYKind::Y)) hbar_poles.push_back(e);
  double cc_vs_ed = 0.0, ses_in_spectrum = 0.0;
  json sum_rules = json::object();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const int p = probes[k];
    const auto cc = cc_poles(ctx, p).all();
    const auto ses = gf_effective_poles(ctx, p, h, amps).all();
    const auto ed = lehmann_poles(ed_n, ed_m, ed_p, p).all();
    add_poles("ccgf", p, cc);
    add_poles("ses_ccgf", p, ses);
    add_poles("ed", p, ed);
    std::vector<double> cc_pos;
    for (const auto& q : cc) cc_pos.push_back(q.position);
    for (const auto& q : ed)
      if (std::abs(q.weight) > 1e-8) cc_vs_ed = std::max(cc_vs_ed, nearest_distance(q.position, cc_pos));
    for (const auto& q : ses) ses_in_spectrum = std::max(ses_in_spectrum, nearest_distance(q.position, hbar_poles));
    const auto kk = static_cast<Eigen::Index>(k);
    sum_rules[std::to_string(p)] = {{"ccgf", r9(integrate_spectrum(grid, a_cc.row(kk).transpose()))},
                                    {"ses_ccgf", r9(integrate_spectrum(grid, a_ses.row(kk).transpose()))},
                                    {"ed", r9(integrate_spectrum(grid, a_ed.row(kk).transpose()))}};
  }

  if (art.format() == "json") {
    art.write_json("spectra.json", {{"eta", r9(grid.eta)}, {"probes", probes}, {"points", spectra}});
    art.write_json("poles.json", {{"poles", pole_list}});
  } else {
    art.write_csv("spectra.csv", header, rows);
    art.write_csv("poles.csv", {"method", "probe", "position", "weight"}, pole_rows);
  }
  json report{{"energy", r9(g.cc.energy)},
              {"eta", r9(grid.eta)},
              {"n_omega", grid.size()},
              {"max_pole_deviation_ccgf_vs_ed", r9(cc_vs_ed)},
              {"max_ses_pole_distance_to_hbar_spectrum", r9(ses_in_spectrum)},
              {"sum_rules", sum_rules}};
  art.write_report("spectral_report", report);
  log << "spectral: " << probes.size() << " probe(s), " << grid.size() << " frequencies, max |pole_cc - pole_ed| = "
      << fmt9(cc_vs_ed) << "\n";
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subsystem-embedding coupled cluster and Green's functions on small fermionic models", "sescc"};
  app.require_subcommand(1);
  std::optional<std::string> config_path, out_dir, format;
  std::optional<double> eta;
  bool seed = false;
  std::string command;
  for (const auto& [name, desc] :
       std::vector<std::pair<std::string, std::string>>{{"solve", "ground-state T, Lambda and S with an energy report"},
                                                        {"flow", "multi-subsystem flow with trace and H_eff dumps"},
                                                        {"spectral", "CCGF, active-space CCGF and exact spectra"},
                                                        {"sweep", "U sweep over incremental subsystem sets"}}) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "TOML run configuration");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--eta", eta, "broadening")->check(CLI::PositiveNumber);
    sub->add_flag("--seed-paper", seed, "built-in three-site configuration");
    sub->callback([&command, name = name] { command = name; });
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  try {
    if (seed == config_path.has_value()) throw ConfigError("give exactly one of --config and --seed-paper");
    cfg = seed ? paper_config() : load_config(*config_path);
    if (out_dir) cfg.output.dir = *out_dir;
    if (format) cfg.output.format = *format;
    if (eta) cfg.grid.eta = *eta;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (command == "solve") return cmd_solve(cfg, out);
    if (command == "flow") return cmd_flow(cfg, out);
    if (command == "spectral") return cmd_spectral(cfg, out);
    return cmd_sweep(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << " after " << e.iterations()
        << " iterations, last residual " << fmt9(e.last_residual()) << "\n";
    const auto& tr = e.trace();
    const std::size_t from = tr.size() > 10 ? tr.size() - 10 : 0;
    err << "trace tail:";
    for (std::size_t i = from; i < tr.size(); ++i) err << " " << fmt9(tr[i]);
    err << "\n";
    return kConvergenceError;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace sescc::cli
