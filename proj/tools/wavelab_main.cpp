// wavelab command line: run, compare, energy, cfl, converge, spectrum.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wavelab/config.hpp"
#include "wavelab/report_io.hpp"
#include "wavelab/verification.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace wavelab;

enum Exit { ok = 0, internal = 1, validation = 2, assertion = 3, solver = 4, io = 5 };

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::string> out_dir;
  bool export_matrices = false;
  std::optional<double> tol;
  std::optional<long long> seed;
};

struct Outcome {
  json body = json::object();
  bool assertion_failed = false;
  std::string failure;
};

json solver_json(const SolverStats& s) {
  return {{"solves", s.solves}, {"iterations", s.iterations}, {"max_relative_residual", s.max_relative_residual}};
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string file(const RunConfig& cfg, const std::string& suffix) { return cfg.prefix + "_" + suffix; }

void export_matrices(const DiscreteSystem& system, const RunConfig& cfg, OutputSet& out, json& body) {
  json written = json::array();
  auto put = [&](const std::string& name, const SparseMatrix& m) {
    out.write(file(cfg, name + ".mtx"), matrix_market(m));
    written.push_back(file(cfg, name + ".mtx"));
  };
  put("mass_velocity", system.mass_velocity());
  put("stiffness", system.stiffness());
  if (system.has_stress_space()) {
    put("mass_stress", system.mass_stress());
  }
  if (system.kind() != FormulationKind::lagrangian && system.kind() != FormulationKind::hamiltonian_vq &&
      system.kind() != FormulationKind::velocity_only) {
    put("coupling", system.coupling());
  }
  body["matrices"] = written;
}

Outcome cmd_run(const RunConfig& cfg, const Options& opt, OutputSet& out) {
  const auto system = build_formulation(cfg.spec(cfg.domain.build()));
  const IntegratorConfig integ = cfg.integrator(*system);
  const Trajectory run = simulate(*system, integ, cfg.profile, cfg.solver);
  out.write(file(cfg, "run.csv"), trajectory_csv(run, integ.dt));
  out.write(file(cfg, "state.csv"), state_csv(run.states.back()));
  Outcome o;
  double drift = 0.0;
  for (double e : run.energy) {
    drift = std::max(drift, run.energy.front() != 0.0 ? std::abs(e / run.energy.front() - 1.0) : std::abs(e));
  }
  o.body = {{"formulation", to_string(cfg.formulation)},
            {"integrator", integ.label()},
            {"scheme", to_string(integ.scheme)},
            {"steps", integ.steps},
            {"dt", integ.dt},
            {"initial_energy", run.energy.front()},
            {"final_energy", number(run.energy.back())},
            {"max_relative_energy_drift", number(drift)},
            {"solver", solver_json(run.stats)}};
  if (!std::isfinite(run.energy.back())) {
    o.assertion_failed = true;
    o.failure = "energy became non-finite";
  }
  if (opt.export_matrices) {
    export_matrices(*system, cfg, out, o.body);
  }
  return o;
}

Outcome cmd_compare(const RunConfig& cfg, const Options& opt, OutputSet& out) {
  if (!cfg.compare.formulation && !cfg.compare.scheme) {
    throw ValidationError("compare needs [compare] formulation and/or integrator");
  }
  const MeshPtr mesh = cfg.domain.build();
  const auto system_a = build_formulation(cfg.spec(mesh));
  FormulationSpec spec_b = cfg.spec(mesh);
  spec_b.kind = cfg.compare.formulation.value_or(cfg.formulation);
  const IntegratorConfig integ_a = cfg.integrator(*system_a);
  const IntegratorConfig integ_b = cfg.integrator_with(cfg.compare.scheme.value_or(cfg.scheme), *system_a);
  const double tol = opt.tol.value_or(cfg.tol);
  const EquivalenceReport r =
      check_equivalence(Side{cfg.spec(mesh), integ_a}, Side{spec_b, integ_b}, cfg.profile, cfg.steps, tol, cfg.solver);
  out.write(file(cfg, "compare.csv"), equivalence_csv(r));
  Outcome o;
  json mapping = json::object();
  for (const auto& [field, how] : r.mapping) {
    mapping[field] = how;
  }
  o.body = {{"pair", {r.formulation_a, r.formulation_b}},
            {"integrator", {r.integrator_a, r.integrator_b}},
            {"N", r.steps},
            {"dt", r.dt},
            {"tol", r.tol},
            {"max_discrepancy", r.max_discrepancy},
            {"pass", r.pass},
            {"mapping", mapping}};
  if (!r.pass) {
    o.assertion_failed = true;
    o.failure = "max discrepancy " + format_double(r.max_discrepancy) + " exceeds tol " + format_double(tol);
  }
  if (opt.export_matrices) {
    export_matrices(*system_a, cfg, out, o.body);
  }
  return o;
}

Outcome cmd_energy(const RunConfig& cfg, const Options& opt, OutputSet& out) {
  const auto system = build_formulation(cfg.spec(cfg.domain.build()));
  const IntegratorConfig integ = cfg.integrator(*system);
  const EnergyTrace trace = energy_audit(*system, integ, cfg.profile, cfg.solver);
  out.write(file(cfg, "energy.csv"), energy_csv(trace, integ.dt));
  const double dt_critical = critical_time_step(*system, cfg.solver);
  const bool explicit_scheme = integ.scheme != Scheme::implicit_midpoint && integ.beta == 0.0;
  const bool stability_expected = !explicit_scheme || integ.dt < dt_critical;
  Outcome o;
  o.body = {{"formulation", to_string(cfg.formulation)},
            {"integrator", integ.label()},
            {"steps", integ.steps},
            {"dt", integ.dt},
            {"dt_critical", dt_critical},
            {"form", trace.form},
            {"initial_energy", trace.initial},
            {"max_relative_drift", number(trace.max_relative_drift)},
            {"max_drift_allowed", cfg.max_energy_drift},
            {"stable", trace.stable},
            {"stability_expected", stability_expected},
            {"unstable_step", trace.unstable_step}};
  if (!trace.stable && stability_expected) {
    o.assertion_failed = true;
    o.failure = "energy grew beyond 10x at step " + std::to_string(trace.unstable_step);
  } else if (trace.stable && trace.max_relative_drift > cfg.max_energy_drift) {
    o.assertion_failed = true;
    o.failure = "relative energy drift " + format_double(trace.max_relative_drift) + " exceeds " +
                format_double(cfg.max_energy_drift);
  }
  if (opt.export_matrices) {
    export_matrices(*system, cfg, out, o.body);
  }
  return o;
}

Outcome cmd_cfl(const RunConfig& cfg, const Options& opt, OutputSet& out) {
  if (cfg.scheme == Scheme::implicit_midpoint) {
    throw ValidationError("cfl scans need an explicit integrator");
  }
  const auto system = build_formulation(cfg.spec(cfg.domain.build()));
  const double dt_critical = critical_time_step(*system, cfg.solver);
  std::vector<double> grid;
  for (int i = 0; i < cfg.cfl.points; ++i) {
    const double f = cfg.cfl.min_fraction +
                     (cfg.cfl.max_fraction - cfg.cfl.min_fraction) * i / static_cast<double>(cfg.cfl.points - 1);
    grid.push_back(f * dt_critical);
  }
  const StabilityMap map = cfl_scan(*system, cfg.profile, grid, cfg.cfl.steps, cfg.solver);
  out.write(file(cfg, "cfl.csv"), cfl_csv(map));
  const bool bracketed = map.stable.front() && !map.stable.back();
  const double deviation = std::abs(map.empirical / map.predicted - 1.0);
  Outcome o;
  o.body = {{"formulation", to_string(cfg.formulation)},
            {"steps", cfg.cfl.steps},
            {"predicted", map.predicted},
            {"empirical", map.empirical},
            {"relative_deviation", deviation},
            {"max_deviation", cfg.cfl.max_deviation},
            {"bracketed", bracketed}};
  if (!bracketed) {
    o.assertion_failed = true;
    o.failure = "the dt grid does not bracket the stability threshold";
  } else if (deviation > cfg.cfl.max_deviation) {
    o.assertion_failed = true;
    o.failure = "empirical threshold deviates by " + format_double(deviation);
  }
  if (opt.export_matrices) {
    export_matrices(*system, cfg, out, o.body);
  }
  return o;
}

Outcome cmd_converge(const RunConfig& cfg, const Options&, OutputSet& out) {
  const ConvergenceTable table = convergence_study(cfg.spec(cfg.domain.build()), cfg.scheme, cfg.profile,
                                                   cfg.converge.cells, cfg.converge.dt_over_h,
                                                   cfg.converge.final_time, cfg.solver);
  out.write(file(cfg, "converge.csv"), convergence_csv(table));
  Outcome o;
  json rows = json::array();
  for (const ConvergenceRow& r : table.rows) {
    rows.push_back({{"cells", r.cells}, {"h", r.h}, {"dt", r.dt}, {"error", r.error}, {"order", number(r.order)}});
  }
  o.body = {{"formulation", to_string(cfg.formulation)},
            {"scheme", to_string(cfg.scheme)},
            {"field", table.field},
            {"final_time", cfg.converge.final_time},
            {"rows", rows}};
  if (cfg.converge.expected_order) {
    o.body["expected_order"] = *cfg.converge.expected_order;
    o.body["order_tolerance"] = cfg.converge.order_tolerance;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
      if (!(std::abs(table.rows[i].order - *cfg.converge.expected_order) <= cfg.converge.order_tolerance)) {
        o.assertion_failed = true;
        o.failure = "observed order " + format_double(table.rows[i].order) + " outside the expected band";
      }
    }
  }
  return o;
}

Outcome cmd_spectrum(const RunConfig& cfg, const Options& opt, OutputSet& out) {
  const auto system = build_formulation(cfg.spec(cfg.domain.build()));
  const SecondOrderSystem eff = system->effective_second_order();
  const double lambda = max_generalized_eigenvalue(*system, cfg.solver);
  const double dt_critical = 2.0 / std::sqrt(lambda);
  out.write(file(cfg, "spectrum.csv"), key_value_csv("spectrum", {{"dofs", static_cast<double>(eff.mass.rows())},
                                                                  {"lambda_max", lambda},
                                                                  {"dt_critical", dt_critical}}));
  Outcome o;
  o.body = {{"formulation", to_string(cfg.formulation)},
            {"dofs", eff.mass.rows()},
            {"lambda_max", lambda},
            {"dt_critical", dt_critical}};
  if (opt.export_matrices) {
    export_matrices(*system, cfg, out, o.body);
  }
  return o;
}

int exit_code_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::solver_failure:
      return solver;
    case ErrorCode::io:
      return io;
    default:
      return validation;
  }
}

int execute(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  json report = {{"command", opt.command}, {"config", opt.config_path}};
  if (opt.seed) {
    report["seed"] = *opt.seed;
  }
  std::optional<RunConfig> cfg;
  std::optional<std::filesystem::path> dir = opt.out_dir;
  int code = ok;
  std::string message;
  std::string error_code;
  {
    std::optional<OutputSet> out;
    try {
      cfg = load_config(opt.config_path);
      if (!dir) {
        dir = cfg->output_dir;
      }
      out.emplace(*dir);
      Outcome o;
      if (opt.command == "run") {
        o = cmd_run(*cfg, opt, *out);
      } else if (opt.command == "compare") {
        o = cmd_compare(*cfg, opt, *out);
      } else if (opt.command == "energy") {
        o = cmd_energy(*cfg, opt, *out);
      } else if (opt.command == "cfl") {
        o = cmd_cfl(*cfg, opt, *out);
      } else if (opt.command == "converge") {
        o = cmd_converge(*cfg, opt, *out);
      } else {
        o = cmd_spectrum(*cfg, opt, *out);
      }
      report["result"] = o.body;
      json files = json::array();
      for (const auto& f : out->files()) {
        files.push_back(f.filename().string());
      }
      report["outputs"] = files;
      out->commit();
      if (o.assertion_failed) {
        code = assertion;
        error_code = "assertion-failure";
        message = o.failure;
      }
    } catch (const ConfigError& e) {
      code = validation;
      error_code = std::string(to_string(e.code()));
      message = e.what();
      json issues = json::array();
      for (const ConfigIssue& i : e.issues()) {
        issues.push_back({{"line", i.line}, {"key", i.key}, {"message", i.message}});
      }
      report["issues"] = issues;
    } catch (const Error& e) {
      code = exit_code_of(e.code());
      error_code = std::string(to_string(e.code()));
      message = e.what();
      if (const auto* ioe = dynamic_cast<const IoError*>(&e)) {
        report["path"] = ioe->path();
      }
    } catch (const std::exception& e) {
      code = internal;
      error_code = "internal-error";
      message = e.what();
    }
    // a failed command leaves no data files behind
    if (code != ok && code != assertion && out) {
      out->discard();
    }
  }
  report["status"] = code == ok ? "ok" : "failed";
  report["exit_code"] = code;
  if (code != ok) {
    report["error"] = {{"code", error_code}, {"message", message}};
  }
  report["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (dir) {
    const std::string prefix = cfg ? cfg->prefix : std::string("wavelab");
    try {
      OutputSet summary(*dir);
      summary.write(prefix + "_" + opt.command + ".json", text);
      summary.commit();
    } catch (const IoError& e) {
      std::cerr << "wavelab: " << e.what() << "\n";
      return io;
    }
  }
  if (code != ok) {
    std::cerr << "wavelab " << opt.command << ": " << message << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed finite element wave solver and scheme equivalence checks"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "Run configuration file")->required();
  app.add_option("--out", opt.out_dir, "Output directory (overrides [output] dir)");
  app.add_flag("--export-matrices", opt.export_matrices, "Write the assembled matrices in Matrix Market format");
  app.add_option("--tol", opt.tol, "Equivalence tolerance (overrides [compare] tol)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", opt.seed, "Seed for randomized checks; recorded in the report");
  const std::pair<const char*, const char*> commands[] = {
      {"run", "Step the configured formulation and write the trajectory"},
      {"compare", "Step two formulations and check they agree on common fields"},
      {"energy", "Audit the conserved energy along a run"},
      {"cfl", "Scan step sizes around the predicted stability limit"},
      {"converge", "Measure the spatial convergence order"},
      {"spectrum", "Report the largest generalized eigenvalue and critical step"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : validation;
  }
  opt.command = app.get_subcommands().front()->get_name();
  return execute(opt);
}
