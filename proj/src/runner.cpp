#include <filesystem>
#include <fstream>

#include "plap/config.hpp"
#include "plap/continuation.hpp"
#include "plap/errors.hpp"
#include "plap/verify.hpp"

namespace plap {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& u,
                     const std::string& hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# config_hash=" << hash << "\n";
  dump_csv(u, out);
}

void write_solve_trace_csv(const std::filesystem::path& path, const SolveResult& res,
                           const std::string& hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# config_hash=" << hash << "\n";
  out << "iter,I,B,step\n";
  char buf[40];
  for (const TraceRow& r : res.trace) {
    out << r.iter;
    for (double v : {r.I, r.B, r.step}) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_plot_script(const std::filesystem::path& path, RunMode mode,
                       const std::string& hash) {
  std::string body = "#!/usr/bin/env python3\n# config_hash=" + hash + "\n";
  body +=
      "import csv\n"
      "import matplotlib\n"
      "matplotlib.use(\"Agg\")\n"
      "import matplotlib.pyplot as plt\n\n"
      "rows = []\n"
      "with open(\"trace.csv\") as fh:\n"
      "    for line in fh:\n"
      "        if not line.startswith(\"#\"):\n"
      "            rows.append(line)\n"
      "data = list(csv.DictReader(rows))\n";
  if (mode == RunMode::cont) {
    body +=
        "m = [int(r[\"m\"]) for r in data]\n"
        "fig, ax = plt.subplots(1, 3, figsize=(12, 3.5))\n"
        "ax[0].plot(m, [float(r[\"Rm\"]) for r in data], \"o-\"); ax[0].set_ylabel(\"R_m\")\n"
        "ax[1].plot(m, [float(r[\"lambda\"]) for r in data], \"o-\"); ax[1].set_ylabel(\"lambda_m\")\n"
        "ax[2].plot(m, [float(r[\"lambdaRm\"]) for r in data], \"o-\"); ax[2].set_ylabel(\"|lambda_m| R_m\")\n"
        "for a in ax: a.set_xlabel(\"m\"); a.set_xscale(\"log\", base=2)\n";
  } else {
    body +=
        "it = [int(r[\"iter\"]) for r in data]\n"
        "fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))\n"
        "ax[0].plot(it, [float(r[\"I\"]) for r in data], \"o-\"); ax[0].set_ylabel(\"I\")\n"
        "ax[1].plot(it, [float(r[\"B\"]) for r in data], \"o-\"); ax[1].set_ylabel(\"B\")\n"
        "for a in ax: a.set_xlabel(\"iteration\")\n";
  }
  body +=
      "fig.tight_layout()\n"
      "fig.savefig(\"trace.png\", dpi=150)\n"
      "print(\"wrote trace.png\")\n";
  write_text(path, body);
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  o.grad_tol_factor = c.grad_tol_factor;
  o.constraint_tol_factor = c.constraint_tol_factor;
  o.max_iter = c.max_iter;
  o.residual_tol = c.residual_tol;
  return o;
}

nlohmann::json result_envelope(const RunConfig& c, RunMode mode) {
  return nlohmann::json{{"config_hash", config_hash(c)},
                        {"mode", to_string(mode)},
                        {"seed", c.seed}};
}

int run_solve(const RunConfig& c, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const std::string hash = config_hash(c);
  const SolveResult res = solve_subcritical(spec, {}, solver_options(c));
  nlohmann::json j = result_envelope(c, RunMode::solve);
  j["solve"] = res;
  write_json(dir / "result.json", j);
  write_field_csv(dir / "u.csv", res.u, hash);
  write_solve_trace_csv(dir / "trace.csv", res, hash);
  write_plot_script(dir / "plot_trace.py", RunMode::solve, hash);
  return res.status == SolveStatus::converged ? 0 : 2;
}

int run_continue(const RunConfig& c, const ProblemSpec& spec,
                 const std::filesystem::path& dir) {
  const std::string hash = config_hash(c);
  ContinuationOptions opts;
  opts.solver = solver_options(c);
  const ContinuationTrace trace = run_continuation(spec, c.m_schedule, opts);
  nlohmann::json j = result_envelope(c, RunMode::cont);
  j["continuation"] = trace;
  write_json(dir / "result.json", j);
  write_field_csv(dir / "u.csv", trace.final.u, hash);
  {
    std::ofstream out(dir / "trace.csv", std::ios::binary);
    out << "# config_hash=" << hash << "\n";
    dump_csv(trace, out);
  }
  write_plot_script(dir / "plot_trace.py", RunMode::cont, hash);
  return trace.status == SolveStatus::converged ? 0 : 2;
}

int run_oracle(const RunConfig& c, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const std::string hash = config_hash(c);
  const SolveResult solver_res = solve_subcritical(spec, {}, solver_options(c));
  const SolveResult oracle_res =
      brute_force_minimize(spec, c.oracle_restarts, c.oracle_budget, c.seed, solver_options(c));
  nlohmann::json j = result_envelope(c, RunMode::oracle);
  j["solver"] = solver_res;
  j["oracle"] = oracle_res;
  j["mu_gap"] = solver_res.mu - oracle_res.mu;
  write_json(dir / "result.json", j);
  write_field_csv(dir / "u.csv", solver_res.u, hash);
  write_solve_trace_csv(dir / "trace.csv", solver_res, hash);
  write_plot_script(dir / "plot_trace.py", RunMode::oracle, hash);
  const bool ok = solver_res.status == SolveStatus::converged &&
                  oracle_res.status == SolveStatus::converged;
  return ok ? 0 : 2;
}

int run_verify(const RunConfig& c, const ProblemSpec& spec, const std::filesystem::path& dir) {
  const std::string hash = config_hash(c);
  auto emit = [&](const char* file, const InequalityReport& rep) {
    nlohmann::json j = result_envelope(c, RunMode::verify);
    j["report"] = rep;
    write_json(dir / file, j);
  };

  emit("interpolation_constant.json",
       estimate_interpolation_constant(spec.mesh, spec.p, c.verify_epsilon, c.seed,
                                       c.verify_samples));
  const InequalityReport sob =
      sobolev_constants(spec.mesh, spec.p, c.seed + 1, c.verify_samples);
  emit("sobolev_constants.json", sob);

  const double nu = compute_nu(spec);
  int status = 0;
  SolveResult final_res;
  if (spec.f.critical()) {
    ContinuationOptions opts;
    opts.solver = solver_options(c);
    const ContinuationTrace trace = run_continuation(spec, c.m_schedule, opts);
    if (spec.f.c > 0.0)
      emit("nondegeneracy.json",
           nondegeneracy_diagnostic(trace, sob.parameters.at("K").get<double>(), spec.f.c,
                                    spec.p, spec.p_star()));
    final_res = trace.final;
    if (trace.status != SolveStatus::converged) status = 2;
    // The final iterate is feasible for the last regularized instance, so the
    // mass bound is checked against that instance.
    const ContinuationRow& last = trace.rows.back();
    const ProblemSpec spec_m =
        spec.with_nonlinearity(make_fm(spec.f, last.m, spec.p_star()), last.Rm);
    emit("l1_bound.json", check_l1_bound(spec_m, final_res.u, 0.5 * nu));
  } else {
    final_res = solve_subcritical(spec, {}, solver_options(c));
    if (final_res.status != SolveStatus::converged) status = 2;
    emit("l1_bound.json", check_l1_bound(spec, final_res.u, 0.5 * nu));
  }
  emit("positivity.json", check_positivity(final_res));

  nlohmann::json j = result_envelope(c, RunMode::verify);
  j["solve"] = final_res;
  write_json(dir / "result.json", j);
  write_field_csv(dir / "u.csv", final_res.u, hash);
  return status;
}

}  // namespace

int run(const RunConfig& c, RunMode mode, const std::string& out_dir) {
  const ProblemSpec spec = build_problem(c, mode);
  const std::filesystem::path dir = out_dir.empty() ? c.output_dir : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "'");

  switch (mode) {
    case RunMode::solve: return run_solve(c, spec, dir);
    case RunMode::cont: return run_continue(c, spec, dir);
    case RunMode::oracle: return run_oracle(c, spec, dir);
    case RunMode::verify: return run_verify(c, spec, dir);
  }
  throw Error("unreachable mode");
}

}  // namespace plap
