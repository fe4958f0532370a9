#include "plap/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "plap/errors.hpp"

namespace plap {

RunMode parse_mode(const std::string& name) {
  if (name == "solve") return RunMode::solve;
  if (name == "continue") return RunMode::cont;
  if (name == "verify") return RunMode::verify;
  if (name == "oracle") return RunMode::oracle;
  throw ConfigError("unknown mode '" + name + "' (expected solve|continue|verify|oracle)");
}

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::solve: return "solve";
    case RunMode::cont: return "continue";
    case RunMode::verify: return "verify";
    case RunMode::oracle: return "oracle";
  }
  return "unknown";
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& msg) {
  throw ConfigError("config field '" + field + "': " + msg);
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    field_error(key, e.what());
  }
}

template <typename T>
T get_required(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) field_error(key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    field_error(key, e.what());
  }
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig c;
  const nlohmann::json manifold = get_required<nlohmann::json>(j, "manifold");
  c.dim = get_required<int>(manifold, "dim");
  c.shape = get_required<std::vector<int>>(manifold, "shape");
  c.lengths = get_required<std::vector<double>>(manifold, "lengths");
  c.p = get_required<double>(j, "p");
  c.a_expr = get_required<std::string>(j, "a_expr");
  c.f_expr = get_required<std::string>(j, "f_expr");
  c.R = get_required<double>(j, "R");

  const nlohmann::json growth = get_required<nlohmann::json>(j, "f_growth");
  if (!growth.contains("rho")) field_error("f_growth.rho", "missing");
  const nlohmann::json& rho = growth.at("rho");
  if (rho.is_string()) {
    if (rho.get<std::string>() != "critical")
      field_error("f_growth.rho", "must be a number or the string \"critical\"");
    c.rho.reset();
  } else if (rho.is_number()) {
    c.rho = rho.get<double>();
  } else {
    field_error("f_growth.rho", "must be a number or the string \"critical\"");
  }
  c.growth_b = get_or<double>(growth, "b", 1.0);
  c.growth_c = get_or<double>(growth, "c", 0.0);

  if (j.contains("solver")) {
    const nlohmann::json s = j.at("solver");
    c.quad_tol = get_or<double>(s, "quad_tol", c.quad_tol);
    if (s.contains("grad_reg_delta")) c.grad_reg_delta = get_required<double>(s, "grad_reg_delta");
    c.grad_tol_factor = get_or<double>(s, "grad_tol_factor", c.grad_tol_factor);
    c.constraint_tol_factor = get_or<double>(s, "constraint_tol_factor", c.constraint_tol_factor);
    c.max_iter = get_or<int>(s, "max_iter", c.max_iter);
    c.residual_tol = get_or<double>(s, "residual_tol", c.residual_tol);
  }
  if (j.contains("continuation"))
    c.m_schedule = get_or<std::vector<int>>(j.at("continuation"), "m_schedule", c.m_schedule);
  if (j.contains("oracle")) {
    const nlohmann::json o = j.at("oracle");
    c.oracle_restarts = get_or<int>(o, "restarts", c.oracle_restarts);
    c.oracle_budget = get_or<long>(o, "budget", c.oracle_budget);
  }
  if (j.contains("verify")) {
    const nlohmann::json v = j.at("verify");
    c.verify_epsilon = get_or<double>(v, "epsilon", c.verify_epsilon);
    c.verify_samples = get_or<int>(v, "samples", c.verify_samples);
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.output_dir = get_or<std::string>(j, "output_dir", "out");
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json growth;
  if (c.rho)
    growth["rho"] = *c.rho;
  else
    growth["rho"] = "critical";
  growth["b"] = c.growth_b;
  growth["c"] = c.growth_c;
  return nlohmann::json{
      {"manifold", {{"dim", c.dim}, {"shape", c.shape}, {"lengths", c.lengths}}},
      {"p", c.p},
      {"a_expr", c.a_expr},
      {"f_expr", c.f_expr},
      {"f_growth", growth},
      {"R", c.R},
      {"solver",
       {{"quad_tol", c.quad_tol},
        {"grad_reg_delta", c.grad_reg_delta ? nlohmann::json(*c.grad_reg_delta) : nlohmann::json()},
        {"grad_tol_factor", c.grad_tol_factor},
        {"constraint_tol_factor", c.constraint_tol_factor},
        {"max_iter", c.max_iter},
        {"residual_tol", c.residual_tol}}},
      {"continuation", {{"m_schedule", c.m_schedule}}},
      {"oracle", {{"restarts", c.oracle_restarts}, {"budget", c.oracle_budget}}},
      {"verify", {{"epsilon", c.verify_epsilon}, {"samples", c.verify_samples}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir}};
}

std::string config_hash(const RunConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ProblemSpec build_problem(const RunConfig& c, RunMode mode) {
  if (c.dim < 2) field_error("manifold.dim", "must be at least 2");
  if (static_cast<int>(c.shape.size()) != c.dim)
    field_error("manifold.shape", "must list one entry per axis");
  if (static_cast<int>(c.lengths.size()) != c.dim)
    field_error("manifold.lengths", "must list one entry per axis");
  for (int s : c.shape)
    if (s < 3) field_error("manifold.shape", "every entry must be at least 3");
  for (double l : c.lengths)
    if (!(l > 0.0)) field_error("manifold.lengths", "every entry must be positive");
  if (!(c.p > 1.0) || !(c.p < c.dim))
    field_error("p", "must lie strictly between 1 and manifold.dim");
  if (!(c.R > 0.0)) field_error("R", "must be positive");
  if (!(c.growth_b > 0.0)) field_error("f_growth.b", "must be positive");
  if (!(c.growth_c >= 0.0)) field_error("f_growth.c", "must be nonnegative");

  const double p_star = c.p * c.dim / (c.dim - c.p);
  if (c.rho) {
    if (!(*c.rho > 0.0) || *c.rho > p_star - 1.0 + 1e-12)
      field_error("f_growth.rho", "must lie in (0, p*-1] or be \"critical\"");
  }
  const bool subcritical = c.rho.has_value() && *c.rho < p_star - 1.0 - 1e-12;
  if (mode == RunMode::cont && c.rho.has_value() && subcritical)
    field_error("f_growth.rho",
                "mode 'continue' requires critical growth (rho = \"critical\" or p*-1)");
  if ((mode == RunMode::solve || mode == RunMode::oracle) && !subcritical)
    field_error("f_growth.rho", "mode requires strictly subcritical growth (rho < p*-1)");
  if (mode == RunMode::cont) {
    if (c.m_schedule.size() < 3)
      field_error("continuation.m_schedule", "needs at least 3 entries");
    for (std::size_t i = 0; i + 1 < c.m_schedule.size(); ++i)
      if (!(c.m_schedule[i] < c.m_schedule[i + 1]))
        field_error("continuation.m_schedule", "must be strictly increasing");
    if (c.m_schedule.front() < 1)
      field_error("continuation.m_schedule", "entries must be positive");
  }

  ExprAst f_ast, a_ast;
  try {
    f_ast = parse(c.f_expr);
  } catch (const ParseError& e) {
    field_error("f_expr", e.what());
  }
  try {
    a_ast = parse(c.a_expr);
  } catch (const ParseError& e) {
    field_error("a_expr", e.what());
  }
  if (a_ast.uses_t()) field_error("a_expr", "the coefficient may not reference t");
  if (a_ast.max_coord_index() > c.dim)
    field_error("a_expr", "coordinate index exceeds manifold.dim");
  if (f_ast.max_coord_index() > c.dim)
    field_error("f_expr", "coordinate index exceeds manifold.dim");

  std::shared_ptr<const Mesh> mesh;
  try {
    mesh = build_torus(c.dim, c.shape, c.lengths);
  } catch (const PreconditionError& e) {
    field_error("manifold", e.what());
  }
  if (mode == RunMode::oracle && mesh->node_count() > 200)
    field_error("manifold.shape", "mode 'oracle' is limited to meshes of at most 200 nodes");

  Nonlinearity f;
  f.ast = f_ast;
  f.rho = c.rho;
  // A numeric rho equal to p*-1 routes to the continuation solver; the
  // critical declaration is what the solvers key on.
  if (c.rho && *c.rho >= p_star - 1.0 - 1e-12) f.rho.reset();
  f.b = c.growth_b;
  f.c = c.growth_c;

  ProblemSpec spec;
  try {
    spec = ProblemSpec::make(mesh, c.p, sample_coefficient(mesh, a_ast), std::move(f), c.R);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid problem instance: ") + e.what());
  }
  spec.quad_tol = c.quad_tol;
  if (c.grad_reg_delta) spec.grad_reg_delta = *c.grad_reg_delta;
  return spec;
}

}  // namespace plap
