#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plap/optimizer.hpp"

namespace plap {

/// One archivable run description.  The JSON document mirrors this struct:
///
///   {
///     "manifold": {"dim": 3, "shape": [8,8,8], "lengths": [1,1,1]},
///     "p": 2.0,
///     "a_expr": "2",
///     "f_expr": "t",
///     "f_growth": {"rho": 1.0, "b": 1.0, "c": 0.0},   // or "rho": "critical"
///     "R": 0.5,
///     "solver": { ...optional overrides... },
///     "continuation": {"m_schedule": [1,2,4,8,16,32]},
///     "oracle": {"restarts": 3, "budget": 500000},
///     "verify": {"epsilon": 0.1, "samples": 100},
///     "seed": 42,
///     "output_dir": "out"
///   }
struct RunConfig {
  int dim = 3;
  std::vector<int> shape;
  std::vector<double> lengths;
  double p = 2.0;
  std::string a_expr;
  std::string f_expr;
  std::optional<double> rho;  // empty = critical
  double growth_b = 1.0;
  double growth_c = 0.0;
  double R = 1.0;

  // Solver overrides (defaults match SolverOptions / ProblemSpec).
  double quad_tol = 1e-10;
  std::optional<double> grad_reg_delta;
  double grad_tol_factor = 1e-8;
  double constraint_tol_factor = 1e-10;
  int max_iter = 50000;
  double residual_tol = 1e-5;

  std::vector<int> m_schedule = {1, 2, 4, 8, 16, 32};
  int oracle_restarts = 3;
  long oracle_budget = 500000;
  double verify_epsilon = 0.1;
  int verify_samples = 100;

  std::uint64_t seed = 0;
  std::string output_dir = "out";
};

enum class RunMode { solve, cont, verify, oracle };

RunMode parse_mode(const std::string& name);  // throws ConfigError
const char* to_string(RunMode m);

/// Reads and validates a config file; errors carry the offending field or
/// byte position.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);

/// FNV-1a hash of the canonical serialized config, as 16 hex digits.  Every
/// output artifact embeds it.
std::string config_hash(const RunConfig& c);

/// Validates mode-specific requirements (growth declaration, mesh size) and
/// builds the ProblemSpec.  Throws ConfigError naming the mismatched field.
ProblemSpec build_problem(const RunConfig& c, RunMode mode);

/// Executes one run and writes result.json plus the mode's CSV/plot artifacts
/// into out_dir.  Returns the process exit status: 0 converged, 2 not
/// converged.  Configuration errors throw ConfigError (exit 1 in the CLI).
int run(const RunConfig& c, RunMode mode, const std::string& out_dir);

}  // namespace plap
