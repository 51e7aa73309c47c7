#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hwbo/acquisition.hpp"
#include "hwbo/hw_models.hpp"
#include "hwbo/sim_bench.hpp"
#include "hwbo/solvers.hpp"

namespace hwbo {

using Json = nlohmann::json;

enum class RunMode { FixedEvals, FixedTime };

/// "aware" applies the feasibility gate and early termination as configured;
/// "default" is the constraint-unaware baseline with both disabled.
enum class Variant { Aware, Default };

const char* to_string(RunMode m);
const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ExperimentConfig {
  SimScenario scenario;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<Variant> variants{Variant::Aware};
  Budget budget;
  RunMode mode = RunMode::FixedEvals;
  std::optional<std::size_t> max_evals;
  std::optional<double> time_budget;
  bool gating = true;
  bool early_termination = true;
  std::map<Method, AcquisitionKind> acquisition;
  std::size_t candidate_count = 10000;
  double walk_sigma = 0.1;
  EarlyTermPolicy early_term;
  std::size_t profile_samples = 200;
  std::optional<std::string> profile_file;
  std::optional<std::string> model_file;
  bool fit_intercept = false;
  std::string output_dir = "runs";
  bool real_clock = false;

  /// Solver settings for one (method, variant, seed) run.
  SolverConfig solver_config(Method method, Variant variant, std::uint64_t seed) const;
};

/// Parses a config document. Errors are ConfigError naming the field.
ExperimentConfig parse_config(const Json& doc);
/// Reads a config file; `//` and `/* */` comments are allowed.
ExperimentConfig load_config(const std::string& path);

Json to_json(const SimScenario& s);
/// Applies the fields present in `doc` on top of `base`.
SimScenario scenario_from_json(const Json& doc, SimScenario base);

/// Canonical JSON of everything that determines trial outcomes, excluding
/// the run lists (methods, seeds, variants) and output location.
Json canonical_json(const ExperimentConfig& c);
/// Hex digest of canonical_json.
std::string config_digest(const ExperimentConfig& c);

}  // namespace hwbo
