#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hwbo/config.hpp"
#include "hwbo/hw_models.hpp"
#include "hwbo/journal.hpp"

namespace hwbo {

// ---- profiling data and model files -------------------------------------

struct ProfileTable {
  std::vector<std::string> structural_names;
  std::vector<ProfileSample> samples;
};

/// Delimited text: header of structural names then `power,memory`.
void write_profile_csv(const std::string& path, const ProfileTable& table);
/// Throws DataError with the offending line number on malformed rows.
ProfileTable read_profile_csv(const std::string& path);

struct HwModelFile {
  std::vector<std::string> structural_names;
  HwLinearModel power;
  HwLinearModel memory;
};

Json to_json(const HwModelFile& f);
HwModelFile model_file_from_json(const Json& j);
void write_model_file(const std::string& path, const HwModelFile& f);
HwModelFile read_model_file(const std::string& path);

inline constexpr double kMaxAcceptedRmspe = 10.0;

struct FitHwOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  bool intercept = false;
  // Accept models whose CV RMSPE exceeds kMaxAcceptedRmspe.
  bool force = false;
};

/// Fits both metrics; each model's `rmspe` holds its k-fold CV RMSPE.
/// Throws ModelError when a CV RMSPE is above the limit and not forced.
HwModelFile fit_hw_models(const ProfileTable& table, const FitHwOptions& options);

// ---- experiments --------------------------------------------------------

struct RunSummary {
  Method method = Method::Rand;
  Variant variant = Variant::Aware;
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  std::size_t evaluations = 0;
  std::size_t completed = 0;
  std::size_t early_terminated = 0;
  std::size_t skipped = 0;
  std::optional<double> best_error;
  // Simulated time at which best_error was first reached.
  std::optional<double> best_error_time;
  std::size_t predicted_violations = 0;
  std::size_t true_violations = 0;
  // Evaluated trials the models called feasible but the ground truth did not.
  std::size_t model_discrepancies = 0;
  double final_clock = 0.0;
};

struct MethodSummary {
  Method method = Method::Rand;
  Variant variant = Variant::Aware;
  std::size_t runs = 0;
  std::size_t runs_without_feasible = 0;
  // Runs that never found a feasible design count as kWorstError.
  double mean_best_error = 0.0;
  double std_best_error = 0.0;
  double mean_evaluations = 0.0;
};

struct SeedComparison {
  std::uint64_t seed = 0;
  std::size_t default_evaluations = 0;
  std::size_t aware_evaluations = 0;
  double default_time = 0.0;
  std::optional<double> aware_time_to_default_evals;
  std::optional<double> default_best_error;
  std::optional<double> default_time_to_best;
  std::optional<double> aware_time_to_default_best;
};

/// Aware-vs-default comparison for one method, paired by seed.
struct MethodComparison {
  Method method = Method::Rand;
  std::vector<SeedComparison> seeds;
  double evaluations_increase = 0.0;
  // Geometric means over seeds where both times exist.
  std::optional<double> speedup_to_default_evals;
  std::optional<double> speedup_to_default_best;
};

struct BestErrorPoint {
  Method method;
  Variant variant;
  std::uint64_t seed;
  std::size_t evaluation;  // 1-based
  double sim_time;
  std::optional<double> best_error;
  std::size_t predicted_violations;  // cumulative
  std::size_t true_violations;       // cumulative
};

struct ReportBundle {
  std::vector<RunSummary> runs;
  std::vector<MethodSummary> methods;
  std::vector<MethodComparison> comparisons;
  std::vector<BestErrorPoint> series;
  std::string digest;
};

/// Pure aggregation over journals. Throws DataError when the journals come
/// from different configurations.
ReportBundle aggregate(const std::vector<RunJournal>& journals);

/// Writes best_error_vs_evals.csv, best_error_vs_time.csv, trials.csv and
/// summary.json into `dir`.
void emit_reports(const std::vector<RunJournal>& journals, const std::string& dir);
Json to_json(const ReportBundle& b);

/// Loads every journal under `dir`/journals, sorted by file name.
std::vector<RunJournal> load_journals(const std::string& dir);

struct ExperimentOptions {
  // Continue interrupted journals and skip finished ones instead of
  // starting over.
  bool resume = false;
  // Stop every run after this many trials without writing the end marker.
  std::optional<std::size_t> interrupt_after;
};

struct ExperimentResult {
  ReportBundle report;
  std::vector<std::string> journal_paths;
  std::size_t runs_computed = 0;
  std::size_t runs_reused = 0;
};

/// Hardware models used by every run of the experiment for `seed`.
HwModels experiment_models(const ExperimentConfig& config, std::uint64_t seed);

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& options = {});

}  // namespace hwbo
