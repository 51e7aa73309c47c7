#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hwbo/acquisition.hpp"
#include "hwbo/gp.hpp"
#include "hwbo/hw_models.hpp"
#include "hwbo/objective.hpp"
#include "hwbo/rng.hpp"
#include "hwbo/search_space.hpp"

namespace hwbo {

enum class Method { Rand, RandWalk, HwCwei, HwIeci };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
bool is_bayesian(Method m);

struct EarlyTermPolicy {
  int probe_epochs = 2;
  // Fractional accuracy; a probe at or below it stops training. 0 disables.
  double accuracy_floor = 0.10;
  double penalty_error = 0.9;

  void validate() const;
};

/// Time charged for a proposal the feasibility gate rejects.
inline constexpr double kSkipOverhead = 1e-3;

struct SolverConfig {
  Method method = Method::HwIeci;
  std::optional<std::size_t> max_evals;
  std::optional<double> time_budget;
  double walk_sigma = 0.1;
  EarlyTermPolicy early_term;
  bool gating = true;
  bool early_termination = true;
  std::uint64_t seed = 0;
  std::size_t candidate_count = 10000;
  // Overrides the method's acquisition (BO methods only).
  std::optional<AcquisitionKind> acquisition;
  // Hard cap on proposals, skipped ones included.
  std::size_t max_proposals = 100000;
  // Charge host wall-clock seconds instead of simulated epoch cost.
  bool real_clock = false;
  HyperSearchOptions hyper_search;

  void validate() const;
  /// Acquisition actually used by a BO method under this configuration.
  AcquisitionKind effective_acquisition() const;
};

enum class TrialStatus { Completed, EarlyTerminated, SkippedInfeasible };

const char* to_string(TrialStatus s);
TrialStatus trial_status_from_string(const std::string& s);

struct TrialRecord {
  std::size_t index = 0;
  DesignPoint x;
  StructuralVector z;
  std::optional<double> objective;
  TrialStatus status = TrialStatus::Completed;
  int epochs_run = 0;
  std::optional<double> predicted_power;
  std::optional<double> predicted_memory;
  std::optional<double> true_power;
  std::optional<double> true_memory;
  double sim_time_start = 0.0;
  double sim_time_end = 0.0;
  // Free-form tags, e.g. "bootstrap", "fallback", "gp-fit-failed".
  std::string note;

  bool evaluated() const { return status != TrialStatus::SkippedInfeasible; }
  bool operator==(const TrialRecord&) const = default;
};

struct Evaluation {
  std::optional<double> objective;
  TrialStatus status = TrialStatus::Completed;
  int epochs_run = 0;
  std::string note;
};

/// Trains epoch by epoch; after `probe_epochs` an accuracy at or below the
/// floor stops training with the penalty error. Objective exceptions become
/// early terminations with the penalty.
Evaluation evaluate_with_early_term(const Objective& objective, const DesignPoint& x, const EarlyTermPolicy& policy,
                                    bool enabled = true);

DesignPoint propose_rand(const SearchSpace& space, Rng& rng);

/// Gaussian step of std `sigma` around the incumbent in normalized space,
/// then clip_round. Falls back to a uniform draw without an incumbent.
DesignPoint propose_rand_walk(const SearchSpace& space, const DesignPoint* incumbent, double sigma, Rng& rng);

/// Best feasible completed trial. With `gated`, feasibility is the model
/// prediction recorded in the journal; otherwise every completed trial counts.
std::optional<Incumbent> find_incumbent(std::span<const TrialRecord> journal, const Budget& budget, bool gated);

struct BoProposal {
  DesignPoint x;
  std::string note;
};

/// Refits the GP on every trial carrying an objective (penalties included),
/// re-selects kernel hyper-parameters and maximizes the acquisition. Uses a
/// uniform draw while fewer than two trials have completed or if the fit fails.
BoProposal propose_bo(const SearchSpace& space, std::span<const TrialRecord> journal, const AcquisitionChoice& choice,
                      const HwModels& models, const Budget& budget, bool gated, Rng& rng,
                      const HyperSearchOptions& hyper_search = {});

using TrialSink = std::function<void(const TrialRecord&)>;

/// Runs the budgeted propose / gate / evaluate loop. `resume_from` holds the
/// journal of an interrupted run with identical inputs; the loop continues
/// after its last record. Each new record is passed to `sink` as produced.
std::vector<TrialRecord> run_solver(const SearchSpace& space, const Objective& objective, const HwModels& models,
                                    const Budget& budget, const SolverConfig& config,
                                    std::vector<TrialRecord> resume_from = {}, const TrialSink& sink = {});

/// Best feasible objective (by true metrics when recorded, otherwise by
/// predicted metrics) after each evaluated trial; nullopt until one exists.
std::vector<std::optional<double>> best_so_far(std::span<const TrialRecord> journal, const Budget& budget);

bool predicted_violation(const TrialRecord& r, const Budget& budget);
bool true_violation(const TrialRecord& r, const Budget& budget);

}  // namespace hwbo
