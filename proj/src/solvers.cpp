#include "hwbo/solvers.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "hwbo/error.hpp"

namespace hwbo {

const char* to_string(Method m) {
  switch (m) {
    case Method::Rand: return "rand";
    case Method::RandWalk: return "rand-walk";
    case Method::HwCwei: return "hw-cwei";
    case Method::HwIeci: return "hw-ieci";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "rand") return Method::Rand;
  if (s == "rand-walk") return Method::RandWalk;
  if (s == "hw-cwei") return Method::HwCwei;
  if (s == "hw-ieci") return Method::HwIeci;
  throw DomainError("unknown method '" + s + "'");
}

bool is_bayesian(Method m) { return m == Method::HwCwei || m == Method::HwIeci; }

const char* to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Completed: return "completed";
    case TrialStatus::EarlyTerminated: return "early_terminated";
    case TrialStatus::SkippedInfeasible: return "skipped_infeasible";
  }
  return "?";
}

TrialStatus trial_status_from_string(const std::string& s) {
  if (s == "completed") return TrialStatus::Completed;
  if (s == "early_terminated") return TrialStatus::EarlyTerminated;
  if (s == "skipped_infeasible") return TrialStatus::SkippedInfeasible;
  throw DomainError("unknown trial status '" + s + "'");
}

void EarlyTermPolicy::validate() const {
  if (probe_epochs < 1) throw DomainError("early_term.probe_epochs must be >= 1");
  if (!(accuracy_floor >= 0.0 && accuracy_floor < 1.0)) throw DomainError("early_term.accuracy_floor must lie in [0,1)");
  if (!(penalty_error > 0.0 && penalty_error <= 1.0)) throw DomainError("early_term.penalty_error must lie in (0,1]");
  if (penalty_error < 1.0 - accuracy_floor - 1e-12) {
    throw DomainError("early_term.penalty_error must be >= 1 - accuracy_floor");
  }
}

void SolverConfig::validate() const {
  if (!max_evals && !time_budget) throw DomainError("solver needs max_evals or time_budget");
  if (max_evals && *max_evals < 1) throw DomainError("max_evals must be >= 1");
  if (time_budget && !(*time_budget > 0.0)) throw DomainError("time_budget must be > 0");
  if (!(walk_sigma > 0.0 && walk_sigma <= 1.0)) throw DomainError("walk_sigma must lie in (0,1]");
  if (candidate_count < 1) throw DomainError("candidate_count must be >= 1");
  early_term.validate();
}

AcquisitionKind SolverConfig::effective_acquisition() const {
  if (acquisition) return *acquisition;
  if (!gating) return AcquisitionKind::EI;
  return method == Method::HwCwei ? AcquisitionKind::HwCwei : AcquisitionKind::HwIeci;
}

Evaluation evaluate_with_early_term(const Objective& objective, const DesignPoint& x, const EarlyTermPolicy& policy,
                                    bool enabled) {
  Evaluation ev;
  const double chance = 1.0 / objective.num_classes();
  const bool active = enabled && policy.accuracy_floor > 0.0;
  try {
    auto session = objective.start(x);
    const int total = session->total_epochs();
    for (int t = 1; t <= total; ++t) {
      double acc = session->train_epoch();
      ev.epochs_run = t;
      if (std::isnan(acc)) acc = chance;
      if (active && t == policy.probe_epochs && t < total && acc <= policy.accuracy_floor) {
        ev.objective = policy.penalty_error;
        ev.status = TrialStatus::EarlyTerminated;
        return ev;
      }
    }
    ev.objective = session->test_error();
    ev.status = TrialStatus::Completed;
  } catch (const std::exception& e) {
    ev.objective = policy.penalty_error;
    ev.status = TrialStatus::EarlyTerminated;
    ev.note = std::string("objective-failed: ") + e.what();
  }
  return ev;
}

DesignPoint propose_rand(const SearchSpace& space, Rng& rng) { return sample_uniform(space, rng); }

DesignPoint propose_rand_walk(const SearchSpace& space, const DesignPoint* incumbent, double sigma, Rng& rng) {
  if (incumbent == nullptr) return sample_uniform(space, rng);
  const Eigen::VectorXd center = normalize(space, *incumbent);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd u(center.size());
  for (Eigen::Index i = 0; i < center.size(); ++i) u[i] = center[i] + sigma * gauss(rng);
  // Denormalize through the unit map without clamping first, so clip_round
  // sees the raw out-of-bounds value.
  std::vector<double> raw(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.param(i);
    const double t = u[static_cast<Eigen::Index>(i)];
    if (p.kind == ParamKind::LogContinuous) {
      const double lo = std::log(p.lower);
      raw[i] = std::exp(lo + t * (std::log(p.upper) - lo));
    } else {
      raw[i] = p.lower + t * (p.upper - p.lower);
    }
  }
  return clip_round(space, raw);
}

bool predicted_violation(const TrialRecord& r, const Budget& budget) {
  if (budget.power && r.predicted_power && *r.predicted_power > *budget.power) return true;
  if (budget.memory && r.predicted_memory && *r.predicted_memory > *budget.memory) return true;
  return false;
}

bool true_violation(const TrialRecord& r, const Budget& budget) {
  if (budget.power && r.true_power && *r.true_power > *budget.power) return true;
  if (budget.memory && r.true_memory && *r.true_memory > *budget.memory) return true;
  return false;
}

std::optional<Incumbent> find_incumbent(std::span<const TrialRecord> journal, const Budget& budget, bool gated) {
  std::optional<Incumbent> best;
  for (const auto& r : journal) {
    if (r.status != TrialStatus::Completed || !r.objective) continue;
    if (gated && predicted_violation(r, budget)) continue;
    if (!best || *r.objective < best->value) best = Incumbent{*r.objective, r.x};
  }
  return best;
}

BoProposal propose_bo(const SearchSpace& space, std::span<const TrialRecord> journal, const AcquisitionChoice& choice,
                      const HwModels& models, const Budget& budget, bool gated, Rng& rng,
                      const HyperSearchOptions& hyper_search) {
  std::size_t completed = 0;
  std::vector<const TrialRecord*> observed;
  for (const auto& r : journal) {
    if (!r.evaluated() || !r.objective) continue;
    observed.push_back(&r);
    if (r.status == TrialStatus::Completed) ++completed;
  }
  if (completed < 2) return {sample_uniform(space, rng), "bootstrap"};

  const auto n = static_cast<Eigen::Index>(observed.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(space.size()));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = normalize(space, observed[static_cast<std::size_t>(i)]->x).transpose();
    y[i] = *observed[static_cast<std::size_t>(i)]->objective;
  }
  try {
    const KernelHyper hyper = optimize_hypers(X, y, rng, hyper_search);
    const GaussianProcess gp = GaussianProcess::fit(X, y, hyper);
    const auto inc = find_incumbent(journal, budget, gated);
    AcquisitionContext ctx{&space, &gp, &models, budget, inc ? inc->value : kWorstError};
    AcquisitionResult res = maximize_acquisition(space, choice, ctx, rng);
    return {std::move(res.x), res.fallback ? "fallback" : ""};
  } catch (const FitError&) {
    return {sample_uniform(space, rng), "gp-fit-failed"};
  }
}

std::vector<TrialRecord> run_solver(const SearchSpace& space, const Objective& objective, const HwModels& models,
                                    const Budget& budget, const SolverConfig& config,
                                    std::vector<TrialRecord> resume_from, const TrialSink& sink) {
  config.validate();
  budget.validate();
  std::vector<TrialRecord> journal = std::move(resume_from);
  std::size_t evaluations = 0;
  for (std::size_t i = 0; i < journal.size(); ++i) {
    if (journal[i].index != i) throw DataError("resumed journal has a gap at trial " + std::to_string(i));
    if (journal[i].evaluated()) ++evaluations;
  }
  double clock = journal.empty() ? 0.0 : journal.back().sim_time_end;
  const AcquisitionChoice choice{config.effective_acquisition(), config.candidate_count};

  for (;;) {
    if (config.max_evals && evaluations >= *config.max_evals) break;
    if (config.time_budget && clock >= *config.time_budget) break;
    if (journal.size() >= config.max_proposals) break;

    const auto wall_start = std::chrono::steady_clock::now();
    const std::size_t index = journal.size();
    Rng rng = make_rng(config.seed, {index});

    TrialRecord rec;
    rec.index = index;
    switch (config.method) {
      case Method::Rand: rec.x = propose_rand(space, rng); break;
      case Method::RandWalk: {
        const auto inc = find_incumbent(journal, budget, config.gating);
        rec.x = propose_rand_walk(space, inc ? &inc->x : nullptr, config.walk_sigma, rng);
        if (!inc) rec.note = "no-incumbent";
        break;
      }
      case Method::HwCwei:
      case Method::HwIeci: {
        BoProposal p = propose_bo(space, journal, choice, models, budget, config.gating, rng, config.hyper_search);
        rec.x = std::move(p.x);
        rec.note = std::move(p.note);
        break;
      }
    }
    rec.z = extract_structural(space, rec.x);
    const BudgetCheck check = check_budget(models, rec.z, budget);
    rec.predicted_power = check.power;
    rec.predicted_memory = check.memory;
    if (const auto truth = objective.measure(rec.z)) {
      rec.true_power = truth->power;
      rec.true_memory = truth->memory;
    }
    rec.sim_time_start = clock;

    double duration = 0.0;
    if (config.gating && !check.feasible) {
      rec.status = TrialStatus::SkippedInfeasible;
      rec.epochs_run = 0;
      duration = kSkipOverhead;
    } else {
      Evaluation ev = evaluate_with_early_term(objective, rec.x, config.early_term, config.early_termination);
      rec.objective = ev.objective;
      rec.status = ev.status;
      rec.epochs_run = ev.epochs_run;
      if (!ev.note.empty()) rec.note = rec.note.empty() ? ev.note : rec.note + ";" + ev.note;
      duration = rec.epochs_run * objective.epoch_cost(rec.x);
      ++evaluations;
    }
    if (config.real_clock) {
      duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    }
    clock += duration;
    rec.sim_time_end = clock;
    journal.push_back(rec);
    if (sink) sink(journal.back());
  }
  return journal;
}

std::vector<std::optional<double>> best_so_far(std::span<const TrialRecord> journal, const Budget& budget) {
  std::vector<std::optional<double>> out;
  std::optional<double> best;
  for (const auto& r : journal) {
    if (!r.evaluated()) continue;
    if (r.status == TrialStatus::Completed && r.objective) {
      const bool violates = (r.true_power || r.true_memory) ? true_violation(r, budget) : predicted_violation(r, budget);
      if (!violates && (!best || *r.objective < *best)) best = r.objective;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace hwbo
