#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hwbo/rng.hpp"
#include "hwbo/search_space.hpp"

namespace hwbo {

enum class Metric { Power, Memory };

const char* to_string(Metric m);

/// One offline profiling measurement (watts, gigabytes).
struct ProfileSample {
  StructuralVector z;
  double power = 0.0;
  double memory = 0.0;
};

double metric_value(const ProfileSample& s, Metric m);

/// Linear predictor sum_j w_j z_j for one hardware metric.
struct HwLinearModel {
  Metric metric = Metric::Power;
  std::vector<double> weights;
  // Only used when fitted with an intercept; zero otherwise.
  double intercept = 0.0;
  bool has_intercept = false;
  // Standard deviation of training residuals.
  double residual_std = 0.0;
  // RMSPE in percent: training fit from fit_linear, cross-validated when
  // produced through fit_hw_models.
  double rmspe = 0.0;
};

struct Budget {
  std::optional<double> power;   // watts
  std::optional<double> memory;  // gigabytes

  void validate() const;
  bool operator==(const Budget&) const = default;
};

/// Power and memory predictors; a missing model never blocks.
struct HwModels {
  std::optional<HwLinearModel> power;
  std::optional<HwLinearModel> memory;

  bool empty() const { return !power && !memory; }
};

struct BudgetCheck {
  bool feasible = true;
  std::optional<double> power;
  std::optional<double> memory;
};

/// Ordinary least squares without intercept (unless requested). Throws
/// FitError naming the first linearly dependent column.
HwLinearModel fit_linear(std::span<const ProfileSample> samples, Metric metric, bool intercept = false);

double predict(const HwLinearModel& model, const StructuralVector& z);

/// 100 * sqrt(mean(((p - a) / a)^2)).
double rmspe(std::span<const double> preds, std::span<const double> actuals);

struct CrossValidation {
  double rmspe = 0.0;
  std::size_t predictions = 0;
  std::vector<double> predicted;
  std::vector<double> actual;
};

/// k-fold CV: seeded shuffle, contiguous folds whose sizes differ by at most
/// one, RMSPE pooled over every held-out prediction.
CrossValidation cross_validate(std::span<const ProfileSample> samples, Metric metric, std::size_t k, Rng& rng,
                               bool intercept = false);

/// Boundary equality counts as feasible. A budget entry without a model is
/// treated as unconstrained.
BudgetCheck check_budget(const HwModels& models, const StructuralVector& z, const Budget& budget);

/// Sum over constrained metrics of max(0, pred - budget) / budget.
double budget_excess(const BudgetCheck& check, const Budget& budget);

}  // namespace hwbo
