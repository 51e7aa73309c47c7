#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "hwbo/gp.hpp"
#include "hwbo/hw_models.hpp"
#include "hwbo/rng.hpp"
#include "hwbo/search_space.hpp"

namespace hwbo {

/// Incumbent objective used before any feasible observation exists.
inline constexpr double kWorstError = 1.0;

double normal_pdf(double x);
double normal_cdf(double x);

/// Minimization EI of a Gaussian N(mean, variance) below the threshold
/// `incumbent`. Exact max(incumbent - mean, 0) when variance is 0.
double expected_improvement(double mean, double variance, double incumbent);

enum class AcquisitionKind { EI, HwIeci, HwCwei };

const char* to_string(AcquisitionKind kind);
AcquisitionKind acquisition_kind_from_string(const std::string& s);

struct AcquisitionChoice {
  AcquisitionKind kind = AcquisitionKind::HwIeci;
  std::size_t candidate_count = 10000;
};

struct Incumbent {
  double value = kWorstError;
  DesignPoint x;
};

/// Everything the acquisition needs besides the candidate.
struct AcquisitionContext {
  const SearchSpace* space = nullptr;
  const GaussianProcess* gp = nullptr;
  const HwModels* models = nullptr;
  Budget budget;
  double incumbent = kWorstError;
};

/// Product of the per-metric indicator functions of predicted feasibility.
double constraint_indicator(const AcquisitionContext& ctx, const StructuralVector& z);

/// Product of Phi((budget - pred) / residual_std) over constrained metrics; a
/// zero residual_std degenerates to the indicator.
double constraint_probability(const AcquisitionContext& ctx, const StructuralVector& z);

double ei_at(const DesignPoint& x, const AcquisitionContext& ctx);
double hw_ieci(const DesignPoint& x, const AcquisitionContext& ctx);
double hw_cwei(const DesignPoint& x, const AcquisitionContext& ctx);
double acquisition_value(AcquisitionKind kind, const DesignPoint& x, const AcquisitionContext& ctx);

struct AcquisitionResult {
  DesignPoint x;
  double score = 0.0;
  // True when every sampled candidate scored zero and the budget-excess
  // fallback picked the point.
  bool fallback = false;
  std::size_t batches = 1;
};

/// Maximizes the acquisition over uniformly sampled candidates. Ties go to
/// the lowest candidate index. When all scores are zero, up to 10 fresh
/// batches are drawn before falling back to the candidate with the smallest
/// normalized predicted budget excess.
AcquisitionResult maximize_acquisition(const SearchSpace& space, const AcquisitionChoice& choice,
                                       const AcquisitionContext& ctx, Rng& rng);

}  // namespace hwbo
