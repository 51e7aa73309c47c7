#include "hwbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "hwbo/error.hpp"

namespace hwbo {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double expected_improvement(double mean, double variance, double incumbent) {
  if (!(variance >= 0.0)) throw DomainError("expected_improvement: variance must be >= 0");
  const double s = std::sqrt(variance);
  if (s == 0.0) return std::max(incumbent - mean, 0.0);
  const double gamma = (incumbent - mean) / s;
  if (gamma > 0.0) {
    // s * (gamma * Phi + phi) rewritten around the upper tail Q = 1 - Phi so
    // the result never drops below the deterministic improvement.
    const double tail = 0.5 * std::erfc(gamma / std::numbers::sqrt2);
    return (incumbent - mean) + s * std::max(0.0, normal_pdf(gamma) - gamma * tail);
  }
  return std::max(0.0, (incumbent - mean) * normal_cdf(gamma) + s * normal_pdf(gamma));
}

const char* to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::EI: return "ei";
    case AcquisitionKind::HwIeci: return "hw-ieci";
    case AcquisitionKind::HwCwei: return "hw-cwei";
  }
  return "?";
}

AcquisitionKind acquisition_kind_from_string(const std::string& s) {
  if (s == "ei") return AcquisitionKind::EI;
  if (s == "hw-ieci") return AcquisitionKind::HwIeci;
  if (s == "hw-cwei") return AcquisitionKind::HwCwei;
  throw DomainError("unknown acquisition '" + s + "'");
}

double constraint_indicator(const AcquisitionContext& ctx, const StructuralVector& z) {
  if (ctx.models == nullptr) return 1.0;
  return check_budget(*ctx.models, z, ctx.budget).feasible ? 1.0 : 0.0;
}

namespace {

double satisfaction_probability(const std::optional<HwLinearModel>& model, const std::optional<double>& budget,
                                const StructuralVector& z) {
  if (!model || !budget) return 1.0;
  const double pred = predict(*model, z);
  if (model->residual_std <= 0.0) return pred <= *budget ? 1.0 : 0.0;
  return normal_cdf((*budget - pred) / model->residual_std);
}

double constraint_factor(AcquisitionKind kind, const AcquisitionContext& ctx, const StructuralVector& z) {
  switch (kind) {
    case AcquisitionKind::EI: return 1.0;
    case AcquisitionKind::HwIeci: return constraint_indicator(ctx, z);
    case AcquisitionKind::HwCwei: return constraint_probability(ctx, z);
  }
  return 1.0;
}

const GaussianProcess& require_gp(const AcquisitionContext& ctx) {
  if (ctx.gp == nullptr || ctx.space == nullptr) throw DomainError("acquisition context needs a gp and a space");
  return *ctx.gp;
}

}  // namespace

double constraint_probability(const AcquisitionContext& ctx, const StructuralVector& z) {
  if (ctx.models == nullptr) return 1.0;
  return satisfaction_probability(ctx.models->power, ctx.budget.power, z) *
         satisfaction_probability(ctx.models->memory, ctx.budget.memory, z);
}

double ei_at(const DesignPoint& x, const AcquisitionContext& ctx) {
  const auto post = require_gp(ctx).posterior(normalize(*ctx.space, x));
  return expected_improvement(post.mean, post.variance, ctx.incumbent);
}

double hw_ieci(const DesignPoint& x, const AcquisitionContext& ctx) {
  return acquisition_value(AcquisitionKind::HwIeci, x, ctx);
}

double hw_cwei(const DesignPoint& x, const AcquisitionContext& ctx) {
  return acquisition_value(AcquisitionKind::HwCwei, x, ctx);
}

double acquisition_value(AcquisitionKind kind, const DesignPoint& x, const AcquisitionContext& ctx) {
  require_gp(ctx);
  const double factor = constraint_factor(kind, ctx, extract_structural(*ctx.space, x));
  if (factor == 0.0) return 0.0;
  return ei_at(x, ctx) * factor;
}

AcquisitionResult maximize_acquisition(const SearchSpace& space, const AcquisitionChoice& choice,
                                       const AcquisitionContext& ctx, Rng& rng) {
  const GaussianProcess& gp = require_gp(ctx);
  if (choice.candidate_count < 1) throw DomainError("maximize_acquisition: candidate_count must be >= 1");
  constexpr std::size_t kFreshBatches = 10;
  const std::size_t m = choice.candidate_count;

  std::vector<DesignPoint> seen;
  AcquisitionResult result;
  for (std::size_t batch = 0; batch <= kFreshBatches; ++batch) {
    std::vector<DesignPoint> cands;
    cands.reserve(m);
    Eigen::MatrixXd Q(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(space.size()));
    for (std::size_t i = 0; i < m; ++i) {
      cands.push_back(sample_uniform(space, rng));
      Q.row(static_cast<Eigen::Index>(i)) = normalize(space, cands.back()).transpose();
    }
    Eigen::VectorXd mean, var;
    gp.posterior_batch(Q, mean, var);

    double best = 0.0;
    std::size_t best_index = m;
    for (std::size_t i = 0; i < m; ++i) {
      const double factor = constraint_factor(choice.kind, ctx, extract_structural(space, cands[i]));
      if (factor == 0.0) continue;
      const double score =
          expected_improvement(mean[static_cast<Eigen::Index>(i)], var[static_cast<Eigen::Index>(i)], ctx.incumbent) *
          factor;
      if (score > best) {
        best = score;
        best_index = i;
      }
    }
    result.batches = batch + 1;
    if (best_index < m) {
      result.x = cands[best_index];
      result.score = best;
      return result;
    }
    seen.insert(seen.end(), std::make_move_iterator(cands.begin()), std::make_move_iterator(cands.end()));
  }

  // Every candidate scored zero: pick the least budget-violating one.
  double least = std::numeric_limits<double>::infinity();
  const DesignPoint* pick = &seen.front();
  for (const auto& c : seen) {
    const double excess =
        ctx.models == nullptr ? 0.0 : budget_excess(check_budget(*ctx.models, extract_structural(space, c), ctx.budget), ctx.budget);
    if (excess < least) {
      least = excess;
      pick = &c;
    }
  }
  result.x = *pick;
  result.score = 0.0;
  result.fallback = true;
  return result;
}

}  // namespace hwbo
