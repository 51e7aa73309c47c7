#include "hwbo/hw_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>
#include <Eigen/QR>

#include "hwbo/error.hpp"

namespace hwbo {

const char* to_string(Metric m) { return m == Metric::Power ? "power" : "memory"; }

double metric_value(const ProfileSample& s, Metric m) { return m == Metric::Power ? s.power : s.memory; }

void Budget::validate() const {
  if (power && !(*power > 0.0)) throw DomainError("power budget must be > 0");
  if (memory && !(*memory > 0.0)) throw DomainError("memory budget must be > 0");
}

namespace {

Eigen::MatrixXd design_matrix(std::span<const ProfileSample> samples, std::size_t J, bool intercept) {
  const auto cols = static_cast<Eigen::Index>(J + (intercept ? 1 : 0));
  Eigen::MatrixXd A(static_cast<Eigen::Index>(samples.size()), cols);
  for (std::size_t l = 0; l < samples.size(); ++l) {
    if (samples[l].z.size() != J) throw DomainError("fit_linear: inconsistent structural vector lengths");
    for (std::size_t j = 0; j < J; ++j) {
      A(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = static_cast<double>(samples[l].z[j]);
    }
    if (intercept) A(static_cast<Eigen::Index>(l), cols - 1) = 1.0;
  }
  return A;
}

}  // namespace

HwLinearModel fit_linear(std::span<const ProfileSample> samples, Metric metric, bool intercept) {
  if (samples.empty()) throw DomainError("fit_linear: no samples");
  const std::size_t J = samples.front().z.size();
  const Eigen::MatrixXd A = design_matrix(samples, J, intercept);
  if (A.rows() < A.cols()) {
    throw FitError("fit_linear: " + std::to_string(A.rows()) + " samples for " + std::to_string(A.cols()) +
                   " weights");
  }
  Eigen::VectorXd b(A.rows());
  for (std::size_t l = 0; l < samples.size(); ++l) b[static_cast<Eigen::Index>(l)] = metric_value(samples[l], metric);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < A.cols()) {
    // Report the first column that adds nothing to the span of its predecessors.
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> prefix(A.leftCols(c + 1));
      prefix.setThreshold(qr.threshold());
      if (prefix.rank() <= c) {
        const std::string name = c < static_cast<Eigen::Index>(J) ? "z[" + std::to_string(c) + "]" : "intercept";
        throw FitError("fit_linear: design matrix is rank deficient at column " + name);
      }
    }
    throw FitError("fit_linear: design matrix is rank deficient");
  }
  const Eigen::VectorXd w = qr.solve(b);

  HwLinearModel model;
  model.metric = metric;
  model.weights.assign(w.data(), w.data() + J);
  if (intercept) {
    model.has_intercept = true;
    model.intercept = w[static_cast<Eigen::Index>(J)];
  }
  std::vector<double> preds(samples.size()), actual(samples.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < samples.size(); ++l) {
    preds[l] = predict(model, samples[l].z);
    actual[l] = metric_value(samples[l], metric);
    sum += actual[l] - preds[l];
  }
  const double mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (std::size_t l = 0; l < samples.size(); ++l) {
    const double d = actual[l] - preds[l] - mean;
    ss += d * d;
  }
  model.residual_std = std::sqrt(ss / static_cast<double>(samples.size()));
  model.rmspe = rmspe(preds, actual);
  return model;
}

double predict(const HwLinearModel& model, const StructuralVector& z) {
  if (z.size() != model.weights.size()) throw DomainError("predict: structural vector length mismatch");
  double acc = model.has_intercept ? model.intercept : 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) acc += model.weights[j] * static_cast<double>(z[j]);
  return acc;
}

double rmspe(std::span<const double> preds, std::span<const double> actuals) {
  if (preds.size() != actuals.size() || preds.empty()) throw DomainError("rmspe: need equal, nonzero lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (actuals[i] == 0.0) throw DomainError("rmspe: actual value " + std::to_string(i) + " is zero");
    const double rel = (preds[i] - actuals[i]) / actuals[i];
    acc += rel * rel;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(preds.size()));
}

CrossValidation cross_validate(std::span<const ProfileSample> samples, Metric metric, std::size_t k, Rng& rng,
                               bool intercept) {
  const std::size_t L = samples.size();
  if (k < 2) throw DomainError("cross_validate: need k >= 2");
  if (L < k) throw DomainError("cross_validate: fewer samples than folds");
  std::vector<std::size_t> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  CrossValidation cv;
  const std::size_t base = L / k, extra = L % k;
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    const std::size_t end = begin + size;
    std::vector<ProfileSample> train;
    train.reserve(L - size);
    for (std::size_t i = 0; i < L; ++i) {
      if (i < begin || i >= end) train.push_back(samples[order[i]]);
    }
    const HwLinearModel model = fit_linear(train, metric, intercept);
    for (std::size_t i = begin; i < end; ++i) {
      cv.predicted.push_back(predict(model, samples[order[i]].z));
      cv.actual.push_back(metric_value(samples[order[i]], metric));
    }
    begin = end;
  }
  cv.predictions = cv.predicted.size();
  cv.rmspe = rmspe(cv.predicted, cv.actual);
  return cv;
}

BudgetCheck check_budget(const HwModels& models, const StructuralVector& z, const Budget& budget) {
  BudgetCheck check;
  if (models.power) {
    check.power = predict(*models.power, z);
    if (budget.power && *check.power > *budget.power) check.feasible = false;
  }
  if (models.memory) {
    check.memory = predict(*models.memory, z);
    if (budget.memory && *check.memory > *budget.memory) check.feasible = false;
  }
  return check;
}

double budget_excess(const BudgetCheck& check, const Budget& budget) {
  double excess = 0.0;
  if (check.power && budget.power) excess += std::max(0.0, *check.power - *budget.power) / *budget.power;
  if (check.memory && budget.memory) excess += std::max(0.0, *check.memory - *budget.memory) / *budget.memory;
  return excess;
}

}  // namespace hwbo
