#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "hwbo/rng.hpp"

namespace hwbo {

/// Matérn 5/2 ARD kernel hyper-parameters plus observation noise.
struct KernelHyper {
  double amplitude2 = 1.0;
  Eigen::VectorXd lengthscales;
  double noise = 1e-6;

  static KernelHyper unit(Eigen::Index dim);
  void validate() const;
};

/// k(a, b) = amplitude2 * (1 + sqrt5 r + 5 r^2 / 3) * exp(-sqrt5 r), with r the
/// lengthscale-scaled Euclidean distance.
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyper& hyper);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Box constraints used by hyper-parameter selection.
struct HyperBounds {
  double amplitude2_min = 1e-4, amplitude2_max = 1e2;
  double lengthscale_min = 1e-2, lengthscale_max = 1e1;
  double noise_min = 1e-8, noise_max = 1.0;
};

/// Fitted GP regression surrogate with a constant mean. Immutable after fit.
class GaussianProcess {
 public:
  static constexpr double kJitterStart = 1e-10;
  static constexpr double kJitterMax = 1e-4;

  /// Rows of X are normalized inputs. Throws FitError when K + sigma^2 I is
  /// not positive definite even after jitter escalation.
  static GaussianProcess fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelHyper& hyper);

  Posterior posterior(const Eigen::VectorXd& x) const;

  /// Posterior for each row of Q.
  void posterior_batch(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  double log_marginal_likelihood() const;

  const Eigen::MatrixXd& inputs() const { return X_; }
  const Eigen::VectorXd& targets() const { return y_; }
  const KernelHyper& hyper() const { return hyper_; }
  const Eigen::MatrixXd& chol() const { return L_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double mean() const { return mean_; }
  /// Diagonal term actually added to K: max(noise, jitter).
  double diagonal_noise() const { return diag_noise_; }
  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  Eigen::Index dim() const { return X_.cols(); }

 private:
  GaussianProcess() = default;

  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  KernelHyper hyper_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
  double mean_ = 0.0;
  double diag_noise_ = 0.0;
};

struct HyperSearchOptions {
  int starts = 8;
  int local_iterations = 30;
  HyperBounds bounds;
};

/// Start points and their likelihoods, for diagnostics.
struct HyperSearchTrace {
  std::vector<KernelHyper> starts;
  std::vector<double> start_values;
  double best_value = 0.0;
};

/// Multi-start log-space search over kernel hyper-parameters maximizing the
/// log marginal likelihood. Deterministic given the generator state.
KernelHyper optimize_hypers(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Rng& rng,
                            const HyperSearchOptions& options = {}, HyperSearchTrace* trace = nullptr);

}  // namespace hwbo
