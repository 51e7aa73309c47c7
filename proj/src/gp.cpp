#include "hwbo/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>

#include "hwbo/error.hpp"

namespace hwbo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969641;

double matern_from_r(double amplitude2, double r) {
  const double s = kSqrt5 * r;
  return amplitude2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

double scaled_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& ls) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double t = (a[d] - b[d]) / ls[d];
    r2 += t * t;
  }
  return std::sqrt(r2);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const KernelHyper& hyper) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = hyper.amplitude2;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = scaled_distance(X.row(i).transpose(), X.row(j).transpose(), hyper.lengthscales);
      K(i, j) = K(j, i) = matern_from_r(hyper.amplitude2, r);
    }
  }
  return K;
}

}  // namespace

KernelHyper KernelHyper::unit(Eigen::Index dim) {
  KernelHyper h;
  h.amplitude2 = 1.0;
  h.lengthscales = Eigen::VectorXd::Ones(dim);
  h.noise = 1e-6;
  return h;
}

void KernelHyper::validate() const {
  if (!(amplitude2 > 0.0)) throw DomainError("kernel amplitude2 must be > 0");
  if (!(noise >= 0.0)) throw DomainError("kernel noise must be >= 0");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0)) throw DomainError("kernel lengthscales must be > 0");
  }
}

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelHyper& hyper) {
  if (a.size() != b.size() || a.size() != hyper.lengthscales.size()) {
    throw DomainError("matern52: dimension mismatch");
  }
  return matern_from_r(hyper.amplitude2, scaled_distance(a, b, hyper.lengthscales));
}

GaussianProcess GaussianProcess::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     const KernelHyper& hyper) {
  if (X.rows() < 1) throw DomainError("gp fit: need at least one observation");
  if (X.rows() != y.size()) throw DomainError("gp fit: X and y sizes differ");
  if (X.cols() != hyper.lengthscales.size()) throw DomainError("gp fit: lengthscale count mismatch");
  hyper.validate();

  GaussianProcess gp;
  gp.X_ = X;
  gp.y_ = y;
  gp.hyper_ = hyper;
  gp.mean_ = y.mean();

  const Eigen::MatrixXd K = kernel_matrix(X, hyper);
  const Eigen::Index n = X.rows();
  for (double jitter = kJitterStart; jitter <= kJitterMax * 1.000001; jitter *= 10.0) {
    const double diag = std::max(hyper.noise, jitter);
    Eigen::MatrixXd A = K;
    A.diagonal().array() += diag;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd L = llt.matrixL();
    // Reject factorizations whose pivots collapsed to roundoff.
    if (L.diagonal().minCoeff() <= std::sqrt(diag) * 1e-3) continue;
    gp.L_ = std::move(L);
    gp.diag_noise_ = diag;
    gp.alpha_ = llt.solve(y - Eigen::VectorXd::Constant(n, gp.mean_));
    return gp;
  }
  throw FitError("gp fit: covariance not positive definite after jitter " + std::to_string(kJitterMax));
}

Posterior GaussianProcess::posterior(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw DomainError("gp posterior: dimension mismatch");
  const Eigen::Index n = X_.rows();
  Eigen::VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar[i] = matern52(X_.row(i).transpose(), x, hyper_);
  Posterior p;
  p.mean = mean_ + kstar.dot(alpha_);
  const Eigen::VectorXd v = L_.triangularView<Eigen::Lower>().solve(kstar);
  p.variance = std::max(0.0, hyper_.amplitude2 - v.squaredNorm());
  return p;
}

void GaussianProcess::posterior_batch(const Eigen::MatrixXd& Q, Eigen::VectorXd& mean,
                                      Eigen::VectorXd& variance) const {
  if (Q.cols() != dim()) throw DomainError("gp posterior: dimension mismatch");
  const Eigen::Index n = X_.rows();
  const Eigen::Index m = Q.rows();
  Eigen::MatrixXd Kt(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double r2 = 0.0;
      for (Eigen::Index d = 0; d < Q.cols(); ++d) {
        const double t = (X_(i, d) - Q(j, d)) / hyper_.lengthscales[d];
        r2 += t * t;
      }
      Kt(i, j) = matern_from_r(hyper_.amplitude2, std::sqrt(r2));
    }
  }
  mean = (Kt.transpose() * alpha_).array() + mean_;
  L_.triangularView<Eigen::Lower>().solveInPlace(Kt);
  variance = (hyper_.amplitude2 - Kt.colwise().squaredNorm().transpose().array()).max(0.0);
}

double GaussianProcess::log_marginal_likelihood() const {
  const Eigen::VectorXd r = y_ - Eigen::VectorXd::Constant(y_.size(), mean_);
  const double n = static_cast<double>(y_.size());
  return -0.5 * r.dot(alpha_) - L_.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

namespace {

// Log-space parameter vector: [log amplitude2, log lengthscales..., log noise].
struct LogBox {
  Eigen::VectorXd lo, hi;
};

LogBox make_box(Eigen::Index d, const HyperBounds& b) {
  LogBox box{Eigen::VectorXd(d + 2), Eigen::VectorXd(d + 2)};
  box.lo[0] = std::log(b.amplitude2_min);
  box.hi[0] = std::log(b.amplitude2_max);
  box.lo.segment(1, d).setConstant(std::log(b.lengthscale_min));
  box.hi.segment(1, d).setConstant(std::log(b.lengthscale_max));
  box.lo[d + 1] = std::log(b.noise_min);
  box.hi[d + 1] = std::log(b.noise_max);
  return box;
}

KernelHyper from_log(const Eigen::VectorXd& theta, Eigen::Index d) {
  KernelHyper h;
  h.amplitude2 = std::exp(theta[0]);
  h.lengthscales = theta.segment(1, d).array().exp();
  h.noise = std::exp(theta[d + 1]);
  return h;
}

// Likelihood and gradient evaluator with pairwise squared differences cached.
class LikelihoodSurface {
 public:
  LikelihoodSurface(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) : n_(X.rows()), d_(X.cols()) {
    r_ = y.array() - y.mean();
    diff2_.resize(static_cast<std::size_t>(d_));
    for (Eigen::Index k = 0; k < d_; ++k) {
      Eigen::MatrixXd D(n_, n_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        for (Eigen::Index j = 0; j < n_; ++j) {
          const double t = X(i, k) - X(j, k);
          D(i, j) = t * t;
        }
      }
      diff2_[static_cast<std::size_t>(k)] = std::move(D);
    }
  }

  // Returns -inf when the factorization fails. Fills grad when non-null.
  double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const double a2 = std::exp(theta[0]);
    const double noise = std::exp(theta[d_ + 1]);
    const double diag = std::max(noise, GaussianProcess::kJitterStart);
    Eigen::MatrixXd R2 = Eigen::MatrixXd::Zero(n_, n_);
    Eigen::VectorXd inv_l2(d_);
    for (Eigen::Index k = 0; k < d_; ++k) {
      inv_l2[k] = std::exp(-2.0 * theta[1 + k]);
      R2.noalias() += inv_l2[k] * diff2_[static_cast<std::size_t>(k)];
    }
    Eigen::MatrixXd K(n_, n_);
    Eigen::MatrixXd G(n_, n_);  // (5/3) a2 (1 + sqrt5 r) exp(-sqrt5 r)
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index i = j; i < n_; ++i) {
        const double r = std::sqrt(R2(i, j));
        const double s = kSqrt5 * r;
        const double e = std::exp(-s);
        K(i, j) = K(j, i) = a2 * (1.0 + s + s * s / 3.0) * e;
        G(i, j) = G(j, i) = (5.0 / 3.0) * a2 * (1.0 + s) * e;
      }
    }
    Eigen::MatrixXd A = K;
    A.diagonal().array() += diag;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd alpha = llt.solve(r_);
    const double logdet_half = Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    const double value = -0.5 * r_.dot(alpha) - logdet_half -
                         0.5 * static_cast<double>(n_) * std::log(2.0 * std::numbers::pi);
    if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();
    if (grad != nullptr) {
      // dLML/dtheta = 0.5 tr((alpha alpha^T - A^-1) dA/dtheta)
      Eigen::MatrixXd W = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n_, n_));
      grad->resize(d_ + 2);
      (*grad)[0] = 0.5 * (W.array() * K.array()).sum();
      for (Eigen::Index k = 0; k < d_; ++k) {
        (*grad)[1 + k] =
            0.5 * inv_l2[k] * (W.array() * G.array() * diff2_[static_cast<std::size_t>(k)].array()).sum();
      }
      (*grad)[d_ + 1] = noise >= GaussianProcess::kJitterStart ? 0.5 * noise * W.trace() : 0.0;
    }
    return value;
  }

 private:
  Eigen::Index n_, d_;
  Eigen::VectorXd r_;
  std::vector<Eigen::MatrixXd> diff2_;
};

}  // namespace

KernelHyper optimize_hypers(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Rng& rng,
                            const HyperSearchOptions& options, HyperSearchTrace* trace) {
  if (X.rows() < 2) throw DomainError("optimize_hypers: need at least two observations");
  if (X.rows() != y.size()) throw DomainError("optimize_hypers: X and y sizes differ");
  const Eigen::Index d = X.cols();
  const Eigen::Index p = d + 2;
  const LogBox box = make_box(d, options.bounds);
  const LikelihoodSurface surface(X, y);

  // Starts are drawn up front so the stream consumption is fixed.
  std::vector<Eigen::VectorXd> starts;
  {
    Eigen::VectorXd center(p);
    const double var = std::max((y.array() - y.mean()).square().mean(), options.bounds.amplitude2_min);
    center[0] = std::clamp(std::log(var), box.lo[0], box.hi[0]);
    center.segment(1, d).setConstant(std::log(0.5));
    center[d + 1] = std::clamp(std::log(1e-3 * var), box.lo[d + 1], box.hi[d + 1]);
    starts.push_back(center);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 1; s < options.starts; ++s) {
      Eigen::VectorXd t(p);
      for (Eigen::Index i = 0; i < p; ++i) t[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
      starts.push_back(t);
    }
  }

  double best_value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  Eigen::VectorXd grad, prev_grad;
  for (const auto& start : starts) {
    Eigen::VectorXd theta = start;
    double value = surface.evaluate(theta, &grad);
    if (trace != nullptr) {
      trace->starts.push_back(from_log(start, d));
      trace->start_values.push_back(value);
    }
    if (!std::isfinite(value)) continue;
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
    // Resilient sign-based ascent with per-coordinate step sizes.
    Eigen::VectorXd step = Eigen::VectorXd::Constant(p, 0.5);
    prev_grad = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < options.local_iterations; ++it) {
      Eigen::VectorXd cand = theta;
      for (Eigen::Index i = 0; i < p; ++i) {
        const double prod = grad[i] * prev_grad[i];
        if (prod > 0) step[i] = std::min(step[i] * 1.2, 2.0);
        else if (prod < 0) step[i] = std::max(step[i] * 0.5, 1e-4);
        if (grad[i] > 0) cand[i] += step[i];
        else if (grad[i] < 0) cand[i] -= step[i];
        cand[i] = std::clamp(cand[i], box.lo[i], box.hi[i]);
      }
      Eigen::VectorXd cand_grad;
      const double cand_value = surface.evaluate(cand, &cand_grad);
      if (!std::isfinite(cand_value) || cand_value < value) {
        step *= 0.5;
        prev_grad.setZero();
        continue;
      }
      prev_grad = grad;
      theta = cand;
      value = cand_value;
      grad = cand_grad;
      if (value > best_value) {
        best_value = value;
        best_theta = theta;
      }
    }
  }

  if (trace != nullptr) trace->best_value = best_value;
  if (best_theta.size() == 0) {
    KernelHyper fallback = KernelHyper::unit(d);
    fallback.noise = GaussianProcess::kJitterMax;
    return fallback;
  }
  return from_log(best_theta, d);
}

}  // namespace hwbo
