#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hwbo/error.hpp"
#include "hwbo/gp.hpp"
#include "oracles/oracles.hpp"

using namespace hwbo;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

oracle::Matrix rows(const Eigen::MatrixXd& X) {
  oracle::Matrix m;
  for (Eigen::Index i = 0; i < X.rows(); ++i) m.push_back(to_std(X.row(i).transpose()));
  return m;
}

KernelHyper hyper(double amp2, std::vector<double> ls, double noise) {
  KernelHyper h;
  h.amplitude2 = amp2;
  h.lengthscales = Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  h.noise = noise;
  return h;
}

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

Dataset random_dataset(Rng& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds{Eigen::MatrixXd(n, d), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) ds.X(i, k) = u(rng);
    ds.y[i] = std::sin(5.0 * ds.X(i, 0)) + 0.3 * u(rng);
  }
  return ds;
}

}  // namespace

TEST_CASE("kernel: zero distance, symmetry, closed form at r = 1") {
  const KernelHyper h = hyper(2.5, {0.3, 0.7}, 0.0);
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd a = vec({u(rng), u(rng)});
    const Eigen::VectorXd b = vec({u(rng), u(rng)});
    REQUIRE(matern52(a, a, h) == 2.5);
    REQUIRE(matern52(a, b, h) == matern52(b, a, h));
  }
  // (1 + sqrt5 + 5/3) exp(-sqrt5) evaluated independently.
  const double expected = oracle::matern52({0.0}, {1.0}, 1.0, {1.0});
  CHECK(matern52(vec({0.0}), vec({1.0}), hyper(1.0, {1.0}, 0.0)) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected == doctest::Approx(0.5239941088318203).epsilon(1e-12));
  CHECK_THROWS_AS(matern52(vec({0.0}), vec({1.0, 2.0}), hyper(1.0, {1.0}, 0.0)), DomainError);
}

TEST_CASE("hyper validation") {
  CHECK_THROWS_AS(GaussianProcess::fit(Eigen::MatrixXd::Zero(1, 1), vec({0.0}), hyper(0.0, {1.0}, 0.0)), DomainError);
  CHECK_THROWS_AS(GaussianProcess::fit(Eigen::MatrixXd::Zero(1, 1), vec({0.0}), hyper(1.0, {-1.0}, 0.0)), DomainError);
  CHECK_THROWS_AS(GaussianProcess::fit(Eigen::MatrixXd::Zero(1, 1), vec({0.0}), hyper(1.0, {1.0}, -1.0)), DomainError);
  CHECK_THROWS_AS(GaussianProcess::fit(Eigen::MatrixXd::Zero(0, 1), Eigen::VectorXd(0), hyper(1.0, {1.0}, 0.0)),
                  DomainError);
  CHECK_THROWS_AS(GaussianProcess::fit(Eigen::MatrixXd::Zero(2, 1), vec({0.0}), hyper(1.0, {1.0}, 0.0)), DomainError);
}

TEST_CASE("n = 1 gives a 1x1 factor sqrt(k(x,x) + noise)") {
  const auto gp = GaussianProcess::fit(Eigen::MatrixXd::Constant(1, 2, 0.4), vec({3.0}), hyper(2.0, {1.0, 1.0}, 0.25));
  REQUIRE(gp.chol().rows() == 1);
  CHECK(gp.chol()(0, 0) == doctest::Approx(std::sqrt(2.25)).epsilon(1e-15));
  CHECK(gp.mean() == 3.0);
  CHECK(gp.alpha()[0] == 0.0);
}

TEST_CASE("duplicated point with zero noise fits through jitter") {
  Eigen::MatrixXd X(2, 1);
  X << 0.3, 0.3;
  const auto gp = GaussianProcess::fit(X, vec({1.0, 1.0}), hyper(1.0, {1.0}, 0.0));
  CHECK(gp.diagonal_noise() >= GaussianProcess::kJitterStart);
  CHECK(gp.diagonal_noise() <= GaussianProcess::kJitterMax);
  const Eigen::MatrixXd A = gp.chol() * gp.chol().transpose();
  CHECK(A(0, 0) == doctest::Approx(1.0 + gp.diagonal_noise()).epsilon(1e-12));
}

TEST_CASE("chol reconstructs K + noise I") {
  Rng rng = make_rng(2);
  const Dataset ds = random_dataset(rng, 12, 3);
  const KernelHyper h = hyper(1.3, {0.2, 0.5, 0.9}, 1e-3);
  const auto gp = GaussianProcess::fit(ds.X, ds.y, h);
  const Eigen::MatrixXd A = gp.chol() * gp.chol().transpose();
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index j = 0; j < 12; ++j) {
      const double k = oracle::matern52(to_std(ds.X.row(i).transpose()), to_std(ds.X.row(j).transpose()), 1.3,
                                        {0.2, 0.5, 0.9}) +
                       (i == j ? 1e-3 : 0.0);
      REQUIRE(std::abs(A(i, j) - k) <= 1e-8 * std::abs(k) + 1e-14);
    }
  }
}

TEST_CASE("3-point alpha matches a dense solve") {
  Eigen::MatrixXd X(3, 2);
  X << 0.1, 0.2, 0.5, 0.9, 0.8, 0.3;
  const Eigen::VectorXd y = vec({0.4, -0.2, 1.1});
  const auto gp = GaussianProcess::fit(X, y, hyper(0.8, {0.4, 0.6}, 0.01));
  const oracle::Matrix Xs = rows(X);
  oracle::Matrix K(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) K[i][j] = oracle::matern52(Xs[i], Xs[j], 0.8, {0.4, 0.6}) + (i == j ? 0.01 : 0.0);
  }
  const oracle::Matrix Ki = oracle::inverse(K);
  const double m = (0.4 - 0.2 + 1.1) / 3.0;
  for (int i = 0; i < 3; ++i) {
    double a = 0.0;
    for (int j = 0; j < 3; ++j) a += Ki[i][j] * (y[j] - m);
    CHECK(gp.alpha()[i] == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("posterior matches the dense oracle on random 5-point sets") {
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const Dataset ds = random_dataset(rng, 5, 2);
    const std::vector<double> ls{0.1 + u(rng), 0.1 + u(rng)};
    const double amp2 = 0.5 + u(rng), noise = 1e-4 + 0.01 * u(rng);
    const auto gp = GaussianProcess::fit(ds.X, ds.y, hyper(amp2, ls, noise));
    const Eigen::VectorXd q = vec({u(rng), u(rng)});
    const Posterior p = gp.posterior(q);
    const auto o = oracle::gp_posterior(rows(ds.X), to_std(ds.y), amp2, ls, noise, to_std(q));
    REQUIRE(std::abs(p.mean - o.mean) <= 1e-8);
    REQUIRE(std::abs(p.variance - std::max(0.0, o.variance)) <= 1e-8);
  }
}

TEST_CASE("batch posterior equals pointwise posterior") {
  Rng rng = make_rng(4);
  const Dataset ds = random_dataset(rng, 15, 3);
  const auto gp = GaussianProcess::fit(ds.X, ds.y, hyper(1.0, {0.3, 0.3, 0.3}, 1e-4));
  Eigen::MatrixXd Q = Eigen::MatrixXd::Random(40, 3).array().abs();
  Eigen::VectorXd mean, var;
  gp.posterior_batch(Q, mean, var);
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    const Posterior p = gp.posterior(Q.row(i).transpose());
    CHECK(mean[i] == doctest::Approx(p.mean).epsilon(1e-12));
    CHECK(var[i] == doctest::Approx(p.variance).epsilon(1e-9).scale(1e-12));
  }
  CHECK_THROWS_AS(gp.posterior(vec({0.5})), DomainError);
}

TEST_CASE("noiseless interpolation and prior reversion") {
  Eigen::MatrixXd X(4, 2);
  X << 0.1, 0.1, 0.4, 0.7, 0.9, 0.2, 0.6, 0.6;
  const Eigen::VectorXd y = vec({1.0, 2.0, -1.0, 0.5});
  const auto gp = GaussianProcess::fit(X, y, hyper(1.0, {0.3, 0.3}, 1e-10));
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Posterior p = gp.posterior(X.row(i).transpose());
    CHECK(std::abs(p.mean - y[i]) <= 1e-6);
    CHECK(p.variance <= 1e-6);
  }
  const Posterior far = gp.posterior(vec({50.0, -50.0}));
  CHECK(far.mean == doctest::Approx(gp.mean()).epsilon(1e-12));
  CHECK(far.variance == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: posterior variance is nonnegative at 10^4 queries") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Dataset ds = random_dataset(rng, 30, 2);
  // Long lengthscales make K nearly singular, stressing cancellation.
  const auto gp = GaussianProcess::fit(ds.X, ds.y, hyper(1.0, {3.0, 3.0}, 0.0));
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXd q = i % 2 == 0 ? vec({u(rng), u(rng)}) : Eigen::VectorXd(ds.X.row(i % 30).transpose());
    REQUIRE(gp.posterior(q).variance >= 0.0);
  }
}

TEST_CASE("property: a noiseless observation at x never increases the variance at x") {
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Index n = 1 + t % 8;
    const Dataset ds = random_dataset(rng, n, 2);
    const KernelHyper h = hyper(1.0, {0.2 + u(rng), 0.2 + u(rng)}, 0.0);
    const auto before = GaussianProcess::fit(ds.X, ds.y, h);
    const Eigen::VectorXd x = vec({u(rng), u(rng)});
    Eigen::MatrixXd X2(n + 1, 2);
    X2 << ds.X, x.transpose();
    Eigen::VectorXd y2(n + 1);
    y2 << ds.y, u(rng);
    const auto after = GaussianProcess::fit(X2, y2, h);
    REQUIRE(after.posterior(x).variance <= before.posterior(x).variance + 1e-12);
  }
}

TEST_CASE("log marginal likelihood") {
  SUBCASE("n = 1 with unit variance and y = m") {
    const auto gp = GaussianProcess::fit(Eigen::MatrixXd::Zero(1, 1), vec({0.7}), hyper(0.75, {1.0}, 0.25));
    CHECK(gp.log_marginal_likelihood() == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  }
  SUBCASE("4-point set against the dense log-det oracle") {
    Rng rng = make_rng(7);
    for (int t = 0; t < 50; ++t) {
      const Dataset ds = random_dataset(rng, 4, 2);
      const auto gp = GaussianProcess::fit(ds.X, ds.y, hyper(1.2, {0.3, 0.8}, 0.02));
      const double o = oracle::gp_log_marginal(rows(ds.X), to_std(ds.y), 1.2, {0.3, 0.8}, 0.02);
      REQUIRE(std::abs(gp.log_marginal_likelihood() - o) <= 1e-8);
    }
  }
}

TEST_CASE("a repeated observation adds exactly its predictive log density") {
  // With the constant mean held fixed, LML(n + 1) - LML(n) must equal
  // log N(y_i; mu(x_i), s^2(x_i) + noise), recomputed from the dense oracle.
  Rng rng = make_rng(8);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int t = 0; t < 200; ++t) {
    Dataset ds = random_dataset(rng, 6, 2);
    const int i = pick(rng);
    // y_i equal to the mean of the others keeps the sample mean unchanged.
    ds.y[i] = (ds.y.sum() - ds.y[i]) / 5.0;
    const KernelHyper h = hyper(1.0, {0.3, 0.3}, 0.05);
    const auto base = GaussianProcess::fit(ds.X, ds.y, h);
    Eigen::MatrixXd X2(7, 2);
    X2 << ds.X, ds.X.row(i);
    Eigen::VectorXd y2(7);
    y2 << ds.y, ds.y[i];
    const auto grown = GaussianProcess::fit(X2, y2, h);
    const auto o = oracle::gp_posterior(rows(ds.X), to_std(ds.y), 1.0, {0.3, 0.3}, 0.05, to_std(ds.X.row(i).transpose()));
    const double v = o.variance + 0.05;
    const double predictive = -0.5 * std::log(2.0 * oracle::kPi * v) - 0.5 * (ds.y[i] - o.mean) * (ds.y[i] - o.mean) / v;
    REQUIRE(std::abs(grown.log_marginal_likelihood() - base.log_marginal_likelihood() - predictive) <= 1e-8);
  }
}

TEST_CASE("optimize_hypers: determinism and best-of-starts") {
  Rng data_rng = make_rng(9);
  const Dataset ds = random_dataset(data_rng, 15, 2);
  Rng a = make_rng(10), b = make_rng(10);
  HyperSearchTrace trace;
  const KernelHyper ha = optimize_hypers(ds.X, ds.y, a, {}, &trace);
  const KernelHyper hb = optimize_hypers(ds.X, ds.y, b);
  CHECK(ha.amplitude2 == hb.amplitude2);
  CHECK(ha.lengthscales == hb.lengthscales);
  CHECK(ha.noise == hb.noise);
  REQUIRE(trace.starts.size() == 8);
  const double got = GaussianProcess::fit(ds.X, ds.y, ha).log_marginal_likelihood();
  for (double v : trace.start_values) CHECK(got >= v - 1e-9);
  CHECK_THROWS_AS(optimize_hypers(ds.X.topRows(1), ds.y.head(1), a), DomainError);
}

TEST_CASE("optimize_hypers: constant targets shrink the amplitude") {
  Rng rng = make_rng(11);
  const Dataset ds = random_dataset(rng, 10, 2);
  const KernelHyper h = optimize_hypers(ds.X, Eigen::VectorXd::Constant(10, 0.3), rng);
  CHECK(h.amplitude2 <= 10.0 * HyperBounds{}.amplitude2_min);
}

TEST_CASE("optimize_hypers recovers at least the generating likelihood") {
  Rng rng = make_rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  int ok = 0;
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index n = 25;
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) X.row(i) << u(rng), u(rng);
    const std::vector<double> ls{0.3, 0.5};
    const double amp2 = 1.5, noise = 1e-3;
    const oracle::Matrix Xs = rows(X);
    oracle::Matrix K(n, std::vector<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) K[i][j] = oracle::matern52(Xs[i], Xs[j], amp2, ls) + (i == j ? noise : 0.0);
    }
    const oracle::Matrix L = oracle::cholesky(K);
    std::vector<double> e(n), y(n, 0.0);
    for (auto& v : e) v = g(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) y[i] += L[i][j] * e[j];
    }
    const Eigen::VectorXd yv = Eigen::Map<Eigen::VectorXd>(y.data(), n);
    const KernelHyper h = optimize_hypers(X, yv, rng);
    const double found = oracle::gp_log_marginal(Xs, y, h.amplitude2, to_std(h.lengthscales), std::max(h.noise, 1e-10));
    const double generating = oracle::gp_log_marginal(Xs, y, amp2, ls, noise);
    ok += found >= generating - 1e-6 ? 1 : 0;
    CHECK(found >= generating - 1e-6);
  }
  CHECK(ok == 5);
}
