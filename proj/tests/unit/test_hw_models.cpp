#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hwbo/error.hpp"
#include "hwbo/hw_models.hpp"
#include "oracles/oracles.hpp"

using namespace hwbo;

namespace {

StructuralVector zv(std::vector<std::int64_t> v) { return StructuralVector{std::move(v)}; }

// Samples with power = w . z * (1 + noise * N(0,1)) and memory = power / 100.
std::vector<ProfileSample> synth(Rng& rng, std::size_t L, const std::vector<double>& w, double noise) {
  std::uniform_int_distribution<std::int64_t> zi(1, 100);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ProfileSample> out;
  for (std::size_t l = 0; l < L; ++l) {
    ProfileSample s;
    double p = 0.0;
    for (double wj : w) {
      s.z.values.push_back(zi(rng));
      p += wj * static_cast<double>(s.z.values.back());
    }
    s.power = p * (1.0 + noise * g(rng));
    s.memory = s.power / 100.0;
    out.push_back(s);
  }
  return out;
}

HwLinearModel model(std::vector<double> w, double residual_std = 0.0) {
  HwLinearModel m;
  m.weights = std::move(w);
  m.residual_std = residual_std;
  return m;
}

}  // namespace

TEST_CASE("exact linear data recovers the weights") {
  Rng rng = make_rng(1);
  const auto samples = synth(rng, 30, {0.5, 2.0}, 0.0);
  const HwLinearModel m = fit_linear(samples, Metric::Power);
  REQUIRE(m.weights.size() == 2);
  CHECK(std::abs(m.weights[0] - 0.5) <= 1e-10);
  CHECK(std::abs(m.weights[1] - 2.0) <= 1e-10);
  CHECK(m.residual_std <= 1e-9);
  CHECK(m.rmspe <= 1e-8);
}

TEST_CASE("degenerate designs are rejected") {
  std::vector<ProfileSample> zeros(5, ProfileSample{zv({0, 0}), 1.0, 1.0});
  CHECK_THROWS_AS(fit_linear(zeros, Metric::Power), FitError);
  std::vector<ProfileSample> collinear;
  for (int i = 1; i <= 6; ++i) collinear.push_back({zv({i, 2 * i}), 1.0 * i, 1.0});
  CHECK_THROWS_AS(fit_linear(collinear, Metric::Power), FitError);
  CHECK_THROWS_AS(fit_linear(std::vector<ProfileSample>{}, Metric::Power), DomainError);
  std::vector<ProfileSample> too_few{{zv({1, 2}), 1.0, 1.0}};
  CHECK_THROWS_AS(fit_linear(too_few, Metric::Power), FitError);
}

TEST_CASE("3% noise with L = 100 stays within 5% of the true weights") {
  Rng rng = make_rng(2);
  const std::vector<double> w{0.3, 1.2, 0.05};
  const auto samples = synth(rng, 100, w, 0.03);
  const HwLinearModel m = fit_linear(samples, Metric::Power);
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(std::abs(m.weights[j] - w[j]) <= 0.05 * w[j]);
  // Same weights as the normal-equations oracle.
  oracle::Matrix A;
  std::vector<double> b;
  for (const auto& s : samples) {
    A.push_back({static_cast<double>(s.z[0]), static_cast<double>(s.z[1]), static_cast<double>(s.z[2])});
    b.push_back(s.power);
  }
  const auto ref = oracle::least_squares(A, b);
  for (std::size_t j = 0; j < w.size(); ++j) CHECK(m.weights[j] == doctest::Approx(ref[j]).epsilon(1e-9));
}

TEST_CASE("intercept variant") {
  Rng rng = make_rng(3);
  auto samples = synth(rng, 40, {1.0, 0.5}, 0.0);
  for (auto& s : samples) s.power += 7.0;
  const HwLinearModel m = fit_linear(samples, Metric::Power, true);
  CHECK(m.has_intercept);
  CHECK(m.intercept == doctest::Approx(7.0).epsilon(1e-9));
  CHECK(predict(m, zv({2, 2})) == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("predict") {
  CHECK(predict(model({0.3, 0.7, 1.1}), zv({0, 0, 0})) == 0.0);
  CHECK(predict(model({1, 1, 1}), zv({2, 3, 4})) == 9.0);
  CHECK_THROWS_AS(predict(model({1, 1}), zv({1})), DomainError);
  Rng rng = make_rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<std::int64_t> zi(0, 500);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> w(6);
    StructuralVector z;
    double acc = 0.0;
    for (auto& wj : w) {
      wj = u(rng);
      z.values.push_back(zi(rng));
      acc += wj * static_cast<double>(z.values.back());
    }
    REQUIRE(std::abs(predict(model(w), z) - acc) <= 1e-12 * std::max(1.0, std::abs(acc)));
  }
}

TEST_CASE("property: predict is linear in z") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<std::int64_t> zi(0, 200), ci(-3, 3);
  for (int t = 0; t < 2000; ++t) {
    const HwLinearModel m = model({u(rng), u(rng), u(rng), u(rng)});
    StructuralVector a, b, c;
    const std::int64_t ka = ci(rng), kb = ci(rng);
    for (int j = 0; j < 4; ++j) {
      a.values.push_back(zi(rng));
      b.values.push_back(zi(rng));
      c.values.push_back(ka * a.values.back() + kb * b.values.back());
    }
    const double lhs = predict(m, c);
    const double rhs = static_cast<double>(ka) * predict(m, a) + static_cast<double>(kb) * predict(m, b);
    REQUIRE(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("property: refitting noiseless predictions returns the same weights") {
  Rng rng = make_rng(6);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const std::vector<double> w{u(rng), u(rng), u(rng)};
    auto samples = synth(rng, 12, w, 0.05);
    const HwLinearModel first = fit_linear(samples, Metric::Power);
    for (auto& s : samples) s.power = predict(first, s.z);
    const HwLinearModel second = fit_linear(samples, Metric::Power);
    for (std::size_t j = 0; j < 3; ++j) {
      REQUIRE(std::abs(second.weights[j] - first.weights[j]) <= 1e-9 * std::max(1.0, std::abs(first.weights[j])));
    }
  }
}

TEST_CASE("rmspe") {
  const std::vector<double> a{100, 200};
  CHECK(rmspe(a, a) == 0.0);
  CHECK(rmspe(std::vector<double>{110, 180}, a) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(rmspe(std::vector<double>{1, 2}, std::vector<double>{1, 0}), DomainError);
  CHECK_THROWS_AS(rmspe(std::vector<double>{1}, std::vector<double>{1, 2}), DomainError);
  CHECK_THROWS_AS(rmspe(std::vector<double>{}, std::vector<double>{}), DomainError);

  // Spreadsheet-style oracle: percentage errors, squared, averaged, rooted.
  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> u(1.0, 50.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(50), q(50);
    double sum = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
      p[i] = u(rng);
      q[i] = u(rng);
      const double pct = 100.0 * (p[i] - q[i]) / q[i];
      sum += pct * pct;
    }
    REQUIRE(std::abs(rmspe(p, q) - std::sqrt(sum / 50.0)) <= 1e-9);
  }
}

TEST_CASE("cross validation") {
  Rng rng = make_rng(8);
  SUBCASE("noiseless data") {
    const auto samples = synth(rng, 60, {0.4, 1.5, 0.2}, 0.0);
    Rng cv_rng = make_rng(1);
    const CrossValidation cv = cross_validate(samples, Metric::Power, 10, cv_rng);
    CHECK(cv.rmspe <= 1e-8);
    CHECK(cv.predictions == 60);
  }
  SUBCASE("5% noise with L = 200 stays under 7%") {
    const auto samples = synth(rng, 200, {0.4, 1.5, 0.2}, 0.05);
    Rng cv_rng = make_rng(1);
    CHECK(cross_validate(samples, Metric::Power, 10, cv_rng).rmspe < 7.0);
  }
  SUBCASE("k = L is leave-one-out") {
    const auto samples = synth(rng, 25, {0.4, 1.5}, 0.02);
    Rng cv_rng = make_rng(1);
    const CrossValidation cv = cross_validate(samples, Metric::Memory, 25, cv_rng);
    CHECK(cv.predictions == 25);
    // Independent LOO recomputation, order-free.
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::vector<ProfileSample> train;
      for (std::size_t j = 0; j < samples.size(); ++j) {
        if (j != i) train.push_back(samples[j]);
      }
      const double rel = (predict(fit_linear(train, Metric::Memory), samples[i].z) - samples[i].memory) /
                         samples[i].memory;
      acc += rel * rel;
    }
    CHECK(cv.rmspe == doctest::Approx(100.0 * std::sqrt(acc / 25.0)).epsilon(1e-9));
  }
  SUBCASE("argument checks") {
    const auto samples = synth(rng, 5, {1.0}, 0.0);
    Rng cv_rng = make_rng(1);
    CHECK_THROWS_AS(cross_validate(samples, Metric::Power, 6, cv_rng), DomainError);
    CHECK_THROWS_AS(cross_validate(samples, Metric::Power, 1, cv_rng), DomainError);
  }
}

TEST_CASE("property: CV RMSPE is nonnegative and zero only for exact predictions") {
  Rng rng = make_rng(9);
  std::uniform_real_distribution<double> u(0.0, 0.1);
  for (int t = 0; t < 1000; ++t) {
    const double noise = t % 4 == 0 ? 0.0 : u(rng);
    const auto samples = synth(rng, 20, {0.7, 0.2}, noise);
    Rng cv_rng = make_rng(static_cast<std::uint64_t>(t));
    const CrossValidation cv = cross_validate(samples, Metric::Power, 5, cv_rng);
    REQUIRE(cv.rmspe >= 0.0);
    bool exact = true;
    for (std::size_t i = 0; i < cv.predictions; ++i) exact = exact && cv.predicted[i] == cv.actual[i];
    if (exact) REQUIRE(cv.rmspe == 0.0);
    if (cv.rmspe == 0.0) REQUIRE(exact);
  }
}

TEST_CASE("check_budget") {
  HwModels models;
  models.power = model({1.0});
  models.memory = model({0.01});
  const Budget budget{90.0, 1.0};
  CHECK(check_budget(models, zv({90}), budget).feasible);
  CHECK_FALSE(check_budget(models, zv({91}), budget).feasible);
  CHECK(*check_budget(models, zv({91}), budget).power == 91.0);
  // Memory alone can block.
  CHECK_FALSE(check_budget(models, zv({80}), Budget{90.0, 0.5}).feasible);
  // No memory budget: memory never blocks, however large.
  CHECK(check_budget(models, zv({90}), Budget{90.0, std::nullopt}).feasible);
  CHECK_FALSE(check_budget(models, zv({91}), Budget{90.0, std::nullopt}).feasible);
  // Budget without a model is unconstrained.
  HwModels power_only;
  power_only.power = model({1.0});
  CHECK(check_budget(power_only, zv({50}), Budget{90.0, 0.001}).feasible);
  CHECK(budget_excess(check_budget(models, zv({99}), budget), budget) == doctest::Approx(0.1 + 0.0).epsilon(1e-12));
  CHECK_THROWS_AS((Budget{-1.0, std::nullopt}.validate()), DomainError);
}

TEST_CASE("property: raising a budget never flips feasible to infeasible") {
  Rng rng = make_rng(10);
  std::uniform_real_distribution<double> u(0.0, 2.0), bud(10.0, 200.0), up(0.0, 50.0);
  std::uniform_int_distribution<std::int64_t> zi(0, 60);
  for (int t = 0; t < 10000; ++t) {
    HwModels models;
    models.power = model({u(rng), u(rng)});
    models.memory = model({0.01 * u(rng), 0.01 * u(rng)});
    const StructuralVector z = zv({zi(rng), zi(rng)});
    const Budget b{bud(rng), 0.01 * bud(rng)};
    const Budget raised{*b.power + up(rng), *b.memory + 0.01 * up(rng)};
    if (check_budget(models, z, b).feasible) REQUIRE(check_budget(models, z, raised).feasible);
  }
}
