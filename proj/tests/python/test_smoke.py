import json
import math

import numpy as np
import pytest

import hwbo


def matern52(a, b, amp2, ls):
    r = np.sqrt(np.sum(((a[:, None, :] - b[None, :, :]) / ls) ** 2, axis=-1))
    s = math.sqrt(5.0) * r
    return amp2 * (1.0 + s + s * s / 3.0) * np.exp(-s)


def test_search_space_round_trip():
    space = hwbo.mnist_like().space
    for x in space.sample(200, seed=1):
        assert space.contains(x)
        back = space.denormalize(space.normalize(x))
        assert np.allclose(back, x, rtol=1e-12, atol=1e-12)
    z = space.extract_structural(space.sample(1, seed=2)[0])
    assert len(z) == len(space.structural_names) == 3


def test_gp_posterior_matches_numpy():
    rng = np.random.default_rng(0)
    X = rng.random((6, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1]
    hyper = hwbo.KernelHyper(1.3, np.array([0.3, 0.5]), 1e-6)
    gp = hwbo.GaussianProcess.fit(X, y, hyper)
    Q = rng.random((5, 2))
    mean, var = gp.posterior(Q)

    noise = gp.diagonal_noise
    K = matern52(X, X, 1.3, np.array([0.3, 0.5])) + noise * np.eye(6)
    k = matern52(Q, X, 1.3, np.array([0.3, 0.5]))
    m0 = y.mean()
    ref_mean = m0 + k @ np.linalg.solve(K, y - m0)
    ref_var = 1.3 - np.einsum("ij,ji->i", k, np.linalg.solve(K, k.T))
    assert np.allclose(mean, ref_mean, atol=1e-8)
    assert np.allclose(var, ref_var, atol=1e-8)


def test_expected_improvement_closed_form():
    from scipy.stats import norm

    mu, s, inc = 0.5, 0.2, 0.4
    z = (inc - mu) / s
    ref = (inc - mu) * norm.cdf(z) + s * norm.pdf(z)
    assert hwbo.expected_improvement(mu, s * s, inc) == pytest.approx(ref, abs=1e-10)
    assert hwbo.normal_cdf(1.0) == pytest.approx(norm.cdf(1.0), abs=1e-12)


def test_linear_fit_and_cv():
    s = hwbo.cifar_like()
    samples = s.profile(200, seed=3)
    power = hwbo.fit_linear(samples, hwbo.Metric.POWER)
    Z = np.array([p.z for p in samples], dtype=float)
    P = np.array([p.power for p in samples])
    w, *_ = np.linalg.lstsq(Z, P, rcond=None)
    assert np.allclose(power.weights, w, rtol=1e-8)
    assert hwbo.cross_validate(samples, hwbo.Metric.POWER, 10, seed=0) < 7.0
    assert power.predict(samples[0].z) == pytest.approx(float(Z[0] @ w), rel=1e-10)


def test_acquisitions_respect_constraints():
    s = hwbo.mnist_like()
    space = s.space
    xs = space.sample(6, seed=4)
    X = np.array([space.normalize(x) for x in xs])
    y = np.array([s.train(x)[1] for x in xs])
    gp = hwbo.GaussianProcess.fit(X, y, hwbo.optimize_hypers(X, y, seed=0))
    models = hwbo.HwModels(hwbo.fit_linear(s.profile(100), hwbo.Metric.POWER))
    budget = hwbo.Budget(power=80.0)
    x, score, fallback = hwbo.maximize_acquisition(
        hwbo.AcquisitionKind.HW_IECI, space, gp, models, budget, float(y.min()), candidates=500, seed=1
    )
    assert not fallback
    assert models.feasible(space.extract_structural(x), budget)
    ei = hwbo.acquisition_value(hwbo.AcquisitionKind.EI, x, space, gp, models, budget, float(y.min()))
    assert score == pytest.approx(ei, rel=1e-12)


def test_run_solver_and_errors():
    s = hwbo.mnist_like()
    cfg = hwbo.SolverConfig()
    cfg.method = hwbo.Method.RAND_WALK
    cfg.max_evals = 8
    cfg.seed = 5
    trials = hwbo.run_solver(s, hwbo.HwModels(), s.budget, cfg)
    assert len(trials) == 8
    best = [b for b in hwbo.best_so_far(trials, s.budget) if b is not None]
    assert all(a >= b for a, b in zip(best, best[1:]))
    with pytest.raises(hwbo.ConfigError):
        hwbo.config({"scenario": "mnist-like", "methods": ["grid"], "seeds": [1]})
    with pytest.raises(hwbo.Error):
        hwbo.Budget(power=-1.0)


def test_experiment_round_trip(tmp_path):
    doc = {
        "scenario": "mnist-like",
        "methods": ["rand", "hw-cwei"],
        "variants": ["aware", "default"],
        "seeds": [1, 2],
        "max_evals": 3,
        "candidate_count": 100,
        "output": str(tmp_path / "out"),
    }
    first = hwbo.run_experiment(doc)
    assert first["computed"] == 8
    assert len(first["summary"]["comparisons"]) == 2
    again = hwbo.run_experiment(json.dumps(doc), resume=True)
    assert again["reused"] == 8 and again["computed"] == 0
    assert again["summary"] == first["summary"] == hwbo.report(tmp_path / "out")
