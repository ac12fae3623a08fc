from __future__ import annotations

import numpy as np
import pytest

from errorfloor.amoeba import nelder_mead


def test_quadratic_minimum():
    target = np.array([1.0, -2.0, 0.5])
    res = nelder_mead(lambda v: float(np.sum((v - target) ** 2)), np.zeros(3), scale=0.5,
                      max_evals=5000, tol=1e-14)
    np.testing.assert_allclose(res.x, target, atol=1e-5)


def test_rosenbrock():
    def rosen(v):
        return float((1 - v[0]) ** 2 + 100 * (v[1] - v[0] ** 2) ** 2)
    res = nelder_mead(rosen, [-1.2, 1.0], scale=0.5, max_evals=20_000, tol=1e-16)
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-3)


def test_deterministic_and_budgeted():
    f = lambda v: float(np.sum(np.abs(v)) + np.sin(5 * v[0]))  # noqa: E731
    a = nelder_mead(f, np.ones(6), max_evals=300)
    b = nelder_mead(f, np.ones(6), max_evals=300)
    assert np.array_equal(a.x, b.x) and a.fun == b.fun
    assert a.n_evals <= 300 + 6


def test_infinite_values_lose():
    f = lambda v: np.inf if v[0] < 0 else float(v @ v)  # noqa: E731
    res = nelder_mead(f, [2.0, 2.0], scale=1.0, max_evals=3000, tol=1e-14)
    assert np.isfinite(res.fun)
    assert res.x[0] >= 0
    assert res.fun < 1e-6


@pytest.mark.parametrize("scale", [0.01, 1.0])
def test_returns_best_vertex(scale):
    res = nelder_mead(lambda v: float(v @ v), [3.0], scale=scale, max_evals=50)
    assert res.fun == pytest.approx(float(res.x @ res.x))
