"""Downhill simplex (Nelder-Mead) minimiser."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np


class SimplexResult(NamedTuple):
    x: np.ndarray
    fun: float
    n_evals: int


REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


def nelder_mead(objective: Callable[[np.ndarray], float], start, scale: float = 0.1,
                max_evals: int = 10_000, tol: float = 1e-8) -> SimplexResult:
    """Minimise ``objective`` from the simplex ``start + scale * e_j``.

    Stops when the spread of objective values over the simplex drops below
    ``tol`` or after ``max_evals`` evaluations (a final shrink may overrun by
    at most ``len(start)``). Infinite values are allowed and simply lose every
    comparison. The procedure is fully deterministic.
    """
    x0 = np.array(start, dtype=np.float64)
    d = x0.size
    simplex = np.tile(x0, (d + 1, 1))
    simplex[1:] += scale * np.eye(d)
    values = np.array([objective(v) for v in simplex], dtype=np.float64)
    n_evals = d + 1
    total = simplex.sum(axis=0)

    def replace(i, point, value):
        nonlocal total
        total += point - simplex[i]
        simplex[i] = point
        values[i] = value

    while n_evals < max_evals:
        order = np.argsort(values, kind="stable")
        best, worst = order[0], order[-1]
        second = order[-2]
        if values[worst] - values[best] < tol:
            break
        centroid = (total - simplex[worst]) / d
        step = centroid - simplex[worst]
        xr = centroid + REFLECT * step
        fr = objective(xr)
        n_evals += 1
        if fr < values[best]:
            xe = centroid + EXPAND * step
            fe = objective(xe)
            n_evals += 1
            if fe < fr:
                replace(worst, xe, fe)
            else:
                replace(worst, xr, fr)
        elif fr < values[second]:
            replace(worst, xr, fr)
        else:
            if fr < values[worst]:
                xc = centroid + CONTRACT * (xr - centroid)
                fc = objective(xc)
                n_evals += 1
                accept = fc <= fr
            else:
                xc = centroid + CONTRACT * (simplex[worst] - centroid)
                fc = objective(xc)
                n_evals += 1
                accept = fc < values[worst]
            if accept:
                replace(worst, xc, fc)
            else:
                anchor = simplex[best].copy()
                for i in range(d + 1):
                    if i != best:
                        simplex[i] = anchor + SHRINK * (simplex[i] - anchor)
                        values[i] = objective(simplex[i])
                n_evals += d
                total = simplex.sum(axis=0)
    i = int(np.argmin(values))
    return SimplexResult(simplex[i].copy(), float(values[i]), n_evals)
