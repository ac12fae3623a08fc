"""Fixed-iteration min-sum decoding with a flooding schedule.

Messages are edge-indexed (bit-major, see :class:`~errorfloor.code_graph.EdgeLayout`).
One iteration updates every bit-to-check message from the previous
check-to-bit messages and then every check-to-bit message:

    mu[i->c] = h[i] + sum(nu[c'->i] for c' != c)        (bit_neighbors order)
    nu[c->i] = prod(sign mu[j->c]) * min(|mu[j->c]|)     over j != i

with ``nu = 0`` initially. The decision value of bit ``i`` is
``h[i] + sum(nu[c->i])``. Inside updates zero carries a ``+`` sign; only the
final decision treats an exact zero as an error (``tie_is_error``), which makes
the error region closed. There is no early exit.

The summation order is fixed so that the computational tree in
:mod:`errorfloor.comp_tree` reproduces decision values bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .channel import as_vector
from .code_graph import TannerGraph
from .errors import ShapeMismatch

MAX_ITERATIONS = 2048


@nb.njit(cache=True)
def _round(h, bit_ptr, chk_ptr, chk_edge, mu, nu):
    for i in range(h.shape[0]):
        a0 = bit_ptr[i]
        a1 = bit_ptr[i + 1]
        for a in range(a0, a1):
            s = h[i]
            for b in range(a0, a1):
                if b != a:
                    s += nu[b]
            mu[a] = s
    for c in range(chk_ptr.shape[0] - 1):
        neg = False
        m1 = np.inf
        m2 = np.inf
        arg = -1
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            v = mu[chk_edge[k]]
            if v < 0:
                neg = not neg
                v = -v
            if v < m1:
                m2 = m1
                m1 = v
                arg = k
            elif v < m2:
                m2 = v
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            e = chk_edge[k]
            mag = m2 if k == arg else m1
            nu[e] = -mag if neg != (mu[e] < 0) else mag


@nb.njit(cache=True)
def _decide(h, bit_ptr, nu, out):
    for i in range(h.shape[0]):
        s = h[i]
        for b in range(bit_ptr[i], bit_ptr[i + 1]):
            s += nu[b]
        out[i] = s


@nb.njit(cache=True)
def _flood(h, n_it, bit_ptr, chk_ptr, chk_edge, mu, nu, out):
    for e in range(nu.shape[0]):
        nu[e] = 0.0
    for _ in range(n_it):
        _round(h, bit_ptr, chk_ptr, chk_edge, mu, nu)
    _decide(h, bit_ptr, nu, out)


@nb.njit(cache=True)
def _is_failure(out, tie_is_error):
    for i in range(out.shape[0]):
        if out[i] < 0 or (tie_is_error and out[i] == 0):
            return True
    return False


@nb.njit(cache=True)
def _decision_kernel(h, n_it, bit_ptr, chk_ptr, chk_edge):
    n_edges = bit_ptr[-1]
    mu = np.empty(n_edges)
    nu = np.empty(n_edges)
    out = np.empty(h.shape[0])
    _flood(h, n_it, bit_ptr, chk_ptr, chk_edge, mu, nu, out)
    return out


@nb.njit(cache=True)
def _trace_kernel(h, n_it, bit_ptr, chk_ptr, chk_edge):
    n_edges = bit_ptr[-1]
    mu = np.empty(n_edges)
    nu = np.zeros(n_edges)
    trace = np.empty((n_it, h.shape[0]))
    for t in range(n_it):
        _round(h, bit_ptr, chk_ptr, chk_edge, mu, nu)
        _decide(h, bit_ptr, nu, trace[t])
    return trace


@nb.njit(cache=True)
def _batch_kernel(X, n_it, tie_is_error, bit_ptr, chk_ptr, chk_edge):
    n_frames = X.shape[0]
    n_edges = bit_ptr[-1]
    mu = np.empty(n_edges)
    nu = np.empty(n_edges)
    out = np.empty(X.shape[1])
    failed = np.zeros(n_frames, dtype=np.bool_)
    for f in range(n_frames):
        _flood(X[f], n_it, bit_ptr, chk_ptr, chk_edge, mu, nu, out)
        failed[f] = _is_failure(out, tie_is_error)
    return failed


@nb.njit(cache=True)
def _radius_kernel(u, n_it, tie_is_error, tol, r_start, growth, r_max,
                   bit_ptr, chk_ptr, chk_edge):
    n = u.shape[0]
    n_edges = bit_ptr[-1]
    mu = np.empty(n_edges)
    nu = np.empty(n_edges)
    out = np.empty(n)
    x = np.empty(n)
    lo = 0.0
    r = r_start
    while True:
        for i in range(n):
            x[i] = 1.0 - r * u[i]
        _flood(x, n_it, bit_ptr, chk_ptr, chk_edge, mu, nu, out)
        if _is_failure(out, tie_is_error):
            break
        lo = r
        r *= growth
        if r > r_max:
            return np.inf
    hi = r
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        for i in range(n):
            x[i] = 1.0 - mid * u[i]
        _flood(x, n_it, bit_ptr, chk_ptr, chk_edge, mu, nu, out)
        if _is_failure(out, tie_is_error):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# Public API
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecoderConfig:
    n_iterations: int
    tie_is_error: bool = True
    max_iterations: int = MAX_ITERATIONS

    def __post_init__(self):
        if not 0 <= self.n_iterations <= self.max_iterations:
            raise ValueError(
                f"n_iterations must lie in [0, {self.max_iterations}], got {self.n_iterations}")


@dataclass(frozen=True, eq=False)
class DecodeOutcome:
    hard: np.ndarray
    failed: bool
    erroneous_bits: tuple[int, ...]
    syndrome_ok: bool


def _config(cfg) -> DecoderConfig:
    return cfg if isinstance(cfg, DecoderConfig) else DecoderConfig(int(cfg))


def _checked(g: TannerGraph, h) -> np.ndarray:
    h = np.ascontiguousarray(as_vector(h), dtype=np.float64)
    if h.ndim != 1 or h.shape[0] != g.n_bits:
        raise ShapeMismatch(f"expected {g.n_bits} log-likelihoods, got shape {h.shape}")
    return h


def hard_decisions(values: np.ndarray, tie_is_error: bool = True) -> np.ndarray:
    hard = np.where(values > 0, 1, -1).astype(np.int8)
    if not tie_is_error:
        hard[values == 0] = 1
    return hard


def decision_values(g: TannerGraph, h, n_iterations: int) -> np.ndarray:
    """Real-valued decisions ``h + sum(nu)`` after ``n_iterations`` rounds."""
    cfg = _config(n_iterations)
    lay = g.layout
    return _decision_kernel(_checked(g, h), cfg.n_iterations, lay.bit_ptr, lay.chk_ptr, lay.chk_edge)


def syndrome(g: TannerGraph, hard) -> bool:
    """True iff every check sees an even number of -1 entries."""
    hard = np.asarray(hard)
    if hard.shape != (g.n_bits,):
        raise ShapeMismatch(f"expected {g.n_bits} hard decisions, got shape {hard.shape}")
    flipped = (hard < 0).astype(np.int64)
    lay = g.layout
    per_edge = flipped[np.repeat(np.arange(g.n_bits), g.bit_degrees)]
    parity = np.bincount(lay.edge_check, weights=per_edge, minlength=g.n_checks)
    return bool(np.all(parity.astype(np.int64) % 2 == 0))


def _outcome(g, values, tie_is_error) -> DecodeOutcome:
    hard = hard_decisions(values, tie_is_error)
    wrong = np.flatnonzero(hard != 1)
    return DecodeOutcome(hard=hard, failed=bool(wrong.size), erroneous_bits=tuple(int(i) for i in wrong),
                         syndrome_ok=syndrome(g, hard))


def decode(g: TannerGraph, h, cfg) -> DecodeOutcome:
    """Run exactly ``cfg.n_iterations`` flooding rounds and report the outcome."""
    cfg = _config(cfg)
    return _outcome(g, decision_values(g, h, cfg.n_iterations), cfg.tie_is_error)


def decode_trace(g: TannerGraph, h, cfg) -> np.ndarray:
    """Hard decisions after each iteration, shape ``(n_iterations, n_bits)``."""
    cfg = _config(cfg)
    lay = g.layout
    values = _trace_kernel(_checked(g, h), cfg.n_iterations, lay.bit_ptr, lay.chk_ptr, lay.chk_edge)
    return hard_decisions(values, cfg.tie_is_error)


def fails(g: TannerGraph, h, cfg) -> bool:
    cfg = _config(cfg)
    values = decision_values(g, h, cfg.n_iterations)
    return bool(_is_failure(values, cfg.tie_is_error))


def batch_failures(g: TannerGraph, X, cfg) -> np.ndarray:
    """Failure flag per row of ``X`` (frames x bits)."""
    cfg = _config(cfg)
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != g.n_bits:
        raise ShapeMismatch(f"expected frames of length {g.n_bits}, got shape {X.shape}")
    lay = g.layout
    return _batch_kernel(X, cfg.n_iterations, cfg.tie_is_error, lay.bit_ptr, lay.chk_ptr, lay.chk_edge)


def surface_radius(g: TannerGraph, u, cfg, tol: float = 1e-6, r_start: float = 0.5,
                   growth: float = 1.5, r_max: float | None = None) -> float:
    """Smallest bracketed radius ``r`` with ``1 - r*u`` failing, or ``inf``.

    Geometric bracketing from ``r_start`` by ``growth`` up to ``r_max`` (default
    ``2*sqrt(n_bits)``), then bisection to relative tolerance ``tol``.
    """
    cfg = _config(cfg)
    u = _checked(g, u)
    if r_max is None:
        r_max = 2.0 * np.sqrt(g.n_bits)
    lay = g.layout
    return float(_radius_kernel(u, cfg.n_iterations, cfg.tie_is_error, tol, r_start, growth, r_max,
                                lay.bit_ptr, lay.chk_ptr, lay.chk_edge))
