"""Monte-Carlo frame-error-rate estimation.

Every cell of a sweep reads the same counter-addressed noise stream (common
random numbers across SNR and iteration count), so frame ``f`` of a cell is
reproducible in isolation and any partition of the frame range merges to the
same counts.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .channel import SNRPoint, sample_frames
from .code_graph import TannerGraph
from .decoder import DecoderConfig, batch_failures

log = logging.getLogger(__name__)

DEFAULT_ITERATIONS = (0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
CSV_COLUMNS = ("code", "snr_db", "s_squared", "n_iterations", "frames", "errors", "fer",
               "ci_low", "ci_high", "seed")
GUARD_FER = 1e-7
CHUNK_FRAMES = 4096


@dataclass(frozen=True)
class MCConfig:
    snr_points: tuple[SNRPoint, ...] = ()
    iteration_counts: tuple[int, ...] = DEFAULT_ITERATIONS
    max_frames: int = 1_000_000
    target_errors: int = 100
    master_seed: int = 0
    ci_level: float = 0.95
    guard_l_sq: float | None = None
    force: bool = False

    def __post_init__(self):
        if self.target_errors < 1:
            raise ValueError("target_errors must be at least 1")
        if self.max_frames < 1:
            raise ValueError("max_frames must be at least 1")
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")
        snrs = tuple(p if isinstance(p, SNRPoint) else SNRPoint(p) for p in self.snr_points)
        object.__setattr__(self, "snr_points", snrs)
        its = tuple(int(i) for i in self.iteration_counts)
        if list(its) != sorted(its):
            raise ValueError("iteration_counts must be sorted ascending")
        for i in its:
            DecoderConfig(i)
        object.__setattr__(self, "iteration_counts", its)


@dataclass(frozen=True)
class FERPoint:
    snr: SNRPoint
    n_iterations: int
    frames: int
    errors: int
    ci_low: float
    ci_high: float
    seed: int = 0
    code: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0 <= self.errors <= self.frames:
            raise ValueError("errors must lie in [0, frames]")

    @property
    def fer(self) -> float:
        return self.errors / self.frames if self.frames else 0.0

    def row(self) -> list:
        return [self.code, repr(self.snr.snr_db), repr(self.snr.s_squared), self.n_iterations,
                self.frames, self.errors, repr(self.fer), repr(self.ci_low), repr(self.ci_high),
                self.seed]


def wilson_interval(errors: int, frames: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval; with no errors, the one-sided bound ``1 - alpha**(1/n)``."""
    if frames <= 0:
        return 0.0, 1.0
    alpha = 1.0 - level
    if errors == 0:
        return 0.0, 1.0 - alpha ** (1.0 / frames)
    z = float(ndtri(1.0 - alpha / 2))
    p = errors / frames
    denom = 1.0 + z * z / frames
    centre = (p + z * z / (2 * frames)) / denom
    half = z * math.sqrt(p * (1 - p) / frames + z * z / (4 * frames * frames)) / denom
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


def uncoded_fer(snr: SNRPoint, n: int) -> float:
    """Frame error rate of a symbol-wise sign decision over ``n`` bits."""
    q = float(ndtr(-snr.s))
    return -math.expm1(n * math.log1p(-q))


def count_failures(g: TannerGraph, snr: SNRPoint, n_iterations: int, seed: int,
                   first_frame: int, n_frames: int, chunk: int = CHUNK_FRAMES) -> np.ndarray:
    """Failure flags for frames ``first_frame .. first_frame + n_frames - 1``."""
    out = np.empty(n_frames, dtype=bool)
    for lo in range(0, n_frames, chunk):
        m = min(chunk, n_frames - lo)
        X = sample_frames(g.n_bits, snr, seed, first_frame + lo, m)
        out[lo:lo + m] = batch_failures(g, X, n_iterations)
    return out


def estimate_fer(g: TannerGraph, snr: SNRPoint, n_iterations: int, target_errors: int = 100,
                 max_frames: int = 1_000_000, seed: int = 0, ci_level: float = 0.95,
                 chunk: int = CHUNK_FRAMES) -> FERPoint:
    """Decode frames in order until ``target_errors`` failures or ``max_frames``.

    The stopping frame does not depend on ``chunk``: counting stops exactly at
    the frame that produces the target-th error.
    """
    if not isinstance(snr, SNRPoint):
        snr = SNRPoint(snr)
    frames = errors = 0
    while frames < max_frames and errors < target_errors:
        m = min(chunk, max_frames - frames)
        flags = count_failures(g, snr, n_iterations, seed, frames, m, chunk)
        hits = np.flatnonzero(flags)
        need = target_errors - errors
        if hits.size >= need:
            frames += int(hits[need - 1]) + 1
            errors = target_errors
        else:
            frames += m
            errors += hits.size
    lo, hi = wilson_interval(errors, frames, ci_level)
    return FERPoint(snr, n_iterations, frames, errors, lo, hi, seed, g.name or "")


def _guarded(cfg: MCConfig, snr: SNRPoint) -> bool:
    if cfg.force or cfg.guard_l_sq is None:
        return False
    return math.exp(-cfg.guard_l_sq * snr.s_squared / 2) < GUARD_FER


def _cell(g, cfg, cell):
    snr, n_it = cell
    return estimate_fer(g, snr, n_it, cfg.target_errors, cfg.max_frames, cfg.master_seed,
                        cfg.ci_level)


def sweep_cells(cfg: MCConfig) -> list[tuple[SNRPoint, int]]:
    """Cells in output order, with guarded cells removed."""
    cells = []
    for n_it in cfg.iteration_counts:
        for snr in cfg.snr_points:
            if _guarded(cfg, snr):
                log.info("skipping s^2=%.4g, %d iterations: projected FER below %.0e",
                         snr.s_squared, n_it, GUARD_FER)
                continue
            cells.append((snr, n_it))
    return cells


def sweep(g: TannerGraph, cfg: MCConfig, workers: int = 1, done: dict | None = None,
          on_point=None) -> list[FERPoint]:
    """One :class:`FERPoint` per (iteration count, SNR) cell.

    ``done`` maps ``(s_squared, n_iterations)`` to already computed points,
    which are reused instead of recomputed.
    """
    cells = sweep_cells(cfg)
    done = done or {}
    todo = [c for c in cells if (c[0].s_squared, c[1]) not in done]
    run = partial(_cell, g, cfg)
    results = dict(done)

    def collect(cell, point):
        results[(cell[0].s_squared, cell[1])] = point
        if on_point:
            on_point(point)

    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell, point in zip(todo, pool.map(run, todo)):
                collect(cell, point)
    else:
        for cell in todo:
            collect(cell, run(cell))
    return [results[(s.s_squared, n)] for s, n in cells]


# --------------------------------------------------------------------------
# Tables and overlays
# --------------------------------------------------------------------------

def write_csv(points: Iterable[FERPoint], manifest_hash: str | None = None) -> str:
    buf = io.StringIO()
    if manifest_hash:
        buf.write(f"# manifest_sha256: {manifest_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow(p.row())
    return buf.getvalue()


def read_csv(text: str) -> list[FERPoint]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    points = []
    for row in csv.DictReader(lines):
        points.append(FERPoint(SNRPoint.from_s_squared(float(row["s_squared"])),
                               int(row["n_iterations"]), int(row["frames"]), int(row["errors"]),
                               float(row["ci_low"]), float(row["ci_high"]), int(row["seed"]),
                               row["code"]))
    return points


@dataclass(frozen=True)
class Asymptote:
    label: str
    l_sq: float
    s_squared: np.ndarray
    log_fer: np.ndarray


def overlay_asymptotes(points: Sequence[FERPoint], instantons: Iterable[float],
                       d_min: int | None = None) -> list[Asymptote]:
    """Lines ``log FER = -l_sq * s**2 / 2`` on the sweep's ``s**2`` grid.

    The Hamming-distance line uses ``l_sq = d_min``.
    """
    grid = np.unique([p.snr.s_squared for p in points])
    curves = []
    for l_sq in instantons:
        if l_sq < 0:
            raise ValueError("l_sq must be non-negative")
        curves.append(Asymptote(f"instanton l2={l_sq:.4f}", float(l_sq), grid, -l_sq * grid / 2))
    if d_min is not None:
        curves.append(Asymptote(f"hamming d_min={d_min}", float(d_min), grid, -d_min * grid / 2))
    return curves


def fit_slope(points: Sequence[FERPoint], s_sq_min: float = -math.inf,
              s_sq_max: float = math.inf) -> tuple[float, float]:
    """Weighted least-squares slope and intercept of ``log fer`` against ``s**2``.

    Only points with errors inside the window are used; the weight of each is
    its error count (the inverse variance of ``log fer`` for Poisson counts).
    """
    sel = [p for p in points if p.errors > 0 and s_sq_min <= p.snr.s_squared <= s_sq_max]
    if len(sel) < 2:
        raise ValueError("need at least two points with errors to fit a slope")
    s2 = np.array([p.snr.s_squared for p in sel])
    y = np.log([p.fer for p in sel])
    w = np.sqrt([p.errors for p in sel])
    slope, intercept = np.polyfit(s2, y, 1, w=w)
    return float(slope), float(intercept)
