"""Instanton search with the downhill-simplex "amoeba".

Two objectives are available:

* ``soft``: the simplex moves over noise vectors; a failing point scores its
  squared length and a decodable point scores ``penalty`` plus its length.
* ``hard``: the simplex moves over noise directions; each direction scores the
  squared radius at which decoding first fails along it, found by bisection.

A run restarts the simplex several times around the best point found so far,
shrinking the initial vertex offset by ``anneal_factor`` each time, and finally
lands the result exactly on the error surface.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np

from .amoeba import nelder_mead
from .channel import ChannelOutput, as_vector, derive_seed, instanton_length_sq
from .code_graph import TannerGraph
from .comp_tree import DEPTH_CAP, build_tree, ct_length_sq, extract_coefficients, probe_point
from .decoder import DecoderConfig, decode, fails, surface_radius, syndrome
from .errors import DegenerateTie, DepthCapExceeded, NoFailureFound, NoFailureInRange, NotACodeword

MODES = ("soft", "hard")


@dataclass(frozen=True)
class SearchConfig:
    mode: str = "hard"
    n_iterations: int = 4
    restarts: int = 8
    max_evals: int = 10_000
    simplex_scale: float = 0.1
    anneal_factor: float = 0.5
    tol: float = 1e-8
    penalty: float = 1e4
    tol_bisect: float = 1e-6
    mask: tuple[int, ...] | None = None
    seed_point: tuple[float, ...] | None = field(default=None, repr=False)
    start_scale: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not 0 < self.anneal_factor < 1:
            raise ValueError("anneal_factor must lie in (0, 1)")
        if self.mask is not None:
            mask = tuple(sorted({int(b) for b in self.mask}))
            if not mask:
                raise ValueError("mask must not be empty")
            object.__setattr__(self, "mask", mask)
        if self.seed_point is not None:
            object.__setattr__(self, "seed_point", tuple(float(v) for v in as_vector(self.seed_point)))
        DecoderConfig(self.n_iterations)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class InstantonRecord:
    x: ChannelOutput
    l_sq: float
    mode: str
    n_iterations: int
    erroneous_bits: tuple[int, ...]
    on_surface: bool
    attempt_id: int = 0
    rng_seed: int = 0
    n_evals: int = 0
    mask: tuple[int, ...] | None = None
    ct_verified: bool | None = None
    ct_l_sq: float | None = None
    phases: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.x, ChannelOutput):
            object.__setattr__(self, "x", ChannelOutput(self.x))
        object.__setattr__(self, "erroneous_bits", tuple(int(b) for b in self.erroneous_bits))

    @property
    def noise(self) -> np.ndarray:
        return self.x.noise

    def support(self, size: int) -> tuple[int, ...]:
        """The ``size`` bits carrying the largest noise."""
        order = np.argsort(-np.abs(self.noise), kind="stable")[:size]
        return tuple(sorted(int(b) for b in order))

    def to_json(self) -> dict:
        return {"x": self.x.x.tolist(), "l_sq": self.l_sq, "mode": self.mode,
                "n_iterations": self.n_iterations, "erroneous_bits": list(self.erroneous_bits),
                "on_surface": self.on_surface, "attempt_id": self.attempt_id,
                "rng_seed": self.rng_seed, "n_evals": self.n_evals,
                "mask": list(self.mask) if self.mask is not None else None,
                "ct_verified": self.ct_verified, "ct_l_sq": self.ct_l_sq, "phases": self.phases}

    @classmethod
    def from_json(cls, data: dict) -> "InstantonRecord":
        mask = data.get("mask")
        return cls(x=ChannelOutput(data["x"]), l_sq=float(data["l_sq"]), mode=data["mode"],
                   n_iterations=int(data["n_iterations"]),
                   erroneous_bits=tuple(data["erroneous_bits"]), on_surface=bool(data["on_surface"]),
                   attempt_id=int(data.get("attempt_id", 0)), rng_seed=int(data.get("rng_seed", 0)),
                   n_evals=int(data.get("n_evals", 0)),
                   mask=tuple(mask) if mask is not None else None,
                   ct_verified=data.get("ct_verified"), ct_l_sq=data.get("ct_l_sq"),
                   phases=dict(data.get("phases") or {}))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


# --------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------

def soft_objective(g: TannerGraph, x, n_it: int, penalty: float = 1e4) -> float:
    """Squared noise length if decoding fails, ``penalty`` plus it otherwise."""
    x = as_vector(x)
    l_sq = instanton_length_sq(x)
    return l_sq if fails(g, x, n_it) else penalty + l_sq


def hard_objective(g: TannerGraph, u, n_it: int, tol_bisect: float = 1e-6,
                   r_max: float | None = None) -> tuple[float, ChannelOutput]:
    """Squared radius of the error surface along noise direction ``u``.

    ``u`` is normalised here. Returns ``(r**2, 1 - r*u)``; the returned point
    fails and radius ``r*(1 - 10*tol_bisect)`` decodes (up to non-monotone rays).
    """
    u = np.asarray(u, dtype=np.float64)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise ValueError("direction must be non-zero")
    u = u / norm
    r = surface_radius(g, u, n_it, tol=tol_bisect, r_max=r_max)
    if not math.isfinite(r):
        raise NoFailureInRange("decoding never fails along this direction up to the maximum radius")
    return r * r, ChannelOutput(1.0 - r * u)


class _Problem:
    """Objective over the masked coordinates of one code and configuration."""

    def __init__(self, g: TannerGraph, cfg: SearchConfig):
        self.g = g
        self.cfg = cfg
        self.index = np.arange(g.n_bits) if cfg.mask is None else np.asarray(cfg.mask)
        if self.index.max() >= g.n_bits:
            raise IndexError("mask references a bit outside the code")
        self.n_calls = 0

    def embed(self, v) -> np.ndarray:
        noise = np.zeros(self.g.n_bits)
        noise[self.index] = v
        return noise

    def fails(self, noise) -> bool:
        return fails(self.g, 1.0 - noise, self.cfg.n_iterations)

    def radius(self, v) -> float:
        norm = math.sqrt(float(v @ v))
        if norm == 0:
            return math.inf
        return surface_radius(self.g, self.embed(v / norm), self.cfg.n_iterations,
                              tol=self.cfg.tol_bisect)

    def soft(self, v) -> float:
        self.n_calls += 1
        l_sq = float(v @ v)
        return l_sq if self.fails(self.embed(v)) else self.cfg.penalty + l_sq

    def hard(self, v) -> float:
        self.n_calls += 1
        r = self.radius(v)
        return r * r


def _start_noise(problem: _Problem, rng: np.random.Generator) -> np.ndarray:
    cfg, g = problem.cfg, problem.g
    if cfg.seed_point is not None:
        seed = np.asarray(cfg.seed_point)
        if seed.size != g.n_bits:
            raise ValueError(f"seed point has {seed.size} entries, code has {g.n_bits} bits")
        return (1.0 - seed)[problem.index]
    scale = cfg.start_scale
    if scale is None:
        scale = 2.0 / math.sqrt(float(g.bit_degrees.mean()))
    return rng.uniform(0.0, scale, problem.index.size)


def _landing(problem: _Problem, v) -> tuple[np.ndarray, bool]:
    """Put the noise direction of ``v`` exactly on the error surface."""
    r = problem.radius(v)
    if not math.isfinite(r):
        return problem.embed(v), False
    return problem.embed(v / np.linalg.norm(v)) * r, True


def _sandwich(problem: _Problem, noise) -> bool:
    shrink = 1.0 - 10.0 * problem.cfg.tol_bisect
    return problem.fails(noise) and not problem.fails(shrink * noise)


def search(g: TannerGraph, cfg: SearchConfig, attempt_id: int = 0) -> InstantonRecord:
    """One annealed amoeba run from a random (or seeded) start."""
    if cfg.mode == "soft" and cfg.penalty <= 4 * g.n_bits:
        raise ValueError("soft-mode penalty must exceed 4 * n_bits")
    problem = _Problem(g, cfg)
    seed = derive_seed(cfg.rng_seed, attempt_id)
    rng = np.random.default_rng(seed)
    v = _start_noise(problem, rng)
    if not np.any(v):
        raise NoFailureFound("start point carries no noise on the searchable bits")

    if cfg.mode == "hard":
        objective = problem.hard
        v = v / np.linalg.norm(v)
    else:
        objective = problem.soft
        if not problem.fails(problem.embed(v)):
            r = problem.radius(v)
            if not math.isfinite(r):
                raise NoFailureFound("start direction never reaches the failure region")
            v = v / np.linalg.norm(v) * r * (1.0 + 1e-3)

    best_v, best_f = v, objective(v)
    scale = cfg.simplex_scale
    for _ in range(cfg.restarts):
        res = nelder_mead(objective, best_v, scale=scale, max_evals=cfg.max_evals, tol=cfg.tol)
        if res.fun <= best_f:
            best_v, best_f = res.x, res.fun
        if cfg.mode == "hard":
            best_v = best_v / np.linalg.norm(best_v)
        scale *= cfg.anneal_factor

    limit = math.inf if cfg.mode == "hard" else cfg.penalty
    if not best_f < limit:
        raise NoFailureFound(f"no failing configuration found in attempt {attempt_id}")
    noise, landed = _landing(problem, best_v)
    if cfg.mode == "soft" and (not landed or float(noise @ noise) > best_f):
        noise, landed = problem.embed(best_v), False
    x = ChannelOutput(1.0 - noise)
    outcome = decode(g, x, cfg.n_iterations)
    if not outcome.failed:
        raise NoFailureFound(f"attempt {attempt_id} ended on a decodable point")
    return InstantonRecord(x=x, l_sq=instanton_length_sq(x), mode=cfg.mode,
                           n_iterations=cfg.n_iterations, erroneous_bits=outcome.erroneous_bits,
                           on_surface=landed and _sandwich(problem, noise), attempt_id=attempt_id,
                           rng_seed=seed, n_evals=problem.n_calls, mask=cfg.mask)


def codeword_seed(g: TannerGraph, flip_support: Iterable[int], eps: float = 1e-3) -> ChannelOutput:
    """Start point just past the midpoint towards the codeword with ``flip_support``."""
    support = sorted({int(b) for b in flip_support})
    hard = np.ones(g.n_bits, dtype=np.int8)
    hard[support] = -1
    if not syndrome(g, hard):
        raise NotACodeword("flipping the given support does not produce a codeword")
    x = np.ones(g.n_bits)
    x[support] = -eps
    return ChannelOutput(x)


def biased_search(g: TannerGraph, cfg: SearchConfig, mask: Sequence[int],
                  full_cfg: SearchConfig | None = None, attempt_id: int = 0,
                  masked_attempts: int = 1) -> InstantonRecord:
    """Masked search, then an unmasked search started at the masked optimum.

    The masked phase is cheap, so ``masked_attempts`` independent masked runs
    may be made; the best of them seeds the unmasked phase.
    """
    if masked_attempts < 1:
        raise ValueError("masked_attempts must be at least 1")
    masked_cfg = replace(cfg, mask=tuple(mask))
    runs = [search(g, masked_cfg, attempt_id * masked_attempts + j) for j in range(masked_attempts)]
    masked = min(runs, key=lambda r: r.l_sq)
    follow = replace(full_cfg or cfg, mask=None, seed_point=tuple(masked.x.x))
    full = search(g, follow, attempt_id)
    phases = {"masked_l_sq": masked.l_sq, "full_l_sq": full.l_sq, "mask": list(masked_cfg.mask)}
    if masked_attempts > 1:
        phases["masked_runs"] = [r.l_sq for r in runs]
    best = full if full.l_sq <= masked.l_sq else masked
    return replace(best, phases=phases, n_evals=sum(r.n_evals for r in runs) + full.n_evals)


def continuation(g: TannerGraph, cfg: SearchConfig, iteration_counts: Sequence[int],
                 attempt_id: int = 0) -> list[InstantonRecord]:
    """Follow an instanton through increasing iteration counts.

    Each search starts at the previous optimum (the first at ``cfg.seed_point``
    or a random start). The error surface grows rugged with the iteration
    count, so tracking the optimum beats fresh starts at deep iterations.
    """
    records = []
    step = cfg
    for n_it in iteration_counts:
        rec = search(g, replace(step, n_iterations=int(n_it)), attempt_id)
        records.append(rec)
        step = replace(step, seed_point=tuple(rec.x.x))
    return records


# --------------------------------------------------------------------------
# Spectra
# --------------------------------------------------------------------------

@dataclass
class Spectrum:
    records: list[InstantonRecord]
    attempts: int
    bin_width: float = 0.25

    @property
    def lengths(self) -> np.ndarray:
        return np.array([r.l_sq for r in self.records])

    def best(self) -> InstantonRecord:
        return min(self.records, key=lambda r: r.l_sq)

    def running_min(self) -> np.ndarray:
        return np.minimum.accumulate(self.lengths)

    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        """Bin centres and counts over ``l_sq`` with ``bin_width`` bins."""
        l = self.lengths
        if l.size == 0:
            return np.empty(0), np.empty(0, dtype=np.int64)
        w = self.bin_width
        lo = math.floor(l.min() / w) * w
        n_bins = int(math.floor((l.max() - lo) / w)) + 1
        idx = np.minimum(((l - lo) / w).astype(np.int64), n_bins - 1)
        counts = np.bincount(idx, minlength=n_bins)
        return lo + w * (np.arange(n_bins) + 0.5), counts

    def distribution(self) -> tuple[np.ndarray, np.ndarray]:
        """Empirical distribution function of ``l_sq``."""
        l = np.sort(self.lengths)
        return l, np.arange(1, l.size + 1) / max(self.attempts, 1)

    def histogram_text(self) -> str:
        centres, counts = self.histogram()
        lines = ["# l_sq_bin_center count"]
        lines += [f"{c:.6f} {n:d}" for c, n in zip(centres, counts)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"attempts": self.attempts, "bin_width": self.bin_width,
                "records": [r.to_json() for r in self.records]}

    @classmethod
    def from_json(cls, data: dict) -> "Spectrum":
        return cls([InstantonRecord.from_json(r) for r in data["records"]], int(data["attempts"]),
                   float(data.get("bin_width", 0.25)))


def _attempt(g, cfg, attempt_id):
    try:
        return search(g, cfg, attempt_id)
    except NoFailureFound:
        return None


def collect_spectrum(g: TannerGraph, cfg: SearchConfig, n_attempts: int, workers: int = 1,
                     first_attempt: int = 0, bin_width: float = 0.25,
                     on_record: Callable[[int, InstantonRecord | None], None] | None = None) -> Spectrum:
    """Independent attempts with seeds derived from ``cfg.rng_seed`` and the attempt id."""
    if n_attempts < 1:
        raise ValueError("n_attempts must be at least 1")
    ids = range(first_attempt, first_attempt + n_attempts)
    run = partial(_attempt, g, cfg)
    records = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(run, ids)
            for i, rec in zip(ids, results):
                if on_record:
                    on_record(i, rec)
                if rec is not None:
                    records.append(rec)
    else:
        for i in ids:
            rec = run(i)
            if on_record:
                on_record(i, rec)
            if rec is not None:
                records.append(rec)
    return Spectrum(records, n_attempts, bin_width)


# --------------------------------------------------------------------------
# Computational-tree verification
# --------------------------------------------------------------------------

@dataclass
class BitVerification:
    bit: int
    total: int | None = None
    total_sq: int | None = None
    ct_l_sq: float | None = None
    coefficients: list | None = None
    tie: str | None = None


@dataclass
class Verification:
    record_l_sq: float
    depth: int
    bits: list[BitVerification]
    rel_tol: float = 1e-3

    def best(self) -> BitVerification | None:
        scored = [b for b in self.bits if b.ct_l_sq is not None]
        if not scored:
            return None
        return min(scored, key=lambda b: abs(b.ct_l_sq - self.record_l_sq))

    @property
    def matched(self) -> bool:
        b = self.best()
        return b is not None and abs(b.ct_l_sq - self.record_l_sq) <= self.rel_tol * self.record_l_sq

    @property
    def tie(self) -> bool:
        return any(b.tie for b in self.bits)

    def to_json(self) -> dict:
        best = self.best()
        return {"record_l_sq": self.record_l_sq, "depth": self.depth, "matched": self.matched,
                "degenerate_tie": self.tie,
                "best": asdict(best) if best else None,
                "bits": [asdict(b) for b in self.bits]}


def verify_record(g: TannerGraph, record: InstantonRecord, depth: int | None = None,
                  offset: float = 1e-4, rel_tol: float = 1e-3) -> Verification:
    """Extract tree coefficients at every bit that is wrong just inside the failure region."""
    depth = record.n_iterations if depth is None else depth
    if depth > DEPTH_CAP:
        raise DepthCapExceeded(f"verification depth {depth} exceeds the tree cap of {DEPTH_CAP}")
    probe = probe_point(record.x, offset)
    wrong = decode(g, probe, depth).erroneous_bits
    results = []
    for b in wrong:
        tree = build_tree(g, b, depth)
        try:
            c = extract_coefficients(tree, probe)
        except DegenerateTie as exc:
            results.append(BitVerification(bit=b, tie=str(exc)))
            continue
        results.append(BitVerification(bit=b, total=c.total, total_sq=c.total_sq,
                                       ct_l_sq=ct_length_sq(c),
                                       coefficients=[list(e) for e in c.entries]))
    return Verification(record.l_sq, depth, results, rel_tol)


def with_verification(record: InstantonRecord, v: Verification) -> InstantonRecord:
    best = v.best()
    return replace(record, ct_verified=v.matched, ct_l_sq=best.ct_l_sq if best else None)


def coefficient_mask(g: TannerGraph, record: InstantonRecord, depth: int | None = None) -> tuple[int, ...]:
    """Bits with non-zero tree coefficients at the best-matching erroneous bit.

    This is the natural low-instanton mask: the support of the hyperplane the
    record lies on.
    """
    v = verify_record(g, record, depth)
    best = v.best()
    if best is None:
        raise DegenerateTie("every erroneous bit sits on a tie; no coefficient support available")
    return tuple(sorted(b for b, _ in best.coefficients))
