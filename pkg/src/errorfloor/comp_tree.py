"""Computational trees: the Tanner graph unwrapped around one bit.

Evaluating min-sum on the depth-``k`` tree gives exactly the graph decoder's
decision value at the root after ``k`` iterations. Leaves carry bare
log-likelihoods, so the root output is piecewise linear in ``h`` with integer
slopes ``n_i``; on the hyperplane ``sum(n_i * x_i) = 0`` the point closest to
the all-ones vector has squared distance ``(sum n)**2 / sum(n**2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelOutput, as_vector
from .code_graph import TannerGraph
from .errors import DegenerateTie, DepthCapExceeded, ShapeMismatch, ZeroCoefficients

DEPTH_CAP = 6
MAX_TREE_NODES = 5_000_000


@dataclass(frozen=True, eq=False)
class ComputationalTree:
    """Layered tree.

    ``bit_levels[t]`` holds the original bit index of every bit node at depth
    ``t`` (``t = 0`` is the root). ``check_children[t]`` (``t = 1..k``) indexes
    into ``bit_levels[t]`` for the children of each check at that depth, and
    ``bit_children[t]`` (``t = 0..k-1``) indexes into the checks at depth
    ``t + 1``. Rows are padded with ``-1``; children follow the graph's
    adjacency order with the parent edge removed.
    """

    graph: TannerGraph = field(repr=False)
    root_bit: int
    depth: int
    bit_levels: list[np.ndarray] = field(repr=False)
    check_levels: list[np.ndarray] = field(repr=False)
    bit_children: list[np.ndarray] = field(repr=False)
    check_children: list[np.ndarray] = field(repr=False)

    @property
    def n_bit_nodes(self) -> int:
        return sum(len(level) for level in self.bit_levels)

    @property
    def n_check_nodes(self) -> int:
        return sum(len(level) for level in self.check_levels)

    def bits(self) -> np.ndarray:
        """Distinct original bits appearing anywhere in the tree."""
        return np.unique(np.concatenate(self.bit_levels))


def _pad(rows: list[list[int]]) -> np.ndarray:
    width = max((len(r) for r in rows), default=0)
    out = np.full((len(rows), width), -1, dtype=np.int64)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


def build_tree(g: TannerGraph, root: int, k: int, depth_cap: int = DEPTH_CAP,
               max_nodes: int = MAX_TREE_NODES) -> ComputationalTree:
    if k < 0:
        raise ValueError("depth must be non-negative")
    if k > depth_cap:
        raise DepthCapExceeded(
            f"depth {k} exceeds the cap of {depth_cap}; the tree grows exponentially, so verify "
            "at a smaller iteration count or raise depth_cap explicitly")
    if not 0 <= root < g.n_bits:
        raise IndexError(f"root bit {root} out of range")
    bit_levels = [np.array([root], dtype=np.int64)]
    parent_check = [-1]
    check_levels: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
    bit_children: list[np.ndarray] = []
    check_children: list[np.ndarray] = [np.empty((0, 0), dtype=np.int64)]
    total = 1
    for t in range(1, k + 1):
        checks, check_parent_bit, b_rows = [], [], []
        for b, pc in zip(bit_levels[-1], parent_check):
            row = []
            for c in g.bit_neighbors[b]:
                if c != pc:
                    row.append(len(checks))
                    checks.append(c)
                    check_parent_bit.append(b)
            b_rows.append(row)
        bits, parents, c_rows = [], [], []
        for c, pb in zip(checks, check_parent_bit):
            row = []
            for b in g.check_neighbors[c]:
                if b != pb:
                    row.append(len(bits))
                    bits.append(b)
                    parents.append(c)
            c_rows.append(row)
        total += len(checks) + len(bits)
        if total > max_nodes:
            raise DepthCapExceeded(f"tree at depth {t} exceeds {max_nodes} nodes")
        bit_children.append(_pad(b_rows))
        check_levels.append(np.array(checks, dtype=np.int64))
        check_children.append(_pad(c_rows))
        bit_levels.append(np.array(bits, dtype=np.int64))
        parent_check = parents
    return ComputationalTree(g, int(root), int(k), bit_levels, check_levels, bit_children, check_children)


def evaluate(tree: ComputationalTree, h) -> np.ndarray | float:
    """Min-sum root output for one ``h`` (returns float) or a batch ``(B, n_bits)``."""
    H = np.asarray(as_vector(h) if isinstance(h, ChannelOutput) else h, dtype=np.float64)
    single = H.ndim == 1
    H = np.atleast_2d(H)
    if H.shape[1] != tree.graph.n_bits:
        raise ShapeMismatch(f"expected {tree.graph.n_bits} log-likelihoods, got {H.shape[1]}")
    k = tree.depth
    mu = H[:, tree.bit_levels[k]]
    for t in range(k, 0, -1):
        kids = tree.check_children[t]
        valid = kids >= 0
        vals = mu[:, np.where(valid, kids, 0)]
        negative = np.where(valid, vals < 0, False)
        mag = np.where(valid, np.abs(vals), np.inf).min(axis=2, initial=np.inf)
        sign = np.where(negative.sum(axis=2) % 2 == 1, -1.0, 1.0)
        nu = sign * mag
        parent_mu = H[:, tree.bit_levels[t - 1]].copy()
        links = tree.bit_children[t - 1]
        for j in range(links.shape[1]):
            col = links[:, j]
            ok = col >= 0
            parent_mu = parent_mu + np.where(ok, nu[:, np.where(ok, col, 0)], 0.0)
        mu = parent_mu
    out = mu[:, 0]
    return float(out[0]) if single else out


@dataclass(frozen=True)
class CoefficientVector:
    """Sparse integer slopes of the root output with respect to each bit."""

    entries: tuple[tuple[int, int], ...]
    root: int
    depth: int
    n_bits: int

    @property
    def total(self) -> int:
        return sum(v for _, v in self.entries)

    @property
    def total_sq(self) -> int:
        return sum(v * v for _, v in self.entries)

    def dense(self) -> np.ndarray:
        n = np.zeros(self.n_bits, dtype=np.int64)
        for b, v in self.entries:
            n[b] = v
        return n

    @classmethod
    def from_dense(cls, n, root: int = -1, depth: int = -1) -> "CoefficientVector":
        n = np.asarray(n)
        entries = tuple((int(b), int(n[b])) for b in np.flatnonzero(n))
        return cls(entries, root, depth, n.size)

    def to_json(self) -> dict:
        return {"root": self.root, "depth": self.depth, "n_bits": self.n_bits,
                "entries": [[b, v] for b, v in self.entries]}

    @classmethod
    def from_json(cls, data: dict) -> "CoefficientVector":
        return cls(tuple((int(b), int(v)) for b, v in data["entries"]), int(data["root"]),
                   int(data["depth"]), int(data["n_bits"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def extract_coefficients(tree: ComputationalTree, h, step: float = 1e-6,
                         max_residual: float = 1e-3, chunk: int = 64) -> CoefficientVector:
    """Slopes of the root output by one-sided differences, rounded to integers.

    Raises :class:`DegenerateTie` when the forward and backward slopes of some
    bit disagree or are not within ``max_residual`` of an integer, i.e. the
    probe sits on a min-selection tie and the local hyperplane is ambiguous.
    """
    h = np.asarray(as_vector(h), dtype=np.float64)
    bits = tree.bits()
    base = evaluate(tree, h)
    fwd = np.empty(bits.size)
    bwd = np.empty(bits.size)
    for lo in range(0, bits.size, chunk):
        sel = bits[lo:lo + chunk]
        rows = np.arange(sel.size)
        batch = np.tile(h, (sel.size, 1))
        batch[rows, sel] += step
        fwd[lo:lo + chunk] = (evaluate(tree, batch) - base) / step
        batch[rows, sel] -= 2 * step
        bwd[lo:lo + chunk] = (base - evaluate(tree, batch)) / step
    rounded = np.rint(fwd)
    residual = np.maximum(np.abs(fwd - rounded), np.abs(bwd - rounded))
    if residual.max(initial=0.0) >= max_residual:
        i = int(np.argmax(residual))
        raise DegenerateTie(
            f"bit {int(bits[i])} has slopes {bwd[i]:.6f} (backward) and {fwd[i]:.6f} (forward); "
            f"the probe sits on a min-selection tie (root {tree.root_bit}, depth {tree.depth})")
    entries = tuple((int(b), int(v)) for b, v in zip(bits, rounded) if v != 0)
    return CoefficientVector(entries, tree.root_bit, tree.depth, tree.graph.n_bits)


def _sums(c) -> tuple[float, float, np.ndarray]:
    n = c.dense() if isinstance(c, CoefficientVector) else np.asarray(c, dtype=np.int64)
    total, total_sq = float(n.sum()), float((n * n).sum())
    if total_sq == 0:
        raise ZeroCoefficients("coefficient vector is identically zero")
    return total, total_sq, n


def ct_length_sq(c) -> float:
    """``(sum n)**2 / sum(n**2)``."""
    total, total_sq, _ = _sums(c)
    return total * total / total_sq


def projected_instanton(c) -> ChannelOutput:
    """Closest point to all-ones on the hyperplane ``sum(n_i * x_i) = 0``."""
    total, total_sq, n = _sums(c)
    return ChannelOutput(1.0 - n * (total / total_sq))


def one_iteration_configuration(g: TannerGraph, root: int) -> ChannelOutput:
    """Single-iteration instanton at ``root``: noise 1 on the root and on the first
    other bit of each adjacent check, i.e. ``x = 0`` there.

    For bit degree ``d_v`` and girth at least 6 its length is ``d_v + 1``.
    """
    x = np.ones(g.n_bits)
    x[root] = 0.0
    for c in g.bit_neighbors[root]:
        other = next(b for b in g.check_neighbors[c] if b != root)
        x[other] = 0.0
    return ChannelOutput(x)


def probe_point(out, offset: float = 1e-4) -> np.ndarray:
    """Push a surface point radially into the failure region by ``1 + offset``."""
    noise = 1.0 - as_vector(out)
    return 1.0 - (1.0 + offset) * noise
