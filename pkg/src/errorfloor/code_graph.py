"""Tanner graphs: construction, alist I/O and GF(2) rank.

Internal indices are 0-based everywhere; the alist format is 1-based and the
conversion happens only inside :func:`parse_alist` / :func:`write_alist`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegreeMismatch,
    InconsistentAdjacency,
    IndexOutOfRange,
    InvalidGraph,
    MalformedHeader,
    NonPrimeParameter,
)


class EdgeLayout(NamedTuple):
    """Flat edge arrays consumed by the compiled decoder kernels.

    Edges are stored bit-major: the edges of bit ``i`` occupy
    ``bit_ptr[i]:bit_ptr[i + 1]`` in the order of ``bit_neighbors[i]``.
    ``chk_edge[chk_ptr[c]:chk_ptr[c + 1]]`` lists the positions of check
    ``c``'s edges in that bit-major numbering, in ``check_neighbors[c]`` order.
    """

    bit_ptr: np.ndarray
    edge_check: np.ndarray
    chk_ptr: np.ndarray
    chk_edge: np.ndarray


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite bit/check adjacency of a binary LDPC code. Immutable."""

    bit_neighbors: tuple[tuple[int, ...], ...]
    check_neighbors: tuple[tuple[int, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        bits = tuple(tuple(int(c) for c in row) for row in self.bit_neighbors)
        checks = tuple(tuple(int(b) for b in row) for row in self.check_neighbors)
        object.__setattr__(self, "bit_neighbors", bits)
        object.__setattr__(self, "check_neighbors", checks)
        _validate(bits, checks)

    @classmethod
    def from_check_lists(cls, check_neighbors: Sequence[Sequence[int]], n_bits: int,
                         name: str = "") -> "TannerGraph":
        """Build a graph from per-check bit lists; bit lists follow ascending check order."""
        bits: list[list[int]] = [[] for _ in range(n_bits)]
        for c, row in enumerate(check_neighbors):
            for b in row:
                if not 0 <= b < n_bits:
                    raise InvalidGraph(f"check {c} references bit {b} outside [0, {n_bits})")
                bits[b].append(c)
        return cls(tuple(map(tuple, bits)), tuple(map(tuple, check_neighbors)), name)

    @classmethod
    def from_parity_check(cls, H, name: str = "") -> "TannerGraph":
        H = np.asarray(H)
        if H.ndim != 2:
            raise InvalidGraph("parity-check matrix must be two-dimensional")
        checks = [tuple(int(b) for b in np.flatnonzero(row)) for row in H]
        return cls.from_check_lists(checks, H.shape[1], name)

    @property
    def n_bits(self) -> int:
        return len(self.bit_neighbors)

    @property
    def n_checks(self) -> int:
        return len(self.check_neighbors)

    @property
    def n_edges(self) -> int:
        return sum(len(row) for row in self.bit_neighbors)

    @cached_property
    def bit_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.bit_neighbors], dtype=np.int64)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.check_neighbors], dtype=np.int64)

    def regularity(self) -> tuple[int, int] | None:
        """Return ``(d_v, d_c)`` if every bit and every check share one degree."""
        dv, dc = set(self.bit_degrees.tolist()), set(self.check_degrees.tolist())
        if len(dv) == 1 and len(dc) == 1:
            return dv.pop(), dc.pop()
        return None

    def parity_check_matrix(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_bits), dtype=np.uint8)
        for c, row in enumerate(self.check_neighbors):
            H[c, list(row)] = 1
        return H

    @cached_property
    def layout(self) -> EdgeLayout:
        bit_ptr = np.zeros(self.n_bits + 1, dtype=np.int64)
        np.cumsum(self.bit_degrees, out=bit_ptr[1:])
        edge_check = np.fromiter((c for row in self.bit_neighbors for c in row),
                                 dtype=np.int64, count=int(bit_ptr[-1]))
        position = {}
        for i, row in enumerate(self.bit_neighbors):
            for k, c in enumerate(row):
                position[(i, c)] = bit_ptr[i] + k
        chk_ptr = np.zeros(self.n_checks + 1, dtype=np.int64)
        np.cumsum(self.check_degrees, out=chk_ptr[1:])
        chk_edge = np.fromiter((position[(b, c)] for c, row in enumerate(self.check_neighbors)
                                for b in row), dtype=np.int64, count=int(chk_ptr[-1]))
        return EdgeLayout(bit_ptr, edge_check, chk_ptr, chk_edge)

    def digest(self) -> str:
        """Stable SHA-256 of the adjacency, used in provenance blocks."""
        return hashlib.sha256(write_alist(self).encode()).hexdigest()


def _validate(bits, checks):
    if not bits or not checks:
        raise InvalidGraph("a Tanner graph needs at least one bit and one check")
    n, m = len(bits), len(checks)
    bit_edges = set()
    for i, row in enumerate(bits):
        for c in row:
            if not 0 <= c < m:
                raise InvalidGraph(f"bit {i} references check {c} outside [0, {m})")
            if (i, c) in bit_edges:
                raise InvalidGraph(f"duplicate edge between bit {i} and check {c}")
            bit_edges.add((i, c))
    check_edges = set()
    for c, row in enumerate(checks):
        for i in row:
            if not 0 <= i < n:
                raise InvalidGraph(f"check {c} references bit {i} outside [0, {n})")
            if (i, c) in check_edges:
                raise InvalidGraph(f"duplicate edge between bit {i} and check {c}")
            check_edges.add((i, c))
    if bit_edges != check_edges:
        raise InvalidGraph("bit and check adjacency lists disagree")


# --------------------------------------------------------------------------
# Constructions
# --------------------------------------------------------------------------

def construct_tanner_155() -> TannerGraph:
    """The (155, 64, 20) quasi-cyclic code of Tanner.

    A 3 x 5 array of 31 x 31 circulant permutation matrices with shift
    ``5**l * 2**j mod 31``; 2 has order 5 and 5 has order 3 modulo 31.
    """
    p = 31
    checks = []
    for l in range(3):
        for r in range(p):
            row = []
            for j in range(5):
                shift = pow(5, l, p) * pow(2, j, p) % p
                row.append(j * p + (r + shift) % p)
            checks.append(tuple(row))
    return TannerGraph.from_check_lists(checks, 5 * p, name="tanner155")


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(p ** 0.5) + 1))


# Right multipliers for the two bit copies; each set gives girth 8 and a
# full-rank parity-check matrix for p = 7.
_MARGULIS_WORDS = (("I", "A", "BB"), ("I", "Ab", "bA"))


def construct_margulis(p: int) -> TannerGraph:
    """(3, 6)-regular Margulis-type code over SL2(Z_p).

    Checks are the p(p^2 - 1) elements of SL2(Z_p); bits are two copies of the
    group. Check ``g`` is joined to ``(g*w, copy)`` for each word ``w`` of the
    generators A = [[1, 2], [0, 1]] and B = [[1, 0], [2, 1]] listed in
    ``_MARGULIS_WORDS`` (lower case denotes the inverse).
    """
    if not isinstance(p, (int, np.integer)) or not _is_prime(int(p)) or p < 5:
        raise NonPrimeParameter(f"Margulis construction needs a prime p >= 5, got {p!r}")
    p = int(p)
    a, b, c, d = np.meshgrid(*[np.arange(p)] * 4, indexing="ij")
    det_one = (a * d - b * c) % p == 1
    elems = np.stack([a[det_one], b[det_one], c[det_one], d[det_one]], axis=1)
    m = len(elems)

    def code(e):
        return ((e[:, 0] * p + e[:, 1]) * p + e[:, 2]) * p + e[:, 3]

    lookup = np.full(p ** 4, -1, dtype=np.int64)
    lookup[code(elems)] = np.arange(m)

    gens = {"A": np.array([[1, 2], [0, 1]]), "B": np.array([[1, 0], [2, 1]])}
    gens["a"] = np.array([[1, p - 2], [0, 1]])
    gens["b"] = np.array([[1, 0], [p - 2, 1]])

    def word_matrix(word):
        w = np.eye(2, dtype=np.int64)
        for ch in word:
            if ch != "I":
                w = w @ gens[ch] % p
        return w

    def right_multiply(w):
        g = elems.reshape(m, 2, 2)
        prod = np.einsum("kij,jl->kil", g, w) % p
        return lookup[code(prod.reshape(m, 4))]

    columns = []
    for copy, words in enumerate(_MARGULIS_WORDS):
        for word in words:
            columns.append(right_multiply(word_matrix(word)) + copy * m)
    table = np.sort(np.stack(columns, axis=1), axis=1)
    checks = [tuple(int(v) for v in row) for row in table]
    return TannerGraph.from_check_lists(checks, 2 * m, name=f"margulis{p}")


# --------------------------------------------------------------------------
# alist I/O
# --------------------------------------------------------------------------

def _ints(line: str, what: str) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError as exc:
        raise MalformedHeader(f"non-integer token in {what}: {line!r}") from exc


def parse_alist(text: str | bytes) -> TannerGraph:
    """Parse MacKay's alist format (1-based, zero padding ignored)."""
    if isinstance(text, bytes):
        text = text.decode()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 4:
        raise MalformedHeader("alist needs at least four header lines")
    head = _ints(lines[0], "line 1")
    if len(head) != 2 or min(head) < 1:
        raise MalformedHeader(f"line 1 must hold 'N M' with N, M >= 1, got {lines[0]!r}")
    n, m = head
    maxes = _ints(lines[1], "line 2")
    if len(maxes) != 2:
        raise MalformedHeader(f"line 2 must hold two maximum degrees, got {lines[1]!r}")
    bit_deg = _ints(lines[2], "line 3")
    chk_deg = _ints(lines[3], "line 4")
    if len(bit_deg) != n or len(chk_deg) != m:
        raise MalformedHeader("degree lines do not match N and M")
    if max(bit_deg) != maxes[0] or max(chk_deg) != maxes[1]:
        raise MalformedHeader("maximum degrees on line 2 disagree with lines 3 and 4")
    body = lines[4:]
    if len(body) < n + m:
        raise DegreeMismatch(f"expected {n + m} adjacency lines, found {len(body)}")

    def read_block(rows, degrees, bound, kind):
        out = []
        for idx, (line, deg) in enumerate(zip(rows, degrees)):
            entries = [v for v in _ints(line, f"{kind} {idx + 1}") if v != 0]
            if len(entries) != deg:
                raise DegreeMismatch(
                    f"{kind} {idx + 1} declares degree {deg} but lists {len(entries)} entries")
            for v in entries:
                if not 1 <= v <= bound:
                    raise IndexOutOfRange(f"{kind} {idx + 1} references index {v} outside [1, {bound}]")
            if len(set(entries)) != len(entries):
                raise InconsistentAdjacency(f"{kind} {idx + 1} lists a neighbour twice")
            out.append(tuple(v - 1 for v in entries))
        return out

    bits = read_block(body[:n], bit_deg, m, "bit")
    checks = read_block(body[n:n + m], chk_deg, n, "check")
    from_bits = {(i, c) for i, row in enumerate(bits) for c in row}
    from_checks = {(i, c) for c, row in enumerate(checks) for i in row}
    if from_bits != from_checks:
        raise InconsistentAdjacency("bit and check sections describe different edge sets")
    return TannerGraph(tuple(bits), tuple(checks))


def write_alist(g: TannerGraph) -> str:
    """Canonical alist text; rows are zero-padded to the maximum degree."""
    dv, dc = int(g.bit_degrees.max()), int(g.check_degrees.max())

    def row(entries, width):
        vals = [v + 1 for v in entries] + [0] * (width - len(entries))
        return " ".join(map(str, vals))

    out = [f"{g.n_bits} {g.n_checks}", f"{dv} {dc}",
           " ".join(map(str, g.bit_degrees.tolist())),
           " ".join(map(str, g.check_degrees.tolist()))]
    out += [row(r, dv) for r in g.bit_neighbors]
    out += [row(r, dc) for r in g.check_neighbors]
    return "\n".join(out) + "\n"


def read_alist(path: str | Path) -> TannerGraph:
    path = Path(path)
    return replace(parse_alist(path.read_text()), name=path.stem)


# --------------------------------------------------------------------------
# GF(2) rank
# --------------------------------------------------------------------------

def gf2_rank(g: TannerGraph) -> int:
    """Rank of the parity-check matrix over GF(2).

    Rows are packed into Python integers and reduced against a basis keyed by
    leading bit, which keeps the 1320 x 2640 Margulis matrix well under a second.
    """
    basis: dict[int, int] = {}
    for row in g.check_neighbors:
        v = 0
        for b in row:
            v |= 1 << b
        while v:
            lead = v.bit_length() - 1
            pivot = basis.get(lead)
            if pivot is None:
                basis[lead] = v
                break
            v ^= pivot
    return len(basis)


# --------------------------------------------------------------------------
# Named codes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CodeSpec:
    """A code together with its derived dimension and known metadata.

    ``d_min`` is configuration data taken from the literature and is never
    computed here.
    """

    name: str
    construction: str
    graph: TannerGraph = field(repr=False)
    k: int
    d_min: int | None = None
    note: str = ""

    @property
    def n(self) -> int:
        return self.graph.n_bits

    @property
    def m(self) -> int:
        return self.graph.n_checks


KNOWN_DISTANCES = {"tanner155": 20}
NOTES = {"margulis7": "minimum distance at most 14: information-set search finds weight-14 codewords",
         "margulis11": "minimum distance unknown"}


def load_code(spec: str) -> CodeSpec:
    """Resolve ``tanner155``, ``margulis:P`` or ``alist:PATH`` to a :class:`CodeSpec`."""
    kind, _, arg = spec.partition(":")
    if kind == "tanner155" and not arg:
        g = construct_tanner_155()
    elif kind == "margulis":
        try:
            p = int(arg)
        except ValueError as exc:
            raise NonPrimeParameter(f"bad Margulis prime {arg!r}") from exc
        g = construct_margulis(p)
    elif kind == "alist" and arg:
        g = read_alist(arg)
    else:
        raise ValueError(f"unknown code spec {spec!r}; use tanner155, margulis:P or alist:PATH")
    k = g.n_bits - gf2_rank(g)
    return CodeSpec(name=g.name, construction=spec, graph=g, k=k,
                    d_min=KNOWN_DISTANCES.get(g.name), note=NOTES.get(g.name, ""))
