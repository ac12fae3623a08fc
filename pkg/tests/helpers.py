"""Test-only code constructions and brute-force oracles."""

from __future__ import annotations

from collections import deque

import numpy as np

from errorfloor.code_graph import TannerGraph


def gf16_mul(a: int, b: int) -> int:
    """GF(16) product modulo x^4 + x + 1."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x10:
            a ^= 0x13
    return r


def projective_plane_16() -> TannerGraph:
    """Point-line incidence code of PG(2, 16): 273 bits, 273 checks, all degrees 17."""
    q = 16
    points = [(1, a, b) for a in range(q) for b in range(q)]
    points += [(0, 1, a) for a in range(q)] + [(0, 0, 1)]

    def dot(u, v):
        s = 0
        for x, y in zip(u, v):
            s ^= gf16_mul(x, y)
        return s

    checks = [[i for i, p in enumerate(points) if dot(line, p) == 0] for line in points]
    return TannerGraph.from_check_lists(checks, len(points), name="pg2_16")


def girth(g: TannerGraph) -> int:
    """Length of the shortest cycle, by BFS from every bit."""
    best = np.inf
    n = g.n_bits
    for root in range(n):
        dist = {("b", root): 0}
        parent = {("b", root): None}
        queue = deque([("b", root)])
        while queue:
            node = queue.popleft()
            kind, idx = node
            nbrs = g.bit_neighbors[idx] if kind == "b" else g.check_neighbors[idx]
            other = "c" if kind == "b" else "b"
            for j in nbrs:
                nxt = (other, int(j))
                if nxt == parent[node]:
                    continue
                if nxt in dist:
                    best = min(best, dist[node] + dist[nxt] + 1)
                else:
                    dist[nxt] = dist[node] + 1
                    parent[nxt] = node
                    queue.append(nxt)
            if 2 * dist[node] > best:
                break
    return int(best)


def nullspace_vector(g: TannerGraph, rng: np.random.Generator) -> np.ndarray:
    """A random non-zero codeword (0/1 vector) via GF(2) elimination."""
    H = g.parity_check_matrix().astype(np.uint8) % 2
    m, n = H.shape
    H = H.copy()
    pivots = []
    row = 0
    for col in range(n):
        hit = np.flatnonzero(H[row:, col])
        if hit.size == 0:
            continue
        r = row + hit[0]
        H[[row, r]] = H[[r, row]]
        for rr in np.flatnonzero(H[:, col]):
            if rr != row:
                H[rr] ^= H[row]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in set(pivots)]
    while True:
        x = np.zeros(n, dtype=np.uint8)
        x[free] = rng.integers(0, 2, len(free))
        if x.any():
            break
    for r, c in enumerate(pivots):
        x[c] = (H[r, free] @ x[free]) % 2
    return x
