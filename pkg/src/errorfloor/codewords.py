"""Low-weight codewords by Lee-Brickell information-set search.

Used to build codeword seeds and masks. Each trial puts the parity-check
matrix in systematic form on a random column order, then forms every sum of
at most ``p`` information columns; a codeword whose support meets the
information set in at most ``p`` positions is found exactly.
"""

from __future__ import annotations

import numpy as np

from .code_graph import TannerGraph


def _systematic(H: np.ndarray, order: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-reduce ``H[:, order]``; returns (reduced matrix, pivot columns, free columns)."""
    M = H[:, order].copy()
    m, n = M.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        hits = np.flatnonzero(M[row:, col])
        if hits.size == 0:
            continue
        r = row + hits[0]
        if r != row:
            M[[row, r]] = M[[r, row]]
        others = np.flatnonzero(M[:, col])
        others = others[others != row]
        M[others] ^= M[row]
        pivots.append(col)
        row += 1
    pivots = np.array(pivots, dtype=np.int64)
    free = np.setdiff1d(np.arange(n), pivots)
    return M[:row], pivots, free


def low_weight_codewords(g: TannerGraph, max_weight: int, trials: int = 50, p: int = 2,
                         seed: int = 0) -> list[tuple[int, ...]]:
    """Supports of distinct non-zero codewords of weight ``<= max_weight``, lightest first.

    ``p`` (1 or 2) is the number of information positions a found codeword may use.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    H = g.parity_check_matrix().astype(bool)
    rng = np.random.default_rng(seed)
    found: set[tuple[int, ...]] = set()

    def keep(order, info_cols, redundancy):
        cols = np.concatenate([info_cols, np.flatnonzero(redundancy)])
        found.add(tuple(sorted(int(c) for c in order[cols])))

    for _ in range(trials):
        order = rng.permutation(g.n_bits)
        M, pivots, free = _systematic(H, order)
        A = M[:, free]  # pivot bits of the codeword = A @ information bits
        to_pos = np.zeros(g.n_bits, dtype=bool)
        single = 1 + A.sum(axis=0)
        for i in np.flatnonzero(single <= max_weight):
            red = np.zeros(g.n_bits, dtype=bool)
            red[pivots] = A[:, i]
            keep(order, free[[i]], red)
        if p == 2:
            for i in range(free.size - 1):
                X = A[:, i:i + 1] ^ A[:, i + 1:]
                for j in np.flatnonzero(2 + X.sum(axis=0) <= max_weight):
                    red = to_pos.copy()
                    red[pivots] = X[:, j]
                    keep(order, free[[i, i + 1 + j]], red)
    return sorted(found, key=lambda s: (len(s), s))


def is_codeword(g: TannerGraph, support) -> bool:
    parity = np.zeros(g.n_checks, dtype=np.int64)
    lay = g.layout
    for b in support:
        parity[lay.edge_check[lay.bit_ptr[b]:lay.bit_ptr[b + 1]]] += 1
    return bool(np.all(parity % 2 == 0))
