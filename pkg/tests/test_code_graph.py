from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errorfloor.code_graph import (TannerGraph, construct_margulis, gf2_rank, load_code,
                                   parse_alist, read_alist, write_alist)
from errorfloor.errors import (DegreeMismatch, InconsistentAdjacency, IndexOutOfRange, InvalidGraph,
                               MalformedHeader, NonPrimeParameter)

from helpers import girth, projective_plane_16


def test_tanner_parameters(tanner):
    assert (tanner.n_bits, tanner.n_checks) == (155, 93)
    assert tanner.regularity() == (3, 5)
    assert gf2_rank(tanner) == 91
    assert girth(tanner) == 8


def test_margulis_parameters(margulis7):
    assert (margulis7.n_bits, margulis7.n_checks) == (672, 336)
    assert margulis7.regularity() == (3, 6)
    assert gf2_rank(margulis7) == 336


def test_margulis_11_sizes():
    g = construct_margulis(11)
    assert (g.n_bits, g.n_checks) == (2640, 1320)
    assert g.regularity() == (3, 6)


@pytest.mark.parametrize("p", [1, 4, 9, 15])
def test_margulis_rejects_non_prime(p):
    with pytest.raises(NonPrimeParameter):
        construct_margulis(p)


def test_load_code_reports_known_distance():
    spec = load_code("tanner155")
    assert (spec.n, spec.m, spec.k, spec.d_min) == (155, 93, 64, 20)
    assert load_code("margulis:11").note


def test_load_code_unknown_spec():
    with pytest.raises(ValueError):
        load_code("ldpc:7")


def test_adjacency_views_agree(tanner):
    H = tanner.parity_check_matrix()
    for c, bits in enumerate(tanner.check_neighbors):
        assert list(np.flatnonzero(H[c])) == sorted(bits)
    lay = tanner.layout
    assert lay.bit_ptr[-1] == tanner.n_edges == 465
    assert np.array_equal(np.sort(lay.chk_edge), np.arange(465))


def test_duplicate_edge_rejected():
    with pytest.raises(InvalidGraph):
        TannerGraph.from_check_lists([[0, 1, 1]], 2)


def test_disagreeing_views_rejected():
    with pytest.raises(InvalidGraph):
        TannerGraph(bit_neighbors=((0,), (0,)), check_neighbors=((0,),))


def test_digest_tracks_structure(tanner):
    assert tanner.digest() == load_code("tanner155").graph.digest()
    assert tanner.digest() != construct_margulis(7).digest()


def test_projective_plane_helper():
    g = projective_plane_16()
    assert (g.n_bits, g.n_checks) == (273, 273)
    assert g.regularity() == (17, 17)


# --------------------------------------------------------------------------
# alist
# --------------------------------------------------------------------------

@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 12))
    m = draw(st.integers(1, 8))
    rows = [sorted(draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))) for _ in range(m)]
    covered = set().union(*map(set, rows))
    rows.append(sorted(set(range(n)) - covered) or [0])
    return TannerGraph.from_check_lists(rows, n)


@given(small_graphs())
@settings(max_examples=150, deadline=None)
def test_alist_round_trip_property(g):
    back = parse_alist(write_alist(g))
    assert back == g
    assert write_alist(back) == write_alist(g)


def test_alist_round_trip_named_codes(tanner, margulis7, tmp_path):
    for g in (tanner, margulis7):
        path = tmp_path / f"{g.name}.alist"
        path.write_text(write_alist(g))
        back = read_alist(path)
        assert back == g
        assert back.name == g.name


GOOD = """3 2
2 2
1 2 1
2 2
1 0
1 2
2 0
1 2
2 3
"""


def test_alist_tolerates_zero_padding():
    g = parse_alist(GOOD)
    assert g.n_bits == 3
    assert [sorted(c) for c in g.check_neighbors] == [[0, 1], [1, 2]]


@pytest.mark.parametrize("text, error", [
    ("3\n", MalformedHeader),
    ("x y\n", MalformedHeader),
    ("3 2\n2 2\n1 1\n", MalformedHeader),
    (GOOD.replace("1 2\n2 3\n", "1 0\n2 3\n"), DegreeMismatch),
    (GOOD.replace("1 2\n2 3\n", "1 2\n"), DegreeMismatch),
    (GOOD.replace("2 3\n", "2 4\n"), IndexOutOfRange),
    (GOOD.replace("1 0\n1 2\n2 0\n", "2 0\n1 2\n1 0\n"), InconsistentAdjacency),
])
def test_alist_errors(text, error):
    with pytest.raises(error):
        parse_alist(text)


def test_gf2_rank_matches_dense_elimination():
    rng = np.random.default_rng(5)
    for _ in range(20):
        H = (rng.random((12, 20)) < 0.3).astype(np.uint8)
        H[:, H.sum(axis=0) == 0] = 0
        H[0, H.sum(axis=0) == 0] = 1
        g = TannerGraph.from_parity_check(H)
        assert gf2_rank(g) == _dense_rank(H)


def _dense_rank(H):
    H = H.copy() % 2
    rank = 0
    for col in range(H.shape[1]):
        rows = np.flatnonzero(H[rank:, col])
        if rows.size == 0:
            continue
        r = rank + rows[0]
        H[[rank, r]] = H[[r, rank]]
        for rr in np.flatnonzero(H[:, col]):
            if rr != rank:
                H[rr] ^= H[rank]
        rank += 1
        if rank == H.shape[0]:
            break
    return rank
