from __future__ import annotations

import numpy as np
import pytest

from errorfloor.channel import SNRPoint, sample_frames
from errorfloor.decoder import (DecoderConfig, batch_failures, decision_values, decode, decode_trace,
                                fails, surface_radius, syndrome)
from errorfloor.errors import ShapeMismatch


def _reference_min_sum(g, h, n_it):
    """Dictionary-based flooding min-sum, written independently of the kernels."""
    nu = {(c, i): 0.0 for c, bits in enumerate(g.check_neighbors) for i in bits}
    for _ in range(n_it):
        mu = {}
        for i, checks in enumerate(g.bit_neighbors):
            for c in checks:
                s = h[i]
                for c2 in checks:
                    if c2 != c:
                        s += nu[(c2, i)]
                mu[(i, c)] = s
        for c, bits in enumerate(g.check_neighbors):
            for i in bits:
                others = [mu[(j, c)] for j in bits if j != i]
                sign = -1.0 if sum(v < 0 for v in others) % 2 else 1.0
                nu[(c, i)] = sign * min(abs(v) for v in others)
    return np.array([h[i] + sum(nu[(c, i)] for c in checks) for i, checks in enumerate(g.bit_neighbors)])


def test_matches_reference_implementation(tanner):
    X = sample_frames(155, SNRPoint.from_db(1.0), 3, 0, 5)
    for x in X:
        for n_it in (0, 1, 3):
            np.testing.assert_allclose(decision_values(tanner, x, n_it),
                                       _reference_min_sum(tanner, x, n_it), rtol=1e-12, atol=1e-12)


def test_zero_iterations_is_symbol_decision(tanner):
    x = np.ones(155)
    x[[3, 40]] = -0.2
    out = decode(tanner, x, 0)
    assert out.erroneous_bits == (3, 40)
    assert out.failed and not out.syndrome_ok


def test_noiseless_frame_decodes(tanner, margulis7):
    for g in (tanner, margulis7):
        out = decode(g, np.ones(g.n_bits), 8)
        assert not out.failed and out.syndrome_ok


def test_single_flip_is_corrected(tanner):
    x = np.ones(155)
    x[17] = -0.5
    assert not decode(tanner, x, 2).failed


def test_exact_zero_counts_as_error(tanner):
    x = np.ones(155)
    x[0] = 0.0
    assert decode(tanner, x, 0).failed
    assert not decode(tanner, x, DecoderConfig(0, tie_is_error=False)).failed


def test_trace_ends_with_decision(tanner):
    x = sample_frames(155, SNRPoint.from_db(0.0), 1, 0, 1)[0]
    trace = decode_trace(tanner, x, 6)
    assert trace.shape == (6, 155)
    assert np.array_equal(trace[-1], decode(tanner, x, 6).hard)
    assert np.array_equal(trace[2], decode(tanner, x, 3).hard)


def test_batch_agrees_with_single(tanner):
    X = sample_frames(155, SNRPoint.from_db(1.5), 8, 0, 200)
    flags = batch_failures(tanner, X, 4)
    assert flags.tolist() == [fails(tanner, x, 4) for x in X]
    assert 0 < flags.sum() < 200


def test_syndrome(tanner):
    hard = np.ones(155, dtype=np.int8)
    assert syndrome(tanner, hard)
    hard[0] = -1
    assert not syndrome(tanner, hard)
    with pytest.raises(ShapeMismatch):
        syndrome(tanner, hard[:10])


def test_shape_checks(tanner):
    with pytest.raises(ShapeMismatch):
        decode(tanner, np.ones(10), 1)
    with pytest.raises(ShapeMismatch):
        batch_failures(tanner, np.ones((2, 10)), 1)


def test_iteration_bounds():
    with pytest.raises(ValueError):
        DecoderConfig(-1)
    with pytest.raises(ValueError):
        DecoderConfig(5000)


def test_surface_radius_sandwich(tanner):
    rng = np.random.default_rng(2)
    tol = 1e-7
    for _ in range(20):
        u = rng.random(155)
        u /= np.linalg.norm(u)
        r = surface_radius(tanner, u, 4, tol=tol)
        assert np.isfinite(r)
        assert fails(tanner, 1 - r * u, 4)
        assert not fails(tanner, 1 - r * (1 - 10 * tol) * u, 4)


def test_surface_radius_infinite_when_nothing_fails(tanner):
    u = -np.ones(155) / np.sqrt(155)
    assert surface_radius(tanner, u, 4) == np.inf
