"""AWGN channel for the all-(+1) codeword.

The noise standard deviation is ``1/s`` around a unit signal and the dB scale
is ``20*log10(s)``; there is no rate normalisation. Log-likelihoods are
measured in units of ``s**2`` so that ``h = x``.

Sampling is counter-addressed: frame ``f`` of stream ``seed`` always reads the
same Philox blocks, so any partition of a frame range reproduces the same
vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSNR

_STREAM_CHANNEL = 0x43484E4C  # domain tag in the second Philox key word


@dataclass(frozen=True)
class SNRPoint:
    """Linear amplitude SNR ``s``."""

    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (s > 0 and math.isfinite(s)):
            raise NonPositiveSNR(f"SNR must be positive and finite, got {self.s!r}")
        object.__setattr__(self, "s", s)

    @classmethod
    def from_db(cls, snr_db: float) -> "SNRPoint":
        return cls(10.0 ** (snr_db / 20.0))

    @classmethod
    def from_s_squared(cls, s_squared: float) -> "SNRPoint":
        if s_squared <= 0:
            raise NonPositiveSNR(f"s^2 must be positive, got {s_squared!r}")
        return cls(math.sqrt(s_squared))

    @property
    def s_squared(self) -> float:
        return self.s * self.s

    @property
    def snr_db(self) -> float:
        return 20.0 * math.log10(self.s)


@dataclass(frozen=True, eq=False)
class ChannelOutput:
    """Received vector ``x``; the noise is ``1 - x``."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("channel output must be a non-empty vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("channel output has non-finite entries")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_noise(cls, noise) -> "ChannelOutput":
        return cls(1.0 - np.asarray(noise, dtype=np.float64))

    @property
    def noise(self) -> np.ndarray:
        return 1.0 - self.x

    def __len__(self):
        return self.x.size

    def __eq__(self, other):
        return isinstance(other, ChannelOutput) and np.array_equal(self.x, other.x)


def as_vector(out) -> np.ndarray:
    """Accept a :class:`ChannelOutput` or any 1-d array-like."""
    if isinstance(out, ChannelOutput):
        return out.x
    return np.asarray(out, dtype=np.float64)


# --------------------------------------------------------------------------
# Counter-based Gaussian frames
# --------------------------------------------------------------------------

def _blocks_per_frame(n: int) -> int:
    words = n + (n & 1)
    return -(-words // 4)


def standard_normal_frames(seed: int, first_frame: int, n_frames: int, n: int) -> np.ndarray:
    """Standard normals for frames ``first_frame .. first_frame + n_frames - 1``.

    Each frame owns a fixed run of Philox-4x64 counter blocks keyed by
    ``(seed, tag)``; the words are turned into normals with Box-Muller so the
    consumption per frame is constant.
    """
    if n_frames <= 0:
        return np.empty((0, n))
    blocks = _blocks_per_frame(n)
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, _STREAM_CHANNEL], dtype=np.uint64)
    bitgen = np.random.Philox(key=key, counter=first_frame * blocks)
    raw = bitgen.random_raw(n_frames * blocks * 4).reshape(n_frames, blocks * 4)
    pairs = (n + 1) // 2
    hi = (raw[:, :2 * pairs] >> np.uint64(11)).astype(np.float64)
    u1 = (hi[:, 0::2] + 1.0) * 2.0 ** -53  # (0, 1]
    u2 = hi[:, 1::2] * 2.0 ** -53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty((n_frames, 2 * pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z[:, :n]


def sample_frames(n: int, snr: SNRPoint, seed: int, first_frame: int, n_frames: int) -> np.ndarray:
    """Received vectors ``x = 1 + g/s`` for a contiguous frame range, shape (frames, n)."""
    return 1.0 + standard_normal_frames(seed, first_frame, n_frames, n) / snr.s


def sample_output(n: int, snr: SNRPoint, rng_state: tuple[int, int] | int) -> ChannelOutput:
    """One channel output; ``rng_state`` is ``(seed, frame_index)`` or a bare seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not isinstance(snr, SNRPoint):
        snr = SNRPoint(snr)
    seed, frame = rng_state if isinstance(rng_state, tuple) else (rng_state, 0)
    return ChannelOutput(sample_frames(n, snr, seed, frame, 1)[0])


def derive_seed(master_seed: int, index: int) -> int:
    """Independent 64-bit seed for work item ``index`` of a master seed."""
    ss = np.random.SeedSequence([master_seed & 0xFFFFFFFFFFFFFFFF, index])
    return int(ss.generate_state(1, np.uint64)[0])


# --------------------------------------------------------------------------
# Metrics
# --------------------------------------------------------------------------

def llr(out) -> np.ndarray:
    """Log-likelihoods in units of ``s**2``; identical to the received vector."""
    return as_vector(out).copy()


def instanton_length_sq(out) -> float:
    """Squared length of the noise, ``sum((1 - x)**2)``."""
    noise = 1.0 - as_vector(out)
    return float(noise @ noise)


def fer_asymptote(l_sq: float, snr: SNRPoint) -> float:
    """High-SNR estimate ``exp(-l_sq * s**2 / 2)`` without volume prefactor."""
    if l_sq < 0:
        raise ValueError("l_sq must be non-negative")
    return math.exp(-l_sq * snr.s_squared / 2.0)
