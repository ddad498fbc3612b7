"""Seedable PRNG used by all builders and experiments.

xoshiro256++ generates the raw 64-bit stream; splitmix64 seeds it and mixes
label-derived substream seeds so that each weight matrix draws from its own
stream (layer weights do not depend on generation order). Normal deviates
come from Box-Muller applied to consecutive uniform pairs.

The generator runs LANES independent streams in lockstep so that bulk
generation is vectorised; output for a given (seed, shape) is a fixed
function of those arguments alone.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_MASK = _U64(0xFFFFFFFFFFFFFFFF)

LANES = 64

_SM_GAMMA = _U64(0x9E3779B97F4A7C15)
_SM_M1 = _U64(0xBF58476D1CE4E5B9)
_SM_M2 = _U64(0x94D049BB133111EB)


def _splitmix64_next(state: np.ndarray) -> np.ndarray:
    state += _SM_GAMMA
    z = state.copy()
    z = (z ^ (z >> _U64(30))) * _SM_M1
    z = (z ^ (z >> _U64(27))) * _SM_M2
    return z ^ (z >> _U64(31))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << _U64(k)) | (x >> _U64(64 - k))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a; stable label hashing independent of PYTHONHASHSEED."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def derive_seed(seed: int, label: str) -> int:
    """Substream seed for (seed, label); distinct labels give independent streams."""
    state = np.array([(_U64(seed & 0xFFFFFFFFFFFFFFFF) ^ _U64(fnv1a64(label.encode())))])
    return int(_splitmix64_next(state)[0])


class Xoshiro256pp:
    """Vectorised xoshiro256++ running LANES parallel streams."""

    def __init__(self, seed: int):
        state = np.full(LANES, _U64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        state += np.arange(LANES, dtype=np.uint64) * _U64(0x3C6EF372FE94F82A)
        self._s = np.stack([_splitmix64_next(state) for _ in range(4)])

    def next_block(self) -> np.ndarray:
        """One uint64 per lane."""
        s0, s1, s2, s3 = self._s
        out = _rotl(s0 + s3, 23) + s0
        t = s1 << _U64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._s[0], self._s[1], self._s[2] = s0, s1, s2
        self._s[3] = _rotl(s3, 45)
        return out

    def uint64(self, n: int) -> np.ndarray:
        blocks = -(-n // LANES)
        out = np.empty((blocks, LANES), dtype=np.uint64)
        for i in range(blocks):
            out[i] = self.next_block()
        return out.reshape(-1)[:n]

    def uniform(self, n: int) -> np.ndarray:
        """Uniforms in the open interval (0, 1)."""
        bits = self.uint64(n)
        return (bits >> _U64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def standard_normal(shape, seed: int, label: str = "") -> np.ndarray:
    """Deterministic standard-normal array for (seed, label, shape)."""
    if label:
        seed = derive_seed(seed, label)
    size = int(np.prod(shape)) if shape else 1
    gen = Xoshiro256pp(seed)
    pairs = -(-size // 2)
    u = gen.uniform(2 * pairs)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:size].reshape(shape)


def uniform(shape, seed: int, label: str = "") -> np.ndarray:
    """Deterministic uniforms in (0, 1)."""
    if label:
        seed = derive_seed(seed, label)
    size = int(np.prod(shape)) if shape else 1
    return Xoshiro256pp(seed).uniform(size).reshape(shape)
