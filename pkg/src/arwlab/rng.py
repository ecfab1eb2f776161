"""Deterministic 64-bit mixing used for instruction fields and seed derivation.

Every random draw in the package is a pure function of a master seed plus
integer coordinates (site index, instruction index, replica index, ...).
The mixer is the splitmix64 finalizer; streams are advanced by the usual
golden-ratio increment.  All arithmetic is modulo 2**64 and is implemented
identically in pure Python, vectorized numpy, and the numba kernels, so
results do not depend on which path ran.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive(seed: int, *indices: int) -> int:
    """Derive a child seed from a seed and one or more non-negative indices.

    Used for per-site instruction streams and per-replica experiment seeds.
    Pure and order-sensitive: derive(s, a, b) != derive(s, b, a) in general.
    """
    z = seed & MASK64
    for k in indices:
        z = mix64((z + mix64(((k + 1) * GOLDEN) & MASK64)) & MASK64)
    return z


def stream_value(stream: int, j: int) -> int:
    """j-th output of the splitmix64 stream seeded at `stream`."""
    return mix64((stream + ((j + 1) * GOLDEN & MASK64)) & MASK64)


def uniform01(u: int) -> float:
    """Map a 64-bit word to (0, 1]; never returns 0, so log(u) is safe."""
    return (u + 0.5) / 2.0**64


# vectorized variants (uint64 throughout; numpy wraps modulo 2**64)

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


def mix64_array(z):
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64)
        z = (z ^ (z >> _U30)) * _U_M1
        z = (z ^ (z >> _U27)) * _U_M2
        return z ^ (z >> _U31)


def stream_values(stream, j):
    """Vectorized stream_value; `stream` and `j` broadcast against each other."""
    with np.errstate(over="ignore"):
        stream = np.asarray(stream, dtype=np.uint64)
        j = np.asarray(j, dtype=np.uint64)
        return mix64_array(stream + (j + np.uint64(1)) * _U_GOLDEN)


def derive_array(seed: int, indices) -> np.ndarray:
    """Vectorized derive(seed, k) over an array of indices."""
    with np.errstate(over="ignore"):
        idx = np.asarray(indices, dtype=np.uint64)
        inner = mix64_array((idx + np.uint64(1)) * _U_GOLDEN)
        return mix64_array(np.uint64(seed & MASK64) + inner)
