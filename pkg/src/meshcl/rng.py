"""Deterministic seed derivation.

Everything stochastic in this package draws from ``numpy.random.Generator``
instances whose seeds are derived from a single user-supplied 64-bit seed via
:func:`mix_seed`.  Deriving per-mesh / per-epoch / per-view seeds (rather than
sharing one sequential stream) keeps results independent of iteration order
and safe to parallelise later.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

# splitmix64 constants (Steele, Lea & Flood; also used by java.util.SplittableRandom)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _splitmix64(x: int) -> int:
    x = (x + _GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, *stream: int) -> int:
    """Mix ``seed`` with any number of integer indices into a new 64-bit seed.

    Each index is folded in with one splitmix64 step, so ``mix_seed(s, a, b)``
    and ``mix_seed(s, b, a)`` differ, as do ``mix_seed(s, a)`` and
    ``mix_seed(s, a, 0)``.
    """
    x = seed & _MASK64
    for ix in stream:
        x = _splitmix64(x ^ (ix & _MASK64))
    # one final scramble so (seed,) and seed itself do not collide trivially
    return _splitmix64(x)
