"""Randomizations of point sets: digital shift, nested and linear scrambling.

All randomness is counter-based.  Coordinate j of replication v draws from
the stream ``derive_stream(master_seed, v, j)``; within a stream, distinct
uses are separated by xor-ing a fixed tag into the key before calling
:func:`qmcdep.kernels.prf`.  Nothing depends on call order or thread
scheduling.

Stream derivation, on 64-bit unsigned integers::

    h = mix64(master_seed ^ 0x6A09E667F3BCC909)
    h = mix64(h + (v + 1) * 0x9E3779B97F4A7C15)
    h = mix64(h ^ mix64((coordinate + 1) * 0xBB67AE8584CAA73B))
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import DomainError
from .numth import ModMatrix, is_prime
from .sequences import PointSet

__all__ = [
    "RandomizerSpec",
    "KINDS",
    "derive_stream",
    "digital_shift",
    "owen_scramble",
    "linear_scramble",
    "randomize",
    "shift_digits",
    "linear_matrix",
]

KINDS = ("digital_shift", "owen_scramble", "linear_scramble")

_M64 = (1 << 64) - 1
_SEED_SALT = 0x6A09E667F3BCC909
_GOLDEN = 0x9E3779B97F4A7C15
_COORD_MUL = 0xBB67AE8584CAA73B

# per-use tags inside one coordinate stream
_TAG_SHIFT = 0x5348494654  # "SHIFT"
_TAG_MATRIX = 0x4D4154  # "MAT"
_TAG_DIAG = 0x44494147  # "DIAG"
_TAG_OWEN = 0x4F57454E  # "OWEN"


def _mix(z: int) -> int:
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_stream(master_seed: int, v: int, coordinate: int) -> int:
    """64-bit stream key for replication ``v`` and ``coordinate``.

    >>> derive_stream(0, 0, 0)
    3000338775055215999
    """
    h = _mix(int(master_seed) ^ _SEED_SALT)
    h = _mix(h + (int(v) + 1) * _GOLDEN)
    return _mix(h ^ _mix((int(coordinate) + 1) * _COORD_MUL))


@dataclass(frozen=True)
class RandomizerSpec:
    """Which randomization to apply and which replication it belongs to."""

    kind: str
    master_seed: int = 0
    v: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown randomizer {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "master_seed", int(self.master_seed) & _M64)
        if self.v < 0:
            raise DomainError("replication index must be >= 0")

    def stream(self, coordinate: int) -> int:
        return derive_stream(self.master_seed, self.v, coordinate)

    def replicate(self, v: int) -> "RandomizerSpec":
        return RandomizerSpec(self.kind, self.master_seed, v)


def shift_digits(key: int, base: int, K: int) -> np.ndarray:
    """The K uniform shift digits drawn from stream ``key``."""
    return kernels.below(key ^ _TAG_SHIFT, K, base)


def linear_matrix(key: int, base: int, K: int) -> ModMatrix:
    """Random lower-triangular K x K matrix over Z_base with nonzero diagonal."""
    low = kernels.below(key ^ _TAG_MATRIX, K * K, base).reshape(K, K)
    diag = kernels.below(key ^ _TAG_DIAG, K, base - 1) + 1
    ent = np.tril(low, -1)
    ent[np.arange(K), np.arange(K)] = diag
    return ModMatrix(base, ent)


def _shift_table(shift: np.ndarray, base: int) -> np.ndarray:
    return (np.arange(base, dtype=np.int64)[None, :] + shift[:, None]) % base


def digital_shift(P: PointSet, spec: RandomizerSpec, shifts: Optional[Sequence] = None) -> PointSet:
    """Add one random digit vector per coordinate, digit-wise mod b_j.

    ``shifts`` overrides the random draw with explicit digit vectors.
    """
    cols = []
    for j, (b, K) in enumerate(zip(P.bases, P.ndigits)):
        if shifts is None:
            e = shift_digits(spec.stream(j), b, K)
        else:
            e = np.asarray(shifts[j], dtype=np.int64) % b
            if e.shape != (K,):
                raise DomainError(f"shift for coordinate {j} must have {K} digits")
        cols.append(kernels.digit_map(P.digits[:, j], b, K, _shift_table(e, b)))
    return P.replace_columns(cols)


def owen_scramble(P: PointSet, spec: RandomizerSpec) -> PointSet:
    """Nested uniform scrambling, permutations keyed by the digit prefix."""
    cols = []
    for j, (b, K) in enumerate(zip(P.bases, P.ndigits)):
        cols.append(kernels.owen(P.digits[:, j], b, K, spec.stream(j) ^ _TAG_OWEN))
    return P.replace_columns(cols)


def linear_scramble(
    P: PointSet,
    spec: RandomizerSpec,
    matrices: Optional[Sequence[ModMatrix]] = None,
    shifts: Optional[Sequence] = None,
) -> PointSet:
    """Digits become ``L_j y + e_j mod b_j`` with L_j lower triangular, nonsingular.

    ``matrices`` and ``shifts`` override the random draws (for testing).
    """
    bad = [b for b in P.bases if not is_prime(b)]
    if bad:
        raise DomainError(f"linear scrambling needs prime bases, got {sorted(set(bad))}")
    cols = []
    for j, (b, K) in enumerate(zip(P.bases, P.ndigits)):
        key = spec.stream(j)
        L = linear_matrix(key, b, K) if matrices is None else matrices[j]
        if L.base != b or L.size != K:
            raise DomainError(f"matrix for coordinate {j} must be {K}x{K} over Z_{b}")
        e = shift_digits(key, b, K) if shifts is None else np.asarray(shifts[j], dtype=np.int64) % b
        col = kernels.digit_matvec(P.digits[:, j], b, K, L.entries)
        if e.any():
            col = kernels.digit_map(col, b, K, _shift_table(e, b))
        cols.append(col)
    return P.replace_columns(cols)


_DISPATCH = {
    "digital_shift": digital_shift,
    "owen_scramble": owen_scramble,
    "linear_scramble": linear_scramble,
}


def randomize(P: PointSet, spec: RandomizerSpec) -> PointSet:
    return _DISPATCH[spec.kind](P, spec)
