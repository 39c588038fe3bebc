"""Deterministic point sets: van der Corput, (generalized) Halton and Faure."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import DomainError, MissingPermutation, SingularMatrix, ValidationError
from .numth import (
    DigitVector,
    ModMatrix,
    digit_budget,
    first_primes,
    integer_digits,
    is_prime,
    pascal_power,
    smallest_prime_at_least,
)
from .permute import FactorVector, Permutation

__all__ = [
    "PointSet",
    "SequenceSpec",
    "vdc_point",
    "vdc_set",
    "halton_set",
    "faure_set",
    "to_reals",
    "faure_base",
]

PermSpec = Union[Permutation, Sequence[Permutation]]

_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True, eq=False)
class PointSet:
    """``n`` points in ``s`` dimensions held as exact digit integers.

    ``digits[i, j]`` encodes coordinate j of point i as
    ``sum_r d_r * bases[j]**(ndigits[j]-1-r)``; the real value is
    ``digits[i, j] / bases[j]**ndigits[j]``.
    """

    digits: np.ndarray
    bases: tuple
    ndigits: tuple
    start_index: int = 1
    label: str = ""

    def __post_init__(self):
        d = np.ascontiguousarray(self.digits, dtype=np.uint64)
        if d.ndim != 2:
            raise DomainError("digits must be an (n, s) array")
        if d.shape[1] != len(self.bases) or len(self.bases) != len(self.ndigits):
            raise DomainError("bases/ndigits must have one entry per coordinate")
        object.__setattr__(self, "bases", tuple(int(b) for b in self.bases))
        object.__setattr__(self, "ndigits", tuple(int(k) for k in self.ndigits))
        d.setflags(write=False)
        object.__setattr__(self, "digits", d)

    @property
    def n(self) -> int:
        return self.digits.shape[0]

    @property
    def s(self) -> int:
        return self.digits.shape[1]

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return (
            isinstance(other, PointSet)
            and self.bases == other.bases
            and self.ndigits == other.ndigits
            and np.array_equal(self.digits, other.digits)
        )

    def digit_vector(self, i: int, j: int) -> DigitVector:
        return DigitVector.from_int(int(self.digits[i, j]), self.bases[j], self.ndigits[j])

    def column(self, j: int) -> np.ndarray:
        return self.digits[:, j]

    def head(self, n: int) -> "PointSet":
        return PointSet(self.digits[:n], self.bases, self.ndigits, self.start_index, self.label)

    def replace_columns(self, columns: Sequence[np.ndarray], label=None) -> "PointSet":
        return PointSet(
            np.stack(columns, axis=1) if columns else self.digits,
            self.bases,
            self.ndigits,
            self.start_index,
            self.label if label is None else label,
        )

    def to_reals(self) -> np.ndarray:
        return to_reals(self)

    def in_bases(self, bases: Sequence[int]) -> "PointSet":
        """Re-express every coordinate in ``bases``.

        Coordinates already in the requested base are returned untouched;
        the others are expanded exactly from their double values to
        ``digit_budget(base)`` digits.
        """
        bases = tuple(int(b) for b in bases)
        if len(bases) != self.s:
            raise DomainError("need one base per coordinate")
        if bases == self.bases:
            return self
        x = None
        cols, kk = [], []
        for j, b in enumerate(bases):
            if b == self.bases[j]:
                cols.append(self.digits[:, j])
                kk.append(self.ndigits[j])
                continue
            if x is None:
                x = self.to_reals()
            k = digit_budget(b)
            cols.append(kernels.rebase(x[:, j], b**k))
            kk.append(k)
        return PointSet(np.stack(cols, axis=1), bases, tuple(kk), self.start_index, self.label)


@dataclass(frozen=True)
class SequenceSpec:
    """What to construct: family, dimension and generalization payload.

    ``family`` is one of vdc, halton, ghalton, faure, gfaure.  For ghalton
    ``perms`` maps base -> Permutation; for gfaure either ``factors`` or
    ``matrices`` (one lower-triangular ModMatrix per coordinate) is set.
    """

    family: str
    s: int = 1
    base: Optional[int] = None
    bases: Optional[tuple] = None
    perms: Optional[Mapping[int, PermSpec]] = field(default=None, hash=False)
    factors: Optional[FactorVector] = None
    matrices: Optional[tuple] = field(default=None, hash=False)
    label: str = ""

    FAMILIES = ("vdc", "halton", "ghalton", "faure", "gfaure")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.family == "gfaure" and self.factors is None and self.matrices is None:
            raise DomainError("gfaure needs factors or matrices")
        if self.family == "ghalton" and self.perms is None:
            raise DomainError("ghalton needs a permutation map")

    def build(self, n: int, start_index: int = 1) -> PointSet:
        if self.family == "vdc":
            perm = None
            base = self.base or 2
            if self.perms is not None:
                perm = self.perms[base]
            return vdc_set(n, base, perm, start_index=start_index, label=self.label)
        if self.family in ("halton", "ghalton"):
            perms = self.perms if self.family == "ghalton" else None
            return halton_set(n, self.s, perms, start_index=start_index, bases=self.bases,
                              label=self.label)
        return faure_set(
            n,
            self.s,
            self.base,
            factors=self.factors if self.family == "gfaure" else None,
            matrices=self.matrices if self.family == "gfaure" else None,
            start_index=start_index,
            label=self.label,
        )


def faure_base(s: int) -> int:
    """Smallest prime b >= s."""
    return smallest_prime_at_least(s)


def _indices(n: int, start_index: int, base: int, K: int) -> np.ndarray:
    if start_index < 1:
        raise DomainError("start_index must be >= 1")
    if n < 0:
        raise DomainError("n must be >= 0")
    last = start_index - 1 + n - 1
    if n and last >= base**K:
        raise OverflowError(f"index {last + 1} exceeds {K} base-{base} digits")
    return np.arange(start_index - 1, start_index - 1 + n, dtype=np.uint64)


def _perm_table(sigma: PermSpec, base: int, K: int) -> np.ndarray:
    if isinstance(sigma, Permutation):
        sigma = [sigma] * K
    sigma = list(sigma)
    if len(sigma) < K:
        # a finite per-digit list is continued by its last permutation
        sigma = sigma + [sigma[-1]] * (K - len(sigma))
    for p in sigma:
        if p.base != base:
            raise ValidationError(f"permutation for base {p.base} used with base {base}")
    return np.array([p.map for p in sigma[:K]], dtype=np.int64)


def vdc_point(n: int, base: int, sigma: Optional[PermSpec] = None) -> DigitVector:
    """Digits of the n-th (generalized) van der Corput point, n >= 1.

    Digit r of the result is ``sigma_r(a_r)``, where ``a_r`` are the digits
    of n-1.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    K = digit_budget(base)
    a = integer_digits(n - 1, base, K)
    if sigma is None:
        return DigitVector(base, a.digits)
    table = _perm_table(sigma, base, K)
    return DigitVector(base, tuple(int(table[r, a[r]]) for r in range(K)))


def _vdc_column(m, base, K, sigma):
    col = kernels.radical_inverse(m, base, K)
    if sigma is not None:
        col = kernels.digit_map(col, base, K, _perm_table(sigma, base, K))
    return col


def vdc_set(n, base=2, sigma=None, start_index=1, label="") -> PointSet:
    K = digit_budget(base)
    m = _indices(n, start_index, base, K)
    return PointSet(_vdc_column(m, base, K, sigma)[:, None], (base,), (K,), start_index, label)


def halton_set(
    n: int,
    s: int,
    perms: Optional[Mapping[int, PermSpec]] = None,
    start_index: int = 1,
    bases: Optional[Sequence[int]] = None,
    label: str = "",
) -> PointSet:
    """Points ``start_index .. start_index+n-1`` of the (generalized) Halton sequence.

    Coordinate j uses the j-th prime (or ``bases[j]``) and, when ``perms`` is
    given, the permutation ``perms[b_j]`` on every digit.
    """
    if s < 1:
        raise DomainError("s must be >= 1")
    bases = tuple(first_primes(s)) if bases is None else tuple(bases)
    if len(bases) != s:
        raise DomainError("need one base per coordinate")
    if perms is not None:
        for b in bases:
            if b not in perms:
                raise MissingPermutation(b)
    cols, kk = [], []
    for b in bases:
        K = digit_budget(b)
        m = _indices(n, start_index, b, K)
        cols.append(_vdc_column(m, b, K, None if perms is None else perms[b]))
        kk.append(K)
    digits = np.stack(cols, axis=1) if n else np.zeros((0, s), dtype=np.uint64)
    return PointSet(digits, bases, tuple(kk), start_index, label)


def faure_matrices(s, base, factors=None, matrices=None) -> list[ModMatrix]:
    """Generating matrices A_j for coordinates j = 1..s."""
    K = digit_budget(base)
    mats = [pascal_power(base, j, K) for j in range(s)]
    if factors is not None:
        if factors.base != base:
            raise DomainError(f"factors are for base {factors.base}, not {base}")
        if len(factors) < s:
            raise DomainError(f"need at least {s} factors, got {len(factors)}")
        mats = [A.scaled(factors[j]) for j, A in enumerate(mats)]
    elif matrices is not None:
        if len(matrices) < s:
            raise DomainError(f"need at least {s} matrices, got {len(matrices)}")
        out = []
        for j, A in enumerate(mats):
            L = matrices[j]
            if L.base != base or L.size != K:
                raise DomainError(f"matrix {j} must be {K}x{K} over Z_{base}")
            if not L.is_lower_triangular():
                raise DomainError(f"matrix {j} is not lower triangular")
            if not np.all(np.diag(L.entries) % base):
                raise SingularMatrix(f"matrix {j} is singular mod {base}")
            out.append(L @ A)
        mats = out
    return mats


def faure_set(
    n: int,
    s: int,
    base: Optional[int] = None,
    factors: Optional[FactorVector] = None,
    matrices: Optional[Sequence[ModMatrix]] = None,
    start_index: int = 1,
    label: str = "",
) -> PointSet:
    """Points of the (generalized) Faure sequence in a prime base >= s.

    Coordinate j (1-based) uses the Pascal power ``P**(j-1)``, pre-multiplied
    by ``factors[j-1]`` or by the lower-triangular ``matrices[j-1]``.
    """
    if s < 1:
        raise DomainError("s must be >= 1")
    base = faure_base(s) if base is None else int(base)
    if not is_prime(base):
        raise DomainError(f"Faure base {base} is not prime")
    if base < s:
        raise DomainError(f"Faure base {base} must be >= s = {s}")
    K = digit_budget(base)
    m = _indices(n, start_index, base, K)
    rev = kernels.radical_inverse(m, base, K)
    cols = []
    for j, A in enumerate(faure_matrices(s, base, factors, matrices)):
        if j == 0 and factors is None and matrices is None:
            cols.append(rev)
        else:
            cols.append(kernels.digit_matvec(rev, base, K, A.entries))
    digits = np.stack(cols, axis=1) if n else np.zeros((0, s), dtype=np.uint64)
    return PointSet(digits, (base,) * s, (K,) * s, start_index, label)


_EXTENDED = np.finfo(np.longdouble).nmant >= 63


def _ratio(y: np.ndarray, denom: int) -> np.ndarray:
    """Correctly rounded doubles ``y / denom`` for uint64 ``y``."""
    if not _EXTENDED:
        return np.array([float(Fraction(int(v), denom)) for v in y], dtype=np.float64)
    # y and denom are exact in extended precision; the quotient is rounded
    # once there, and a second rounding to double can only go wrong when it
    # lands exactly halfway between two doubles
    q = y.astype(np.longdouble) / np.longdouble(denom)
    d = q.astype(np.float64)
    dl = d.astype(np.longdouble)
    lo = np.nextafter(d, -np.inf).astype(np.longdouble)
    hi = np.nextafter(d, np.inf).astype(np.longdouble)
    tie = (q == (dl + lo) / 2) | (q == (dl + hi) / 2)
    for i in np.flatnonzero(tie):
        d[i] = float(Fraction(int(y[i]), denom))
    return d


def to_reals(P: PointSet) -> np.ndarray:
    """(n, s) doubles in [0, 1); values that round up to 1 are pulled just below."""
    out = np.empty(P.digits.shape, dtype=np.float64)
    for j, (b, K) in enumerate(zip(P.bases, P.ndigits)):
        out[:, j] = _ratio(P.digits[:, j], b**K)
    np.minimum(out, _BELOW_ONE, out=out)
    return out
