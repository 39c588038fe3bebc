"""Exact base-b primitives: digit expansions, primes and mod-p matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DigitBudgetExceeded, DimensionMismatch, DomainError, SingularMatrix

__all__ = [
    "DigitVector",
    "ModMatrix",
    "digit_budget",
    "integer_digits",
    "radical_value",
    "first_primes",
    "is_prime",
    "smallest_prime_at_least",
    "pascal_power",
    "mod_mat_vec",
]

_MAX_BASE = 2048  # b**K must stay below 2**64 with K = digit_budget(b)


@dataclass(frozen=True)
class DigitVector:
    """Digits of a number in ``base``.

    For a fraction, ``digits[r]`` is the coefficient of ``base**-(r+1)``;
    for an integer expansion it is the coefficient of ``base**r``.
    """

    base: int
    digits: tuple

    def __post_init__(self):
        if self.base < 2:
            raise DomainError(f"base must be >= 2, got {self.base}")
        if len(self.digits) == 0:
            raise DomainError("digit vector must be non-empty")
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        for d in self.digits:
            if not 0 <= d < self.base:
                raise DomainError(f"digit {d} out of range for base {self.base}")

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __getitem__(self, r):
        return self.digits[r]

    def to_int(self) -> int:
        """Digit integer ``sum d_r b**(K-1-r)`` (the fraction scaled by b**K)."""
        acc = 0
        for d in self.digits:
            acc = acc * self.base + d
        return acc

    @classmethod
    def from_int(cls, value: int, base: int, ndigits: int) -> "DigitVector":
        """Inverse of :meth:`to_int`."""
        digits = [0] * ndigits
        for r in range(ndigits - 1, -1, -1):
            value, digits[r] = divmod(value, base)
        if value:
            raise OverflowError(f"value needs more than {ndigits} base-{base} digits")
        return cls(base, tuple(digits))


@lru_cache(maxsize=None)
def digit_budget(base: int) -> int:
    """Digits stored per coordinate: smallest K with base**K >= 2**53, capped at 64."""
    if base < 2:
        raise DomainError(f"base must be >= 2, got {base}")
    if base > _MAX_BASE:
        raise DigitBudgetExceeded(f"base {base} exceeds the supported maximum {_MAX_BASE}")
    k = 1
    while base**k < 2**53 and k < 64:
        k += 1
    return k


def integer_digits(m: int, base: int, K: int) -> DigitVector:
    """Least-significant-first digits of the integer ``m``.

    >>> integer_digits(6, 2, 4).digits
    (0, 1, 1, 0)
    """
    if base < 2:
        raise DomainError(f"base must be >= 2, got {base}")
    if m < 0:
        raise DomainError("m must be non-negative")
    if m >= base**K:
        raise OverflowError(f"{m} does not fit in {K} base-{base} digits")
    digits = []
    for _ in range(K):
        m, a = divmod(m, base)
        digits.append(a)
    return DigitVector(base, tuple(digits))


def radical_value(d: DigitVector) -> float:
    """``sum_r d_r / b**(r+1)`` rounded to the largest double below 1 if needed."""
    value = d.to_int() / d.base ** len(d)
    return min(value, math.nextafter(1.0, 0.0))


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    return all(p % q for q in range(3, math.isqrt(p) + 1, 2))


def first_primes(s: int) -> list[int]:
    """The first ``s`` primes via a growing sieve."""
    if s < 1:
        raise DomainError("s must be >= 1")
    limit = max(16, int(s * (math.log(s + 1) + math.log(math.log(s + 2)) + 3)))
    while True:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for q in range(2, math.isqrt(limit) + 1):
            if sieve[q]:
                sieve[q * q::q] = False
        primes = np.flatnonzero(sieve)
        if len(primes) >= s:
            return [int(p) for p in primes[:s]]
        limit *= 2


def smallest_prime_at_least(s: int) -> int:
    p = max(2, s)
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True, eq=False)
class ModMatrix:
    """Square matrix over Z_base; ``entries`` is a read-only int64 array."""

    base: int
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        a %= self.base
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, ModMatrix)
            and self.base == other.base
            and np.array_equal(self.entries, other.entries)
        )

    def __matmul__(self, other):
        if isinstance(other, ModMatrix):
            if other.base != self.base or other.size != self.size:
                raise DimensionMismatch("matrix base or size mismatch")
            return ModMatrix(self.base, (self.entries @ other.entries) % self.base)
        if isinstance(other, DigitVector):
            return mod_mat_vec(self, other)
        return NotImplemented

    def scaled(self, factor: int) -> "ModMatrix":
        return ModMatrix(self.base, self.entries * factor)

    def is_lower_triangular(self) -> bool:
        return not np.triu(self.entries, 1).any()

    def is_nonsingular(self) -> bool:
        """Rank check by Gaussian elimination over Z_base (base prime)."""
        a = self.entries.copy()
        p = self.base
        n = self.size
        for col in range(n):
            piv = next((r for r in range(col, n) if a[r, col] % p), None)
            if piv is None:
                return False
            a[[col, piv]] = a[[piv, col]]
            inv = pow(int(a[col, col]), -1, p)
            a[col] = (a[col] * inv) % p
            for r in range(col + 1, n):
                if a[r, col]:
                    a[r] = (a[r] - a[r, col] * a[col]) % p
        return True

    @classmethod
    def identity(cls, base: int, K: int) -> "ModMatrix":
        return cls(base, np.eye(K, dtype=np.int64))


@lru_cache(maxsize=None)
def _binom_mod(K: int, p: int) -> np.ndarray:
    # Pascal's rule mod p; table[l, r] = binom(l, r) mod p
    t = np.zeros((K, K), dtype=np.int64)
    t[:, 0] = 1
    for l in range(1, K):
        t[l, 1:l + 1] = (t[l - 1, 0:l] + t[l - 1, 1:l + 1]) % p
    return t


def pascal_power(base: int, c: int, K: int) -> ModMatrix:
    """The ``c``-th power of the upper-triangular Pascal matrix mod ``base``.

    Entry (r, l) is ``binom(l, r) * c**(l-r) mod base`` for ``l >= r``; row r
    produces output digit r.
    """
    if not is_prime(base):
        raise DomainError(f"base {base} is not prime")
    if not 0 <= c < base:
        raise DomainError(f"power {c} must lie in [0, {base})")
    binom = _binom_mod(K, base)
    cpow = np.array([pow(c, e, base) for e in range(K)], dtype=np.int64)
    r = np.arange(K)[:, None]
    l = np.arange(K)[None, :]
    upper = l >= r
    ent = np.where(upper, binom.T * cpow[np.clip(l - r, 0, None)], 0) % base
    return ModMatrix(base, ent)


def mod_mat_vec(M: ModMatrix, d: DigitVector) -> DigitVector:
    """Output digit r is ``sum_l M[r, l] * d[l] mod base``."""
    if M.base != d.base:
        raise DimensionMismatch(f"matrix base {M.base} != vector base {d.base}")
    if M.size != len(d):
        raise DimensionMismatch(f"matrix size {M.size} != vector length {len(d)}")
    out = (M.entries @ np.array(d.digits, dtype=np.int64)) % M.base
    return DigitVector(M.base, tuple(int(v) for v in out))


def check_generator(M: ModMatrix) -> None:
    if not M.is_nonsingular():
        raise SingularMatrix(f"matrix is singular mod {M.base}")
