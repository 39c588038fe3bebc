"""Faure (1992) digit permutations, the offset variant and factor extraction."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, InvalidInput, ParseError, ValidationError
from .numth import is_prime

__all__ = [
    "Permutation",
    "FactorVector",
    "faure92_permutations",
    "faure92",
    "offset_permutation",
    "factors_method1",
    "factors_method2",
    "load_permutation_set",
    "dump_permutation_set",
]


@dataclass(frozen=True)
class Permutation:
    """A bijection of {0, ..., base-1}; ``map[a]`` is the image of ``a``."""

    base: int
    map: tuple

    def __post_init__(self):
        object.__setattr__(self, "map", tuple(int(v) for v in self.map))
        if self.base < 2:
            raise DomainError(f"base must be >= 2, got {self.base}")
        if len(self.map) != self.base or sorted(self.map) != list(range(self.base)):
            raise ValidationError(f"not a bijection on Z_{self.base}: {self.map}")

    def __call__(self, a: int) -> int:
        return self.map[a]

    def __getitem__(self, a):
        return self.map[a]

    def __len__(self):
        return self.base

    @classmethod
    def identity(cls, base: int) -> "Permutation":
        return cls(base, tuple(range(base)))


@dataclass(frozen=True)
class FactorVector:
    """Nonzero multipliers (mod a prime base) for generalized Faure coordinates."""

    base: int
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(int(f) for f in self.factors))
        if not is_prime(self.base):
            raise DomainError(f"factor base {self.base} is not prime")
        bad = [f for f in self.factors if not 1 <= f <= self.base - 1]
        if bad:
            raise ValidationError(f"factors must be nonzero mod {self.base}: {bad}")

    def __len__(self):
        return len(self.factors)

    def __getitem__(self, j):
        return self.factors[j]


def faure92_permutations(b_max: int) -> list[Permutation]:
    """Permutations pi_2 ... pi_{b_max} from Faure's 1992 recursion.

    Even j: ``pi_j = (2*pi_{j/2}, 2*pi_{j/2} + 1)``.  Odd j: take
    ``pi_{j-1}``, add one to every entry >= k = (j-1)/2 and insert k at
    position k.
    """
    if b_max < 2:
        raise DomainError(f"b_max must be >= 2, got {b_max}")
    perms: dict[int, list[int]] = {2: [0, 1]}
    for j in range(3, b_max + 1):
        if j % 2 == 0:
            half = perms[j // 2]
            perms[j] = [2 * v for v in half] + [2 * v + 1 for v in half]
        else:
            k = (j - 1) // 2
            prev = [v + 1 if v >= k else v for v in perms[j - 1]]
            perms[j] = prev[:k] + [k] + prev[k:]
    return [Permutation(j, tuple(perms[j])) for j in range(2, b_max + 1)]


def faure92(base: int) -> Permutation:
    return faure92_permutations(base)[-1]


def offset_permutation(p: Permutation) -> Permutation:
    """Shift ``p`` cyclically so that 0 lands at index ``base // 2``.

    For odd bases the shift is (b+1)/2.
    """
    b = p.base
    o = (b - p.map[b // 2]) % b
    return Permutation(b, tuple((v + o) % b for v in p.map))


def _require_leading_zero(p: Permutation):
    if p.map[0] != 0:
        raise InvalidInput(f"permutation for base {p.base} must satisfy p[0] = 0")
    if not is_prime(p.base):
        raise DomainError(f"factors need a prime base, got {p.base}")


def factors_method1(p: Permutation) -> FactorVector:
    """Drop the leading zero: ``f_j = p[j+1]`` for j = 0..b-2."""
    _require_leading_zero(p)
    return FactorVector(p.base, p.map[1:])


def factors_method2(p: Permutation) -> FactorVector:
    """Offset the permutation, then delete its single zero entry."""
    _require_leading_zero(p)
    q = offset_permutation(p)
    return FactorVector(p.base, tuple(v for v in q.map if v != 0))


_LINE = re.compile(r"^\s*(\d+)\s*:\s*(.*)$")


def load_permutation_set(path) -> dict[int, Permutation]:
    """Read ``base: v0 v1 ... v_{b-1}`` lines (``#`` starts a comment)."""
    text = Path(path).read_text()
    out: dict[int, Permutation] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if m is None:
            raise ParseError(f"{path}:{lineno}: expected 'base: v0 v1 ...'")
        base = int(m.group(1))
        try:
            values = tuple(int(v) for v in m.group(2).replace(",", " ").split())
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-integer entry") from None
        if base in out:
            raise ParseError(f"{path}:{lineno}: duplicate base {base}")
        try:
            out[base] = Permutation(base, values)
        except (ValidationError, DomainError) as exc:
            raise ValidationError(f"base {base}: {exc}") from None
    return out


def dump_permutation_set(perms, path) -> None:
    lines = [f"{b}: {' '.join(str(v) for v in perms[b].map)}" for b in sorted(perms)]
    Path(path).write_text("\n".join(lines) + "\n")
