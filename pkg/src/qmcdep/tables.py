"""Criterion table presets: constructions, reference values and L calibration.

Each preset row names a construction (Faure or Halton, with its
generalization variant) and the reference pair (c, c-bar) published for it
with criterion base 2, d = 2 and w = s.  :func:`calibrate` sweeps the norm
bound L once and reports, per row, the best-matching L and the deviations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .errors import DomainError, MissingPermutation
from .negdep import projection_profile
from .numth import first_primes
from .permute import (
    Permutation,
    factors_method1,
    factors_method2,
    faure92_permutations,
    offset_permutation,
)
from .sequences import PointSet, faure_set, halton_set

__all__ = ["TableRow", "TABLES", "VARIANTS", "build_row", "variant_perms", "variant_factors",
           "calibrate", "Calibration", "calibrated_L", "calibrated_start"]

VARIANTS = ("regular", "faure92", "offset", "dl", "fl")
_LABELS = {"regular": "Regular", "faure92": "Faure 1992", "offset": "F Offset", "dl": "DL", "fl": "FL"}


@dataclass(frozen=True)
class TableRow:
    table: int
    family: str  # faure or halton
    variant: str
    s: int
    n: int
    c: float
    cbar: float
    b: Optional[int] = None  # Faure base

    @property
    def label(self) -> str:
        return _LABELS[self.variant]

    @property
    def key(self) -> str:
        return f"T{self.table} {self.family} {self.variant} s={self.s} n={self.n}"


def _rows(table, family, entries):
    out = []
    for variant, s, n, c, cbar, *b in entries:
        out.append(TableRow(table, family, variant, s, n, c, cbar, b[0] if b else None))
    return out


TABLES: Mapping[int, list] = {
    1: _rows(1, "faure", [
        ("regular", 4, 3125, 0.99968, 0.99968, 5),
        ("faure92", 4, 3125, 0.99968, 0.99968, 5),
        ("offset", 4, 3125, 0.99968, 0.99968, 5),
        ("regular", 12, 2197, 1.755691, 1.422891, 13),
        ("faure92", 12, 2197, 1.782858, 1.162811, 13),
        ("offset", 12, 2197, 1.782858, 1.136818, 13),
        ("regular", 52, 2809, 6.5223, 1.584402, 53),
        ("faure92", 52, 2809, 14.88912, 2.019255, 53),
        ("offset", 52, 2809, 14.88912, 1.892771, 53),
    ]),
    2: _rows(2, "halton", [
        ("regular", 4, 3125, 0.999685, 0.999683),
        ("faure92", 4, 3125, 0.999682, 0.999682),
        ("offset", 4, 3125, 0.999681, 0.99968),
        ("dl", 4, 3125, 0.999681, 0.999681),
        ("fl", 4, 3125, 0.999682, 0.999682),
        ("regular", 12, 2197, 4.036052, 1.892203),
        ("faure92", 12, 2197, 1.819365, 1.071718),
        ("offset", 12, 2197, 1.635136, 1.053001),
        ("dl", 12, 2197, 3.531758, 1.319083),
        ("fl", 12, 2197, 2.029063, 1.18698),
        ("regular", 52, 2809, 13.65113, 6.534291),
        ("faure92", 52, 2809, 4.204183, 1.21624),
        ("offset", 52, 2809, 4.179257, 1.197399),
        ("dl", 52, 2809, 11.092064, 1.862851),
        ("fl", 52, 2809, 8.539747, 1.467202),
    ]),
    3: _rows(3, "faure", [
        ("regular", 4, 5000, 1.19561576, 1.0977079, 5),
        ("faure92", 4, 5000, 3.35611442, 1.4793424, 5),
        ("offset", 4, 5000, 3.35611442, 1.5871413, 5),
        ("regular", 12, 5000, 7.71906317, 3.4452165, 13),
        ("faure92", 12, 5000, 9.54395039, 1.9958566, 13),
        ("offset", 12, 5000, 7.63516031, 2.1053137, 13),
        ("regular", 52, 5000, 111.422999, 16.197021, 53),
        ("faure92", 52, 5000, 170.658418, 4.89776, 53),
        ("offset", 52, 5000, 153.710041, 4.696813, 53),
    ]),
    4: _rows(4, "halton", [
        ("regular", 4, 5000, 0.99980252, 0.99980183),
        ("faure92", 4, 5000, 0.9998014, 0.99980089),
        ("offset", 4, 5000, 0.99979996, 0.99979996),
        ("dl", 4, 5000, 0.99980012, 0.99980004),
        ("fl", 4, 5000, 0.9998014, 0.99980076),
        ("regular", 12, 5000, 4.68872783, 2.13327165),
        ("faure92", 12, 5000, 1.47878792, 1.05099389),
        ("offset", 12, 5000, 1.40865037, 1.03312189),
        ("dl", 12, 5000, 3.18306477, 1.21785275),
        ("fl", 12, 5000, 2.48300028, 1.22527534),
        ("regular", 52, 5000, 18.82439336, 4.81624748),
        ("faure92", 52, 5000, 4.73002376, 1.24112783),
        ("offset", 52, 5000, 4.62842264, 1.21837901),
        ("dl", 52, 5000, 10.95981116, 1.75041329),
        ("fl", 52, 5000, 6.94886113, 1.54795824),
    ]),
}


def variant_perms(variant: str, bases, perm_file: Optional[Mapping[int, Permutation]] = None):
    """Per-base digit permutations for a Halton variant (None for regular)."""
    if variant == "regular":
        return None
    if variant in ("dl", "fl"):
        if perm_file is None:
            raise DomainError(f"variant {variant!r} needs a permutation file")
        for b in bases:
            if b not in perm_file:
                raise MissingPermutation(b)
        return {b: perm_file[b] for b in bases}
    table = {p.base: p for p in faure92_permutations(max(bases))}
    if variant == "faure92":
        return {b: table[b] for b in bases}
    if variant == "offset":
        return {b: offset_permutation(table[b]) for b in bases}
    raise DomainError(f"unknown variant {variant!r}")


def variant_factors(variant: str, base: int, perm_file: Optional[Mapping[int, Permutation]] = None):
    """Faure factors for a variant (None for regular)."""
    if variant == "regular":
        return None
    if variant in ("dl", "fl"):
        if perm_file is None or base not in perm_file:
            raise DomainError(f"variant {variant!r} needs a permutation for base {base}")
        return factors_method1(perm_file[base])
    p = faure92_permutations(base)[-1]
    if variant == "faure92":
        return factors_method1(p)
    if variant == "offset":
        return factors_method2(p)
    raise DomainError(f"unknown variant {variant!r}")


def _log2_ceil(n: int) -> int:
    return max(1, (n - 1).bit_length())


def calibrated_L(family: str, n: int) -> int:
    """Norm bound fixed by the calibration run.

    Halton rows are closest at ``L = ceil(log2 n)``; beyond it near-coincident
    points in high-base coordinates inflate C without bound.  Faure rows
    only stabilize once every k with a nonzero pair count is included, which
    ``2 ceil(log2 n)`` covers for the preset sizes.
    """
    return _log2_ceil(n) if family == "halton" else 2 * _log2_ceil(n)


def calibrated_start(family: str) -> int:
    """Index of the first point: Halton presets skip the origin."""
    return 2 if family == "halton" else 1


def build_row(row: TableRow, perm_file=None, start_index: Optional[int] = None) -> PointSet:
    if start_index is None:
        start_index = calibrated_start(row.family)
    label = f"{row.label} s={row.s} n={row.n}"
    if row.family == "faure":
        return faure_set(row.n, row.s, row.b, factors=variant_factors(row.variant, row.b, perm_file),
                         start_index=start_index, label=label)
    bases = first_primes(row.s)
    return halton_set(row.n, row.s, variant_perms(row.variant, bases, perm_file),
                      start_index=start_index, label=label)


@dataclass
class Calibration:
    row: TableRow
    Ls: np.ndarray
    c: np.ndarray  # c at each L in Ls
    cbar: np.ndarray

    def deviation(self, i: int) -> float:
        return max(abs(self.c[i] - self.row.c), abs(self.cbar[i] - self.row.cbar))

    @property
    def best(self) -> int:
        """Index into ``Ls`` of the smallest deviation (first on ties)."""
        return int(np.argmin([self.deviation(i) for i in range(len(self.Ls))]))

    def at(self, L: int):
        i = int(np.searchsorted(self.Ls, L))
        return float(self.c[i]), float(self.cbar[i]), self.deviation(i)

    def report_line(self, fixed_L: Optional[int] = None) -> str:
        i = self.best
        parts = [
            f"{self.row.key}: ref c={self.row.c:.8g} cbar={self.row.cbar:.8g}",
            f"best L={int(self.Ls[i])} c={self.c[i]:.8g} cbar={self.cbar[i]:.8g} dev={self.deviation(i):.2e}",
        ]
        if fixed_L is not None:
            c, cb, dev = self.at(fixed_L)
            parts.append(f"at L={fixed_L} c={c:.8g} cbar={cb:.8g} dev={dev:.2e}")
        return "; ".join(parts)


def calibrate(row: TableRow, L_max: int = 26, perm_file=None, threads: int = 1,
              start_index: Optional[int] = None) -> Calibration:
    """c and c-bar (projection form, base 2, d=2, w=s) for every L in 2..L_max."""
    P = build_row(row, perm_file, start_index)
    _, _, values, _ = projection_profile(P, 2, 2, P.s, L_max, threads)
    Ls = np.arange(2, L_max + 1)
    return Calibration(row, Ls, values[:, 2:].max(axis=0), values[:, 2:].mean(axis=0))
