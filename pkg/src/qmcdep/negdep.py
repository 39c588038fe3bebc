"""Pair-counting quality measures for point sets.

``C_b(k; P) = prod_j b_j**k_j * M_b(k; P) / (n (n-1))`` where ``M_b(k; P)``
counts ordered pairs of distinct points sharing the first ``k_j`` base-b_j
digits in every coordinate j.  ``C <= 1`` for every k means the set is
completely quasi-equidistributed (c.q.e.).
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import BaseMismatch, DigitBudgetExceeded, DomainError
from .numth import DigitVector
from .sequences import PointSet

__all__ = [
    "KVector",
    "CriterionReport",
    "CqeResult",
    "gamma",
    "gamma_columns",
    "m_count",
    "c_value",
    "net_closed_form",
    "enumerate_k_family",
    "criterion",
    "projections",
    "projection_profile",
    "cqe_check",
    "default_norm_bound",
]

INFINITY = math.inf
CQE_EPS = 1e-9

Bases = Union[int, Sequence[int], None]


@dataclass(frozen=True, order=True)
class KVector:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(int(v) for v in self.components))
        if any(v < 0 for v in self.components):
            raise DomainError("k components must be non-negative")

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, j):
        return self.components[j]

    @property
    def norm(self) -> int:
        return sum(self.components)

    @property
    def support(self) -> tuple:
        return tuple(j for j, v in enumerate(self.components) if v)

    @property
    def nonzero_count(self) -> int:
        return len(self.support)

    @property
    def range(self) -> int:
        sup = self.support
        return sup[-1] - sup[0] if sup else 0

    def __str__(self):
        return "(" + ",".join(str(v) for v in self.components) + ")"


def gamma(x: DigitVector, y: DigitVector) -> Union[int, float]:
    """Number of leading digits shared by x and y (``inf`` if all K agree)."""
    if x.base != y.base or len(x) != len(y):
        raise BaseMismatch(f"cannot compare base {x.base}/{len(x)} with {y.base}/{len(y)}")
    for i, (a, b) in enumerate(zip(x.digits, y.digits)):
        if a != b:
            return i
    return INFINITY


def gamma_columns(y1, y2, base: int, ndig: int) -> np.ndarray:
    """Vectorized gamma on digit integers; equal values give ``ndig``."""
    y1 = np.asarray(y1, dtype=np.uint64)
    y2 = np.asarray(y2, dtype=np.uint64)
    out = np.full(np.broadcast(y1, y2).shape, ndig, dtype=np.int64)
    undecided = np.ones(out.shape, dtype=bool)
    for i in range(ndig):
        div = np.uint64(base ** (ndig - i - 1))
        differ = undecided & ((y1 // div) != (y2 // div))
        out[differ] = i
        undecided &= ~differ
    return out


def _resolve_bases(P: PointSet, bases: Bases) -> tuple:
    if bases is None:
        return P.bases
    if isinstance(bases, (int, np.integer)):
        return (int(bases),) * P.s
    bases = tuple(int(b) for b in bases)
    if len(bases) != P.s:
        raise DomainError(f"need {P.s} criterion bases, got {len(bases)}")
    return bases


class _Grouper:
    """Cached digit prefixes of a point set in fixed criterion bases."""

    _LIMIT = 1 << 63

    def __init__(self, P: PointSet, bases: Bases = None):
        self.P = P.in_bases(_resolve_bases(P, bases))
        self.n = P.n
        self._cache: dict = {}
        self._dense_radix = max(4 * self.n, 1 << 16)

    @property
    def bases(self):
        return self.P.bases

    def prefix(self, j: int, k: int) -> np.ndarray:
        key = (j, k)
        got = self._cache.get(key)
        if got is None:
            b, K = self.P.bases[j], self.P.ndigits[j]
            if k > K:
                raise DigitBudgetExceeded(
                    f"k_{j + 1} = {k} exceeds the {K} base-{b} digits available"
                )
            got = self.P.digits[:, j] // np.uint64(b ** (K - k))
            self._cache[key] = got
        return got

    def pairs(self, support, values) -> int:
        n = self.n
        if not support:
            return n * (n - 1)
        key = None
        radix = 1
        for j, k in zip(support, values):
            pj = self.prefix(j, k)
            rj = self.P.bases[j] ** k
            if key is None:
                key, radix = pj, rj
                continue
            if radix * rj >= self._LIMIT:
                key, radix = _dense(key)
                if radix * rj >= self._LIMIT:
                    pj, rj = _dense(pj)
            key = key * np.uint64(rj) + pj
            radix *= rj
        return kernels.count_pairs(key, radix if radix <= self._dense_radix else 0)

    def c_value(self, support, values) -> float:
        n = self.n
        if n < 2:
            raise DomainError("C_b needs at least two points")
        scale = 1
        for j, k in zip(support, values):
            scale *= self.P.bases[j] ** k
        return scale * self.pairs(support, values) / (n * (n - 1))


def _dense(a):
    uniq, inv = np.unique(a, return_inverse=True)
    return inv.astype(np.uint64).ravel(), len(uniq)


def _sparse(k, s):
    comps = tuple(k)
    if len(comps) != s:
        raise DomainError(f"k has {len(comps)} components, point set has {s}")
    support = tuple(j for j, v in enumerate(comps) if v)
    return support, tuple(comps[j] for j in support)


def m_count(P: PointSet, k, bases: Bases = None) -> int:
    """Ordered pairs of distinct points whose gamma vector dominates ``k``.

    ``bases`` are the criterion base(s); they default to the construction
    bases.  Points are grouped by their leading ``k_j`` digits per coordinate
    and each group of size m contributes m(m-1).
    """
    support, values = _sparse(k, P.s)
    return _Grouper(P, bases).pairs(support, values)


def c_value(P: PointSet, k, bases: Bases = None) -> float:
    support, values = _sparse(k, P.s)
    return _Grouper(P, bases).c_value(support, values)


def net_closed_form(b: int, m: int, knorm: int) -> float:
    """C_b(k) of a (0, m, s)-net in base b for |k| = ``knorm``."""
    if b < 2 or m < 0:
        raise DomainError("need b >= 2 and m >= 0")
    if b**m == 1:
        raise DomainError("closed form undefined for a single point (b**m = 1)")
    return b**knorm * max(b ** (m - knorm) - 1, 0) / (b**m - 1)


def _compositions(total: int, parts: int):
    # positive compositions, lexicographic
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0,) + cuts + (total,)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def _k_family_sparse(s, d, w, L):
    out = []
    for c in range(2, d + 1):
        for first in range(s):
            window = range(first + 1, min(s, first + w + 1))
            for rest in itertools.combinations(window, c - 1):
                support = (first,) + rest
                for total in range(c, L + 1):
                    for vals in _compositions(total, c):
                        out.append((support, vals))

    def lex(item):
        support, vals = item
        dense = [0] * s
        for j, v in zip(support, vals):
            dense[j] = v
        return tuple(dense)

    out.sort(key=lex)
    return out


def enumerate_k_family(s: int, d: int, w: int, L: int) -> Iterator[KVector]:
    """k in N^s with 2..d nonzero entries, range <= w and 2 <= |k| <= L.

    Vectors come out in ascending lexicographic order.
    """
    if not 2 <= d <= s:
        raise DomainError(f"need 2 <= d <= s, got d={d}, s={s}")
    if w < 1:
        raise DomainError("w must be >= 1")
    if L < 2:
        raise DomainError("norm bound L must be >= 2")
    for support, vals in _k_family_sparse(s, d, w, L):
        dense = [0] * s
        for j, v in zip(support, vals):
            dense[j] = v
        yield KVector(tuple(dense))


def default_norm_bound(n: int, base: int) -> int:
    """ceil(log_base n), computed exactly on integers."""
    L, p = 0, 1
    while p < n:
        p *= base
        L += 1
    return max(L, 2)


MODES = ("projection", "family")


@dataclass
class CriterionReport:
    """Values behind c and c-bar.

    In ``family`` mode there is one entry per k of the family.  In
    ``projection`` mode there is one entry per coordinate projection: the
    largest C over k supported on that projection, with ``ks`` holding the
    maximizing k.  Either way c is the max and c-bar the mean of
    ``values``.
    """

    bases: tuple
    s: int
    d: int
    w: int
    L: int
    n: int
    ks: list = field(repr=False)
    values: np.ndarray = field(repr=False)
    label: str = ""
    mode: str = "projection"
    projections: Optional[list] = field(default=None, repr=False)

    @property
    def c(self) -> float:
        return float(self.values.max())

    @property
    def cbar(self) -> float:
        return math.fsum(self.values.tolist()) / len(self.values)

    @property
    def argmax(self) -> KVector:
        return self.ks[int(np.argmax(self.values))]

    @property
    def size(self) -> int:
        return len(self.ks)

    def summary(self) -> dict:
        return {
            "label": self.label,
            "mode": self.mode,
            "bases": list(self.bases) if len(set(self.bases)) > 1 else self.bases[0],
            "s": self.s,
            "d": self.d,
            "w": self.w,
            "L": self.L,
            "n": self.n,
            "family_size": self.size,
            "c": self.c,
            "cbar": self.cbar,
            "argmax": list(self.argmax.components),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if self.mode == "projection":
            wr.writerow(["projection", "k", "C"])
            for u, k, v in zip(self.projections, self.ks, self.values):
                wr.writerow([" ".join(str(j + 1) for j in u), str(k), repr(float(v))])
        else:
            wr.writerow(["k", "C"])
            for k, v in zip(self.ks, self.values):
                wr.writerow([str(k), repr(float(v))])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = self.summary()
        doc["values"] = [[list(k.components), float(v)] for k, v in zip(self.ks, self.values)]
        if self.projections is not None:
            doc["projections"] = [[j + 1 for j in u] for u in self.projections]
        return json.dumps(doc, indent=2)


def _evaluate(grouper, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(lambda it: grouper.c_value(*it), items))
    else:
        vals = [grouper.c_value(*it) for it in items]
    return np.array(vals, dtype=np.float64)


def projections(s: int, d: int, w: int) -> list:
    """Coordinate subsets of size d whose index range is at most w."""
    if not 2 <= d <= s:
        raise DomainError(f"need 2 <= d <= s, got d={d}, s={s}")
    if w < 1:
        raise DomainError("w must be >= 1")
    return [u for u in itertools.combinations(range(s), d) if u[-1] - u[0] <= w]


def _projection_levels(grouper: _Grouper, u: tuple, L: int):
    """Best C and its k at each norm 1..L over k supported on ``u``.

    Extending a k can only lose pairs, so a branch whose partial k already
    has no pairs is cut: every C below it is zero.
    """
    n = grouper.n
    best = np.zeros(L + 1)
    arg: list = [None] * (L + 1)
    caps = [grouper.P.ndigits[j] for j in u]

    def visit(pos, support, values, norm):
        if pos == len(u):
            return
        for k in range(0, min(caps[pos], L - norm) + 1):
            sup = support + (u[pos],) if k else support
            val = values + (k,) if k else values
            tot = norm + k
            if k:
                m = grouper.pairs(sup, val)
                if m == 0:
                    break
                scale = 1
                for j, v in zip(sup, val):
                    scale *= grouper.P.bases[j] ** v
                c = scale * m / (n * (n - 1))
                if c > best[tot] or arg[tot] is None:
                    best[tot] = c
                    arg[tot] = (sup, val)
            visit(pos + 1, sup, val, tot)

    visit(0, (), (), 0)
    return best, arg


def projection_profile(
    P: PointSet,
    bases: Bases = 2,
    d: int = 2,
    w: Optional[int] = None,
    L: int = 16,
    threads: int = 1,
):
    """Per-projection maxima of C for every norm bound 1..L at once.

    Returns ``(projs, values, ks)`` where ``values[p, l]`` is the largest C
    over k supported on ``projs[p]`` with ``1 <= |k| <= l`` (column 0 is
    unused) and ``ks[p][l]`` the first k reaching it.
    """
    if P.n < 2:
        raise DomainError("criterion needs at least two points")
    if L < 1:
        raise DomainError("norm bound L must be >= 1")
    grouper = _Grouper(P, bases)
    w = P.s if w is None else w
    projs = projections(P.s, d, w)
    if not projs:
        raise DomainError("no projection fits the window")
    work = lambda u: _projection_levels(grouper, u, L)  # noqa: E731
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            levels = list(ex.map(work, projs))
    else:
        levels = [work(u) for u in projs]
    values = np.zeros((len(projs), L + 1))
    ks = []
    for p, (best, arg) in enumerate(levels):
        row, cur, cur_k = [None], -1.0, None
        for l in range(1, L + 1):
            if arg[l] is not None and best[l] > cur:
                cur, cur_k = best[l], arg[l]
            values[p, l] = max(cur, 0.0)
            row.append(cur_k)
        ks.append(row)
    return grouper.bases, projs, values, ks


def _dense_k(s, sparse):
    dense = [0] * s
    if sparse is not None:
        for j, v in zip(*sparse):
            dense[j] = v
    return KVector(tuple(dense))


def criterion(
    P: PointSet,
    bases: Bases = 2,
    d: int = 2,
    w: Optional[int] = None,
    L: Optional[int] = None,
    threads: int = 1,
    mode: str = "projection",
) -> CriterionReport:
    """The criteria c (max) and c-bar (mean) of C_b over a k family.

    ``mode="projection"`` takes, for each d-subset of coordinates with range
    at most ``w``, the largest C over nonzero k supported on it with
    ``|k| <= L``; c and c-bar are the max and mean of these per-projection
    maxima.  ``mode="family"`` averages C over every k of K_{d,w,s}
    truncated at ``|k| <= L`` instead.

    ``w`` defaults to s; ``L`` defaults to ceil(log_b n) for the smallest
    criterion base.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if P.n < 2:
        raise DomainError("criterion needs at least two points")
    if not (2 <= d <= P.s):
        raise DomainError(f"need 2 <= d <= s, got d={d}, s={P.s}")
    w = P.s if w is None else w
    if L is None:
        L = default_norm_bound(P.n, min(_resolve_bases(P, bases)))
    if mode == "projection":
        cb, projs, values, ks = projection_profile(P, bases, d, w, L, threads)
        return CriterionReport(
            cb, P.s, d, w, L, P.n,
            [_dense_k(P.s, row[L]) for row in ks],
            values[:, L].copy(), P.label, mode, projs,
        )
    grouper = _Grouper(P, bases)
    items = _k_family_sparse(P.s, d, w, L)
    if not items:
        raise DomainError("empty k family")
    values = _evaluate(grouper, items, threads)
    ks = [_dense_k(P.s, it) for it in items]
    return CriterionReport(grouper.bases, P.s, d, w, L, P.n, ks, values, P.label, mode)


class CqeResult(NamedTuple):
    ok: bool
    violations: list  # (KVector, C) sorted by C descending
    checked: int


def _max_shared_digits(grouper: _Grouper, j: int) -> int:
    """Largest gamma over pairs of distinct values in coordinate j."""
    col = np.unique(grouper.P.digits[:, j])
    K = grouper.P.ndigits[j]
    if len(col) < 2:
        return K
    return int(gamma_columns(col[:-1], col[1:], grouper.P.bases[j], K).max())


def _bounded_box(caps, L):
    """All k with 0 <= k_j <= caps[j] and |k| <= L, lexicographic."""
    s = len(caps)
    k = [0] * s

    def rec(j, budget):
        if j == s:
            yield tuple(k)
            return
        for v in range(min(caps[j], budget) + 1):
            k[j] = v
            yield from rec(j + 1, budget - v)
        k[j] = 0

    return rec(0, L)


def cqe_check(P: PointSet, bases: Bases = None, L: Optional[int] = None, eps: float = CQE_EPS):
    """Check C_b(k) <= 1 + eps over every relevant k.

    Unless points repeat in a coordinate, only k with
    ``k_j <= 1 + max gamma_j`` can give a nonzero pair count, so that box is
    the search space; ``L`` additionally bounds |k|.  When some coordinate
    has repeated values the box is unbounded and ``L`` defaults to
    ``s * ceil(log_b n)``.
    """
    grouper = _Grouper(P, bases)
    caps, repeats = [], False
    for j in range(P.s):
        K = grouper.P.ndigits[j]
        col = grouper.P.digits[:, j]
        if len(np.unique(col)) < len(col):
            repeats = True
        caps.append(min(K, _max_shared_digits(grouper, j) + 1))
    if repeats:
        caps = list(grouper.P.ndigits)
        if L is None:
            L = P.s * default_norm_bound(P.n, min(grouper.bases))
    if L is None:
        L = sum(caps)
    violations, checked = [], 0
    for k in _bounded_box(caps, L):
        support, vals = _sparse(k, P.s)
        c = grouper.c_value(support, vals)
        checked += 1
        if c > 1 + eps:
            violations.append((KVector(k), c))
    violations.sort(key=lambda kv: (-kv[1], kv[0]))
    return CqeResult(not violations, violations, checked)
