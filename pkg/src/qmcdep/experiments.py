"""Replication engine for randomized QMC experiments.

A plan builds its point set once at the largest sample size, randomizes it
V times and evaluates the integrand on every prefix length in the n-grid.
Each randomization acts point by point, so the first n rows of a randomized
n_max-point set are exactly the randomized n-point set.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import DimensionMismatch, DomainError
from .integrands import Integrand
from .randomize import KINDS, RandomizerSpec, derive_stream, randomize
from .sequences import PointSet, SequenceSpec, to_reals

__all__ = [
    "MC",
    "ExperimentPlan",
    "ExperimentResult",
    "estimate_once",
    "run_replications",
    "convergence_sweep",
    "histogram_study",
    "multiples_grid",
    "mc_points",
]

MC = "mc"
RANDOMIZERS = KINDS + ("none",)
_TAG_MC = 0x4D43  # "MC"
_TAG_HIST = 0x48495354  # "HIST"

Construction = Union[SequenceSpec, str]


def multiples_grid(step: int, count: int) -> list[int]:
    """``[step, 2 step, ..., count step]``, e.g. multiples of a base power."""
    if step < 1 or count < 1:
        raise DomainError("step and count must be positive")
    return [step * m for m in range(1, count + 1)]


def mc_points(n: int, s: int, master_seed: int, v: int) -> np.ndarray:
    """Plain Monte Carlo points for replication v, column j from its own stream."""
    cols = [kernels.uniform01(derive_stream(master_seed, v, j) ^ _TAG_MC, n) for j in range(s)]
    return np.stack(cols, axis=1) if cols else np.zeros((n, 0))


def _label(construction: Construction) -> str:
    if construction == MC:
        return MC
    return construction.label or construction.family


@dataclass(frozen=True)
class ExperimentPlan:
    """What to integrate, with which points, how often and at which sizes.

    ``construction`` is a :class:`SequenceSpec` or ``"mc"`` for plain Monte
    Carlo.  ``randomizer`` is a randomization kind or ``"none"``; it is
    ignored for Monte Carlo.
    """

    construction: Construction
    randomizer: str
    integrand: Integrand
    ns: tuple
    V: int = 25
    master_seed: int = 0
    start_index: int = 1
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        if self.V < 2:
            raise DomainError("V must be >= 2")
        if not self.ns or min(self.ns) < 2:
            raise DomainError("every sample size must be >= 2")
        if self.randomizer not in RANDOMIZERS:
            raise DomainError(f"unknown randomizer {self.randomizer!r}; expected one of {RANDOMIZERS}")
        if self.construction != MC and not isinstance(self.construction, SequenceSpec):
            raise DomainError("construction must be a SequenceSpec or 'mc'")

    @property
    def label(self) -> str:
        return _label(self.construction)

    @property
    def randomizer_label(self) -> str:
        return "none" if self.construction == MC else self.randomizer

    def describe(self) -> dict:
        c = self.construction
        doc = {
            "construction": self.label,
            "randomizer": self.randomizer_label,
            "integrand": self.integrand.name,
            "s": self.integrand.s,
            "ns": list(self.ns),
            "V": self.V,
            "master_seed": self.master_seed,
            "start_index": self.start_index,
        }
        if c != MC:
            doc["family"] = c.family
            if c.base is not None:
                doc["base"] = c.base
        return doc


@dataclass
class ExperimentResult:
    """Per-n estimates and the MSE (mean known) or variance across replications."""

    plan: ExperimentPlan
    ns: tuple
    estimates: np.ndarray  # (len(ns), V)
    metric: str
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.values is None:
            self.values = np.array([_metric(row, self.plan.integrand.true_mean) for row in self.estimates])

    def rows(self):
        for n, v in zip(self.ns, self.values):
            yield n, self.metric, float(v), self.plan.label, self.plan.randomizer_label

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        if header:
            wr.writerow(["n", "metric", "value", "construction", "randomizer"])
        for n, metric, v, con, rnd in self.rows():
            wr.writerow([n, metric, repr(v), con, rnd])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "plan": self.plan.describe(),
            "metric": self.metric,
            "rows": [
                {"n": n, "value": float(v), "estimates": [float(e) for e in est]}
                for n, v, est in zip(self.ns, self.values, self.estimates)
            ],
        }
        return json.dumps(doc, indent=2)


def _metric(estimates: np.ndarray, mu: Optional[float]) -> float:
    est = [float(e) for e in estimates]
    V = len(est)
    if mu is not None:
        return math.fsum((e - mu) ** 2 for e in est) / V
    mean = math.fsum(est) / V
    return math.fsum((e - mean) ** 2 for e in est) / (V - 1)


def estimate_once(P: Union[PointSet, np.ndarray], f: Integrand) -> float:
    """Mean of ``f`` over the points, with compensated summation."""
    x = to_reals(P) if isinstance(P, PointSet) else np.asarray(P, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != f.s:
        raise DimensionMismatch(f"{f.name} needs {f.s} coordinates, points have shape {x.shape}")
    if x.shape[0] == 0:
        raise DomainError("cannot average over zero points")
    return math.fsum(np.asarray(f(x), dtype=np.float64).tolist()) / x.shape[0]


def _prefix_means(fx: np.ndarray, ns: Sequence[int]) -> list[float]:
    # exact running sums of the prefixes, one fsum per segment
    out, acc, prev = [], [], 0
    for n in ns:
        acc.append(math.fsum(fx[prev:n].tolist()))
        prev = n
        out.append(math.fsum(acc) / n)
    return out


def _replicate(plan: ExperimentPlan, base: Optional[PointSet], v: int) -> list[float]:
    n_max = max(plan.ns)
    if plan.construction == MC:
        x = mc_points(n_max, plan.integrand.s, plan.master_seed, v)
    elif plan.randomizer == "none":
        x = to_reals(base)
    else:
        x = to_reals(randomize(base, RandomizerSpec(plan.randomizer, plan.master_seed, v)))
    fx = np.asarray(plan.integrand(x), dtype=np.float64)
    order = sorted(set(plan.ns))
    means = dict(zip(order, _prefix_means(fx, order)))
    return [means[n] for n in plan.ns]


def _build(plan: ExperimentPlan) -> Optional[PointSet]:
    if plan.construction == MC:
        return None
    P = plan.construction.build(max(plan.ns), plan.start_index)
    if P.s != plan.integrand.s:
        raise DimensionMismatch(f"point set has {P.s} coordinates, {plan.integrand.name} needs {plan.integrand.s}")
    return P


def run_replications(plan: ExperimentPlan) -> ExperimentResult:
    """V independent randomizations evaluated at every n of the plan.

    Replication v uses the streams ``derive_stream(master_seed, v, j)``;
    the result does not depend on ``plan.threads``.
    """
    base = _build(plan)
    if plan.threads > 1:
        with ThreadPoolExecutor(plan.threads) as ex:
            cols = list(ex.map(lambda v: _replicate(plan, base, v), range(plan.V)))
    else:
        cols = [_replicate(plan, base, v) for v in range(plan.V)]
    est = np.array(cols, dtype=np.float64).T
    metric = "MSE" if plan.integrand.true_mean is not None else "Var"
    return ExperimentResult(plan, plan.ns, est, metric)


def convergence_sweep(plan: ExperimentPlan) -> ExperimentResult:
    """One row per n of an ascending grid."""
    if list(plan.ns) != sorted(plan.ns) or len(set(plan.ns)) != len(plan.ns):
        raise DomainError("the n-grid must be strictly ascending")
    return run_replications(plan)


@dataclass
class HistogramRow:
    kind: str  # scrambled, variant or mc
    label: str
    index: int
    metric: str
    value: float


def histogram_study(
    n: int,
    R: int,
    scrambled: SequenceSpec,
    variants: Sequence[SequenceSpec],
    f: Integrand,
    seed: int = 0,
    scrambler: str = "linear_scramble",
    V: int = 25,
    threads: int = 1,
    scramble_seeds: Optional[Sequence[int]] = None,
) -> list[HistogramRow]:
    """MSE (or Var) of R independently scrambled sets, each deterministic variant, and MC.

    Scrambled set r is ``scrambler`` applied once with its own seed, then
    randomized by V digital shifts like every deterministic variant.  The
    shift streams come from ``seed`` and are shared by all rows.
    """
    if R < 1:
        raise DomainError("R must be >= 1")
    if scrambler not in KINDS:
        raise DomainError(f"unknown scrambler {scrambler!r}")
    seeds = list(scramble_seeds) if scramble_seeds is not None else [
        derive_stream(seed ^ _TAG_HIST, r, 0) for r in range(R)
    ]
    if len(seeds) != R:
        raise DomainError("need one scramble seed per scrambled set")
    base = scrambled.build(n)

    def shifted_metric(P: PointSet) -> float:
        est = []
        for v in range(V):
            x = to_reals(randomize(P, RandomizerSpec("digital_shift", seed, v)))
            est.append(estimate_once(x, f))
        return _metric(np.array(est), f.true_mean)

    def scrambled_row(r):
        P = randomize(base, RandomizerSpec(scrambler, seeds[r], 0))
        return HistogramRow("scrambled", scrambled.label or scrambled.family, r, "", shifted_metric(P))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(scrambled_row, range(R)))
    else:
        rows = [scrambled_row(r) for r in range(R)]
    for i, spec in enumerate(variants):
        rows.append(HistogramRow("variant", spec.label or spec.family, i, "", shifted_metric(spec.build(n))))
    mc = run_replications(ExperimentPlan(MC, "none", f, (n,), V, seed))
    rows.append(HistogramRow("mc", MC, 0, "", float(mc.values[0])))
    metric = "MSE" if f.true_mean is not None else "Var"
    for row in rows:
        row.metric = metric
    return rows


def histogram_csv(rows: Sequence[HistogramRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["kind", "label", "index", "metric", "value"])
    for r in rows:
        wr.writerow([r.kind, r.label, r.index, r.metric, repr(r.value)])
    return buf.getvalue()
