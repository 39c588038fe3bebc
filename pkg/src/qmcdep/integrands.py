"""Test integrands on [0,1)^s: h0, h1, g2 and a stochastic activity network."""
from __future__ import annotations

import graphlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from .errors import CycleError, DimensionMismatch, DomainError, ParseError

__all__ = [
    "Integrand",
    "SanNetwork",
    "h0",
    "h1",
    "g2",
    "san_indicator",
    "inverse_cdf",
    "make_integrand",
    "default_san",
    "INVERSE_CDFS",
]


def _points(x) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        return a[None, :], True
    if a.ndim != 2:
        raise DimensionMismatch("expected a point or an (n, s) array of points")
    return a, False


def _out(v: np.ndarray, single: bool):
    return float(v[0]) if single else v


def h0(x):
    """``sum_j (exp(x_j) - e + 1)``; integrates to 0."""
    a, single = _points(x)
    return _out(np.sum(np.exp(a) - math.e + 1.0, axis=1), single)


def h1(x):
    """``(sum_j x_j)**2``; integrates to s/3 + s(s-1)/4."""
    a, single = _points(x)
    return _out(np.sum(a, axis=1) ** 2, single)


def g2(x, c: float):
    """``prod_j (1 + c (x_j - 1/2))``; integrates to 1."""
    a, single = _points(x)
    return _out(np.prod(1.0 + c * (a - 0.5), axis=1), single)


def _uniform(u, a=0.0, b=1.0):
    return a + (b - a) * u


def _exponential(u, rate=1.0):
    if rate <= 0:
        raise DomainError("exponential rate must be positive")
    return -np.log1p(-u) / rate


def _normal(u, mu=0.0, sigma=1.0):
    if sigma <= 0:
        raise DomainError("normal sigma must be positive")
    return mu + sigma * ndtri(u)


def _constant(u, value=1.0):
    return np.full_like(u, float(value))


INVERSE_CDFS: dict[str, Callable] = {
    "uniform": _uniform,
    "exponential": _exponential,
    "normal": _normal,
    "constant": _constant,
}


def inverse_cdf(dist: str, params=None) -> Callable[[np.ndarray], np.ndarray]:
    """Inverse CDF ``u -> F^{-1}(u)`` for a registered distribution.

    ``params`` is a dict of keyword arguments or a list of positional ones.
    """
    try:
        fn = INVERSE_CDFS[dist]
    except KeyError:
        raise DomainError(f"unknown distribution {dist!r}; known: {sorted(INVERSE_CDFS)}") from None
    params = params or {}
    if isinstance(params, dict):
        return lambda u: fn(np.asarray(u, dtype=np.float64), **params)
    return lambda u: fn(np.asarray(u, dtype=np.float64), *params)


@dataclass(frozen=True)
class Arc:
    tail: str
    head: str
    dist: str
    params: object = None


class SanNetwork:
    """Stochastic activity network: arc durations come from inverse CDFs.

    Arc l takes coordinate l of the input point.  The integrand is the
    indicator that the longest source-to-sink path exceeds ``threshold``.
    """

    def __init__(self, nodes, arcs, source, sink, threshold: float, name: str = "san"):
        if isinstance(nodes, int):
            nodes = list(range(1, nodes + 1))
        self.nodes = [str(v) for v in nodes]
        known = set(self.nodes)
        self.arcs = []
        for a in arcs:
            arc = a if isinstance(a, Arc) else Arc(str(a["from"]), str(a["to"]), a["dist"], a.get("params"))
            if arc.tail not in known or arc.head not in known:
                raise ParseError(f"arc {arc.tail}->{arc.head} uses an unknown node")
            inverse_cdf(arc.dist, arc.params)  # validates the name
            self.arcs.append(arc)
        self.source, self.sink = str(source), str(sink)
        if self.source not in known or self.sink not in known:
            raise ParseError("source and sink must be listed nodes")
        self.threshold = float(threshold)
        self.name = name
        self._icdf = [inverse_cdf(a.dist, a.params) for a in self.arcs]
        sorter = graphlib.TopologicalSorter({v: set() for v in self.nodes})
        for a in self.arcs:
            sorter.add(a.head, a.tail)
        try:
            self.order = list(sorter.static_order())
        except graphlib.CycleError as exc:
            raise CycleError(f"network has a cycle through {exc.args[1]}") from None

    @property
    def dimension(self) -> int:
        return len(self.arcs)

    @classmethod
    def from_dict(cls, doc: dict, name: str = "san") -> "SanNetwork":
        try:
            return cls(doc["nodes"], doc["arcs"], doc["source"], doc["sink"], doc["threshold"],
                       doc.get("name", name))
        except KeyError as exc:
            raise ParseError(f"SAN config is missing key {exc.args[0]!r}") from None

    @classmethod
    def load(cls, path) -> "SanNetwork":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None
        return cls.from_dict(doc, Path(path).stem)

    def durations(self, x) -> np.ndarray:
        a, _ = _points(x)
        if a.shape[1] != self.dimension:
            raise DimensionMismatch(f"network has {self.dimension} arcs, point has {a.shape[1]} coordinates")
        return np.stack([f(a[:, l]) for l, f in enumerate(self._icdf)], axis=1)

    def longest_path(self, x):
        """Longest source-to-sink path length; -inf if the sink is unreachable."""
        a, single = _points(x)
        dur = self.durations(a)
        into: dict[str, list[int]] = {v: [] for v in self.nodes}
        for l, arc in enumerate(self.arcs):
            into[arc.head].append(l)
        dist = {v: np.full(a.shape[0], -np.inf) for v in self.nodes}
        dist[self.source][:] = 0.0
        for v in self.order:
            for l in into[v]:
                np.maximum(dist[v], dist[self.arcs[l].tail] + dur[:, l], out=dist[v])
        return _out(dist[self.sink], single)

    def __call__(self, x):
        length = self.longest_path(x)
        return (np.asarray(length) > self.threshold).astype(np.float64) if np.ndim(length) else float(length > self.threshold)


def san_indicator(x, net: SanNetwork):
    """1 if the longest path under durations ``F_l^{-1}(x_l)`` exceeds the threshold."""
    return net(x)


def default_san() -> SanNetwork:
    """The bundled 12-arc example network (not the network of any publication)."""
    text = resources.files("qmcdep").joinpath("data/san_default.json").read_text()
    return SanNetwork.from_dict(json.loads(text), "san_default")


@dataclass(frozen=True)
class Integrand:
    """A vectorized function on [0,1)^s with an optional known mean."""

    name: str
    s: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    true_mean: Optional[float] = None

    def __call__(self, x):
        a, single = _points(x)
        if a.shape[1] != self.s:
            raise DimensionMismatch(f"{self.name} expects {self.s} coordinates, got {a.shape[1]}")
        return _out(np.asarray(self.evaluator(a), dtype=np.float64), single)


def make_integrand(name: str, s: Optional[int] = None, c: Optional[float] = None,
                   san: Optional[SanNetwork] = None) -> Integrand:
    """Build ``h0``, ``h1``, ``g2`` (needs ``c``) or ``san`` (default network if none)."""
    if name == "san":
        net = san or default_san()
        if s is not None and s != net.dimension:
            raise DimensionMismatch(f"network {net.name} has {net.dimension} arcs, not {s}")
        return Integrand(f"san:{net.name}", net.dimension, net, None)
    if s is None or s < 1:
        raise DomainError(f"{name} needs a dimension s >= 1")
    if name == "h0":
        return Integrand("h0", s, h0, 0.0)
    if name == "h1":
        return Integrand("h1", s, h1, s / 3 + s * (s - 1) / 4)
    if name == "g2":
        if c is None:
            raise DomainError("g2 needs the constant c")
        return Integrand(f"g2(c={c})", s, lambda a: g2(a, c), 1.0)
    raise DomainError(f"unknown integrand {name!r}")
