"""One-dimensional probability measures: Gaussian and finitely atomic.

Provides the two transport-side diagnostics used throughout the operator
catalog: the order-2 Wasserstein distance (closed form for Gaussians,
sorted quantile coupling for atoms) and relative entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussianMeasure",
    "AtomicMeasure",
    "QuadratureRule",
    "w2_1d",
    "relative_entropy",
]


@dataclass(frozen=True)
class GaussianMeasure:
    mean: float = 0.0
    var: float = 1.0

    def __post_init__(self):
        if self.var < 0:
            raise ValueError("variance must be nonnegative")

    @property
    def std(self) -> float:
        return math.sqrt(self.var)

    def p_moment(self, p: float = 2.0) -> float:
        """E|X - mean|^p, used for the small-time moment diagnostics."""
        if p == 2.0:
            return self.var
        if p == 1.0:
            return self.std * math.sqrt(2.0 / math.pi)
        # general absolute central moment of a normal law
        return self.std**p * 2.0 ** (p / 2.0) * math.gamma((p + 1) / 2.0) / math.sqrt(math.pi)


@dataclass(frozen=True)
class AtomicMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(np.asarray(self.points, dtype=float))
        wts = np.array(np.asarray(self.weights, dtype=float))
        if pts.ndim != 1 or pts.shape != wts.shape or pts.size == 0:
            raise ValueError("points and weights must be matching 1-d arrays")
        if np.any(wts < 0):
            raise ValueError("weights must be nonnegative")
        if abs(wts.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to one")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @staticmethod
    def dirac(point: float = 0.0) -> "AtomicMeasure":
        return AtomicMeasure(np.array([point]), np.array([1.0]))

    def shifted(self, s: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points + s, self.weights)

    def p_moment(self, p: float = 2.0) -> float:
        return float(np.sum(self.weights * np.abs(self.points) ** p))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes and weights for expectations against N(0, 1).

    ``E[g(Z)] ~= sum w_i g(z_i)``.  Weights are normalized to sum to one so
    constants are preserved exactly; the node count should be odd so the
    origin is a node.
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nd = np.array(np.asarray(self.nodes, dtype=float))
        wt = np.array(np.asarray(self.weights, dtype=float))
        if nd.shape != wt.shape or nd.ndim != 1:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if nd.size % 2 == 0:
            raise ValueError("node count must be odd")
        if abs(wt.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be normalized")
        nd.setflags(write=False)
        wt.setflags(write=False)
        object.__setattr__(self, "nodes", nd)
        object.__setattr__(self, "weights", wt)

    @staticmethod
    def gauss_hermite(n: int = 33) -> "QuadratureRule":
        if n % 2 == 0 or n < 3:
            raise ValueError("node count must be odd and at least 3")
        x, w = np.polynomial.hermite.hermgauss(n)
        nodes = x * math.sqrt(2.0)
        weights = w / w.sum()
        return QuadratureRule(nodes, weights)

    def atoms(self, measure: "GaussianMeasure | AtomicMeasure") -> AtomicMeasure:
        """Deterministic atomization of a transition measure."""
        if isinstance(measure, AtomicMeasure):
            return measure
        if measure.var == 0.0:
            return AtomicMeasure.dirac(measure.mean)
        return AtomicMeasure(measure.mean + measure.std * self.nodes, self.weights)


Measure = GaussianMeasure | AtomicMeasure


def _quantile_segments(nu: AtomicMeasure, mu: AtomicMeasure):
    """Common refinement of the two quantile functions."""
    order_n = np.argsort(nu.points, kind="stable")
    order_m = np.argsort(mu.points, kind="stable")
    pn, wn = nu.points[order_n], nu.weights[order_n]
    pm, wm = mu.points[order_m], mu.weights[order_m]
    cn = np.concatenate([[0.0], np.cumsum(wn)])
    cm = np.concatenate([[0.0], np.cumsum(wm)])
    cn[-1] = cm[-1] = 1.0
    cuts = np.unique(np.concatenate([cn, cm]))
    segs = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        i = np.searchsorted(cn, mid, side="right") - 1
        j = np.searchsorted(cm, mid, side="right") - 1
        segs.append((b - a, pn[min(i, len(pn) - 1)], pm[min(j, len(pm) - 1)]))
    return segs


def w2_1d(nu: Measure, mu: Measure) -> float:
    """Order-2 Wasserstein distance between two measures on the line.

    Gaussian pair: sqrt((m1-m2)^2 + (s1-s2)^2).  Atomic pair: sorted
    quantile coupling, the optimal monotone rearrangement in one dimension.
    Mixed pairs are not supported.
    """
    if isinstance(nu, GaussianMeasure) and isinstance(mu, GaussianMeasure):
        return math.sqrt((nu.mean - mu.mean) ** 2 + (nu.std - mu.std) ** 2)
    if isinstance(nu, AtomicMeasure) and isinstance(mu, AtomicMeasure):
        total = sum(w * (a - b) ** 2 for w, a, b in _quantile_segments(nu, mu))
        return math.sqrt(total)
    raise ValueError("w2_1d supports Gaussian-Gaussian or atomic-atomic pairs")


def relative_entropy(nu: Measure, mu: Measure) -> float:
    """Relative entropy H(nu | mu); plus infinity when nu escapes mu.

    Gaussian pair: 0.5 * (s^2/t + (m1-m2)^2/t - 1 - ln(s^2/t)) with s^2 the
    variance of nu and t the variance of mu.  Atomic pair: sum of
    nu_i * ln(nu_i / mu_i) over matching atom positions.  A mixed pair is
    never absolutely continuous, so the value is plus infinity.
    """
    if isinstance(nu, GaussianMeasure) and isinstance(mu, GaussianMeasure):
        if mu.var == 0.0:
            return 0.0 if (nu.var == 0.0 and nu.mean == mu.mean) else math.inf
        if nu.var == 0.0:
            return math.inf
        ratio = nu.var / mu.var
        return 0.5 * (ratio + (nu.mean - mu.mean) ** 2 / mu.var - 1.0 - math.log(ratio))
    if isinstance(nu, AtomicMeasure) and isinstance(mu, AtomicMeasure):
        total = 0.0
        for p, w in zip(nu.points, nu.weights):
            if w == 0.0:
                continue
            hit = np.isclose(mu.points, p, rtol=0.0, atol=1e-12)
            mass = float(mu.weights[hit].sum())
            if mass == 0.0:
                return math.inf
            total += w * math.log(w / mass)
        return total
    return math.inf
