"""Gamma-convergence calculus for sequences of grid functions.

On a grid the local upper limit of a sequence ``f_n`` at ``x`` is realized
by a shrinking-window construction: take the supremum of ``f_n`` over the
window ``|y - x| <= delta_n`` and then the limit superior over ``n``.  The
window radii play the role of the trial sequences ``x_n -> x``; they shrink
with ``n`` but never below one grid spacing, which is the resolution floor
of everything in this module.

A Gamma-limit additionally requires a recovery property: every tail element
must reach the upper limit inside its window, up to a tolerance tied to the
window size.  Sequences that keep oscillating between two profiles have an
upper limit (the maximum of the profiles) but no Gamma-limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .funcspace import GridFunction, WeightedGrid, weighted_sup_norm

__all__ = [
    "WindowSchedule",
    "GammaLimit",
    "gamma_limsup",
    "gamma_lim",
    "epsilon_parallel",
    "gamma_domination_check",
    "usc_hull_via_averages",
]


@dataclass(frozen=True)
class WindowSchedule:
    """Nonincreasing window radii, one per sequence element, each >= dx."""

    grid: WeightedGrid
    radii: tuple[float, ...]

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii:
            raise ValueError("need at least one window radius")
        dx = self.grid.dx
        if any(r < dx - 1e-12 for r in radii):
            raise ValueError("window radii must not fall below the grid spacing")
        if any(b > a + 1e-12 for a, b in zip(radii, radii[1:])):
            raise ValueError("window radii must be nonincreasing")
        if radii[0] > self.grid.span + 1e-12:
            raise ValueError("window radii must not exceed the span")
        object.__setattr__(self, "radii", radii)

    @staticmethod
    def default(grid: WeightedGrid, n: int) -> "WindowSchedule":
        """radii delta_k = max(dx, 1/k) for k = 1..n."""
        return WindowSchedule(grid, tuple(max(grid.dx, 1.0 / k) for k in range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.radii)


def _sliding_max(values: np.ndarray, m: int) -> np.ndarray:
    """max over indices within +-m, windows truncated at the boundary."""
    out = values.copy()
    for k in range(1, m + 1):
        out[:-k] = np.maximum(out[:-k], values[k:])
        out[k:] = np.maximum(out[k:], values[:-k])
    return out


def _window_sups(fs: Sequence[GridFunction], w: WindowSchedule) -> np.ndarray:
    """Row n holds sup of f_n over |y - x| <= delta_n, as effective values."""
    if len(fs) == 0:
        raise ValueError("empty sequence")
    if len(fs) > len(w):
        raise ValueError("window schedule shorter than the sequence")
    grid = fs[0].grid
    rows = np.empty((len(fs), grid.size))
    for n, f in enumerate(fs):
        if f.grid is not grid and not np.array_equal(f.grid.points, grid.points):
            raise ValueError("sequence elements must share one grid")
        rows[n] = _sliding_max(f.effective(), grid.index_radius(w.radii[n]))
    return rows


def _tail_start(n: int, tail_fraction: float) -> int:
    """First index of the tail used for the limit superior (last third)."""
    return n - max(1, int(math.ceil(n * tail_fraction)))


def gamma_limsup(fs: Sequence[GridFunction], w: WindowSchedule,
                 tail_fraction: float = 1.0 / 3.0) -> GridFunction:
    """Shrinking-window upper limit of the sequence.

    At each point: sup of ``f_n`` over the window ``delta_n``, then the
    maximum over the trailing portion of the sequence (default: last third,
    at least one element).  Restricting to a tail rather than taking only
    the final element keeps oscillating sequences honest: both alternating
    profiles contribute.  The result is upper semicontinuous by
    construction (窓 sup of usc data); sentinel points survive only where
    every tail element is minus infinity on the whole window.
    """
    rows = _window_sups(fs, w)
    m0 = _tail_start(len(fs), tail_fraction)
    tail = np.max(rows[m0:], axis=0)
    grid = fs[0].grid
    mask = np.isneginf(tail)
    vals = np.where(mask, 0.0, tail)
    return GridFunction(grid, vals, "usc", mask if mask.any() else None)


@dataclass(frozen=True)
class GammaLimit:
    exists: bool
    function: GridFunction | None
    worst_gap: float
    worst_x: float
    tolerance: float


def gamma_lim(fs: Sequence[GridFunction], w: WindowSchedule,
              tol: float | None = None,
              tail_fraction: float = 1.0 / 3.0) -> GammaLimit:
    """Gamma-limit with an explicit recovery check.

    The candidate is :func:`gamma_limsup`.  Recovery holds at ``x`` when
    every tail element can reach the candidate inside its own window:
    ``candidate(x) - min over the tail of the window sups <= tol``.  The
    default tolerance is ``1e-8 + 2 * Lip * delta_last``, the discretization
    floor scaling with the final window.  Alternating sequences fail: the
    candidate is the max of the two profiles and the lower profile cannot
    recover it.
    """
    rows = _window_sups(fs, w)
    m0 = _tail_start(len(fs), tail_fraction)
    upper = np.max(rows[m0:], axis=0)
    lower = np.min(rows[m0:], axis=0)
    grid = fs[0].grid
    mask = np.isneginf(upper)
    gaps = np.where(mask | np.isneginf(lower), np.where(mask, 0.0, np.inf), upper - lower)
    # sentinel candidate with finite lower cannot happen (upper >= lower)

    cand = GridFunction(grid, np.where(mask, 0.0, upper), "usc", mask if mask.any() else None)
    if tol is None:
        if mask.any():
            lip = 0.0
        else:
            lip = cand.lipschitz_constant()
        tol = 1e-8 + 2.0 * lip * w.radii[len(fs) - 1]
    worst = int(np.argmax(gaps))
    worst_gap = float(gaps[worst])
    exists = bool(worst_gap <= tol)
    return GammaLimit(exists, cand if exists else None, worst_gap,
                      float(grid.points[worst]), float(tol))


def epsilon_parallel(f: GridFunction, eps: float) -> GridFunction:
    """Upper parallel regularization at width ``eps``.

    ``x -> (1/kappa(x)) * (sup over |y-x|<=eps of max(f(y)kappa(y), -1/eps) + eps)``.

    Requires ``eps >= dx``.  The floor at ``-1/eps`` makes the construction
    total on functions reaching minus infinity; the output is finite
    everywhere and upper semicontinuous.
    """
    grid = f.grid
    if eps < grid.dx - 1e-12:
        raise ValueError("eps must be at least one grid spacing")
    weighted = np.where(f.neg_inf, -1.0 / eps, np.maximum(f.values * grid.kappa, -1.0 / eps))
    sup = _sliding_max(weighted, grid.index_radius(eps))
    return GridFunction(grid, (sup + eps) / grid.kappa, "usc")


def gamma_domination_check(fs: Sequence[GridFunction], f: GridFunction,
                           eps_list: Sequence[float],
                           windows: Sequence[float] | None = None) -> list[dict]:
    """Tail domination behind the parallel envelope, per (eps, window).

    For each envelope width ``eps`` and compact window ``K`` the check looks
    for the smallest ``n0`` such that ``f_n <= envelope`` on ``K`` for every
    ``n >= n0`` in the given sequence.  Rows carry ``n0`` (1-based) or
    ``"fail"`` together with the worst signed gap ``max (f_n - envelope)``
    over the certified tail (or over everything when failing).
    """
    grid = f.grid
    if windows is None:
        windows = grid.compact_radii
    rows = []
    for eps in eps_list:
        env = epsilon_parallel(f, eps).effective()
        for radius in windows:
            m = grid.window_mask(radius)
            gaps = np.array([np.max(g.effective()[m] - env[m]) for g in fs])
            ok = gaps <= 1e-12
            n0 = None
            for start in range(len(fs)):
                if ok[start:].all():
                    n0 = start + 1
                    break
            if n0 is None:
                rows.append({"epsilon": float(eps), "window": float(radius),
                             "n0": "fail", "worst_gap": float(np.max(gaps))})
            else:
                rows.append({"epsilon": float(eps), "window": float(radius),
                             "n0": n0, "worst_gap": float(np.max(gaps[n0 - 1:]))})
    return rows


def domination_report_json(rows: list[dict]) -> str:
    return json.dumps(rows, sort_keys=True)


def usc_hull_via_averages(g: GridFunction, radii: Sequence[float]) -> GridFunction:
    """Upper-semicontinuous hull through shrinking ball averages.

    Ball averages over the given decreasing radii (trapezoid rule on the
    window, each radius at least one spacing), then a linear extrapolation
    of the last two radii down to radius zero, clamped to the local range
    of ``g`` so the extrapolation cannot escape the data, and finally a
    one-spacing window maximum.  Averaging erases defects of ``g`` on thin
    sets; the final window maximum restores the upper regularization.
    """
    if g.has_neg_inf:
        raise ValueError("averaging needs finite data")
    grid = g.grid
    rads = [float(r) for r in radii]
    if len(rads) < 2:
        raise ValueError("need at least two radii to extrapolate")
    if any(b >= a for a, b in zip(rads, rads[1:])):
        raise ValueError("radii must be strictly decreasing")
    if rads[-1] < grid.dx - 1e-12:
        raise ValueError("radii must stay at or above the grid spacing")

    def ball_average(r: float) -> np.ndarray:
        m = grid.index_radius(r)
        v = g.values
        n = grid.size
        out = np.empty(n)
        # trapezoid over the in-range window; length normalization matches
        # the actually covered interval, so boundary windows stay unbiased
        csum = np.concatenate([[0.0], np.cumsum(v)])
        for i in range(n):
            lo, hi = max(0, i - m), min(n - 1, i + m)
            if hi == lo:
                out[i] = v[i]
                continue
            total = csum[hi + 1] - csum[lo] - 0.5 * (v[lo] + v[hi])
            out[i] = total / (hi - lo)
        return out

    a_prev = ball_average(rads[-2])
    a_last = ball_average(rads[-1])
    slope = (a_last - a_prev) / (rads[-1] - rads[-2])
    tilde = a_last - slope * rads[-1]
    m_loc = grid.index_radius(rads[-2])
    lo = -_sliding_max(-g.values, m_loc)
    hi = _sliding_max(g.values, m_loc)
    tilde = np.minimum(np.maximum(tilde, lo), hi)
    hull = _sliding_max(tilde, 1)
    return GridFunction(grid, hull, "usc")
