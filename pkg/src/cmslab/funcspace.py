"""Weighted function spaces on uniform one-dimensional grids.

Functions are represented by their values on a symmetric uniform grid
``x_0 < x_1 < ... < x_{N-1}`` together with a bounded strictly positive
weight ``kappa``.  The weighted supremum norm of ``f`` is
``sup_i |f(x_i)| * kappa(x_i)``.  Convergence of sequences is always meant
in the mixed sense: a uniform bound in the weighted norm plus uniform
convergence on every compact window ``[-R, R]``.

Upper semicontinuous functions may take the value minus infinity.  The
sentinel is stored as an explicit boolean mask per grid point, never as a
large negative float, so that every arithmetic rule involving it is
implemented deliberately.

Off-grid evaluation, wherever an operator needs it, is piecewise linear
with clamped extension (``f(x) := f(x_edge)`` beyond the span).  Linear
interpolation is used throughout the package because it preserves
monotonicity and convexity of the operators built on top of it.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

__all__ = [
    "WeightedGrid",
    "GridFunction",
    "Mollifier",
    "Cutoff",
    "weighted_sup_norm",
    "mixed_convergence_report",
    "MixedConvergenceReport",
    "mollify",
    "truncate",
    "fd_derivative",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out = np.array(out, dtype=float)  # private copy
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class WeightedGrid:
    """Uniform symmetric grid with a positive bounded weight.

    ``points`` must be strictly increasing with constant spacing ``dx``.
    ``kappa`` holds the weight values at the grid points; it must be
    strictly positive and bounded.  ``compact_radii`` lists the radii of the
    nested compact windows used for all localized convergence reports.
    """

    points: np.ndarray
    kappa: np.ndarray
    compact_radii: tuple[float, ...] = (1.0, 2.0, 4.0)

    def __post_init__(self):
        pts = _readonly(self.points)
        kap = _readonly(self.kappa)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kappa", kap)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least two points")
        steps = np.diff(pts)
        if not np.all(steps > 0):
            raise ValueError("grid points must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("grid spacing must be uniform")
        if kap.shape != pts.shape:
            raise ValueError("kappa must match the grid shape")
        if not np.all(kap > 0) or not np.all(np.isfinite(kap)):
            raise ValueError("kappa must be strictly positive and finite")
        radii = tuple(float(r) for r in self.compact_radii)
        if any(r <= 0 for r in radii) or list(radii) != sorted(radii):
            raise ValueError("compact_radii must be positive and increasing")
        if radii and radii[-1] > self.span + 1e-12:
            raise ValueError("compact windows must sit inside the span")
        object.__setattr__(self, "compact_radii", radii)

    @property
    def dx(self) -> float:
        return float(self.points[1] - self.points[0])

    @property
    def span(self) -> float:
        return float(max(abs(self.points[0]), abs(self.points[-1])))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @staticmethod
    def uniform(
        span: float = 8.0,
        dx: float = 0.02,
        kappa: Callable[[np.ndarray], np.ndarray] | Literal["const", "decay"] = "const",
        compact_radii: Sequence[float] = (1.0, 2.0, 4.0),
    ) -> "WeightedGrid":
        """Symmetric grid on [-span, span].

        ``kappa='const'`` gives the flat weight 1; ``kappa='decay'`` gives
        the bounded-decay weight 1/(1+x^2).  ``2*span/dx`` must be an
        integer so the stated spacing is met exactly.
        """
        n_cells = 2.0 * span / dx
        n = int(round(n_cells))
        if abs(n_cells - n) > 1e-9:
            raise ValueError("2*span/dx must be an integer")
        pts = -span + dx * np.arange(n + 1)
        if kappa == "const":
            kap = np.ones_like(pts)
        elif kappa == "decay":
            kap = 1.0 / (1.0 + pts**2)
        else:
            kap = np.asarray(kappa(pts), dtype=float)
        return WeightedGrid(pts, kap, tuple(compact_radii))

    def window_mask(self, radius: float) -> np.ndarray:
        """Boolean mask of the compact window [-radius, radius]."""
        if radius <= 0:
            raise ValueError("window radius must be positive")
        return np.abs(self.points) <= radius + 1e-12

    def index_radius(self, radius: float) -> int:
        """Number of grid steps contained in ``radius`` (floor with slack)."""
        return int(math.floor(radius / self.dx + 1e-9))


@dataclass(frozen=True)
class GridFunction:
    """A function sampled on a :class:`WeightedGrid`.

    ``values`` holds finite floats.  Points where the function equals minus
    infinity are marked in ``neg_inf``; their ``values`` entry is ignored
    (kept at 0).  ``klass`` is ``'continuous'`` (no sentinels allowed) or
    ``'usc'``.  Plus infinity is rejected everywhere.
    """

    grid: WeightedGrid
    values: np.ndarray
    klass: Literal["continuous", "usc"] = "continuous"
    neg_inf: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.array(np.asarray(self.values, dtype=float))
        if vals.shape != self.grid.points.shape:
            raise ValueError("values must match the grid shape")
        mask = self.neg_inf
        if mask is None:
            mask = np.zeros(vals.shape, dtype=bool)
        else:
            mask = np.array(np.asarray(mask, dtype=bool))
            if mask.shape != vals.shape:
                raise ValueError("neg_inf mask must match the grid shape")
        if np.any(np.isposinf(vals)):
            raise ValueError("plus infinity is not representable")
        if np.any(np.isneginf(vals)):
            raise ValueError("encode minus infinity via the neg_inf mask, not floats")
        if np.any(np.isnan(vals)):
            raise ValueError("values must not contain NaN")
        if self.klass not in ("continuous", "usc"):
            raise ValueError("klass must be 'continuous' or 'usc'")
        if self.klass == "continuous" and mask.any():
            raise ValueError("continuous functions cannot take minus infinity")
        vals[mask] = 0.0
        vals.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "neg_inf", mask)

    # -- constructors ------------------------------------------------

    @staticmethod
    def from_callable(grid: WeightedGrid, fn: Callable[[np.ndarray], np.ndarray],
                      klass: Literal["continuous", "usc"] = "continuous") -> "GridFunction":
        return GridFunction(grid, np.asarray(fn(grid.points), dtype=float) + 0.0, klass)

    @staticmethod
    def constant(grid: WeightedGrid, c: float) -> "GridFunction":
        return GridFunction(grid, np.full(grid.size, float(c)))

    # -- basic queries -----------------------------------------------

    def effective(self) -> np.ndarray:
        """Values with -inf substituted at sentinel points (for sups/maxes)."""
        if not self.neg_inf.any():
            return self.values
        out = self.values.copy()
        out[self.neg_inf] = -np.inf
        return out

    @property
    def has_neg_inf(self) -> bool:
        return bool(self.neg_inf.any())

    def interp(self, x: np.ndarray) -> np.ndarray:
        """Piecewise-linear evaluation with clamped extension."""
        if self.has_neg_inf:
            raise ValueError("off-grid evaluation needs a sentinel-free function")
        return np.interp(x, self.grid.points, self.values)

    def lipschitz_constant(self) -> float:
        """Largest slope between neighbouring grid points."""
        if self.has_neg_inf:
            raise ValueError("Lipschitz constant undefined with sentinels")
        return float(np.max(np.abs(np.diff(self.values))) / self.grid.dx)

    def restrict_sup(self, other: "GridFunction", radius: float) -> float:
        """sup over the window [-radius, radius] of |self - other|."""
        m = self.grid.window_mask(radius)
        a, b = self.effective(), other.effective()
        diff = np.abs(a[m] - b[m])
        return float(np.max(diff))

    # -- arithmetic (sentinel-aware) -----------------------------------

    def _klass_with(self, other: "GridFunction") -> str:
        return "usc" if "usc" in (self.klass, other.klass) else "continuous"

    def __add__(self, other):
        if isinstance(other, GridFunction):
            mask = self.neg_inf | other.neg_inf
            vals = np.where(mask, 0.0, self.values + other.values)
            return GridFunction(self.grid, vals, self._klass_with(other), mask)
        return GridFunction(self.grid, np.where(self.neg_inf, 0.0, self.values + float(other)),
                            self.klass, self.neg_inf)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            if other.has_neg_inf:
                raise ValueError("subtracting a sentinel would create plus infinity")
            vals = np.where(self.neg_inf, 0.0, self.values - other.values)
            return GridFunction(self.grid, vals, self._klass_with(other), self.neg_inf)
        return self + (-float(other))

    def __mul__(self, c):
        c = float(c)
        if c < 0 and self.has_neg_inf:
            raise ValueError("negative scaling of minus infinity is not representable")
        return GridFunction(self.grid, np.where(self.neg_inf, 0.0, c * self.values),
                            self.klass, self.neg_inf if c != 0 else None)

    __rmul__ = __mul__

    def maximum(self, other: "GridFunction") -> "GridFunction":
        mask = self.neg_inf & other.neg_inf
        vals = np.maximum(self.effective(), other.effective())
        vals = np.where(mask, 0.0, vals)
        return GridFunction(self.grid, vals, self._klass_with(other), mask)

    # -- serialization -------------------------------------------------

    def to_csv(self) -> str:
        """CSV with header ``x,value,is_neg_inf`` and 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value", "is_neg_inf"])
        for x, v, m in zip(self.grid.points, self.values, self.neg_inf):
            w.writerow([f"{x:.17g}", f"{v:.17g}", int(m)])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str, kappa="const",
                 compact_radii: Sequence[float] = (1.0, 2.0, 4.0),
                 klass: Literal["continuous", "usc"] = "continuous") -> "GridFunction":
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["x", "value", "is_neg_inf"]:
            raise ValueError("unexpected CSV header")
        xs = np.array([float(r[0]) for r in rows[1:]])
        vs = np.array([float(r[1]) for r in rows[1:]])
        ms = np.array([bool(int(r[2])) for r in rows[1:]])
        if kappa == "const":
            kap = np.ones_like(xs)
        elif kappa == "decay":
            kap = 1.0 / (1.0 + xs**2)
        else:
            kap = np.asarray(kappa(xs), dtype=float)
        grid = WeightedGrid(xs, kap, tuple(compact_radii))
        if ms.any() and klass == "continuous":
            klass = "usc"
        return GridFunction(grid, vs, klass, ms)

    def to_json(self) -> str:
        """JSON document {grid: {dx, span}, values, klass}.

        Sentinel entries are emitted as ``null``; the weight is not part of
        the payload (reload assumes the flat weight unless told otherwise).
        """
        vals: list = []
        for v, m in zip(self.values, self.neg_inf):
            vals.append(None if m else float(f"{v:.17g}"))
        doc = {
            "grid": {"dx": self.grid.dx, "span": self.grid.span},
            "values": vals,
            "klass": self.klass,
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str, kappa="const",
                  compact_radii: Sequence[float] = (1.0, 2.0, 4.0)) -> "GridFunction":
        doc = json.loads(text)
        grid = WeightedGrid.uniform(span=doc["grid"]["span"], dx=doc["grid"]["dx"],
                                    kappa=kappa, compact_radii=compact_radii)
        raw = doc["values"]
        if len(raw) != grid.size:
            raise ValueError("value count does not match the reconstructed grid")
        mask = np.array([v is None for v in raw])
        vals = np.array([0.0 if v is None else float(v) for v in raw])
        return GridFunction(grid, vals, doc["klass"], mask)


@dataclass(frozen=True)
class Mollifier:
    """Smoothing kernel profile on [-1, 1] with unit trapezoidal integral.

    ``index`` n rescales the profile to eta_n(x) = n * eta(n x), supported
    on [-1/n, 1/n].
    """

    profile_x: np.ndarray
    profile: np.ndarray
    index: int

    def __post_init__(self):
        px = _readonly(self.profile_x)
        pv = _readonly(self.profile)
        object.__setattr__(self, "profile_x", px)
        object.__setattr__(self, "profile", pv)
        if px.ndim != 1 or px.size < 5:
            raise ValueError("profile needs at least five samples")
        if abs(px[0] + 1.0) > 1e-12 or abs(px[-1] - 1.0) > 1e-12:
            raise ValueError("profile must cover [-1, 1]")
        if np.any(pv < 0):
            raise ValueError("profile must be nonnegative")
        total = np.trapz(pv, px)
        if abs(total - 1.0) > 1e-12:
            raise ValueError("profile must integrate to 1 (got %.17g)" % total)
        if self.index < 1:
            raise ValueError("index must be a positive integer")

    @staticmethod
    def standard(index: int, num_points: int = 201) -> "Mollifier":
        """The usual bump exp(-1/(1-x^2)) normalized on [-1, 1]."""
        x = np.linspace(-1.0, 1.0, num_points)
        inner = np.zeros_like(x)
        core = np.abs(x) < 1.0
        inner[core] = np.exp(-1.0 / (1.0 - x[core] ** 2))
        inner /= np.trapz(inner, x)
        return Mollifier(x, inner, index)

    @property
    def radius(self) -> float:
        return 1.0 / self.index


@dataclass(frozen=True)
class Cutoff:
    """Smooth plateau function: 1 on [-index, index], 0 outside a margin."""

    grid: WeightedGrid
    values: np.ndarray
    index: int

    def __post_init__(self):
        vals = _readonly(self.values)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.grid.points.shape:
            raise ValueError("cutoff values must match the grid")
        if np.any(vals < -1e-15) or np.any(vals > 1.0 + 1e-15):
            raise ValueError("cutoff must take values in [0, 1]")
        inner = np.abs(self.grid.points) <= self.index + 1e-12
        if not np.allclose(vals[inner], 1.0, atol=1e-12):
            raise ValueError("cutoff must equal 1 on [-index, index]")
        if self.index < 1:
            raise ValueError("index must be a positive integer")

    @staticmethod
    def smoothstep(grid: WeightedGrid, index: int, margin: float = 1.0) -> "Cutoff":
        """C-infinity ramp from 1 at |x|=index down to 0 at |x|=index+margin."""
        if index + margin > grid.span + 1e-12:
            raise ValueError("cutoff support must fit inside the span")

        def h(s):
            out = np.zeros_like(s)
            pos = s > 0
            out[pos] = np.exp(-1.0 / s[pos])
            return out

        s = (np.abs(grid.points) - index) / margin
        ramp = h(1.0 - s) / (h(1.0 - s) + h(s))
        ramp[s <= 0.0] = 1.0
        ramp[s >= 1.0] = 0.0
        return Cutoff(grid, ramp, index)


# ----------------------------------------------------------------------
# operations


def weighted_sup_norm(f: GridFunction, part: Literal["full", "positive"] = "full") -> float:
    """``sup |f| * kappa`` (part='full') or ``sup f^+ * kappa`` (part='positive').

    The full norm rejects sentinel points; the positive-part norm treats
    them as contributing zero.
    """
    kap = f.grid.kappa
    if part == "full":
        if f.has_neg_inf:
            raise ValueError("full weighted norm undefined at minus infinity")
        return float(np.max(np.abs(f.values) * kap))
    if part == "positive":
        pos = np.where(f.neg_inf, 0.0, np.maximum(f.values, 0.0))
        return float(np.max(pos * kap))
    raise ValueError("part must be 'full' or 'positive'")


@dataclass(frozen=True)
class MixedConvergenceReport:
    kappa_bound: float
    window_radii: tuple[float, ...]
    window_errors: tuple[tuple[float, ...], ...]  # per window, per n
    tail_errors: tuple[float, ...]  # per window, error of the last element
    tolerance: float
    converged: bool

    def to_json(self) -> str:
        doc = {
            "kappa_bound": self.kappa_bound,
            "windows": [
                {"radius": r, "errors": list(errs), "tail": t}
                for r, errs, t in zip(self.window_radii, self.window_errors, self.tail_errors)
            ],
            "tolerance": self.tolerance,
            "converged": self.converged,
        }
        return json.dumps(doc, sort_keys=True)


def mixed_convergence_report(fs: Sequence[GridFunction], f: GridFunction,
                             tol: float = 1e-6) -> MixedConvergenceReport:
    """Check boundedness in the weighted norm plus local uniform convergence.

    Declares convergence iff sup_n of the weighted norms is finite (always
    true for sentinel-free data; sentinels are rejected) and for every
    compact window the error of the final sequence element is below ``tol``.
    """
    if len(fs) == 0:
        raise ValueError("empty sequence")
    grid = f.grid
    bound = max(weighted_sup_norm(g) for g in fs)
    radii = grid.compact_radii
    per_window = []
    tails = []
    for r in radii:
        errs = tuple(g.restrict_sup(f, r) for g in fs)
        per_window.append(errs)
        tails.append(errs[-1])
    converged = math.isfinite(bound) and all(t < tol for t in tails)
    return MixedConvergenceReport(bound, radii, tuple(per_window), tuple(tails), tol, converged)


def mollify(f: GridFunction, m: Mollifier) -> GridFunction:
    """Convolution ``f * eta_n`` by trapezoidal quadrature on the kernel grid.

    Evaluation of ``f`` off the lattice is piecewise linear with clamped
    extension.  The result is continuous.
    """
    if f.klass != "continuous":
        raise ValueError("mollification needs a continuous input")
    if m.radius > f.grid.span:
        raise ValueError("kernel support exceeds the grid span")
    u = m.profile_x
    du = u[1:] - u[:-1]
    w = np.zeros_like(u)
    w[:-1] += du / 2.0
    w[1:] += du / 2.0
    w = w * m.profile  # trapezoid weights in u; eta_n(u/n) du/n * n = eta(u) du
    w = w / np.sum(w)  # unit mass exactly, so constants are preserved
    # (f*eta_n)(x) = sum_j w_j f(x - u_j/n)
    shifts = -u / m.index
    vals = np.zeros(f.grid.size)
    for wj, s in zip(w, shifts):
        vals += wj * f.interp(f.grid.points + s)
    return GridFunction(f.grid, vals, "continuous")


def truncate(f: GridFunction, c: Cutoff) -> GridFunction:
    """Pointwise product ``f * phi_n``; sentinels with zero cutoff become 0."""
    keep = f.neg_inf & (c.values > 0)
    vals = np.where(f.neg_inf, 0.0, f.values * c.values)
    return GridFunction(f.grid, vals, f.klass, keep if keep.any() else None)


def fd_derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Second-order finite difference derivative (order 1 or 2).

    Central stencils inside, one-sided second-order stencils at the two
    boundary points.
    """
    if f.klass != "continuous":
        raise ValueError("finite differences need a continuous input")
    if f.grid.size < 5:
        raise ValueError("need at least five grid points")
    v = f.values
    dx = f.grid.dx
    out = np.empty_like(v)
    if order == 1:
        out[1:-1] = (v[2:] - v[:-2]) / (2 * dx)
        out[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dx)
        out[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dx)
    elif order == 2:
        out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / dx**2
        out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / dx**2
        out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / dx**2
    else:
        raise ValueError("order must be 1 or 2")
    return GridFunction(f.grid, out, "continuous")
