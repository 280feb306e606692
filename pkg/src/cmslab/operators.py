"""Catalog of convex monotone one-step operators on grid functions.

Every operator here maps a continuous grid function to a continuous grid
function, fixes constants appropriately, is monotone, and is convex in its
argument.  Off-grid reads are piecewise linear with clamped extension;
linear interpolation is the only interpolation used anywhere because it
preserves the monotonicity and convexity of the operators (higher-order
schemes would not).

The catalog:

``reference_step``     expectation against a transition measure moved by an
                       affine drift map (linear baseline, no optimization),
``control_step``       best diffusion/drift pair from a finite control set,
                       each priced by a running cost,
``drift_step``         best deterministic shift of the reference transition,
                       priced by a rescaled convex cost of the shift rate,
``wasserstein_step``   best transport perturbation of the reference
                       transition within a budgeted order-p distance,
``entropic_exact``     closed-form log-integral semigroup used as the
                       analytic yardstick,
``hjb_fd_oracle``      explicit monotone finite-difference march for the
                       dynamic-programming equation of ``control_step``.

All steps are pure functions; given identical inputs they return
bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .funcspace import GridFunction, WeightedGrid
from .measures import AtomicMeasure, GaussianMeasure, Measure, QuadratureRule

__all__ = [
    "ReferenceModel",
    "ControlCost",
    "PhiCost",
    "legendre_conjugate",
    "legendre_conjugate_array",
    "reference_step",
    "control_step",
    "drift_step",
    "wasserstein_step",
    "entropic_exact",
    "hjb_fd_oracle",
    "translate",
    "shift_commutator_defect",
    "control_tail_bound",
    "drift_shift_distance",
    "ControlModel",
    "PerturbationModel",
    "EntropicModel",
]


# ----------------------------------------------------------------------
# model ingredients


@dataclass(frozen=True)
class ReferenceModel:
    """Affine drift family plus transition measures.

    The drift map is ``psi_t(x) = e1(t) * x + e0(t)``; the transition
    measure ``mu(t)`` is Gaussian or atomic.  ``lipschitz_rate`` is the
    constant L in the drift-defect bound
    ``|psi_t(x) - psi_t(y) - (x - y)| <= L t |x - y|``.
    ``var_rate`` and ``drift_rate = (slope, offset)`` configure the
    infinitesimal form of the reference step,
    ``f -> 0.5 * var_rate * f'' + (slope * x + offset) * f'``,
    used by the smooth generator oracle.
    """

    e1: Callable[[float], float]
    e0: Callable[[float], float]
    mu: Callable[[float], Measure]
    lipschitz_rate: float = 0.0
    var_rate: float = 0.0
    drift_rate: tuple[float, float] = (0.0, 0.0)
    p: float = 2.0

    def psi(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.e1(t) * x + self.e0(t)

    # -- stock families -------------------------------------------------

    @staticmethod
    def brownian(rate: float = 1.0) -> "ReferenceModel":
        """mu_t = N(0, rate * t), identity drift."""
        return ReferenceModel(
            e1=lambda t: 1.0, e0=lambda t: 0.0,
            mu=lambda t: GaussianMeasure(0.0, rate * t),
            lipschitz_rate=0.0, var_rate=rate, drift_rate=(0.0, 0.0))

    @staticmethod
    def dilation() -> "ReferenceModel":
        """Identity drift, Dirac transitions: the do-nothing reference."""
        return ReferenceModel(
            e1=lambda t: 1.0, e0=lambda t: 0.0,
            mu=lambda t: AtomicMeasure.dirac(0.0),
            lipschitz_rate=0.0, var_rate=0.0, drift_rate=(0.0, 0.0))

    @staticmethod
    def shift(b0: float) -> "ReferenceModel":
        """Deterministic drift x + b0 * t.

        Violates the fixed-origin normalization psi_t(0) = 0 on purpose;
        :meth:`verify` reports it.
        """
        return ReferenceModel(
            e1=lambda t: 1.0, e0=lambda t: b0 * t,
            mu=lambda t: AtomicMeasure.dirac(0.0),
            lipschitz_rate=0.0, var_rate=0.0, drift_rate=(0.0, b0))

    @staticmethod
    def mean_reverting(rate: float) -> "ReferenceModel":
        """psi_t(x) = exp(-rate t) x with the matching Gaussian transition."""
        return ReferenceModel(
            e1=lambda t: math.exp(-rate * t), e0=lambda t: 0.0,
            mu=lambda t: GaussianMeasure(0.0, (1.0 - math.exp(-2 * rate * t)) / (2 * rate)
                                         if t > 0 else 0.0),
            lipschitz_rate=rate, var_rate=1.0, drift_rate=(-rate, 0.0))

    # -- diagnostics ------------------------------------------------------

    def verify(self, grid: WeightedGrid, times: Sequence[float],
               tail_radius: float = 4.0, tail_rate: float | None = None) -> dict:
        """Assumption diagnostics: fixed origin, drift defect, small-time
        moments, tail mass.  Returns raw numbers plus ok flags; violations
        are reported, not raised, because some catalog families (pure
        shifts) intentionally break the fixed-origin normalization.
        """
        ts = sorted(float(t) for t in times if t > 0)
        origin = max(abs(self.psi(t, np.zeros(1))[0]) for t in ts)
        defect_ok = all(abs(self.e1(t) - 1.0) <= self.lipschitz_rate * t + 1e-12 for t in ts)
        moments = [self._moment(t) for t in ts]
        moment_vanishes = moments[0] <= max(1e-6, 10.0 * ts[0]) if ts else True
        tails = [self._tail_mass(t, tail_radius) for t in ts]
        rate = tail_rate if tail_rate is not None else 1.0
        tail_ok = all(m <= rate * t + 1e-12 for m, t in zip(tails, ts))
        return {
            "origin_defect": origin,
            "origin_ok": origin <= 1e-12,
            "drift_defect_ok": defect_ok,
            "p_moments": moments,
            "moment_vanishes": bool(moment_vanishes),
            "tail_masses": tails,
            "tail_ok": bool(tail_ok),
        }

    def _moment(self, t: float) -> float:
        return self.mu(t).p_moment(self.p)

    def _tail_mass(self, t: float, r: float) -> float:
        m = self.mu(t)
        if isinstance(m, AtomicMeasure):
            return float(m.weights[np.abs(m.points) > r].sum())
        if m.var == 0.0:
            return 0.0 if abs(m.mean) <= r else 1.0
        z = (r - m.mean) / m.std
        zm = (-r - m.mean) / m.std
        return 0.5 * math.erfc(z / math.sqrt(2)) + 0.5 * math.erfc(-zm / math.sqrt(2))


@dataclass(frozen=True)
class ControlCost:
    """Finite set of diffusion/drift pairs with running costs.

    ``controls`` is a list of (a, b) with a >= 0; ``costs`` the matching
    nonnegative running costs.  At least one pair must be free (cost zero),
    which pins step(0) = id and step(f=0) = 0.
    """

    controls: tuple[tuple[float, float], ...]
    costs: tuple[float, ...]

    def __post_init__(self):
        ctr = tuple((float(a), float(b)) for a, b in self.controls)
        cst = tuple(float(c) for c in self.costs)
        if len(ctr) == 0 or len(ctr) != len(cst):
            raise ValueError("controls and costs must be matching nonempty lists")
        if any(a < 0 for a, _ in ctr):
            raise ValueError("diffusion coefficients must be nonnegative")
        if any(c < 0 for c in cst):
            raise ValueError("running costs must be nonnegative")
        if min(cst) != 0.0:
            raise ValueError("some control must have zero cost")
        object.__setattr__(self, "controls", ctr)
        object.__setattr__(self, "costs", cst)

    @staticmethod
    def quadratic_drift(a: float = 1.0, b_max: float = 2.0, nb: int = 41,
                        weight: float = 0.5) -> "ControlCost":
        """Single diffusion level ``a``, drift grid with cost weight*b^2."""
        bs = np.linspace(-b_max, b_max, nb)
        if not np.any(bs == 0.0):
            raise ValueError("drift grid must contain zero")
        return ControlCost(tuple((a, float(b)) for b in bs),
                           tuple(float(weight * b * b) for b in bs))

    @staticmethod
    def pure_drift(b_values: Sequence[float], costs: Sequence[float]) -> "ControlCost":
        return ControlCost(tuple((0.0, float(b)) for b in b_values), tuple(costs))

    @property
    def max_diffusion(self) -> float:
        return max(a for a, _ in self.controls)

    @property
    def max_drift(self) -> float:
        return max(abs(b) for _, b in self.controls)

    @property
    def growth_constant(self) -> float:
        """sup (|a| + |b|) / (1 + L(a, b)), the superlinearity diagnostic."""
        return max((abs(a) + abs(b)) / (1.0 + c) for (a, b), c in zip(self.controls, self.costs))

    @property
    def symmetric_diffusions(self) -> tuple[float, ...]:
        """Diffusion levels whose drift set is symmetric with finite cost."""
        out = []
        for a in sorted({a for a, _ in self.controls}):
            bs = {b for aa, b in self.controls if aa == a}
            if all(-b in bs for b in bs):
                out.append(a)
        return tuple(out)


@dataclass(frozen=True)
class PhiCost:
    """Convex transport cost on [0, inf), tabulated on a v-grid.

    ``values`` may contain +inf (hard budget walls).  Required shape:
    phi(0) = 0, phi >= 0, phi(v) > 0 somewhere, and v -> phi(v^(1/p))
    convex, checked on the tabulated points.
    """

    v_grid: np.ndarray
    values: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        v = np.array(np.asarray(self.v_grid, dtype=float))
        ph = np.array(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.shape != ph.shape or v.size < 3:
            raise ValueError("v_grid and values must be matching 1-d arrays (>= 3 points)")
        if v[0] != 0.0 or np.any(np.diff(v) <= 0):
            raise ValueError("v_grid must start at 0 and increase strictly")
        if ph[0] != 0.0:
            raise ValueError("phi(0) must be 0")
        if np.any(ph < 0) or np.any(np.isnan(ph)):
            raise ValueError("phi must be nonnegative")
        if not np.any(ph > 0):
            raise ValueError("phi must be positive somewhere")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        fin = np.isfinite(ph)
        if not fin[0] or (fin != np.sort(fin)[::-1]).any():
            raise ValueError("finite values must form a prefix of the grid")
        u = v[fin] ** self.p
        g = ph[fin]
        if u.size >= 3:
            slopes = np.diff(g) / np.diff(u)
            if np.any(np.diff(slopes) < -1e-9 * max(1.0, np.max(np.abs(g[np.isfinite(g)])))):
                raise ValueError("v -> phi(v^(1/p)) must be convex")
        v.setflags(write=False)
        ph.setflags(write=False)
        object.__setattr__(self, "v_grid", v)
        object.__setattr__(self, "values", ph)

    @staticmethod
    def quadratic(v_max: float = 4.0, num: int = 401, weight: float = 0.5,
                  p: float = 2.0) -> "PhiCost":
        v = np.linspace(0.0, v_max, num)
        return PhiCost(v, weight * v * v, p)

    @staticmethod
    def zero_ball(radius: float, v_max: float | None = None, num: int = 201,
                  p: float = 2.0) -> "PhiCost":
        """phi = 0 on [0, radius], +inf beyond."""
        vm = v_max if v_max is not None else 2.0 * radius
        v = np.unique(np.concatenate([np.linspace(0.0, vm, num), [radius]]))
        ph = np.where(v <= radius + 1e-15, 0.0, np.inf)
        return PhiCost(v, ph, p)

    @property
    def finite_max(self) -> float:
        fin = np.isfinite(self.values)
        return float(self.v_grid[fin][-1])

    def at(self, v: float) -> float:
        """Linear interpolation; +inf past the finite prefix when the table
        has a wall, linear extension with the final slope otherwise."""
        if v < 0:
            raise ValueError("phi is defined on [0, inf)")
        fin = np.isfinite(self.values)
        vf, pf = self.v_grid[fin], self.values[fin]
        if v <= vf[-1] + 1e-15:
            return float(np.interp(min(v, vf[-1]), vf, pf))
        if not fin.all():
            return math.inf
        slope = (pf[-1] - pf[-2]) / (vf[-1] - vf[-2])
        return float(pf[-1] + slope * (v - vf[-1]))

    def rescaled(self, t: float, v: float) -> float:
        """phi_t(v): t * phi(v / t) for t > 0; at t = 0 the indicator of 0."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0.0:
            return 0.0 if v == 0.0 else math.inf
        return t * self.at(v / t)


def legendre_conjugate(cost: "PhiCost | ControlCost", w: float) -> float:
    """Grid-search convex conjugate.

    For a transport cost: ``phi*(w) = max over tabulated v of (v w - phi(v))``.
    For a control cost: ``L*(c) = max over pairs of (c (|a| + |b|) - L(a, b))``.
    Requires ``w >= 0``.
    """
    if w < 0:
        raise ValueError("conjugate argument must be nonnegative")
    if isinstance(cost, PhiCost):
        fin = np.isfinite(cost.values)
        return float(np.max(cost.v_grid[fin] * w - cost.values[fin]))
    if isinstance(cost, ControlCost):
        sizes = np.array([abs(a) + abs(b) for a, b in cost.controls])
        return float(np.max(sizes * w - np.array(cost.costs)))
    raise TypeError("cost must be PhiCost or ControlCost")


def legendre_conjugate_array(cost: "PhiCost | ControlCost", ws: np.ndarray) -> np.ndarray:
    ws = np.asarray(ws, dtype=float)
    if np.any(ws < 0):
        raise ValueError("conjugate arguments must be nonnegative")
    if isinstance(cost, PhiCost):
        fin = np.isfinite(cost.values)
        v, ph = cost.v_grid[fin], cost.values[fin]
    else:
        v = np.array([abs(a) + abs(b) for a, b in cost.controls])
        ph = np.array(cost.costs)
    return np.max(np.outer(ws, v) - ph[None, :], axis=1)


# ----------------------------------------------------------------------
# shared primitives


def _expect_shifts(f: GridFunction, base: np.ndarray, shifts: np.ndarray,
                   weights: np.ndarray) -> np.ndarray:
    """sum_i weights[i] * f(base + shifts[i]) with clamped linear reads."""
    q = base[None, :] + shifts[:, None]
    vals = np.interp(q.ravel(), f.grid.points, f.values).reshape(q.shape)
    return weights @ vals


def translate(f: GridFunction, cells: int) -> GridFunction:
    """Grid translation by a whole number of cells, clamped at the edges.

    ``translate(f, k)(x) = f(x + k dx)`` — exact reads, no interpolation.
    """
    if f.has_neg_inf:
        raise ValueError("translation needs a sentinel-free function")
    v = f.values
    if cells == 0:
        return f
    if cells > 0:
        vals = np.concatenate([v[cells:], np.full(min(cells, v.size), v[-1])])[: v.size]
    else:
        k = -cells
        vals = np.concatenate([np.full(min(k, v.size), v[0]), v[:-k] if k < v.size else []])[: v.size]
    return GridFunction(f.grid, vals, "continuous")


# ----------------------------------------------------------------------
# the steps


def reference_step(model: ReferenceModel, quad: QuadratureRule, t: float,
                   f: GridFunction) -> GridFunction:
    """Linear baseline: integrate ``f(psi_t(x) + y)`` against ``mu_t(dy)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    if t == 0.0:
        return f
    atoms = quad.atoms(model.mu(t))
    base = model.psi(t, f.grid.points)
    vals = _expect_shifts(f, base, atoms.points, atoms.weights)
    return GridFunction(f.grid, vals, "continuous")


def control_step(cost: ControlCost, quad: QuadratureRule, t: float,
                 f: GridFunction) -> GridFunction:
    """Best control pair: ``max over (a,b) of E f(x + sqrt(a) W_t + b t) - L(a,b) t``.

    The Gaussian expectation uses the quadrature rule; pure-drift pairs
    (a = 0) skip it and read the shifted function directly, which keeps
    lattice-aligned drift models exact.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    if t == 0.0:
        return f
    pts = f.grid.points
    best = np.full(f.grid.size, -np.inf)
    for (a, b), lc in zip(cost.controls, cost.costs):
        if a == 0.0:
            vals = np.interp(pts + b * t, pts, f.values)
        else:
            sig = math.sqrt(a * t)
            vals = _expect_shifts(f, pts + b * t, sig * quad.nodes, quad.weights)
        best = np.maximum(best, vals - lc * t)
    return GridFunction(f.grid, best, "continuous")


def drift_step(model: ReferenceModel, phi: PhiCost, quad: QuadratureRule,
               t: float, f: GridFunction, b_grid: Sequence[float]) -> GridFunction:
    """Best deterministic shift of the reference transition.

    ``max over b of [ integral f(psi_t(x) + y + b t) mu_t(dy) - phi_t(|b| t) ]``
    where ``phi_t`` is the rescaled cost, so the penalty equals
    ``t * phi(|b|)`` for t > 0.  The shifted transition sits at transport
    distance ``|b| t`` from the reference one (see
    :func:`drift_shift_distance`).  At t = 0 every penalty and every shift
    vanishes and the step is the identity.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    bs = np.asarray(list(b_grid), dtype=float)
    if bs.size == 0:
        raise ValueError("empty drift grid")
    if t == 0.0:
        return f
    atoms = quad.atoms(model.mu(t))
    base = model.psi(t, f.grid.points)
    best = np.full(f.grid.size, -np.inf)
    for b in bs:
        pen = phi.rescaled(t, abs(b) * t)
        if math.isinf(pen):
            continue
        vals = _expect_shifts(f, base + b * t, atoms.points, atoms.weights)
        best = np.maximum(best, vals - pen)
    if np.any(np.isneginf(best)):
        raise ValueError("no drift with finite penalty; include b = 0 in the grid")
    return GridFunction(f.grid, best, "continuous")


def wasserstein_step(model: ReferenceModel, phi: PhiCost, quad: QuadratureRule,
                     t: float, f: GridFunction,
                     budget_grid: Sequence[float],
                     displacement_grid: Sequence[float],
                     n_multipliers: int = 64) -> GridFunction:
    """Best budgeted transport perturbation of the reference transition.

    Outer problem: ``max over budgets w of [ g(w) - phi_t(w) ]`` where
    ``g(w)`` is the best value of ``sum_i mu_i f(p_i + z_i)`` over per-atom
    displacements ``z_i`` from the displacement grid with transport cost
    ``(sum_i mu_i |z_i|^p)^(1/p) <= w``.

    The inner problem is solved by a multiplier scan: for each of
    ``n_multipliers`` log-spaced penalties lambda the per-atom problem
    ``max_z f(p_i + z) - lambda |z|^p`` decouples, tracing feasible
    (cost, value) candidates.  Common-shift candidates (all atoms moved by
    the same z, cost |z|) are always added, so a drift perturbation on a
    shared grid is never missed and ``wasserstein_step >= drift_step``
    holds exactly whenever the grids are aligned.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    if t == 0.0:
        return f
    budgets = np.unique(np.asarray(list(budget_grid), dtype=float))
    if budgets.size == 0 or budgets[0] < 0:
        raise ValueError("budgets must be nonnegative")
    if budgets[0] != 0.0:
        budgets = np.concatenate([[0.0], budgets])
    zs = np.unique(np.concatenate([np.asarray(list(displacement_grid), dtype=float), [0.0]]))
    atoms = quad.atoms(model.mu(t))
    base = model.psi(t, f.grid.points)
    n, na, nz = base.size, atoms.points.size, zs.size
    pts = f.grid.points

    # F[x, i, z] = f(psi_t(x) + y_i + z)
    q = base[:, None, None] + atoms.points[None, :, None] + zs[None, None, :]
    F = np.interp(q.ravel(), pts, f.values).reshape(n, na, nz)
    C = np.abs(zs) ** phi.p

    # candidate pool: (value, cost) per grid point
    vals_shift = np.einsum("xaz,a->xz", F, atoms.weights)
    cand_vals = [vals_shift]
    cand_costs = [np.broadcast_to(np.abs(zs), (n, nz))]

    spread = float(np.max(F) - np.min(F))
    cmin = float(np.min(C[C > 0])) if np.any(C > 0) else 1.0
    lam_hi = max(1.0, 4.0 * spread / cmin)
    lam_lo = min(1.0, max(1e-12, 0.25 * spread) / max(C.max(), 1.0))
    lams = np.logspace(math.log10(max(lam_lo, 1e-12)), math.log10(lam_hi), n_multipliers)
    lam_vals = np.empty((n, n_multipliers))
    lam_costs = np.empty((n, n_multipliers))
    for k, lam in enumerate(lams):
        idx = np.argmax(F - lam * C[None, None, :], axis=2)
        fv = np.take_along_axis(F, idx[:, :, None], axis=2)[:, :, 0]
        lam_vals[:, k] = fv @ atoms.weights
        lam_costs[:, k] = (C[idx] @ atoms.weights) ** (1.0 / phi.p)
    cand_vals.append(lam_vals)
    cand_costs.append(lam_costs)

    V = np.concatenate(cand_vals, axis=1)
    W = np.concatenate(cand_costs, axis=1)

    best = np.full(n, -np.inf)
    for w in budgets:
        pen = phi.rescaled(t, float(w))
        if math.isinf(pen):
            continue
        feas = W <= w
        g = np.where(feas, V, -np.inf).max(axis=1)
        best = np.maximum(best, g - pen)
    if np.any(np.isneginf(best)):
        raise ValueError("no finite-penalty budget available")
    return GridFunction(f.grid, best, "continuous")


def entropic_exact(quad: QuadratureRule, t: float, f: GridFunction,
                   rate: float = 1.0) -> GridFunction:
    """Closed-form log-integral semigroup
    ``0.5 * log E exp(2 f(x + W_t))`` with ``W_t ~ N(0, rate * t)``.

    This is an exact semigroup up to quadrature and interpolation error and
    serves as the analytic yardstick for the quadratic-cost models.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    if t == 0.0:
        return f
    sig = math.sqrt(rate * t)
    pts = f.grid.points
    q = pts[None, :] + sig * quad.nodes[:, None]
    F = np.interp(q.ravel(), pts, f.values).reshape(q.shape)
    m = F.max(axis=0)
    vals = m + 0.5 * np.log(np.sum(quad.weights[:, None] * np.exp(2.0 * (F - m)), axis=0))
    return GridFunction(f.grid, vals, "continuous")


def hjb_fd_oracle(cost: ControlCost, f: GridFunction, t: float,
                  dt: float | None = None) -> GridFunction:
    """Explicit monotone upwind march for the control Hamiltonian.

    ``u <- u + dt * max over (a,b) of [ a/2 D2 u + b Dupwind u - L(a,b) ]``
    with central second differences, forward/backward first differences by
    drift sign, and clamped ghost cells.  The stability precondition
    ``dt * max a <= dx^2`` is checked before stepping; the default dt also
    respects the sharper bound ``dt * (max a / dx^2 + max |b| / dx) <= 0.9``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if f.klass != "continuous":
        raise ValueError("steps act on continuous functions")
    dx = f.grid.dx
    amax, bmax = cost.max_diffusion, cost.max_drift
    if dt is None:
        denom = amax / dx**2 + bmax / dx
        dt = 0.9 / denom if denom > 0 else t
    if amax > 0 and dt * amax > dx**2 + 1e-15:
        raise ValueError("CFL violation: need dt <= dx^2 / max a")
    if t == 0.0:
        return f
    nsteps = max(1, int(math.ceil(t / dt - 1e-12)))
    dt_eff = t / nsteps
    u = f.values.copy()
    a_arr = np.array([a for a, _ in cost.controls])
    b_arr = np.array([b for _, b in cost.controls])
    l_arr = np.array(cost.costs)
    for _ in range(nsteps):
        up = np.pad(u, 1, mode="edge")
        d2 = (up[2:] - 2 * u + up[:-2]) / dx**2
        dplus = (up[2:] - u) / dx
        dminus = (u - up[:-2]) / dx
        dup = np.where(b_arr[:, None] >= 0, dplus[None, :], dminus[None, :])
        ham = 0.5 * a_arr[:, None] * d2[None, :] + b_arr[:, None] * dup - l_arr[:, None]
        u = u + dt_eff * ham.max(axis=0)
    return GridFunction(f.grid, u, "continuous")


# ----------------------------------------------------------------------
# diagnostics


def shift_commutator_defect(step: Callable[[float, GridFunction], GridFunction],
                            f: GridFunction, t: float, cells: int,
                            interior_radius: float) -> float:
    """sup over the interior window of |step(t, f(.+s)) - step(t, f)(.+s)|.

    The translation is by whole grid cells, so both sides are exact reads;
    the defect isolates how far the step is from commuting with
    translations.
    """
    lhs = step(t, translate(f, cells))
    rhs = translate(step(t, f), cells)
    m = f.grid.window_mask(interior_radius)
    return float(np.max(np.abs(lhs.values[m] - rhs.values[m])))


def control_tail_bound(cost: ControlCost, quad: QuadratureRule, t: float,
                       r: float, c: float) -> dict:
    """One-step mass-escape bound for the control step.

    For each control pair, the chance that the one-step state leaves
    [-r, r] (started at 0), priced at level c and net of the running cost,
    stays below ``c / r + L*(c / r) t``.  Returns the worst left-hand side,
    the bound, and the ok flag.
    """
    lhs = -math.inf
    for (a, b), lc in zip(cost.controls, cost.costs):
        x = math.sqrt(a * t) * quad.nodes + b * t if a > 0 else np.array([b * t])
        w = quad.weights if a > 0 else np.array([1.0])
        prob = float(w[np.abs(x) >= r].sum())
        lhs = max(lhs, c * prob - lc * t)
    rhs = c / r + legendre_conjugate(cost, c / r) * t
    return {"lhs": lhs, "rhs": rhs, "ok": bool(lhs <= rhs + 1e-12)}


def drift_shift_distance(model: ReferenceModel, quad: QuadratureRule,
                         t: float, b: float) -> float:
    """Transport distance between the reference transition and its shift
    by ``b t`` — the perturbation used by :func:`drift_step`.  Equals
    ``|b| t`` for any transition measure."""
    from .measures import w2_1d

    atoms = quad.atoms(model.mu(t))
    return w2_1d(atoms.shifted(b * t), atoms)


# ----------------------------------------------------------------------
# bundled models (step families with a description for hashing)


@dataclass(frozen=True)
class ControlModel:
    """Control-step family over a fixed cost set and quadrature."""

    cost: ControlCost
    quad: QuadratureRule
    name: str = "control"

    def step(self, t: float, f: GridFunction) -> GridFunction:
        return control_step(self.cost, self.quad, t, f)

    def description(self) -> dict:
        return {
            "model": "control",
            "name": self.name,
            "controls": [[a, b] for a, b in self.cost.controls],
            "costs": list(self.cost.costs),
            "quadrature_nodes": int(self.quad.nodes.size),
        }


@dataclass(frozen=True)
class PerturbationModel:
    """Reference transition plus a transport cost: R, J and I step families."""

    ref: ReferenceModel
    phi: PhiCost
    quad: QuadratureRule
    b_grid: tuple[float, ...] = ()
    name: str = "perturbation"

    def reference(self, t: float, f: GridFunction) -> GridFunction:
        return reference_step(self.ref, self.quad, t, f)

    def drift(self, t: float, f: GridFunction) -> GridFunction:
        return drift_step(self.ref, self.phi, self.quad, t, f, self.b_grid)

    def wasserstein(self, t: float, f: GridFunction,
                    budget_grid: Sequence[float] | None = None,
                    displacement_grid: Sequence[float] | None = None,
                    n_multipliers: int = 64) -> GridFunction:
        if t == 0.0:
            return f
        bs = np.asarray(self.b_grid, dtype=float)
        if budget_grid is None:
            budget_grid = np.unique(np.abs(bs)) * t
        if displacement_grid is None:
            displacement_grid = np.unique(bs) * t
        return wasserstein_step(self.ref, self.phi, self.quad, t, f,
                                budget_grid, displacement_grid, n_multipliers)

    def description(self) -> dict:
        fin = np.isfinite(self.phi.values)
        return {
            "model": "perturbation",
            "name": self.name,
            "phi_v": [float(v) for v in self.phi.v_grid],
            "phi": [float(v) if np.isfinite(v) else "inf" for v in self.phi.values],
            "p": self.phi.p,
            "b_grid": list(self.b_grid),
            "var_rate": self.ref.var_rate,
            "drift_rate": list(self.ref.drift_rate),
            "lipschitz_rate": self.ref.lipschitz_rate,
            "quadrature_nodes": int(self.quad.nodes.size),
            "phi_finite_max": float(self.phi.v_grid[fin][-1]),
        }


@dataclass(frozen=True)
class EntropicModel:
    """Closed-form log-integral semigroup as a model of its own."""

    quad: QuadratureRule
    rate: float = 1.0
    name: str = "entropic"

    def step(self, t: float, f: GridFunction) -> GridFunction:
        return entropic_exact(self.quad, t, f, self.rate)

    def description(self) -> dict:
        return {
            "model": "entropic",
            "name": self.name,
            "rate": self.rate,
            "quadrature_nodes": int(self.quad.nodes.size),
        }
