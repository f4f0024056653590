"""Constrained minimization of the system energy at fixed total area and volume.

An augmented Lagrangian outer loop wraps an inner quasi-Newton descent
(limited-memory BFGS directions, Armijo backtracking) over the node
coordinates of every component.  Genus-0 endpoints stay on the axis and
move only along it.  Curves are resampled to constant speed every few
inner steps.
"""
from __future__ import annotations

import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from . import geometry, kernel
from .curve import (
    difference_operators,
    G0,
    G1,
    GENERALIZED,
    GeneratingCurve,
    SurfaceSystem,
    reparametrize_constant_speed,
    split_at_axis,
    validate,
)
from .energy import EnergyReport, MaterialParams, system_energy
from .errors import (
    AxiHelfrichError,
    DegenerateInputError,
    GradientCheckError,
    InfeasibleConstraintError,
    SingularNodeError,
)
from .shapes import check_feasible, max_volume, seed_shape

log = logging.getLogger(__name__)

DEGENERATE_AXIS_FRACTION = 1e-6
VANISHING_LENGTH_FRACTION = 1e-3

__all__ = [
    "ConstraintSpec",
    "OptProblem",
    "OptConfig",
    "OptResult",
    "MultistartResult",
    "objective",
    "augmented_objective",
    "gradient",
    "minimize",
    "multistart",
    "seed_shape",
    "radial_deviation",
]

RESTORE_WINDOW = 100.0  # residuals (in units of the tolerance) below which constraints are projected


@dataclass(frozen=True)
class ConstraintSpec:
    """Total area ``area`` and enclosed volume ``volume``; ``tolerance`` is relative."""

    area: float
    volume: float
    tolerance: float = 1e-6

    def __post_init__(self):
        check_feasible(self.area, self.volume)
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")

    @property
    def volume_scale(self) -> float:
        """Volume of the sphere with the target area; normalizes the volume residual."""
        return max_volume(self.area)

    def residuals(self, area: float, volume: float) -> tuple[float, float]:
        return (area - self.area) / self.area, (volume - self.volume) / self.volume_scale


@dataclass
class OptProblem:
    components: list
    params: MaterialParams
    constraints: ConstraintSpec
    energy_budget: float | None = None

    def __post_init__(self):
        comps = []
        for item in self.components:
            tag, curve = item if isinstance(item, tuple) else (None, item)
            comps.append((tag, curve))
        if not comps:
            raise DegenerateInputError("an optimization problem needs at least one component")
        self.components = comps
        if self.energy_budget is not None:
            from .bounds import max_components

            cap = max_components(self.energy_budget).max_components
            if len(comps) > cap:
                raise ValueError(f"{len(comps)} components exceed the cap {cap} for the given budget")


@dataclass(frozen=True)
class OptConfig:
    max_outer_iterations: int = 40
    max_inner_iterations: int = 2000
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e9
    residual_shrink: float = 0.25
    gradient_tolerance: float = 0.05
    armijo: float = 1e-4
    max_backtracks: int = 60
    lbfgs_memory: int = 12
    reparametrize_every: int = 25
    N: int = 128
    seed: int = 0
    gradient_mode: str = "analytic"
    gradient_check: bool = True
    gradient_check_tolerance: float = 1e-3
    on_degeneration: str = "split"
    checkpoint_path: str | None = None

    def __post_init__(self):
        if not self.penalty_growth > 1.0:
            raise ValueError("penalty_growth must exceed 1")
        for name in ("gradient_tolerance", "armijo", "penalty_initial", "gradient_check_tolerance"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.gradient_mode not in ("analytic", "finite-difference"):
            raise ValueError("gradient_mode must be 'analytic' or 'finite-difference'")
        if self.on_degeneration not in ("split", "abort"):
            raise ValueError("on_degeneration must be 'split' or 'abort'")
        if self.N < 16:
            raise ValueError("N must be at least 16")


@dataclass
class OptResult:
    system: SurfaceSystem
    report: EnergyReport
    residuals: dict
    trace: list
    converged: bool
    reason: str
    multipliers: tuple = (0.0, 0.0)
    penalty: float = 0.0
    events: list = field(default_factory=list)
    kind: str = ""

    @property
    def energy(self) -> float:
        return self.report.helfrich

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "converged": self.converged,
            "reason": self.reason,
            "energy": self.report.to_dict(),
            "residuals": dict(self.residuals),
            "multipliers": list(self.multipliers),
            "penalty": self.penalty,
            "events": list(self.events),
            "trace": list(self.trace),
        }


# --- packing of node coordinates into one vector -----------------------------

class _Layout:
    """Maps the free coordinates of all components to a flat vector."""

    def __init__(self, curves):
        self.shapes = [(c.n, c.closed) for c in curves]
        self.names = [c.name for c in curves]
        sizes = []
        for n, closed in self.shapes:
            sizes.append(2 * (n - 1) if closed else (n - 2) + n)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def pack(self, curves) -> np.ndarray:
        parts = []
        for c in curves:
            if c.closed:
                parts += [c.x[:-1], c.z[:-1]]
            else:
                parts += [c.x[1:-1], c.z]
        return np.concatenate(parts)

    def unpack(self, v: np.ndarray):
        out = []
        for (n, closed), lo in zip(self.shapes, self.offsets[:-1]):
            if closed:
                m = n - 1
                x = np.append(v[lo : lo + m], v[lo])
                z = np.append(v[lo + m : lo + 2 * m], v[lo + m])
            else:
                x = np.concatenate([[0.0], v[lo : lo + n - 2], [0.0]])
                z = v[lo + n - 2 : lo + 2 * n - 2].copy()
            out.append((x, z, closed))
        return out

    def gather(self, grads) -> np.ndarray:
        """Flatten per-node (gx, gz) pairs onto the free coordinates."""
        parts = []
        for (gx, gz), (n, closed) in zip(grads, self.shapes):
            if closed:
                parts += [gx[:-1], gz[:-1]]
            else:
                parts += [gx[1:-1], gz]
        return np.concatenate(parts)

    def interior_x(self, v: np.ndarray) -> np.ndarray:
        parts = []
        for (n, closed), lo in zip(self.shapes, self.offsets[:-1]):
            parts.append(v[lo : lo + (n - 1 if closed else n - 2)])
        return np.concatenate(parts)

    def curves(self, v: np.ndarray):
        return [
            GeneratingCurve(x, z, closed, name)
            for (x, z, closed), name in zip(self.unpack(v), self.names)
        ]


# --- objective -----------------------------------------------------------------

def _as_curves(system):
    if isinstance(system, GeneratingCurve):
        return [system]
    return list(system)


def objective(system, params: MaterialParams) -> float:
    """Total energy of the system (sum over components in order)."""
    total = 0.0
    for c in _as_curves(system):
        total += kernel.component_terms(np.asarray(c.x), np.asarray(c.z), c.closed, params, False).energy
    return total


def augmented_objective(system, params, constraints: ConstraintSpec, multipliers=(0.0, 0.0), penalty=10.0) -> float:
    """``F + lA gA + lV gV + (mu/2)(gA^2 + gV^2)`` with normalized residuals ``gA, gV``."""
    if not penalty > 0.0:
        raise ValueError("penalty must be positive")
    F = A = V = 0.0
    for c in _as_curves(system):
        t = kernel.component_terms(np.asarray(c.x), np.asarray(c.z), c.closed, params, False)
        F += t.energy
        A += t.area
        V += t.volume
    gA, gV = constraints.residuals(A, V)
    lA, lV = multipliers
    return F + lA * gA + lV * gV + 0.5 * penalty * (gA * gA + gV * gV)


class _Evaluator:
    """Augmented objective and gradient over the flat coordinate vector."""

    def __init__(self, layout: _Layout, params, constraints, multipliers, penalty):
        self.layout = layout
        self.params = params
        self.constraints = constraints
        self.multipliers = multipliers
        self.penalty = penalty

    def totals(self, v, with_gradient):
        F = A = V = 0.0
        terms = []
        for x, z, closed in self.layout.unpack(v):
            t = kernel.component_terms(x, z, closed, self.params, with_gradient)
            F += t.energy
            A += t.area
            V += t.volume
            terms.append(t)
        return F, A, V, terms

    def value(self, v) -> float:
        F, A, V, _ = self.totals(v, False)
        return self._combine(F, A, V)

    def _combine(self, F, A, V) -> float:
        gA, gV = self.constraints.residuals(A, V)
        lA, lV = self.multipliers
        return F + lA * gA + lV * gV + 0.5 * self.penalty * (gA * gA + gV * gV)

    def value_and_gradient(self, v):
        F, A, V, terms = self.totals(v, True)
        gA, gV = self.constraints.residuals(A, V)
        lA, lV = self.multipliers
        ca = (lA + self.penalty * gA) / self.constraints.area
        cv = (lV + self.penalty * gV) / self.constraints.volume_scale
        grads = [(t.gx[0] + ca * t.gx[1] + cv * t.gx[2], t.gz[0] + ca * t.gz[1] + cv * t.gz[2]) for t in terms]
        return self._combine(F, A, V), self.layout.gather(grads)

    def fd_gradient(self, v, step):
        g = np.empty_like(v)
        for i in range(v.size):
            vp, vm = v.copy(), v.copy()
            vp[i] += step
            vm[i] -= step
            g[i] = (self.value(vp) - self.value(vm)) / (2.0 * step)
        return g


def _check_regular(curves):
    for c in curves:
        thr = DEGENERATE_AXIS_FRACTION * c.length
        interior = c.x[:-1] if c.closed else c.x[1:-1]
        bad = np.flatnonzero(interior <= thr)
        if bad.size:
            raise SingularNodeError(f"component {c.name!r} has interior node(s) on the axis: {bad.tolist()[:5]}")


def gradient(system, params, mode: str = "analytic", constraints: ConstraintSpec | None = None,
             multipliers=(0.0, 0.0), penalty: float = 0.0):
    """Per-node gradient ``(n, 2)`` of the augmented objective for each component.

    Coordinates held fixed by the optimizer (the x of axis endpoints, the
    repeated last node of a closed curve) get zero.  Without ``constraints``
    this is the gradient of the energy alone.  The finite-difference mode
    uses central differences with step ``1e-6 * length``.
    """
    curves = _as_curves(system)
    _check_regular(curves)
    layout = _Layout(curves)
    if constraints is None:
        A = sum(kernel.component_terms(np.asarray(c.x), np.asarray(c.z), c.closed, params, False).area for c in curves)
        constraints = _NoConstraint(A)
        multipliers, penalty = (0.0, 0.0), 0.0
    ev = _Evaluator(layout, params, constraints, multipliers, penalty)
    v = layout.pack(curves)
    if mode == "analytic":
        g = ev.value_and_gradient(v)[1]
    elif mode == "finite-difference":
        g = ev.fd_gradient(v, 1e-6 * min(c.length for c in curves))
    else:
        raise ValueError(f"unknown gradient mode {mode!r}")
    return _per_node(layout, g)


class _NoConstraint:
    def __init__(self, area):
        self.area = area
        self.volume_scale = 1.0

    def residuals(self, area, volume):
        return 0.0, 0.0


def _per_node(layout: _Layout, g: np.ndarray):
    out = []
    for (gx, gz, closed), (n, _) in zip(layout.unpack(g), layout.shapes):
        if closed:
            gx[-1] = gz[-1] = 0.0
        out.append(np.column_stack([gx, gz]))
    return out


def _normal_part(layout: _Layout, v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gradient with its tangential component removed node by node (fixed coordinates stay zero)."""
    parts = []
    for (x, z, closed), gn in zip(layout.unpack(v), _per_node(layout, g)):
        d1, _ = difference_operators(x.size, closed, ())
        tau = np.column_stack([d1 @ x, d1 @ z])
        tau /= np.hypot(tau[:, 0], tau[:, 1])[:, None]
        along = np.einsum("ij,ij->i", gn, tau)
        normal = gn - along[:, None] * tau
        if not closed:
            # endpoint x is fixed: only the z-motion counts there
            normal[[0, -1], 0] = 0.0
            normal[[0, -1], 1] = gn[[0, -1], 1]
        parts.append((normal[:, 0], normal[:, 1]))
    return layout.gather(parts)


def _radius(area: float) -> float:
    """Radius of the sphere with the given area: the length unit of a scale-free problem."""
    return math.sqrt(area / (4.0 * math.pi))


def projected_gradient_norm(layout: _Layout, v: np.ndarray, g: np.ndarray, precond: "_Preconditioner | None" = None,
                            length_scale: float | None = None) -> float:
    """Stationarity measure: the normal part of ``g`` in the smoothing dual norm.

    The norm ``R * sqrt(g^T Mhat^-1 g / h)`` with ``Mhat = (D2^T D2 + k0 I)/k0`` is
    insensitive to grid-scale oscillations, independent of the node count
    for smooth gradient fields and, through the length unit ``R`` (default:
    radius of the sphere with the curves' total area), invariant under scaling.
    """
    curves = layout.curves(v)
    if precond is None:
        precond = _Preconditioner(layout, curves)
    if length_scale is None:
        length_scale = _radius(sum(geometry.area(c) for c in curves))
    return length_scale * precond.dual_norm(_normal_part(layout, v, g))


# --- inner descent -------------------------------------------------------------

class _Preconditioner:
    """Inverse of a banded fourth-order operator ``(D2^T D2 + k0 I) / length^4`` per coordinate block.

    Bending stiffness grows like the fourth power of the wavenumber; this
    metric removes most of that spread from the quasi-Newton iteration.
    The same operator defines the dual norm used as stationarity measure.
    """

    def __init__(self, layout: "_Layout", curves, k0: float = 100.0):
        self.blocks = []
        for (n, closed), lo, c in zip(layout.shapes, layout.offsets[:-1], curves):
            _, d2 = difference_operators(n, closed, ())
            scale = c.length**4
            if closed:
                m = n - 1
                d = d2[:m, :m]
                spans = [(lo, lo + m, d), (lo + m, lo + 2 * m, d)]
            else:
                spans = [(lo, lo + n - 2, d2[:, 1:-1]), (lo + n - 2, lo + 2 * n - 2, d2)]
            # dual norm factor: undo the length^4 scaling, normalize by k0 and the grid step
            dual = k0 / scale * (n - 1)
            for a, b, d in spans:
                op = ((d.T @ d) + k0 * identity(b - a)) / scale
                self.blocks.append((a, b, splu(op.tocsc()), dual))

    def __call__(self, g: np.ndarray) -> np.ndarray:
        out = np.empty_like(g)
        for a, b, lu, _ in self.blocks:
            out[a:b] = lu.solve(g[a:b])
        return out

    def dual_norm(self, g: np.ndarray) -> float:
        total = 0.0
        for a, b, lu, dual in self.blocks:
            total += dual * float(g[a:b].dot(lu.solve(g[a:b])))
        return math.sqrt(max(total, 0.0))


class _LBFGS:
    def __init__(self, memory: int, precondition=None, length_scale: float = 1.0):
        self.memory = memory
        self.pairs: list = []
        self.precondition = precondition if precondition is not None else (lambda g: g)
        self.length_scale = length_scale

    def reset(self):
        self.pairs = []

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * s.dot(q)
            alphas.append(a)
            q -= a * y
        r = self.precondition(q)
        if self.pairs:
            s, y, _ = self.pairs[-1]
            q = r * (s.dot(y) / y.dot(self.precondition(y)))
        else:
            # first step: preconditioned direction at steepest-descent magnitude (in units of R^2)
            q = r * (self.length_scale**2 * math.sqrt(g.dot(g)) / math.sqrt(r.dot(r)))
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * y.dot(q)
            q += (a - b) * s
        return -q

    def update(self, s: np.ndarray, y: np.ndarray):
        sy = s.dot(y)
        if sy > 1e-12 * math.sqrt(s.dot(s) * y.dot(y)):
            self.pairs.append((s, y, 1.0 / sy))
            if len(self.pairs) > self.memory:
                self.pairs.pop(0)


def _inner(layout, curves, ev: _Evaluator, config: OptConfig, accepted: list):
    """Descend the augmented objective at fixed multipliers and penalty.

    Stationarity is only accepted on a freshly resampled (constant-speed)
    curve.  Returns ``(curves, gradient_norm, iterations, failure)``;
    ``accepted`` collects ``(before, after)`` objective values of every
    accepted step.
    """
    v = layout.pack(curves)
    f, g = ev.value_and_gradient(v)
    precond = _Preconditioner(layout, curves)
    R = _radius(ev.constraints.area)
    lbfgs = _LBFGS(config.lbfgs_memory, precond, R)
    failure = None
    fresh, since, steps = True, 0, 0
    pg = projected_gradient_norm(layout, v, g, precond, R)
    while True:
        if since >= config.reparametrize_every or (pg <= config.gradient_tolerance and not fresh):
            curves = [reparametrize_constant_speed(c) for c in layout.curves(v)]
            v = layout.pack(curves)
            f, g = ev.value_and_gradient(v)
            precond = _Preconditioner(layout, curves)
            lbfgs = _LBFGS(config.lbfgs_memory, precond, R)
            pg = projected_gradient_norm(layout, v, g, precond, R)
            fresh, since = True, 0
        if pg <= config.gradient_tolerance or steps >= config.max_inner_iterations:
            break
        d = lbfgs.direction(g)
        step = 1.0 if lbfgs.pairs else 1.0 / (1.0 + R * math.sqrt(g.dot(g)))
        new = _backtrack(layout, ev, v, f, d, g.dot(d), step, config)
        if new is None and lbfgs.pairs:
            lbfgs.reset()
            d = lbfgs.direction(g)
            new = _backtrack(layout, ev, v, f, d, g.dot(d), 1.0 / (1.0 + R * math.sqrt(g.dot(g))), config)
        if new is None:
            failure = "line search failed to find sufficient decrease"
            break
        v_new, f_new = new
        f_new, g_new = ev.value_and_gradient(v_new)
        accepted.append((f, f_new))
        lbfgs.update(v_new - v, g_new - g)
        v, f, g = v_new, f_new, g_new
        pg = projected_gradient_norm(layout, v, g, precond, R)
        fresh = False
        since += 1
        steps += 1
    return layout.curves(v), pg, steps, failure


def _backtrack(layout, ev, v, f, d, slope, step, config):
    for _ in range(config.max_backtracks):
        trial = v + step * d
        if np.all(layout.interior_x(trial) > 0.0):
            ft = ev.value(trial)
            if math.isfinite(ft) and ft <= f + config.armijo * step * slope:
                return trial, ft
        step *= 0.5
    return None


# --- degeneration -----------------------------------------------------------

def _degeneration(curves, config: OptConfig, area_target: float, events: list):
    """Remove vanishing components and split components pinched onto the axis.

    Returns the new curve list, or ``None`` when the configuration says abort.
    """
    out = []
    for c in curves:
        if len(curves) > 1 and c.length < VANISHING_LENGTH_FRACTION * math.sqrt(area_target):
            events.append({"event": "component-vanished", "component": c.name, "length": c.length})
            log.info("component %s vanished (length %.3g); removed", c.name, c.length)
            continue
        thr = DEGENERATE_AXIS_FRACTION * c.length
        interior = c.x[:-1] if c.closed else c.x[1:-1]
        if np.any(interior <= thr):
            events.append({"event": "component-degenerated", "component": c.name})
            log.info("component %s touched the axis", c.name)
            if config.on_degeneration == "abort":
                return None
            x = np.where(c.x <= thr, 0.0, c.x)
            pieces = split_at_axis(GeneratingCurve(x, c.z, c.closed, c.name))
            out.extend(reparametrize_constant_speed(p, c.n) for p in pieces)
            continue
        out.append(c)
    return out


# --- checkpoints ----------------------------------------------------------

def _curves_to_json(curves):
    out = []
    for c in curves:
        buf = io.StringIO()
        buf.write("t,x,z\n")
        for t, x, z in zip(c.t, c.x, c.z):
            buf.write(f"{float(t)!r},{float(x)!r},{float(z)!r}\n")
        out.append({"name": c.name, "closed": c.closed, "csv": buf.getvalue()})
    return out


def _curves_from_json(items):
    curves = []
    for item in items:
        rows = [line.split(",") for line in item["csv"].strip().splitlines()[1:]]
        arr = np.array(rows, dtype=float)
        curves.append(GeneratingCurve(arr[:, 1], arr[:, 2], item["closed"], item["name"]))
    return curves


def save_checkpoint(path, state: dict) -> None:
    payload = dict(state)
    payload["curves"] = _curves_to_json(state["curves"])
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)


def load_checkpoint(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        state = json.load(fh)
    state["curves"] = _curves_from_json(state["curves"])
    state["multipliers"] = tuple(state["multipliers"])
    return state


# --- driver ------------------------------------------------------------------

def _prepare(problem: OptProblem, config: OptConfig):
    curves = []
    for tag, c in problem.components:
        c = reparametrize_constant_speed(c, config.N) if (c.n != config.N or c.speed_tolerance > 1e-8) else c
        cls = validate(c).curve_class
        if cls == GENERALIZED:
            curves.extend(reparametrize_constant_speed(p, config.N) for p in split_at_axis(c))
            continue
        if cls not in (G0, G1):
            raise DegenerateInputError(f"component {c.name!r} is not a valid generating curve ({cls})")
        if tag is not None and tag != cls:
            raise DegenerateInputError(f"component {c.name!r} was tagged {tag} but validates as {cls}")
        if not c.closed:
            x = np.array(c.x)
            x[0] = x[-1] = 0.0
            c = GeneratingCurve(x, c.z, False, c.name)
        curves.append(c)
    return curves


def _multiplier_estimate(layout, ev: _Evaluator, v):
    """First-order multipliers from ``grad F + lA grad gA + lV grad gV ~ 0`` on the normal parts.

    The fit uses the smoothing metric so pole-scale oscillations do not
    dominate.  Near a sphere the two constraint gradients are almost
    parallel and only one combination of the multipliers is determined, so
    weak directions of the normal equations are dropped (minimum-norm fit).
    """
    F, A, V, terms = ev.totals(v, True)
    cons = ev.constraints
    precond = _Preconditioner(layout, layout.curves(v))
    cols = [
        _normal_part(layout, v, layout.gather([(t.gx[k] / scale, t.gz[k] / scale) for t in terms]))
        for k, scale in ((1, cons.area), (2, cons.volume_scale))
    ]
    gF = _normal_part(layout, v, layout.gather([(t.gx[0], t.gz[0]) for t in terms]))
    smoothed = [precond(c) for c in cols]
    gram = np.array([[a.dot(b) for b in smoothed] for a in cols])
    rhs = -np.array([c.dot(gF) for c in smoothed])
    w, U = np.linalg.eigh(gram)
    keep = w > 0.05 * w.max()
    lam = U[:, keep] @ ((U[:, keep].T @ rhs) / w[keep])
    return float(lam[0]), float(lam[1])


def _restore_constraints(layout, ev: _Evaluator, v, target: float, accepted: list, max_steps: int = 8):
    """Gauss-Newton projection of ``v`` onto ``gA = gV = 0`` in the smoothing metric.

    The inner solve stops at a stationarity level far coarser than the
    constraint tolerance, so small residuals would otherwise only shrink
    through ever larger penalties.  Moves are normal to the curves, steps
    are halved until both the residual and the augmented objective of
    ``ev`` decrease, and nearly parallel constraint gradients (sphere-like
    shapes) are handled by a truncated solve.  Returns ``(v, steps)``.
    """
    cons = ev.constraints
    steps = 0
    f = ev.value(v)
    for _ in range(max_steps):
        _, A, V, terms = ev.totals(v, True)
        r = np.array(cons.residuals(A, V))
        res = float(np.abs(r).max())
        if res <= target:
            break
        precond = _Preconditioner(layout, layout.curves(v))
        cols = [
            _normal_part(layout, v, layout.gather([(t.gx[k] / scale, t.gz[k] / scale) for t in terms]))
            for k, scale in ((1, cons.area), (2, cons.volume_scale))
        ]
        moves = [precond(c) for c in cols]
        gram = np.array([[a.dot(b) for b in moves] for a in cols])
        w, U = np.linalg.eigh(gram)
        keep = w > 1e-8 * w.max()
        alpha = -(U[:, keep] @ ((U[:, keep].T @ r) / w[keep]))
        d = alpha[0] * moves[0] + alpha[1] * moves[1]
        step, moved = 1.0, False
        for _ in range(20):
            trial = v + step * d
            if np.all(layout.interior_x(trial) > 0.0):
                Ft, At, Vt, _ = ev.totals(trial, False)
                ft = ev._combine(Ft, At, Vt)
                if max(abs(x) for x in cons.residuals(At, Vt)) < res and ft <= f:
                    accepted.append((f, ft))
                    v, f, moved = trial, ft, True
                    break
            step *= 0.5
        if not moved:
            break
        steps += 1
    return v, steps


def _gradient_cross_check(layout, ev, v, config):
    _, ga = ev.value_and_gradient(v)
    ell = min(c.length for c in layout.curves(v))
    gf = ev.fd_gradient(v, 1e-6 * ell)
    scale = np.abs(gf).max()
    rel = float(np.abs(ga - gf).max() / scale) if scale > 0.0 else float(np.abs(ga).max())
    if rel > config.gradient_check_tolerance:
        raise GradientCheckError(f"analytic and finite-difference gradients differ by {rel:.3g} (relative max-norm)")
    return rel


def minimize(problem: OptProblem, config: OptConfig = OptConfig(), resume_from: str | None = None) -> OptResult:
    """Minimize the energy subject to the area and volume targets.

    Returns an :class:`OptResult` with the full iteration trace.  A checkpoint
    is written after every outer iteration when ``config.checkpoint_path``
    is set; ``resume_from`` restarts from such a file and continues exactly
    as the uninterrupted run would.
    """
    cons = problem.constraints
    params = problem.params
    rng = np.random.default_rng(config.seed)
    if resume_from is not None:
        state = load_checkpoint(resume_from)
        curves = state["curves"]
        multipliers = state["multipliers"]
        penalty = state["penalty"]
        prev_res = state["previous_residual"]
        start = state["iteration"]
        trace, events = state["trace"], state["events"]
        rng.bit_generator.state = state["rng_state"]
    else:
        curves = _prepare(problem, config)
        multipliers, penalty, prev_res, start = (0.0, 0.0), config.penalty_initial, math.inf, 0
        trace, events = [], []

    converged, reason = False, "maximum outer iterations reached"
    gnorm = math.inf
    for outer in range(start, config.max_outer_iterations):
        new_curves = _degeneration(curves, config, cons.area, events)
        if new_curves is None:
            reason = "component degenerated (abort requested)"
            break
        curves = new_curves
        layout = _Layout(curves)
        ev = _Evaluator(layout, params, cons, multipliers, penalty)
        v = layout.pack(curves)
        entry = {"outer": outer}
        if outer == 0:
            if config.gradient_check:
                entry["gradient_check"] = _gradient_cross_check(layout, ev, v, config)
            if resume_from is None:
                multipliers = _multiplier_estimate(layout, ev, v)
                ev.multipliers = multipliers
        if config.gradient_mode == "finite-difference":
            ev.value_and_gradient = lambda u, ev=ev: (
                ev.value(u), ev.fd_gradient(u, 1e-6 * min(c.length for c in layout.curves(u)))
            )
        start_res = max(abs(r) for r in cons.residuals(*ev.totals(v, False)[1:3]))
        accepted: list = []
        trial, gnorm, inner_its, failure = _inner(layout, curves, ev, config, accepted)
        restored, restoration = 0, []
        u0 = layout.pack(trial)
        pA, pV = cons.residuals(*ev.totals(u0, False)[1:3])
        # final polish only: far from the constraint set the multiplier model below is not accurate
        if failure is None and max(abs(pA), abs(pV)) <= RESTORE_WINDOW * cons.tolerance:
            # the usual multiplier update comes first; on the constraint set the penalty
            # term vanishes, so without it the projection would undo the inner solve
            ev.multipliers = (multipliers[0] + penalty * pA, multipliers[1] + penalty * pV)
            u, restored = _restore_constraints(layout, ev, u0, 0.1 * cons.tolerance, restoration)
            if restored:
                multipliers = ev.multipliers
                trial = layout.curves(u)
                gnorm = projected_gradient_norm(layout, u, ev.value_and_gradient(u)[1], None, _radius(cons.area))
            else:
                ev.multipliers = multipliers

        F, A, V, _ = ev.totals(layout.pack(trial), False)
        gA, gV = cons.residuals(A, V)
        res = max(abs(gA), abs(gV))
        rejected = failure is None and res > max(2.0 * start_res, 1e-2)
        entry.update(
            energy=F,
            augmented=ev.value(layout.pack(trial)),
            area_residual=gA,
            volume_residual=gV,
            gradient_norm=gnorm,
            penalty=penalty,
            multipliers=list(multipliers),
            inner_iterations=inner_its,
            restoration=[list(p) for p in restoration],
            accepted=[list(p) for p in accepted],
            rejected=rejected,
        )
        trace.append(entry)
        log.info("outer %d: energy %.10g residual %.3g |grad| %.3g mu %.3g%s",
                 outer, F, res, gnorm, penalty, " (rejected)" if rejected else "")

        if failure is not None:
            curves = trial
            reason = failure
            break
        if rejected:
            # the subproblem ran away from the constraint set: retry from the same start
            if penalty * config.penalty_growth > config.penalty_max:
                reason = "penalty limit reached before the constraints were met"
                break
            penalty *= config.penalty_growth
        else:
            curves = trial
            if res <= cons.tolerance and gnorm <= config.gradient_tolerance:
                converged, reason = True, "converged"
                break
            if res > cons.tolerance and res > config.residual_shrink * prev_res:
                if penalty * config.penalty_growth > config.penalty_max:
                    reason = "penalty limit reached before the constraints were met"
                    break
                penalty *= config.penalty_growth
            else:
                multipliers = (multipliers[0] + penalty * gA, multipliers[1] + penalty * gV)
            prev_res = res

        if config.checkpoint_path:
            save_checkpoint(
                config.checkpoint_path,
                {
                    "iteration": outer + 1,
                    "curves": curves,
                    "multipliers": list(multipliers),
                    "penalty": penalty,
                    "previous_residual": prev_res,
                    "rng_state": rng.bit_generator.state,
                    "trace": trace,
                    "events": events,
                },
            )

    system = SurfaceSystem(curves)
    report = system_energy(system, params, check_disjointness=False)
    gA, gV = cons.residuals(report.area, report.volume)
    residuals = {"area": gA, "volume": gV, "gradient_norm": gnorm}
    return OptResult(system, report, residuals, trace, converged, reason, tuple(multipliers), penalty, events)


# --- multistart ---------------------------------------------------------------

@dataclass
class MultistartResult:
    best: OptResult
    leaderboard: list

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "leaderboard": list(self.leaderboard),
        }


class MultistartError(AxiHelfrichError, RuntimeError):
    """Every multistart run failed; ``failures`` maps kind to reason."""

    def __init__(self, failures: dict):
        super().__init__("all multistart runs failed: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))
        self.failures = failures


def _run_kind(kind, params, constraints, config):
    try:
        curves = seed_shape(kind, constraints.area, constraints.volume, config.N)
        problem = OptProblem(list(curves), params, constraints)
        result = minimize(problem, config)
        result.kind = kind
        return kind, result, None
    except (AxiHelfrichError, ValueError) as exc:
        return kind, None, f"{type(exc).__name__}: {exc}"


def multistart(params: MaterialParams, constraints: ConstraintSpec, kinds, config: OptConfig = OptConfig(), threads: int = 1) -> MultistartResult:
    """Minimize from several seed families; the lowest converged energy wins.

    Ties and the leaderboard order are resolved by ``(energy, kind)``.
    """
    kinds = list(kinds)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda k: _run_kind(k, params, constraints, config), kinds))
    else:
        runs = [_run_kind(k, params, constraints, config) for k in kinds]

    board, failures = [], {}
    for kind, result, error in runs:
        if result is None:
            failures[kind] = error
            board.append({"kind": kind, "energy": None, "converged": False, "reason": error})
        else:
            board.append({"kind": kind, "energy": result.energy, "converged": result.converged, "reason": result.reason})
            if not result.converged:
                failures[kind] = result.reason
    ok = [(r.energy, k, r) for k, r, _ in runs if r is not None and r.converged]
    if not ok:
        raise MultistartError(failures)
    board.sort(key=lambda e: (math.inf if e["energy"] is None else e["energy"], e["kind"]))
    best = min(ok, key=lambda t: (t[0], t[1]))[2]
    return MultistartResult(best, board)


# --- diagnostics ----------------------------------------------------------------

def radial_deviation(curve: GeneratingCurve) -> float:
    """Max deviation of the profile from its best-fit circle centred on the axis, relative to the radius."""
    x, z = np.asarray(curve.x), np.asarray(curve.z)
    # x^2 + z^2 = 2 zc z + (r^2 - zc^2), linear least squares in (zc, r^2 - zc^2)
    M = np.column_stack([2.0 * z, np.ones_like(z)])
    (zc, k), *_ = np.linalg.lstsq(M, x * x + z * z, rcond=None)
    r = math.sqrt(k + zc * zc)
    rho = np.hypot(x, z - zc)
    return float(np.max(np.abs(rho - r)) / r)
