"""Numerical checks of the quantitative length, tangent, oscillation and cardinality estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .curve import (
    AXIS_TOLERANCE,
    GeneratingCurve,
    SurfaceSystem,
    _breaks_for,
    quadrature_weights,
)
from .errors import NotApplicableError

RELATIVE_TOLERANCE = 1e-9
EIGHT_PI = 8.0 * math.pi
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class BoundReport:
    """One inequality ``lhs <= rhs`` (``sense="<="``) or ``lhs >= rhs`` (``sense=">="``).

    ``scale`` is an optional natural magnitude of the two sides; it keeps the
    relative slack meaningful when both sides vanish up to rounding.
    """

    name: str
    lhs: float
    rhs: float
    sense: str = "<="
    note: str = ""
    scale: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lhs", float(self.lhs))
        object.__setattr__(self, "rhs", float(self.rhs))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def slack(self) -> float:
        small, big = (self.lhs, self.rhs) if self.sense == "<=" else (self.rhs, self.lhs)
        if math.isinf(small) or math.isinf(big):
            return math.inf if (small == -math.inf or big == math.inf) else -math.inf
        return big - small

    @property
    def relative_slack(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs), self.scale)
        if math.isinf(scale):
            return math.inf
        return float(self.slack / scale) if scale > 0.0 else 0.0

    @property
    def holds(self) -> bool:
        return bool(self.relative_slack >= -RELATIVE_TOLERANCE)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "sense": self.sense,
            "holds": self.holds,
            "slack": self.slack,
            "relative_slack": self.relative_slack,
            "note": self.note,
        }


def _on_axis(curve: GeneratingCurve) -> np.ndarray:
    return curve.x <= AXIS_TOLERANCE * curve.length


def _fields(curve: GeneratingCurve):
    """Node fields and principal curvatures; interior axis touches count as poles."""
    mask = np.zeros(curve.n, dtype=bool) if curve.closed else _on_axis(curve)
    f = geometry.node_fields(curve.x, curve.z, curve.closed, _breaks_for(curve), mask)
    k1, k2 = geometry.principal_curvatures(curve.x, f, mask)
    return f, k1, k2


def _totals(curve: GeneratingCurve):
    f, k1, k2 = _fields(curve)
    w = f["w"]
    return {
        "length": float(np.sum(f["q"] * f["s"])),
        "area": float(w.sum()),
        "int_k1sq": float(np.sum(w * k1**2)),
        "int_k2sq": float(np.sum(w * k2**2)),
    }


# --- length -----------------------------------------------------------------

def length_bound_check(curve: GeneratingCurve) -> tuple[BoundReport, BoundReport]:
    """``|S|/(2 pi diam) <= length <= sqrt|S|/(2 pi) (||k1|| + ||k2||)``."""
    t = _totals(curve)
    ell = t["length"]
    lower = BoundReport("length-lower", t["area"] / (2.0 * math.pi * geometry.diameter(curve)), ell)
    upper_rhs = math.sqrt(t["area"]) / (2.0 * math.pi) * (math.sqrt(t["int_k1sq"]) + math.sqrt(t["int_k2sq"]))
    upper = BoundReport("length-upper", ell, upper_rhs)
    return lower, upper


def system_length_bound_check(system) -> BoundReport:
    """``2 pi sum length_i <= sum (|S_i|/2 + int k1^2 + k2^2)``."""
    lhs = rhs = 0.0
    for c in system:
        t = _totals(c)
        lhs += 2.0 * math.pi * t["length"]
        rhs += 0.5 * t["area"] + t["int_k1sq"] + t["int_k2sq"]
    return BoundReport("system-length", lhs, rhs)


# --- tangents at the axis -----------------------------------------------------

def _richardson(values: np.ndarray) -> np.ndarray:
    """Quadratic extrapolation to node 0 from nodes 1, 2, 3."""
    return 3.0 * values[0] - 3.0 * values[1] + values[2]


def _endpoint_tangent(first: np.ndarray, i: int, inward: int) -> np.ndarray:
    idx = [i + inward, i + 2 * inward, i + 3 * inward]
    return _richardson(first[idx])


@dataclass(frozen=True)
class AxisTangentReport:
    limit_dz_start: float
    limit_dz_end: float
    limit_dx_start: float
    limit_dx_end: float
    length: float
    tolerance: float

    @property
    def dx_signs(self) -> bool:
        return bool(self.limit_dx_start * self.limit_dx_end < 0.0)

    @property
    def holds(self) -> bool:
        tol = self.tolerance
        return bool(
            abs(self.limit_dz_start) <= tol
            and abs(self.limit_dz_end) <= tol
            and abs(abs(self.limit_dx_start) - self.length) <= tol
            and abs(abs(self.limit_dx_end) - self.length) <= tol
            and self.dx_signs
        )

    def to_dict(self) -> dict:
        return {
            "name": "axis-tangent",
            "limit_dz_start": self.limit_dz_start,
            "limit_dz_end": self.limit_dz_end,
            "limit_dx_start": self.limit_dx_start,
            "limit_dx_end": self.limit_dx_end,
            "length": self.length,
            "tolerance": self.tolerance,
            "dx_signs": self.dx_signs,
            "holds": self.holds,
        }


def axis_tangent_check(curve: GeneratingCurve) -> AxisTangentReport:
    """One-sided tangent limits at the two axis endpoints of a genus-0 profile."""
    if curve.closed:
        raise NotApplicableError("axis tangent limits need an open curve with axis endpoints")
    f, _, _ = _fields(curve)
    first = np.column_stack([f["a"], f["b"]])
    start = _endpoint_tangent(first, 0, 1)
    end = _endpoint_tangent(first, curve.n - 1, -1)
    ell = float(np.sum(f["q"] * f["s"]))
    return AxisTangentReport(
        float(start[1]), float(end[1]), float(start[0]), float(end[0]), ell, 10.0 / math.sqrt(curve.n) * ell
    )


# --- oscillation ----------------------------------------------------------------

def _node_index(curve: GeneratingCurve, t: float) -> int:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"parameter {t!r} outside [0, 1]")
    return int(round(t * (curve.n - 1)))


def oscillation_bound_check(curve: GeneratingCurve, a: float = 0.0, b: float = 1.0) -> tuple[BoundReport, BoundReport]:
    """Both oscillation inequalities on the sub-arc ``[a, b]`` (snapped to nodes).

    Endpoint tangents on the axis are one-sided limits extrapolated from the
    three nearest nodes; every endpoint tangent is rescaled to the constant
    speed ``length``.  The second inequality is trivially true when
    ``int x'^2 / x dt`` diverges, which happens whenever an endpoint lies on
    the axis.
    """
    ia, ib = _node_index(curve, a), _node_index(curve, b)
    if ib < ia:
        raise ValueError("need a <= b")
    on_axis = _on_axis(curve)
    if np.any(on_axis[ia + 1 : ib]) or (curve.closed and np.any(on_axis)):
        raise NotApplicableError("the arc (a, b) must stay off the axis")

    f, k1, k2 = _fields(curve)
    first = np.column_stack([f["a"], f["b"]])
    ell = float(np.sum(f["q"] * f["s"]))
    n = curve.n
    h = 1.0 / (n - 1)

    def tangent(i, inward):
        v = _endpoint_tangent(first, i, inward) if on_axis[i] else first[i]
        return ell * v / np.hypot(*v)

    m = ib - ia + 1
    if m < 2:
        zero = BoundReport("oscillation-1", 0.0, 0.0, ">=")
        return zero, BoundReport("oscillation-2", 0.0, 0.0, ">=")
    ta, tb = tangent(ia, 1), tangent(ib, -1)

    if curve.closed and ia == 0 and ib == n - 1:
        q = quadrature_weights(n, True)
    else:
        q = quadrature_weights(m, False) * ((m - 1) * h)
    x = curve.x[ia : ib + 1]
    w = 2.0 * math.pi * q * x * f["s"][ia : ib + 1]
    int_k1sq = float(np.sum(w * k1[ia : ib + 1] ** 2))
    int_k2sq = float(np.sum(w * k2[ia : ib + 1] ** 2))

    # right-hand sides are at most their constant times 2 * length
    first_report = BoundReport(
        "oscillation-1", ell * (int_k1sq + int_k2sq), 4.0 * math.pi * abs(tb[0] - ta[0]), ">=",
        scale=8.0 * math.pi * ell,
    )

    rhs2 = 2.0 * math.sqrt(2.0 * math.pi) * abs(tb[1] - ta[1])
    J, note = _radial_energy(curve.x[ia : ib + 1], h, ell, on_axis[ia] or on_axis[ib])
    lhs2 = math.inf if math.isinf(J) else math.sqrt(ell) * (int_k1sq + J)
    return first_report, BoundReport("oscillation-2", lhs2, rhs2, ">=", note, 4.0 * math.sqrt(2.0 * math.pi) * ell)


def _radial_energy(x: np.ndarray, h: float, ell: float, touches_axis: bool):
    """Midpoint rule for ``int x'(t)^2 / x(t) dt``; returns ``(J, note)``."""
    if touches_axis:
        return math.inf, "J diverges: arc endpoint on the axis"
    xm = 0.5 * (x[1:] + x[:-1])
    if np.any(xm <= 0.0):
        return math.inf, "J diverges: arc reaches the axis"
    dx = np.diff(x) / h
    partial = np.cumsum(h * dx**2 / xm)
    if partial.size and partial[-1] > DIVERGENCE_FACTOR * ell:
        return math.inf, "J diverges: partial sums exceed 1e12 * length"
    return float(partial[-1]) if partial.size else 0.0, ""


# --- cardinality ------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentCap:
    max_axis_touches: int
    max_components: int
    infeasible_nonempty: bool


def _units(C: float) -> int:
    return int(math.floor(C / EIGHT_PI * (1.0 + RELATIVE_TOLERANCE)))


def max_components(C_bound: float) -> ComponentCap:
    """Caps implied by a bound ``C`` on ``int k1^2 + k2^2``: each component costs at least ``8 pi``."""
    if not C_bound > 0.0:
        raise ValueError(f"C_bound must be positive, got {C_bound!r}")
    k = _units(C_bound)
    return ComponentCap(k + 1, k, k == 0)


def cardinality_check(curve: GeneratingCurve) -> BoundReport:
    """Number of axis nodes ``<= floor(int (k1^2 + k2^2) / 8 pi) + 1``."""
    t = _totals(curve)
    touches = 0 if curve.closed else int(np.count_nonzero(_on_axis(curve)))
    C = t["int_k1sq"] + t["int_k2sq"]
    return BoundReport("axis-touches", float(touches), float(_units(C) + 1), "<=")


def system_cardinality_check(system) -> BoundReport:
    """Component count ``<= floor(sum int (k1^2 + k2^2) / 8 pi)``."""
    if not isinstance(system, SurfaceSystem):
        system = SurfaceSystem(system)
    C = 0.0
    for c in system:
        t = _totals(c)
        C += t["int_k1sq"] + t["int_k2sq"]
    return BoundReport("component-count", float(len(system)), float(_units(C)), "<=")


def all_checks(curve: GeneratingCurve, params=None) -> list:
    """Every applicable per-curve check (coercivity included when ``params`` is given)."""
    out = list(length_bound_check(curve))
    out.append(cardinality_check(curve))
    out.append(system_cardinality_check(SurfaceSystem([curve])))
    out.append(system_length_bound_check([curve]))
    out.extend(oscillation_bound_check(curve, 0.0, 1.0))
    if not curve.closed:
        out.append(axis_tangent_check(curve))
    if params is not None:
        from .energy import coercivity_check

        r = coercivity_check(curve, params)
        out.append(BoundReport("coercivity", r.lhs, r.rhs, "<=", f"C={r.C!r}"))
    return out
