"""Surface-of-revolution quantities of a generating curve.

Every integral is a composite trapezoid rule on the uniform parameter grid
against the area measure ``2*pi*x*|dgamma/dt| dt``; nodes on the axis carry
zero weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import (
    AXIS_TOLERANCE,
    GeneratingCurve,
    SurfaceSystem,
    closed_trace,
    derivatives,
    difference_operators,
    interior_axis_touches,
    quadrature_weights,
    _breaks_for,
    DerivativeStencil,
)
from .errors import DegenerateInputError, NotApplicableError, PointOnCurveError, SingularNodeError

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class AreaMeasure:
    weights: np.ndarray
    total: float


@dataclass(frozen=True)
class CurvatureField:
    k1: np.ndarray
    k2: np.ndarray
    H: np.ndarray
    K: np.ndarray


@dataclass(frozen=True)
class CurvatureNorms:
    int_k1sq: float
    int_k2sq: float
    int_K: float
    int_Hsq: float


@dataclass(frozen=True)
class GaussBonnetReport:
    integral: float
    expected: float
    defect: float


def node_fields(x, z, closed, breaks=(), pole_mask=None):
    """Raw per-node quantities shared by the geometry and the optimizer kernel.

    Returns a dict with first/second derivatives ``a, b, c, d`` (x', z', x'', z''),
    speed ``s``, quadrature weights ``q`` and area weights ``w``.
    """
    n = x.size
    d1, d2 = difference_operators(n, closed, breaks)
    q = quadrature_weights(n, closed, breaks)
    a, b = d1 @ x, d1 @ z
    c, d = d2 @ x, d2 @ z
    s = np.hypot(a, b)
    w = TWO_PI * q * x * s
    if pole_mask is not None:
        w = np.where(pole_mask, 0.0, w)
    return {"a": a, "b": b, "c": c, "d": d, "s": s, "q": q, "w": w}


def principal_curvatures(x, f, pole_mask):
    """Meridian and parallel curvatures; the parallel one is set to the meridian one at poles."""
    a, b, c, d, s = f["a"], f["b"], f["c"], f["d"], f["s"]
    k1 = (d * a - c * b) / s**3
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = np.where(pole_mask, k1, b / (x * s))
    return k1, k2


def pole_nodes(curve: GeneratingCurve) -> np.ndarray:
    mask = np.zeros(curve.n, dtype=bool)
    if not curve.closed:
        thr = AXIS_TOLERANCE * curve.length
        mask[0] = curve.x[0] <= thr
        mask[-1] = curve.x[-1] <= thr
    return mask


def _fields(curve: GeneratingCurve):
    if curve.n < 16:
        raise DegenerateInputError("need at least 16 samples")
    return node_fields(curve.x, curve.z, curve.closed, _breaks_for(curve), pole_nodes(curve))


def area_measure(curve: GeneratingCurve) -> AreaMeasure:
    if not curve.closed and np.all(curve.x <= AXIS_TOLERANCE * max(curve.length, 1.0)):
        # a component collapsed onto the axis carries no area
        return AreaMeasure(np.zeros(curve.n), 0.0)
    w = _fields(curve)["w"]
    w = np.where(curve.x <= 0.0, 0.0, w)
    return AreaMeasure(w, float(w.sum()))


def area(curve: GeneratingCurve) -> float:
    return area_measure(curve).total


def enclosed_volume(curve: GeneratingCurve) -> float:
    """Signed volume ``pi * int x^2 z' dt``; positive for bottom-to-top (counterclockwise) curves."""
    f = _fields(curve)
    return float(math.pi * np.sum(f["q"] * curve.x**2 * f["b"]))


def arc_length(curve: GeneratingCurve) -> float:
    """``int |dgamma/dt| dt`` by the same quadrature (the constant speed of the curve)."""
    f = _fields(curve)
    return float(np.sum(f["q"] * f["s"]))


def curvatures(curve: GeneratingCurve, stencil: DerivativeStencil | None = None) -> CurvatureField:
    touches = interior_axis_touches(curve)
    if touches.size:
        raise SingularNodeError(
            f"curve touches the axis at interior node(s) {touches.tolist()}; "
            "decompose it with split_at_axis first"
        )
    if stencil is None:
        stencil = derivatives(curve)
    f = {
        "a": stencil.first[:, 0],
        "b": stencil.first[:, 1],
        "c": stencil.second[:, 0],
        "d": stencil.second[:, 1],
    }
    f["s"] = np.hypot(f["a"], f["b"])
    k1, k2 = principal_curvatures(curve.x, f, pole_nodes(curve))
    return CurvatureField(k1, k2, k1 + k2, k1 * k2)


def curvature_norms(curve, field: CurvatureField | None = None, measure: AreaMeasure | None = None) -> CurvatureNorms:
    field = curvatures(curve) if field is None else field
    w = area_measure(curve).weights if measure is None else measure.weights
    return CurvatureNorms(
        int_k1sq=float(np.sum(w * field.k1**2)),
        int_k2sq=float(np.sum(w * field.k2**2)),
        int_K=float(np.sum(w * field.K)),
        int_Hsq=float(np.sum(w * field.H**2)),
    )


def gauss_bonnet_check(curve: GeneratingCurve) -> GaussBonnetReport:
    if not curve.closed and interior_axis_touches(curve).size:
        raise NotApplicableError("generalized generator: split it at the axis first")
    integral = curvature_norms(curve).int_K
    expected = 0.0 if curve.closed else FOUR_PI
    return GaussBonnetReport(integral, expected, abs(integral - expected))


def diameter(curve: GeneratingCurve) -> float:
    """Largest distance between two points of the surface of revolution.

    For nodes i, j the farthest pair of surface points lies on opposite
    meridians, at distance ``hypot(x_i + x_j, z_i - z_j)``.
    """
    x, z = curve.x, curve.z
    d2 = (x[:, None] + x[None, :]) ** 2 + (z[:, None] - z[None, :]) ** 2
    return float(np.sqrt(d2.max()))


def canonicalize_orientation(curve: GeneratingCurve):
    """Return ``(curve, flipped)`` with the curve oriented to enclose nonnegative volume."""
    if enclosed_volume(curve) < 0.0:
        return curve.reversed(), True
    return curve, False


# --- winding index ---------------------------------------------------------

def _as_closed(polyline) -> np.ndarray:
    p = np.asarray(polyline, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
        raise DegenerateInputError("polyline must be an (n, 2) array with n >= 3")
    if not np.array_equal(p[0], p[-1]):
        p = np.vstack([p, p[:1]])
    return p


def _segment_distance(points, a, b):
    """Distance from each point (P, 2) to each segment a->b (M, 2): returns (P,) minima."""
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom > 0.0, denom, 1.0)
    ap = points[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("pmi,mi->pm", ap, ab) / denom, 0.0, 1.0)
    diff = ap - t[..., None] * ab[None, :, :]
    return np.sqrt(np.einsum("pmi,pmi->pm", diff, diff).min(axis=1))


def _winding_many(polyline, points) -> np.ndarray:
    v0 = polyline[None, :-1, :] - points[:, None, :]
    v1 = polyline[None, 1:, :] - points[:, None, :]
    cross = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    dot = np.einsum("pmi,pmi->pm", v0, v1)
    return np.rint(np.arctan2(cross, dot).sum(axis=1) / TWO_PI).astype(int)


def winding_index(closed_polyline, p) -> int:
    """Winding number of a closed polyline around ``p`` by summed signed angles."""
    poly = _as_closed(closed_polyline)
    p = np.asarray(p, dtype=float).reshape(1, 2)
    length = np.hypot(*np.diff(poly, axis=0).T).sum()
    if _segment_distance(p, poly[:-1], poly[1:])[0] <= 1e-12 * length:
        raise PointOnCurveError(f"point {p[0].tolist()} lies on the curve")
    return int(_winding_many(poly, p)[0])


def system_index(system: SurfaceSystem, p) -> int:
    return sum(winding_index(closed_trace(c), p) for c in system)


def index_field(system: SurfaceSystem, grid_resolution: int = 256, chunk: int = 2048):
    """Sampled system index on a grid over the bounding box.

    Returns ``(X, Z, index)`` where ``index`` is a masked array; grid points
    within two chord lengths of a trace are masked out.
    """
    traces = [closed_trace(c) for c in system]
    allp = np.vstack(traces)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    pad = 0.05 * (hi - lo).max()
    gx = np.linspace(lo[0] - pad, hi[0] + pad, grid_resolution)
    gz = np.linspace(lo[1] - pad, hi[1] + pad, grid_resolution)
    X, Z = np.meshgrid(gx, gz)
    pts = np.column_stack([X.ravel(), Z.ravel()])
    tube = 2.0 * max(np.hypot(*np.diff(t, axis=0).T).max() for t in traces)

    index = np.zeros(pts.shape[0], dtype=int)
    near = np.zeros(pts.shape[0], dtype=bool)
    for start in range(0, pts.shape[0], chunk):
        sl = slice(start, start + chunk)
        for t in traces:
            near[sl] |= _segment_distance(pts[sl], t[:-1], t[1:]) <= tube
            index[sl] += _winding_many(t, pts[sl])
    idx = np.ma.masked_array(index, mask=near).reshape(X.shape)
    return X, Z, idx


def index_admissible(system: SurfaceSystem, grid_resolution: int = 256) -> bool:
    """True iff every sampled point off the traces has system index 0 or 1."""
    _, _, idx = index_field(system, grid_resolution)
    vals = idx.compressed()
    return bool(np.all((vals == 0) | (vals == 1)))
