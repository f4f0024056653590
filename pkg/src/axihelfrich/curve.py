"""Generating curves of axisymmetric surfaces.

A generating curve is a planar polyline ``(x, z)`` sampled on a uniform
parameter grid ``t in [0, 1]``, where ``x >= 0`` is the distance to the
rotation axis and ``z`` the height.  Three classes are recognised:

* ``G0``: open curve whose endpoints lie on the axis and whose interior
  stays strictly off it (genus-0 surface);
* ``G1``: closed curve strictly off the axis (genus-1 surface);
* ``GeneralizedGenerator``: open curve that also touches the axis at
  interior nodes; :func:`split_at_axis` decomposes it into ``G0`` pieces.

All curves are expected to be sampled at constant speed (equal chords),
which :func:`reparametrize_constant_speed` enforces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline

from .errors import DegenerateInputError, NotApplicableError

MIN_SAMPLES = 16
SPEED_TOLERANCE = 1e-8
# x < AXIS_TOLERANCE * length counts as touching the axis
AXIS_TOLERANCE = 1e-9

G0 = "G0"
G1 = "G1"
GENERALIZED = "GeneralizedGenerator"
INVALID = "Invalid"


class CurveSample(NamedTuple):
    t: float
    x: float
    z: float


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GeneratingCurve:
    """Uniform-parameter polyline generating a surface of revolution.

    For closed curves the last sample repeats the first one.
    """

    x: np.ndarray
    z: np.ndarray
    closed: bool = False
    name: str = ""
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        x = _frozen(self.x)
        z = _frozen(self.z)
        if x.ndim != 1 or x.shape != z.shape:
            raise ValueError("x and z must be 1-d arrays of equal length")
        if x.size < 2:
            raise DegenerateInputError("a curve needs at least two samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise ValueError("curve coordinates must be finite")
        t = np.linspace(0.0, 1.0, x.size) if self.t is None else self.t
        t = _frozen(t)
        if t.shape != x.shape:
            raise ValueError("t must match x and z in length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "closed", bool(self.closed))

    @classmethod
    def from_points(cls, points, closed=False, name=""):
        points = np.asarray(points, dtype=float)
        return cls(points[:, 0], points[:, 1], closed=closed, name=name)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.z])

    @property
    def samples(self) -> list[CurveSample]:
        return [CurveSample(*row) for row in zip(self.t, self.x, self.z)]

    def __iter__(self) -> Iterator[CurveSample]:
        return iter(self.samples)

    def __len__(self) -> int:
        return self.n

    @property
    def chords(self) -> np.ndarray:
        return np.hypot(np.diff(self.x), np.diff(self.z))

    @property
    def length(self) -> float:
        """Polyline length (sum of chords)."""
        return float(self.chords.sum())

    @property
    def speed_tolerance(self) -> float:
        """Measured max relative deviation of the chords from ``length / (n - 1)``."""
        c = self.chords
        mean = c.sum() / c.size
        if mean == 0.0:
            return float("inf")
        return float(np.max(np.abs(c - mean)) / mean)

    def reversed(self) -> "GeneratingCurve":
        return GeneratingCurve(self.x[::-1], self.z[::-1], self.closed, self.name)

    def scaled(self, factor: float) -> "GeneratingCurve":
        return GeneratingCurve(factor * self.x, factor * self.z, self.closed, self.name)

    def translated(self, dz: float) -> "GeneratingCurve":
        return GeneratingCurve(self.x, self.z + dz, self.closed, self.name)

    def with_name(self, name: str) -> "GeneratingCurve":
        return GeneratingCurve(self.x, self.z, self.closed, name)


@dataclass(frozen=True)
class SurfaceSystem:
    """Finite family of generating curves; quantities of a system are sums over components."""

    components: tuple

    def __init__(self, components: Sequence[GeneratingCurve]):
        comps = tuple(components)
        if not comps:
            raise DegenerateInputError("a system needs at least one component")
        object.__setattr__(self, "components", comps)

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]


@dataclass(frozen=True)
class ValidationReport:
    curve_class: str
    violations: tuple = ()
    speed_defect: float = 0.0
    axis_touches: tuple = ()

    @property
    def ok(self) -> bool:
        return self.curve_class != INVALID


@dataclass(frozen=True)
class DerivativeStencil:
    """Per-node discrete first and second derivatives with respect to ``t``.

    ``breaks`` lists interior axis-touch nodes across which no stencil
    reaches; derivatives there are the mean of the two one-sided values.
    """

    first: np.ndarray
    second: np.ndarray
    scheme: str
    breaks: tuple = ()

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.first[:, 0], self.first[:, 1])


def axis_threshold(curve: GeneratingCurve) -> float:
    return AXIS_TOLERANCE * curve.length


def interior_axis_touches(curve: GeneratingCurve) -> np.ndarray:
    """Indices of interior nodes lying on the axis (open curves only)."""
    if curve.closed:
        return np.flatnonzero(curve.x[:-1] <= axis_threshold(curve))
    return 1 + np.flatnonzero(curve.x[1:-1] <= axis_threshold(curve))


def validate(curve: GeneratingCurve, speed_tolerance: float = SPEED_TOLERANCE) -> ValidationReport:
    """Classify ``curve`` as G0, G1, GeneralizedGenerator or Invalid."""
    n = curve.n
    if n < MIN_SAMPLES:
        raise DegenerateInputError(f"need at least {MIN_SAMPLES} samples, got {n}")
    violations = []
    length = curve.length
    if not length > 0.0:
        return ValidationReport(INVALID, ("length>0",), float("inf"))
    defect = curve.speed_tolerance
    if defect > speed_tolerance:
        violations.append("constant-speed")
    thr = AXIS_TOLERANCE * length
    x = curve.x
    if np.any(x < -thr):
        violations.append("x>=0")

    touches = ()
    if curve.closed:
        p = curve.points
        if np.hypot(*(p[0] - p[-1])) > speed_tolerance * length:
            violations.append("closure")
        e = np.diff(p, axis=0)
        kinks = np.hypot(*np.diff(e, axis=0).T)
        seam = np.hypot(*(e[0] - e[-1]))
        if seam > 2.0 * kinks.max() + speed_tolerance * length / (n - 1):
            violations.append("seam-tangent")
        if np.any(x <= thr):
            violations.append("x>0")
        cls = INVALID if violations else G1
    else:
        if x[0] > thr or x[-1] > thr:
            violations.append("axis-endpoints")
        touches = tuple(int(i) for i in interior_axis_touches(curve))
        if violations:
            cls = INVALID
        elif touches:
            cls = GENERALIZED
        else:
            cls = G0
    return ValidationReport(cls, tuple(violations), defect, touches)


def reparametrize_constant_speed(curve: GeneratingCurve, n_out: int | None = None) -> GeneratingCurve:
    """Resample ``curve`` at ``n_out`` points with equal chord lengths.

    A cubic spline is fitted through the nodes against cumulative chord
    length (periodic for closed curves); the output nodes are then moved
    along the spline until all chords agree.
    """
    n_out = curve.n if n_out is None else int(n_out)
    if n_out < 4:
        raise DegenerateInputError("n_out must be at least 4")
    pts = curve.points
    if curve.closed:
        pts = pts.copy()
        pts[-1] = pts[0]
    chords = np.hypot(*np.diff(pts, axis=0).T)
    keep = np.concatenate([[True], chords > 0.0])
    pts, chords = pts[keep], chords[chords > 0.0]
    total = chords.sum()
    if pts.shape[0] < 4 or not total > 0.0:
        raise DegenerateInputError("curve has zero length")

    u = np.concatenate([[0.0], np.cumsum(chords)])
    spline = CubicSpline(u, pts, bc_type="periodic" if curve.closed else "not-a-knot")

    s = np.linspace(0.0, u[-1], n_out)
    best, best_dev = None, np.inf
    for _ in range(100):
        p = spline(s)
        c = np.hypot(*np.diff(p, axis=0).T)
        cum = np.concatenate([[0.0], np.cumsum(c)])
        mean = cum[-1] / (n_out - 1)
        dev = np.max(np.abs(c - mean)) / mean
        if dev < best_dev:
            best, best_dev = p, dev
        if dev < 1e-14:
            break
        s = np.interp(np.linspace(0.0, cum[-1], n_out), cum, s)

    p = best.copy()
    p[0], p[-1] = pts[0], pts[-1]
    if curve.closed:
        p[-1] = p[0]
    return GeneratingCurve(p[:, 0], p[:, 1], curve.closed, curve.name)


# --- finite-difference operators -------------------------------------------

def _open_rows(m: int, h: float):
    """(rows, cols, d1, d2) triplets of the open-curve stencil on m nodes."""
    r, c, v1, v2 = [], [], [], []

    def put(i, cols, w1, w2):
        for j, a, b in zip(cols, w1, w2):
            r.append(i)
            c.append(j)
            v1.append(a / h)
            v2.append(b / h**2)

    put(0, [0, 1, 2, 3], [-1.5, 2.0, -0.5, 0.0], [2.0, -5.0, 4.0, -1.0])
    put(m - 1, [m - 1, m - 2, m - 3, m - 4], [1.5, -2.0, 0.5, 0.0], [2.0, -5.0, 4.0, -1.0])
    if m >= 6:
        # fourth-order off-centre stencils next to the ends
        w1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
        w2 = np.array([11.0, -20.0, 6.0, 4.0, -1.0]) / 12.0
        put(1, [0, 1, 2, 3, 4], w1, w2)
        put(m - 2, [m - 1, m - 2, m - 3, m - 4, m - 5], -w1, w2)
    else:
        for i in (1, m - 2):
            put(i, [i - 1, i, i + 1], [-0.5, 0.0, 0.5], [1.0, -2.0, 1.0])
    c4_1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    c4_2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    for i in range(2, m - 2):
        put(i, range(i - 2, i + 3), c4_1, c4_2)
    return r, c, v1, v2


@lru_cache(maxsize=64)
def difference_operators(n: int, closed: bool, breaks: tuple = ()):
    """Sparse ``(D1, D2)`` acting on node values of an ``n``-sample curve.

    Interior nodes use fourth-order central stencils, open ends one-sided
    second-order stencils, closed curves a periodic wrap (the repeated last
    node is a copy of node 0 and is never read).
    """
    h = 1.0 / (n - 1)
    if closed:
        m = n - 1
        c4_1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * h)
        c4_2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12.0 * h**2)
        rows = np.repeat(np.arange(m), 5)
        cols = (rows + np.tile(np.arange(-2, 3), m)) % m
        d1 = sp.coo_matrix((np.tile(c4_1, m), (rows, cols)), shape=(n, n)).tocsr()
        d2 = sp.coo_matrix((np.tile(c4_2, m), (rows, cols)), shape=(n, n)).tocsr()
        last = sp.csr_matrix(([1.0], ([n - 1], [0])), shape=(n, n))
        return (d1 + last @ d1).tocsr(), (d2 + last @ d2).tocsr()

    bounds = [0, *breaks, n - 1]
    r, c, v1, v2 = [], [], [], []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        m = hi - lo + 1
        if m < 4:
            raise DegenerateInputError("axis touches too close together to difference")
        rr, cc, a, b = _open_rows(m, h)
        rr = np.asarray(rr) + lo
        scale = np.ones(rr.size)
        # a break node receives half of each neighbouring segment's one-sided row
        scale[(rr == lo) & (lo != 0)] = 0.5
        scale[(rr == hi) & (hi != n - 1)] = 0.5
        r.extend(rr)
        c.extend(np.asarray(cc) + lo)
        v1.extend(np.asarray(a) * scale)
        v2.extend(np.asarray(b) * scale)
    d1 = sp.coo_matrix((v1, (r, c)), shape=(n, n)).tocsr()
    d2 = sp.coo_matrix((v2, (r, c)), shape=(n, n)).tocsr()
    return d1, d2


# end corrections of the composite trapezoid rule (Gregory, exact for cubics)
_GREGORY = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


@lru_cache(maxsize=64)
def quadrature_weights(n: int, closed: bool, breaks: tuple = ()) -> np.ndarray:
    """Positive quadrature weights on the uniform grid.

    Closed curves use the periodic trapezoid rule (spectrally accurate);
    open curves the end-corrected trapezoid rule on each stretch between
    axis touches.
    """
    h = 1.0 / (n - 1)
    if closed:
        q = np.full(n, h)
        q[-1] = 0.0
    else:
        q = np.zeros(n)
        bounds = [0, *breaks, n - 1]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            m = hi - lo + 1
            seg = np.full(m, h)
            if m >= 6:
                seg[:3] = seg[-3:][::-1] = h * _GREGORY
            else:
                seg[0] = seg[-1] = 0.5 * h
            q[lo : hi + 1] += seg
    q.setflags(write=False)
    return q


def _breaks_for(curve: GeneratingCurve) -> tuple:
    if curve.closed:
        return ()
    return tuple(int(i) for i in interior_axis_touches(curve))


def derivatives(curve: GeneratingCurve) -> DerivativeStencil:
    if curve.n < MIN_SAMPLES:
        raise DegenerateInputError(f"need at least {MIN_SAMPLES} samples, got {curve.n}")
    breaks = _breaks_for(curve)
    d1, d2 = difference_operators(curve.n, curve.closed, breaks)
    p = curve.points
    scheme = "periodic-central4" if curve.closed else "central4+onesided2"
    return DerivativeStencil(d1 @ p, d2 @ p, scheme, breaks)


def split_at_axis(curve: GeneratingCurve) -> list[GeneratingCurve]:
    """Cut a curve at its interior axis touches into G0 pieces.

    Pieces keep the parent's nodes (so they stay constant-speed); touch
    nodes are snapped onto the axis and shared by adjacent pieces.
    """
    x, z = np.array(curve.x), np.array(curve.z)
    touches = interior_axis_touches(curve)
    if curve.closed:
        if touches.size == 0:
            return [curve]
        # open the loop at its first axis touch; the result starts and ends there
        k = int(touches[0])
        x = np.concatenate([x[k:-1], x[: k + 1]])
        z = np.concatenate([z[k:-1], z[: k + 1]])
        opened = GeneratingCurve(x, z, False, curve.name)
        return split_at_axis(opened) if interior_axis_touches(opened).size else [
            _snap_ends(opened)
        ]
    if touches.size == 0:
        return [curve]
    bounds = [0, *touches.tolist(), curve.n - 1]
    pieces = []
    for k, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        piece = GeneratingCurve(x[lo : hi + 1], z[lo : hi + 1], False, f"{curve.name}[{k}]")
        pieces.append(_snap_ends(piece))
    return pieces


def _snap_ends(curve: GeneratingCurve) -> GeneratingCurve:
    x = np.array(curve.x)
    x[0] = x[-1] = 0.0
    return GeneratingCurve(x, curve.z, False, curve.name)


def symmetric_extension(curve: GeneratingCurve) -> np.ndarray:
    """Closed polyline: the trace followed by its mirror image ``x -> -x``."""
    if curve.closed:
        raise NotApplicableError("curve is already closed")
    p = curve.points
    mirror = p[-2::-1] * np.array([-1.0, 1.0])
    out = np.vstack([p, mirror])
    out[-1] = out[0]
    return out


def closed_trace(curve: GeneratingCurve) -> np.ndarray:
    """Closed polyline used for winding indices (mirror-extended if open)."""
    return curve.points if curve.closed else symmetric_extension(curve)
