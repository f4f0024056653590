"""Helfrich and Willmore energies, the coercivity estimate, and energy reports."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry
from .curve import GeneratingCurve, SurfaceSystem
from .errors import CoercivityRangeError, DisjointnessError


@dataclass(frozen=True)
class MaterialParams:
    """Bending rigidity ``kappa_H``, Gaussian rigidity ``kappa_G`` and spontaneous curvature ``H0``."""

    kappa_H: float = 1.0
    kappa_G: float = -1.0
    H0: float = 0.0

    def __post_init__(self):
        if not self.kappa_H > 0.0:
            raise ValueError(f"kappa_H must be positive, got {self.kappa_H}")

    @property
    def ratio(self) -> float:
        return self.kappa_G / self.kappa_H

    def require_coercive(self) -> None:
        if not -2.0 < self.ratio < 0.0:
            raise CoercivityRangeError(
                f"kappa_G/kappa_H = {self.ratio!r} must lie in (-2, 0) for the coercivity estimate"
            )


def energy_density(k1, k2, params: MaterialParams):
    H = k1 + k2
    return 0.5 * params.kappa_H * (H - params.H0) ** 2 + params.kappa_G * k1 * k2


def helfrich_energy(curve: GeneratingCurve, params: MaterialParams) -> float:
    field_ = geometry.curvatures(curve)
    w = geometry.area_measure(curve).weights
    return float(np.sum(w * energy_density(field_.k1, field_.k2, params)))


def willmore_energy(curve: GeneratingCurve) -> float:
    return 0.25 * geometry.curvature_norms(curve).int_Hsq


@dataclass(frozen=True)
class CoercivityConstants:
    c1: float
    c2: float
    lambda_: float
    epsilon: float


def default_epsilon(ratio: float) -> float:
    """Midpoint of the admissible interval ``(0, -2/ratio - 1)``."""
    return 0.5 * (-2.0 / ratio - 1.0)


def coercivity_constants(params: MaterialParams, epsilon: float | None = None) -> CoercivityConstants:
    params.require_coercive()
    lam = params.ratio
    eps = default_epsilon(lam) if epsilon is None else float(epsilon)
    if not eps > 0.0:
        raise CoercivityRangeError(f"epsilon must be positive, got {eps!r}")
    if not -2.0 < (1.0 + eps) * lam < 0.0:
        raise CoercivityRangeError(
            f"(1 + epsilon) * kappa_G/kappa_H = {(1.0 + eps) * lam!r} must lie in (-2, 0)"
        )
    kH, kG = params.kappa_H, params.kappa_G
    c1 = kH / (2.0 * eps)
    c2 = (kH - abs(kH + kG * (1.0 + eps))) / (2.0 * (1.0 + eps))
    return CoercivityConstants(c1, c2, lam, eps)


@dataclass(frozen=True)
class CoercivityReport:
    lhs: float
    rhs: float
    holds: bool
    C: float
    constants: CoercivityConstants


def coercivity_check(curve: GeneratingCurve, params: MaterialParams, epsilon: float | None = None) -> CoercivityReport:
    """Compare ``int (k1^2 + k2^2) dA`` with ``C (area + energy)``, ``C = (1 + c1 H0^2) / c2``."""
    const = coercivity_constants(params, epsilon)
    norms = geometry.curvature_norms(curve)
    lhs = norms.int_k1sq + norms.int_k2sq
    C = (1.0 + const.c1 * params.H0**2) / const.c2
    rhs = C * (geometry.area(curve) + helfrich_energy(curve, params))
    return CoercivityReport(lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-9)), C, const)


@dataclass
class EnergyReport:
    helfrich: float
    willmore: float
    area: float
    volume: float
    int_k1sq: float
    int_k2sq: float
    int_K: float
    int_Hsq: float
    per_component: list = field(default_factory=list)
    params: MaterialParams | None = None
    N: list = field(default_factory=list)
    quadrature: str = "trapezoid-end-corrected"
    names: list = field(default_factory=list)
    flipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "helfrich": self.helfrich,
            "willmore": self.willmore,
            "area": self.area,
            "volume": self.volume,
            "int_k1sq": self.int_k1sq,
            "int_k2sq": self.int_k2sq,
            "int_K": self.int_K,
            "int_Hsq": self.int_Hsq,
            "per_component": [c.to_dict() for c in self.per_component],
            "params": asdict(self.params) if self.params is not None else None,
            "N": list(self.N),
            "quadrature": self.quadrature,
        }
        if self.names:
            out["names"] = list(self.names)
        if self.flipped:
            out["orientation_flipped"] = list(self.flipped)
        return out


def curve_report(curve: GeneratingCurve, params: MaterialParams) -> EnergyReport:
    field_ = geometry.curvatures(curve)
    w = geometry.area_measure(curve).weights
    norms = geometry.curvature_norms(curve, field_, geometry.AreaMeasure(w, float(w.sum())))
    return EnergyReport(
        helfrich=float(np.sum(w * energy_density(field_.k1, field_.k2, params))),
        willmore=0.25 * norms.int_Hsq,
        area=float(w.sum()),
        volume=geometry.enclosed_volume(curve),
        int_k1sq=norms.int_k1sq,
        int_k2sq=norms.int_k2sq,
        int_K=norms.int_K,
        int_Hsq=norms.int_Hsq,
        params=params,
        N=[curve.n],
        names=[curve.name],
    )


def _segments(curve: GeneratingCurve):
    p = curve.points
    return p[:-1], p[1:]


def traces_intersect(c1: GeneratingCurve, c2: GeneratingCurve, tol: float = 1e-12) -> bool:
    """Exact segment-pair intersection test between two traces (touching within ``tol * length`` counts)."""
    a0, a1 = _segments(c1)
    b0, b1 = _segments(c2)
    scale = tol * max(c1.length, c2.length)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    A0, A1 = a0[:, None, :], a1[:, None, :]
    B0, B1 = b0[None, :, :], b1[None, :, :]
    o1 = orient(A0, A1, B0)
    o2 = orient(A0, A1, B1)
    o3 = orient(B0, B1, A0)
    o4 = orient(B0, B1, A1)
    if np.any((o1 * o2 < 0) & (o3 * o4 < 0)):
        return True
    # collinear contacts and near-touches
    d = min(
        geometry._segment_distance(c1.points, b0, b1).min(),
        geometry._segment_distance(c2.points, a0, a1).min(),
    )
    return bool(d <= scale)


def check_disjoint(system: SurfaceSystem) -> None:
    comps = list(system)
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            if traces_intersect(comps[i], comps[j]):
                raise DisjointnessError(
                    f"traces of components {i} and {j} intersect; translating one of them "
                    "along the z-axis removes the crossing without changing the energy"
                )


def system_energy(system: SurfaceSystem, params: MaterialParams, check_disjointness: bool = True) -> EnergyReport:
    """Sum of per-component reports (left-to-right, fixed order)."""
    if not isinstance(system, SurfaceSystem):
        system = SurfaceSystem(system)
    if check_disjointness:
        check_disjoint(system)
    parts = [curve_report(c, params) for c in system]

    def total(key):
        acc = 0.0
        for p in parts:
            acc += getattr(p, key)
        return acc

    return EnergyReport(
        helfrich=total("helfrich"),
        willmore=total("willmore"),
        area=total("area"),
        volume=total("volume"),
        int_k1sq=total("int_k1sq"),
        int_k2sq=total("int_k2sq"),
        int_K=total("int_K"),
        int_Hsq=total("int_Hsq"),
        per_component=parts,
        params=params,
        N=[c.n for c in system],
        names=[c.name for c in system],
    )


FOUR_PI = 4.0 * math.pi
