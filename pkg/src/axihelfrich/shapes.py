"""Analytic generating curves, seed shapes and a random valid-curve generator."""
from __future__ import annotations

import math

import numpy as np

from . import geometry
from .curve import GeneratingCurve, reparametrize_constant_speed
from .errors import InfeasibleConstraintError, SeedingError

_DENSE = 4096


def sphere(n=512, radius=1.0, center_z=0.0) -> GeneratingCurve:
    """Unit-speed-in-angle semicircle from the south to the north pole."""
    t = np.linspace(0.0, 1.0, n)
    x = radius * np.sin(math.pi * t)
    x[0] = x[-1] = 0.0
    return GeneratingCurve(x, center_z - radius * np.cos(math.pi * t), name="sphere")


def torus(n=512, R=2.0, r=1.0, center_z=0.0) -> GeneratingCurve:
    """Counterclockwise circle of radius ``r`` centred at distance ``R`` from the axis."""
    u = 2.0 * math.pi * np.linspace(0.0, 1.0, n)
    x = R + r * np.cos(u)
    z = center_z + r * np.sin(u)
    x[-1], z[-1] = x[0], z[0]
    return GeneratingCurve(x, z, closed=True, name="torus")


def spheroid(n=512, a=1.0, c=2.0, center_z=0.0) -> GeneratingCurve:
    """Half-ellipse with radial semi-axis ``a`` and axial semi-axis ``c``, at constant speed."""
    th = np.linspace(0.0, math.pi, _DENSE)
    x = a * np.sin(th)
    x[0] = x[-1] = 0.0
    dense = GeneratingCurve(x, center_z - c * np.cos(th))
    return reparametrize_constant_speed(dense, n).with_name("spheroid")


def cylinder(n=512, radius=1.0, height=10.0) -> GeneratingCurve:
    """Straight vertical segment ``x = radius`` (the side of a cylinder)."""
    return GeneratingCurve(np.full(n, radius), np.linspace(0.0, height, n), name="cylinder")


def closed_cylinder(n=512, radius=1.0, height=10.0) -> GeneratingCurve:
    """Bottom disc, side and top disc of a closed cylinder as a single open profile."""
    pts = np.array([[0.0, 0.0], [radius, 0.0], [radius, height], [0.0, height]])
    seg = []
    for p, q in zip(pts[:-1], pts[1:]):
        s = np.linspace(0.0, 1.0, _DENSE)[:-1, None]
        seg.append(p + s * (q - p))
    seg.append(pts[-1:])
    poly = np.vstack(seg)
    lengths = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(poly, axis=0).T))])
    target = np.linspace(0.0, lengths[-1], n)
    x = np.interp(target, lengths, poly[:, 0])
    z = np.interp(target, lengths, poly[:, 1])
    return GeneratingCurve(x, z, name="closed-cylinder")


def tangent_spheres(k=2, n_per=257, radius=1.0) -> GeneratingCurve:
    """One generator for ``k`` equal spheres stacked along the axis, touching at poles."""
    t = np.linspace(0.0, 1.0, n_per)
    xs, zs = [], []
    for j in range(k):
        x = radius * np.sin(math.pi * t)
        x[0] = x[-1] = 0.0
        z = (2 * j) * radius - radius * np.cos(math.pi * t)
        if j:
            x, z = x[1:], z[1:]
        xs.append(x)
        zs.append(z)
    return GeneratingCurve(np.concatenate(xs), np.concatenate(zs), name=f"{k}-tangent-spheres")


def random_g0(rng: np.random.Generator, n=256) -> GeneratingCurve:
    """Random star-shaped genus-0 profile with smooth caps."""
    th = np.linspace(0.0, math.pi, _DENSE)
    kmax = int(rng.integers(1, 7))
    amp = rng.uniform(-0.3, 0.3, size=kmax) / np.arange(1, kmax + 1)
    amp *= min(1.0, 0.6 / np.abs(amp).sum())
    r = 1.0 + np.cos(np.outer(th, np.arange(1, kmax + 1))) @ amp
    stretch = rng.uniform(0.6, 1.6)
    scale = rng.uniform(0.5, 2.0)
    x = scale * r * np.sin(th)
    x[0] = x[-1] = 0.0
    z = scale * stretch * (-r * np.cos(th)) + rng.uniform(-2.0, 2.0)
    return reparametrize_constant_speed(GeneratingCurve(x, z), n).with_name("random-g0")


def random_g1(rng: np.random.Generator, n=256) -> GeneratingCurve:
    """Random closed profile kept away from the axis (genus 1)."""
    th = np.linspace(0.0, 2.0 * math.pi, _DENSE)
    kmax = int(rng.integers(1, 5))
    ks = np.arange(1, kmax + 1)
    ca = rng.uniform(-0.25, 0.25, size=kmax) / ks
    sa = rng.uniform(-0.25, 0.25, size=kmax) / ks
    total = np.abs(ca).sum() + np.abs(sa).sum()
    if total > 0.5:
        ca, sa = ca * 0.5 / total, sa * 0.5 / total
    r = 1.0 + np.cos(np.outer(th, ks)) @ ca + np.sin(np.outer(th, ks)) @ sa
    r0 = rng.uniform(0.3, 1.5)
    center = r0 * r.max() * rng.uniform(1.2, 3.0)
    x = center + r0 * r * np.cos(th)
    z = r0 * r * np.sin(th) * rng.uniform(0.6, 1.6) + rng.uniform(-2.0, 2.0)
    x[-1], z[-1] = x[0], z[0]
    return reparametrize_constant_speed(GeneratingCurve(x, z, closed=True), n).with_name("random-g1")


def random_curve(rng: np.random.Generator, n=256) -> GeneratingCurve:
    return random_g0(rng, n) if rng.random() < 0.6 else random_g1(rng, n)


def random_curves(count: int, seed: int = 0, n=256) -> list[GeneratingCurve]:
    rng = np.random.default_rng(seed)
    return [random_curve(rng, n) for _ in range(count)]


# --- seeding for the constrained problem ------------------------------------

ISOPERIMETRIC_SLACK = 1e-12
TORUS_MAX_REDUCED_VOLUME = 3.0 / (2.0 * math.sqrt(math.pi))


def max_volume(area: float) -> float:
    return area**1.5 / (6.0 * math.sqrt(math.pi))


def reduced_volume(area: float, volume: float) -> float:
    return volume / max_volume(area)


def check_feasible(area: float, volume: float) -> None:
    if not area > 0.0:
        raise InfeasibleConstraintError(f"area target must be positive, got {area}")
    if volume < 0.0:
        raise InfeasibleConstraintError(f"volume target must be nonnegative, got {volume}")
    if volume > max_volume(area) * (1.0 + ISOPERIMETRIC_SLACK):
        raise InfeasibleConstraintError(
            f"isoperimetric inequality violated: V={volume!r} > A^(3/2)/(6 sqrt(pi))={max_volume(area)!r}"
        )


def _fit_scale(curves, area):
    total = sum(geometry.area(c) for c in curves)
    lam = math.sqrt(area / total)
    return [c.scaled(lam) for c in curves]


def _bisect(fn, lo, hi, target, iters=200):
    """Find p in [lo, hi] with fn(p) = target; fn monotone."""
    flo = fn(lo) - target
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid) - target
        if fm == 0.0 or hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _discrete_v(curves):
    a = sum(geometry.area(c) for c in curves)
    v = sum(geometry.enclosed_volume(c) for c in curves)
    return reduced_volume(a, v)


def _spheroid_family(v, n, prolate):
    # at v = 1 only the sphere exists; targets within rounding of it count as v = 1
    if not 0.0 < v < 1.0 - 1e-9:
        kind = "prolate" if prolate else "oblate"
        raise SeedingError(f"{kind} family covers reduced volumes in (0, 1); requested v={v!r}")
    if prolate:
        hi = 2.0
        while _discrete_v([spheroid(n, 1.0, hi)]) > v:
            hi *= 2.0
        # bisect on log-aspect for uniform resolution
        e = math.exp(_bisect(lambda le: _discrete_v([spheroid(n, 1.0, math.exp(le))]), 0.0, math.log(hi), v))
        return spheroid(n, 1.0, e)
    lo = 0.5
    while _discrete_v([spheroid(n, 1.0, lo)]) > v:
        lo *= 0.5
    e = math.exp(_bisect(lambda le: _discrete_v([spheroid(n, 1.0, math.exp(le))]), math.log(lo), 0.0, v))
    return spheroid(n, 1.0, e)


def seed_shape(kind: str, area: float, volume: float, n: int = 128) -> list[GeneratingCurve]:
    """Initial curves of a seed family matching the area and volume targets.

    ``kind`` is one of ``sphere``, ``prolate``, ``oblate``, ``torus`` or
    ``stacked_spheres(k)`` / ``stacked:k``.  The family's shape parameter is
    found by bisection on the discrete reduced volume, then the curves are
    scaled to the target area.  ``spheroid(a,c)`` is a fixed-aspect start
    scaled to the area only; its volume is left to the optimizer.
    """
    check_feasible(area, volume)
    v = reduced_volume(area, volume)
    kind = kind.strip().lower()
    if kind == "sphere":
        if abs(v - 1.0) > 1e-9:
            raise SeedingError(f"sphere family has reduced volume exactly 1; requested v={v!r}")
        return [sphere(n, math.sqrt(area / (4.0 * math.pi)))]
    if kind in ("prolate", "oblate"):
        c = _spheroid_family(v, n, kind == "prolate")
        return _fit_scale([c.with_name(kind)], area)
    if kind == "torus":
        if not 0.0 < v < TORUS_MAX_REDUCED_VOLUME:
            raise SeedingError(
                f"torus family covers reduced volumes in (0, {TORUS_MAX_REDUCED_VOLUME:.6f}); requested v={v!r}"
            )
        rho = _bisect(lambda p: _discrete_v([torus(n, 1.0, p)]), 1e-6, 1.0 - 1e-6, v)
        return _fit_scale([torus(n, 1.0, rho)], area)
    if kind.startswith("spheroid("):
        # fixed-aspect start: matches the area only, the optimizer enforces the volume
        try:
            a, c = (float(t) for t in kind[len("spheroid("):].rstrip(")").split(","))
        except ValueError:
            raise SeedingError(f"spheroid seed needs two semi-axes, e.g. 'spheroid(1,2)'; got {kind!r}") from None
        if not (a > 0.0 and c > 0.0):
            raise SeedingError("spheroid semi-axes must be positive")
        return _fit_scale([spheroid(n, a, c).with_name("spheroid")], area)
    k = _stack_count(kind)
    if k is not None:
        vc = v * math.sqrt(k)
        if not 0.0 < vc <= 1.0 + 1e-9:
            raise SeedingError(
                f"stacked_spheres({k}) covers reduced volumes in (0, {1.0 / math.sqrt(k):.6f}]; requested v={v!r}"
            )
        base = sphere(n) if abs(vc - 1.0) <= 1e-9 else _spheroid_family(vc, n, True)
        height = base.z.max() - base.z.min()
        comps = [base.translated(j * 1.25 * height).with_name(f"stacked[{j}]") for j in range(k)]
        return _fit_scale(comps, area)
    raise SeedingError(f"unknown seed kind {kind!r}")


def _stack_count(kind: str):
    for prefix in ("stacked_spheres(", "stacked:", "stacked_spheres:"):
        if kind.startswith(prefix):
            body = kind[len(prefix):].rstrip(")")
            try:
                k = int(body)
            except ValueError:
                raise SeedingError(f"bad component count in {kind!r}") from None
            if k < 1:
                raise SeedingError("stacked_spheres needs k >= 1")
            return k
    return None
