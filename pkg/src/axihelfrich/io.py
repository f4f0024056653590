"""Curve files, per-node geometry tables, deterministic JSON and SVG profiles."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import geometry
from .curve import AXIS_TOLERANCE, GeneratingCurve, _breaks_for
from .errors import CurveParseError

HEADER = ("t", "x", "z")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def parse_curve(text: str, closed: bool = False, name: str = "", source: str = "<string>") -> GeneratingCurve:
    """Parse ``t,x,z`` CSV text; errors carry 1-based row and column."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise CurveParseError(f"{source}: row 1: missing header 't,x,z'", row=1, column=1)
    header = tuple(h.strip() for h in lines[0].split(","))
    if header != HEADER:
        raise CurveParseError(f"{source}: row 1: header must be 't,x,z', got {lines[0]!r}", row=1, column=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise CurveParseError(
                f"{source}: row {lineno}: expected 3 fields, found {len(fields)}",
                row=lineno,
                column=min(len(fields), 3) + (1 if len(fields) > 3 else 0),
            )
        values = []
        for col, raw in enumerate(fields, start=1):
            try:
                val = float(raw)
            except ValueError:
                raise CurveParseError(
                    f"{source}: row {lineno}, column {col} ({HEADER[col - 1]}): not a number: {raw.strip()!r}",
                    row=lineno,
                    column=col,
                ) from None
            if not math.isfinite(val):
                raise CurveParseError(
                    f"{source}: row {lineno}, column {col} ({HEADER[col - 1]}): non-finite value",
                    row=lineno,
                    column=col,
                )
            values.append(val)
        rows.append(values)
    if len(rows) < 2:
        raise CurveParseError(f"{source}: row {len(lines) + 1}: need at least two samples", row=len(lines) + 1, column=1)
    arr = np.array(rows)
    return GeneratingCurve(arr[:, 1], arr[:, 2], closed=closed, name=name, t=arr[:, 0])


def read_curve(path) -> GeneratingCurve:
    """Read a curve CSV plus its optional sidecar ``{"closed": bool, "name": str}``."""
    path = Path(path)
    closed, name = False, path.stem
    side = sidecar_path(path)
    if side.exists() and side != path:
        meta = json.loads(side.read_text(encoding="utf-8"))
        closed = bool(meta.get("closed", False))
        name = str(meta.get("name", name))
    return parse_curve(path.read_text(encoding="utf-8"), closed, name, source=str(path))


def format_curve(curve: GeneratingCurve) -> str:
    out = ["t,x,z"]
    out += [f"{_fmt(t)},{_fmt(x)},{_fmt(z)}" for t, x, z in zip(curve.t, curve.x, curve.z)]
    return "\n".join(out) + "\n"


def write_curve(curve: GeneratingCurve, path) -> Path:
    path = Path(path)
    path.write_text(format_curve(curve), encoding="utf-8", newline="\n")
    sidecar_path(path).write_text(dumps({"closed": curve.closed, "name": curve.name}) + "\n", encoding="utf-8")
    return path


def geometry_table(curve: GeneratingCurve) -> np.ndarray:
    """Per-node ``t, x, z, k1, k2, weight``; axis nodes carry zero weight and ``k2 = k1``."""
    mask = np.zeros(curve.n, dtype=bool) if curve.closed else curve.x <= AXIS_TOLERANCE * curve.length
    f = geometry.node_fields(curve.x, curve.z, curve.closed, _breaks_for(curve), mask)
    k1, k2 = geometry.principal_curvatures(curve.x, f, mask)
    return np.column_stack([curve.t, curve.x, curve.z, k1, k2, f["w"]])


def write_geometry(curve: GeneratingCurve, path) -> Path:
    table = geometry_table(curve)
    lines = ["t,x,z,k1,k2,weight"]
    lines += [",".join(_fmt(v) for v in row) for row in table]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return Path(path)


# --- JSON -------------------------------------------------------------------

def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    sep = ",\n" if indent else ", "
    nl = "\n" if indent else ""
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return '"nan"'
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return _fmt(x)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + nl + sep.join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[" + nl + sep.join(items) + nl + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = None) -> str:
    """JSON with every float printed at 17 significant digits (lossless), keys in insertion order."""
    return _encode(obj, indent, 0)


def write_json(obj, path, indent: int = 2) -> Path:
    Path(path).write_text(dumps(obj, indent) + "\n", encoding="utf-8", newline="\n")
    return Path(path)


# --- SVG --------------------------------------------------------------------

SVG_SIZE = 800
SVG_MARGIN = 0.05


def svg_profile(curves, size: int = SVG_SIZE) -> str:
    """Profile curves and their mirror images, scaled to fit with a 5% margin."""
    curves = [curves] if isinstance(curves, GeneratingCurve) else list(curves)
    pts = np.vstack([c.points for c in curves])
    xmax = max(float(np.abs(pts[:, 0]).max()), 1e-300)
    zmin, zmax = float(pts[:, 1].min()), float(pts[:, 1].max())
    span = max(2.0 * xmax, zmax - zmin, 1e-300)
    inner = size * (1.0 - 2.0 * SVG_MARGIN)
    scale = inner / span
    cx = size / 2.0
    cz = size / 2.0

    def to_svg(x, z):
        return cx + scale * x, cz - scale * (z - 0.5 * (zmin + zmax))

    paths = []
    for c in curves:
        for sign, colour in ((1.0, "#1f4e79"), (-1.0, "#9dc3e6")):
            sx, sz = to_svg(sign * np.asarray(c.x), np.asarray(c.z))
            d = "M " + " L ".join(f"{a:.3f},{b:.3f}" for a, b in zip(sx, sz))
            if c.closed:
                d += " Z"
            paths.append(f'<path d="{d}" fill="none" stroke="{colour}" stroke-width="2"/>')
    axis = f'<line x1="{cx:.3f}" y1="0" x2="{cx:.3f}" y2="{size}" stroke="#999999" stroke-dasharray="6,4"/>'
    body = "\n".join([axis, *paths])
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n{body}\n</svg>\n'
    )


def write_svg(curves, path) -> Path:
    Path(path).write_text(svg_profile(curves), encoding="utf-8", newline="\n")
    return Path(path)
