"""Minimal bending energy at fixed area over a range of reduced volumes.

Each reduced volume is tried from several seed families; the table lists
every run so the competing branches (prolate, oblate, ring) are visible.
Profiles of the winners are written as SVG next to this script.

Run:  python demos/reduced_volume_scan.py        (about a minute)
"""
import logging
import math
from pathlib import Path

from axihelfrich import io
from axihelfrich.energy import MaterialParams
from axihelfrich.optimizer import ConstraintSpec, MultistartError, OptConfig, multistart
from axihelfrich.shapes import max_volume

logging.basicConfig(level=logging.WARNING)

area = 4 * math.pi
params = MaterialParams(1.0, -1.0, 0.0)
config = OptConfig(N=96, max_outer_iterations=25)
out = Path(__file__).with_suffix("")
out.mkdir(exist_ok=True)

print(f"{'v':>5} {'kind':>10} {'energy / 4pi':>14}  status")
for v in (0.95, 0.85, 0.75, 0.65):
    cons = ConstraintSpec(area, v * max_volume(area))
    try:
        ms = multistart(params, cons, ["prolate", "oblate", "torus"], config)
    except MultistartError as exc:
        print(f"{v:5.2f}  no run converged: {exc}")
        continue
    for row in ms.leaderboard:
        e = "-" if row["energy"] is None else f"{row['energy'] / (4 * math.pi):14.5f}"
        print(f"{v:5.2f} {row['kind']:>10} {e:>14}  {row['reason']}")
    io.write_svg(list(ms.best.system), out / f"v{v:.2f}.svg")
print(f"\nprofiles written to {out}/")
