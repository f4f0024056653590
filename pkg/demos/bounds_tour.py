"""Walk through the a priori estimates on a few shapes and show how much room each one leaves.

The sphere is the equality case of the first oscillation inequality; the
thin capsule shows how much room the estimates leave on elongated shapes.

Run:  python demos/bounds_tour.py
"""
import math

from axihelfrich import bounds, shapes
from axihelfrich.energy import MaterialParams

params = MaterialParams(1.0, -1.0, 0.0)

curves = [
    shapes.sphere(512),
    shapes.spheroid(512, 1.0, 3.0).with_name("prolate 1:3"),
    shapes.spheroid(512, 3.0, 1.0).with_name("oblate 3:1"),
    shapes.torus(512),
    shapes.closed_cylinder(512, 0.2, 6.0).with_name("capsule"),
]

for c in curves:
    print(f"\n{c.name}")
    for r in bounds.all_checks(c, params):
        if isinstance(r, bounds.BoundReport):
            print(f"  {r.name:24s} {r.lhs:12.5g} {r.sense} {r.rhs:12.5g}   relative slack {r.relative_slack:9.2e}")
        else:
            print(f"  axis tangents            limits ({r.limit_dx_start:+.4f}, {r.limit_dz_start:+.2e}) "
                  f"/ ({r.limit_dx_end:+.4f}, {r.limit_dz_end:+.2e}), holds={r.holds}")

# every component costs at least 8 pi of total squared curvature
print("\ncaps implied by a bound C on the total squared curvature")
for units in (0.5, 1.0, 2.5, 12.0):
    cap = bounds.max_components(units * 8 * math.pi)
    print(f"  C = {units:5.1f} x 8 pi -> at most {cap.max_components} component(s), {cap.max_axis_touches} axis touch(es)")
