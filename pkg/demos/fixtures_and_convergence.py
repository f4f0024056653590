"""Energy of the unit sphere and the (2, 1) torus, and how fast the discrete values settle.

Run:  python demos/fixtures_and_convergence.py
"""
import math

import numpy as np

from axihelfrich import geometry, shapes
from axihelfrich.energy import MaterialParams, curve_report

params = MaterialParams(kappa_H=1.0, kappa_G=-1.0, H0=0.0)

exact = {
    "sphere": {"area": 4 * math.pi, "volume": 4 * math.pi / 3, "helfrich": 4 * math.pi},
    "torus": {"area": 8 * math.pi**2, "volume": 4 * math.pi**2, "willmore": 4 * math.pi**2 / math.sqrt(3)},
}

for name, make in (("sphere", shapes.sphere), ("torus", shapes.torus)):
    print(f"\n{name}")
    print(f"{'N':>6} " + " ".join(f"{k:>22}" for k in exact[name]))
    for n in (32, 64, 128, 256, 512):
        report = curve_report(make(n), params)
        errs = [abs(getattr(report, k) - v) / v for k, v in exact[name].items()]
        print(f"{n:>6} " + " ".join(f"{e:>22.3e}" for e in errs))

# Gauss-Bonnet: the integral of K is 4 pi for a sphere-like profile, 0 for a ring
rng = np.random.default_rng(7)
print("\nGauss-Bonnet on random profiles")
for _ in range(5):
    c = shapes.random_curve(rng, 256)
    gb = geometry.gauss_bonnet_check(c)
    print(f"  {c.name:10s} integral {gb.integral:+.8f}  expected {gb.expected:+.8f}")
