"""Measure the empirical Hardy and time-boundary constants over bump families.

The estimates only claim the constants are finite and uniform over where the
test function sits; this prints them so you can see the actual numbers, the
worst case sitting (as expected) hard against the horizon where the
logarithmic weight is weakest.
"""

import numpy as np

from bhle.geometry import BackgroundParams
from bhle.hardy import GaussianBump, hardy_ratio, rho, time_boundary_check
from bhle.multiplier import MultiplierParams, MultiplierProfile

for d in (1, 3):
    bg = BackgroundParams(d)
    prof = MultiplierProfile(bg, MultiplierParams())
    print(f"--- d = {d} ---")
    print("rho asymptotics:")
    for r in (1e3, 1e4):
        print(f"  rho({r:.0e} r_s) / r^{d + 1} = {rho(r, bg) / r ** (d + 1):.6f}")

    print(f"{'center/r_s':>11} {'width':>8} {'hardy':>10} {'time-bdy':>10}")
    ratios = []
    for c in np.geomspace(1.1, 50.0, 10):
        w = 0.25 * (c - 1.0) if c < 4.0 else 0.2 * c
        bump = GaussianBump(float(c), float(w))
        hr = hardy_ratio(bump, bg)
        tr = time_boundary_check(bump, bg, prof)
        ratios.append(hr)
        print(f"{c:11.3f} {w:8.3f} {hr:10.4f} {tr:10.4f}")
    print(f"family spread max/min = {max(ratios) / min(ratios):.3f}")
    print()
