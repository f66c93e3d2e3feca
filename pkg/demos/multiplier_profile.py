"""Scan the radial multiplier across the exterior and print its anatomy.

Shows f changing sign at the photon sphere, f' staying positive everywhere,
and the zeroth-order weight l(f) dipping negative only inside the smoothing
region near the horizon where the budget absorbs it.
"""

import numpy as np

from bhle.geometry import BackgroundParams, grid_uniform_h
from bhle.multiplier import MultiplierParams, MultiplierProfile

d = 1
bg = BackgroundParams(d)
mp = MultiplierParams()
prof = MultiplierProfile(bg, mp)

print(f"d = {d}, r_s = {bg.r_s}, r_ps = {bg.r_ps:.6f}")
print(f"eps = {mp.eps}, delta = {mp.delta}, alpha = {mp.alpha}")
print(f"matching radius r_b at h = {mp.x_break}: r_b - r_s ~ "
      f"{2.0 / (d + 1) * np.exp(mp.x_break):.3e} r_s")
print()

grid = grid_uniform_h(bg, mp.x_break - 10.0, mp.alpha + 2.0, 25)
f = np.asarray(prof.f(h=grid.h))
fp = np.asarray(prof.f_prime(h=grid.h))
lf = np.asarray(prof.l_f(h=grid.h))

print(f"{'h':>8} {'r/r_s':>12} {'f':>12} {'f_prime':>12} {'l(f)':>12}")
for h, r, fv, fpv, lv in zip(grid.h, grid.points, f, fp, lf):
    print(f"{h:8.2f} {r:12.6g} {fv:12.4e} {fpv:12.4e} {lv:12.4e}")

print()
print(f"f'' jump at r_b: {prof.f_second_jump():.6e}")
print(f"boundary coefficient of the jump: {prof.jump_boundary_coefficient():.6e}")
neg = lf < 0
print(f"l(f) negative at {np.count_nonzero(neg)} of {len(lf)} sample points, "
      f"all with h < {grid.h[neg].max() if neg.any() else float('nan'):.1f}")
