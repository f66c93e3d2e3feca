"""Run every positivity check and print the margin scorecard.

Each case scans its own region of the exterior; the margin is the minimum of
the scanned expression, so positive means the inequality holds with room to
spare. The second block repeats the scan with the flattening point moved from
alpha = 4.9 to 6, which is known to break the far-region slope condition:
the located witness shows where.
"""

from bhle.geometry import BackgroundParams
from bhle.multiplier import MultiplierParams
from bhle.verifier import verify_all

for d in (1, 2, 3):
    bg = BackgroundParams(d)
    print(f"--- d = {d} (space-time dimension {d + 4}) ---")
    for v in verify_all(bg, MultiplierParams(), n=2048):
        tag = "ok " if v.passed else "BAD"
        print(f"  {tag} {v.case_id:14s} min margin {v.min_margin:+.4e} "
              f"at r = {v.witness_r:.4g}")
    print()

print("--- ablation: alpha = 6 (d = 1) ---")
for v in verify_all(BackgroundParams(1), MultiplierParams(alpha_override=6.0),
                    n=2048):
    if not v.passed:
        print(f"  FAILS {v.case_id}: margin {v.min_margin:+.4e} "
              f"at r = {v.witness_r:.6g}")
