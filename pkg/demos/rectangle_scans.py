"""Boundary transfer maps, Hautus scans and damped resolvents on the unit square.

Run: python3 demos/rectangle_scans.py
"""

from admissibility_lab.rectangle import (
    SIDES,
    build_model,
    damped_resolvent_sweep,
    full_side,
    hautus_scan,
    irrational_grid,
    ntd_sweep,
)

model = build_model(1.0, 1.0, 96)
sweep = ntd_sweep(model, irrational_grid(5, 100, 16), J=64)
print("Neumann-to-Dirichlet matrix on the whole boundary, p = 1 + i lambda:")
print(f"  L2 slope {sweep.fit_l2.slope:+.3f}, H1 slope {sweep.fit_h1.slope:+.3f}")

small = build_model(1.0, 1.0, 24)
lams = irrational_grid(1, 60, 40, log=False)
print("\nSmallest singular value of the Hautus pencil, one full side observed:")
for side in SIDES:
    res = hautus_scan(small, full_side(small, side), lams)
    print(f"  side {side}: min {res.values.min():.4f} at lambda={res.lams[res.values.argmin()]:.2f}")

mid = build_model(1.0, 1.0, 32)
res = damped_resolvent_sweep(mid, full_side(mid, "S", 1.0), irrational_grid(5, 80, 24))
print(f"\nDamped resolvent with south-side damping: slope {res.fit.slope:+.3f}")
