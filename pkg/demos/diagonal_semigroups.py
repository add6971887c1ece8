"""Resolvent growth and output regularity for diagonal semigroups.

Run: python3 demos/diagonal_semigroups.py
"""

import numpy as np

from admissibility_lab.diagonal import admissibility_threshold, resolvent_sweep, skew_model

omegas = np.geomspace(64, 1024, 16)
candidates = np.round(np.arange(0.0, 1.01, 0.05), 2)

print("Skew-adjoint models with observation weights (1+k^2)^(eta/2).")
print(" eta  resolvent slope  time-domain threshold")
for eta in (0.0, 0.25, 0.5, 0.75):
    slope = resolvent_sweep(skew_model(4096, eta), 1.0, omegas)[1].slope
    thr, _ = admissibility_threshold(lambda K: skew_model(K, eta), [32, 64, 128, 256], candidates)
    print(f" {eta:4.2f}  {slope:15.3f}  {thr:21.2f}")

print("\nTransfer slope against the sum of input and output slopes (symmetric spectrum):")
om = np.geomspace(8, 256, 16)
for eta_c, eta_b in [(0.25, 0.25), (0.0, 0.5), (0.25, 0.5)]:
    m = skew_model(2**14, eta_c, eta_b, symmetric=True)
    sc, sb, st = (resolvent_sweep(m, 1.0, om, w)[1].slope for w in ("observation", "control", "transfer"))
    print(f"  eta_c={eta_c}, eta_b={eta_b}: transfer {st:+.3f}, sum {sc + sb:+.3f}")
