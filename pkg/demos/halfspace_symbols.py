"""Growth of the half-space Neumann-to-Dirichlet symbols with frequency.

Run: python3 demos/halfspace_symbols.py
"""

import numpy as np

from admissibility_lab.halfspace import sweep_and_fit

freqs = np.geomspace(10, 1e3, 24)

print("Wave symbol, unweighted: the peak sits at the glancing point and decays like lambda^-1/2.")
sweep, fit = sweep_and_fit("wave", "one", freqs)
print(f"  fitted slope {fit.slope:+.4f}")
print(f"  sup * sqrt(2 lambda) ranges over [{(sweep.sups * np.sqrt(2 * freqs)).min():.10f}, "
      f"{(sweep.sups * np.sqrt(2 * freqs)).max():.10f}]")

print("With the H^1 tangential weight the same peak grows like lambda^+1/2.")
_, fit = sweep_and_fit("wave", "sqrt_1_plus_tau2", freqs)
print(f"  fitted slope {fit.slope:+.4f}")

print("Schrodinger symbol: bounded by one uniformly, tangential weight grows like (k^2)^1/2.")
k = np.geomspace(1, 30, 16)
sweep, _ = sweep_and_fit("schrodinger", "one", k)
_, fit = sweep_and_fit("schrodinger", "tau", k)
print(f"  max |sup - 1| = {np.abs(sweep.sups - 1).max():.2e}")
print(f"  tau-weighted slope against k^2: {fit.slope:+.4f} (curvature flag {fit.curvature_flag})")
