"""Fractional Sobolev norms of sampled signals on a half-line window.

Run: python3 demos/sobolev_norms.py
"""

import numpy as np

from admissibility_lab.sobolev import (
    SampledSignal,
    besov_seminorm,
    default_betas,
    hs_norm,
    solve_reflection_coefficients,
)

for m in (1, 2, 3):
    ext = solve_reflection_coefficients(m, default_betas(m))
    print(f"order {m}: alphas {np.round(ext.alphas, 4)}, moment residual {ext.moment_residuals().max():.1e}")

print("\nH^s norms of e^{ikt} on (0, 2 pi) scale like k^s:")
for s in (-1.0, -0.5, 0.5, 1.0):
    norms = [hs_norm(SampledSignal.sample(lambda t: np.exp(1j * k * t), 2 * np.pi, 4096), s)
             for k in (8, 16, 32, 64)]
    slope = np.polyfit(np.log([8, 16, 32, 64]), np.log(norms), 1)[0]
    print(f"  s={s:+.1f}: fitted exponent {slope:+.3f}")

print("\nTranslation seminorm against the Fourier norm for a narrow Gaussian:")
g = SampledSignal.sample(lambda t: np.exp(-((t - 2) ** 2) / (2 * 0.05**2)), 4.0, 2000)
for r in (0.25, 0.5, 0.75):
    besov = np.sqrt(besov_seminorm(g, r) ** 2 + g.l2_norm() ** 2)
    print(f"  r={r}: ratio {besov / hs_norm(g, r):.3f}")
