"""Energy decay of the boundary-damped wave equation on a Galerkin truncation.

Run: python3 demos/energy_decay.py   (about ten seconds)
"""

from admissibility_lab.decay import (
    DECAY_CAVEAT,
    DampedGalerkinSystem,
    classical_data,
    decay_fit,
    dissipation_residual,
    one_sided_decay_ratio,
    simulate,
)
from admissibility_lab.rectangle import build_model, full_side

model = build_model(1.0, 1.0, 24)
system = DampedGalerkinSystem.from_rectangle(model, full_side(model, "S", 1.0))
record = simulate(system, classical_data(model, "gaussian_bump"), 200.0, 1e-3)

for t in (0, 10, 50, 100, 200):
    i = min(int(round(t / record.dt)), record.steps)
    print(f"  E({t:3d}) = {record.energies[i]:.4e}")
print(f"discrete dissipation residual {dissipation_residual(record, system):.1e}")
fit = decay_fit(record, (50.0, 200.0))
print(f"fitted r on [50, 200]: {-fit.slope:.3f} (curvature flag {fit.curvature_flag})")
print(f"one-sided check ratio: {one_sided_decay_ratio(record, (50.0, 200.0)):.4f}")
print(DECAY_CAVEAT)
