"""Boundary-damped wave equation in the rectangle's cosine basis.

The Galerkin system is ``w'' + B w' + Lam w = 0`` with ``Lam`` the diagonal
of Neumann eigenvalues and ``B`` the boundary damping Gram matrix. It is
integrated with the implicit midpoint rule, for which the discrete energy
satisfies ``E_{n+1} - E_n = -dt * vm^T B vm`` exactly (``vm`` the midpoint
velocity), so the dissipation residual measures rounding only.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .errors import NumericalFailure
from .fitting import ExponentFit, fit_exponent
from .rectangle import RectangleModel, block_partition, damping_gram
from .textio import write_rows

DECAY_CAVEAT = (
    "truncated Galerkin models decay exponentially at late times; the fitted exponent "
    "describes the algebraic transient in the window only and is not a PDE decay rate"
)
# Lower decay exponent the one-sided check compares against.
GUARANTEED_RATE = 2.0 / 3.0 - 0.1
QUADRATURE_NODES = 400


class BlockOperator:
    """Block-diagonal matrix stored as batched dense blocks grouped by size."""

    def __init__(self, n: int, blocks):
        self.n = n
        groups = defaultdict(lambda: ([], []))
        for idx, mat in blocks:
            g = groups[len(idx)]
            g[0].append(idx)
            g[1].append(mat)
        self._groups = [(np.array(ix), np.array(ms)) for ix, ms in groups.values()]

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        for idx, mats in self._groups:
            out[idx] = np.matmul(mats, x[idx][..., None])[..., 0]
        return out

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for idx, mats in self._groups:
            for ix, m in zip(idx, mats):
                out[np.ix_(ix, ix)] = m
        return out


@dataclass(frozen=True)
class DampedGalerkinSystem:
    eigs: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        eigs = np.asarray(self.eigs, dtype=float).ravel()
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (eigs.size, eigs.size):
            raise ValueError(f"damping matrix shape {B.shape} does not match {eigs.size} modes")
        if np.any(eigs < 0):
            raise ValueError("stiffness eigenvalues must be non-negative")
        if not np.allclose(B, B.T, rtol=0, atol=1e-12 * max(1.0, np.abs(B).max())):
            raise ValueError("damping matrix must be symmetric")
        object.__setattr__(self, "eigs", eigs)
        object.__setattr__(self, "B", B)

    @classmethod
    def from_rectangle(cls, model: RectangleModel, patches) -> "DampedGalerkinSystem":
        return cls(model.eigenvalues, damping_gram(model, patches))

    @property
    def dim(self) -> int:
        return self.eigs.size

    def energy(self, w, v) -> float:
        return 0.5 * (float(v @ v) + float(w @ (self.eigs * w)))

    def blocks(self) -> list[np.ndarray]:
        return block_partition(self.B)

    def damping_operator(self) -> BlockOperator:
        return BlockOperator(self.dim, [(ix, self.B[np.ix_(ix, ix)]) for ix in self.blocks()])

    def midpoint_solver(self, dt: float) -> BlockOperator:
        """Inverse of ``I + dt/2 B + dt^2/4 Lam``, block by block."""
        blocks = []
        for ix in self.blocks():
            K = self.B[np.ix_(ix, ix)] * (dt / 2) + np.diag(1.0 + dt**2 / 4 * self.eigs[ix])
            try:
                blocks.append((ix, np.linalg.inv(K)))
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure(f"midpoint system is singular: {exc}") from exc
        return BlockOperator(self.dim, blocks)


def _check_dt(dt):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")


def step_implicit_midpoint(system: DampedGalerkinSystem, state, dt: float, solver=None):
    """One implicit-midpoint step for ``(w, v)``; returns the new state and the midpoint velocity."""
    _check_dt(dt)
    w, v = (np.asarray(x, dtype=float) for x in state)
    solver = system.midpoint_solver(dt) if solver is None else solver
    vm = solver @ (v - (dt / 2) * system.eigs * w)
    return (w + dt * vm, 2.0 * vm - v), vm


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    energies: np.ndarray
    cumulative_dissipation: np.ndarray
    boundary_power: np.ndarray
    dt: float

    @property
    def steps(self) -> int:
        return self.times.size - 1

    def write_csv(self, path, stride: int = 1) -> None:
        sl = slice(None, None, max(1, int(stride)))
        write_rows(path, ["t", "E", "cumulative_dissipation"],
                   zip(self.times[sl], self.energies[sl], self.cumulative_dissipation[sl]))


def simulate(system: DampedGalerkinSystem, data, T: float, dt: float) -> TrajectoryRecord:
    """Integrate to time ``T`` (``round(T / dt)`` steps), recording every step.

    Dissipation increments ``dt * vm^T B vm`` are accumulated from ``B`` applied
    to the midpoint velocity; energies come from the stepped states. The
    two never share intermediate results, so their mismatch is a genuine check.
    """
    _check_dt(dt)
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    w, v = (np.array(x, dtype=float) for x in data)
    if w.shape != (system.dim,) or v.shape != (system.dim,):
        raise ValueError(f"state vectors must have length {system.dim}")
    n = max(1, int(round(T / dt)))
    solver = system.midpoint_solver(dt)
    Bop = system.damping_operator()
    lam = system.eigs
    half = dt / 2

    energies = np.empty(n + 1)
    dissip = np.empty(n + 1)
    power = np.empty(n + 1)
    energies[0] = 0.5 * (v @ v + w @ (lam * w))
    dissip[0] = 0.0
    power[0] = v @ (Bop @ v)
    total = 0.0
    for i in range(1, n + 1):
        vm = solver @ (v - half * lam * w)
        w = w + dt * vm
        v = 2.0 * vm - v
        total += dt * float(vm @ (Bop @ vm))
        energies[i] = 0.5 * (v @ v + w @ (lam * w))
        dissip[i] = total
        power[i] = v @ (Bop @ v)
    if not np.all(np.isfinite(energies)):
        raise NumericalFailure("non-finite energy during time stepping")
    return TrajectoryRecord(dt * np.arange(n + 1), energies, dissip, power, float(dt))


def dissipation_residual(record: TrajectoryRecord, system: DampedGalerkinSystem | None = None,
                         rule: str = "midpoint") -> float:
    """``max_n |E_{n+1} - E_n + D_n| / E_0`` for the dissipation increments ``D_n``.

    ``rule="midpoint"`` uses the recorded ``dt * vm^T B vm`` and checks the exact
    discrete identity. ``rule="trapezoid"`` averages the endpoint powers instead,
    which is only consistent to ``O(dt^3)`` per step.
    """
    dE = np.diff(record.energies)
    if rule == "midpoint":
        D = np.diff(record.cumulative_dissipation)
    elif rule == "trapezoid":
        D = record.dt / 2 * (record.boundary_power[1:] + record.boundary_power[:-1])
    else:
        raise ValueError(f"unknown rule {rule!r}")
    if record.energies[0] == 0:
        return 0.0
    return float(np.max(np.abs(dE + D)) / record.energies[0])


def max_energy_increase(record: TrajectoryRecord) -> float:
    """Largest ``E_{n+1} - E_n`` relative to ``E_0`` (non-positive for a dissipative run)."""
    if record.steps == 0:
        return 0.0
    return float(np.max(np.diff(record.energies)) / record.energies[0])


def decay_fit(record: TrajectoryRecord, window, n_points: int = 64) -> ExponentFit:
    """Fit ``E(t) ~ t^slope`` on ``window``; the decay exponent is ``r = -slope``.

    The record is resampled at ``n_points`` log-spaced times (nearest recorded
    step) so late, densely sampled times do not dominate the fit.
    """
    t0, t1 = float(window[0]), float(window[1])
    if not 0 < t0 < t1:
        raise ValueError(f"window must satisfy 0 < t0 < t1, got ({t0}, {t1})")
    t = record.times
    if t0 < t[0] or t1 > t[-1] * (1 + 1e-12):
        raise ValueError(f"window ({t0}, {t1}) lies outside the record ({t[0]}, {t[-1]})")
    targets = np.geomspace(t0, t1, n_points)
    idx = np.unique(np.clip(np.searchsorted(t, targets), 0, t.size - 1))
    return fit_exponent(t[idx], record.energies[idx], (t[idx[0]], t[idx[-1]]))


def one_sided_decay_ratio(record: TrajectoryRecord, window, rate: float = GUARANTEED_RATE) -> float:
    """``max E(t) / (E(t0) (t / t0)^(-rate))`` over recorded ``t`` in the window.

    A value at most one means the run decays at least as fast as ``t^(-rate)``.
    """
    t0, t1 = window
    t = record.times
    sel = (t >= t0) & (t <= t1)
    if sel.sum() < 2:
        raise ValueError("window contains fewer than two recorded times")
    i0 = np.argmax(sel)
    ts, Es = t[sel], record.energies[sel]
    bound = record.energies[i0] * (ts / t[i0]) ** (-rate)
    return float(np.max(Es / bound))


def synthetic_record(times, energies) -> TrajectoryRecord:
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    zeros = np.zeros_like(times)
    return TrajectoryRecord(times, energies, zeros, zeros, dt)


# Initial data ---------------------------------------------------------------


def _cosine_moments(profile, length: float, M: int) -> np.ndarray:
    """``int_0^l profile(s) N_j cos(j pi s / l) ds`` for ``j = 0 .. M`` by Gauss-Legendre."""
    x, wq = roots_legendre(QUADRATURE_NODES)
    s = 0.5 * length * (x + 1)
    wq = 0.5 * length * wq
    j = np.arange(M + 1)
    Nj = np.sqrt(np.where(j == 0, 1.0, 2.0) / length)
    return Nj * (np.cos(np.outer(j, s) * np.pi / length) @ (wq * profile(s)))


def gaussian_coefficients(model: RectangleModel, center=(0.4, 0.6), width: float = 0.08) -> np.ndarray:
    """Cosine coefficients of ``exp(-|x - center|^2 / (2 width^2))``, flattened like the eigenvalues."""
    cx, cy = center
    gx = _cosine_moments(lambda s: np.exp(-((s - cx) ** 2) / (2 * width**2)), model.a, model.M)
    gy = _cosine_moments(lambda s: np.exp(-((s - cy) ** 2) / (2 * width**2)), model.b, model.M)
    return np.outer(gx, gy).ravel()


def low_mode_coefficients(model: RectangleModel, max_order: int = 4) -> np.ndarray:
    """``(1 + lambda_mn)^{-2}`` on modes with ``1 <= m + n <= max_order``.

    The constant mode carries no energy and does not move, so it is left out.
    """
    j = np.arange(model.M + 1)
    order = j[:, None] + j[None, :]
    mask = (order >= 1) & (order <= max_order)
    return np.where(mask, (1.0 + model.eigenvalue_grid) ** -2, 0.0).ravel()


def classical_data(model: RectangleModel, profile: str = "gaussian_bump", **kwargs):
    """Unit-energy initial displacement with zero initial velocity.

    A cosine expansion has vanishing normal derivative, and ``v0 = 0``, so
    the boundary compatibility condition holds exactly for these data.
    """
    if profile == "gaussian_bump":
        w0 = gaussian_coefficients(model, **kwargs)
    elif profile == "low_modes":
        w0 = low_mode_coefficients(model, **kwargs)
    else:
        raise ValueError(f"unknown profile {profile!r}; expected 'gaussian_bump' or 'low_modes'")
    e = 0.5 * float(w0 @ (model.eigenvalues * w0))
    if e == 0:
        raise ValueError("initial data carry no energy")
    return w0 / np.sqrt(e), np.zeros_like(w0)
