"""Neumann-to-Dirichlet symbols on the half-space and their weighted suprema.

Every symbol depends on the tangential frequency only through ``tau = |xi|``,
so sweeps are one-dimensional. The symbols are convention-free multipliers:
no ``(2 pi)`` factors from a particular Fourier normalization are included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .fitting import ExponentFit, fit_exponent
from .parallel import ordered_map
from .textio import write_rows

WAVE = "wave"
SCHRODINGER = "schrodinger"
# Schrodinger with the spectral parameter k^2 replaced by -|lambda|.
ELLIPTIC = "elliptic"
KINDS = (WAVE, SCHRODINGER, ELLIPTIC)

WEIGHTS = {
    "one": lambda tau: np.ones_like(tau),
    "tau": lambda tau: tau,
    "sqrt_1_plus_tau2": lambda tau: np.sqrt(1.0 + tau**2),
}

COARSE_POINTS = 2048
REFINE_RTOL = 1e-6
GUARD_FACTOR = 4.0


def _decaying_root(z):
    """Principal square root, flipped where needed so that the real part is positive."""
    r = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(r.real < 0, -r, r)


def wave_root(lam, tau):
    return _decaying_root((1.0 + 1j * np.asarray(lam)) ** 2 + np.asarray(tau) ** 2)


def wave_ntd_symbol(lam, tau):
    """``1 / rho`` with ``rho**2 = (1 + i lam)**2 + tau**2`` and ``Re rho > 0``."""
    return _scalar(1.0 / wave_root(lam, tau))


def schrodinger_root(zeta, tau):
    """``r`` with ``r**2 = tau**2 - zeta + i``; ``zeta = k**2`` or a signed spectral parameter."""
    return _decaying_root(np.asarray(tau) ** 2 - np.asarray(zeta) + 1j)


def schrodinger_ntd_symbol(k, tau):
    """``1 / r`` with ``r**2 = tau**2 - k**2 + i`` and ``Re r > 0``."""
    k = np.asarray(k, dtype=float)
    return _scalar(1.0 / schrodinger_root(k**2, tau))


def schrodinger_spectral_symbol(zeta, tau):
    """Schrodinger symbol at a signed spectral parameter (``zeta < 0`` is the elliptic regime)."""
    return _scalar(1.0 / schrodinger_root(zeta, tau))


def _scalar(x):
    return complex(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class NtDSymbol:
    kind: str
    freq: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != WAVE and self.freq < 0:
            raise ValueError(f"{self.kind} frequency must be >= 0, got {self.freq}")
        object.__setattr__(self, "freq", float(self.freq))

    @property
    def spectral_parameter(self) -> float:
        """The ``lambda`` the sweep exponents refer to: ``lam`` for wave, ``k**2`` or ``|lam|`` otherwise."""
        if self.kind == SCHRODINGER:
            return self.freq**2
        return abs(self.freq)

    def __call__(self, tau):
        if self.kind == WAVE:
            return wave_ntd_symbol(self.freq, tau)
        if self.kind == SCHRODINGER:
            return schrodinger_ntd_symbol(self.freq, tau)
        return schrodinger_spectral_symbol(-abs(self.freq), tau)


def default_tau_max(freq: float) -> float:
    return 8.0 * abs(freq) + 16.0


def symbol_sup(symbol: NtDSymbol, weight: str = "one", tau_max: float | None = None,
               rtol: float = REFINE_RTOL) -> float:
    """Supremum of ``weight(tau) |symbol(tau)|`` over ``[0, tau_max]``.

    A coarse grid (log-spaced plus ``tau = 0``) locates local maxima; each is
    refined by golden-section search on its bracketing grid cells until the
    bracket has shrunk by the factor ``rtol``. Measuring the width against
    the bracket rather than against ``tau`` matters for the Schrodinger peak,
    whose width is ``O(1 / k)``.
    """
    if weight not in WEIGHTS:
        raise ValueError(f"unknown weight {weight!r}; expected one of {tuple(WEIGHTS)}")
    tau_max = default_tau_max(symbol.freq) if tau_max is None else float(tau_max)
    if not tau_max > 0 or tau_max < GUARD_FACTOR * abs(symbol.freq):
        raise ValueError(
            f"tau_max = {tau_max} must be positive and at least {GUARD_FACTOR:g} x frequency "
            f"({abs(symbol.freq):g}) to contain the glancing peak"
        )
    w = WEIGHTS[weight]

    def f(tau):
        tau = np.asarray(tau, dtype=float)
        return w(tau) * np.abs(symbol(tau))

    lo = min(1e-3, tau_max * 1e-6)
    tau = np.concatenate([[0.0], np.geomspace(lo, tau_max, COARSE_POINTS)])
    vals = f(tau)
    best = float(vals.max())
    interior = np.nonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    for i in interior:
        a, b, c = tau[i - 1], tau[i], tau[i + 1]
        if not (vals[i] > vals[i - 1] and vals[i] > vals[i + 1]):
            continue  # plateau on the grid; the grid value stands
        res = minimize_scalar(lambda x: -float(f(x)), bracket=(a, b, c), method="golden",
                              tol=rtol * (c - a) / b)
        if a <= res.x <= c:
            best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class WeightedSweep:
    kind: str
    weight: str
    frequencies: np.ndarray
    sups: np.ndarray

    @property
    def spectral_parameters(self) -> np.ndarray:
        return np.array([NtDSymbol(self.kind, f).spectral_parameter for f in self.frequencies])

    def rows(self):
        for f, s in zip(self.frequencies, self.sups):
            yield (float(f), float(s), self.weight, self.kind)

    def write_csv(self, path) -> None:
        write_rows(path, ["freq", "sup", "weight", "kind"], self.rows())


def sweep_and_fit(kind: str, weight: str, freqs, tau_max_factor: float | None = None,
                  workers: int = 1) -> tuple[WeightedSweep, ExponentFit]:
    """Weighted suprema over a frequency grid and their log-log slope.

    The fit is against the spectral parameter: ``lam`` for wave, ``k**2`` for
    Schrodinger, ``|lam|`` for the elliptic regime.
    """
    freqs = np.asarray(freqs, dtype=float).ravel()
    if freqs.size < 8:
        raise ValueError(f"sweep needs at least 8 frequencies, got {freqs.size}")
    if np.any(np.diff(freqs) <= 0):
        raise ValueError("frequency grid must be increasing")
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be positive")

    def one(f):
        tmax = None if tau_max_factor is None else tau_max_factor * f + 16.0
        return symbol_sup(NtDSymbol(kind, f), weight, tmax)

    sups = np.array(ordered_map(one, freqs, workers))
    sweep = WeightedSweep(kind, weight, freqs, sups)
    return sweep, fit_exponent(sweep.spectral_parameters, sups)


def fit_summary_json(fit: ExponentFit) -> str:
    s = fit.summary()
    return json.dumps({k: s[k] for k in ("slope", "stderr", "window_lo", "window_hi", "n_points")})
