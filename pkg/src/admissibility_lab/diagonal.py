"""Diagonal semigroup models: resolvent norms, transfer values and output statistics.

A model is ``A = diag(mu_k)`` on ``l^2`` with scalar observation
``C x = sum c_k x_k`` and scalar control ``B u = (b_k u)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fitting import ExponentFit, fit_exponent
from .sobolev import SampledSignal, hs_norm
from .textio import dump_toml, load_toml

DEFAULT_SEED = 20240917
# Per-doubling factor at or below which max_ratio counts as "not growing".
DOUBLING_THRESHOLD = 1.25
# Largest K-growth exponent of max_ratio still read as bounded.
GROWTH_TOLERANCE = 0.05

_TIME_CHUNK = 512


def _as_complex_vector(x, name) -> np.ndarray:
    arr = np.array(x, dtype=complex).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiagonalModel:
    mus: np.ndarray
    cs: np.ndarray
    bs: np.ndarray
    sigma0: float

    def __post_init__(self):
        mus = _as_complex_vector(self.mus, "mus")
        cs = _as_complex_vector(self.cs, "cs")
        bs = _as_complex_vector(self.bs, "bs")
        if mus.size < 1:
            raise ValueError("model needs at least one mode")
        if cs.size != mus.size or bs.size != mus.size:
            raise ValueError(
                f"coefficient lengths differ: mus={mus.size}, cs={cs.size}, bs={bs.size}"
            )
        sigma0 = float(self.sigma0)
        if mus.real.max() > sigma0:
            raise ValueError(f"max Re mu = {mus.real.max()} exceeds sigma0 = {sigma0}")
        object.__setattr__(self, "mus", mus)
        object.__setattr__(self, "cs", cs)
        object.__setattr__(self, "bs", bs)
        object.__setattr__(self, "sigma0", sigma0)

    @property
    def size(self) -> int:
        return self.mus.size

    def adjoint(self) -> "DiagonalModel":
        """The dual system: ``A*`` has eigenvalues ``conj(mu)``, control and observation swap."""
        return DiagonalModel(self.mus.conj(), self.bs.conj(), self.cs.conj(), self.sigma0)

    def with_coefficients(self, cs=None, bs=None) -> "DiagonalModel":
        return DiagonalModel(
            self.mus, self.cs if cs is None else cs, self.bs if bs is None else bs, self.sigma0
        )


@dataclass(frozen=True)
class SweepGrid:
    sigma: float
    omegas: np.ndarray

    def __post_init__(self):
        om = np.array(self.omegas, dtype=float).ravel()
        if om.size == 0:
            raise ValueError("frequency grid is empty")
        if om.size > 1 and np.any(np.diff(om) <= 0):
            raise ValueError("frequency grid must be increasing")
        om.setflags(write=False)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "sigma", float(self.sigma))

    def check(self, model: DiagonalModel) -> None:
        _check_sigma(model, self.sigma)


def _check_sigma(model: DiagonalModel, sigma: float) -> None:
    if not sigma > model.sigma0:
        raise ValueError(f"sigma = {sigma} must exceed the growth bound sigma0 = {model.sigma0}")


def _pole_distances(model: DiagonalModel, sigma: float, omega) -> np.ndarray:
    """``sigma + i omega - mu_k`` with shape ``omega.shape + (K,)``."""
    _check_sigma(model, sigma)
    om = np.asarray(omega, dtype=float)
    return (sigma + 1j * om)[..., None] - model.mus


def _weighted_resolvent_norm(model, weights, sigma, omega):
    d = _pole_distances(model, sigma, omega)
    out = np.sqrt(np.sum(np.abs(weights) ** 2 / np.abs(d) ** 2, axis=-1))
    return float(out) if out.ndim == 0 else out


def resolvent_observation_norm(model: DiagonalModel, sigma: float, omega):
    """Norm of ``C (sigma + i omega - A)^{-1}``; vectorized over ``omega``."""
    return _weighted_resolvent_norm(model, model.cs, sigma, omega)


def resolvent_control_norm(model: DiagonalModel, sigma: float, omega):
    """Norm of ``(sigma + i omega - A)^{-1} B``; vectorized over ``omega``."""
    return _weighted_resolvent_norm(model, model.bs, sigma, omega)


def transfer_value(model: DiagonalModel, sigma: float, omega):
    """``C (sigma + i omega - A)^{-1} B`` as a complex scalar (or array over ``omega``)."""
    d = _pole_distances(model, sigma, omega)
    out = np.sum(model.cs * model.bs / d, axis=-1)
    return complex(out) if out.ndim == 0 else out


def simulate_output(model: DiagonalModel, x0, dt: float, T: float) -> SampledSignal:
    """Output ``y(t) = sum_k c_k exp(mu_k t) x0_k`` sampled at ``t = i * T / n``.

    ``n = round(T / dt)``, so the sampling step is adjusted to tile ``(0, T)``.
    """
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    x0 = np.asarray(x0, dtype=complex).ravel()
    if x0.size != model.size:
        raise ValueError(f"initial state has length {x0.size}, model has {model.size} modes")
    n = max(2, int(round(T / dt)))
    step = T / n
    t = step * np.arange(n)
    weights = model.cs * x0
    y = np.empty(n, dtype=complex)
    for lo in range(0, n, _TIME_CHUNK):
        tt = t[lo : lo + _TIME_CHUNK]
        y[lo : lo + _TIME_CHUNK] = np.exp(np.outer(tt, model.mus)) @ weights
    return SampledSignal(step, y)


def default_output_step(model: DiagonalModel) -> float:
    """Sixteen samples per period of the fastest mode."""
    fastest = max(1.0, float(np.abs(model.mus).max()))
    return 2 * np.pi / (16 * fastest)


@dataclass(frozen=True)
class RatioStats:
    max_ratio: float
    mean_ratio: float
    trials: int
    seed: int


def random_unit_states(size: int, trials: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Rows are independent standard complex Gaussian vectors scaled to unit norm."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((trials, size)) + 1j * rng.standard_normal((trials, size))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def output_sobolev_ratios(model, etas, T, trials, seed=DEFAULT_SEED, dt=None) -> np.ndarray:
    """``hs_norm(y, -eta) / |x0|`` for each ``eta`` (rows) and trial (columns)."""
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    if np.any((etas < 0) | (etas > 1)):
        raise ValueError("eta must lie in [0, 1]")
    if int(trials) != trials or trials < 1:
        raise ValueError(f"trials must be a positive integer, got {trials}")
    dt = default_output_step(model) if dt is None else dt
    states = random_unit_states(model.size, int(trials), seed)
    out = np.empty((etas.size, int(trials)))
    for j, x0 in enumerate(states):
        y = simulate_output(model, x0, dt, T)
        for i, eta in enumerate(etas):
            out[i, j] = hs_norm(y, -eta)
    return out


def admissibility_ratio(model, eta, T=2 * np.pi, trials=8, seed=DEFAULT_SEED, dt=None) -> RatioStats:
    """Max and mean of ``hs_norm(y, -eta) / |x0|`` over random unit initial states."""
    r = output_sobolev_ratios(model, [eta], T, trials, seed, dt)[0]
    return RatioStats(float(r.max()), float(r.mean()), int(trials), int(seed))


def scale_norm(model: DiagonalModel, x, s: float, mu_shift: complex) -> float:
    """``|(mu_shift - A)^s x|``, the norm of ``x`` in the ``s``-th Sobolev scale."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.size != model.size:
        raise ValueError(f"vector has length {x.size}, model has {model.size} modes")
    gap = np.abs(mu_shift - model.mus)
    if np.any(gap == 0):
        raise ValueError(f"mu_shift = {mu_shift} lies in the spectrum")
    return float(np.sqrt(np.sum(gap ** (2 * s) * np.abs(x) ** 2)))


def fractional_power(model: DiagonalModel, x, s: float, mu_shift: complex) -> np.ndarray:
    """``(mu_shift - A)^s x`` with the principal branch of the power."""
    x = np.asarray(x, dtype=complex).ravel()
    gap = mu_shift - model.mus
    if np.any(gap == 0):
        raise ValueError(f"mu_shift = {mu_shift} lies in the spectrum")
    return gap**s * x


# Model constructors ---------------------------------------------------------


def power_weights(k, eta: float) -> np.ndarray:
    """``(1 + k^2)^(eta / 2)``: coefficients that make the resolvent grow like ``|omega|^eta``."""
    k = np.asarray(k, dtype=float)
    return (1.0 + k**2) ** (eta / 2)


def skew_model(K: int, eta_c: float = 0.0, eta_b: float = 0.0, symmetric: bool = False) -> DiagonalModel:
    """Group generator with eigenvalues ``i k`` and power-law coefficients.

    ``k`` runs over ``1 .. K`` or, with ``symmetric``, over ``-K .. K``. The
    symmetric spectrum makes the far-off-resonance tails of transfer sums
    cancel, which the one-sided spectrum does not.
    """
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    k = np.arange(-K, K + 1) if symmetric else np.arange(1, K + 1)
    return DiagonalModel(1j * k, power_weights(k, eta_c), power_weights(k, eta_b), 0.0)


def resolvent_sweep(model, sigma, omegas, which="observation") -> tuple[np.ndarray, ExponentFit]:
    """Resolvent norms over ``omegas`` plus the fitted log-log slope."""
    grid = SweepGrid(sigma, omegas)
    if which == "observation":
        vals = resolvent_observation_norm(model, grid.sigma, grid.omegas)
    elif which == "control":
        vals = resolvent_control_norm(model, grid.sigma, grid.omegas)
    elif which == "transfer":
        vals = np.abs(transfer_value(model, grid.sigma, grid.omegas))
    else:
        raise ValueError(f"unknown sweep quantity {which!r}")
    vals = np.atleast_1d(vals)
    return vals, fit_exponent(grid.omegas, vals)


# K-doubling ----------------------------------------------------------------


def doubling_profile(make_model, Ks, etas, T=2 * np.pi, trials=8, seed=DEFAULT_SEED) -> np.ndarray:
    """``max_ratio`` per ``eta`` (rows) and truncation ``K`` (columns).

    ``make_model(K)`` builds the truncated model; all ratios for one ``K``
    share the same simulated outputs.
    """
    etas = np.atleast_1d(np.asarray(etas, dtype=float))
    out = np.empty((etas.size, len(Ks)))
    for j, K in enumerate(Ks):
        r = output_sobolev_ratios(make_model(K), etas, T, trials, seed)
        out[:, j] = r.max(axis=1)
    return out


def doubling_factors(max_ratios) -> np.ndarray:
    """Successive ``max_ratio(2K) / max_ratio(K)`` along the last axis."""
    r = np.asarray(max_ratios, dtype=float)
    return r[..., 1:] / r[..., :-1]


def bounded_under_doubling(max_ratios, threshold: float = DOUBLING_THRESHOLD) -> bool:
    """Heuristic boundedness: every doubling factor at most ``threshold``."""
    return bool(np.all(doubling_factors(max_ratios) <= threshold))


def growth_exponent(Ks, max_ratios) -> float:
    """Fitted exponent ``delta`` in ``max_ratio ~ K^delta``."""
    return fit_exponent(np.asarray(Ks, dtype=float), max_ratios).slope


def admissibility_threshold(make_model, Ks, etas, T=2 * np.pi, trials=8, seed=DEFAULT_SEED,
                            tol: float = GROWTH_TOLERANCE) -> tuple[float, np.ndarray]:
    """Smallest ``eta`` whose ``max_ratio`` does not grow with ``K``.

    The per-doubling factor of an unbounded ratio is ``2**delta`` with
    ``delta`` the excess exponent, too close to one for a fixed-factor test to
    resolve small ``delta``. The K-growth exponent is used instead: ``eta``
    counts as bounded when that exponent is at most ``tol``.

    Returns the threshold (``nan`` if no candidate is bounded) and the K-growth
    exponent for every candidate.
    """
    etas = np.sort(np.atleast_1d(np.asarray(etas, dtype=float)))
    profile = doubling_profile(make_model, Ks, etas, T, trials, seed)
    exps = np.array([growth_exponent(Ks, row) for row in profile])
    ok = np.nonzero(exps <= tol)[0]
    return (float(etas[ok[0]]) if ok.size else float("nan")), exps


# Model files ---------------------------------------------------------------


def save_model(model: DiagonalModel, path) -> None:
    dump_toml(
        {
            "sigma0": model.sigma0,
            "mus_re": model.mus.real.tolist(),
            "mus_im": model.mus.imag.tolist(),
            "cs_re": model.cs.real.tolist(),
            "cs_im": model.cs.imag.tolist(),
            "bs_re": model.bs.real.tolist(),
            "bs_im": model.bs.imag.tolist(),
        },
        path,
    )


def model_from_mapping(data: dict) -> DiagonalModel:
    missing = [k for k in ("mus_re", "mus_im", "cs_re", "cs_im", "bs_re", "bs_im", "sigma0") if k not in data]
    if missing:
        raise KeyError(f"model file is missing keys: {', '.join(missing)}")

    def pair(name):
        re = np.asarray(data[name + "_re"], dtype=float)
        im = np.asarray(data[name + "_im"], dtype=float)
        if re.shape != im.shape:
            raise ValueError(f"{name}_re and {name}_im differ in length")
        return re + 1j * im

    return DiagonalModel(pair("mus"), pair("cs"), pair("bs"), float(data["sigma0"]))


def load_model(path) -> DiagonalModel:
    return model_from_mapping(load_toml(path))
