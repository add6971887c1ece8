"""Log-log exponent fitting for frequency sweeps and decay curves."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Curvature below this size (in log units over the half-window) is rounding noise.
_CURVATURE_FLOOR = 1e-8


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of ``log y`` against ``log x``.

    ``curvature_flag`` is set when a quadratic term in ``log x`` is
    statistically significant, i.e. the data are not a clean power law
    over the window.
    """

    slope: float
    stderr: float
    window: tuple[float, float]
    n_points: int
    curvature_flag: bool
    intercept: float = 0.0

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.stderr,
            "window_lo": self.window[0],
            "window_hi": self.window[1],
            "n_points": self.n_points,
            "curvature_flag": self.curvature_flag,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary())


def fit_exponent(x, y, window=None) -> ExponentFit:
    """Fit ``y ~ C x**slope`` on the points with ``x`` inside ``window``.

    Parameters
    ----------
    x, y
        Positive samples.
    window
        Optional ``(lo, hi)``; defaults to the full range of ``x``.

    Raises
    ------
    ValueError
        Fewer than three points in the window, or non-positive values.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    if window is None:
        if x.size == 0:
            raise ValueError("insufficient points: 0 < 3")
        window = (float(np.min(x)), float(np.max(x)))
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"empty fit window ({lo}, {hi})")
    sel = (x >= lo) & (x <= hi)
    xs, ys = x[sel], y[sel]
    if xs.size < 3:
        raise ValueError(f"insufficient points: {xs.size} < 3")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError("log-log fit needs strictly positive finite values")

    lx, ly = np.log(xs), np.log(ys)
    n = lx.size
    xc = lx - lx.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("degenerate window: all x equal")
    slope = float(xc @ (ly - ly.mean()) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    if n > 2:
        stderr = float(np.sqrt(max(float(resid @ resid), 0.0) / (n - 2) / sxx))
    else:
        stderr = 0.0

    return ExponentFit(
        slope=slope,
        stderr=stderr,
        window=(lo, hi),
        n_points=int(n),
        curvature_flag=_curvature(xc, ly),
        intercept=intercept,
    )


def _curvature(xc: np.ndarray, ly: np.ndarray) -> bool:
    n = xc.size
    if n < 4:
        return False
    V = np.column_stack([np.ones(n), xc, xc**2])
    coef, *_ = np.linalg.lstsq(V, ly, rcond=None)
    resid = ly - V @ coef
    dof = n - 3
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(V.T @ V)
    c2, se2 = abs(coef[2]), float(np.sqrt(max(cov[2, 2], 0.0)))
    half = 0.5 * (xc.max() - xc.min())
    return bool(c2 > 3.0 * se2 and c2 * half**2 > _CURVATURE_FLOOR)
