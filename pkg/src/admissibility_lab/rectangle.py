"""Cosine-spectral model of the Neumann Laplacian on a rectangle ``(0, a) x (0, b)``.

Interior modes ``phi_mn = N_m(a) N_n(b) cos(m pi x / a) cos(n pi y / b)`` are
orthonormal in ``L^2``, with ``N_j(l) = sqrt((2 - delta_j0) / l)``. Each side
carries its own orthonormal cosine basis and every interior mode has a
single nonzero trace coefficient per side, so all boundary couplings are
closed-form.

Sides are ordered ``S`` (y = 0), ``N`` (y = b), ``W`` (x = 0), ``E`` (x = a);
boundary rows of a transfer matrix are ``(side, j)`` for ``j = 0 .. J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import TruncationError
from .fitting import ExponentFit, fit_exponent
from .parallel import ordered_map
from .textio import write_rows

SIDES = ("S", "N", "W", "E")
# Sweeps must satisfy max lambda^2 <= TRUNCATION_FRACTION * lambda_MM.
TRUNCATION_FRACTION = 0.5
GLANCING_MARGIN = 16


def _norm_factor(j, length):
    j = np.asarray(j)
    return np.sqrt(np.where(j == 0, 1.0, 2.0) / length)


@dataclass(frozen=True)
class RectangleModel:
    a: float
    b: float
    M: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"side lengths must be positive, got a={self.a}, b={self.b}")
        if int(self.M) != self.M or self.M < 0:
            raise ValueError(f"mode cutoff M must be a non-negative integer, got {self.M}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "M", int(self.M))

    @property
    def n_modes(self) -> int:
        return (self.M + 1) ** 2

    @cached_property
    def eigenvalue_grid(self) -> np.ndarray:
        """``lambda[m, n] = (m pi / a)^2 + (n pi / b)^2``."""
        j = np.arange(self.M + 1)
        return (j[:, None] * np.pi / self.a) ** 2 + (j[None, :] * np.pi / self.b) ** 2

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Flattened eigenvalues, mode ``(m, n)`` at index ``m * (M + 1) + n``."""
        return self.eigenvalue_grid.ravel()

    @property
    def top_eigenvalue(self) -> float:
        return float(self.eigenvalue_grid[self.M, self.M])

    def side_length(self, side: str) -> float:
        if side not in SIDES:
            raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")
        return self.a if side in ("S", "N") else self.b

    def side_normal_factors(self, side: str) -> np.ndarray:
        """Trace of ``phi_mn`` on ``side`` divided by the side's basis function.

        On ``S``/``N`` the boundary mode is ``j = m`` and the factor depends on
        ``n``; on ``W``/``E`` the roles swap. The far sides carry ``(-1)^index``.
        """
        j = np.arange(self.M + 1)
        normal = _norm_factor(j, self.b if side in ("S", "N") else self.a)
        self.side_length(side)
        if side in ("N", "E"):
            normal = normal * (-1.0) ** j
        return normal

    def trace_coefficient(self, side: str, j: int, m: int, n: int) -> float:
        """Coefficient of ``gamma phi_mn`` on boundary mode ``j`` of ``side``."""
        normal = self.side_normal_factors(side)
        tangential_index, normal_index = (m, n) if side in ("S", "N") else (n, m)
        return float(normal[normal_index]) if j == tangential_index else 0.0

    def trace_matrix(self, J: int) -> sp.csr_matrix:
        """Real sparse ``(4 (J + 1), (M + 1)^2)`` matrix of trace coefficients."""
        if int(J) != J or J < 0 or J > self.M:
            raise ValueError(f"boundary cutoff J must satisfy 0 <= J <= M = {self.M}, got {J}")
        J = int(J)
        M1 = self.M + 1
        rows, cols, vals = [], [], []
        jj = np.arange(J + 1)
        other = np.arange(M1)
        for s_idx, side in enumerate(SIDES):
            normal = self.side_normal_factors(side)
            r = s_idx * (J + 1) + np.repeat(jj, M1)
            o = np.tile(other, J + 1)
            j_rep = np.repeat(jj, M1)
            c = j_rep * M1 + o if side in ("S", "N") else o * M1 + j_rep
            rows.append(r)
            cols.append(c)
            vals.append(normal[o])
        shape = (4 * (J + 1), self.n_modes)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
        )

    def boundary_row_weights(self, J: int) -> np.ndarray:
        """``sqrt(1 + (j pi / l_side)^2)`` per boundary row: the ``H^1`` weights."""
        j = np.arange(J + 1)
        return np.concatenate([np.sqrt(1 + (j * np.pi / self.side_length(s)) ** 2) for s in SIDES])

    def default_boundary_cutoff(self, lam_max: float) -> int:
        longest = max(self.a, self.b)
        return min(self.M, int(math.ceil(abs(lam_max) * longest / np.pi)) + GLANCING_MARGIN)


def build_model(a: float, b: float, M: int) -> RectangleModel:
    return RectangleModel(a, b, M)


def check_truncation(model: RectangleModel, lam_max: float) -> None:
    limit = TRUNCATION_FRACTION * model.top_eigenvalue
    if lam_max**2 > limit:
        needed = math.ceil(abs(lam_max) / (np.pi * math.sqrt(TRUNCATION_FRACTION * (model.a**-2 + model.b**-2))))
        raise TruncationError(
            f"truncation too small: lambda_max^2 = {lam_max**2:.6g} exceeds "
            f"{TRUNCATION_FRACTION:g} * lambda_MM = {limit:.6g}; need M >= {needed}"
        )


@dataclass(frozen=True)
class TransferMatrix:
    values: np.ndarray
    p: complex
    J: int
    model: RectangleModel

    def row_weights(self, target: str) -> np.ndarray:
        if target == "L2":
            return np.ones(self.values.shape[0])
        if target == "H1":
            return self.model.boundary_row_weights(self.J)
        raise ValueError(f"unknown target {target!r}; expected 'L2' or 'H1'")


def ntd_matrix(model: RectangleModel, p: complex, J: int | None = None) -> TransferMatrix:
    """``gamma (p^2 + L)^{-1} gamma^*`` on boundary modes ``j <= J``, with ``L = -Delta_N``."""
    p = complex(p)
    if not p.real > 0:
        raise ValueError(f"Re p must be positive (resolvent set), got p = {p}")
    J = model.M if J is None else J
    T = model.trace_matrix(J)
    d = 1.0 / (p**2 + model.eigenvalues)
    G = (T @ sp.diags(d) @ T.T).toarray()
    return TransferMatrix(G, p, int(J), model)


def operator_norm(G, target: str = "L2") -> float:
    """Largest singular value; the ``H1`` target pre-scales boundary rows by their ``H^1`` weights."""
    if isinstance(G, TransferMatrix):
        A = G.row_weights(target)[:, None] * G.values
    else:
        if target != "L2":
            raise ValueError("H1 target needs a TransferMatrix (row weights depend on the sides)")
        A = np.asarray(G)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


@dataclass(frozen=True)
class NtdSweep:
    lams: np.ndarray
    norm_l2: np.ndarray
    norm_h1: np.ndarray
    fit_l2: ExponentFit
    fit_h1: ExponentFit
    J: int
    sigma: float

    def write_csv(self, path) -> None:
        write_rows(path, ["lambda", "norm_l2", "norm_h1"], zip(self.lams, self.norm_l2, self.norm_h1))


def ntd_norms(model, lam, J, sigma=1.0) -> tuple[float, float]:
    G = ntd_matrix(model, sigma + 1j * lam, J)
    return operator_norm(G, "L2"), operator_norm(G, "H1")


def ntd_sweep(model: RectangleModel, lams, J: int | None = None, sigma: float = 1.0,
              workers: int = 1) -> NtdSweep:
    """Operator norms of the transfer matrix at ``p = sigma + i lambda`` and their slopes."""
    lams = np.asarray(lams, dtype=float).ravel()
    _check_grid(lams)
    check_truncation(model, float(np.abs(lams).max()))
    J = model.default_boundary_cutoff(float(np.abs(lams).max())) if J is None else int(J)
    norms = np.array(ordered_map(lambda lam: ntd_norms(model, lam, J, sigma), lams, workers))
    return NtdSweep(lams, norms[:, 0], norms[:, 1], fit_exponent(lams, norms[:, 0]),
                    fit_exponent(lams, norms[:, 1]), J, float(sigma))


def _check_grid(lams):
    if lams.size == 0:
        raise ValueError("frequency grid is empty")
    if lams.size > 1 and np.any(np.diff(lams) <= 0):
        raise ValueError("frequency grid must be increasing")


def collocated_positivity(model: RectangleModel, lam: float, J: int | None = None) -> tuple[float, float]:
    """Both sides of ``|(p^2 + L)^{-1} gamma^*|^2 <= |G(p)| / (2 |lam|)`` at ``p = 1 + i lam``."""
    if lam == 0:
        raise ValueError("the collocated bound needs lam != 0")
    J = model.M if J is None else J
    T = model.trace_matrix(J)
    p = 1.0 + 1j * lam
    d = 1.0 / (p**2 + model.eigenvalues)
    # squared norm of diag(d) T^T is the top eigenvalue of T diag(|d|^2) T^T
    lhs = float(np.linalg.eigvalsh((T @ sp.diags(np.abs(d) ** 2) @ T.T).toarray())[-1])
    rhs = operator_norm(ntd_matrix(model, p, J)) / (2 * abs(lam))
    return lhs, rhs


# Damping patches -----------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPatch:
    side: str
    s0: float
    s1: float
    b0: float = 1.0

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}; expected one of {SIDES}")
        if not 0 <= self.s0 < self.s1:
            raise ValueError(f"patch interval must satisfy 0 <= s0 < s1, got [{self.s0}, {self.s1}]")
        if self.b0 < 0:
            raise ValueError(f"amplitude b0 must be >= 0, got {self.b0}")

    def validate(self, model: RectangleModel) -> None:
        length = model.side_length(self.side)
        if self.s1 > length * (1 + 1e-15):
            raise ValueError(f"patch end s1 = {self.s1} exceeds side length {length}")

    def with_amplitude(self, b0: float) -> "BoundaryPatch":
        return BoundaryPatch(self.side, self.s0, self.s1, b0)


def full_side(model: RectangleModel, side: str, b0: float = 1.0) -> BoundaryPatch:
    return BoundaryPatch(side, 0.0, model.side_length(side), b0)


def _sinpi(x):
    """``sin(pi x)``, exactly zero at integers."""
    r = np.mod(x, 2.0)
    out = np.sin(np.pi * r)
    out[(r == 0.0) | (r == 1.0)] = 0.0
    return out


def cosine_overlap(K: int, length: float, s0: float, s1: float) -> np.ndarray:
    """``I[i, k] = int_{s0}^{s1} cos(i pi s / l) cos(k pi s / l) ds`` for ``0 <= i, k <= K``."""
    i = np.arange(K + 1)

    def F(k):
        k = np.asarray(k, dtype=float)
        safe = np.where(k == 0, 1.0, k)
        val = length / (np.pi * safe) * (_sinpi(k * s1 / length) - _sinpi(k * s0 / length))
        return np.where(k == 0, s1 - s0, val)

    diff = i[:, None] - i[None, :]
    tot = i[:, None] + i[None, :]
    return 0.5 * (F(np.abs(diff)) + F(tot))


def boundary_gram(model: RectangleModel, patch: BoundaryPatch) -> np.ndarray:
    """``b0^2 int_patch gamma phi_mn gamma phi_m'n' ds`` over interior modes (dense, PSD)."""
    patch.validate(model)
    length = model.side_length(patch.side)
    idx = np.arange(model.M + 1)
    tang = _norm_factor(idx, length)
    C = tang[:, None] * tang[None, :] * cosine_overlap(model.M, length, patch.s0, patch.s1)
    normal = model.side_normal_factors(patch.side)
    R = np.outer(normal, normal)
    G = np.kron(C, R) if patch.side in ("S", "N") else np.kron(R, C)
    return patch.b0**2 * G


def damping_gram(model: RectangleModel, patches) -> np.ndarray:
    if isinstance(patches, BoundaryPatch):
        patches = [patches]
    out = np.zeros((model.n_modes, model.n_modes))
    for p in patches:
        out += boundary_gram(model, p)
    return out


def block_partition(B: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of the sparsity graph of ``B``.

    Diagonal-plus-``B`` matrices are block diagonal over these sets, so their
    spectra and singular values can be computed one block at a time.
    """
    n = B.shape[0]
    graph = sp.csr_matrix(B != 0)
    n_comp, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=n_comp))[:-1]
    return np.split(order, splits)


def hautus_sigma_min_matrix(eigs, B, lam: float) -> float:
    """``sqrt(lambda_min(D^2 + B))`` with ``D = diag(eigs - lam^2)``."""
    eigs = np.asarray(eigs, dtype=float)
    D = eigs - lam**2
    best = np.inf
    for idx in block_partition(B):
        blk = B[np.ix_(idx, idx)] + np.diag(D[idx] ** 2)
        best = min(best, float(np.linalg.eigvalsh(blk)[0]))
    return float(np.sqrt(max(best, 0.0)))


def hautus_sigma_min(model: RectangleModel, patch: BoundaryPatch, lam: float, gram=None) -> float:
    """Smallest singular value in the Hautus test with unit damping on ``patch``."""
    check_truncation(model, abs(lam))
    B = boundary_gram(model, patch.with_amplitude(1.0)) if gram is None else gram
    return hautus_sigma_min_matrix(model.eigenvalues, B, lam)


def damped_sigma_min_matrix(eigs, B, lam: float) -> float:
    """Smallest singular value of ``diag(eigs) + i lam B - lam^2 I``."""
    eigs = np.asarray(eigs, dtype=float)
    best = np.inf
    for idx in block_partition(B):
        blk = 1j * lam * B[np.ix_(idx, idx)] + np.diag(eigs[idx] - lam**2)
        best = min(best, float(np.linalg.svd(blk, compute_uv=False)[-1]))
    return best


def damped_resolvent_norm(model: RectangleModel, patch: BoundaryPatch, lam: float, gram=None) -> float:
    """``|(L + i lam B - lam^2)^{-1}|`` on the truncated space; ``inf`` at an exact singularity."""
    check_truncation(model, abs(lam))
    B = boundary_gram(model, patch) if gram is None else gram
    smin = damped_sigma_min_matrix(model.eigenvalues, B, lam)
    scale = max(1.0, float(model.eigenvalues.max()), lam**2)
    if smin <= np.finfo(float).eps * scale:
        return float("inf")
    return 1.0 / smin


def irrational_grid(lo: float, hi: float, n: int, log: bool = True) -> np.ndarray:
    """``n`` points in ``(lo, hi)`` at offsets ``(i + sqrt(2) - 1) / n``.

    The irrational offset keeps the points off the rational lattice on which
    the rectangle's resonances ``lambda^2 = lambda_mn`` accumulate.
    """
    if not (0 < lo < hi) and log:
        raise ValueError("log grid needs 0 < lo < hi")
    if not lo < hi or n < 1:
        raise ValueError("grid needs lo < hi and n >= 1")
    u = (np.arange(n) + math.sqrt(2.0) - 1.0) / n
    if log:
        return lo * (hi / lo) ** u
    return lo + (hi - lo) * u


@dataclass(frozen=True)
class ScanResult:
    lams: np.ndarray
    values: np.ndarray
    column: str
    fit: ExponentFit | None = None

    def write_csv(self, path) -> None:
        write_rows(path, ["lambda", self.column], zip(self.lams, self.values))


def hautus_scan(model, patch, lams, workers: int = 1) -> ScanResult:
    lams = np.asarray(lams, dtype=float).ravel()
    _check_grid(lams)
    check_truncation(model, float(np.abs(lams).max()))
    B = boundary_gram(model, patch.with_amplitude(1.0))
    vals = np.array(ordered_map(lambda lam: hautus_sigma_min(model, patch, lam, B), lams, workers))
    return ScanResult(lams, vals, "sigma_min")


def damped_resolvent_sweep(model, patch, lams, workers: int = 1) -> ScanResult:
    lams = np.asarray(lams, dtype=float).ravel()
    _check_grid(lams)
    check_truncation(model, float(np.abs(lams).max()))
    B = boundary_gram(model, patch)
    vals = np.array(ordered_map(lambda lam: damped_resolvent_norm(model, patch, lam, B), lams, workers))
    fit = fit_exponent(lams, vals) if np.all(np.isfinite(vals)) and lams.size >= 3 else None
    return ScanResult(lams, vals, "res_norm", fit)
