"""Ensemble reductions: Pi rows or direct samples into CDF estimates, plus error metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class EmptyEnsembleError(ValueError):
    pass


class UnsupportedEstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalCDF:
    K_grid: np.ndarray
    F_values: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K_grid, dtype=float)
        F = np.asarray(self.F_values, dtype=float)
        if K.ndim != 1 or K.shape != F.shape:
            raise ValueError("K_grid and F_values must be 1-D arrays of equal length")
        if K.size > 1 and np.any(np.diff(K) <= 0):
            raise ValueError("K_grid must be strictly increasing")
        object.__setattr__(self, "K_grid", K)
        object.__setattr__(self, "F_values", F)

    def is_valid(self, atol: float = 1e-12) -> bool:
        F = self.F_values
        return bool(np.all(F >= -atol) and np.all(F <= 1 + atol) and np.all(np.diff(F) >= -atol))

    def to_csv(self, path) -> None:
        write_cdf_csv(path, self.K_grid, {"F": self.F_values})


@dataclass(frozen=True)
class ErrorReport:
    eps: float
    grid_param: float
    rate: float | None = None


def _as_pi_matrix(pi_matrix) -> np.ndarray:
    P = np.asarray(pi_matrix, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.shape[0] == 0:
        raise EmptyEnsembleError("cannot average an empty ensemble")
    return P


def estimate_cdf_mc(pi_matrix, K_grid) -> EmpiricalCDF:
    """Equal-weight ensemble average of Pi rows (M x N_K)."""
    P = _as_pi_matrix(pi_matrix)
    # sum in index order so the result is independent of how rows were produced
    F = np.clip(P.sum(axis=0) / P.shape[0], 0.0, 1.0)
    return EmpiricalCDF(np.asarray(K_grid, dtype=float), F)


def quadrature_weights(z_samples, F_z: Callable) -> tuple[np.ndarray, np.ndarray]:
    """Sorting permutation and weights F_z(z_(i+1)) - F_z(z_(i)).

    The top weight closes at F_z = 1 and the bottom one starts from 0, so the
    weights telescope to exactly 1.
    """
    z = np.asarray(z_samples, dtype=float)
    if z.ndim != 1:
        raise UnsupportedEstimatorError(
            "weighted estimator needs exactly one scalar input; use estimate_cdf_mc instead"
        )
    order = np.argsort(z, kind="stable")
    Fz = np.asarray(F_z(z[order]), dtype=float)
    upper = np.append(Fz[1:], 1.0)
    lower = np.concatenate([[0.0], Fz[1:]])
    w = upper - lower
    return order, w


def estimate_cdf_weighted(z_samples, F_z: Callable, pi_matrix, K_grid) -> EmpiricalCDF:
    P = _as_pi_matrix(pi_matrix)
    z = np.asarray(z_samples, dtype=float)
    if z.ndim == 2 and z.shape[1] == 1:
        z = z[:, 0]
    if z.ndim != 1:
        raise UnsupportedEstimatorError(
            "weighted estimator needs exactly one scalar input; use estimate_cdf_mc instead"
        )
    if z.size != P.shape[0]:
        raise ValueError(f"{z.size} samples for {P.shape[0]} Pi rows")
    order, w = quadrature_weights(z, F_z)
    F = np.clip(w @ P[order], 0.0, 1.0)
    return EmpiricalCDF(np.asarray(K_grid, dtype=float), F)


def empirical_cdf_from_samples(k_samples, K_grid) -> EmpiricalCDF:
    """Fraction of samples <= K (equality counts, matching H(0) = 1)."""
    k = np.sort(np.asarray(k_samples, dtype=float).ravel())
    if k.size == 0:
        raise EmptyEnsembleError("need at least one sample")
    K = np.asarray(K_grid, dtype=float)
    F = np.searchsorted(k, K, side="right") / k.size
    return EmpiricalCDF(K, F)


def sampling_oracle(draw: Callable[[np.random.Generator, int], np.ndarray], K_grid, n_draws: int = 10**6, seed: int = 0, chunk: int = 200_000) -> EmpiricalCDF:
    """Reference CDF from many draws pushed through an exact solution formula.

    ``draw(rng, n)`` returns n state samples.
    """
    rng = np.random.default_rng(seed)
    K = np.asarray(K_grid, dtype=float)
    counts = np.zeros(K.size)
    done = 0
    while done < n_draws:
        m = min(chunk, n_draws - done)
        k = np.sort(np.asarray(draw(rng, m), dtype=float))
        counts += np.searchsorted(k, K, side="right")
        done += m
    return EmpiricalCDF(K, counts / n_draws)


# --- error metrics -------------------------------------------------------------


def _cdf_values(F):
    return F.F_values if isinstance(F, EmpiricalCDF) else np.asarray(F, dtype=float)


def relative_error(F_est, F_ref) -> float:
    """sum (F_est - F_ref)^2 / sum F_ref^2 on a shared K grid."""
    if isinstance(F_est, EmpiricalCDF) and isinstance(F_ref, EmpiricalCDF):
        if F_est.K_grid.shape != F_ref.K_grid.shape or not np.allclose(F_est.K_grid, F_ref.K_grid, rtol=0, atol=1e-12):
            raise ValueError("CDFs are on different K grids")
    a, b = _cdf_values(F_est), _cdf_values(F_ref)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    den = float(np.sum(b * b))
    if den == 0:
        raise ValueError("reference CDF is identically zero")
    return float(np.sum((a - b) ** 2) / den)


def mse_error(k_num, k_exact) -> float:
    a = np.asarray(k_num, dtype=float)
    b = np.asarray(k_exact, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((b - a) ** 2))


def rms_error(k_num, k_exact) -> float:
    """Root mean square error; the norm used for the convergence tables."""
    return math.sqrt(mse_error(k_num, k_exact))


def convergence_rate(eps_coarse: float, eps_fine: float) -> float:
    if not (eps_coarse > 0 and eps_fine > 0):
        raise ValueError("errors must be positive to compute a rate")
    return math.log2(eps_coarse / eps_fine)


def convergence_table(params: Sequence[float], eps: Sequence[float]) -> list[ErrorReport]:
    """Rates between successive rows; the first row has none."""
    if len(params) != len(eps):
        raise ValueError("params and eps differ in length")
    out = []
    for i, (p, e) in enumerate(zip(params, eps)):
        rate = None if i == 0 else convergence_rate(eps[i - 1], e)
        out.append(ErrorReport(float(e), float(p), rate))
    return out


# --- CSV -------------------------------------------------------------------------


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_cdf_csv(path, K_grid, columns: dict) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", *names])
        for j, K in enumerate(K_grid):
            w.writerow([_fmt(K), *(_fmt(columns[n][j]) for n in names)])


def write_convergence_csv(path, reports: Sequence[ErrorReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "eps", "rate"])
        for r in reports:
            w.writerow([_fmt(r.grid_param), _fmt(r.eps), _fmt(r.rate)])


def read_cdf_csv(path) -> tuple[np.ndarray, dict]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]) if body else np.empty((0, len(header)))
    return data[:, 0], {h: data[:, i] for i, h in enumerate(header) if i > 0}
