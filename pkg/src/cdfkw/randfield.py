"""Lognormal random scalars and exponentially correlated lognormal fields."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np


@dataclass(frozen=True)
class ScalarDistSpec:
    """Lognormal scalar: ln z ~ N(mu, sigma2)."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def cdf(self, z):
        """Lognormal CDF, vectorized."""
        from scipy.stats import norm

        z = np.asarray(z, dtype=float)
        if self.sigma2 == 0:
            return (z >= math.exp(self.mu)).astype(float)
        with np.errstate(divide="ignore"):
            lz = np.where(z > 0, np.log(np.where(z > 0, z, 1.0)), -np.inf)
        return norm.cdf((lz - self.mu) / self.sigma)


@dataclass(frozen=True)
class FieldSpec:
    mean: float
    std: float
    corr_length: float
    grid: tuple[float, ...]

    def __post_init__(self):
        if self.mean <= 0:
            raise ValueError("field mean must be positive")
        if self.std < 0:
            raise ValueError("field std must be non-negative")
        if self.corr_length <= 0:
            raise ValueError("correlation length must be positive")
        g = np.asarray(self.grid, dtype=float)
        if g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid needs >= 2 strictly increasing points")
        object.__setattr__(self, "grid", tuple(float(v) for v in g))


@dataclass(frozen=True)
class GridField:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.shape != v.shape:
            raise ValueError("grid and values must have equal length")
        if np.any(v <= 0):
            raise ValueError("field values must be positive")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def spacing(self) -> float:
        return float(np.min(np.diff(self.grid)))

    def __call__(self, x):
        return interpolate(self, x)


@dataclass(frozen=True)
class Realization:
    """One draw of every random input of a problem."""

    index: int
    seed: int
    scalars: Mapping[str, float] = field(default_factory=dict)
    fields: Mapping[str, GridField] = field(default_factory=dict)


def lognormal_params_from_moments(mean: float, std: float) -> ScalarDistSpec:
    """Log-space (mu, sigma2) of the lognormal with the given mean and std."""
    if not mean > 0:
        raise ValueError(f"lognormal mean must be positive, got {mean}")
    if std < 0:
        raise ValueError(f"std must be non-negative, got {std}")
    sigma2 = math.log1p((std / mean) ** 2)
    mu = math.log(mean * mean / math.sqrt(mean * mean + std * std))
    return ScalarDistSpec(mu=mu, sigma2=sigma2)


def realization_seed(master_seed: int, index: int) -> int:
    """64-bit seed for realization `index`; depends only on (master_seed, index)."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def sample_scalar(spec: ScalarDistSpec, rng: np.random.Generator) -> float:
    g = rng.standard_normal()
    return math.exp(spec.mu + spec.sigma * g)


@lru_cache(maxsize=64)
def _cholesky(grid: tuple[float, ...], corr_length: float, sigma2: float) -> np.ndarray:
    x = np.asarray(grid)
    cov = sigma2 * np.exp(-np.abs(x[:, None] - x[None, :]) / corr_length)
    cov[np.diag_indices_from(cov)] += 1e-12 * sigma2
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        pivot = float(np.min(np.linalg.eigvalsh(cov)))
        raise FloatingPointError(
            f"covariance not positive definite; smallest pivot/eigenvalue {pivot:.3e}"
        ) from exc
    L.setflags(write=False)
    return L


def sample_field(spec: FieldSpec, rng: np.random.Generator) -> GridField:
    logp = lognormal_params_from_moments(spec.mean, spec.std)
    grid = np.asarray(spec.grid)
    if logp.sigma2 == 0:
        return GridField(grid, np.full(grid.size, spec.mean))
    L = _cholesky(spec.grid, spec.corr_length, logp.sigma2)
    g = rng.standard_normal(grid.size)
    return GridField(grid, np.exp(logp.mu + L @ g))


def interpolate(gf: GridField, x):
    """Piecewise-linear interpolation; points outside the grid take the endpoint value."""
    return np.interp(x, gf.grid, gf.values)


def gradient(gf: GridField, x):
    """Central difference of the interpolant with step equal to half the grid spacing."""
    h = 0.5 * gf.spacing
    return (interpolate(gf, np.asarray(x) + h) - interpolate(gf, np.asarray(x) - h)) / (2 * h)


def make_realization(
    master_seed: int,
    index: int,
    scalars: Mapping[str, ScalarDistSpec] | None = None,
    fields: Mapping[str, FieldSpec] | None = None,
) -> Realization:
    """Draw all inputs for one realization, in sorted-name order (scalars first)."""
    seed = realization_seed(master_seed, index)
    rng = np.random.default_rng(seed)
    zs = {name: sample_scalar(spec, rng) for name, spec in sorted((scalars or {}).items())}
    fs = {name: sample_field(spec, rng) for name, spec in sorted((fields or {}).items())}
    return Realization(index=index, seed=seed, scalars=zs, fields=fs)


def write_realizations_csv(path, realizations) -> None:
    """Audit sidecar: index, seed, scalar values, then field values node by node."""
    realizations = list(realizations)
    if not realizations:
        raise ValueError("no realizations to write")
    first = realizations[0]
    snames = sorted(first.scalars)
    fnames = sorted(first.fields)
    header = ["index", "seed", *snames]
    for fn in fnames:
        header += [f"{fn}[{j}]" for j in range(first.fields[fn].values.size)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in realizations:
            row = [r.index, r.seed, *(repr(r.scalars[s]) for s in snames)]
            for fn in fnames:
                row += [repr(float(v)) for v in r.fields[fn].values]
            w.writerow(row)


def read_realizations_csv(path, field_grids: Mapping[str, np.ndarray] | None = None) -> list[Realization]:
    field_grids = field_grids or {}
    out = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        for row in rd:
            rec = dict(zip(header, row))
            scalars, fvals = {}, {}
            for key in header[2:]:
                if "[" in key:
                    fvals.setdefault(key.split("[")[0], []).append(float(rec[key]))
                else:
                    scalars[key] = float(rec[key])
            fields = {}
            for name, vals in fvals.items():
                grid = field_grids.get(name, np.arange(len(vals), dtype=float))
                fields[name] = GridField(np.asarray(grid), np.asarray(vals))
            out.append(Realization(int(rec["index"]), int(rec["seed"]), scalars, fields))
    return out
