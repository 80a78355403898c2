"""Catalog of benchmark kinematic wave problems.

Every callable takes spatial positions shaped ``(dim, n)`` and a
:class:`~cdfkw.randfield.Realization`; ``t`` is a scalar or broadcastable array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .randfield import FieldSpec, Realization, ScalarDistSpec, interpolate

PI = math.pi
K_FLOOR = 1e-8

Fn = Callable[..., np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """A kinematic wave problem dk/dt + div q(k, z) = S with IC/BC and random inputs.

    ``form='flux'`` marks problems whose unknown is the flow rate q; their
    characteristics are parametrized by x through ``dtdx(Q, x, r)``.
    """

    name: str
    dim: int
    domain: tuple[tuple[float, float], ...]
    flux: Fn  # q(K, x, r) -> (dim, n)
    flux_dK: Fn  # dq/dK (K, x, r) -> (dim, n)
    source: Fn  # S(x, t, r) -> (n,)
    ic: Fn  # k_in(x, r) -> (n,)
    bc: Fn  # k_bx(x, t, r) -> (n,), x on the boundary
    K_floor: float = K_FLOOR
    K_max: float = 10.0
    form: str = "state"
    scalar_inputs: Mapping[str, ScalarDistSpec] = field(default_factory=dict)
    field_inputs: Mapping[str, FieldSpec] = field(default_factory=dict)
    exact: Optional[Fn] = None  # k(x, t, r) -> (n,)
    flux_dz: Optional[Fn] = None  # {field: dq_i/dz_j (dim, n)}
    dtdx: Optional[Fn] = None  # flux form only
    shock: bool = False
    periodic: bool = False
    params: Mapping[str, object] = field(default_factory=dict)

    @property
    def lo(self) -> np.ndarray:
        return np.array([d[0] for d in self.domain])

    @property
    def hi(self) -> np.ndarray:
        return np.array([d[1] for d in self.domain])


def _z(r: Realization, name: str = "z") -> float:
    return r.scalars.get(name, 1.0)


# --- one-dimensional test, q = k^(1/2) ------------------------------------------------


def make_test1d(deterministic: bool = True) -> ProblemSpec:
    """q = sqrt(k) on [0, 2].

    The deterministic variant has exact solution (sin pi(x+t) + 1.1)^2; the
    stochastic one (z sin pi(x+t) + 5)^2 with ln z ~ N(0, 0.1).
    """
    offset = 1.1 if deterministic else 5.0
    scalars = {} if deterministic else {"z": ScalarDistSpec(0.0, 0.1)}

    def amp(r):
        return 1.0 if deterministic else _z(r)

    def exact(x, t, r):
        return (amp(r) * np.sin(PI * (x[0] + t)) + offset) ** 2

    def source(x, t, r):
        a = amp(r)
        s, c = np.sin(PI * (x[0] + t)), np.cos(PI * (x[0] + t))
        return 2 * PI * a * (a * s + offset) * c + a * PI * c

    return ProblemSpec(
        name="test1d" if deterministic else "test1d-stochastic",
        dim=1,
        domain=((0.0, 2.0),),
        flux=lambda K, x, r: np.sqrt(K)[None, :],
        flux_dK=lambda K, x, r: (0.5 / np.sqrt(K))[None, :],
        source=source,
        ic=lambda x, r: exact(x, 0.0, r),
        bc=lambda x, t, r: exact(x, t, r),
        K_max=6.0 if deterministic else 64.0,
        scalar_inputs=scalars,
        exact=exact,
        params={"offset": offset},
    )


def exact_test1(x, t):
    return (np.sin(PI * (np.asarray(x) + t)) + 1.1) ** 2


# --- three-dimensional unit advection -------------------------------------------------


def make_3d() -> ProblemSpec:
    def exact(x, t, r):
        return _z(r) / 3 * np.sum(np.sin(PI * t * x), axis=0)

    def source(x, t, r):
        return PI * _z(r) / 3 * np.sum((t + x) * np.cos(PI * t * x), axis=0)

    return ProblemSpec(
        name="3d",
        dim=3,
        domain=((0.0, 2.0),) * 3,
        flux=lambda K, x, r: np.broadcast_to(K, (3,) + np.shape(K)).copy(),
        flux_dK=lambda K, x, r: np.ones((3,) + np.shape(K)),
        source=source,
        ic=lambda x, r: np.zeros(x.shape[1]),
        bc=exact,
        K_floor=-math.inf,
        K_max=5.0,
        scalar_inputs={"z": ScalarDistSpec(0.0, 0.01)},
        exact=exact,
    )


# --- coupled linear system ----------------------------------------------------------


def decouple(k1, k2):
    return (np.add(k1, k2) / 2, np.subtract(k1, k2) / 2)


def recombine_pi(step_v1, step_v2):
    """Step locations of the k1, k2 fine-grained CDFs from those of v1, v2."""
    return (np.add(step_v1, step_v2), np.subtract(step_v1, step_v2))


def coupled_exact(x, t, z):
    """Traveling-wave solution of k1_t + k2_x = 0, k2_t + k1_x = 0."""
    x = np.asarray(x) * 1.0
    v1 = z * (np.sin(PI * (x - t)) + np.cos(PI * (x - t))) / 2
    v2 = z * (np.sin(PI * (x + t)) - np.cos(PI * (x + t))) / 2
    return v1 + v2, v1 - v2


def make_coupled() -> tuple[ProblemSpec, ProblemSpec]:
    """The decoupled pair: v1 advected at +1, v2 at -1."""
    scalars = {"z": ScalarDistSpec(0.0, 0.01)}

    def make(sign: int, label: str):
        trig = (lambda s: np.sin(s) + np.cos(s)) if sign > 0 else (lambda s: np.sin(s) - np.cos(s))

        def exact(x, t, r):
            return _z(r) * trig(PI * (x[0] - sign * t)) / 2

        return ProblemSpec(
            name=f"coupled-{label}",
            dim=1,
            domain=((0.0, 2.0),),
            flux=lambda K, x, r: sign * np.asarray(K)[None, :],
            flux_dK=lambda K, x, r: np.full((1,) + np.shape(K), float(sign)),
            source=lambda x, t, r: np.zeros(x.shape[1]),
            ic=lambda x, r: exact(x, 0.0, r),
            bc=exact,
            K_floor=-math.inf,
            K_max=5.0,
            scalar_inputs=scalars,
            exact=exact,
        )

    return make(+1, "v1"), make(-1, "v2")


# --- Burgers --------------------------------------------------------------------------


def burgers_breaking_time(z: float) -> float:
    return 1.0 / (2 * PI * z)


def make_burgers() -> ProblemSpec:
    """k_t + (k^2)_x = 0, k(x, 0) = z sin(pi x) on the periodic interval [0, 2]."""
    return ProblemSpec(
        name="burgers",
        dim=1,
        domain=((0.0, 2.0),),
        flux=lambda K, x, r: (np.asarray(K) ** 2)[None, :],
        flux_dK=lambda K, x, r: (2 * np.asarray(K))[None, :],
        source=lambda x, t, r: np.zeros(x.shape[1]),
        ic=lambda x, r: _z(r) * np.sin(PI * x[0]),
        bc=lambda x, t, r: np.zeros(x.shape[1]),
        K_floor=-math.inf,
        K_max=3.0,
        scalar_inputs={"z": ScalarDistSpec(0.0, 0.01)},
        shock=True,
        periodic=True,
    )


# --- Saint-Venant with Manning friction ------------------------------------------------

SV_S0 = (0.01, 0.0025)
SV_CM = (0.037, 0.00925)
SV_LENGTH = 2.0


def sv_source(case: str) -> Callable:
    if case in ("zero", "0"):
        return lambda x, t, r: np.zeros(np.shape(x)[-1])
    if case in ("one", "1"):
        return lambda x, t, r: np.ones(np.shape(x)[-1])
    if case == "x":
        return lambda x, t, r: np.array(x[0], dtype=float, copy=True)
    raise ValueError(f"unknown source case {case!r}; expected zero, one or x")


def sv_inflow(t):
    return np.maximum(np.sin(PI * np.asarray(t, dtype=float)), 0.5)


def make_saint_venant(source_case: str = "zero", lam: float = 0.2, n_cells: int = 100) -> ProblemSpec:
    """Manning channel solved for the flow rate Q.

    s0 and C_M are lognormal fields sampled on an ``n_cells``-interval grid of
    [0, 2]. The primary form is ``flux``; the state-form callables (area k as
    unknown) are provided as well so the field-gradient drift can be exercised.
    """
    if not lam > 0:
        raise ValueError("correlation length must be positive")
    grid = tuple(np.linspace(0.0, SV_LENGTH, n_cells + 1))
    fields = {
        "CM": FieldSpec(SV_CM[0], SV_CM[1], lam, grid),
        "s0": FieldSpec(SV_S0[0], SV_S0[1], lam, grid),
    }
    src = sv_source(source_case)

    def coef(x, r):
        return np.sqrt(interpolate(r.fields["s0"], x[0])) / interpolate(r.fields["CM"], x[0])

    def dtdx(Q, x, r):
        cm = interpolate(r.fields["CM"], x[0])
        s0 = interpolate(r.fields["s0"], x[0])
        return 0.75 * (cm / np.sqrt(s0)) ** 0.75 * np.asarray(Q) ** -0.25

    def flux_dz(K, x, r):
        cm = interpolate(r.fields["CM"], x[0])
        s0 = interpolate(r.fields["s0"], x[0])
        k43 = np.asarray(K) ** (4 / 3)
        return {
            "s0": (k43 / (2 * np.sqrt(s0) * cm))[None, :],
            "CM": (-np.sqrt(s0) * k43 / cm**2)[None, :],
        }

    def ic_q(x, r):
        return np.full(np.shape(x)[-1], 0.5)

    return ProblemSpec(
        name=f"saint-venant-{source_case}",
        dim=1,
        domain=((0.0, SV_LENGTH),),
        flux=lambda K, x, r: (coef(x, r) * np.asarray(K) ** (4 / 3))[None, :],
        flux_dK=lambda K, x, r: (4 / 3 * coef(x, r) * np.asarray(K) ** (1 / 3))[None, :],
        source=src,
        ic=ic_q,
        bc=lambda x, t, r: np.broadcast_to(sv_inflow(t), (np.shape(x)[-1],)).astype(float),
        K_max=3.0,
        form="flux",
        field_inputs=fields,
        flux_dz=flux_dz,
        dtdx=dtdx,
        params={"source_case": source_case, "lambda": lam, "n_cells": n_cells},
    )


def q_to_area(q, x, r):
    """Cross-sectional area k from flow rate q under Manning's law."""
    cm = interpolate(r.fields["CM"], x)
    s0 = interpolate(r.fields["s0"], x)
    return (np.asarray(q) * cm / np.sqrt(s0)) ** 0.75


CATALOG = {
    "test1d": "deterministic 1D test, q = k^(1/2), offset 1.1",
    "test1d-stochastic": "1D test with lognormal amplitude z, offset 5",
    "3d": "3D unit advection with z-scaled source",
    "coupled": "2x2 linear system decoupled by v = (k1 +- k2)/2",
    "burgers": "Burgers k_t + (k^2)_x = 0 with shock fitting",
    "saint-venant": "Manning channel with lognormal s0, C_M fields (source zero|one|x)",
}


def get_problem(name: str, **kw) -> ProblemSpec:
    if name == "test1d":
        return make_test1d(True)
    if name == "test1d-stochastic":
        return make_test1d(False)
    if name == "3d":
        return make_3d()
    if name == "burgers":
        return make_burgers()
    if name == "saint-venant":
        return make_saint_venant(kw.get("source_case", "zero"), kw.get("lam", 0.2), kw.get("n_cells", 100))
    raise KeyError(f"unknown problem {name!r}")
