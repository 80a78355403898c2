"""Fifth-order finite-difference WENO with Roe upwinding and TVD-RK3 in time.

Solves q'_t + u(q', x)_x = S on a uniform node grid, batched over
realizations (arrays of shape ``(M, n_nodes)``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .problems import ProblemSpec
from .randfield import Realization, interpolate

EPS_W = 1e-6
_D = (0.1, 0.6, 0.3)


class CFLError(ValueError):
    pass


def to_qprime(q, cm, s0):
    """Manning change of variable q' = (q C_M / sqrt(s0))^(3/4) (the flow area)."""
    q = np.asarray(q, dtype=float)
    if np.any(q < 0):
        raise ValueError("flow rate must be non-negative")
    return (q * np.asarray(cm) / np.sqrt(s0)) ** 0.75


def from_qprime(qp, cm, s0):
    qp = np.asarray(qp, dtype=float)
    return np.sqrt(s0) / np.asarray(cm) * qp ** (4 / 3)


def weno5_reconstruct(stencil, side: str = "left"):
    """Interface value at i+1/2.

    ``side='left'``: stencil is (v[i-2], ..., v[i+2]), upwind from the left.
    ``side='right'``: stencil is (v[i-1], ..., v[i+3]), upwind from the right.
    The last axis holds the five values.
    """
    v = np.asarray(stencil, dtype=float)
    if side == "right":
        v = v[..., ::-1]
    elif side != "left":
        raise ValueError("side must be 'left' or 'right'")
    a, b, c, d, e = (v[..., i] for i in range(5))
    return _weno5(a, b, c, d, e)


def _weno5(a, b, c, d, e):
    q0 = (2 * a - 7 * b + 11 * c) / 6
    q1 = (-b + 5 * c + 2 * d) / 6
    q2 = (2 * c + 5 * d - e) / 6
    s = a - 2 * b + c
    r = a - 4 * b + 3 * c
    a0 = _D[0] / np.square(EPS_W + 13 / 12 * s * s + 0.25 * r * r)
    s = b - 2 * c + d
    r = b - d
    a1 = _D[1] / np.square(EPS_W + 13 / 12 * s * s + 0.25 * r * r)
    s = c - 2 * d + e
    r = 3 * c - 4 * d + e
    a2 = _D[2] / np.square(EPS_W + 13 / 12 * s * s + 0.25 * r * r)
    return (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)


def roe_speed(u_left, u_right, q_left, q_right, du: Callable | None = None):
    """(u_R - u_L)/(q_R - q_L); falls back to du at the midpoint when q_R ~ q_L."""
    u_left, u_right = np.asarray(u_left, float), np.asarray(u_right, float)
    q_left, q_right = np.asarray(q_left, float), np.asarray(q_right, float)
    dq = q_right - q_left
    small = np.abs(dq) < 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (u_right - u_left) / np.where(small, 1.0, dq)
    if np.any(small):
        if du is None:
            raise ValueError("degenerate Roe speed needs the analytic derivative")
        a = np.where(small, du(0.5 * (q_left + q_right)), a)
    return a if a.ndim else float(a)


@dataclass(frozen=True)
class FluxLaw:
    """u(q, c) and du/dq(q, c); ``c`` is a per-node coefficient array or None."""

    u: Callable
    du: Callable
    coef: np.ndarray | None = None


@dataclass(frozen=True)
class WenoState:
    a: float
    b: float
    n_cells: int
    qprime: np.ndarray
    t: float = 0.0

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_cells + 1)


_NG = 3


def _lagrange_weights(targets, nodes):
    return np.array([[np.prod([(xg - m) / (j - m) for m in nodes if m != j]) for j in nodes] for xg in targets])


# ghosts at offsets -3, -2, -1 (and n+0..2 past the end) from the nearest five nodes
_W_LEFT = _lagrange_weights([-3, -2, -1], range(5))
_W_RIGHT = _lagrange_weights([5, 6, 7], range(5))


def _extend(arr, periodic: bool, extrapolate: bool = True):
    """Pad the node axis with three ghosts per side.

    Non-periodic ghosts use degree-4 extrapolation (``extrapolate``) or copy
    the end node.
    """
    if periodic:
        core = arr[..., :-1]  # last node duplicates the first
        return np.concatenate([core[..., -_NG:], core, core[..., :_NG + 1]], axis=-1)
    if extrapolate and arr.shape[-1] >= 5:
        left = arr[..., :5] @ _W_LEFT.T
        right = arr[..., -5:] @ _W_RIGHT.T
    else:
        left = np.repeat(arr[..., :1], _NG, axis=-1)
        right = np.repeat(arr[..., -1:], _NG, axis=-1)
    return np.concatenate([left, arr, right], axis=-1)


def interface_fluxes(q_ext, law: FluxLaw, c_ext):
    """Numerical fluxes at every interface m+1/2 for m = 2 .. len-4 of the padded arrays."""
    u = law.u(q_ext, c_ext)
    n = q_ext.shape[-1]
    lo, hi = _NG - 1, n - _NG  # interfaces left of node 0 through right of last node

    def take(arr, off):
        return arr[..., lo + off:hi + off]

    ql, qr = take(q_ext, 0), take(q_ext, 1)
    if c_ext is None:
        ch = cl = cr = None
    else:
        cl, cr = take(c_ext, 0), take(c_ext, 1)
        ch = 0.5 * (cl + cr)
    # Roe speed with the coefficient frozen at the interface
    a = roe_speed(law.u(ql, ch), law.u(qr, ch), ql, qr, du=lambda qq: law.du(qq, ch))
    dl, dr = law.du(ql, cl), law.du(qr, cr)
    sonic = dl * dr <= 0
    f_left = _weno5(*(take(u, o) for o in (-2, -1, 0, 1, 2)))
    f_right = _weno5(*(take(u, o) for o in (3, 2, 1, 0, -1)))
    flux = np.where(a >= 0, f_left, f_right)
    if np.any(sonic):
        # local Lax-Friedrichs splitting, only where the characteristic speed changes sign
        idx = np.nonzero(sonic)
        alpha = np.maximum(np.abs(dl[idx]), np.abs(dr[idx]))
        qs = [take(q_ext, o)[idx] for o in range(-2, 4)]
        us = [take(u, o)[idx] for o in range(-2, 4)]
        fp = [0.5 * (uu + alpha * qq) for uu, qq in zip(us, qs)]
        fm = [0.5 * (uu - alpha * qq) for uu, qq in zip(us, qs)]
        flux[idx] = _weno5(*fp[:5]) + _weno5(*fm[::-1][:5])
    return flux


def weno_rhs(q, law: FluxLaw, dx: float, source, periodic: bool = False, dirichlet: bool = True, extrapolate: bool = True):
    """dq'/dt per node: -(F[h+1/2] - F[h-1/2])/dx + S.

    With ``dirichlet`` the first node is a prescribed inflow value and its rate is 0.
    """
    q_ext = _extend(q, periodic, extrapolate)
    c_ext = None if law.coef is None else _extend(np.broadcast_to(law.coef, q.shape), periodic, extrapolate=False)
    F = interface_fluxes(q_ext, law, c_ext)
    if not np.all(np.isfinite(F)):
        bad = np.argwhere(~np.isfinite(F))[0]
        raise FloatingPointError(f"non-finite WENO flux at interface index {tuple(bad)}")
    rhs = -(F[..., 1:] - F[..., :-1]) / dx + source
    if periodic:
        rhs[..., -1] = rhs[..., 0]
    elif dirichlet:
        rhs[..., 0] = 0.0
    return rhs


def max_speed(q, law: FluxLaw) -> float:
    c = None if law.coef is None else np.broadcast_to(law.coef, np.shape(q))
    return float(np.max(np.abs(law.du(q, c))))


def integrate(
    q0,
    law: FluxLaw,
    a: float,
    b: float,
    t_final: float,
    dt: float,
    source: Callable[[float], np.ndarray],
    inflow: Callable[[float], np.ndarray] | None = None,
    periodic: bool = False,
    cfl: float = 0.4,
    check_positive: bool = False,
):
    """TVD-RK3 march of the WENO semi-discretization; returns q' at t_final."""
    q = np.array(q0, dtype=float, copy=True)
    n_cells = q.shape[-1] - 1
    dx = (b - a) / n_cells
    t = 0.0
    nsteps = int(np.ceil(t_final / dt - 1e-9))

    def set_bc(arr, tt):
        if inflow is not None and not periodic:
            arr[..., 0] = inflow(tt)
        return arr

    def rhs(arr, tt):
        return weno_rhs(arr, law, dx, source(tt), periodic=periodic, dirichlet=inflow is not None)

    set_bc(q, 0.0)
    for _ in range(nsteps):
        h = min(dt, t_final - t)
        if h <= 0:
            break
        smax = max_speed(q, law)
        if h * smax > cfl * dx:
            raise CFLError(f"CFL violated: dt={h:.3e} > {cfl}*dx/max|u'| = {cfl * dx / smax:.3e}")
        s1 = set_bc(q + h * rhs(q, t), t + h)
        s2 = set_bc(0.75 * q + 0.25 * s1 + 0.25 * h * rhs(s1, t + h), t + 0.5 * h)
        q = set_bc(q / 3 + 2 / 3 * s2 + 2 / 3 * h * rhs(s2, t + 0.5 * h), t + h)
        t += h
        if check_positive and np.any(q < -1e-12):
            raise FloatingPointError(f"negative flow at t={t:.4f}")
    return q


def _batch(realizations: Sequence[Realization]) -> Realization:
    """Stack scalar inputs as (M, 1) columns so catalog callables broadcast over realizations."""
    names = realizations[0].scalars.keys()
    scalars = {k: np.array([r.scalars[k] for r in realizations])[:, None] for k in names}
    return Realization(-1, 0, scalars, {})


def solve_mcs(problem: ProblemSpec, realizations, t_final: float, n_cells: int, dt: float, cfl: float = 0.4):
    """Direct solve of every realization; returns (x nodes, profiles (M, n_nodes)).

    For flux-form problems the profile is the flow rate q, otherwise the state k.
    """
    if problem.dim != 1:
        raise ValueError("WENO reference solver is one-dimensional")
    realizations = list(realizations)
    a, b = problem.domain[0]
    x = np.linspace(a, b, n_cells + 1)
    X = x[None, :]
    batch = _batch(realizations)
    M = len(realizations)

    if problem.form == "flux":
        cm = np.array([interpolate(r.fields["CM"], x) for r in realizations])
        s0 = np.array([interpolate(r.fields["s0"], x) for r in realizations])
        coef = np.sqrt(s0) / cm
        law = FluxLaw(
            u=lambda q, c: c * np.maximum(q, 0.0) ** (4 / 3),
            du=lambda q, c: 4 / 3 * c * np.maximum(q, 0.0) ** (1 / 3),
            coef=coef,
        )
        q0 = to_qprime(np.broadcast_to(problem.ic(X, batch), (M, x.size)), cm, s0)

        def inflow(tt):
            return to_qprime(np.broadcast_to(problem.bc(X[:, :1], tt, batch), (M, 1))[:, 0], cm[:, 0], s0[:, 0])

        s_static = np.broadcast_to(problem.source(X, 0.0, batch), (M, x.size)).copy()
        qp = integrate(q0, law, a, b, t_final, dt, lambda tt: s_static, inflow, cfl=cfl, check_positive=True)
        return x, from_qprime(qp, cm, s0)

    def u(q, c):
        return problem.flux(q.reshape(-1), None, None).reshape(q.shape)

    def du(q, c):
        return problem.flux_dK(q.reshape(-1), None, None).reshape(q.shape)

    law = FluxLaw(u=u, du=du)
    q0 = np.broadcast_to(problem.ic(X, batch), (M, x.size)).copy()
    inflow = None
    if not problem.periodic:
        def inflow(tt):
            return np.broadcast_to(problem.bc(X[:, :1], tt, batch), (M, 1))[:, 0]

    def source(tt):
        return np.broadcast_to(problem.source(X, tt, batch), (M, x.size))

    q = integrate(q0, law, a, b, t_final, dt, source, inflow, periodic=problem.periodic, cfl=cfl)
    return x, q


def sample_at(x_nodes, profiles, x: float):
    """Profile values at x (linear interpolation between nodes)."""
    return np.array([np.interp(x, x_nodes, p) for p in np.atleast_2d(profiles)])


def write_profile_csv(path, x, q) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "q"])
        for xi, qi in zip(x, q):
            w.writerow([repr(float(xi)), repr(float(qi))])
