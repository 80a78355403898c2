"""Fine-grained CDF solutions by backward method of characteristics.

Along dc/dt = v(c, t), c = (x, K), the indicator Pi = H[K - k(x, t)] is
constant, so Pi at a query point equals Pi at the foot of its characteristic
on the initial plane, on the spatial inflow boundary, or on the K floor.
All tracers are vectorized over a batch of query points sharing one time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import randfield
from .problems import PI, ProblemSpec
from .randfield import Realization

INITIAL_PLANE = "initial_plane"
SPATIAL_BOUNDARY = "spatial_boundary"
K_BOUNDARY = "K_boundary"

MAX_STEPS = 10_000_000
_KIND_CODES = {0: INITIAL_PLANE, 1: SPATIAL_BOUNDARY, 2: K_BOUNDARY}


class SingularityError(ValueError):
    """Raised when the velocity is requested below the K floor."""


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CharPoint:
    x: tuple[float, float, float]
    K: float
    t: float

    @classmethod
    def make(cls, x, K, t):
        xs = tuple(float(v) for v in np.atleast_1d(x))
        return cls(xs + (0.0,) * (3 - len(xs)), float(K), float(t))


@dataclass(frozen=True)
class VelocityEval:
    vx: tuple[float, float, float]
    vK: float


@dataclass(frozen=True)
class FootPoint:
    location: CharPoint
    boundary_kind: str


@dataclass(frozen=True)
class PiSolution:
    x: tuple[float, ...]
    t: float
    K_grid: np.ndarray
    pi_values: np.ndarray

    def step_location(self) -> float:
        """First K at which Pi equals one (nan if it never does)."""
        idx = np.flatnonzero(self.pi_values >= 1)
        return float(self.K_grid[idx[0]]) if idx.size else math.nan

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["K", "pi"])
            for K, p in zip(self.K_grid, self.pi_values):
                w.writerow([repr(float(K)), int(p)])


def heaviside(y):
    """H(y) with H(0) = 1."""
    return (np.asarray(y) >= 0).astype(float)


# --- time integration -----------------------------------------------------------------


def rk3_step(y, t: float, dt: float, rhs: Callable):
    """One Shu-Osher TVD-RK3 step of dy/dt = rhs(y, t); dt < 0 integrates backward."""
    y = np.asarray(y, dtype=float)
    k0 = rhs(y, t)
    y1 = y + dt * k0
    y2 = 0.75 * y + 0.25 * y1 + 0.25 * dt * rhs(y1, t + dt)
    out = y / 3 + 2 / 3 * y2 + 2 / 3 * dt * rhs(y2, t + 0.5 * dt)
    return out


def rk3_step_checked(y, t, dt, rhs):
    out = rk3_step(y, t, dt, rhs)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"non-finite RK3 update from state {np.asarray(y).tolist()} at t={t}")
    return out


# --- velocity -------------------------------------------------------------------------


def _field_gradient_term(problem: ProblemSpec, r: Realization, K, x):
    """sum_ij dq_i/dz_j dz_j/dx_i; fields vary along x1 only."""
    if problem.flux_dz is None or not r.fields:
        return np.zeros(np.shape(K))
    parts = problem.flux_dz(K, x, r)
    total = np.zeros(np.shape(K))
    for name, dq in parts.items():
        gf = r.fields.get(name)
        if gf is None:
            continue
        total = total + dq[0] * randfield.gradient(gf, x[0])
    return total


def velocity_arrays(problem: ProblemSpec, r: Realization, x, K, t):
    """State-form characteristic velocity for batched points.

    x has shape (dim, n), K shape (n,). Returns (vx (dim, n), vK (n,)).
    """
    vx = problem.flux_dK(K, x, r)
    vK = problem.source(x, t, r) - _field_gradient_term(problem, r, K, x)
    return vx, np.broadcast_to(vK, np.shape(K)).astype(float)


def velocity(problem: ProblemSpec, r: Realization, point: CharPoint) -> VelocityEval:
    if point.K < problem.K_floor:
        raise SingularityError(f"K={point.K} below K floor {problem.K_floor}")
    x = np.array(point.x[: problem.dim], dtype=float)[:, None]
    K = np.array([point.K])
    if problem.form == "flux":
        # celerity dx/dt and dQ/dt = S dx/dt
        cel = 1.0 / problem.dtdx(K, x, r)
        vx = np.zeros(3)
        vx[0] = cel[0]
        vK = float(problem.source(x, point.t, r)[0] * cel[0])
        return VelocityEval(tuple(vx), vK)
    vx, vK = velocity_arrays(problem, r, x, K, point.t)
    full = np.zeros(3)
    full[: problem.dim] = vx[:, 0]
    return VelocityEval(tuple(float(v) for v in full), float(vK[0]))


# --- generic batched backward integrator ---------------------------------------------


def _integrate_back(rhs, s0: float, y0: np.ndarray, h: float, s_end: float, margins, end_code: int):
    """Integrate dy/ds = rhs(y, s) from s0 down to s_end for a batch of columns.

    ``margins(y)`` returns an (n_events, n) array whose row e is negative once
    event code e has fired; non-finite states count as event 2 (K floor).
    Returns (y_foot, s_foot, code) per column. Crossings are located on the
    sub-step to 1e-10 h; a crossing within that tolerance of s_end is reported
    as the end event.
    """
    y = np.array(y0, dtype=float, copy=True)
    n = y.shape[1]
    s_foot = np.full(n, np.nan)
    code = np.full(n, -1, dtype=int)
    y_foot = y.copy()

    start = _event_codes(margins(y), y)
    done = start >= 0
    code[done] = start[done]
    s_foot[done] = s0
    y_foot[:, done] = y[:, done]
    s = s0
    tol = 1e-10 * h
    steps = 0
    pending = []
    while not np.all(done):
        if s - s_end <= 1e-14 * max(1.0, abs(s0)):
            act = ~done
            y_foot[:, act] = y[:, act]
            s_foot[act] = s_end
            code[act] = end_code
            break
        steps += 1
        if steps > MAX_STEPS:
            raise DivergenceError(f"characteristic tracing exceeded {MAX_STEPS} steps")
        hk = min(h, s - s_end)
        last = (s - hk - s_end) <= 1e-14 * max(1.0, abs(s0))
        act = np.flatnonzero(~done)
        ya = y[:, act]
        with np.errstate(all="ignore"):
            yn = rk3_step(ya, s, -hk, lambda yy, ss: rhs(yy, ss, act))
        mn = margins(yn)
        ev = _event_codes(mn, yn)
        hit = ev >= 0
        if np.any(hit):
            # crossings are located together after the sweep: one batched
            # root-find is far cheaper than one per step
            fired = np.where(np.isnan(mn[:, hit]), -np.inf, mn[:, hit]) < 0
            fired[2] |= ~np.all(np.isfinite(yn[:, hit]), axis=0)
            nh = int(hit.sum())
            pending.append((act[hit], ya[:, hit], np.full(nh, s), np.full(nh, hk), fired, ev[hit], np.full(nh, last)))
            done[act[hit]] = True
        keep = act[~hit]
        y[:, keep] = yn[:, ~hit]
        s = s - hk
    if pending:
        idx, ya, ss, hks, fired, ev, last = (np.concatenate(c, axis=-1) for c in zip(*pending))
        tau, yc, ec = _locate(rhs, margins, ya, ss, hks, idx, tol, fired)
        ec = np.where(ec < 0, ev, ec)
        ec = np.where(last & (tau >= hks - tol), end_code, ec)
        y_foot[:, idx] = yc
        s_foot[idx] = ss - tau
        code[idx] = ec
    return y_foot, s_foot, code


def _event_codes(m, y):
    m = np.where(np.isnan(m), -np.inf, m)
    bad = ~np.all(np.isfinite(y), axis=0)
    m[2, bad] = -np.inf
    fired = m < 0
    code = np.where(fired.any(axis=0), np.argmax(fired, axis=0), -1)
    return code


def _margin_of(m, y, rows):
    """Smallest margin among the events flagged in ``rows`` (bool, (3, n)).

    Non-finite states count as crossed.
    """
    m = np.where(np.isnan(m), -np.inf, m)
    m[2, ~np.all(np.isfinite(y), axis=0)] = -np.inf
    return np.where(rows, m, np.inf).min(axis=0)


def _locate(rhs, margins, yh, s, hk, idx, tol, rows):
    """Sub-step tau in (0, hk] at which each column first fires an event.

    ``s`` and ``hk`` may be per-column arrays.

    Illinois regula falsi on the smallest margin among events seen at the full step, with bisection when a
    trial state is non-finite. Returns (tau, state at tau, event code).
    """
    n = idx.size
    lo = np.zeros(n)
    hi = np.array(np.broadcast_to(hk, (n,)), dtype=float)
    f_lo = _margin_of(margins(yh), yh, rows)
    with np.errstate(all="ignore"):
        y_hi = _rk3_varstep(rhs, yh, s, -hi, idx)
    f_hi = _margin_of(margins(y_hi), y_hi, rows)
    y_lo = yh.copy()
    last = np.zeros(n, dtype=int)  # +1: hi replaced last, -1: lo replaced last
    open_ = hi - lo > tol
    for _ in range(200):
        if not np.any(open_):
            break
        ok = np.isfinite(f_hi) & (f_lo > f_hi)
        with np.errstate(all="ignore"):
            mid = np.where(ok, lo + (hi - lo) * f_lo / (f_lo - f_hi), 0.5 * (lo + hi))
        mid = np.where(np.isfinite(mid) & (mid > lo) & (mid < hi), mid, 0.5 * (lo + hi))
        with np.errstate(all="ignore"):
            ym = _rk3_varstep(rhs, yh, s, -mid, idx)
        fm = _margin_of(margins(ym), ym, rows)
        crossed = fm <= 0
        upd_hi = open_ & crossed
        upd_lo = open_ & ~crossed
        # Illinois: halve the retained endpoint value on repeated sides
        f_lo = np.where(upd_hi & (last == 1), 0.5 * f_lo, f_lo)
        f_hi = np.where(upd_lo & (last == -1) & np.isfinite(f_hi), 0.5 * f_hi, f_hi)
        hi = np.where(upd_hi, mid, hi)
        f_hi = np.where(upd_hi, fm, f_hi)
        y_hi[:, upd_hi] = ym[:, upd_hi]
        lo = np.where(upd_lo, mid, lo)
        f_lo = np.where(upd_lo, fm, f_lo)
        y_lo[:, upd_lo] = ym[:, upd_lo]
        last = np.where(upd_hi, 1, np.where(upd_lo, -1, last))
        on_surface = upd_hi & np.isfinite(fm) & (fm > -1e-13)
        open_ = open_ & ~on_surface & (hi - lo > tol)
    finite = np.all(np.isfinite(y_hi), axis=0)
    yc = np.where(finite, y_hi, y_lo)
    tau = np.where(finite, hi, lo)
    code = _event_codes(margins(y_hi), y_hi)
    return tau, yc, code


def _rk3_varstep(rhs, y, s, dts, idx):
    """RK3 with a different (negative) step per column."""
    k0 = rhs(y, s, idx)
    y1 = y + dts * k0
    y2 = 0.75 * y + 0.25 * y1 + 0.25 * dts * rhs(y1, s + dts, idx)
    return y / 3 + 2 / 3 * y2 + 2 / 3 * dts * rhs(y2, s + 0.5 * dts, idx)


# --- state-form and flux-form tracers --------------------------------------------------


def trace_back_many(problem: ProblemSpec, r: Realization, x, K, t: float, dt: float):
    """Trace a batch of characteristics backward from time t.

    x: (dim, n) positions (for flux-form problems the x-step is ``dt``),
    K: (n,) state values. Returns (x_foot (dim, n), K_foot, t_foot, kind codes)
    with codes 0 initial plane, 1 spatial boundary, 2 K floor.
    """
    if not t > 0:
        raise ValueError("query time must be positive")
    if not dt > 0:
        raise ValueError("step must be positive")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    K = np.atleast_1d(np.asarray(K, dtype=float))
    x = np.broadcast_to(x, (problem.dim, K.size)).copy()
    if problem.form == "flux":
        return _trace_flux(problem, r, x, K, t, dt)

    dim = problem.dim
    lo, hi = problem.lo[:, None], problem.hi[:, None]
    span = problem.hi - problem.lo
    eps = 1e-12 * np.max(span)

    def rhs(y, tt, idx):
        with np.errstate(all="ignore"):
            vx, vK = velocity_arrays(problem, r, y[:dim], y[dim], tt)
        return np.vstack([vx, vK[None, :]])

    def margins(y):
        m = np.full((3, y.shape[1]), np.inf)
        xs = y[:dim]
        if problem.periodic:
            y[:dim] = lo + np.mod(xs - lo, span[:, None])
        else:
            m[1] = np.min(np.minimum(xs - lo, hi - xs), axis=0) + eps
        with np.errstate(invalid="ignore"):
            m[2] = y[dim] - problem.K_floor if np.isfinite(problem.K_floor) else np.inf
        return m

    y0 = np.vstack([x, K[None, :]])
    yf, tf, code = _integrate_back(rhs, t, y0, dt, 0.0, margins, end_code=0)
    xf = np.clip(yf[:dim], lo, hi)
    return xf, yf[dim], tf, code


def _trace_flux(problem: ProblemSpec, r: Realization, x, Q, t, dx):
    """Flux form: parametrize by x, state (t, Q); dt/dx from the problem, dQ/dx = S."""
    x0 = float(x[0, 0])
    if not np.all(x[0] == x0):
        raise ValueError("flux-form batches must share one x")

    floor = problem.K_floor if problem.K_floor > 0 else 1e-12

    def rhs(y, xx, idx):
        xa = np.full((1, y.shape[1]), xx)
        # keep the celerity finite on stages that overshoot the floor; such
        # columns are flagged by the floor margin anyway
        with np.errstate(all="ignore"):
            q = np.maximum(y[1], floor)
            return np.vstack([problem.dtdx(q, xa, r), problem.source(xa, y[0], r)])

    def margins(y):
        m = np.full((3, y.shape[1]), np.inf)
        m[0] = y[0]
        m[2] = y[1] - problem.K_floor
        return m

    y0 = np.vstack([np.full(Q.size, float(t)), Q])
    yf, xf, code = _integrate_back(rhs, x0, y0, dx, problem.lo[0], margins, end_code=1)
    tf = np.maximum(yf[0], 0.0)
    return xf[None, :], yf[1], tf, code


def trace_back(problem: ProblemSpec, r: Realization, query: CharPoint, dt: float) -> FootPoint:
    x = np.array(query.x[: problem.dim])[:, None]
    xf, Kf, tf, code = trace_back_many(problem, r, x, [query.K], query.t, dt)
    loc = CharPoint.make(xf[:, 0], Kf[0], tf[0])
    return FootPoint(loc, _KIND_CODES[int(code[0])])


def pi_from_feet(problem: ProblemSpec, r: Realization, xf, Kf, tf, code) -> np.ndarray:
    out = np.zeros(Kf.size)
    m0 = code == 0
    if np.any(m0):
        out[m0] = heaviside(Kf[m0] - problem.ic(xf[:, m0], r))
    m1 = code == 1
    if np.any(m1):
        out[m1] = heaviside(Kf[m1] - problem.bc(xf[:, m1], tf[m1], r))
    return out


def pi_values(problem: ProblemSpec, r: Realization, x, t: float, K, dt: float) -> np.ndarray:
    """Pi at (x, t) for every K (batched)."""
    K = np.atleast_1d(np.asarray(K, dtype=float))
    if problem.shock:
        return evaluate_pi_burgers_many(r, float(np.ravel(x)[0]), t, K, dt)
    feet = trace_back_many(problem, r, np.reshape(np.asarray(x, float), (problem.dim, -1)), K, t, dt)
    return pi_from_feet(problem, r, *feet)


def evaluate_pi(problem: ProblemSpec, r: Realization, query: CharPoint, dt: float) -> float:
    x = np.array(query.x[: problem.dim])[:, None]
    return float(pi_values(problem, r, x, query.t, [query.K], dt)[0])


def solve_pi_profile(problem: ProblemSpec, r: Realization, x, t: float, K_grid, dt: float) -> PiSolution:
    K_grid = np.asarray(K_grid, dtype=float)
    if np.any(np.diff(K_grid) <= 0):
        raise ValueError("K grid must be strictly increasing")
    if np.any(K_grid < problem.K_floor):
        raise ValueError("K grid extends below the K floor")
    x = np.reshape(np.asarray(x, dtype=float), (problem.dim, 1))
    vals = pi_values(problem, r, x, t, K_grid, dt)
    return PiSolution(tuple(x[:, 0]), float(t), K_grid, vals)


def step_locations(problem: ProblemSpec, r: Realization, xs, t: float, dt: float, tol: float = 1e-12, bracket=None):
    """Upper edge of the Pi = 0 set for each query position, by batched multisection.

    xs has shape (dim, n). ``bracket`` defaults to (K_floor, K_max), with an
    unbounded floor replaced by -K_max.
    """
    xs = np.reshape(np.asarray(xs, dtype=float), (problem.dim, -1))
    n = xs.shape[1]
    if bracket is None:
        lo0 = problem.K_floor if np.isfinite(problem.K_floor) else -problem.K_max
        bracket = (lo0, problem.K_max)
    lo = np.full(n, float(bracket[0]))
    hi = np.full(n, float(bracket[1]))
    if problem.form == "flux":
        out = np.empty(n)
        for j in range(n):
            out[j] = _bisect_flux(problem, r, xs[:, j], t, dt, lo[j], hi[j], tol)
        return out
    # multisection: every round traces n_sub K values per query in one batch
    n_sub = 32
    frac = np.arange(1, n_sub + 1) / (n_sub + 1)
    while np.any(hi - lo > tol * np.maximum(1.0, np.abs(hi))):
        Ks = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        xq = np.repeat(xs, n_sub, axis=1)
        zero = pi_values(problem, r, xq, t, Ks.ravel(), dt).reshape(n, n_sub) < 1
        # keep the sub-interval above the last Pi = 0 sample, so isolated spurious
        # ones below the step (coarse steps near a singular speed) are skipped
        last = np.where(zero.any(axis=1), n_sub - 1 - np.argmax(zero[:, ::-1], axis=1), -1)
        rows = np.arange(n)
        new_lo = np.where(last >= 0, Ks[rows, np.maximum(last, 0)], lo)
        new_hi = np.where(last < n_sub - 1, Ks[rows, np.minimum(last + 1, n_sub - 1)], hi)
        lo, hi = new_lo, new_hi
    return 0.5 * (lo + hi)


def _bisect_flux(problem, r, x, t, dt, lo, hi, tol):
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if pi_values(problem, r, x[:, None], t, [mid], dt)[0] >= 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# --- Burgers shock fitting -----------------------------------------------------------


@dataclass(frozen=True)
class ShockTrajectory:
    z: float
    t_break: float
    times: np.ndarray
    positions: np.ndarray

    def at(self, t: float) -> float | None:
        if t < self.t_break:
            return None
        return float(np.interp(t, self.times, self.positions))


def _char_map(x0, z, t):
    return x0 + 2 * z * np.sin(PI * x0) * t


def _root(f, a, b, tol=1e-14):
    fa = f(a)
    fb = f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise FloatingPointError(f"characteristic inversion failed to bracket on [{a}, {b}]")
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = f(m)
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
        if b - a < tol:
            break
    return 0.5 * (a + b)


_SCAN = np.linspace(0.0, 1.0, 4001)


def _shock_feet(z, t, xs):
    """Outermost feet of the characteristics that reach x_s at time t from each side."""
    left = _SCAN
    gl = _char_map(left, z, t) - xs
    il = np.flatnonzero(np.sign(gl[:-1]) != np.sign(gl[1:]))
    if il.size == 0:
        raise FloatingPointError("left shock state inversion failed to bracket")
    j = il[0]
    x0l = _root(lambda u: _char_map(u, z, t) - xs, left[j], left[j + 1])
    right = 1.0 + _SCAN
    gr = _char_map(right, z, t) - xs
    ir = np.flatnonzero(np.sign(gr[:-1]) != np.sign(gr[1:]))
    if ir.size == 0:
        raise FloatingPointError("right shock state inversion failed to bracket")
    j = ir[-1]
    x0r = _root(lambda u: _char_map(u, z, t) - xs, right[j], right[j + 1])
    return x0l, x0r


def burgers_shock_ode(r: Realization | float, t_final: float, dt: float) -> ShockTrajectory:
    """Shock path for k_t + (k^2)_x = 0, k0 = z sin(pi x), by Rankine-Hugoniot.

    dx_s/dt = k_L + k_R, starting at the breaking point x = 1 at t_b = 1/(2 pi z),
    with one-sided states from characteristic inversion.
    """
    z = r if isinstance(r, (int, float)) else r.scalars["z"]
    tb = 1.0 / (2 * PI * z)
    if t_final <= tb:
        return ShockTrajectory(z, tb, np.array([tb]), np.array([1.0]))

    def speed(xs, t):
        if t <= tb * (1 + 1e-12):
            return 0.0 * xs
        x0l, x0r = _shock_feet(z, t, float(xs))
        return z * np.sin(PI * x0l) + z * np.sin(PI * x0r) + 0.0 * xs

    times = [tb]
    pos = [1.0]
    t, xs = tb, np.array(1.0)
    while t < t_final - 1e-14:
        h = min(dt, t_final - t)
        xs = rk3_step(xs, t, h, speed)
        t += h
        times.append(t)
        pos.append(float(xs))
    return ShockTrajectory(z, tb, np.array(times), np.array(pos))


def burgers_state(z: float, x: float, t: float, shock: ShockTrajectory | None = None) -> float:
    """k(x, t) from characteristics that have not entered the shock."""
    xs = shock.at(t) if shock is not None else None
    x = float(np.mod(x, 2.0))
    if xs is None:
        x0 = _root(lambda u: _char_map(u, z, t) - x, x - 2 * abs(z) * t - 1e-9, x + 2 * abs(z) * t + 1e-9)
        return z * math.sin(PI * x0)
    x0l, x0r = _shock_feet(z, t, xs)
    if x < xs:
        x0 = _root(lambda u: _char_map(u, z, t) - x, 0.0, x0l)
    else:
        x0 = _root(lambda u: _char_map(u, z, t) - x, x0r, 2.0)
    return z * math.sin(PI * x0)


def evaluate_pi_burgers_many(r: Realization, x: float, t: float, K, dt: float) -> np.ndarray:
    z = r.scalars["z"]
    shock = burgers_shock_ode(z, t, dt)
    k = burgers_state(z, x, t, shock)
    return heaviside(np.asarray(K, dtype=float) - k)


def evaluate_pi_burgers(r: Realization, query: CharPoint, dt: float) -> float:
    return float(evaluate_pi_burgers_many(r, query.x[0], query.t, [query.K], dt)[0])
