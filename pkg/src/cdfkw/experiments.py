"""Experiment configs and the batch pipelines behind the command line.

Realizations are processed in fixed blocks of ``BLOCK`` consecutive indices.
Blocks go to a process pool and come back keyed by their first index, so the
arrays fed to every reduction are the same whatever the worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import platform
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .characteristics import (
    DivergenceError,
    SingularityError,
    heaviside,
    pi_values,
    solve_pi_profile,
    step_locations,
)
from .ensemble import (
    EmpiricalCDF,
    convergence_table,
    empirical_cdf_from_samples,
    estimate_cdf_mc,
    estimate_cdf_weighted,
    relative_error,
    rms_error,
    sampling_oracle,
    write_cdf_csv,
    write_convergence_csv,
)
from .problems import (
    CATALOG,
    coupled_exact,
    get_problem,
    make_coupled,
    make_saint_venant,
    recombine_pi,
)
from .randfield import Realization, make_realization
from .weno import sample_at, solve_mcs

log = logging.getLogger(__name__)

BLOCK = 50
FAILURE_LIMIT = 0.01
# CFL violations are configuration problems (dt too large), not per-realization failures
NUMERIC_ERRORS = (FloatingPointError, ArithmeticError, DivergenceError, SingularityError)


class ConfigError(ValueError):
    """Invalid configuration; the message carries file and line."""


class NumericFailure(RuntimeError):
    pass


# --- configuration ----------------------------------------------------------------------

PROBLEMS = ("test1d", "test1d-stochastic", "3d", "coupled", "burgers", "saint-venant")
SWEEP_PARAMS = ("M", "dt_char", "dx")


@dataclass(frozen=True)
class Numerics:
    dt_char: float = 0.01
    n_x: int = 200
    dt_weno: float = 1e-3
    n_points: int = 101


@dataclass(frozen=True)
class Reference:
    kind: str = "none"  # none | oracle | mcs
    M: int = 1000
    seed: int | None = None
    n_draws: int = 10**6


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    problem_params: dict = field(default_factory=dict)
    method: str = "cdf"
    M: int = 100
    master_seed: int = 0
    query_x: tuple = (0.0,)
    query_t: float = 1.0
    K_grid: tuple = (0.0, 1.0, 101)
    numerics: Numerics = Numerics()
    estimator: str = "mc"
    sweep_param: str | None = None
    sweep_values: tuple = ()
    reference: Reference = Reference()
    output_dir: str = "out"
    bench_realizations: int = 5
    bench_cases: tuple = ("zero", "one", "x")

    def k_values(self) -> np.ndarray:
        lo, hi, n = self.K_grid
        return np.linspace(lo, hi, int(n))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["query_x"] = list(self.query_x)
        d["K_grid"] = list(self.K_grid)
        d["sweep_values"] = list(self.sweep_values)
        d["bench_cases"] = list(self.bench_cases)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    d["numerics"] = Numerics(**d.get("numerics", {}))
    d["reference"] = Reference(**d.get("reference", {}))
    for key in ("query_x", "K_grid", "sweep_values", "bench_cases"):
        if key in d:
            d[key] = tuple(d[key])
    return ExperimentConfig(**d)


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def load_config(path, seed_override: int | None = None, out_override: str | None = None) -> ExperimentConfig:
    """Parse and validate a JSON experiment file.

    Errors are raised as ConfigError with ``path:line: message``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None

    def fail(key, msg):
        raise ConfigError(f"{path}:{_line_of(text, key)}: {msg}")

    return parse_config(raw, fail, seed_override, out_override)


def parse_config(raw: Any, fail=None, seed_override: int | None = None, out_override: str | None = None) -> ExperimentConfig:
    if fail is None:
        def fail(key, msg):
            raise ConfigError(f"{key}: {msg}")

    if not isinstance(raw, dict):
        fail("", "top level must be an object")
    known = {
        "problem", "method", "M", "master_seed", "query", "K_grid", "numerics", "estimator",
        "sweep", "reference", "output_dir", "benchmark",
    }
    for key in raw:
        if key not in known:
            fail(key, f"unknown key {key!r}")

    prob = raw.get("problem")
    if isinstance(prob, str):
        prob = {"name": prob}
    if not isinstance(prob, dict) or prob.get("name") not in PROBLEMS:
        fail("problem", f"problem.name must be one of {', '.join(PROBLEMS)}")
    name = prob["name"]
    params = {k: v for k, v in prob.items() if k != "name"}
    if name == "saint-venant":
        if params.get("source_case", "zero") not in ("zero", "one", "x"):
            fail("source_case", "source_case must be zero, one or x")
        if not _positive(params.get("lambda", 0.2)):
            fail("lambda", "lambda must be > 0")
    if name == "coupled" and params.get("component", 1) not in (1, 2):
        fail("component", "component must be 1 or 2")

    method = raw.get("method", "cdf")
    if method not in ("cdf", "mcs", "both"):
        fail("method", "method must be cdf, mcs or both")
    M = raw.get("M", 100)
    if not isinstance(M, int) or isinstance(M, bool) or M < 1:
        fail("M", "M must be an integer >= 1")
    seed = raw.get("master_seed", 0) if seed_override is None else seed_override
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        fail("master_seed", "master_seed must be an unsigned 64-bit integer")

    query = raw.get("query", {})
    qx = query.get("x", [0.0]) if isinstance(query, dict) else None
    qt = query.get("t", 1.0) if isinstance(query, dict) else None
    if isinstance(qx, (int, float)):
        qx = [qx]
    if not isinstance(qx, list) or not all(isinstance(v, (int, float)) for v in qx) or not _positive(qt):
        fail("query", "query needs x (number or list) and t > 0")
    problem = _build_problem(name, params)
    dim = 1 if name == "coupled" else problem.dim
    if len(qx) != dim:
        fail("query", f"query.x needs {dim} coordinate(s)")
    lo, hi = problem.lo, problem.hi
    if any(not (a <= v <= b) for v, a, b in zip(qx, lo, hi)):
        fail("query", "query.x lies outside the problem domain")

    kg = raw.get("K_grid", {})
    try:
        kmin, kmax, nk = float(kg["min"]), float(kg["max"]), int(kg["n"])
    except (KeyError, TypeError, ValueError):
        fail("K_grid", "K_grid needs numeric min, max and integer n")
    if not (kmax > kmin and nk >= 2):
        fail("K_grid", "K_grid needs max > min and n >= 2")
    if kmin < problem.K_floor:
        fail("K_grid", f"K_grid.min is below the K floor {problem.K_floor}")

    num = raw.get("numerics", {})
    if not isinstance(num, dict):
        fail("numerics", "numerics must be an object")
    try:
        numerics = Numerics(
            dt_char=float(num.get("dt_char", 0.01)),
            n_x=int(num.get("n_x", 200)),
            dt_weno=float(num.get("dt_weno", 1e-3)),
            n_points=int(num.get("n_points", 101)),
        )
    except (TypeError, ValueError):
        fail("numerics", "numerics entries must be numbers")
    if not (numerics.dt_char > 0 and numerics.dt_weno > 0 and numerics.n_x >= 5 and numerics.n_points >= 2):
        fail("numerics", "numerics need dt_char > 0, dt_weno > 0, n_x >= 5, n_points >= 2")

    estimator = raw.get("estimator", "mc")
    if estimator not in ("mc", "weighted"):
        fail("estimator", "estimator must be mc or weighted")

    sweep_param, sweep_values = None, ()
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or sweep.get("param") not in SWEEP_PARAMS:
            fail("sweep", f"sweep.param must be one of {', '.join(SWEEP_PARAMS)}")
        vals = sweep.get("values")
        if not isinstance(vals, list) or not vals or not all(isinstance(v, (int, float)) and v > 0 for v in vals):
            fail("sweep", "sweep.values must be a non-empty list of positive numbers")
        if len(set(vals)) != len(vals):
            fail("sweep", "sweep.values contains duplicates")
        if sweep["param"] == "M" and not all(isinstance(v, int) for v in vals):
            fail("sweep", "M sweep values must be integers")
        sweep_param, sweep_values = sweep["param"], tuple(vals)

    ref = raw.get("reference", {"kind": "none"})
    if not isinstance(ref, dict) or ref.get("kind", "none") not in ("none", "oracle", "mcs"):
        fail("reference", "reference.kind must be none, oracle or mcs")
    reference = Reference(
        kind=ref.get("kind", "none"),
        M=int(ref.get("M", 1000)),
        seed=ref.get("seed"),
        n_draws=int(ref.get("n_draws", 10**6)),
    )
    if reference.kind == "oracle" and name not in ("test1d-stochastic", "3d", "coupled"):
        fail("reference", f"no exact-solution oracle for problem {name}")
    if reference.M < 1 or reference.n_draws < 1:
        fail("reference", "reference sizes must be >= 1")

    bench = raw.get("benchmark", {})
    cases = tuple(bench.get("cases", ["zero", "one", "x"]))
    if not set(cases) <= {"zero", "one", "x"}:
        fail("benchmark", "benchmark.cases must be drawn from zero, one, x")
    nb = int(bench.get("realizations", 5))
    if nb < 1:
        fail("benchmark", "benchmark.realizations must be >= 1")

    return ExperimentConfig(
        problem=name,
        problem_params=params,
        method=method,
        M=M,
        master_seed=int(seed),
        query_x=tuple(float(v) for v in qx),
        query_t=float(qt),
        K_grid=(kmin, kmax, nk),
        numerics=numerics,
        estimator=estimator,
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        reference=reference,
        output_dir=out_override or raw.get("output_dir", "out"),
        bench_realizations=nb,
        bench_cases=cases,
    )


def _positive(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _build_problem(name: str, params: dict):
    if name == "coupled":
        return make_coupled()[0]
    if name == "saint-venant":
        return make_saint_venant(params.get("source_case", "zero"), params.get("lambda", 0.2), params.get("n_cells", 100))
    return get_problem(name)


# --- per-problem kernels -----------------------------------------------------------------


class Study:
    """Problem objects rebuilt from a config (closures are not picklable, configs are)."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.name = cfg.problem
        if self.name == "coupled":
            self.pair = make_coupled()
            self.problem = self.pair[0]
        else:
            self.problem = _build_problem(self.name, cfg.problem_params)
        self.x = np.asarray(cfg.query_x, dtype=float)[:, None]
        self.t = cfg.query_t
        self.K = cfg.k_values()

    def realization(self, seed: int, i: int) -> Realization:
        p = self.problem
        return make_realization(seed, i, p.scalar_inputs, p.field_inputs)

    def cdf_row(self, r: Realization, dt: float | None = None) -> np.ndarray:
        dt = self.cfg.numerics.dt_char if dt is None else dt
        if self.name == "coupled":
            s1 = step_locations(self.pair[0], r, self.x, self.t, dt, tol=1e-10)
            s2 = step_locations(self.pair[1], r, self.x, self.t, dt, tol=1e-10)
            step = recombine_pi(s1, s2)[self.cfg.problem_params.get("component", 1) - 1][0]
            return heaviside(self.K - step)
        if self.problem.form == "flux":
            return solve_pi_profile(self.problem, r, self.x, self.t, self.K, dt).pi_values
        return pi_values(self.problem, r, self.x, self.t, self.K, dt)

    def direct_values(self, rs: list[Realization]) -> np.ndarray:
        """Direct per-realization state at the query point.

        One-dimensional problems use the WENO solver; 3D and coupled problems
        use their exact solutions (no direct multi-dimensional solver here).
        """
        if self.name == "3d":
            return np.array([self.problem.exact(self.x, self.t, r)[0] for r in rs])
        if self.name == "coupled":
            comp = self.cfg.problem_params.get("component", 1) - 1
            return np.array([coupled_exact(self.x[0, 0], self.t, r.scalars["z"])[comp] for r in rs])
        num = self.cfg.numerics
        xn, prof = solve_mcs(self.problem, rs, self.t, num.n_x, num.dt_weno)
        return sample_at(xn, prof, float(self.x[0, 0]))

    def oracle_draw(self):
        spec = self.problem.scalar_inputs["z"]
        x, t, name = self.x, self.t, self.name
        comp = self.cfg.problem_params.get("component", 1) - 1

        def draw(rng, n):
            z = rng.lognormal(spec.mu, spec.sigma, size=n)
            if name == "coupled":
                return coupled_exact(x[0, 0], t, z)[comp]
            if name == "3d":
                return z / 3 * np.sum(np.sin(np.pi * t * x[:, 0]))
            off = self.problem.params["offset"]
            return (z * np.sin(np.pi * (x[0, 0] + t)) + off) ** 2

        return draw


def _block_task(args):
    """Worker entry: (config dict, task, seed, start, stop) -> (start, values, z, errors)."""
    cfg_dict, task, seed, start, stop = args
    study = Study(config_from_dict(cfg_dict))
    rs = [study.realization(seed, i) for i in range(start, stop)]
    z = np.array([r.scalars.get("z", np.nan) for r in rs])
    errors: dict[int, str] = {}
    if task == "cdf":
        vals = np.full((len(rs), study.K.size), np.nan)
        for j, r in enumerate(rs):
            try:
                with np.errstate(all="ignore"):
                    vals[j] = study.cdf_row(r)
            except NUMERIC_ERRORS as exc:
                errors[r.index] = f"{type(exc).__name__}: {exc}"
        return start, vals, z, errors
    try:
        with np.errstate(all="ignore"):
            vals = study.direct_values(rs)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite direct solution")
    except NUMERIC_ERRORS:
        # isolate the offending realizations
        vals = np.full(len(rs), np.nan)
        for j, r in enumerate(rs):
            try:
                with np.errstate(all="ignore"):
                    v = study.direct_values([r])[0]
                if not np.isfinite(v):
                    raise FloatingPointError("non-finite direct solution")
                vals[j] = v
            except NUMERIC_ERRORS as exc:
                errors[r.index] = f"{type(exc).__name__}: {exc}"
    return start, vals, z, errors


@dataclass
class EnsembleResult:
    values: np.ndarray  # (M, N_K) Pi rows or (M,) direct samples, NaN where failed
    z: np.ndarray
    errors: dict

    def ok(self, m: int | None = None) -> np.ndarray:
        v = self.values[:m] if m is not None else self.values
        return np.all(np.isfinite(v.reshape(len(v), -1)), axis=1)


def run_ensemble(cfg: ExperimentConfig, task: str, seed: int, M: int, jobs: int = 1) -> EnsembleResult:
    blocks = [(cfg.to_dict(), task, seed, s, min(s + BLOCK, M)) for s in range(0, M, BLOCK)]
    if jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_block_task, blocks))
    else:
        parts = [_block_task(b) for b in blocks]
    parts.sort(key=lambda p: p[0])
    values = np.concatenate([p[1] for p in parts])
    z = np.concatenate([p[2] for p in parts])
    errors = {}
    for p in parts:
        errors.update(p[3])
    if len(errors) > FAILURE_LIMIT * M:
        first = min(errors)
        raise NumericFailure(
            f"{len(errors)} of {M} realizations failed ({task}); first at index {first}: {errors[first]}"
        )
    return EnsembleResult(values, z, errors)


def reduce_cdf(cfg: ExperimentConfig, study: Study, res: EnsembleResult, m: int) -> EmpiricalCDF:
    keep = res.ok(m)
    rows = res.values[:m][keep]
    weighted = cfg.estimator == "weighted"
    single = list(study.problem.scalar_inputs) == ["z"] and not study.problem.field_inputs
    if weighted and not single:
        log.warning("weighted estimator needs a single scalar input; using equal weights")
        weighted = False
    if weighted:
        return estimate_cdf_weighted(res.z[:m][keep], study.problem.scalar_inputs["z"].cdf, rows, study.K)
    return estimate_cdf_mc(rows, study.K)


def reduce_direct(study: Study, res: EnsembleResult, m: int) -> EmpiricalCDF:
    vals = res.values[:m]
    return empirical_cdf_from_samples(vals[np.isfinite(vals)], study.K)


def reference_cdf(cfg: ExperimentConfig, study: Study, jobs: int = 1, cache: dict | None = None) -> EmpiricalCDF | None:
    ref = cfg.reference
    seed = cfg.master_seed if ref.seed is None else int(ref.seed)
    if ref.kind == "none":
        return None
    if ref.kind == "oracle":
        return sampling_oracle(study.oracle_draw(), study.K, ref.n_draws, seed=seed)
    if cache is not None and "mcs" in cache and seed == cfg.master_seed and len(cache["mcs"].values) >= ref.M:
        res = cache["mcs"]
    else:
        res = run_ensemble(cfg, "mcs", seed, ref.M, jobs)
    return reduce_direct(study, res, ref.M)


# --- outputs ------------------------------------------------------------------------------


def _write_manifest(out: Path, cfg: ExperimentConfig, command: str, files: list[str]) -> None:
    import scipy

    entries = {}
    for f in files:
        entries[f] = hashlib.sha256((out / f).read_bytes()).hexdigest()
    manifest = {
        "command": command,
        "config_sha256": cfg.digest(),
        "master_seed": cfg.master_seed,
        "config": cfg.to_dict(),
        "versions": {
            "cdfkw": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "files": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_failures(out: Path, results: dict) -> list[str]:
    rows = sorted((i, task, msg) for task, res in results.items() for i, msg in res.errors.items())
    if not rows:
        return []
    with open(out / "failures.csv", "w") as fh:
        fh.write("realization,task,error\n")
        for i, task, msg in rows:
            fh.write(f"{i},{task},\"{msg.replace(chr(34), chr(39))}\"\n")
    return ["failures.csv"]


def run(cfg: ExperimentConfig, jobs: int = 1) -> Path:
    """Ensemble run: cdf.csv, plus error.csv when both methods and a reference are configured."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    study = Study(cfg)
    Ms = sorted(cfg.sweep_values) if cfg.sweep_param == "M" else [cfg.M]
    M = max(Ms)
    results: dict[str, EnsembleResult] = {}
    cols = {}
    if cfg.method in ("cdf", "both"):
        results["cdf"] = run_ensemble(cfg, "cdf", cfg.master_seed, M, jobs)
        cols["F_cdf"] = reduce_cdf(cfg, study, results["cdf"], M).F_values
    if cfg.method in ("mcs", "both"):
        results["mcs"] = run_ensemble(cfg, "mcs", cfg.master_seed, M, jobs)
        cols["F_mcs"] = reduce_direct(study, results["mcs"], M).F_values
    write_cdf_csv(out / "cdf.csv", study.K, cols)
    files = ["cdf.csv"]

    if cfg.method == "both" and cfg.reference.kind != "none":
        ref = reference_cdf(cfg, study, jobs, cache=results)
        write_cdf_csv(out / "reference.csv", study.K, {"F": ref.F_values})
        with open(out / "error.csv", "w") as fh:
            fh.write("M,eps_cdf,eps_mcs\n")
            for m in Ms:
                e_c = relative_error(reduce_cdf(cfg, study, results["cdf"], m), ref)
                e_m = relative_error(reduce_direct(study, results["mcs"], m), ref)
                fh.write(f"{m},{e_c!r},{e_m!r}\n")
        files += ["reference.csv", "error.csv"]
    files += _write_failures(out, results)
    _write_manifest(out, cfg, "run", files)
    return out


def _check_halvings(cfg: ExperimentConfig) -> None:
    v = list(cfg.sweep_values)
    for a, b in zip(v, v[1:]):
        ratio = a / b if cfg.sweep_param != "M" else b / a
        if not math.isclose(ratio, 2.0, rel_tol=1e-9):
            raise ConfigError(f"sweep values must be successive halvings (got {a} then {b})")


def convergence_errors(cfg: ExperimentConfig, jobs: int = 1) -> list[float]:
    study = Study(cfg)
    p = study.problem
    if cfg.sweep_param in ("dt_char", "dx"):
        if p.exact is None or p.scalar_inputs or p.field_inputs:
            raise ConfigError(f"{cfg.sweep_param} sweeps need a deterministic problem with an exact solution")
        r = Realization(0, cfg.master_seed)
        lo, hi = p.domain[0]
        eps = []
        for v in cfg.sweep_values:
            if cfg.sweep_param == "dt_char":
                xs = np.linspace(lo, hi, cfg.numerics.n_points)[None, :]
                num = step_locations(p, r, xs, cfg.query_t, v)
            else:
                n = int(round((hi - lo) / v))
                if not math.isclose(n * v, hi - lo, rel_tol=1e-9):
                    raise ConfigError(f"dx={v} does not divide the domain")
                x, prof = solve_mcs(p, [r], cfg.query_t, n, cfg.numerics.dt_weno)
                xs, num = x[None, :], prof[0]
            eps.append(rms_error(num, p.exact(xs, cfg.query_t, r)))
        return eps
    # M sweep: relative error of the CDF estimate against the reference
    if cfg.reference.kind == "none":
        raise ConfigError("an M sweep needs a reference")
    res = run_ensemble(cfg, "cdf", cfg.master_seed, max(cfg.sweep_values), jobs)
    ref = reference_cdf(cfg, study, jobs)
    return [relative_error(reduce_cdf(cfg, study, res, m), ref) for m in cfg.sweep_values]


def convergence(cfg: ExperimentConfig, jobs: int = 1) -> Path:
    if cfg.sweep_param is None:
        raise ConfigError("convergence needs a sweep")
    _check_halvings(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    eps = convergence_errors(cfg, jobs)
    write_convergence_csv(out / "convergence.csv", convergence_table(cfg.sweep_values, eps))
    _write_manifest(out, cfg, "convergence", ["convergence.csv"])
    return out


def time_realization(case: str, r_index: int, cfg: ExperimentConfig) -> tuple[float, float]:
    """Wall seconds for one Saint-Venant realization: (characteristics, WENO)."""
    lam = cfg.problem_params.get("lambda", 0.2)
    p = make_saint_venant(case, lam, cfg.problem_params.get("n_cells", 100))
    r = make_realization(cfg.master_seed, r_index, p.scalar_inputs, p.field_inputs)
    num = cfg.numerics
    x = np.asarray(cfg.query_x, dtype=float)[:, None]
    t0 = time.perf_counter()
    solve_pi_profile(p, r, x, cfg.query_t, cfg.k_values(), num.dt_char)
    t1 = time.perf_counter()
    xn, prof = solve_mcs(p, [r], cfg.query_t, num.n_x, num.dt_weno)
    sample_at(xn, prof, float(x[0, 0]))
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1


def benchmark(cfg: ExperimentConfig) -> tuple[Path, dict]:
    """timing.csv: per-realization seconds per method and case, then one mean-ratio row per case."""
    if cfg.problem != "saint-venant":
        raise ConfigError("benchmark runs on the saint-venant problem")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ratios = {}
    lines = ["realization,method,seconds"]
    for case in cfg.bench_cases:
        tc, tw = [], []
        for i in range(cfg.bench_realizations):
            a, b = time_realization(case, i, cfg)
            tc.append(a)
            tw.append(b)
            lines.append(f"{i},cdf/{case},{a:.6f}")
            lines.append(f"{i},mcs/{case},{b:.6f}")
        ratios[case] = float(np.mean(tw) / np.mean(tc))
        lines.append(f"mean,ratio/{case},{ratios[case]:.4f}")
    (out / "timing.csv").write_text("\n".join(lines) + "\n")
    _write_manifest(out, cfg, "benchmark", ["timing.csv"])
    return out, ratios


def list_problems() -> str:
    return "\n".join(f"{k:20s} {v}" for k, v in CATALOG.items())
