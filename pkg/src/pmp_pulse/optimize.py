"""Outer optimization: BFGS over the potential parameters, multi-start, crossing scans."""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoRealSolution, OptimizationFailed, PMPError
from .extremals import (
    integrate_detuning,
    phase_from_detuning,
    potential_from_asym,
    potential_from_sym,
    recover_invariants,
)
from .propagator import propagate_final
from .quantum import KET0
from .records import ExtremalRecord

log = logging.getLogger(__name__)

PARAM_NAMES = {
    "symmetric": ("delta0", "v0"),
    "asymmetric": ("delta_plus", "delta_minus", "v0"),
}

DEFAULT_GRIDS = {
    "symmetric": (np.linspace(0.5, 2.0, 8), np.linspace(-2.0, -0.2, 8)),
    "asymmetric": (np.linspace(0.3, 2.0, 5), np.linspace(-2.0, -0.3, 5), np.linspace(-2.0, -0.1, 5)),
}

PASS_FIDELITY = 0.999
ACCEPT_FIDELITY = 0.99


@dataclass
class BFGSResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    n_iter: int
    n_fev: int
    converged: bool
    message: str
    trace: list = field(default_factory=list, repr=False)


def fd_gradient(fun, x, f0=None, step=1e-6):
    """Central differences; one-sided where one neighbour is infeasible (inf)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    n_fev = 0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        fp, fm = fun(x + e), fun(x - e)
        n_fev += 2
        if np.isfinite(fp) and np.isfinite(fm):
            g[i] = (fp - fm) / (2 * step)
        else:
            if f0 is None:
                f0 = fun(x)
                n_fev += 1
            if np.isfinite(fp):
                g[i] = (fp - f0) / step
            elif np.isfinite(fm):
                g[i] = (f0 - fm) / step
            else:
                g[i] = np.nan
    return g, n_fev


def bfgs(fun, x0, grad=None, gtol=1e-8, max_iter=200, fd_step=1e-6, c1=1e-4, shrink=0.5,
         ftol=1e-15, max_backtrack=40, callback=None):
    """Minimize `fun` with inverse-Hessian BFGS and Armijo backtracking.

    Infinite objective values mark infeasible points and are rejected by the line
    search. Iteration stops on ||g||_inf < gtol, on a failed line search, or when the
    accepted decrease falls below ftol*(1 + |f|).
    """
    x = np.asarray(x0, dtype=float).copy()
    n_fev = 0

    def gradient(x, f):
        nonlocal n_fev
        if grad is not None:
            return np.asarray(grad(x), dtype=float)
        g, k = fd_gradient(fun, x, f, fd_step)
        n_fev += k
        return g

    f = fun(x)
    n_fev += 1
    if not np.isfinite(f):
        return BFGSResult(x, f, np.full_like(x, np.nan), 0, n_fev, False, "infeasible start")
    g = gradient(x, f)
    H = np.eye(x.size)
    trace = [(0, x.copy(), f)]
    message, converged = "max_iter reached", False
    it = 0
    for it in range(1, max_iter + 1):
        if not np.all(np.isfinite(g)):
            message = "gradient not finite"
            break
        if np.max(np.abs(g)) < gtol:
            message, converged = "gradient tolerance reached", True
            it -= 1
            break
        p = -H @ g
        slope = g @ p
        if slope >= 0:
            H = np.eye(x.size)
            p = -g
            slope = g @ p
        a = 1.0
        for _ in range(max_backtrack):
            x_new = x + a * p
            f_new = fun(x_new)
            n_fev += 1
            if np.isfinite(f_new) and f_new <= f + c1 * a * slope:
                break
            a *= shrink
        else:
            message = "line search failed"
            it -= 1
            break
        g_new = gradient(x_new, f_new)
        s, y = x_new - x, g_new - g
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        trace.append((it, x.copy(), f))
        if callback is not None:
            callback(it, x, f)
        sy = s @ y
        if sy > 1e-300:
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        if decrease <= ftol * (1 + abs(f)):
            message, converged = "objective change below ftol", np.max(np.abs(g)) < 1e-3
            break
    return BFGSResult(x, f, g, it, n_fev, converged, message, trace)


def build_potential(parametrization, params):
    if parametrization == "symmetric":
        return potential_from_sym(*params)
    if parametrization == "asymmetric":
        return potential_from_asym(*params)
    raise ValueError(f"unknown parametrization {parametrization!r}")


def evaluate(target, params, crossings, sign=1, dt=1e-3, parametrization=None):
    """Run the whole pipeline at one parameter point; returns (fidelity, curve, pulse)."""
    pot = build_potential(parametrization or target.parametrization, params)
    curve = integrate_detuning(pot, crossings, sign=sign, dt=dt)
    pulse = phase_from_detuning(curve)
    finals = [propagate_final(pulse, k, KET0) for k in range(1, target.n_tls + 1)]
    return target.fidelity(finals), curve, pulse


def make_objective(target, crossings, sign=1, dt=1e-3, parametrization=None):
    def objective(x):
        try:
            return -evaluate(target, tuple(x), crossings, sign, dt, parametrization)[0]
        except (PMPError, ValueError):
            return np.inf

    return objective


def default_grid(parametrization):
    axes = DEFAULT_GRIDS[parametrization]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _threads():
    try:
        return max(1, int(os.environ.get("PMP_PULSE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class StartResult:
    start: np.ndarray
    opt: BFGSResult
    fidelity: float
    T: float


def make_record(target, params, crossings, sign=1, dt=1e-3, parametrization=None, case=None):
    parametrization = parametrization or target.parametrization
    pot = build_potential(parametrization, params)
    fid, curve, pulse = evaluate(target, params, crossings, sign, dt, parametrization)
    try:
        inv = recover_invariants(pot)
    except NoRealSolution:
        inv = None
    names = PARAM_NAMES[parametrization]
    rec = ExtremalRecord(
        pulse=pulse,
        target=target,
        fidelity=float(fid),
        curve=curve,
        potential=pot,
        invariants=inv,
        params={n: float(v) for n, v in zip(names, params)},
        parametrization=parametrization,
        crossings=int(crossings),
        sign=int(sign),
        phi0=0.0,
        case=case,
    )
    return rec.rebuild_trajectories()


@dataclass
class SynthesisResult:
    record: ExtremalRecord
    starts: list
    best: StartResult

    def trace_rows(self, target, crossings, sign, dt, parametrization):
        rows = []
        for it, x, f in self.best.opt.trace:
            try:
                _, curve, _ = evaluate(target, tuple(x), crossings, sign, dt, parametrization)
                T = curve.T
            except (PMPError, ValueError):
                T = float("nan")
            rows.append((it, *x, -f, T))
        return rows


def synthesize(target, init=None, crossings=2, sign=1, dt=1e-3, grid=None, parametrization=None,
               max_iter=200, case=None):
    """Multi-start BFGS maximizing the fidelity over the potential parameters.

    Among the starts that reach F >= 0.999 the one with the shortest duration wins;
    otherwise the best fidelity is kept if it is at least 0.99.
    """
    parametrization = parametrization or target.parametrization
    if init is not None:
        starts = np.atleast_2d(np.asarray(init, dtype=float))
    else:
        starts = np.asarray(grid, dtype=float) if grid is not None else default_grid(parametrization)
    objective = make_objective(target, crossings, sign, dt, parametrization)

    def run(x0):
        opt = bfgs(objective, x0, max_iter=max_iter)
        fid = -opt.fun if np.isfinite(opt.fun) else 0.0
        T = np.nan
        if np.isfinite(opt.fun):
            T = evaluate(target, tuple(opt.x), crossings, sign, dt, parametrization)[1].T
        return StartResult(np.asarray(x0), opt, float(fid), float(T))

    n_threads = _threads()
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    passing = [r for r in results if r.fidelity >= PASS_FIDELITY]
    if passing:
        best = min(passing, key=lambda r: (round(r.T, 9), -r.fidelity))
    else:
        best = max(results, key=lambda r: r.fidelity)
        if best.fidelity < ACCEPT_FIDELITY:
            raise OptimizationFailed(
                f"best fidelity {best.fidelity:.6f} < {ACCEPT_FIDELITY} over {len(results)} starts "
                f"(crossings={crossings}, sign={sign})",
                best=best,
            )
    log.info("best start %s -> %s, F=%.10f, T=%.6f", best.start, best.opt.x, best.fidelity, best.T)
    rec = make_record(target, tuple(best.opt.x), crossings, sign, dt, parametrization, case)
    return SynthesisResult(rec, results, best)


def write_trace_csv(path, rows, n_params, header=None):
    cols = ["iter"] + [f"p{i + 1}" for i in range(n_params)] + ["fidelity", "T"]
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])


def scan_crossings(target, crossings_range=range(1, 7), signs=(1, -1), dt=1e-3, grid=None,
                   parametrization=None, max_iter=200):
    """Synthesize for every (crossings, sign); returns {crossings: best passing record}.

    The second value is the overall minimal-T passing record, or None when nothing
    reaches F >= 0.999.
    """
    per_count = {}
    for n in crossings_range:
        for s in signs:
            try:
                res = synthesize(target, crossings=n, sign=s, dt=dt, grid=grid,
                                 parametrization=parametrization, max_iter=max_iter)
            except OptimizationFailed:
                continue
            rec = res.record
            if rec.fidelity < PASS_FIDELITY:
                continue
            if n not in per_count or rec.T < per_count[n].T:
                per_count[n] = rec
    best = min(per_count.values(), key=lambda r: r.T) if per_count else None
    return per_count, best
