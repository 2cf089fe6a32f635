"""Comparison solvers for ML tomography: RrhoR, diluted RrhoR and Frank-Wolfe.

All three write the same :class:`~egarmijo.solver.SolveTrace` as the EG
solver. The ``alpha`` column holds the step parameter of each method (the
dilution ``lambda`` for diluted RrhoR, the convex weight ``theta`` for
Frank-Wolfe, ``nan`` for plain RrhoR).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import BacktrackLimitExceeded, NotPSD, OutOfDomain, SingularDensity, SolverError
from .geometry import DensityMatrix, as_density, assert_density, maximally_mixed, relative_entropy
from .hermitian import hermitize
from .losses import LossModel
from .solver import ArmijoConfig, SolveTrace, StopRule, _safe_evaluate, at_rounding_floor, optimality_gap

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class BaselineConfig:
    kind: str = "frank-wolfe"
    interval: Tuple[float, float] = (0.0, 1.0)
    tol: float = 1e-6
    step_rule: str = "armijo"
    armijo: ArmijoConfig = field(default_factory=lambda: ArmijoConfig(alpha0=1.0))

    def __post_init__(self):
        lo, hi = self.interval
        if lo < 0 or hi <= lo:
            raise ValueError(f"bad line-search interval {self.interval}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("armijo", "open-loop"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


def _psd_direction(g: np.ndarray) -> np.ndarray:
    R = -np.asarray(g)
    lam = np.linalg.eigvalsh(R)[0]
    if lam < -1e-10:
        raise NotPSD(
            f"-f'(rho) has eigenvalue {lam:.3e} < 0; RrhoR iterations need a loss whose "
            "negative gradient is positive semi-definite (e.g. the ML log-likelihood)"
        )
    return R


def _normalized(X: np.ndarray) -> DensityMatrix:
    X = hermitize(X)
    return DensityMatrix(X / np.trace(X).real)


def rpr_step(loss: LossModel, rho, g: Optional[np.ndarray] = None) -> DensityMatrix:
    """Undiluted RrhoR update ``R rho R / tr(R rho R)`` with ``R = -f'(rho)``."""
    rho = as_density(rho)
    if g is None:
        g = loss.gradient(rho)
    R = _psd_direction(g)
    return _normalized(R @ rho.matrix @ R)


def _dilute(rho: np.ndarray, R: np.ndarray, lam: float) -> DensityMatrix:
    A = np.eye(len(R)) + lam * R
    return _normalized(A @ rho @ A)


def golden_section(fn: Callable[[float], float], a: float, b: float, tol: float) -> float:
    """Minimize a unimodal ``fn`` on ``[a, b]`` until the bracket is narrower than ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def diluted_rpr_step(
    loss: LossModel,
    rho,
    interval: Tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-6,
    f_rho: Optional[float] = None,
    g: Optional[np.ndarray] = None,
) -> Tuple[float, DensityMatrix]:
    """Diluted RrhoR: ``T(lam) = (I + lam R) rho (I + lam R)`` normalized, with
    ``lam`` from a golden-section search of ``f(T(lam))`` over ``interval``.

    Falls back to ``lam = 0`` (``T(0) = rho``) if the search point does not
    decrease the loss.
    """
    rho = as_density(rho)
    if f_rho is None or g is None:
        f_rho, g = loss.evaluate(rho)
    R = _psd_direction(g)

    def objective(lam):
        return _safe_evaluate_value(loss, _dilute(rho.matrix, R, lam))

    lam = golden_section(objective, interval[0], interval[1], tol)
    new = _dilute(rho.matrix, R, lam)
    if not _safe_evaluate_value(loss, new) <= f_rho:
        return 0.0, rho
    return lam, new


def _safe_evaluate_value(loss: LossModel, rho) -> float:
    try:
        return loss.value(rho)
    except (OutOfDomain, SingularDensity):
        return math.inf


def frank_wolfe_vertex(g: np.ndarray) -> np.ndarray:
    """Rank-one projector onto a minimum eigenvector of ``g``: the minimizer of
    ``<g, sigma>`` over density matrices."""
    _, V = np.linalg.eigh(g)
    v = V[:, 0]
    return np.outer(v, v.conj())


def frank_wolfe_gap(g: np.ndarray, rho) -> float:
    """``<g, rho - sigma>`` at the linear-minimization vertex ``sigma``; equals ``-psi``."""
    sigma = frank_wolfe_vertex(g)
    return float(np.real(np.vdot(g, as_density(rho).matrix - sigma)))


def frank_wolfe_step(
    loss: LossModel,
    rho,
    k: int,
    cfg: BaselineConfig,
    f_rho: float,
    g: np.ndarray,
) -> Tuple[float, DensityMatrix, int, float, Optional[np.ndarray]]:
    R = as_density(rho).matrix
    sigma = frank_wolfe_vertex(g)
    direction = sigma - R
    slope = min(float(np.real(np.vdot(g, direction))), 0.0)  # equals psi <= 0
    if cfg.step_rule == "open-loop":
        theta = 2.0 / (k + 2.0)
        new = DensityMatrix(hermitize(R + theta * direction))
        f_new, g_new = loss.evaluate(new)
        return theta, new, 0, f_new, g_new
    a = cfg.armijo
    theta = 1.0
    for j in range(a.max_backtracks + 1):
        new = DensityMatrix(hermitize(R + theta * direction))
        f_new, g_new = _safe_evaluate(loss, new)
        if not f_new > f_rho + a.tau * theta * slope:
            return theta, new, j, f_new, g_new
        theta *= a.r
    raise BacktrackLimitExceeded(
        f"Frank-Wolfe Armijo search failed after {a.max_backtracks} backtracks", -a.tau * slope
    )


def _run(name, loss, rho0, stop, step_fn) -> Tuple[DensityMatrix, SolveTrace]:
    stop = stop or StopRule()
    rho = maximally_mixed(loss.dim) if rho0 is None else assert_density(rho0)
    trace = SolveTrace(name)
    work = 0.0
    t0 = time.perf_counter()
    try:
        f, g = loss.evaluate(rho)
    except (OutOfDomain, SingularDensity) as exc:
        trace.status = "domain-error"
        raise SolverError(exc, trace) from exc
    work += time.perf_counter() - t0
    psi = optimality_gap(loss, rho, g)
    trace.append(0, work, f, math.nan, 0, psi, math.nan)
    k = 0
    while True:
        if stop.psi_tol is not None and abs(psi) <= stop.psi_tol:
            trace.status = "tolerance-reached"
            break
        if k >= stop.max_iters:
            trace.status = "max-iters"
            break
        t0 = time.perf_counter()
        try:
            step, new, backtracks, f_new, g_new = step_fn(rho, k, f, g)
        except (OutOfDomain, SingularDensity, NotPSD) as exc:
            trace.status = "domain-error"
            raise SolverError(exc, trace) from exc
        except BacktrackLimitExceeded as exc:
            work += time.perf_counter() - t0
            if at_rounding_floor(exc.promised, f):
                trace.status = "stalled"
                break
            trace.status = "numerical-failure"
            raise SolverError(exc, trace) from exc
        work += time.perf_counter() - t0
        div = relative_entropy(new, rho)
        rho, f, g = new, f_new, g_new
        k += 1
        psi = optimality_gap(loss, rho, g)
        trace.append(k, work, f, step, backtracks, psi, div)
    return rho, trace


def rpr_solve(loss: LossModel, rho0=None, stop: StopRule = None):
    def step(rho, k, f, g):
        new = rpr_step(loss, rho, g)
        f_new, g_new = loss.evaluate(new)
        return math.nan, new, 0, f_new, g_new

    return _run("rpr", loss, rho0, stop, step)


def diluted_rpr_solve(loss: LossModel, rho0=None, cfg: BaselineConfig = None, stop: StopRule = None):
    cfg = cfg or BaselineConfig(kind="diluted-rpr")

    def step(rho, k, f, g):
        lam, new = diluted_rpr_step(loss, rho, cfg.interval, cfg.tol, f, g)
        if new is rho:
            return lam, new, 0, f, g
        f_new, g_new = loss.evaluate(new)
        return lam, new, 0, f_new, g_new

    return _run("diluted-rpr", loss, rho0, stop, step)


def frank_wolfe_solve(loss: LossModel, rho0=None, cfg: BaselineConfig = None, stop: StopRule = None):
    """Standard Frank-Wolfe over density matrices (Armijo or ``2/(k+2)`` steps)."""
    cfg = cfg or BaselineConfig(kind="frank-wolfe")

    def step(rho, k, f, g):
        return frank_wolfe_step(loss, rho, k, cfg, f, g)

    return _run("frank-wolfe", loss, rho0, stop, step)
