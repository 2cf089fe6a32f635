"""Exponentiated gradient with Armijo line search over density matrices.

The update is ``rho(alpha) = exp(log rho - alpha g) / tr(...)`` with ``g`` the
gradient at ``rho``. Step sizes follow the Armijo rule: start at ``alpha0`` and
multiply by ``r`` while

    f(rho(alpha)) > f(rho) + tau <g, rho(alpha) - rho>.

Besides the solver, this module exposes the scalar function
``phi(alpha) = log tr exp(log rho - alpha g)`` with its first two derivatives,
the Bogoliubov-Kubo-Mori inner product, and the optimality gap
``psi(rho) = lambda_min(g) - <g, rho>`` used as the stopping certificate.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .errors import BacktrackLimitExceeded, OutOfDomain, SingularDensity, SolverError
from .geometry import DensityMatrix, as_density, assert_density, maximally_mixed
from .hermitian import SpectralDecomposition, _eigh, hermitize
from .losses import LossModel

DEGENERATE_GAP = 1e-10
# a line search whose longest trial promises less than this many ulps of f
# is comparing rounding noise
STALL_ULPS = 1e3


@dataclass
class ArmijoConfig:
    alpha0: float = 10.0
    r: float = 0.5
    tau: float = 0.5
    max_backtracks: int = 100

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be a positive integer")


@dataclass
class StopRule:
    max_iters: int = 500
    psi_tol: Optional[float] = 1e-8


TRACE_COLUMNS = ["iter", "elapsed_s", "f_value", "alpha", "backtracks", "psi_gap", "step_divergence"]


@dataclass
class IterRecord:
    iter: int
    elapsed_s: float
    f_value: float
    alpha: float
    backtracks: int
    psi_gap: float
    step_divergence: float


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class SolveTrace:
    """Per-iterate log of a solve.

    Row ``k`` describes iterate ``rho_k``: its loss value and optimality gap,
    and the step (size, backtracks, divergence ``D(rho_k, rho_{k-1})``) that
    produced it. Row 0 is the starting point, with ``nan`` step fields.
    ``elapsed_s`` counts solver work only; the diagnostic columns are computed
    off the clock so that solvers are timed on equal terms.
    """

    solver: str = "eg-armijo"
    records: List[IterRecord] = field(default_factory=list)
    status: str = "running"

    def append(self, *args) -> None:
        self.records.append(IterRecord(*args))

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f_value for r in self.records])

    @property
    def psi_gaps(self) -> np.ndarray:
        return np.array([r.psi_gap for r in self.records])

    def __len__(self):
        return len(self.records)

    def rows(self, timing: bool = True):
        for rec in self.records:
            row = [_fmt(getattr(rec, c)) for c in TRACE_COLUMNS]
            if not timing:
                row[1] = ""
            yield row

    def to_csv(self, path=None, timing: bool = True, extra: Optional[dict] = None) -> str:
        """Write the trace as CSV; returns the text. ``extra`` maps column name
        to a per-row sequence (or a scalar repeated on every row)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extra = extra or {}
        w.writerow(TRACE_COLUMNS + list(extra))
        for i, row in enumerate(self.rows(timing)):
            more = []
            for v in extra.values():
                v = v[i] if isinstance(v, (list, tuple, np.ndarray)) else v
                more.append(v if isinstance(v, str) else _fmt(v))
            w.writerow(row + more)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class StepResult(NamedTuple):
    rho: DensityMatrix
    phi: float


def eg_step(rho: DensityMatrix, g: np.ndarray, alpha: float, log_rho: Optional[np.ndarray] = None) -> StepResult:
    """One EG update ``exp(log rho - alpha g)`` normalized to unit trace.

    The largest eigenvalue of the exponent is subtracted before
    exponentiating. The log-spectrum of the result is kept exactly, so an
    eigenvalue that underflows in the matrix still has a finite logarithm.
    Returns the new density and ``phi(alpha) = log tr exp(log rho - alpha g)``.
    """
    if log_rho is None:
        log_rho = as_density(rho).logm()
    S = hermitize(log_rho - alpha * np.asarray(g))
    s, V = _eigh(S)
    top = s[-1]
    w = np.exp(s - top)
    Z = w.sum()
    logZ = math.log(Z)
    p = w / Z
    new = DensityMatrix(
        hermitize((V * p) @ V.conj().T),
        SpectralDecomposition(p, V),
        log_eigenvalues=(s - top) - logZ,
    )
    return StepResult(new, float(top + logZ))


class ArmijoResult(NamedTuple):
    alpha: float
    rho: DensityMatrix
    backtracks: int
    f_value: float
    gradient: np.ndarray
    phi: float


def _safe_evaluate(loss: LossModel, rho) -> Tuple[float, Optional[np.ndarray]]:
    # outside dom(f) the loss is +inf, which the Armijo test always rejects
    try:
        return loss.evaluate(rho)
    except (OutOfDomain, SingularDensity):
        return math.inf, None


def armijo_search(
    rho: DensityMatrix,
    loss: LossModel,
    cfg: ArmijoConfig = None,
    f_rho: Optional[float] = None,
    g: Optional[np.ndarray] = None,
) -> ArmijoResult:
    """Backtrack from ``cfg.alpha0`` until the Armijo inequality holds."""
    cfg = cfg or ArmijoConfig()
    rho = as_density(rho)
    if f_rho is None or g is None:
        f_rho, g = loss.evaluate(rho)
    log_rho = rho.logm()
    R = rho.matrix
    alpha = cfg.alpha0
    promised = math.inf
    for j in range(cfg.max_backtracks + 1):
        trial, phi = eg_step(rho, g, alpha, log_rho)
        f_t, g_t = _safe_evaluate(loss, trial)
        # <g, rho(alpha) - rho> <= -D(rho(alpha), rho) / alpha <= 0 exactly; clamping
        # the rounded value keeps accepted steps from increasing f by an ulp
        decrease = min(float(np.real(np.vdot(g, trial.matrix - R))), 0.0)
        if j == 0:
            promised = -cfg.tau * decrease
        if not f_t > f_rho + cfg.tau * decrease:
            return ArmijoResult(alpha, trial, j, f_t, g_t, phi)
        alpha *= cfg.r
    raise BacktrackLimitExceeded(
        f"no Armijo step after {cfg.max_backtracks} backtracks (alpha={alpha / cfg.r:.3e})", promised
    )


def optimality_gap(loss: LossModel, rho, g: Optional[np.ndarray] = None) -> float:
    """``psi(rho) = lambda_min(f'(rho)) - <f'(rho), rho>``, which is <= 0 and
    vanishes exactly at minimizers."""
    if g is None:
        g = loss.gradient(rho)
    R = as_density(rho).matrix
    lam_min = float(np.linalg.eigvalsh(g)[0])
    return lam_min - float(np.real(np.vdot(g, R)))


def _log_phi0(rho: DensityMatrix) -> float:
    lg = rho.log_eigenvalues
    top = lg.max()
    return float(top + math.log(np.exp(lg - top).sum()))


def at_rounding_floor(promised: float, f: float) -> bool:
    """True when the decrease a failed line search asked for is within
    rounding error of ``f``: the iterate has converged to machine precision
    rather than hit a numerical fault."""
    return promised <= STALL_ULPS * np.finfo(float).eps * max(1.0, abs(f))


def solve_eg(
    loss: LossModel,
    rho0=None,
    cfg: ArmijoConfig = None,
    stop: StopRule = None,
    callback: Optional[Callable[[int, DensityMatrix], None]] = None,
) -> Tuple[DensityMatrix, SolveTrace]:
    """Minimize ``loss`` over density matrices, starting from ``rho0`` (default I/d).

    Stops when ``|psi| <= stop.psi_tol`` or after ``stop.max_iters`` steps, or
    with status ``"stalled"`` when the line search fails only because the
    decrease it asks for is below the rounding error of ``f``.
    Errors from the line search are re-raised as :class:`SolverError` carrying
    the trace recorded so far.
    """
    cfg = cfg or ArmijoConfig()
    stop = stop or StopRule()
    rho = maximally_mixed(loss.dim) if rho0 is None else assert_density(rho0, strict=True)
    trace = SolveTrace("eg-armijo")

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
            step = armijo_search(rho, loss, cfg, f, g)
        except BacktrackLimitExceeded as exc:
            work += time.perf_counter() - t0
            if at_rounding_floor(exc.promised, f):
                trace.status = "stalled"
                break
            trace.status = "numerical-failure"
            raise SolverError(exc, trace) from exc
        except (OutOfDomain, SingularDensity) as exc:
            trace.status = "domain-error"
            raise SolverError(exc, trace) from exc
        work += time.perf_counter() - t0

        # D(rho(alpha), rho) = phi(0) - phi(alpha) + alpha phi'(alpha), phi' = -<g, rho(alpha)>
        dphi = -float(np.real(np.vdot(g, step.rho.matrix)))
        div = _log_phi0(rho) - step.phi + step.alpha * dphi
        rho, f, g = step.rho, step.f_value, step.gradient
        k += 1
        psi = optimality_gap(loss, rho, g)
        trace.append(k, work, f, step.alpha, step.backtracks, psi, div)
        if callback is not None:
            callback(k, rho)
    return rho, trace


class PhiContext:
    """Caches ``log rho`` and the spectra of ``log rho - alpha g`` by ``alpha``."""

    def __init__(self, rho, g):
        self.rho = assert_density(rho, strict=True) if not isinstance(rho, DensityMatrix) else rho
        self.g = hermitize(np.asarray(g, dtype=complex))
        self.log_rho = self.rho.logm()
        self._cache = {}

    @classmethod
    def from_loss(cls, loss: LossModel, rho) -> "PhiContext":
        rho = as_density(rho)
        return cls(rho, loss.gradient(rho))

    def spectrum(self, alpha: float) -> SpectralDecomposition:
        alpha = float(alpha)
        spec = self._cache.get(alpha)
        if spec is None:
            spec = _eigh(hermitize(self.log_rho - alpha * self.g))
            if len(self._cache) > 512:
                self._cache.clear()
            self._cache[alpha] = spec
        return spec


def phi_eval(ctx: PhiContext, alpha: float) -> Tuple[float, float]:
    """``phi(alpha)`` and ``phi'(alpha) = -<g, rho(alpha)>``."""
    s, V = ctx.spectrum(alpha)
    top = s[-1]
    w = np.exp(s - top)
    Z = w.sum()
    gd = np.real(np.einsum("ij,ji->i", V.conj().T @ ctx.g, V))
    return float(top + math.log(Z)), float(-np.dot(w, gd) / Z)


def _exp_divided_differences(lam: np.ndarray) -> np.ndarray:
    """``K_ij = (e^{l_i} - e^{l_j}) / (l_i - l_j)``, with ``e^{l}`` on the diagonal."""
    li = lam[:, None]
    lj = lam[None, :]
    delta = li - lj
    close = np.abs(delta) < DEGENERATE_GAP
    safe = np.where(close, 1.0, delta)
    with np.errstate(over="ignore", invalid="ignore"):
        near = np.exp(lj) * np.expm1(np.where(np.abs(delta) > 0.5, 0.0, delta)) / safe
        far = (np.exp(li) - np.exp(lj)) / safe
    K = np.where(np.abs(delta) > 0.5, far, near)
    return np.where(close, np.exp(0.5 * (li + lj)), K)


def _adaptive_simpson(fn, a: float, b: float, tol: float, depth: int = 50) -> float:
    def simpson(fa, fm, fb, a, b):
        return (b - a) * (fa + 4 * fm + fb) / 6.0

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2, depth - 1
        )

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)


def bkm_inner(H, X, Y, method: str = "closed", tol: float = 1e-13) -> float:
    """Bogoliubov-Kubo-Mori inner product ``int_0^1 tr(e^{(1-u)H} X e^{uH} Y) du``.

    ``method="closed"`` sums divided differences of ``exp`` in the eigenbasis
    of ``H``; ``method="quadrature"`` integrates the trace with adaptive
    Simpson and is meant as a cross-check.
    """
    spec = H if isinstance(H, SpectralDecomposition) else _eigh(hermitize(np.asarray(H, dtype=complex)))
    lam, V = spec
    Xt = V.conj().T @ np.asarray(X) @ V
    Yt = V.conj().T @ np.asarray(Y) @ V
    P = Xt * Yt.T
    if method == "closed":
        return float(np.real(np.sum(P * _exp_divided_differences(lam))))
    if method == "quadrature":
        def integrand(u):
            return float(np.real(np.sum(P * np.exp((1 - u) * lam[:, None] + u * lam[None, :]))))

        scale = max(1.0, abs(integrand(0.0)), abs(integrand(1.0)))
        return _adaptive_simpson(integrand, 0.0, 1.0, tol * scale)
    raise ValueError(f"unknown method {method!r}")


def phi_second(ctx: PhiContext, alpha: float, method: str = "bkm") -> float:
    """Second derivative of ``phi`` at ``alpha``.

    ``bkm`` evaluates the Bogoliubov-Kubo-Mori variance of ``g`` in closed form;
    the exponent is shifted by its largest eigenvalue and ``g`` is centred
    first, which leaves the value unchanged and keeps it non-negative.
    ``finite-diff`` takes a central difference of the analytic ``phi'``.
    """
    if method == "bkm":
        s, V = ctx.spectrum(alpha)
        lam = s - s[-1]
        w = np.exp(lam)
        Z = w.sum()
        Bt = -(V.conj().T @ ctx.g @ V)
        mean = float(np.dot(w, np.real(np.diag(Bt)))) / Z
        Bt = Bt - mean * np.eye(len(lam))
        K = _exp_divided_differences(lam)
        return float(np.sum(np.abs(Bt) ** 2 * K)) / Z
    if method == "finite-diff":
        h = max(1e-5, 1e-5 * abs(alpha))
        return (phi_eval(ctx, alpha + h)[1] - phi_eval(ctx, alpha - h)[1]) / (2 * h)
    raise ValueError(f"unknown method {method!r}")


def step_divergences(ctx: PhiContext, alpha: float) -> Tuple[float, float]:
    """``(D(rho(alpha), rho), D(rho, rho(alpha)))`` from values of ``phi``."""
    phi0, dphi0 = phi_eval(ctx, 0.0)
    phia, dphia = phi_eval(ctx, alpha)
    forward = phi0 - (phia + dphia * (0.0 - alpha))
    backward = phia - (phi0 + dphi0 * alpha)
    return forward, backward


def local_pb_exponent(ctx: PhiContext, alpha_bar: float, grid: int = 200) -> float:
    """Exponent ``gamma >= 2`` making ``D(rho(alpha), rho) / alpha^gamma``
    non-increasing on ``(0, alpha_bar]``.

    Uses ``gamma = 2 L / mu`` with ``mu`` and ``L`` the minimum and maximum of
    ``phi''`` sampled on a uniform grid over ``[0, alpha_bar]``; ``gamma = 2``
    when ``mu`` vanishes.
    """
    alphas = np.linspace(0.0, alpha_bar, grid)
    vals = np.array([phi_second(ctx, a) for a in alphas])
    mu, L = float(vals.min()), float(vals.max())
    if mu <= 1e-12:
        return 2.0
    return max(2.0, 2.0 * L / mu)
