"""Run several solvers on one dataset and compare their convergence against a shared f*."""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .baselines import BaselineConfig, diluted_rpr_solve, frank_wolfe_solve, rpr_solve
from .errors import SolverError
from .losses import HedgedLoss, LogLikelihoodLoss, LossModel, MaxEntropyLoss
from .solver import ArmijoConfig, SolveTrace, StopRule, solve_eg

log = logging.getLogger(__name__)

SOLVER_NAMES = ("eg-armijo", "rpr", "diluted-rpr", "frank-wolfe")
SOLVER_NOTES = {
    "frank-wolfe": "standard Frank-Wolfe with Armijo steps (stands in for the modified FW step size)",
    "diluted-rpr": "golden-section line search over the dilution parameter",
}


def make_loss(data, spec: str = "ml") -> LossModel:
    """Build a loss from ``ml``, ``hedged:LAMBDA`` or ``maxent:LAMBDA``."""
    base = LogLikelihoodLoss.from_dataset(data)
    kind, _, arg = spec.partition(":")
    if kind == "ml" and not arg:
        return base
    if kind in ("hedged", "maxent"):
        try:
            lam = float(arg)
        except ValueError:
            raise ValueError(f"loss {spec!r} needs a numeric weight, e.g. {kind}:0.01") from None
        if not lam > 0:
            raise ValueError("penalty weight must be positive")
        return HedgedLoss(base, lam) if kind == "hedged" else MaxEntropyLoss(base, lam)
    raise ValueError(f"unknown loss {spec!r}")


def run_solver(name: str, loss: LossModel, armijo: ArmijoConfig, stop: StopRule, rho0=None):
    if name == "eg-armijo":
        return solve_eg(loss, rho0, armijo, stop)
    if name == "rpr":
        return rpr_solve(loss, rho0, stop)
    if name == "diluted-rpr":
        return diluted_rpr_solve(loss, rho0, BaselineConfig(kind="diluted-rpr"), stop)
    if name == "frank-wolfe":
        fw = BaselineConfig(kind="frank-wolfe", armijo=ArmijoConfig(1.0, armijo.r, armijo.tau, armijo.max_backtracks))
        return frank_wolfe_solve(loss, rho0, fw, stop)
    raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")


@dataclass
class BenchResult:
    f_star: float
    traces: Dict[str, SolveTrace]
    errors: Dict[str, str] = field(default_factory=dict)
    tol: float = 1e-6

    def gaps(self, name: str) -> np.ndarray:
        return self.traces[name].f_values - self.f_star

    def iters_to_tol(self, name: str) -> Optional[int]:
        hit = np.flatnonzero(self.gaps(name) <= self.tol)
        return int(hit[0]) if hit.size else None

    def seconds_to_tol(self, name: str) -> Optional[float]:
        k = self.iters_to_tol(name)
        return None if k is None else self.traces[name].records[k].elapsed_s

    def summary_rows(self, timing: bool = True) -> List[list]:
        rows = []
        for name, tr in self.traces.items():
            k = self.iters_to_tol(name)
            s = self.seconds_to_tol(name) if timing else None
            rows.append([
                name,
                "" if k is None else str(k),
                "" if s is None else format(s, ".6g"),
                format(float(self.gaps(name)[-1]), ".17g"),
                format(float(tr.records[-1].psi_gap), ".17g"),
            ])
        return rows

    def write(self, out_dir, timing: bool = True) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for name, tr in self.traces.items():
            tr.to_csv(
                os.path.join(out_dir, f"trace_{name}.csv"),
                timing=timing,
                extra={"solver": name, "gap": self.gaps(name)},
            )
        with open(os.path.join(out_dir, "summary.tsv"), "w") as fh:
            fh.write("solver\titers_to_tol\tseconds_to_tol\tfinal_gap\tfinal_psi\n")
            for row in self.summary_rows(timing):
                fh.write("\t".join(row) + "\n")
        meta = {
            "f_star": self.f_star,
            "f_star_definition": "minimum loss value reached by any solver in this run",
            "tol": self.tol,
            "solvers": list(self.traces),
            "status": {k: t.status for k, t in self.traces.items()},
            "errors": self.errors,
            "notes": {k: v for k, v in SOLVER_NOTES.items() if k in self.traces},
            "elapsed_s": "cumulative solver work; psi and step-divergence diagnostics are not timed",
        }
        with open(os.path.join(out_dir, "bench.json"), "w") as fh:
            json.dump(meta, fh, indent=1)
            fh.write("\n")


def run_bench(
    loss: LossModel,
    solvers=SOLVER_NAMES,
    iters: int = 120,
    armijo: ArmijoConfig = None,
    tol: float = 1e-6,
) -> BenchResult:
    """Run each solver for ``iters`` iterations from I/d, sequentially.

    A solver that fails keeps the trace it recorded before the error; the
    remaining solvers still run.
    """
    armijo = armijo or ArmijoConfig()
    stop = StopRule(max_iters=iters, psi_tol=None)
    traces, errors = {}, {}
    for name in solvers:
        try:
            _, tr = run_solver(name, loss, armijo, stop)
        except SolverError as exc:
            log.warning("%s failed: %s", name, exc)
            errors[name] = str(exc)
            tr = exc.trace
        if len(tr):
            traces[name] = tr
    finite = [float(np.min(t.f_values[np.isfinite(t.f_values)])) for t in traces.values()]
    f_star = min(finite) if finite else math.nan
    return BenchResult(f_star, traces, errors, tol)
