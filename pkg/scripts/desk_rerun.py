#!/usr/bin/env python3
"""Compare EG-Armijo with RrhoR, diluted RrhoR and Frank-Wolfe on synthetic
W-state tomography data, writing traces and a summary to ``--out-dir``.

    python scripts/desk_rerun.py --qubits 3 --shots 1000 --seed 2024 --out-dir runs/w3
"""
import argparse
import json
import os

import numpy as np

from egarmijo.bench import SOLVER_NAMES, make_loss, run_bench
from egarmijo.solver import ArmijoConfig
from egarmijo.tomography import TomographyConfig, generate, save_dataset


def linear_fit_r2(gaps, floor):
    k = int(np.argmax(gaps <= floor)) if np.any(gaps <= floor) else len(gaps)
    y = np.log10(gaps[:k])
    x = np.arange(k, dtype=float)
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    return float(1 - resid @ resid / np.sum((y - y.mean()) ** 2)), float(coef[0]), k


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--qubits", type=int, default=3)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--iters", type=int, default=120)
    p.add_argument("--repeats", type=int, default=3, help="timing repeats; the median is reported")
    p.add_argument("--loss", default="ml")
    p.add_argument("--out-dir", default="runs/desk")
    args = p.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    ds = generate(TomographyConfig(args.qubits, args.shots, "all", "w", args.seed))
    save_dataset(ds, os.path.join(args.out_dir, "data.json"))
    loss = make_loss(ds, args.loss)

    seconds = {name: [] for name in SOLVER_NAMES}
    for rep in range(args.repeats):
        result = run_bench(loss, SOLVER_NAMES, args.iters, ArmijoConfig())
        for name in SOLVER_NAMES:
            seconds[name].append(result.seconds_to_tol(name))
    result.write(args.out_dir)

    r2, slope, k = linear_fit_r2(result.gaps("eg-armijo"), 1e-12 * max(1.0, abs(result.f_star)))
    print(f"n={ds.n} d={ds.dim} f*={result.f_star:.15g}")
    print(f"{'solver':<14}{'iters_to_tol':>14}{'median ms':>12}")
    summary = {}
    for name in SOLVER_NAMES:
        s = [v for v in seconds[name] if v is not None]
        med = float(np.median(s)) if len(s) == len(seconds[name]) else None
        summary[name] = {"iters_to_tol": result.iters_to_tol(name), "median_seconds_to_tol": med}
        print(f"{name:<14}{str(result.iters_to_tol(name)):>14}{'n/a' if med is None else f'{med * 1e3:.2f}':>12}")
    print(f"eg-armijo log10-gap fit over {k} iterations: slope {slope:.3f}/iter, R^2 = {r2:.4f}")
    summary["eg_linear_fit"] = {"r2": r2, "slope_log10_per_iter": slope, "iterations": k}
    with open(os.path.join(args.out_dir, "rerun.json"), "w") as fh:
        json.dump(summary, fh, indent=1)


if __name__ == "__main__":
    main()
