#!/usr/bin/env python3
"""Randomized check of the step inequalities behind the EG convergence proof.

Reports, for each inequality, how many sampled ``(loss, rho, alpha)`` draws
violate it and by how much, plus the monotonicity of
``D(rho(alpha), rho) / alpha^gamma`` for the exponent from
``local_pb_exponent``.
"""
import argparse
import math

import numpy as np

from egarmijo.geometry import relative_entropy
from egarmijo.hermitian import norm
from egarmijo.instances import LOSS_KINDS, random_density, random_loss
from egarmijo.solver import PhiContext, eg_step, local_pb_exponent, optimality_gap, phi_second, step_divergences


def sample(rng, dims):
    d = int(rng.choice(dims))
    loss = random_loss(rng, d, str(rng.choice(LOSS_KINDS)))
    return loss, random_density(rng, d), float(10 ** rng.uniform(-3, 1))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--contexts", type=int, default=100)
    p.add_argument("--dims", default="2,3,4,8")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    dims = [int(x) for x in args.dims.split(",")]
    rng = np.random.default_rng(args.seed)

    checks = {
        "<g, rho(a) - rho> <= -D(rho(a), rho)/a": [],
        "|D_fwd(phi) - D(rho(a), rho)|": [],
        "|D_bwd(phi) - D(rho, rho(a))|": [],
        "psi <= 0": [],
        "-D(rho(a), rho)/a <= psi": [],
        "D(rho(a), rho) >= a psi": [],
        "phi'' >= 0": [],
        "||rho(a) - rho||_tr^2 <= 2 D": [],
    }
    for _ in range(args.trials):
        loss, rho, a = sample(rng, dims)
        ctx = PhiContext.from_loss(loss, rho)
        new = eg_step(rho, ctx.g, a).rho
        D = relative_entropy(new, rho)
        Db = relative_entropy(rho, new)
        fwd, bwd = step_divergences(ctx, a)
        psi = optimality_gap(loss, rho, ctx.g)
        values = [
            float(np.real(np.vdot(ctx.g, new.matrix - rho.matrix))) + D / a,
            abs(fwd - D),
            abs(bwd - Db),
            psi,
            -D / a - psi,
            a * psi - D,
            -phi_second(ctx, a),
            norm(new.matrix - rho.matrix, "trace") ** 2 - 2 * D,
        ]
        for key, v in zip(checks, values):
            checks[key].append(v)

    print(f"{args.trials} draws, d in {dims}; 'violation' = max of (lhs - rhs)")
    for key, vals in checks.items():
        vals = np.array(vals)
        print(f"  {key:<42} worst {vals.max(): .3e}   positive in {int(np.sum(vals > 1e-9))}")

    bad = 0
    gammas = []
    for _ in range(args.contexts):
        loss, rho, _ = sample(rng, dims)
        ctx = PhiContext.from_loss(loss, rho)
        gamma = local_pb_exponent(ctx, 10.0, grid=100)
        gammas.append(gamma)
        grid = np.linspace(0, 10.0, 101)[1:]
        logs = [math.log(step_divergences(ctx, x)[0]) - gamma * math.log(x) for x in grid]
        bad += int(np.any(np.diff(logs) > 1e-10))
    print(f"D/alpha^gamma non-increasing in {args.contexts - bad}/{args.contexts} contexts; "
          f"gamma range [{min(gammas):.3g}, {max(gammas):.3g}]")


if __name__ == "__main__":
    main()
