"""Solve complex Monge-Ampere on the unit ball of C^2 and watch the error shrink.

The data u = |z|^2 + |z|^4 has eigenvalues 1 + 4|z|^2 and 1 + 2|z|^2, so
det = (1 + 4|z|^2)(1 + 2|z|^2) is the right-hand side with exact solution u.
"""
from itertools import pairwise

import numpy as np

from hessiasol.grid import ball
from hessiasol.solver import SolveConfig, solve
from hessiasol.viscosity import monge_ampere


def r2(z):
    return np.sum(np.abs(z) ** 2, axis=-1)


def exact(z):
    return r2(z) + r2(z) ** 2


op = monge_ampere(2, lambda z, s: (1 + 4 * r2(z)) * (1 + 2 * r2(z)))
errors = {}
for h, method in ((1 / 4, "relaxation"), (1 / 8, "relaxation"), (1 / 16, "newton")):
    u, rep = solve(SolveConfig(op, ball(2), exact, h, method=method))
    g = u.grid
    err = np.max(np.abs(u.values - g.sample(exact).values)[g.closure])
    errors[h] = err
    certs = ", ".join(f"{k}={'ok' if bool(v) else 'FAIL'}" for k, v in rep.certificates.items())
    print(f"h=1/{round(1 / h):<3d} {method:<10s} steps={rep.iterations:<5d} "
          f"time={rep.wall_time:6.1f}s  sup error={err:.3e}  [{certs}]")

hs = sorted(errors, reverse=True)
for a, b in pairwise(hs):
    print(f"error ratio h={a:g} -> {b:g}: {errors[a] / errors[b]:.2f}")
