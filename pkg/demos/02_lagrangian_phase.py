"""Special Lagrangian phase equation sum arctan(lambda_i) = h(z) in C^2.

With h = pi/2 the solution with data |z|^2 is |z|^2 itself (two eigenvalues 1).
The report records the smallest phase over the nodes, which must stay above
the supercritical level (n - 2) pi/2 + delta/2.
"""
import math

import numpy as np

from hessiasol.grid import ball
from hessiasol.solver import SolveConfig, solve
from hessiasol.viscosity import lagrangian_op

op = lagrangian_op(2, math.pi / 2)
u, rep = solve(SolveConfig(op, ball(2), lambda z: np.sum(np.abs(z) ** 2, axis=-1), 1 / 8))
g = u.grid
err = np.max(np.abs(u.values - g.sample(lambda z: np.sum(np.abs(z) ** 2, axis=-1)).values))
print(f"sweeps={rep.iterations}  residual={rep.residual:.2e}  sup error={err:.2e}")
print(f"phase floor: min phase {rep.supercritical['min_phase']:.6f} >= level {rep.supercritical['level']:.6f}")
print("certificates:", {k: bool(v) for k, v in rep.certificates.items()})
