"""
hessiasol: viscosity solutions of complex Hessian-type Dirichlet problems.

Submodules
----------
symfun      symmetric functions of eigenvalue vectors
cones       admissible cones and membership
hermitian   Hermitian matrix algebra, mixed discriminants
grid        grids, fields, discrete complex Hessians
regularize  sup/inf convolutions and contact sets
viscosity   operators and sub/supersolution certificates
barriers    barrier constructions
solver      Dirichlet solver and measurements
cli         command-line driver

Submodules load on first attribute access, so ``import hessiasol`` is cheap
and the CLI can cap thread pools before numpy is imported.
"""
from __future__ import annotations

import importlib

__version__ = "0.1.0"

_SUBMODULES = ("symfun", "cones", "hermitian", "grid", "regularize", "viscosity", "barriers", "solver", "cli", "errors")

__all__ = ["__version__", *_SUBMODULES]


def __getattr__(name):
    if name in _SUBMODULES:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module 'hessiasol' has no attribute {name!r}")
