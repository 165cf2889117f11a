"""
Admissible cones and phase super-level sets.

``GammaM(m)`` is ``{sigma_1 > 0, ..., sigma_m > 0}``; ``Positive`` is the
positive orthant ``Gamma_n``; ``PhaseCone(sigma)`` is the set where the
Lagrangian phase exceeds ``sigma``. All predicates are vectorized over
leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .symfun import elementary_symmetric

__all__ = [
    "ConeSpec",
    "contains",
    "distance_to_boundary",
    "gamma",
    "phase_cone",
    "positive",
    "shift_into",
    "supercritical_structure",
]


@dataclass(frozen=True)
class ConeSpec:
    kind: str  # 'gamma' or 'phase'
    n: int
    m: int | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("dimension must be positive")
        if self.kind == "gamma":
            if self.m is None or not (1 <= self.m <= self.n):
                raise DomainError(f"Gamma_m needs 1 <= m <= n, got m={self.m}")
        elif self.kind == "phase":
            lo, hi = (self.n - 2) * np.pi / 2, self.n * np.pi / 2
            # the critical level (n-2) pi/2 is kept: its set is still convex
            if self.sigma is None or not (lo <= self.sigma < hi):
                raise DomainError(f"phase level must lie in [{lo:.6g}, {hi:.6g})")
        else:
            raise DomainError(f"unknown cone kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "gamma":
            return f"Gamma_{self.m}"
        return f"Gamma^{self.sigma:.17g}"


def gamma(m: int, n: int) -> ConeSpec:
    return ConeSpec("gamma", n, m=m)


def positive(n: int) -> ConeSpec:
    return ConeSpec("gamma", n, m=n)


def phase_cone(sigma: float, n: int) -> ConeSpec:
    return ConeSpec("phase", n, sigma=float(sigma))


def _lam(cone: ConeSpec, lam) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != cone.n:
        raise DomainError(f"{cone.name} lives in R^{cone.n}, got vectors of length {arr.shape[-1]}")
    return arr


def contains(cone: ConeSpec, lam, closure: bool = False, tol: float = 0.0):
    """Membership test.

    With ``closure=True`` the inequalities become ``>= -tol``; the
    default ``tol = 0`` is an exact ``>=`` comparison.
    """
    arr = _lam(cone, lam)
    if cone.kind == "gamma":
        e = elementary_symmetric(arr, cone.m)[..., 1:]
        res = np.all(e >= -tol, axis=-1) if closure else np.all(e > 0.0, axis=-1)
    else:
        ph = np.arctan(arr).sum(axis=-1)
        res = ph >= cone.sigma - tol if closure else ph > cone.sigma
    return res if res.ndim else bool(res)


def _open_member(cone: ConeSpec, arr: np.ndarray) -> np.ndarray:
    return np.asarray(contains(cone, arr, closure=False))


def distance_to_boundary(cone: ConeSpec, lam, tol: float = 1e-10):
    """Signed distance to the boundary along the diagonal direction.

    Returns ``t*`` with ``lam - t* 1`` on the boundary: positive inside
    the cone, negative outside. Found by bisection on
    ``t -> contains(lam - t 1)`` to ``tol`` absolute.

    Raises
    ------
    NumericalError
        If no bracket exists within ``|t| <= 10 (1 + max|lam|)``.
    """
    arr = _lam(cone, lam)
    scalar = arr.ndim == 1
    arr = arr.reshape(-1, cone.n)
    ones = np.ones(cone.n)
    bound = 10.0 * (1.0 + np.abs(arr).max(axis=-1))
    lo = arr.min(axis=-1) - 1.0  # lam - lo*1 lies in the positive orthant
    hi = arr.mean(axis=-1) + 1.0  # every admissible set sits inside Gamma_1
    if cone.kind == "phase":
        # the phase set is not a cone: walk the bracket outwards
        lo = np.minimum(lo, hi - 2.0)
        bad = ~_open_member(cone, arr - lo[:, None] * ones)
        while np.any(bad):
            step = np.maximum(1.0, np.abs(lo[bad]))
            lo[bad] -= step
            if np.any(np.abs(lo) > bound):
                raise NumericalError("no bisection bracket for the phase set within 10(1+|lam|)")
            bad = ~_open_member(cone, arr - lo[:, None] * ones)
        outside = _open_member(cone, arr - hi[:, None] * ones)
        while np.any(outside):
            hi[outside] += np.maximum(1.0, np.abs(hi[outside]))
            if np.any(np.abs(hi) > bound):
                raise NumericalError("no bisection bracket for the phase set within 10(1+|lam|)")
            outside = _open_member(cone, arr - hi[:, None] * ones)
    while True:
        width = hi - lo
        active = width > tol
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        inside = _open_member(cone, arr - mid[:, None] * ones)
        lo = np.where(active & inside, mid, lo)
        hi = np.where(active & ~inside, mid, hi)
    t = 0.5 * (lo + hi)
    return float(t[0]) if scalar else t.reshape(np.shape(lam)[:-1])


def shift_into(cone: ConeSpec, lam, margin: float) -> np.ndarray:
    """Smallest diagonal shift ``lam + t 1`` (``t >= 0``) with distance >= margin."""
    if margin <= 0:
        raise DomainError("margin must be positive")
    arr = _lam(cone, lam)
    d = np.asarray(distance_to_boundary(cone, arr))
    t = np.clip(margin - d, 0.0, None)
    return arr + t[..., None] if arr.ndim > 1 else arr + float(t)


def supercritical_structure(lam, delta: float) -> dict:
    """Closed-form structural facts of a supercritical phase vector.

    For ``sum arctan(lam_i) >= (n-2) pi/2 + delta`` and sorted
    ``lam_1 >= ... >= lam_n`` the following are expected:

    * ``lam_{n-1} > 0`` and ``|lam_n| <= lam_{n-1}``
    * ``sum lam_i >= 0`` and ``lam_n >= -cot(delta)``
    * ``sum 1/lam_i <= -tan(delta)`` whenever ``lam_n < 0``

    Returns boolean arrays for each clause (vectorized over leading axes).
    """
    arr = np.sort(np.asarray(lam, dtype=float), axis=-1)[..., ::-1]
    n = arr.shape[-1]
    if n < 2:
        raise DomainError("structure clauses need n >= 2")
    ln1, ln = arr[..., n - 2], arr[..., n - 1]
    ordered = (ln1 > 0) & (np.abs(ln) <= ln1)
    trace_ok = (arr.sum(axis=-1) >= 0) & (ln >= -1.0 / np.tan(delta))
    neg = ln < 0
    with np.errstate(divide="ignore"):
        inv = np.where(neg, (1.0 / np.where(neg[..., None], arr, 1.0)).sum(axis=-1), -np.inf)
    reciprocal_ok = ~neg | (inv <= -np.tan(delta))
    return {"ordered": ordered, "trace": trace_ok, "reciprocal": reciprocal_ok}
