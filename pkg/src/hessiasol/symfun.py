"""
Symmetric functions of Hessian eigenvalue vectors.

All evaluators act on the last axis of their input, so a stack of
eigenvalue vectors with shape ``(..., n)`` is evaluated in one call.

Functions
---------
sigma, s_norm, elementary_symmetric
quotient_root, lagrangian_phase
grad, eval_extended

Classes
-------
LambdaVector, SymFun
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError

__all__ = [
    "LambdaVector",
    "SymFun",
    "elementary_symmetric",
    "eval_extended",
    "grad",
    "lagrangian_phase",
    "quotient_root",
    "s_norm",
    "sigma",
]


class LambdaVector:
    """An ordered real vector of Hessian eigenvalues.

    The stored order is kept as given; :meth:`sorted` returns a
    non-increasing copy.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float).reshape(-1)
        if arr.size < 1:
            raise DomainError("a LambdaVector needs at least one entry")
        if not np.all(np.isfinite(arr)):
            raise DomainError("LambdaVector entries must be finite")
        arr.setflags(write=False)
        self._entries = arr

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.size

    def sorted(self) -> np.ndarray:
        return np.sort(self._entries)[::-1].copy()

    def __array__(self, dtype=None, copy=None):
        return self._entries.astype(dtype) if dtype is not None else self._entries

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"LambdaVector({self._entries.tolist()!r})"


def _as_array(lam) -> np.ndarray:
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    return arr


def _check_k(k: int, n: int, lo: int = 1) -> None:
    if not (lo <= k <= n):
        raise DomainError(f"k={k} outside [{lo}, {n}]")


def elementary_symmetric(lam, kmax: int | None = None) -> np.ndarray:
    """Return ``sigma_0, ..., sigma_kmax`` of ``lam`` stacked on the last axis.

    Uses the coefficient recurrence of ``prod_i (1 + t lam_i)``, which
    costs ``O(n * kmax)`` per vector and avoids the cancellation of
    power-sum (Newton) formulas.
    """
    lam = _as_array(lam)
    n = lam.shape[-1]
    kmax = n if kmax is None else kmax
    e = np.zeros(lam.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        li = lam[..., i]
        for j in range(min(i + 1, kmax), 0, -1):
            e[..., j] += li * e[..., j - 1]
    return e


def sigma(k: int, lam) -> np.ndarray | float:
    """Elementary symmetric polynomial ``sigma_k`` of ``lam``."""
    lam = _as_array(lam)
    _check_k(k, lam.shape[-1])
    out = elementary_symmetric(lam, k)[..., k]
    return out if out.ndim else float(out)


def s_norm(k: int, lam) -> np.ndarray | float:
    """Normalized ``S_k = sigma_k / binom(n, k)``; ``S_k(1, ..., 1) = 1``.

    ``k = 0`` is accepted and gives the constant 1.
    """
    lam = _as_array(lam)
    n = lam.shape[-1]
    _check_k(k, n, lo=0)
    if k == 0:
        out = np.ones(lam.shape[:-1])
    else:
        out = elementary_symmetric(lam, k)[..., k] / comb(n, k)
    return out if out.ndim else float(out)


def _in_closed_gamma(lam: np.ndarray, m: int) -> np.ndarray:
    e = elementary_symmetric(lam, m)
    return np.all(e[..., 1:] >= 0.0, axis=-1)


def _quotient_unchecked(k: int, l: int, lam: np.ndarray) -> np.ndarray:
    n = lam.shape[-1]
    e = elementary_symmetric(lam, k)
    sk = np.clip(e[..., k] / comb(n, k), 0.0, None)
    sl = e[..., l] / comb(n, l)
    pos = (sk > 0.0) & (sl > 0.0)
    ratio = np.where(pos, sk / np.where(pos, sl, 1.0), 0.0)
    return ratio ** (1.0 / (k - l))


def quotient_root(k: int, l: int, lam) -> np.ndarray | float:
    """Degree-one normal form ``(S_k / S_l) ** (1 / (k - l))`` on the closed cone.

    ``l = 0`` gives ``S_k ** (1/k)``. The value on the boundary of
    ``Gamma_k`` is the continuous limit 0.

    Raises
    ------
    DomainError
        If ``0 <= l < k <= n`` fails or some vector lies outside the
        closure of ``Gamma_k``.
    """
    lam = _as_array(lam)
    n = lam.shape[-1]
    if not (0 <= l < k <= n):
        raise DomainError(f"need 0 <= l < k <= n, got k={k}, l={l}, n={n}")
    if not np.all(_in_closed_gamma(lam, k)):
        raise DomainError(f"eigenvalue vector outside the closed Gamma_{k} cone")
    out = _quotient_unchecked(k, l, lam)
    return out if out.ndim else float(out)


def lagrangian_phase(lam) -> np.ndarray | float:
    """Sum of ``arctan(lam_i)``; defined on all of R^n."""
    out = np.arctan(_as_array(lam)).sum(axis=-1)
    return out if out.ndim else float(out)


_KINDS = ("sigma", "snorm", "quotient", "phase")


@dataclass(frozen=True)
class SymFun:
    """A symmetric function of the eigenvalues.

    ``kind`` is one of ``'sigma'`` (sigma_k), ``'snorm'`` (S_k),
    ``'quotient'`` ((S_k/S_l)^(1/(k-l)), with ``l = 0`` meaning S_k^(1/k))
    or ``'phase'`` (Lagrangian phase).
    """

    kind: str
    n: int
    k: int | None = None
    l: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown SymFun kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("dimension must be positive")
        if self.kind in ("sigma", "snorm"):
            _check_k(self.k, self.n)
        elif self.kind == "quotient":
            if self.k is None or self.l is None or not (0 <= self.l < self.k <= self.n):
                raise DomainError(f"quotient needs 0 <= l < k <= n, got k={self.k}, l={self.l}")

    @classmethod
    def sigma_k(cls, k, n):
        return cls("sigma", n, k)

    @classmethod
    def s_norm_k(cls, k, n):
        return cls("snorm", n, k)

    @classmethod
    def quotient(cls, k, l, n):
        return cls("quotient", n, k, l)

    @classmethod
    def root(cls, k, n):
        """``S_k ** (1/k)``."""
        return cls("quotient", n, k, 0)

    @classmethod
    def phase(cls, n):
        return cls("phase", n)

    @property
    def degree(self):
        """Homogeneity degree, or None for the phase operator."""
        return {"sigma": self.k, "snorm": self.k, "quotient": 1, "phase": None}[self.kind]

    @property
    def cone_order(self):
        """Index m of the natural cone Gamma_m (None for the phase)."""
        return None if self.kind == "phase" else self.k

    @property
    def name(self) -> str:
        if self.kind == "sigma":
            return f"sigma_{self.k}"
        if self.kind == "snorm":
            return f"S_{self.k}"
        if self.kind == "phase":
            return "lagrangian_phase"
        if self.l == 0:
            return f"S_{self.k}^(1/{self.k})"
        return f"(S_{self.k}/S_{self.l})^(1/{self.k - self.l})"

    def _check_dim(self, lam):
        if lam.shape[-1] != self.n:
            raise DomainError(f"expected vectors of length {self.n}, got {lam.shape[-1]}")

    def __call__(self, lam):
        lam = _as_array(lam)
        self._check_dim(lam)
        if self.kind == "sigma":
            return sigma(self.k, lam)
        if self.kind == "snorm":
            return s_norm(self.k, lam)
        if self.kind == "quotient":
            return quotient_root(self.k, self.l, lam)
        return lagrangian_phase(lam)

    def unchecked(self, lam) -> np.ndarray:
        """Value without domain checks; quotient values are clipped to 0 off-cone."""
        lam = _as_array(lam)
        if self.kind == "quotient":
            return _quotient_unchecked(self.k, self.l, lam)
        if self.kind == "phase":
            return np.arctan(lam).sum(axis=-1)
        e = elementary_symmetric(lam, self.k)[..., self.k]
        return e / comb(self.n, self.k) if self.kind == "snorm" else e

    def grad(self, lam):
        return grad(self, lam)


def _sigma_deleted(lam: np.ndarray, k: int) -> np.ndarray:
    """sigma_k of lam with entry i removed, for every i (last axis)."""
    n = lam.shape[-1]
    out = np.empty(lam.shape)
    for i in range(n):
        rest = np.delete(lam, i, axis=-1)
        if k == 0:
            out[..., i] = 1.0
        elif k > n - 1:
            out[..., i] = 0.0
        else:
            out[..., i] = elementary_symmetric(rest, k)[..., k]
    return out


def grad(f: SymFun, lam) -> np.ndarray:
    """Analytic gradient of ``f`` with respect to the eigenvalues.

    For cone-bound kinds the vector must lie in the open cone; no
    one-sided derivative is offered on the boundary.
    """
    lam = _as_array(lam)
    f._check_dim(lam)
    n = f.n
    if f.kind == "phase":
        return 1.0 / (1.0 + lam * lam)
    if f.kind == "sigma":
        return _sigma_deleted(lam, f.k - 1)
    if f.kind == "snorm":
        return _sigma_deleted(lam, f.k - 1) / comb(n, f.k)
    k, l = f.k, f.l
    e = elementary_symmetric(lam, k)
    if not np.all(e[..., 1:] > 0.0):
        raise DomainError(f"gradient needs the open Gamma_{k} cone")
    sk = e[..., k] / comb(n, k)
    sl = e[..., l] / comb(n, l)
    dsk = _sigma_deleted(lam, k - 1) / comb(n, k)
    if l == 0:
        dlog = dsk / sk[..., None]
    else:
        dsl = _sigma_deleted(lam, l - 1) / comb(n, l)
        dlog = dsk / sk[..., None] - dsl / sl[..., None]
    q = (sk / sl) ** (1.0 / (k - l))
    return q[..., None] * dlog / (k - l)


def eval_extended(f: SymFun, cone, lam):
    """``f(lam)`` on the closed cone and 0 elsewhere.

    Not available for the Lagrangian phase, whose admissible set is a
    phase super-level set rather than a zero-extension domain.
    """
    from .cones import contains

    if f.kind == "phase":
        raise DomainError("the Lagrangian phase is not zero-extended; use phase thresholds")
    lam = _as_array(lam)
    inside = contains(cone, lam, closure=True)
    val = np.where(inside, f.unchecked(lam), 0.0)
    return val if val.ndim else float(val)
