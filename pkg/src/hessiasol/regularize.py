"""
Jensen sup/inf convolutions, upper contact sets and the ABP volume check.

The sup-convolution

    u^eps(z) = max_{z' in closure nodes} u(z') - (C0/eps) |z' - z|^2

is computed exactly over the discrete set of domain nodes. Because the
penalty is a sum over real axes, the maximum factorizes into one 1-D
max-plus pass per axis; nodes outside the closed domain enter as -inf.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .grid import GridField, real_hessian

__all__ = [
    "ABPReport",
    "ContactSet",
    "ConvolutionParams",
    "abp_check",
    "ball_volume",
    "contact_set",
    "inf_convolution",
    "sup_convolution",
]


@dataclass(frozen=True)
class ConvolutionParams:
    eps: float
    C0: float

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if self.C0 < 0:
            raise DomainError("C0 must be non-negative")

    @classmethod
    def from_fields(cls, eps: float, u: GridField, v: GridField | None = None) -> ConvolutionParams:
        """``C0 = max(osc u, osc v)`` over the closed-domain nodes."""
        idx = u.grid.closure
        osc = float(np.ptp(u.values[idx]))
        if v is not None:
            osc = max(osc, float(np.ptp(v.values[idx])))
        return cls(eps, osc)

    @property
    def penalty(self) -> float:
        return self.C0 / self.eps

    def semiconvexity_constants(self) -> dict:
        """Both readings of the semi-convexity constant, reported side by side."""
        return {
            "penalty_consistent": 2.0 * self.C0 / self.eps,
            "as_displayed": 2.0 * self.C0 / self.eps**2,
        }


def _maxplus_axis(vals: np.ndarray, axis: int, c: float, reach: int):
    """out[i] = max_j vals[j] - c (i - j)^2 along ``axis``; also returns argmax j."""
    L = vals.shape[axis]
    out = vals.copy()
    arg = np.broadcast_to(
        np.arange(L).reshape([-1 if a == axis else 1 for a in range(vals.ndim)]), vals.shape
    ).copy()
    for s in range(1, min(reach, L - 1) + 1):
        pen = c * s * s
        for sign in (1, -1):
            src = [slice(None)] * vals.ndim
            dst = [slice(None)] * vals.ndim
            if sign > 0:  # j = i + s
                src[axis], dst[axis] = slice(s, None), slice(None, L - s)
            else:  # j = i - s
                src[axis], dst[axis] = slice(None, L - s), slice(s, None)
            cand = vals[tuple(src)] - pen
            o = out[tuple(dst)]
            better = cand > o
            o[better] = cand[better]
            a = arg[tuple(dst)]
            j = np.broadcast_to(
                (np.arange(L)[src[axis]]).reshape([-1 if ax == axis else 1 for ax in range(vals.ndim)]),
                cand.shape,
            )
            a[better] = j[better]
    return out, arg


def sup_convolution(u: GridField, params: ConvolutionParams, return_argmax: bool = False, method: str = "separable"):
    """Jensen sup-convolution over the closed-domain nodes.

    Parameters
    ----------
    u : GridField
    params : ConvolutionParams
    return_argmax : bool
        Also return the flat index of a maximizer ``z*`` for every node.
    method : {'separable', 'brute'}
        ``'brute'`` scans all node pairs (O(N^2), small grids only).

    Returns
    -------
    GridField, optionally with an int array of maximizer indices.
    """
    g = u.grid
    c = params.penalty * g.h * g.h  # penalty per squared index step
    base = np.full(g.size, -np.inf)
    base[g.closure] = u.values[g.closure]
    if method == "brute":
        x = g.coords()
        src = g.closure
        out = np.empty(g.size)
        arg = np.empty(g.size, dtype=np.int64)
        for lo in range(0, g.size, 2048):
            blk = x[lo : lo + 2048]
            d2 = ((blk[:, None, :] - x[src][None, :, :]) ** 2).sum(-1)
            cand = base[src][None, :] - params.penalty * d2
            j = np.argmax(cand, axis=1)
            out[lo : lo + 2048] = cand[np.arange(blk.shape[0]), j]
            arg[lo : lo + 2048] = src[j]
    elif method == "separable":
        osc = float(np.ptp(u.values[g.closure]))
        reach = int(math.isqrt(int(osc / c)) + 2) if c > 0 else max(g.shape)
        vals = base.reshape(g.shape)
        args = []
        for axis in range(g.dim):
            vals, a = _maxplus_axis(vals, axis, c, reach)
            args.append(a)
        out = vals.reshape(-1)
        arg = None
        if return_argmax:
            # backtrack: the last pass fixed the last coordinate, and so on
            sub = list(np.unravel_index(np.arange(g.size), g.shape))
            for axis in range(g.dim - 1, -1, -1):
                sub[axis] = args[axis][tuple(sub)]
            arg = np.ravel_multi_index(tuple(sub), g.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = GridField(
        g,
        out,
        {
            "kind": "sup_convolution",
            "eps": params.eps,
            "C0": params.C0,
            "semiconvexity": params.semiconvexity_constants(),
        },
    )
    return (res, arg) if return_argmax else res


def inf_convolution(v: GridField, params: ConvolutionParams, return_argmin: bool = False, method: str = "separable"):
    """``v_eps = -(-v)^eps``: inf-convolution with the mirrored penalty."""
    neg = GridField(v.grid, -v.values)
    res = sup_convolution(neg, params, return_argmax=return_argmin, method=method)
    if return_argmin:
        f, arg = res
        return f.with_values(-f.values, kind="inf_convolution"), arg
    return res.with_values(-res.values, kind="inf_convolution")


@dataclass(frozen=True)
class ContactSet:
    """Upper contact set of a grid function.

    ``measure`` weights each member node by the share of its slope cell
    (the set of p selecting it) that lies inside ``B(0, delta)``;
    ``count_measure`` is the plain ``count * h^d``. The plain count
    overshoots by an O(h / delta) halo of partially covered cells.
    """

    delta: float
    members: np.ndarray
    measure: float
    count_measure: float
    weights: np.ndarray = field(repr=False, default=None)
    net_size: int = 0

    @property
    def count(self) -> int:
        return int(self.members.size)


def _p_net(dim: int, delta: float, spacing: float) -> np.ndarray:
    m = int(math.floor(delta / spacing + 1e-12))
    ax = np.arange(-m, m + 1) * spacing
    P = np.stack(np.meshgrid(*([ax] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return P[np.sum(P * P, axis=1) <= delta * delta * (1 + 1e-12)]


def _centered_gradient(u: GridField) -> np.ndarray:
    g = u.grid
    out = np.empty((g.interior.size, g.dim))
    for a, (p, m) in enumerate(g._neighbours["axial"]):
        out[:, a] = (u.values[p] - u.values[m]) / (2 * g.h)
    return out


def contact_set(u: GridField, delta: float, net_spacing: float | None = None, rtol: float = 1e-12) -> ContactSet:
    """Upper contact set ``E_delta`` by brute force over a net of slopes.

    A node x is a member iff for some slope p of a lattice net of the
    closed ball ``B(0, delta)`` the plane ``u(x) + p.(z - x)`` lies above
    ``u`` at every closed-domain node z, i.e. x maximizes ``u - p.z``.
    Net spacing defaults to ``min(delta/8, h/2)``.

    Each net point distributes unit weight over its (tied) maximizers.
    A member's hit volume ``hits * s^d`` is compared with the volume of
    its full slope cell, ``h^d |det D^2 u(x)|`` (change of variables
    p = grad u), and the node contributes ``h^d`` times the covered share
    (capped at 1; degenerate Hessians count fully).
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    g = u.grid
    s = min(delta / 8.0, g.h / 2.0) if net_spacing is None else float(net_spacing)
    P = _p_net(g.dim, delta, s)
    idx = g.closure
    x = g.coords(idx)
    v = u.values[idx]
    hits = np.zeros(idx.size)
    scale = max(1.0, float(np.max(np.abs(v))))
    for lo in range(0, P.shape[0], 64):
        tilt = v[None, :] - P[lo : lo + 64] @ x.T
        top = tilt.max(axis=1, keepdims=True)
        tied = tilt >= top - rtol * scale
        hits += (tied / tied.sum(axis=1, keepdims=True)).sum(axis=0)
    # discrete gradients inside the ball are exact supporting slopes for
    # affine pieces, which a lattice net generically misses
    extra = np.zeros(idx.size, dtype=bool)
    cand = _centered_gradient(u)
    cand = cand[np.sum(cand * cand, axis=1) <= delta * delta * (1 + 1e-12)]
    cand = np.unique(np.round(cand, 12), axis=0)
    for lo in range(0, cand.shape[0], 64):
        tilt = v[None, :] - cand[lo : lo + 64] @ x.T
        top = tilt.max(axis=1, keepdims=True)
        extra |= np.any(tilt >= top - rtol * scale, axis=0)
    interior = g.node_class[idx] == 0
    sel = ((hits > 0) | extra) & interior
    members = idx[sel]
    pos = np.searchsorted(g.interior, members)
    D = real_hessian(u)[pos]
    jac = np.abs(np.linalg.det(D)) if members.size else np.zeros(0)
    cell = g.h**g.dim * jac
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(cell > 0, np.minimum(1.0, hits[sel] * s**g.dim / cell), 1.0)
    hd = g.h**g.dim
    return ContactSet(float(delta), members, float(w.sum() * hd), members.size * hd, w, int(P.shape[0]))


def ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / gamma_fn(dim / 2 + 1)


@dataclass
class ABPReport:
    delta0: float
    entries: list
    bound_ok: bool
    semiconvex: bool
    min_hessian_eig: float
    dimension: int
    k: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "delta0": self.delta0,
            "entries": self.entries,
            "bound_ok": self.bound_ok,
            "semiconvex": self.semiconvex,
            "min_hessian_eig": self.min_hessian_eig,
            "dimension": self.dimension,
            "k": self.k,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def abp_check(u: GridField, k: float, deltas=None, net_spacing: float | None = None) -> ABPReport:
    """Contact-set volumes against the ABP lower bound.

    ``delta0 = (sup_interior u - sup_band u) / diam``; volumes are taken at
    ``delta0 / 8, delta0 / 4, delta0 / 2`` unless ``deltas`` is given. The
    reference bound is ``omega_d (delta_eff / (2k))^d`` in the real grid
    dimension d, the volume of the contact set of the extremal concave
    paraboloid with semi-convexity constant k, where ``delta_eff``
    discounts one grid step of slope. The semi-convexity precondition
    (min real Hessian eigenvalue >= -2k) is measured and reported; the
    bound is flagged vacuous when it fails.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    g = u.grid
    sup_in = float(np.max(u.values[g.interior]))
    sup_bd = float(np.max(u.values[g.band]))
    delta0 = (sup_in - sup_bd) / g.domain.diameter
    if not delta0 > 0:
        raise DomainError("u has no interior maximum above its boundary values (delta0 <= 0)")
    D = real_hessian(u)
    mins = float(np.min(np.linalg.eigvalsh(D)))
    semiconvex = mins >= -2.0 * k - 1e-9
    d = g.dim
    if deltas is None:
        deltas = [delta0 / 8, delta0 / 4, delta0 / 2]
    entries = []
    ok = True
    for dl in deltas:
        cs = contact_set(u, dl, net_spacing)
        d_eff = max(dl - k * g.h * math.sqrt(d), 0.0)
        bound = ball_volume(d) * (d_eff / (2.0 * k)) ** d
        entries.append(
            {
                "delta": float(dl),
                "volume": cs.measure,
                "ratio": cs.measure / dl**d,
                "bound": bound,
                "count": cs.count,
                "count_volume": cs.count_measure,
            }
        )
        ok &= cs.measure >= bound
    notes = [f"volumes measured in real dimension {d}"]
    if not semiconvex:
        notes.append("semi-convexity precondition fails; the bound is vacuous for this field")
    return ABPReport(delta0, entries, bool(ok and semiconvex), bool(semiconvex), mins, d, float(k), notes)
