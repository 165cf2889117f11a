"""
Explicit barriers: the sub/supersolution pair used for existence and the
Hoelder barriers ``-C~ (-g_xi)^alpha`` with their boundary envelope.

Every "sufficiently large" constant is found by doubling from 1 with a
numerical certificate as the stopping test, so the constants reported
are computed witnesses rather than the proof's existential ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cones as _cones
from .errors import ConstructionError, DomainError
from .grid import (
    Grid,
    GridField,
    defining_function,
    harmonic_extend,
    hessian_from_values,
)
from .hermitian import eigvalsh_stack
from .symfun import lagrangian_phase
from .viscosity import (
    OperatorSpec,
    certify_subsolution,
    certify_supersolution,
    constant,
)

__all__ = [
    "BarrierBundle",
    "HolderBarrier",
    "boundary_net",
    "build_bundle",
    "global_barrier",
    "holder_barrier",
    "holder_constant_at",
]

DOUBLING_CAP = 60


def _spectra(grid: Grid, values: np.ndarray) -> np.ndarray:
    return eigvalsh_stack(hessian_from_values(grid, values))


def _field_values(grid: Grid, phi) -> np.ndarray:
    if isinstance(phi, GridField):
        return phi.values
    return GridField.sample(grid, phi).values


@dataclass
class BarrierBundle:
    subsolution: GridField
    supersolution: GridField
    A1: float
    A2: float
    certificates: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    @property
    def ordered(self) -> bool:
        idx = self.subsolution.grid.closure
        return bool(np.all(self.subsolution.values[idx] <= self.supersolution.values[idx] + 1e-12))

    def to_dict(self) -> dict:
        return {
            "A1": self.A1,
            "A2": self.A2,
            "ordered": self.ordered,
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
            "log": self.log,
        }


def _doubling(pred, what: str, worst=None):
    log = []
    for j in range(DOUBLING_CAP + 1):
        a = float(2**j)
        ok = pred(a)
        log.append({"value": a, "ok": bool(ok)})
        if ok:
            return a, log
    raise ConstructionError(f"{what}: doubling cap 2^{DOUBLING_CAP} exceeded", worst() if worst else None)


def build_bundle(op: OperatorSpec, grid: Grid, phi, cert_tol: float | None = None) -> BarrierBundle:
    """Barrier pair ``(A1 rho + h + A2 rho, h)`` with h the harmonic extension of phi.

    A1 is the least power of two with ``lambda(H(A1 rho + h))`` in the
    closed cone at every interior node. A2 is the least power of two with
    ``f(2 A2 lambda(H rho)) / 2 >= max psi`` (degree-one normal form), the
    maximum taken over nodes and the value range of h. The defining
    function is shifted down by its largest band value so that the
    subsolution stays below phi on the band.

    For the phase operator the concavity split does not apply; A1 is the
    least power of two with ``sum arctan lambda(H(A1 rho + h)) >= h(z)``
    and A2 = 0.
    """
    opn = op.normalized()
    harm = harmonic_extend(grid, phi)
    rho = defining_function(grid).values
    rho = rho - max(float(np.max(rho[grid.band])), 0.0)
    hv = harm.values
    lam_rho = _spectra(grid, rho)
    z = grid.complex_coords(grid.interior)
    log = []

    if opn.is_phase:
        hz = opn.h(z)

        def ok1(a):
            return bool(np.all(lagrangian_phase(_spectra(grid, a * rho + hv)) >= hz))

        A1, l1 = _doubling(ok1, "A1 (phase)")
        A2 = 0.0
        log.append({"search": "A1", "steps": l1})
    else:
        def ok1(a):
            return bool(np.all(_cones.contains(opn.cone, _spectra(grid, a * rho + hv), closure=True, tol=1e-12)))

        A1, l1 = _doubling(ok1, "A1")
        zc = grid.complex_coords(grid.closure)
        hc = hv[grid.closure]
        levels = np.linspace(hc.min(), hc.max(), 5)
        psi_max = max(float(np.max(opn.rhs(zc, np.full(zc.shape[0], s)))) for s in levels)

        def ok2(a):
            return bool(np.min(0.5 * opn.f.unchecked(2.0 * a * lam_rho)) >= psi_max * (1.0 - 1e-12))

        A2, l2 = _doubling(ok2, "A2")
        log += [{"search": "A1", "steps": l1}, {"search": "A2", "steps": l2, "psi_max": psi_max}]
    sub_vals = (A1 + A2) * rho + hv
    ext = grid.node_class == 2
    sub_vals[ext] = hv[ext]
    sub = GridField(grid, sub_vals, {"kind": "bundle_subsolution", "A1": A1, "A2": A2})
    sup = harm.with_values(harm.values, kind="bundle_supersolution")
    certs = {
        "subsolution": certify_subsolution(sub, opn, cert_tol),
        "supersolution": certify_supersolution(sup, opn, cert_tol),
    }
    return BarrierBundle(sub, sup, A1, A2, certs, log)


# -- Hoelder barriers -------------------------------------------------------


def holder_constant_at(grid: Grid, phi, xi: np.ndarray, alpha: float) -> float:
    """``max |phi(z) - phi(xi)| / |z - xi|^(2 alpha)`` over band nodes z."""
    z = grid.complex_coords(grid.band)
    xi = np.asarray(xi, dtype=complex).reshape(1, -1)
    pv = np.asarray(phi(z), dtype=float)
    p0 = float(np.asarray(phi(xi), dtype=float).reshape(-1)[0])
    d = np.sqrt(np.sum(np.abs(z - xi) ** 2, axis=1))
    keep = d > 1e-14
    return float(np.max(np.abs(pv[keep] - p0) / d[keep] ** (2 * alpha)))


@dataclass
class HolderBarrier:
    xi: np.ndarray
    alpha: float
    C: float
    C_tilde: float
    field: GridField
    phi_xi: float
    checks: dict = field(default_factory=dict)

    def evaluate(self, z) -> np.ndarray:
        """``h_xi(z)`` (without the ``phi(xi)`` offset) from the closed form."""
        z = np.atleast_2d(np.asarray(z, dtype=complex))
        d = self.field.domain
        c = np.asarray(d.center, dtype=complex)
        R = d.radius
        rho = (np.sum(np.abs(z - c) ** 2, axis=1) - R * R) / (2 * R)
        g = self.C * rho - np.sum(np.abs(z - self.xi) ** 2, axis=1)
        return -self.C_tilde * np.clip(-g, 0.0, None) ** self.alpha

    def to_dict(self) -> dict:
        return {
            "xi": [[v.real, v.imag] for v in self.xi],
            "alpha": self.alpha,
            "C": self.C,
            "C_tilde": self.C_tilde,
            "phi_xi": self.phi_xi,
            "checks": self.checks,
        }


def _g_xi(grid: Grid, C: float, xi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    z = grid.complex_coords()
    return C * rho - np.sum(np.abs(z - xi[None, :]) ** 2, axis=1)


def _find_C(op: OperatorSpec, grid: Grid, xi: np.ndarray, rho: np.ndarray) -> tuple[float, list]:
    cone = op.cone

    def ok(c):
        lam = _spectra(grid, _g_xi(grid, c, xi, rho))
        return bool(np.all(_cones.contains(cone, lam)))

    return _doubling(ok, "C for g_xi")


def holder_barrier(xi, alpha: float, op: OperatorSpec, grid: Grid, phi, C_tilde: float | None = None,
                   tol: float | None = None, C: float | None = None) -> HolderBarrier:
    """Barrier ``h_xi = -C~ (-g_xi)^alpha`` with ``g_xi = C rho - |z - xi|^2``.

    C is the least power of two putting ``lambda(H g_xi)`` in the open
    cone at every interior node; C~ defaults to the measured
    ``2 alpha``-Hoelder constant of phi at xi over the band. The result
    is verified: admissible Hessians at interior nodes (diagonal-shift
    tolerance ``tol``, default h) and ``h_xi <= phi - phi(xi)`` on the band
    up to ``C~ (C max rho_band)^alpha``, the amount by which the band
    sticks out of the domain. Raises ConstructionError otherwise.
    """
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    d = grid.domain
    if d.shape != "ball":
        raise DomainError("Hoelder barriers are built on balls")
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    c = np.asarray(d.center, dtype=complex)
    if abs(np.linalg.norm(xi - c) - d.radius) > 1e-9 * d.radius:
        raise DomainError("xi must lie on the boundary sphere")
    rho = defining_function(grid).values
    if C is None:
        C, _ = _find_C(op, grid, xi, rho)
    if C_tilde is None:
        C_tilde = holder_constant_at(grid, phi, xi, alpha)
    g = _g_xi(grid, C, xi, rho)
    hx = -C_tilde * np.clip(-g, 0.0, None) ** alpha
    phi_xi = float(np.asarray(phi(xi[None, :]), dtype=float).reshape(-1)[0])
    fld = GridField(grid, hx + phi_xi, {"kind": "holder_barrier", "alpha": alpha, "C": C, "C_tilde": C_tilde})
    tol = grid.h if tol is None else tol
    # admissibility on nodes whose stencil stays off the band; next to the
    # band the centered jet of the singular profile is not sign-preserving
    lam = _spectra(grid, hx)
    cone = op.cone if not op.is_phase else _cones.positive(op.n)
    dist = lam.min(axis=1) if cone.kind == "gamma" and cone.m == cone.n else np.asarray(
        _cones.distance_to_boundary(cone, lam))
    layer = grid.boundary_layer
    deep = np.flatnonzero(~layer)
    wpos = deep[np.argmin(dist[deep])] if deep.size else None
    gam_margin = float(dist[wpos]) if deep.size else 0.0
    gam_ok = gam_margin >= -tol
    layer_margin = float(dist[layer].min()) if layer.any() else None
    zb = grid.complex_coords(grid.band)
    lhs = hx[grid.band]
    rhs = np.asarray(phi(zb), dtype=float) - phi_xi
    band_tol = C_tilde * (C * max(float(np.max(rho[grid.band])), 0.0)) ** alpha
    gap = lhs - rhs
    bpos = int(np.argmax(gap))
    checks = {
        "gamma_admissible": bool(gam_ok),
        "gamma_margin": gam_margin,
        "gamma_tol": tol,
        "boundary_layer_nodes": int(layer.sum()),
        "boundary_layer_margin": layer_margin,
        "band_gap": float(gap[bpos]),
        "band_tol": band_tol,
        "band_ok": bool(gap[bpos] <= band_tol),
    }
    if not gam_ok:
        node = int(grid.interior[wpos])
        raise ConstructionError(
            "h_xi fails the admissibility check",
            {"node": node, "coords": grid.coords(node).tolist(), "margin": gam_margin, "lambda": lam[wpos].tolist()},
        )
    if not checks["band_ok"]:
        node = int(grid.band[bpos])
        raise ConstructionError(
            "h_xi exceeds phi - phi(xi) on the band",
            {"node": node, "coords": grid.coords(node).tolist(), "gap": float(gap[bpos])},
        )
    return HolderBarrier(xi, float(alpha), float(C), float(C_tilde), fld, phi_xi, checks)


def boundary_net(domain, spacing: float) -> np.ndarray:
    """Points of the boundary sphere with covering radius at most ``spacing``.

    Lattice points on the faces of the cube ``[-1, 1]^d`` projected
    radially; the projection is 1-Lipschitz outside the unit ball, so a
    face lattice with covering radius ``spacing / R`` suffices.
    Returns complex points of shape (m, n).
    """
    if domain.shape != "ball":
        raise DomainError("boundary nets are built on balls")
    d = 2 * domain.n
    R = domain.radius
    if d == 2:
        m = max(8, int(math.ceil(2 * math.pi * R / spacing)))
        t = 2 * math.pi * np.arange(m) / m
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        step = 2.0 * spacing / (R * math.sqrt(d - 1))
        k = int(math.ceil(2.0 / step))
        ax = np.linspace(-1.0, 1.0, k + 1)
        face = np.stack(np.meshgrid(*([ax] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
        parts = []
        for a in range(d):
            for sgn in (-1.0, 1.0):
                parts.append(np.insert(face, a, sgn, axis=1))
        pts = np.unique(np.round(np.concatenate(parts), 12), axis=0)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts = R * pts + domain.real_center
    return pts[:, 0::2] + 1j * pts[:, 1::2]


def global_barrier(op: OperatorSpec, grid: Grid, phi, alpha: float, A_bound: float, spacing: float | None = None,
                   net=None, cert_tol: float | None = None) -> GridField:
    """Envelope ``max_xi (a h_xi + phi(xi))`` over a boundary net.

    ``a`` doubles from 1 until the envelope certifies as a subsolution of
    ``f = A_bound`` (degree-one form); for the phase operator the target
    is the operator's own ``h``. The maximizing net point is stored per
    node in ``meta['argmax_xi']`` together with the net itself.
    """
    if not (0 < alpha < 1):
        raise DomainError("alpha must lie in (0, 1)")
    spacing = 2.0 * grid.h if spacing is None else spacing
    xis = boundary_net(grid.domain, spacing) if net is None else np.asarray(net, dtype=complex)
    rho = defining_function(grid).values
    C, _ = _find_C(op, grid, xis[0], rho)
    phi_xi = np.asarray(phi(xis), dtype=float).reshape(-1)
    Ct = max(holder_constant_at(grid, phi, x, alpha) for x in xis)
    z = grid.complex_coords()
    zz = np.sum(np.abs(z) ** 2, axis=1)

    def envelope(a):
        best = np.full(grid.size, -np.inf)
        arg = np.zeros(grid.size, dtype=np.int64)
        for i, x in enumerate(xis):
            # |z - xi|^2 = |z|^2 - 2 Re<z, xi> + |xi|^2
            dist2 = zz - 2.0 * np.real(z @ x.conj()) + float(np.sum(np.abs(x) ** 2))
            val = -a * Ct * np.clip(dist2 - C * rho, 0.0, None) ** alpha + phi_xi[i]
            better = val > best
            best[better] = val[better]
            arg[better] = i
        return best, arg

    target = op.normalized()
    if not target.is_phase:
        target = target.with_psi(constant(A_bound), normalization=f"envelope test against f = {A_bound!r}")
    log = []
    for j in range(DOUBLING_CAP + 1):
        a = float(2**j)
        vals, arg = envelope(a)
        fld = GridField(grid, vals)
        cert = certify_subsolution(fld, target, cert_tol)
        log.append({"a": a, "margin": cert.margin, "passed": cert.passed})
        if cert.passed:
            return fld.with_values(
                vals,
                kind="global_barrier",
                a=a,
                C=C,
                C_tilde=Ct,
                alpha=alpha,
                net=xis,
                argmax_xi=arg,
                certificate=cert,
                log=log,
            )
    raise ConstructionError("global barrier: doubling cap exceeded", log[-1])
