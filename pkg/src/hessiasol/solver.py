"""
Dirichlet solver for ``f(lambda(Hu)) = psi(z, u)`` by explicit pseudo-time relaxation.

The update ``u <- u + dt (G[u] - psi(z, u))`` runs at interior nodes with
the boundary band frozen at the data. ``G`` is the zero-extended degree-one
normal form of ``f`` (or ``sum arctan lambda - h`` for the phase equation).
Each sweep reads only the previous iterate (Jacobi style), so node updates
are independent. An optional damped Newton method solves the same discrete
equations, for fine grids where relaxation needs many thousands of sweeps.

Also here: the penalized supersolution loop, Hoelder-modulus measurement and
the pointwise cross-checks between viscosity and wedge-product inequalities.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import cones as _cones
from .barriers import build_bundle
from .errors import ConvergenceError, DomainError, StabilityError
from .grid import DomainSpec, Grid, GridField, harmonic_extend
from .hermitian import mixed_discriminant, normalize_to_calB
from .symfun import _sigma_deleted, elementary_symmetric, lagrangian_phase, s_norm
from .viscosity import (
    OperatorSpec,
    certify_subsolution,
    certify_supersolution,
    gamma_subharmonic_check,
    inverse_sigma_op,
    node_spectra,
    quotient_op,
)

__all__ = [
    "SolveConfig",
    "SolveReport",
    "measure_holder",
    "penalized_supersolution",
    "pluripotential_crosscheck",
    "solve",
    "solve_quotient",
    "update_map",
]

INITS = ("subsolution", "harmonic", "custom")
METHODS = ("relaxation", "newton")


@dataclass
class SolveConfig:
    """Inputs of :func:`solve`.

    Parameters
    ----------
    op : OperatorSpec
        Operator; brought to its degree-one normal form before solving.
    domain : DomainSpec
    phi : callable or GridField
        Dirichlet data, read on the boundary band.
    h : float
        Grid spacing.
    dt : float, optional
        Pseudo-time step, default ``0.2 h^2 n`` clamped to ``h^2 / 2``.
    residual_tol : float
        Stop when the sup-norm residual is at most this.
    max_iters : int
    init : {'subsolution', 'harmonic', 'custom'}
        ``custom`` requires ``init_field``.
    method : {'relaxation', 'newton'}
        ``newton`` solves the same discrete equations by damped Newton steps
        (``max_iters`` then counts Newton steps); much faster on fine grids.
    """

    op: OperatorSpec
    domain: DomainSpec
    phi: object
    h: float
    dt: float | None = None
    residual_tol: float = 1e-6
    max_iters: int = 5_000_000
    init: str = "subsolution"
    init_field: GridField | None = None
    growth_window: int = 1000
    trace_stride: int = 1
    method: str = "relaxation"
    relax_fallback: int = 50

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}")
        if not self.residual_tol > 0:
            raise DomainError("residual_tol must be positive")
        self.init = str(self.init).lower().replace("harmonicextension", "harmonic")
        if self.init not in INITS:
            raise DomainError(f"init must be one of {INITS}")
        if self.init == "custom" and self.init_field is None:
            raise DomainError("init='custom' needs init_field")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")

    def step(self) -> tuple[float, bool]:
        """The pseudo-time step and whether the stability guard clamped it."""
        h2 = self.h * self.h
        dt = 0.2 * h2 * self.op.n if self.dt is None else float(self.dt)
        if dt > 0.5 * h2:
            return 0.5 * h2, True
        return dt, False


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual: float
    wall_time: float
    dt: float
    dt_clamped: bool
    h: float
    init: str
    normalization: str
    monotone: bool | None = None
    monotone_violations: int = 0
    max_decrease: float = 0.0
    last_violation: int | None = None
    certificates: dict = field(default_factory=dict)
    supercritical: dict | None = None
    history: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self, include_history: bool = False) -> dict:
        d = {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual": self.residual,
            "dt": self.dt,
            "dt_clamped": self.dt_clamped,
            "h": self.h,
            "init": self.init,
            "normalization": self.normalization,
            "monotone": self.monotone,
            "monotone_violations": self.monotone_violations,
            "max_decrease": self.max_decrease,
            "last_violation": self.last_violation,
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
            "notes": list(self.notes),
        }
        if self.supercritical is not None:
            d["supercritical"] = self.supercritical
        if include_history:
            d["history"] = [[int(i), float(r)] for i, r in self.history]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- the relaxation kernel --------------------------------------------------


class _Kernel:
    """Complex-Hessian eigenvalues at interior nodes, for the solver loop.

    Neighbour values are gathered at fixed flat-index offsets from the
    interior nodes, and the arithmetic runs on contiguous arrays.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.I = grid.interior
        self.strides = grid.strides
        self.h2 = grid.h * grid.h
        self._cache = {}

    def _at(self, v, *pairs):
        off = int(sum(sgn * self.strides[a] for a, sgn in pairs))
        idx = self._cache.get(off)
        if idx is None:
            idx = self._cache[off] = self.I + off
        return np.take(v, idx)

    def _mixed(self, v, a, b):
        t = self._at(v, (a, 1), (b, 1))
        t -= self._at(v, (a, 1), (b, -1))
        t -= self._at(v, (a, -1), (b, 1))
        t += self._at(v, (a, -1), (b, -1))
        return t

    def spectra(self, values: np.ndarray) -> np.ndarray:
        n = self.grid.n
        diag, off = self._entries(values)
        if n == 1:
            return diag[0][:, None]
        if n == 2:
            a, dd = diag
            re, im = off[(0, 1)]
            mean = 0.5 * (a + dd)
            rad = np.sqrt((0.5 * (a - dd)) ** 2 + re * re + im * im)
            return np.stack([mean + rad, mean - rad], axis=-1)
        return np.linalg.eigvalsh(self.hessians(values, (diag, off)))[:, ::-1]

    def hessians(self, values: np.ndarray, entries=None) -> np.ndarray:
        n = self.grid.n
        diag, off = self._entries(values) if entries is None else entries
        H = np.empty((self.I.size, n, n), dtype=complex)
        for j in range(n):
            H[:, j, j] = diag[j]
        for (j, k), (re, im) in off.items():
            H[:, j, k] = re + 1j * im
            H[:, k, j] = re - 1j * im
        return H

    def _entries(self, values: np.ndarray):
        v = values
        n = self.grid.n
        c4 = 4.0 * np.take(v, self.I)
        wp = 0.25 / self.h2
        wm = 0.25 / (4.0 * self.h2)
        diag = []
        for j in range(n):
            acc = self._at(v, (2 * j, 1))
            acc += self._at(v, (2 * j, -1))
            acc += self._at(v, (2 * j + 1, 1))
            acc += self._at(v, (2 * j + 1, -1))
            acc -= c4
            acc *= wp
            diag.append(acc)
        off = {}
        for j in range(n):
            for k in range(j + 1, n):
                xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
                re = self._mixed(v, xj, xk)
                re += self._mixed(v, yj, yk)
                re *= wm
                im = self._mixed(v, xj, yk)
                im -= self._mixed(v, yj, xk)
                im *= wm
                off[(j, k)] = (re, im)
        return diag, off


def _lhs(op: OperatorSpec, lam: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``op.lhs`` with one elementary-symmetric pass for quotient roots on Gamma_k."""
    f = op.f
    if op.is_phase:
        return np.arctan(lam).sum(axis=-1) - op.h(z)
    if f.kind == "quotient" and op.cone.kind == "gamma" and op.cone.m == f.k:
        n, k, l = op.n, f.k, f.l
        e = elementary_symmetric(lam, k)
        sk = e[:, k] / comb(n, k)
        sl = e[:, l] / comb(n, l)
        ok = np.all(e[:, 1:] >= 0.0, axis=1) & (sk > 0.0) & (sl > 0.0)
        out = np.zeros(lam.shape[0])
        out[ok] = (sk[ok] / sl[ok]) ** (1.0 / (k - l))
        return out
    return op.lhs(lam, z)


def _operator_value(op: OperatorSpec, lam: np.ndarray, z: np.ndarray, s: np.ndarray) -> np.ndarray:
    return _lhs(op, lam, z) - op.rhs(z, s)


def update_map(op: OperatorSpec, u: GridField, dt: float) -> np.ndarray:
    """One relaxation sweep applied to ``u``; returns the new interior values."""
    g = u.grid
    opn = op.normalized()
    lam = _Kernel(g).spectra(u.values)
    z = g.complex_coords(g.interior)
    s = u.values[g.interior]
    return s + dt * _operator_value(opn, lam, z, s)


def _push(op: OperatorSpec, lam: np.ndarray):
    """Nodes off the closed cone and the diagonal shift ``t`` taking them onto its boundary."""
    outside = ~np.asarray(_cones.contains(op.cone, lam, closure=True))
    lo = lam[outside]
    if op.cone.m == op.n:
        t = -lo.min(axis=1)
    else:
        t = -np.asarray(_cones.distance_to_boundary(op.cone, lo)).reshape(-1)
    return outside, t


def _newton_value(op: OperatorSpec, lam: np.ndarray, z: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Operator value with the zero extension replaced by ``f(lam + t 1) - t`` off the cone.

    Continuous, increasing in lam and negative off the cone, so with
    ``psi > 0`` its zeros are those of the zero-extended operator.
    """
    out = np.array(_lhs(op, lam, z), dtype=float)
    if not op.is_phase:
        outside, t = _push(op, lam)
        if outside.any():
            out[outside] = op.lhs(lam[outside] + t[:, None], z[outside]) - t
    return out - op.rhs(z, s)


def _lhs_gradient(op: OperatorSpec, lam: np.ndarray, scale: float) -> np.ndarray:
    """Eigenvalue gradient of the Newton operator value."""
    if op.is_phase:
        return 1.0 / (1.0 + lam * lam)
    out = np.empty_like(lam)
    outside, t = _push(op, lam)
    if outside.any():
        # -grad t at the boundary point, by implicit differentiation of sigma_m
        dm = _sigma_deleted(lam[outside] + t[:, None], op.cone.m - 1)
        den = dm.sum(axis=1)
        good = den > 1e-12 * np.abs(dm).max(axis=1)
        out[outside] = np.where(good[:, None], dm / np.where(good, den, 1.0)[:, None], 1.0 / op.n)
    ins = ~outside
    li = lam[ins]
    e = elementary_symmetric(li, op.f.k)
    edge = ~np.all(e[:, 1:] > 0.0, axis=1)
    if edge.any():
        li = li.copy()
        li[edge] += 1e-6 * scale
    out[ins] = op.f.grad(li)
    return out


class _Jacobian:
    """Sparse Jacobian of ``u -> G[u] - psi(z, u)`` at interior nodes.

    With ``A = V diag(grad f) V*`` at each node, the derivative of ``G`` in
    the real second differences is ``A_jj / 4`` on both pure axes of the
    ``j``-th complex variable and ``(Re A_kj, -Im A_kj) / 2`` on the mixed
    ones, mapped onto the same stencils the kernel uses.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        I = grid.interior
        self.m = I.size
        pos = np.full(grid.size, -1, dtype=np.int64)
        pos[I] = np.arange(self.m)
        self.pos = pos
        self.I = I
        self.h2 = grid.h * grid.h

    def _cols(self, off: int):
        c = self.pos[self.I + off]
        keep = c >= 0
        return np.nonzero(keep)[0], c[keep]

    def assemble(self, kern: _Kernel, op: OperatorSpec, vals, z, s):
        from scipy import sparse

        n, st = self.grid.n, self.grid.strides
        H = kern.hessians(vals)
        w, V = np.linalg.eigh(H)
        scale = max(1.0, float(np.abs(w).max()))
        gl = _lhs_gradient(op, w, scale)
        A = np.einsum("mij,mj,mkj->mik", V, gl, V.conj())
        cp = np.zeros((self.m, 2 * n))
        cm = {}
        for j in range(n):
            cp[:, 2 * j] = cp[:, 2 * j + 1] = 0.25 * A[:, j, j].real
            for k in range(j + 1, n):
                akj = A[:, k, j]
                xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
                cm[(xj, xk)] = cm[(yj, yk)] = 0.5 * akj.real
                cm[(xj, yk)] = -0.5 * akj.imag
                cm[(yj, xk)] = 0.5 * akj.imag
        ds = 1e-7 * np.maximum(1.0, np.abs(s))
        dpsi = (op.rhs(z, s + ds) - op.rhs(z, s - ds)) / (2.0 * ds)
        rows, cols, data = [np.arange(self.m)], [np.arange(self.m)], [-2.0 * cp.sum(axis=1) / self.h2 - dpsi]
        for a in range(2 * n):
            for sgn in (1, -1):
                r, c = self._cols(sgn * st[a])
                rows.append(r), cols.append(c), data.append(cp[r, a] / self.h2)
        for (a, b), coef in cm.items():
            for sa, sb, sign in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
                r, c = self._cols(sa * st[a] + sb * st[b])
                rows.append(r), cols.append(c), data.append(sign * coef[r] / (4.0 * self.h2))
        J = sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(self.m, self.m)
        )
        return J.tocsr()


def _linear_solve(J, rhs, tol: float):
    """Jacobi-preconditioned BiCGSTAB, with incomplete-LU GMRES as fallback."""
    from scipy.sparse import linalg as spla

    d = J.diagonal()
    d = np.where(np.abs(d) > 0, d, 1.0)
    M = spla.LinearOperator(J.shape, lambda x: x / d)
    x, info = spla.bicgstab(J, rhs, M=M, rtol=tol, maxiter=5000)
    if info == 0:
        return x
    ilu = spla.spilu(J.tocsc(), drop_tol=1e-4, fill_factor=10)
    M = spla.LinearOperator(J.shape, ilu.solve)
    x, _ = spla.gmres(J, rhs, M=M, rtol=tol, restart=50, maxiter=50)
    return x


def _newton(cfg: SolveConfig, op: OperatorSpec, kern: _Kernel, z, vals, s, dt, history):
    """Damped Newton on the relaxation's discrete equations; same fixed point.

    Steps are damped by halving until the 2-norm of the residual drops
    (the sup-norm is a poor merit where the zero extension is flat);
    when no damping down to 1/64 works, ``relax_fallback`` relaxation
    sweeps are taken instead. Stopping uses the sup-norm, as relaxation.
    """
    I = kern.I
    jac = _Jacobian(kern.grid)

    def residual(sv):
        vals[I] = sv
        return _newton_value(op, kern.spectra(vals), z, sv)

    r = residual(s)
    res = float(np.max(np.abs(r)))
    merit = float(np.linalg.norm(r))
    it = 0
    history.append((0, res))
    while res > cfg.residual_tol:
        if not math.isfinite(res):
            raise StabilityError(f"residual became {res} at Newton step {it}", history)
        if it >= cfg.max_iters:
            raise ConvergenceError(f"no convergence in {cfg.max_iters} Newton steps (residual {res:.3e})", history)
        J = jac.assemble(kern, op, vals, z, s)
        step = _linear_solve(J, -r, 1e-3 * min(1.0, res))
        alpha, accepted = 1.0, False
        while alpha >= 1.0 / 64 and np.all(np.isfinite(step)):
            trial = s + alpha * step
            rt = residual(trial)
            mt = float(np.linalg.norm(rt))
            if mt < (1.0 - 1e-4 * alpha) * merit:
                s[:], r, accepted = trial, rt, True
                break
            alpha *= 0.5
        if not accepted:
            r = residual(s)
            for _ in range(cfg.relax_fallback):
                s += dt * r
                r = residual(s)
        res, merit = float(np.max(np.abs(r))), float(np.linalg.norm(r))
        it += 1
        history.append((it, res))
    # report the residual of the zero-extended operator, as relaxation does
    vals[I] = s
    res = float(np.max(np.abs(_operator_value(op, kern.spectra(vals), z, s))))
    history[-1] = (it, res)
    return it, res


def _initial_field(cfg: SolveConfig, grid: Grid, op: OperatorSpec, notes: list) -> GridField:
    data = cfg.phi.values if isinstance(cfg.phi, GridField) else GridField.sample(grid, cfg.phi).values
    if cfg.init == "custom":
        if cfg.init_field.grid != grid:
            raise DomainError("init_field lives on a different grid")
        v = cfg.init_field.values.copy()
    elif cfg.init == "harmonic":
        v = harmonic_extend(grid, cfg.phi).values.copy()
    else:
        bundle = build_bundle(op, grid, cfg.phi)
        notes.append(f"bundle A1={bundle.A1:g} A2={bundle.A2:g}")
        v = bundle.subsolution.values.copy()
    # the bundle lies below the data on the band; raising band values keeps it a subsolution
    v[grid.band] = data[grid.band]
    return GridField(grid, v, {"kind": f"{cfg.init}_init"})


def solve(cfg: SolveConfig) -> tuple[GridField, SolveReport]:
    """Relax to the discrete solution of ``f(lambda(Hu)) = psi(z, u)``, ``u = phi`` on the band.

    Returns the converged field and a :class:`SolveReport`. The final field
    is re-certified as sub- and supersolution at ``10 residual_tol + 10 h``
    and checked for Gamma-admissibility at tolerance ``h``.

    Raises
    ------
    ConvergenceError
        ``max_iters`` reached; carries the residual history.
    StabilityError
        Residual grew for ``growth_window`` consecutive sweeps, or became NaN.
    """
    t0 = time.perf_counter()
    op = cfg.op.normalized()
    grid = Grid(cfg.domain, cfg.h)
    dt, clamped = cfg.step()
    notes = []
    if clamped:
        notes.append(f"dt clamped to h^2/2 = {dt:.6g}")
    u0 = _initial_field(cfg, grid, op, notes)
    kern = _Kernel(grid)
    I = grid.interior
    z = grid.complex_coords(I)
    vals = u0.values.copy()
    s = vals[I].copy()
    track = cfg.init == "subsolution" and cfg.method == "relaxation"
    violations, max_dec, last_bad = 0, 0.0, None
    history = []
    prev, grow = math.inf, 0
    it = 0
    res = math.inf
    if cfg.method == "newton":
        notes.append("method: damped Newton")
        it, res = _newton(cfg, op, kern, z, vals, s, dt, history)
    else:
        while True:
            vals[I] = s
            r = _operator_value(op, kern.spectra(vals), z, s)
            res = float(np.max(np.abs(r)))
            if not math.isfinite(res):
                raise StabilityError(f"residual became {res} at iteration {it}; decrease dt", history)
            if it % cfg.trace_stride == 0:
                history.append((it, res))
            if res <= cfg.residual_tol:
                break
            grow = grow + 1 if res > prev else 0
            if grow >= cfg.growth_window:
                raise StabilityError(
                    f"residual grew for {grow} consecutive iterations (dt={dt:.3g}); decrease dt", history
                )
            if it >= cfg.max_iters:
                raise ConvergenceError(f"no convergence in {cfg.max_iters} iterations (residual {res:.3e})", history)
            prev = res
            if track:
                neg = r < 0.0
                if neg.any():
                    violations += int(neg.sum())
                    last_bad = it
                    max_dec = max(max_dec, float(-dt * r.min()))
            s += dt * r
            it += 1
    if history[-1][0] != it:
        history.append((it, res))
    u = GridField(grid, vals, {"kind": "solution", "h": cfg.h, "iterations": it, "residual": res})
    ctol = 10.0 * cfg.residual_tol + 10.0 * cfg.h
    gamma_cone = op.cone
    certs = {
        "subsolution": certify_subsolution(u, op, ctol),
        "supersolution": certify_supersolution(u, op, ctol),
        "gamma": gamma_subharmonic_check(u, gamma_cone, cfg.h),
    }
    supercritical = None
    if op.is_phase:
        lam, _, _ = node_spectra(u)
        level = (op.n - 2) * math.pi / 2 + op.delta / 2
        ph = lagrangian_phase(lam)
        supercritical = {"level": level, "min_phase": float(ph.min()), "ok": bool(ph.min() >= level)}
    report = SolveReport(
        converged=True,
        iterations=it,
        residual=res,
        wall_time=time.perf_counter() - t0,
        dt=dt,
        dt_clamped=clamped,
        h=cfg.h,
        init=cfg.init,
        normalization=op.normalization,
        monotone=(violations == 0) if track else None,
        monotone_violations=violations,
        max_decrease=max_dec,
        last_violation=last_bad,
        certificates=certs,
        supercritical=supercritical,
        history=history,
        notes=notes,
    )
    return u, report


def solve_quotient(k: int, l: int, psi, phi, domain: DomainSpec, h: float, **kw) -> tuple[GridField, SolveReport]:
    """Solve ``S_k / S_l = psi`` through the root form ``(S_k/S_l)^(1/(k-l)) = psi^(1/(k-l))``."""
    op = quotient_op(domain.n, k, l, psi)
    return solve(SolveConfig(op, domain, phi, h, **kw))


# -- penalization -----------------------------------------------------------


class _Penalty:
    """``psi(z, s) = exp(j (s - u(z))) g(z)`` with ``u`` read off a grid field."""

    def __init__(self, u: GridField, g, j: float):
        self.u, self.g, self.j = u, g, float(j)

    def _u_at(self, z):
        z = np.asarray(z)
        x = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
        x[..., 0::2], x[..., 1::2] = z.real, z.imag
        return self.u.values[self.u.grid.index_of(x)]

    def __call__(self, z, s):
        gz = self.g(z) if callable(self.g) else float(self.g)
        return np.exp(self.j * (np.asarray(s) - self._u_at(z))) * gz


def penalized_supersolution(u: GridField, g, j: float, k: int, h: float | None = None,
                            residual_tol: float = 1e-6, **kw) -> tuple[GridField, SolveReport]:
    """Solve the inverse-sigma_k problem with right-hand side ``exp(j (v - u)) g`` and ``v = u`` on the band.

    The right-hand side is strictly increasing in ``v``. The result ``v_j``
    sits below ``u`` when ``u`` is a supersolution with data ``g``.
    """
    grid = u.grid
    if h is not None and abs(h - grid.h) > 1e-15:
        raise DomainError("penalized solve runs on the grid of u")
    op = inverse_sigma_op(grid.n, k, _Penalty(u, g, j), monotone_in_s=True)
    cfg = SolveConfig(op, grid.domain, u, grid.h, residual_tol=residual_tol, **kw)
    v, rep = solve(cfg)
    return v.with_values(v.values, kind="penalized", j=float(j)), rep


# -- Hoelder measurement ----------------------------------------------------


def measure_holder(u: GridField, alpha: float, n_pairs: int = 100_000, seed: int = 0,
                   max_distance: float | None = None) -> dict:
    """Hoelder-alpha quotients ``|u(z) - u(w)| / |z - w|^alpha`` over node pairs.

    All pairs at lattice offsets with sup-norm 1 are included, plus
    ``n_pairs`` random pairs of closure nodes. Quotients are grouped in
    dyadic distance bands ``[2^j h, 2^(j+1) h)``.

    Returns
    -------
    dict
        ``holder_constant``, ``bands`` (lower edge, constant, pair count),
        ``band_ratios`` between consecutive populated bands, ``slope`` of
        log band-constant against log distance, and ``divergent`` when
        the constant grows like ``band^(-alpha)`` toward small scales.
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    g = u.grid
    idx = g.closure
    v = u.values
    x = g.coords(idx)
    pos = np.full(g.size, -1, dtype=np.int64)
    pos[idx] = np.arange(idx.size)
    sub = np.stack(np.unravel_index(idx, g.shape), axis=1)
    ia, ib = [], []
    for off in np.ndindex(*([3] * g.dim)):
        o = np.asarray(off) - 1
        if not np.any(o) or tuple(o) < tuple(-o):  # each unordered offset once
            continue
        t = sub + o
        ok = np.all((t >= 0) & (t < np.asarray(g.shape)), axis=1)
        tgt = np.zeros(idx.size, dtype=np.int64)
        tgt[ok] = pos[np.ravel_multi_index(t[ok].T, g.shape)]
        ok &= tgt >= 0
        ia.append(np.flatnonzero(ok))
        ib.append(tgt[ok])
    rng = np.random.default_rng(seed)
    ra = rng.integers(0, idx.size, n_pairs)
    rb = rng.integers(0, idx.size, n_pairs)
    keep = ra != rb
    a = np.concatenate(ia + [ra[keep]])
    b = np.concatenate(ib + [rb[keep]])
    dist = np.linalg.norm(x[a] - x[b], axis=1)
    if max_distance is not None:
        sel = dist <= max_distance
        a, b, dist = a[sel], b[sel], dist[sel]
    q = np.abs(v[idx[a]] - v[idx[b]]) / dist**alpha
    band = np.floor(np.log2(dist / g.h) + 1e-12).astype(int)
    bands = []
    for j in np.unique(band):
        sel = band == j
        bands.append({"lower": float(g.h * 2.0**j), "constant": float(q[sel].max()), "pairs": int(sel.sum())})
    consts = np.array([bd["constant"] for bd in bands])
    lowers = np.array([bd["lower"] for bd in bands])
    ratios = (consts[1:] / consts[:-1]).tolist() if consts.size > 1 else []
    pos_c = consts > 0
    slope = float(np.polyfit(np.log(lowers[pos_c]), np.log(consts[pos_c]), 1)[0]) if pos_c.sum() >= 2 else 0.0
    best = int(np.argmax(q))
    return {
        "alpha": alpha,
        "holder_constant": float(q[best]),
        "argmax_distance": float(dist[best]),
        "pairs": int(q.size),
        "bands": bands,
        "band_ratios": ratios,
        "slope": slope,
        "divergent": bool(slope < -0.5 * alpha),
    }


# -- pointwise cross-checks -------------------------------------------------


def pluripotential_crosscheck(u: GridField, psi, k: int, n_B: int = 10, seed: int = 0,
                              tol: float | None = None, max_nodes: int | None = 2000) -> dict:
    """Node-level wedge-product inequalities on ``lambda = lambda(Hu)``.

    ``psi`` is the right-hand side of ``(dd^c u)^n / ((dd^c u)^(n-k) ^ omega^k) = psi``,
    that is ``S_n / S_(n-k) = psi``. Checks at every interior node:

    * ``quotient``: ``S_n - psi S_(n-k) >= -tol``;
    * ``sigma_k``: ``S_k - psi / binom(n, k) >= -tol``;
    * ``explicit_B``: product of the k smallest eigenvalues minus ``psi / binom(n, k)``;
    * ``random_B``: ``D(Hu x k, B^2 x (n-k)) - psi`` for ``n_B`` random ``B`` with
      ``D(Id x k, B x (n-k)) = 1`` (on at most ``max_nodes`` nodes);
    * ``converse``: where the k smallest eigenvalues have product ``>= psi``,
      ``S_n / S_(n-k) >= psi``.

    ``tol`` defaults to ``h``. Report-only; nothing is raised.
    """
    g = u.grid
    n = g.n
    if not 1 <= k <= n:
        raise DomainError(f"k={k} outside [1, {n}]")
    tol = g.h if tol is None else float(tol)
    lam, z, s = node_spectra(u)
    pv = np.broadcast_to(np.asarray(psi(z, s) if callable(psi) else psi, dtype=float), (lam.shape[0],))
    Sn, Snk, Sk = s_norm(n, lam), s_norm(n - k, lam), s_norm(k, lam)
    b = comb(n, k)
    srt = np.sort(lam, axis=1)
    prod_k = np.prod(srt[:, :k], axis=1)
    out = {"k": k, "n": n, "tol": tol, "binom": b, "n_nodes": int(lam.shape[0])}

    def summarize(name, margin, nodes=None):
        pos = int(np.argmin(margin))
        out[name] = {
            "margin": float(margin[pos]),
            "failures": int(np.sum(margin < -tol)),
            "ok": bool(margin[pos] >= -tol),
            "worst_node": int(g.interior[pos if nodes is None else nodes[pos]]),
        }

    summarize("quotient", Sn - pv * Snk)
    summarize("sigma_k", Sk - pv / b)
    summarize("explicit_B", b * prod_k - pv)
    if k < n:
        rng = np.random.default_rng(seed)
        Bs = []
        for _ in range(n_B):
            P = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            Bs.append(normalize_to_calB(P @ P.conj().T, np.eye(n), n - k))
        nodes = np.arange(lam.shape[0])
        if max_nodes is not None and nodes.size > max_nodes:
            nodes = np.sort(rng.choice(nodes, max_nodes, replace=False))
        H = _node_hessians(u, nodes)
        worst = np.full(nodes.size, np.inf)
        for B in Bs:
            B2 = B @ B
            for t, i in enumerate(nodes):
                val = mixed_discriminant(*([H[t]] * k + [B2] * (n - k)))
                worst[t] = min(worst[t], val - pv[i])
        summarize("random_B", worst, nodes)
        out["random_B"]["n_B"] = n_B
        out["random_B"]["nodes_checked"] = int(nodes.size)
    hit = prod_k >= pv
    with np.errstate(divide="ignore", invalid="ignore"):
        quot = np.where(Snk > 0, Sn / Snk, -np.inf)
    conv = np.where(hit, quot - pv, np.inf)
    out["converse"] = {
        "applicable": int(hit.sum()),
        "margin": float(conv.min()) if hit.any() else None,
        "ok": bool(not hit.any() or conv.min() >= -tol),
    }
    out["ok"] = all(v["ok"] for key, v in out.items() if isinstance(v, dict))
    return out


def _node_hessians(u: GridField, positions: np.ndarray) -> np.ndarray:
    from .grid import hessian_from_values

    return hessian_from_values(u.grid, u.values)[positions]
