"""
Operators f(lambda(Hu)) = psi(z, u) and discrete viscosity certificates.

Sub/supersolution tests use the discrete second-order jet of a grid
function at each interior node (centered differences), which is the
consistent surrogate of testing with smooth quadratics from above or
below. Nodes where the pure second differences disagree in sign at the
scale ``1/h`` (kinks) carry no trustworthy jet; they are recorded and
left out of the margins.

The phase operator is written ``sum arctan(lam) - h(z) = 0`` and stored
with ``psi = 0``; every other operator compares the zero-extended
``f`` with ``psi``.
"""
from __future__ import annotations

import json
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from . import cones as _cones
from .cones import ConeSpec
from .errors import DomainError, GridError
from .grid import GridField, _second_differences, hessian_from_values
from .hermitian import eigvalsh_stack
from .symfun import SymFun, eval_extended, lagrangian_phase

__all__ = [
    "Certificate",
    "ComparisonReport",
    "GammaCheck",
    "OperatorSpec",
    "certify",
    "certify_subsolution",
    "certify_supersolution",
    "compare",
    "constant",
    "gamma_subharmonic_check",
    "hessian_op",
    "inverse_sigma_op",
    "kink_nodes",
    "lagrangian_op",
    "monge_ampere",
    "node_spectra",
    "quotient_op",
]

DEFINITIONS = {
    "inf_over_n": "inf_over_n",
    "infovern": "inf_over_n",
    "cone_restricted": "cone_restricted",
    "conerestricted": "cone_restricted",
}


class constant:
    """Constant right-hand side ``psi(z, s) = c`` (or ``h(z) = c``)."""

    def __init__(self, c: float):
        self.c = float(c)

    def __call__(self, z, s=None):
        return np.full(np.shape(z)[0], self.c)

    def __repr__(self):
        return f"constant({self.c!r})"


def _as_rhs(psi):
    if callable(psi):
        return psi
    return constant(psi)


class _Power:
    """``psi -> (psi / scale) ** p``, picklable and self-describing."""

    def __init__(self, base, p: float, scale: float = 1.0):
        self.base, self.p, self.scale = base, p, scale

    def __call__(self, z, s):
        v = np.asarray(self.base(z, s), dtype=float)
        return np.clip(v / self.scale, 0.0, None) ** self.p


@dataclass(frozen=True)
class OperatorSpec:
    """The triple (f, Gamma, psi), plus the phase data for the Lagrangian case.

    Attributes
    ----------
    kind : str
        'monge_ampere', 'hessian', 'quotient', 'inverse_sigma', 'lagrangian' or 'custom'.
    f : SymFun
        Evaluated on eigenvalue vectors of the complex Hessian.
    cone : ConeSpec
        Admissible set; for the phase operator the supercritical set at
        level ``(n-2) pi/2 + delta/2``.
    psi : callable ``(z, s) -> array``
        Right-hand side matched to ``f`` (already root-normalized when
        ``f`` has degree one).
    monotone_in_s : bool
        Caller's claim that ``s -> psi(z, s)`` is weakly increasing.
    h, delta
        Phase right-hand side and its supercriticality gap.
    normalization : str
        How the user-facing equation was transformed into ``f = psi``.
    """

    kind: str
    n: int
    f: SymFun
    cone: ConeSpec
    psi: Callable = field(default_factory=lambda: constant(0.0))
    monotone_in_s: bool = True
    h: Callable | None = None
    delta: float | None = None
    normalization: str = "identity"
    params: dict = field(default_factory=dict, compare=False)

    @property
    def is_phase(self) -> bool:
        return self.f.kind == "phase"

    def lhs(self, lam: np.ndarray, z: np.ndarray) -> np.ndarray:
        if self.is_phase:
            return lagrangian_phase(lam) - self.h(z)
        return np.asarray(eval_extended(self.f, self.cone, lam))

    def rhs(self, z: np.ndarray, s: np.ndarray) -> np.ndarray:
        if self.is_phase:
            return np.zeros(np.shape(z)[0])
        return np.broadcast_to(np.asarray(self.psi(z, s), dtype=float), (np.shape(z)[0],))

    def normalized(self) -> OperatorSpec:
        """The degree-one normal form used by the solvers."""
        if self.is_phase or self.f.degree == 1:
            return self
        k, n = self.f.k, self.n
        if self.f.kind == "snorm":
            psi = _Power(self.psi, 1.0 / k)
            note = f"S_{k} = psi  ->  S_{k}^(1/{k}) = psi^(1/{k})"
        else:  # sigma_k = binom(n,k) S_k
            psi = _Power(self.psi, 1.0 / k, comb(n, k))
            note = f"sigma_{k} = psi  ->  S_{k}^(1/{k}) = (psi/binom({n},{k}))^(1/{k})"
        return replace(self, f=SymFun.root(k, n), psi=psi, normalization=note)

    def with_psi(self, psi, monotone_in_s: bool | None = None, normalization: str | None = None) -> OperatorSpec:
        return replace(
            self,
            psi=_as_rhs(psi),
            monotone_in_s=self.monotone_in_s if monotone_in_s is None else monotone_in_s,
            normalization=self.normalization if normalization is None else normalization,
        )

    def validate_on(self, u: GridField, s_range=None) -> dict:
        """Sampled checks of the standing assumptions on the nodes of ``u``.

        psi > 0 and (when flagged) monotone in s on a few levels of
        ``s_range``; for the phase operator, the range of h.
        """
        g = u.grid
        z = g.complex_coords(g.closure)
        out = {}
        if self.is_phase:
            hv = np.asarray(self.h(z), dtype=float)
            lo, hi = (self.n - 2) * math.pi / 2, self.n * math.pi / 2
            out["h_min"], out["h_max"] = float(hv.min()), float(hv.max())
            out["delta_measured"] = float(hv.min() - lo)
            out["ok"] = bool(hv.min() > lo and hv.max() < hi)
            return out
        vals = u.values[g.closure]
        lo, hi = (float(vals.min()), float(vals.max())) if s_range is None else s_range
        levels = np.linspace(lo, hi, 5)
        prev = None
        pos_ok, mono_ok = True, True
        for s in levels:
            p = self.rhs(z, np.full(z.shape[0], s))
            pos_ok &= bool(np.all(p > 0))
            if prev is not None:
                mono_ok &= bool(np.all(p >= prev - 1e-12 * np.abs(prev)))
            prev = p
        out["psi_positive"] = pos_ok
        out["psi_monotone"] = mono_ok
        out["ok"] = pos_ok and (mono_ok or not self.monotone_in_s)
        return out

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n": self.n,
            "f": self.f.name,
            "cone": self.cone.name,
            "normalization": self.normalization,
            "monotone_in_s": self.monotone_in_s,
        }
        if self.delta is not None:
            d["delta"] = self.delta
        d.update({k: v for k, v in self.params.items() if isinstance(v, (int, float, str, bool))})
        return d


def monge_ampere(n: int, psi=1.0, normal_form: bool = True, monotone_in_s: bool = True) -> OperatorSpec:
    """``S_n(lambda) = psi`` on Gamma_n; ``normal_form`` uses ``S_n^(1/n) = psi^(1/n)``."""
    op = OperatorSpec("monge_ampere", n, SymFun.s_norm_k(n, n), _cones.positive(n), _as_rhs(psi), monotone_in_s)
    return op.normalized() if normal_form else op


def hessian_op(n: int, k: int, psi=1.0, normal_form: bool = True, monotone_in_s: bool = True) -> OperatorSpec:
    """``S_k(lambda) = psi`` on Gamma_k."""
    op = OperatorSpec(
        "hessian", n, SymFun.s_norm_k(k, n), _cones.gamma(k, n), _as_rhs(psi), monotone_in_s, params={"k": k}
    )
    return op.normalized() if normal_form else op


def quotient_op(n: int, k: int, l: int, psi=1.0, monotone_in_s: bool = True) -> OperatorSpec:
    """``S_k / S_l = psi`` on Gamma_k, stored as ``(S_k/S_l)^(1/(k-l)) = psi^(1/(k-l))``."""
    if not (0 <= l < k <= n):
        raise DomainError(f"need 0 <= l < k <= n, got k={k}, l={l}")
    note = f"S_{k}/S_{l} = psi  ->  (S_{k}/S_{l})^(1/{k - l}) = psi^(1/{k - l})"
    return OperatorSpec(
        "quotient",
        n,
        SymFun.quotient(k, l, n),
        _cones.gamma(k, n),
        _Power(_as_rhs(psi), 1.0 / (k - l)),
        monotone_in_s,
        normalization=note,
        params={"k": k, "l": l},
    )


def inverse_sigma_op(n: int, k: int, psi=1.0, monotone_in_s: bool = True) -> OperatorSpec:
    """``(dd^c u)^n / ((dd^c u)^(n-k) ^ omega^k) = psi``, i.e. ``S_n / S_(n-k) = psi``."""
    if not (1 <= k <= n):
        raise DomainError(f"k={k} outside [1, {n}]")
    op = quotient_op(n, n, n - k, psi, monotone_in_s)
    note = (
        f"(dd^c u)^{n} / ((dd^c u)^{n - k} ^ omega^{k}) = S_{n}/S_{n - k} = psi"
        f"  ->  (S_{n}/S_{n - k})^(1/{k}) = psi^(1/{k})"
    )
    return replace(op, kind="inverse_sigma", normalization=note, params={"k": k})


def lagrangian_op(n: int, h, delta: float | None = None) -> OperatorSpec:
    """``sum arctan(lambda_i) = h(z)`` with supercritical ``h >= (n-2) pi/2 + delta``."""
    lo, hi = (n - 2) * math.pi / 2, n * math.pi / 2
    if not callable(h):
        c = float(h)
        if not (lo < c < hi):
            raise DomainError(f"phase level {c} outside ({lo:.6g}, {hi:.6g})")
        delta = c - lo if delta is None else delta
        h = constant(c)
    if delta is None or not delta > 0:
        raise DomainError("a positive supercriticality gap delta is required")
    cone = _cones.phase_cone(lo + delta / 2, n)
    return OperatorSpec(
        "lagrangian", n, SymFun.phase(n), cone, constant(0.0), True, h=h, delta=float(delta),
        normalization="sum arctan(lambda) - h(z) = 0",
    )


# -- node-level machinery ---------------------------------------------------


def node_spectra(u: GridField):
    """Eigenvalues (m, n), complex coordinates (m, n) and values (m,) at interior nodes."""
    g = u.grid
    H = hessian_from_values(g, u.values)
    lam = eigvalsh_stack(H)
    return lam, g.complex_coords(g.interior), u.values[g.interior]


def kink_nodes(u: GridField, kappa: float = 1.0) -> np.ndarray:
    """Interior positions (into ``grid.interior``) whose pure second
    differences take both signs at scale ``kappa / h``."""
    g = u.grid
    pure, _ = _second_differences(g, u.values)
    P = g.h * np.stack(pure, axis=1)
    mask = np.any(P >= kappa, axis=1) & np.any(P <= -kappa, axis=1)
    return np.flatnonzero(mask)


@dataclass
class Certificate:
    kind: str  # 'subsolution' | 'supersolution' | 'both'
    verdict: str  # 'Subsolution' | 'Supersolution' | 'Both' | 'Neither'
    passed: bool
    margin: float
    tol: float
    n_checked: int
    n_vacuous: int = 0
    kinks: list = field(default_factory=list)
    worst: dict | None = None
    definition: str | None = None
    parts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "verdict": self.verdict,
            "passed": self.passed,
            "margin": self.margin,
            "tol": self.tol,
            "n_checked": self.n_checked,
            "n_vacuous": self.n_vacuous,
            "n_kinks": len(self.kinks),
            "kinks": list(self.kinks)[:50],
            "worst": self.worst,
        }
        if self.definition:
            d["definition"] = self.definition
        if self.parts:
            d["parts"] = {k: v.to_dict() for k, v in self.parts.items()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _worst(g, pos, margin, lam) -> dict:
    node = int(g.interior[pos])
    return {
        "node": node,
        "coords": g.coords(node).tolist(),
        "margin": float(margin[pos]),
        "lambda": np.asarray(lam[pos]).tolist(),
    }


def _default_tol(u: GridField, tol):
    return 10.0 * u.h if tol is None else float(tol)


def _finish(u, kind, label, margins, tol, lam, kinks, vacuous=None, definition=None) -> Certificate:
    g = u.grid
    keep = np.ones(margins.size, dtype=bool)
    keep[kinks] = False
    if vacuous is not None:
        keep &= ~vacuous
    idx = np.flatnonzero(keep)
    if idx.size:
        pos = idx[np.argmin(margins[idx])]
        margin = float(margins[pos])
        worst = _worst(g, pos, margins, lam)
    else:
        margin, worst = 0.0, None
    passed = bool(margin >= -tol)
    return Certificate(
        kind,
        label if passed else "Neither",
        passed,
        margin,
        tol,
        int(idx.size),
        int(vacuous.sum()) if vacuous is not None else 0,
        [int(g.interior[i]) for i in kinks],
        worst,
        definition,
    )


def certify_subsolution(u: GridField, op: OperatorSpec, tol: float | None = None, exclude_kinks: bool = True,
                        kappa: float = 1.0) -> Certificate:
    """Subsolution test ``f_ext(lambda(Hu)) >= psi(z, u) - tol`` at interior nodes.

    ``tol`` defaults to ``10 h``. The reported margin is the smallest
    ``f_ext - psi`` over non-kink nodes.
    """
    tol = _default_tol(u, tol)
    lam, z, s = node_spectra(u)
    margins = op.lhs(lam, z) - op.rhs(z, s)
    kinks = kink_nodes(u, kappa) if exclude_kinks else np.zeros(0, dtype=int)
    return _finish(u, "subsolution", "Subsolution", margins, tol, lam, kinks)


def _sampled_inf(H, op, z, s, seed: int = 0, n_dirs: int = 20, ts=None) -> np.ndarray:
    """min over N in {0} U {t v v^*} of lhs(H + N) - rhs, by random rank-one augmentations."""
    rng = np.random.default_rng(seed)
    ts = np.logspace(-3, 3, 13) if ts is None else ts
    n = H.shape[-1]
    rhs = op.rhs(z, s)
    best = op.lhs(eigvalsh_stack(H), z) - rhs
    for _ in range(n_dirs):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        P = np.outer(v, v.conj())
        for t in ts:
            lam = eigvalsh_stack(H + t * P)
            best = np.minimum(best, op.lhs(lam, z) - rhs)
    return best


def certify_supersolution(u: GridField, op: OperatorSpec, tol: float | None = None,
                          definition: str = "inf_over_n", sampled: bool = False, exclude_kinks: bool = True,
                          kappa: float = 1.0, seed: int = 0) -> Certificate:
    """Supersolution test under either definition.

    ``inf_over_n``: a node fails iff ``f_ext(lambda(Hu + N)) > psi + tol``
    for every PSD augmentation N. As f is nondecreasing along Gamma_n and
    vanishes on the boundary of Gamma, the infimum is realized by pushing
    lambda along the diagonal onto the boundary when it lies outside the
    closed cone, and by N = 0 otherwise. With ``sampled=True`` the
    infimum is instead sampled over random rank-one augmentations.

    ``cone_restricted``: only nodes with lambda in the closed cone are
    tested, with ``f(lambda) <= psi + tol``; the rest pass vacuously.
    """
    tol = _default_tol(u, tol)
    definition = DEFINITIONS.get(str(definition).lower().replace("-", "_"), None)
    if definition is None:
        raise DomainError("definition must be 'inf_over_n' or 'cone_restricted'")
    g = u.grid
    H = hessian_from_values(g, u.values)
    lam = eigvalsh_stack(H)
    z, s = g.complex_coords(g.interior), u.values[g.interior]
    kinks = kink_nodes(u, kappa) if exclude_kinks else np.zeros(0, dtype=int)
    rhs = op.rhs(z, s)
    vacuous = None
    if definition == "inf_over_n":
        if sampled:
            margins = -_sampled_inf(H, op, z, s, seed)
        elif op.is_phase:
            # the phase is increasing in every eigenvalue: N = 0 is the infimum
            margins = rhs - op.lhs(lam, z)
        else:
            d = np.asarray(_cones.distance_to_boundary(op.cone, lam))
            pushed = lam + np.clip(-d, 0.0, None)[:, None]
            margins = rhs - op.lhs(pushed, z)
    else:
        inside = np.asarray(_cones.contains(op.cone, lam, closure=True))
        margins = np.where(inside, rhs - op.lhs(lam, z), np.inf)
        vacuous = ~inside
    cert = _finish(u, "supersolution", "Supersolution", margins, tol, lam, kinks, vacuous, definition)
    if sampled:
        cert.definition = "inf_over_n (sampled)"
    return cert


def certify(u: GridField, op: OperatorSpec, tol: float | None = None, definition: str = "inf_over_n",
            **kw) -> Certificate:
    """Both tests; verdict Both / Subsolution / Supersolution / Neither."""
    sub = certify_subsolution(u, op, tol, **{k: v for k, v in kw.items() if k in ("exclude_kinks", "kappa")})
    sup = certify_supersolution(u, op, tol, definition, **kw)
    verdict = {(True, True): "Both", (True, False): "Subsolution", (False, True): "Supersolution"}.get(
        (sub.passed, sup.passed), "Neither"
    )
    return Certificate(
        "both", verdict, sub.passed and sup.passed, min(sub.margin, sup.margin), sub.tol,
        max(sub.n_checked, sup.n_checked), sup.n_vacuous, sub.kinks, None, sup.definition,
        {"subsolution": sub, "supersolution": sup},
    )


@dataclass
class GammaCheck:
    ok: bool
    margin: float
    tol: float
    worst: dict | None = None

    def __bool__(self):
        return self.ok

    def __iter__(self):
        yield self.ok
        yield self.margin

    def to_dict(self) -> dict:
        return {"ok": self.ok, "margin": self.margin, "tol": self.tol, "worst": self.worst}


def gamma_subharmonic_check(u: GridField, cone: ConeSpec, tol: float | None = None) -> GammaCheck:
    """lambda(Hu) in the closed cone up to a diagonal shift of ``tol`` (default h) at every interior node.

    Unpacks as ``ok, margin``; the margin is the smallest signed diagonal
    distance to the boundary.
    """
    tol = u.h if tol is None else float(tol)
    lam, _, _ = node_spectra(u)
    if cone.kind == "gamma" and cone.m == cone.n:
        d = lam.min(axis=1)  # exact for the positive orthant
    else:
        d = np.asarray(_cones.distance_to_boundary(cone, lam))
    pos = int(np.argmin(d))
    margin = float(d[pos])
    return GammaCheck(bool(margin >= -tol), margin, tol, _worst(u.grid, pos, d, lam))


@dataclass
class ComparisonReport:
    interior_gap: float
    boundary_gap: float
    tol_grid: float
    principle_ok: bool
    strict: bool
    certification: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "interior_gap": self.interior_gap,
            "boundary_gap": self.boundary_gap,
            "tol_grid": self.tol_grid,
            "principle_ok": self.principle_ok,
            "strict_interior": self.strict,
            "certification": self.certification,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def compare(u_sub: GridField, v_super: GridField, op: OperatorSpec | None = None, C: float = 1.0,
            certify_inputs: bool = True, cert_tol: float | None = None) -> ComparisonReport:
    """Discrete comparison: ``max_I (u - v) <= max(max_B (u - v), 0) + C h``.

    When ``op`` is given the inputs are certified first and the status is
    recorded (the comparison itself is computed regardless).
    """
    if u_sub.grid != v_super.grid:
        raise GridError("fields live on different grids")
    g = u_sub.grid
    diff = u_sub.values - v_super.values
    ig = float(np.max(diff[g.interior]))
    bg = float(np.max(diff[g.band]))
    tol_grid = C * g.h
    ok = ig <= max(bg, 0.0) + tol_grid
    cert = {}
    if op is not None and certify_inputs:
        cs = certify_subsolution(u_sub, op, cert_tol)
        cv = certify_supersolution(v_super, op, cert_tol)
        cert = {"subsolution": cs.passed, "supersolution": cv.passed,
                "sub_margin": cs.margin, "super_margin": cv.margin}
    return ComparisonReport(ig, bg, tol_grid, bool(ok), bool(ig < max(bg, 0.0)), cert)
