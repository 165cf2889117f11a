"""
Uniform grids over bounded domains in C^n, viewed as R^(2n).

Real axes are ordered ``(x_1, y_1, ..., x_n, y_n)`` with ``z_j = x_j + i y_j``.
Nodes are classified as interior (``I``), boundary band (``B``: every
non-interior node touched by the 2nd-difference stencil of an interior
node) or exterior (``E``). Band nodes carry Dirichlet data and are never
updated by the solvers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, GridError, NumericalError

__all__ = [
    "ComplexHessianField",
    "DomainSpec",
    "Grid",
    "GridField",
    "ball",
    "box",
    "complex_hessian",
    "defining_function",
    "harmonic_extend",
    "mean_value_defect",
    "pseudoconvexity_witness",
    "read_csv",
    "real_hessian",
    "write_csv",
]

INTERIOR, BAND, EXTERIOR = 0, 1, 2
CLASS_LABELS = np.array(["I", "B", "E"])


@dataclass(frozen=True)
class DomainSpec:
    """A ball or a box in C^n."""

    shape: str
    n: int
    radius: float | None = None
    half_widths: tuple | None = None
    center: tuple = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("complex dimension must be positive")
        c = np.zeros(self.n, dtype=complex) if self.center is None else np.asarray(self.center, dtype=complex).reshape(-1)
        if c.size != self.n:
            raise DomainError(f"center must have {self.n} complex entries")
        object.__setattr__(self, "center", tuple(c.tolist()))
        if self.shape == "ball":
            if self.radius is None or not self.radius > 0:
                raise DomainError("ball radius must be positive")
        elif self.shape == "box":
            w = np.asarray(self.half_widths, dtype=float).reshape(-1)
            if w.size == 1:
                w = np.repeat(w, 2 * self.n)
            if w.size != 2 * self.n or np.any(w <= 0):
                raise DomainError(f"box needs {2 * self.n} positive half-widths")
            object.__setattr__(self, "half_widths", tuple(w.tolist()))
        else:
            raise DomainError(f"unknown domain shape {self.shape!r}")

    @property
    def real_center(self) -> np.ndarray:
        c = np.asarray(self.center, dtype=complex)
        return np.column_stack([c.real, c.imag]).reshape(-1)

    @property
    def extents(self) -> np.ndarray:
        if self.shape == "ball":
            return np.full(2 * self.n, float(self.radius))
        return np.asarray(self.half_widths, dtype=float)

    @property
    def diameter(self) -> float:
        if self.shape == "ball":
            return 2.0 * self.radius
        return 2.0 * float(np.linalg.norm(self.half_widths))

    def inside(self, x: np.ndarray) -> np.ndarray:
        """Strict membership of real points ``x`` (shape (..., 2n))."""
        d = x - self.real_center
        if self.shape == "ball":
            return np.sum(d * d, axis=-1) < self.radius**2 * (1.0 - 1e-12)
        return np.all(np.abs(d) < self.extents * (1.0 - 1e-12), axis=-1)

    def to_dict(self) -> dict:
        c = np.asarray(self.center, dtype=complex)
        d = {"shape": self.shape, "n": self.n, "center": [[v.real, v.imag] for v in c]}
        if self.shape == "ball":
            d["radius"] = self.radius
        else:
            d["half_widths"] = list(self.half_widths)
        return d


def ball(n: int, radius: float = 1.0, center=None) -> DomainSpec:
    return DomainSpec("ball", n, radius=radius, center=center)


def box(n: int, half_widths, center=None) -> DomainSpec:
    return DomainSpec("box", n, half_widths=half_widths, center=center)


def _stencil_offsets(d: int):
    offs = []
    for a in range(d):
        e = np.zeros(d, dtype=int)
        e[a] = 1
        offs += [e, -e]
    for a in range(d):
        for b in range(a + 1, d):
            for sa in (1, -1):
                for sb in (1, -1):
                    e = np.zeros(d, dtype=int)
                    e[a], e[b] = sa, sb
                    offs.append(e)
    return offs


class Grid:
    """Node geometry and classification for a domain at spacing ``h``."""

    def __init__(self, domain: DomainSpec, h: float):
        if not h > 0:
            raise GridError("grid spacing must be positive")
        self.domain = domain
        self.h = float(h)
        self.n = domain.n
        self.dim = 2 * domain.n
        half = np.ceil(domain.extents / self.h - 1e-9).astype(int)
        if np.any(2 * half + 1 < 5):
            raise GridError("need at least 5 nodes per axis; decrease h")
        self.half = half
        self.shape = tuple(int(2 * m + 1) for m in half)
        self.origin = domain.real_center - self.h * half
        self.size = int(np.prod(self.shape))
        strides = np.ones(self.dim, dtype=np.int64)
        for a in range(self.dim - 2, -1, -1):
            strides[a] = strides[a + 1] * self.shape[a + 1]
        self.strides = strides
        self.node_class = self._classify()
        self.node_class.setflags(write=False)

    def _classify(self) -> np.ndarray:
        x = self.coords()
        interior = self.domain.inside(x).reshape(self.shape)
        # stencil neighbours of interior nodes must stay on the array
        for a in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[a] = [0, -1]
            if interior[tuple(idx)].any():
                raise GridError("interior node on the array edge")
        touched = np.zeros(self.shape, dtype=bool)
        for off in _stencil_offsets(self.dim):
            touched |= np.roll(interior, tuple(off), axis=tuple(range(self.dim)))
        cls = np.full(self.shape, EXTERIOR, dtype=np.uint8)
        cls[touched] = BAND
        cls[interior] = INTERIOR
        return cls.reshape(-1)

    def coords(self, idx=None) -> np.ndarray:
        """Real coordinates, shape (N, 2n), of flat node indices (all nodes by default)."""
        if idx is None:
            idx = np.arange(self.size)
        sub = np.unravel_index(np.asarray(idx), self.shape)
        return self.origin + self.h * np.stack(sub, axis=-1).astype(float)

    def complex_coords(self, idx=None) -> np.ndarray:
        x = self.coords(idx)
        return x[..., 0::2] + 1j * x[..., 1::2]

    def index_of(self, x: np.ndarray) -> np.ndarray:
        """Flat index of the nodes at (or nearest to) real points ``x``."""
        j = np.rint((np.asarray(x, dtype=float) - self.origin) / self.h).astype(np.int64)
        if np.any(j < 0) or np.any(j >= np.asarray(self.shape)):
            raise GridError("point outside the grid")
        return j @ self.strides

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.node_class == INTERIOR)

    @cached_property
    def band(self) -> np.ndarray:
        return np.flatnonzero(self.node_class == BAND)

    @cached_property
    def closure(self) -> np.ndarray:
        return np.flatnonzero(self.node_class != EXTERIOR)

    @cached_property
    def _neighbours(self) -> dict:
        i = self.interior
        s = self.strides
        nb = {"axial": [], "mixed": {}}
        for a in range(self.dim):
            nb["axial"].append((i + s[a], i - s[a]))
        for a in range(self.dim):
            for b in range(a + 1, self.dim):
                nb["mixed"][(a, b)] = (
                    i + s[a] + s[b],
                    i + s[a] - s[b],
                    i - s[a] + s[b],
                    i - s[a] - s[b],
                )
        return nb

    @cached_property
    def boundary_layer(self) -> np.ndarray:
        """Mask over interior positions whose stencil touches a band node."""
        band = self.node_class == BAND
        nb = self._neighbours
        hit = np.zeros(self.interior.size, dtype=bool)
        for p, m in nb["axial"]:
            hit |= band[p] | band[m]
        for quad in nb["mixed"].values():
            for q in quad:
                hit |= band[q]
        hit.setflags(write=False)
        return hit

    def depth(self, idx=None) -> np.ndarray:
        """Distance from nodes to the domain boundary (positive inside)."""
        x = self.coords(idx) - self.domain.real_center
        if self.domain.shape == "ball":
            return self.domain.radius - np.linalg.norm(x, axis=-1)
        return np.min(self.domain.extents - np.abs(x), axis=-1)

    def sample(self, func) -> GridField:
        return GridField.sample(self, func)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.domain == other.domain and self.h == other.h

    def __hash__(self):
        return hash((self.domain, self.h))

    def __repr__(self):
        return f"Grid({self.domain.shape}, n={self.n}, h={self.h}, shape={self.shape}, interior={self.interior.size})"


@dataclass(frozen=True)
class GridField:
    """Real values on every node of a :class:`Grid` (flat, C order)."""

    grid: Grid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.size:
            raise GridError(f"expected {self.grid.size} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid: Grid, func, meta=None) -> GridField:
        """Evaluate ``func(z)`` (z complex, shape (N, n)) at every node."""
        z = grid.complex_coords()
        vals = np.broadcast_to(np.asarray(func(z), dtype=float), (grid.size,))
        return cls(grid, vals, meta or {})

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def domain(self) -> DomainSpec:
        return self.grid.domain

    @property
    def node_class(self) -> np.ndarray:
        return self.grid.node_class

    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def band_values(self) -> np.ndarray:
        return self.values[self.grid.band]

    def with_values(self, values, **meta) -> GridField:
        m = dict(self.meta)
        m.update(meta)
        return GridField(self.grid, values, m)

    def with_interior(self, interior_values) -> GridField:
        v = self.values.copy()
        v[self.grid.interior] = interior_values
        return GridField(self.grid, v, dict(self.meta))

    def reshape(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def _check_same(self, other):
        if not isinstance(other, GridField) or other.grid != self.grid:
            raise GridError("fields live on different grids")

    def __sub__(self, other):
        self._check_same(other)
        return GridField(self.grid, self.values - other.values)

    def __add__(self, other):
        if isinstance(other, GridField):
            self._check_same(other)
            return GridField(self.grid, self.values + other.values)
        return GridField(self.grid, self.values + float(other))


@dataclass(frozen=True)
class ComplexHessianField:
    """Per-interior-node complex Hessian and complex gradient."""

    grid: Grid
    H: np.ndarray  # (m, n, n) complex Hermitian
    Du: np.ndarray  # (m, n) complex

    @property
    def index(self) -> np.ndarray:
        return self.grid.interior


def _second_differences(grid: Grid, u: np.ndarray):
    """Centered real second differences at interior nodes, upper triangle only."""
    i = grid.interior
    h2 = grid.h * grid.h
    u0 = u[i]
    nb = grid._neighbours
    pure = [(u[p] - 2.0 * u0 + u[m]) / h2 for p, m in nb["axial"]]
    mixed = {ab: (u[pp] - u[pm] - u[mp] + u[mm]) / (4.0 * h2) for ab, (pp, pm, mp, mm) in nb["mixed"].items()}
    return pure, mixed


def real_hessian(u: GridField) -> np.ndarray:
    """Centered real Hessian (m, 2n, 2n) at interior nodes."""
    g = u.grid
    pure, mixed = _second_differences(g, u.values)
    D = np.empty((g.interior.size, g.dim, g.dim))
    for a in range(g.dim):
        D[:, a, a] = pure[a]
    for (a, b), v in mixed.items():
        D[:, a, b] = v
        D[:, b, a] = v
    return D


def hessian_from_values(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Complex Hessian stack (m, n, n) from raw node values; used in solver loops."""
    n = grid.n
    pure, mixed = _second_differences(grid, u)
    m = grid.interior.size
    H = np.empty((m, n, n), dtype=complex)

    def D(a, b):
        if a == b:
            return pure[a]
        return mixed[(a, b)] if a < b else mixed[(b, a)]

    for j in range(n):
        H[:, j, j] = 0.25 * (pure[2 * j] + pure[2 * j + 1])
        for k in range(j + 1, n):
            xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1
            re = D(xj, xk) + D(yj, yk)
            im = D(xj, yk) - D(yj, xk)
            H[:, j, k] = 0.25 * (re + 1j * im)
            H[:, k, j] = 0.25 * (re - 1j * im)
    return H


def complex_hessian(u: GridField) -> ComplexHessianField:
    """Complex Hessian ``u_{j kbar}`` and gradient ``d u / d z_j`` at interior nodes.

    ``u_{j kbar} = 1/4 [(d_xj d_xk + d_yj d_yk) + i (d_xj d_yk - d_yj d_xk)] u``
    with centered differences; exact on real quadratics.
    """
    g = u.grid
    H = hessian_from_values(g, u.values)
    i = g.interior
    Du = np.empty((i.size, g.n), dtype=complex)
    for j in range(g.n):
        (px, mx), (py, my) = g._neighbours["axial"][2 * j], g._neighbours["axial"][2 * j + 1]
        dx = (u.values[px] - u.values[mx]) / (2 * g.h)
        dy = (u.values[py] - u.values[my]) / (2 * g.h)
        Du[:, j] = 0.5 * (dx - 1j * dy)
    return ComplexHessianField(g, H, Du)


def defining_function(grid: Grid) -> GridField:
    """Defining function with admissible Hessian everywhere.

    Ball of radius R: ``rho = (|z - c|^2 - R^2) / (2R)``, whose complex
    Hessian is ``Id / (2R)``. Box domains get the same function for the
    circumscribed ball (scaled up by 1e-3), which is negative on the
    closed box but does not vanish on its faces; ``meta['caveat']`` says so.
    """
    d = grid.domain
    if d.shape == "ball":
        R, caveat = d.radius, None
    else:
        R = float(np.linalg.norm(d.extents)) * 1.001
        caveat = "box domain: rho is the circumscribed-ball function and is nonzero on the box faces"
    c = np.asarray(d.center, dtype=complex)
    f = GridField.sample(grid, lambda z: (np.sum(np.abs(z - c) ** 2, axis=-1) - R * R) / (2 * R))
    meta = {"radius": R}
    if caveat:
        meta["caveat"] = caveat
    return f.with_values(f.values, **meta)


def pseudoconvexity_witness(grid: Grid, C: float | None = None) -> GridField:
    """``-d + C d^2`` with ``d = R - |z - c|`` for a ball; ``C`` defaults to ``1/(2R)``."""
    d = grid.domain
    if d.shape != "ball":
        raise DomainError("the witness is computed for balls only")
    R = d.radius
    C = 1.0 / (2.0 * R) if C is None else C
    c = np.asarray(d.center, dtype=complex)

    def w(z):
        dist = R - np.sqrt(np.sum(np.abs(z - c) ** 2, axis=-1))
        return -dist + C * dist * dist

    return GridField.sample(grid, w, {"C_Omega": C})


def mean_value_defect(u: GridField) -> np.ndarray:
    """``mean(axial neighbours) - u`` at interior nodes (zero for discrete harmonic u)."""
    g = u.grid
    v = u.values
    acc = np.zeros(g.interior.size)
    for p, m in g._neighbours["axial"]:
        acc += v[p] + v[m]
    return acc / (2 * g.dim) - v[g.interior]


def _laplacian_system(grid: Grid):
    i = grid.interior
    m = i.size
    pos = np.full(grid.size, -1, dtype=np.int64)
    pos[i] = np.arange(m)
    rows, cols = [np.arange(m)], [np.arange(m)]
    data = [np.full(m, 2.0 * grid.dim)]
    ext = []
    for p, q in grid._neighbours["axial"]:
        for nb in (p, q):
            k = pos[nb]
            inner = k >= 0
            rows.append(np.arange(m)[inner])
            cols.append(k[inner])
            data.append(np.full(inner.sum(), -1.0))
            ext.append(nb)
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
    return A, ext, pos


def harmonic_extend(grid: Grid, phi, tol: float = 1e-10, max_sweeps: int = 1_000_000) -> GridField:
    """Discrete harmonic extension of Dirichlet data given on the band.

    Solves ``sum_axial(u_nb) - 2d u = 0`` at interior nodes with the band
    frozen at ``phi``. The symmetric positive definite system is relaxed
    by conjugate-gradient sweeps until the mean-value defect is at most
    ``tol`` in sup norm.

    ``phi`` is either a callable of complex coordinates or a GridField
    whose band values are used.
    """
    if isinstance(phi, GridField):
        base = phi.values.copy()
    else:
        base = GridField.sample(grid, phi).values.copy()
    A, ext, pos = _laplacian_system(grid)
    b = np.zeros(grid.interior.size)
    for nb in ext:
        outside = pos[nb] < 0
        np.add.at(b, np.flatnonzero(outside), base[nb[outside]])
    x = base[grid.interior].copy()
    diag = 1.0 / A.diagonal()
    M = spla.LinearOperator(A.shape, matvec=lambda r: diag * r)
    # cg stops on the 2-norm; the defect is a sup norm of (b - Ax) / 2d
    atol = tol
    used = 0
    while True:
        x, info = spla.cg(A, b, x0=x, rtol=0.0, atol=atol, maxiter=2000, M=M)
        used += 2000
        out = base.copy()
        out[grid.interior] = x
        field = GridField(grid, out, {"kind": "harmonic_extension"})
        defect = float(np.max(np.abs(mean_value_defect(field)), initial=0.0))
        if defect <= tol:
            return field.with_values(field.values, defect=defect)
        if used >= max_sweeps:
            raise NumericalError(f"harmonic extension stalled at defect {defect:.3e}")
        if info == 0:
            atol *= 0.1


def write_csv(u: GridField, path) -> None:
    """Dump ``x_1,y_1,...,x_n,y_n,value,class`` rows at 17 significant digits."""
    g = u.grid
    x = g.coords()
    names = []
    for j in range(1, g.n + 1):
        names += [f"x_{j}", f"y_{j}"]
    labels = CLASS_LABELS[g.node_class]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names + ["value", "class"]) + "\n")
        fh.writelines(",".join(format(c, ".17g") for c in row) + "," + format(val, ".17g") + "," + lab + "\n" for row, val, lab in zip(x, u.values, labels))


def read_csv(path, domain: DomainSpec, h: float | None = None) -> GridField:
    """Read a field dump back onto the grid of ``domain`` (``h`` inferred if omitted)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    d = 2 * domain.n
    if len(header) != d + 2:
        raise GridError(f"expected {d + 2} columns for n={domain.n}, got {len(header)}")
    coords = np.array([[float(c) for c in r[:d]] for r in rows])
    vals = np.array([float(r[d]) for r in rows])
    if h is None:
        xs = np.unique(coords[:, 0])
        h = float(np.min(np.diff(xs)))
        # undo the accumulated rounding of origin + j*h
        h = float(np.round(h, 12))
    grid = Grid(domain, h)
    if coords.shape[0] != grid.size:
        raise GridError(f"file has {coords.shape[0]} nodes, grid expects {grid.size}")
    idx = grid.index_of(coords)
    out = np.full(grid.size, np.nan)
    out[idx] = vals
    if np.any(np.isnan(out)):
        raise GridError("file does not cover every grid node")
    return GridField(grid, out)
