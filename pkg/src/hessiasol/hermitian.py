"""
Hermitian matrix algebra.

Eigenvalues come from a cyclic complex Jacobi rotation scheme that is
vectorized over stacks of matrices, so the same routine serves a single
matrix and the per-node Hessians of a grid. Characteristic coefficients
of general (non-normal) matrices use the Faddeev--LeVerrier recurrence.

Normalization conventions
-------------------------
For an ``n x n`` Hermitian ``A`` with eigenvalues ``lam``::

    S_k(A) = binom(n, k)^-1 * [t^(n-k)] det(A + t Id) = s_norm(k, lam)
    omega_A^k ^ omega^(n-k) / omega^n = S_k(A) = D(A x k, Id x (n-k))

where ``D`` is the mixed discriminant normalized by ``D(Id, ..., Id) = 1``.
:data:`WEDGE_CONVENTIONS` records these once; every cross-module check
goes through :func:`mixed_discriminant` or :func:`s_k_matrix`.
"""
from __future__ import annotations

import itertools
from math import comb, factorial

import numpy as np

from .errors import DomainError, NumericalError
from .symfun import LambdaVector, s_norm

__all__ = [
    "WEDGE_CONVENTIONS",
    "char_coefficients",
    "compound_minors",
    "eigenvalues",
    "eigvalsh_stack",
    "hermitian",
    "in_calB",
    "is_psd",
    "jacobi_eigh",
    "matrix_lemma_fuzz",
    "matrix_lemma_gap",
    "mixed_discriminant",
    "normalize_to_calB",
    "principal_minor_sum",
    "s_k_general",
    "s_k_matrix",
    "wedge_ratio",
]

WEDGE_CONVENTIONS = {
    "S_k": "binom(n,k)^-1 * coefficient of t^(n-k) in det(A + t Id)",
    "wedge": "omega_A^k ^ omega^(n-k) / omega^n = S_k(A)",
    "mixed": "D(A_1..A_n) with D(Id..Id) = 1; D(A x k, Id x (n-k)) = S_k(A)",
    "inverse_sigma": "(dd^c u)^n / ((dd^c u)^(n-k) ^ omega^k) = S_n / S_(n-k)",
}

PSD_TOL = 1e-12


def hermitian(A, atol: float = 1e-12) -> np.ndarray:
    """Validate conjugate symmetry to ``atol`` and return the exact symmetrization."""
    M = np.array(A, dtype=complex)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DomainError(f"expected square matrices, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError("matrix entries must be finite")
    MH = np.conj(np.swapaxes(M, -1, -2))
    if np.max(np.abs(M - MH), initial=0.0) > atol:
        raise DomainError("matrix is not Hermitian")
    return 0.5 * (M + MH)


def _offdiag_norm2(M: np.ndarray) -> np.ndarray:
    n = M.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sum(np.abs(M[..., mask]) ** 2, axis=-1)


def jacobi_eigh(A, tol: float = 1e-13, max_sweeps: int = 30, vectors: bool = False):
    """Cyclic Jacobi eigen-decomposition of a stack of Hermitian matrices.

    Each rotation first removes the phase of ``a_pq`` and then applies a
    real plane rotation zeroing it. Converged when the off-diagonal
    Frobenius mass is at most ``tol * ||A||_F`` for every matrix.

    Returns
    -------
    w : ndarray, shape (..., n)
        Eigenvalues in non-increasing order.
    V : ndarray, shape (..., n, n)
        Unitary eigenvector matrix (columns), only with ``vectors=True``.
    """
    M = np.array(A, dtype=complex)
    single = M.ndim == 2
    n = M.shape[-1]
    M = M.reshape(-1, n, n).copy()
    V = np.broadcast_to(np.eye(n, dtype=complex), M.shape).copy() if vectors else None
    scale2 = np.sum(np.abs(M) ** 2, axis=(-1, -2))
    thresh2 = (tol**2) * scale2
    sweeps = 0
    while True:
        off2 = _offdiag_norm2(M) if n > 1 else np.zeros(M.shape[0])
        todo = off2 > thresh2
        if not np.any(todo):
            break
        if sweeps >= max_sweeps:
            raise NumericalError(f"Jacobi eigenvalue iteration did not converge in {max_sweeps} sweeps")
        sweeps += 1
        sub = M[todo]
        subV = V[todo] if vectors else None
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = sub[:, p, q]
                r = np.abs(apq)
                phase = np.where(r > 0, apq / np.where(r > 0, r, 1.0), 1.0)
                app = sub[:, p, p].real
                aqq = sub[:, q, q].real
                theta = 0.5 * np.arctan2(2.0 * r, aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                # U acts on columns p, q:  U = D R,  D = diag(1, conj(phase))
                upp, upq = c, s
                uqp, uqq = -s * np.conj(phase), c * np.conj(phase)
                colp = sub[:, :, p].copy()
                colq = sub[:, :, q].copy()
                sub[:, :, p] = colp * upp[:, None] + colq * uqp[:, None]
                sub[:, :, q] = colp * upq[:, None] + colq * uqq[:, None]
                rowp = sub[:, p, :].copy()
                rowq = sub[:, q, :].copy()
                sub[:, p, :] = np.conj(upp)[:, None] * rowp + np.conj(uqp)[:, None] * rowq
                sub[:, q, :] = np.conj(upq)[:, None] * rowp + np.conj(uqq)[:, None] * rowq
                sub[:, p, q] = 0.0
                sub[:, q, p] = 0.0
                if vectors:
                    vp = subV[:, :, p].copy()
                    vq = subV[:, :, q].copy()
                    subV[:, :, p] = vp * upp[:, None] + vq * uqp[:, None]
                    subV[:, :, q] = vp * upq[:, None] + vq * uqq[:, None]
        M[todo] = sub
        if vectors:
            V[todo] = subV
    w = np.real(np.diagonal(M, axis1=-2, axis2=-1))
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    if vectors:
        V = np.take_along_axis(V, order[:, None, :], axis=-1)
    if single:
        w = w[0]
        V = V[0] if vectors else None
    else:
        w = w.reshape(np.shape(A)[:-1])
        if vectors:
            V = V.reshape(np.shape(A))
    return (w, V) if vectors else w


def eigenvalues(A) -> LambdaVector:
    """Eigenvalues of one Hermitian matrix, non-increasing."""
    M = hermitian(A)
    if M.ndim != 2:
        raise DomainError("eigenvalues() takes a single matrix; use jacobi_eigh for stacks")
    return LambdaVector(jacobi_eigh(M))


def eigvalsh_stack(H) -> np.ndarray:
    """Eigenvalues (non-increasing) of a stack ``(m, n, n)`` of Hermitian matrices.

    Closed forms for n <= 2, the Jacobi routine otherwise. This is the
    hot path of the solvers, so no validation is done here.
    """
    H = np.asarray(H)
    n = H.shape[-1]
    if n == 1:
        return H[..., 0, :1].real.copy()
    if n == 2:
        a = H[..., 0, 0].real
        d = H[..., 1, 1].real
        b = H[..., 0, 1]
        mean = 0.5 * (a + d)
        rad = np.hypot(0.5 * (a - d), np.abs(b))
        return np.stack([mean + rad, mean - rad], axis=-1)
    return jacobi_eigh(H)


def s_k_matrix(k: int, A) -> float:
    """Normalized characteristic coefficient ``S_k`` of a Hermitian matrix."""
    lam = eigenvalues(A)
    return s_norm(k, lam.entries)


def char_coefficients(M) -> np.ndarray:
    """Sums of principal minors ``e_0..e_n`` of a general square matrix.

    ``det(M + t Id) = sum_k e_k t^(n-k)``, computed by Faddeev--LeVerrier.
    Works on stacks ``(..., n, n)``.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1]
    eye = np.eye(n, dtype=complex)
    c = np.zeros(M.shape[:-2] + (n + 1,), dtype=complex)  # det(tI - M) coefficients
    c[..., n] = 1.0
    Mk = np.zeros_like(M)
    for k in range(1, n + 1):
        Mk = M @ Mk + c[..., n - k + 1][..., None, None] * eye
        c[..., n - k] = -np.trace(M @ Mk, axis1=-2, axis2=-1) / k
    # det(M + tI) = (-1)^n det(-tI - M) ; e_k = (-1)^k c_{n-k}
    signs = (-1.0) ** np.arange(n + 1)
    return signs * c[..., ::-1]


def s_k_general(k: int, M) -> complex:
    """``S_k`` of a general complex matrix (complex-valued)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1]
    if not (1 <= k <= n):
        raise DomainError(f"k={k} outside [1, {n}]")
    return char_coefficients(M)[..., k] / comb(n, k)


def principal_minor_sum(k: int, M) -> complex:
    """``binom(n,k)^-1`` times the sum of k x k principal minors, by enumeration.

    For ``M = A B^*`` the minors are the Gram determinants
    ``det(<a_p, b_q>)_{p,q in J}`` of the rows of A and B.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1]
    total = 0.0
    for J in itertools.combinations(range(n), k):
        idx = np.ix_(J, J)
        total = total + np.linalg.det(M[..., idx[0], idx[1]])
    return total / comb(n, k)


def compound_minors(k: int, A) -> np.ndarray:
    """All ``k x k`` minors ``det A[J, L]`` over row/column subsets, shape ``(..., C, C)``."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[-1]
    subs = list(itertools.combinations(range(n), k))
    rows = np.array(subs)
    # gather A[..., J, L] for every pair (J, L)
    sub = A[..., rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(sub)


def matrix_lemma_gap(k: int, A, B) -> float:
    """``S_k(AA^*) S_k(BB^*) - |S_k(AB^*)|^2`` for arbitrary complex A, B.

    By Cauchy--Binet the principal k-minors of ``AB^*`` are
    ``sum_L det A[J, L] conj(det B[J, L])``, so every S_k here is a sum over
    pairs of k-minors of A and B. ``S_k(AA^*)`` is then a sum of
    nonnegative terms and keeps full relative accuracy even when A is
    nearly singular, which the trace recurrence of :func:`s_k_general`
    does not.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape or A.shape[-1] != A.shape[-2]:
        raise DomainError("A and B must be square of equal size")
    n = A.shape[-1]
    if not (1 <= k <= n):
        raise DomainError(f"k={k} outside [1, {n}]")
    a = compound_minors(k, A)
    b = compound_minors(k, B)
    c = comb(n, k)
    saa = np.sum(np.abs(a) ** 2, axis=(-2, -1)) / c
    sbb = np.sum(np.abs(b) ** 2, axis=(-2, -1)) / c
    sab = np.sum(a * np.conj(b), axis=(-2, -1)) / c
    out = saa * sbb - np.abs(sab) ** 2
    return out if np.ndim(out) else float(out)


def mixed_discriminant(*mats) -> float:
    """Normalized mixed discriminant ``D(A_1, ..., A_n)``.

    Polarization over all ``2^n`` subsets, so the cost is exponential in
    n (fine for n <= 5). Arguments may be stacks ``(..., n, n)``.
    """
    arrs = [np.asarray(A, dtype=complex) for A in mats]
    n = arrs[0].shape[-1]
    if len(arrs) != n:
        raise DomainError(f"need exactly n={n} matrices, got {len(arrs)}")
    if any(a.shape[-2:] != (n, n) for a in arrs):
        raise DomainError("all matrices must share the same dimension")
    shape = np.broadcast_shapes(*(a.shape for a in arrs))
    total = np.zeros(shape[:-2], dtype=complex)
    for size in range(1, n + 1):
        sign = (-1.0) ** (n - size)
        for S in itertools.combinations(range(n), size):
            total = total + sign * np.linalg.det(sum(arrs[i] for i in S))
    # at (Id, ..., Id) the alternating sum equals n!, so dividing by n! normalizes
    out = np.real(total) / factorial(n)
    return out if out.ndim else float(out)


def wedge_ratio(A, p: int, B, q: int) -> float:
    """``omega_A^p ^ omega_B^q / omega^n`` as a normalized mixed discriminant."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = A.shape[-1]
    if p < 0 or q < 0 or p + q != n:
        raise DomainError(f"split ({p}, {q}) does not add up to n={n}")
    return mixed_discriminant(*([A] * p + [B] * q))


def is_psd(B, tol: float = PSD_TOL) -> bool:
    w = np.linalg.eigvalsh(hermitian(B))
    return bool(np.min(w) >= -tol)


def in_calB(B, A, k: int, tol: float) -> bool:
    """Membership of B in ``{B >= 0 : omega_B^k ^ omega_A^(n-k) / omega^n = 1}``."""
    Bh = hermitian(B)
    if not is_psd(Bh):
        raise DomainError("B must be positive semidefinite")
    n = Bh.shape[-1]
    return bool(abs(wedge_ratio(A, n - k, Bh, k) - 1.0) <= tol)


def normalize_to_calB(P, A, k: int) -> np.ndarray:
    """Rescale a PSD matrix so it lands in ``calB(A, k)`` (degree-k homogeneity)."""
    Ph = hermitian(P)
    n = Ph.shape[-1]
    r = wedge_ratio(A, n - k, Ph, k)
    if r <= 0:
        raise DomainError("wedge ratio is not positive; cannot normalize")
    return Ph / r ** (1.0 / k)


def _gram_sum(k: int, A, B) -> np.ndarray:
    """``binom(n,k)^-1 sum_J det(<a_p, b_q>)_{p,q in J}`` over row subsets J.

    Self terms use QR of the selected rows, ``det(A_J A_J^*) = |det R|^2``,
    which avoids squaring the condition number.
    """
    n = A.shape[-1]
    total = 0.0
    for J in itertools.combinations(range(n), k):
        AJ = A[..., list(J), :]
        if A is B:
            R = np.linalg.qr(np.conj(np.swapaxes(AJ, -1, -2)), mode="r")
            total = total + np.abs(np.prod(np.diagonal(R, axis1=-2, axis2=-1), axis=-1)) ** 2
        else:
            BJ = B[..., list(J), :]
            total = total + np.linalg.det(AJ @ np.conj(np.swapaxes(BJ, -1, -2)))
    return total / comb(n, k)


def matrix_lemma_fuzz(n: int, samples: int = 10_000, seed: int = 0, ks=None, gram: bool | None = None) -> dict:
    """Random-pair check of ``S_k(AA^*) S_k(BB^*) >= |S_k(AB^*)|^2``.

    Entries are standard complex Gaussians. For each k the smallest gap
    normalized by ``S_k(AA^*) S_k(BB^*)`` is reported; with ``gram`` (default
    for n <= 4) the gap is recomputed from Gram-determinant minors and the
    largest relative disagreement with the recurrence value is reported.
    """
    rng = np.random.default_rng(seed)
    ks = range(1, n + 1) if ks is None else ks
    gram = n <= 4 if gram is None else gram
    A = rng.standard_normal((samples, n, n)) + 1j * rng.standard_normal((samples, n, n))
    B = rng.standard_normal((samples, n, n)) + 1j * rng.standard_normal((samples, n, n))
    AH = np.conj(np.swapaxes(A, -1, -2))
    BH = np.conj(np.swapaxes(B, -1, -2))
    out = {"n": n, "samples": samples, "seed": seed, "per_k": {}}
    worst = np.inf
    for k in ks:
        gap = matrix_lemma_gap(k, A, B)
        c = comb(n, k)
        scale = (np.sum(np.abs(compound_minors(k, A)) ** 2, axis=(-2, -1)) / c
                 * np.sum(np.abs(compound_minors(k, B)) ** 2, axis=(-2, -1)) / c)
        norm_gap = gap / scale
        flv = s_k_general(k, A @ AH).real * s_k_general(k, B @ BH).real - np.abs(s_k_general(k, A @ BH)) ** 2
        row = {"min_normalized_gap": float(norm_gap.min()),
               "recurrence_min_normalized_gap": float((flv / scale).min())}
        if gram:
            g = _gram_sum(k, A, A).real * _gram_sum(k, B, B).real - np.abs(_gram_sum(k, A, B)) ** 2
            row["gram_max_rel_diff"] = float(np.max(np.abs(g - gap) / scale))
        out["per_k"][str(k)] = row
        worst = min(worst, row["min_normalized_gap"])
    out["min_gap"] = float(worst)
    if gram:
        out["gram_max_rel_diff"] = max(r["gram_max_rel_diff"] for r in out["per_k"].values())
    return out
