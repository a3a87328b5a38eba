"""Small dense and structured linear algebra.

Everything here works on matrices of dimension up to a few hundred.  The
closed-form routines cover the matrices with a constant diagonal and a
constant off-diagonal (``uniform``) and the two-cluster block variant; the
dense routines serve as the general path and as cross-checks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystemError, ValidationError

SYM_TOL = 1e-12


@dataclass(frozen=True)
class DefinitenessReport:
    tag: str  # "positive_definite" | "positive_semidefinite" | "indefinite"
    min_eigenvalue: float
    tolerance: float

    @property
    def is_pd(self) -> bool:
        return self.tag == "positive_definite"


def _as_symmetric(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {S.shape}")
    if not np.allclose(S, S.T, rtol=0.0, atol=SYM_TOL):
        raise ValidationError("matrix is not symmetric within 1e-12")
    return 0.5 * (S + S.T)


def jacobi_eigenvalues(S, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.

    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``1e-14 * ||S||_F``.
    """
    a = _as_symmetric(S).copy()
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    threshold = 1e-14 * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))


def definiteness(S) -> DefinitenessReport:
    S = _as_symmetric(S)
    tau = 1e-10 * max(1.0, float(np.max(np.abs(S))))
    lam_min = float(jacobi_eigenvalues(S)[0])
    if lam_min > tau:
        tag = "positive_definite"
    elif lam_min >= -tau:
        tag = "positive_semidefinite"
    else:
        tag = "indefinite"
    return DefinitenessReport(tag, lam_min, tau)


def uniform_matrix_eigenvalues(a: float, b: float, M: int) -> tuple[float, float]:
    """Eigenvalues of the M x M matrix with diagonal ``a`` and off-diagonal ``b``.

    Returns ``(a - b, a + (M - 1) b)``; the first has multiplicity ``M - 1``.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    return a - b, a + (M - 1) * b


def solve_dense(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises :class:`SingularSystemError` when the smallest pivot is below
    ``1e-12 * max|A|``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
        raise ValidationError(f"non-conformable system: A {A.shape}, b {b.shape}")
    with warnings.catch_warnings():
        # a singular factorization is reported through SingularSystemError below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    pivot = float(np.min(np.abs(np.diag(lu))))
    scale = max(float(np.max(np.abs(A))), np.finfo(float).tiny)
    if pivot <= 1e-12 * scale:
        raise SingularSystemError("singular linear system", pivot)
    x = scipy.linalg.lu_solve((lu, piv), b)
    # one step of iterative refinement keeps the residual well inside the contract
    x += scipy.linalg.lu_solve((lu, piv), b - A @ x)
    return x


def invert_uniform(a: float, M: int) -> tuple[np.ndarray, float]:
    """Unnormalized inverse of the matrix with unit diagonal and off-diagonal ``a``.

    Returns ``(B, D)`` with ``B`` having diagonal ``1 + (M-2) a`` and
    off-diagonal ``-a``, so that the true inverse is ``B / D``.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    D = (1.0 - a) * (1.0 + (M - 1) * a)
    if M == 1:
        D = 1.0
    if abs(D) < 1e-14:
        raise SingularSystemError(f"unit-diagonal uniform matrix singular at a={a}, M={M}", abs(D))
    B = np.full((M, M), -float(a))
    np.fill_diagonal(B, 1.0 + (M - 2) * a)
    if M == 1:
        B[0, 0] = 1.0
    return B, D


def schur_invert_two_cluster(IminusJ, M1: int, M2: int) -> np.ndarray:
    """Invert a two-cluster ``I - J`` block-wise through Schur complements.

    ``IminusJ`` is ``[[P, Q], [Q^T, R]]`` with ``P`` (``M1 x M1``) and ``R``
    (``M2 x M2``) invertible.
    """
    S = _as_symmetric(IminusJ)
    if S.shape[0] != M1 + M2:
        raise ValidationError(f"dimension {S.shape[0]} != M1 + M2 = {M1 + M2}")
    P, Q, R = S[:M1, :M1], S[:M1, M1:], S[M1:, M1:]
    try:
        Pinv = np.linalg.inv(P)
        Rinv = np.linalg.inv(R)
        top = np.linalg.inv(P - Q @ Rinv @ Q.T)
        bottom = np.linalg.inv(R - Q.T @ Pinv @ Q)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"diagonal block not invertible: {exc}", 0.0) from exc
    out = np.empty_like(S)
    out[:M1, :M1] = top
    out[M1:, M1:] = bottom
    out[:M1, M1:] = -top @ Q @ Rinv
    out[M1:, :M1] = out[:M1, M1:].T
    return out
