"""Weak-interaction-regime asymptotics.

In the weak regime the normalized margins ``S_l / sqrt(N_l)`` are jointly
Gaussian with covariance ``C``; the council correlations then follow the
arcsin law for Gaussian orthant probabilities, and the optimal weights solve
``A w = b`` with ``A`` the council-vote correlation matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RegimeError, SingularSystemError, ValidationError
from .linalg import definiteness, invert_uniform, schur_invert_two_cluster, solve_dense
from .model import CouplingMatrix, classify_regime

CLOSED_FORM_SCENARIOS = ("homogeneous", "uniform", "two_cluster", "hostile")


@dataclass(frozen=True)
class WeakSystem:
    A: np.ndarray
    b: np.ndarray


@dataclass(frozen=True)
class ClosedFormCoefficients:
    scenario: str
    first: float
    second: float
    a: float
    eta: float

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "first": self.first, "second": self.second,
                "a": self.a, "eta": self.eta}


@dataclass(frozen=True)
class FeasibilityReport:
    all_nonnegative: bool
    offending_groups: list[int] = field(default_factory=list)

    @property
    def note(self) -> str:
        if self.all_nonnegative:
            return "all weights non-negative"
        return ("negative weight for groups " + ", ".join(map(str, self.offending_groups))
                + ": the minimal democracy deficit cannot be reached")

    def to_dict(self) -> dict:
        return {"all_nonnegative": self.all_nonnegative,
                "offending_groups": list(self.offending_groups), "note": self.note}


def _clamped_arcsin(x: float) -> float:
    if abs(x) > 1.0 + 1e-12:
        raise ValidationError(f"correlation {x!r} outside [-1, 1]")
    return math.asin(min(1.0, max(-1.0, x)))


def _check_alphas(alphas) -> np.ndarray:
    a = np.asarray(alphas, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError("alphas must be a non-empty vector")
    if np.any(a <= 0.0):
        raise ValidationError(f"alphas must be strictly positive, got {a.tolist()}")
    return a


def _require_weak(J: CouplingMatrix):
    reg = classify_regime(J)
    if reg.tag != "weak":
        raise RegimeError(f"weak interaction regime required, coupling is {reg.tag} "
                          f"(margin {reg.margin:.3g})")


def covariance_matrix(J: CouplingMatrix) -> np.ndarray:
    """Limit covariance of ``(S_1/sqrt(N_1), ..., S_M/sqrt(N_M))``."""
    _require_weak(J)
    M = J.M
    if J.family == "homogeneous":
        beta = J.params["beta"]
        return np.eye(M) + beta / (1.0 - M * beta) * np.ones((M, M))
    IJ = np.eye(M) - J.entries
    if J.family == "two_cluster":
        return schur_invert_two_cluster(IJ, J.params["M1"], J.params["M2"])
    return np.linalg.inv(IJ)


def orthant_probability(rho: float) -> float:
    """P(X > 0, Y > 0) for standard bivariate normal (X, Y) with correlation rho."""
    if not -1.0 - 1e-12 <= rho <= 1.0 + 1e-12:
        raise ValidationError(f"rho must lie in [-1, 1], got {rho!r}")
    return 0.25 + _clamped_arcsin(rho) / (2.0 * math.pi)


def council_correlation_matrix(C) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    if not definiteness(C).is_pd:
        raise ValidationError("covariance matrix is not positive definite")
    d = np.sqrt(np.diag(C))
    R = C / np.outer(d, d)
    A = np.vectorize(_clamped_arcsin, otypes=[float])(R) * (2.0 / math.pi)
    np.fill_diagonal(A, 1.0)
    return A


def weak_b_vector(C, alphas) -> np.ndarray:
    """Limit of ``E(chi_k S) / sqrt(N)`` given the margin covariance ``C``."""
    C = np.asarray(C, dtype=float)
    s = np.sqrt(_check_alphas(alphas))
    if s.size != C.shape[0]:
        raise ValidationError("alphas and covariance differ in dimension")
    cdiag = np.diag(C)
    return np.sqrt(2.0 / (math.pi * cdiag)) * (C @ s)


def weak_system(J: CouplingMatrix, alphas) -> WeakSystem:
    C = covariance_matrix(J)
    return WeakSystem(council_correlation_matrix(C), weak_b_vector(C, alphas))


def solve_weak_weights(J: CouplingMatrix, alphas, normalize: bool = True) -> np.ndarray:
    """Optimal council weights ``A^{-1} b`` in the weak regime.

    With ``normalize`` the result is rescaled so that the largest weight is 1.
    """
    alphas = _check_alphas(alphas)
    if alphas.size != J.M:
        raise ValidationError(f"{alphas.size} alphas for an M={J.M} coupling")
    sysm = weak_system(J, alphas)
    try:
        w = solve_dense(sysm.A, sysm.b)
    except SingularSystemError as exc:
        raise SingularSystemError("internal inconsistency: A singular in the weak regime",
                                  exc.pivot) from exc
    if normalize:
        top = float(np.max(w))
        if top <= 0.0:
            raise ArithmeticError("no positive weight to normalize by")
        w = w / top
    return w


def council_correlation(J: CouplingMatrix) -> float:
    """The scenario's council correlation ``a`` as defined by the closed-form results.

    For ``hostile`` this is ``-E(chi_1 chi_2) >= 0``; for ``two_cluster`` it is
    the intra-cluster correlation.
    """
    M, p = J.M, J.params
    if J.family == "homogeneous":
        arg = p["beta"] / (1.0 - (M - 1) * p["beta"])
    elif J.family in ("uniform", "two_cluster"):
        arg = p["jbar"] / (1.0 - p["j0"] - (M - 2) * p["jbar"])
    elif J.family == "hostile":
        arg = p["jbar"] / (1.0 - p["j0"] + (M - 2) * p["jbar"])
    else:
        raise ValidationError(f"no closed form for family {J.family!r}")
    return 2.0 / math.pi * _clamped_arcsin(arg)


def closed_form_weights(J: CouplingMatrix, alphas) -> tuple[np.ndarray, ClosedFormCoefficients]:
    """Unnormalized weak-regime weights from the scenario's closed-form coefficients."""
    if J.family not in CLOSED_FORM_SCENARIOS:
        raise ValidationError(f"closed forms exist only for {CLOSED_FORM_SCENARIOS}, got {J.family!r}")
    _require_weak(J)
    sq = np.sqrt(_check_alphas(alphas))
    if sq.size != J.M:
        raise ValidationError(f"{sq.size} alphas for an M={J.M} coupling")
    M, p = J.M, J.params
    a = council_correlation(J)
    eta = float(sq.sum())

    if J.family == "homogeneous":
        beta = p["beta"]
        first = (1 + (M - 1) * a) * (1 - M * beta)
        second = (1 + (M - 1) * a) * beta - a
        w = first * sq + second * eta
    elif J.family == "uniform":
        j0, jb = p["j0"], p["jbar"]
        first = (1 + (M - 1) * a) * (1 - j0 - (M - 1) * jb)
        second = (1 + (M - 2) * a) * jb - a * (1 - j0)
        w = first * sq + second * eta
    elif J.family == "two_cluster":
        j0, jb, M1 = p["j0"], p["jbar"], p["M1"]
        first = (1 + (M - 1) * a) * (1 - j0 - (M - 1) * jb)
        second = (1 + (M - 2) * a) * jb - a * (1 - j0)
        sign = np.where(np.arange(M) < M1, 1.0, -1.0)
        eta = float(sq[:M1].sum() - sq[M1:].sum())
        w = first * sq + sign * second * eta
    else:
        j0, jb = p["j0"], p["jbar"]
        first = (1 - (M - 1) * a) * (1 - j0 + (M - 1) * jb)
        second = (1 - (M - 2) * a) * jb - a * (1 - j0)
        w = first * sq - second * eta
    return w, ClosedFormCoefficients(J.family, float(first), float(second), float(a), eta)


def closed_form_via_inverse(J: CouplingMatrix, alphas) -> np.ndarray:
    """Weights from ``invert_uniform(a)`` applied to the weak b-vector.

    Covers the families whose ``A`` has a constant off-diagonal (up to a
    cluster sign flip); used as an intermediate check between the theorems'
    coefficients and the dense solve.
    """
    M = J.M
    C = covariance_matrix(J)
    b = weak_b_vector(C, alphas)
    if J.family == "two_cluster":
        sign = np.where(np.arange(M) < J.params["M1"], 1.0, -1.0)
    else:
        sign = np.ones(M)
    a = council_correlation(J)
    if J.family == "hostile":
        a = -a
    B, D = invert_uniform(a, M)
    # A = diag(sign) U(a) diag(sign)  =>  A^{-1} = diag(sign) U(a)^{-1} diag(sign)
    return sign * (B @ (sign * b)) / D


def check_feasibility(w) -> FeasibilityReport:
    w = np.asarray(w, dtype=float)
    bad = [int(i) for i in np.flatnonzero(w < 0.0)]
    return FeasibilityReport(not bad, bad)
