"""Strong-interaction-regime asymptotics.

Per-capita margins concentrate on the global minima of the free-energy
function

    F(y) = 1/2 y^T sqrt(alpha) J^{-1} sqrt(alpha) y - sum_l alpha_l log cosh y_l

with limiting magnetizations ``m_l = tanh(y_l)``.  Council weights follow from
the sign patterns (orthants) of those minima.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import (ConvergenceError, RegimeError, SingularSystemError, UnresolvedMinimaError,
                     ValidationError)
from .linalg import solve_dense
from .model import CouplingMatrix, RegimeClass, classify_regime

DEDUP_TOL = 1e-6
TIE_TOL = 1e-8
GRAD_TOL = 1e-8
MAX_ITER = 10_000
ALL_ORTHANTS_MAX_M = 10


# --------------------------------------------------------------------------- #
# Curie-Weiss equation
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class CWRoot:
    """Largest non-negative root of the Curie-Weiss equation.

    ``weighted=False`` solves ``beta * sum_l tanh(x / sqrt(a_l)) = x``;
    ``weighted=True`` solves ``beta * sum_l sqrt(a_l) tanh(x / sqrt(a_l)) = x``,
    the stationarity condition of the homogeneous mean-field free energy.  In
    both cases ``magnetizations[l] = tanh(root / sqrt(a_l))``.
    """

    beta: float
    alphas: tuple[float, ...]
    root: float
    residual: float
    weighted: bool
    magnetizations: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"beta": self.beta, "alphas": list(self.alphas), "root": self.root,
                "residual": self.residual, "weighted": self.weighted,
                "magnetizations": list(self.magnetizations)}


def _cw_terms(alphas: np.ndarray, weighted: bool):
    s = np.sqrt(alphas)
    coef = s if weighted else np.ones_like(s)
    return s, coef


def solve_curie_weiss(beta: float, alphas, weighted: bool = False) -> CWRoot:
    beta = float(beta)
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0):
        raise ValidationError("alphas must be positive")
    s, coef = _cw_terms(alphas, weighted)

    def g(x):
        return beta * float(np.sum(coef * np.tanh(x / s))) - x

    def dg(x):
        return beta * float(np.sum(coef / s / np.cosh(x / s) ** 2)) - 1.0

    root = 0.0
    # g is concave on x > 0 with g(0) = 0: a positive root exists iff g'(0) > 1
    if dg(0.0) > 1e-15:
        hi = beta * float(np.sum(coef))
        lo = hi / 2.0
        while g(lo) <= 0.0:
            lo /= 2.0
            if lo < 1e-300:
                break
        if lo >= 1e-300:
            while hi - lo > 1e-13:
                mid = 0.5 * (lo + hi)
                if g(mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
            d = dg(root)
            if d != 0.0:
                polished = root - g(root) / d
                if abs(g(polished)) <= abs(g(root)):
                    root = polished
    mags = tuple(float(v) for v in np.tanh(root / s))
    return CWRoot(beta, tuple(alphas.tolist()), root, abs(g(root)), weighted, mags)


# --------------------------------------------------------------------------- #
# free-energy function
# --------------------------------------------------------------------------- #

def _quadratic_form(J: CouplingMatrix | np.ndarray, alphas) -> np.ndarray:
    Jm = J.entries if isinstance(J, CouplingMatrix) else np.asarray(J, dtype=float)
    s = np.sqrt(np.asarray(alphas, dtype=float))
    try:
        Jinv = np.linalg.inv(Jm)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("coupling matrix is singular", 0.0) from exc
    if not np.all(np.isfinite(Jinv)) or np.linalg.cond(Jm) > 1e14:
        raise SingularSystemError("coupling matrix is singular", float(np.min(np.abs(np.linalg.eigvalsh(Jm)))))
    Q = s[:, None] * Jinv * s[None, :]
    return 0.5 * (Q + Q.T)


def _log_cosh(y):
    return np.logaddexp(y, -y) - math.log(2.0)


def f_value(y, J, alphas) -> float:
    y = np.asarray(y, dtype=float)
    a = np.asarray(alphas, dtype=float)
    Q = _quadratic_form(J, a)
    return float(0.5 * y @ Q @ y - np.sum(a * _log_cosh(y)))


def f_gradient(y, J, alphas) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    a = np.asarray(alphas, dtype=float)
    Q = _quadratic_form(J, a)
    return Q @ y - a * np.tanh(y)


@dataclass(frozen=True)
class StrongMinima:
    """Global minimizers ``y`` of F with magnetizations ``tanh(y)`` and sign patterns."""

    minimizers: tuple[np.ndarray, ...]
    f_value: float
    signatures: tuple[tuple[int, ...], ...]
    local_minima: int = 0
    notes: tuple[str, ...] = ()

    @property
    def magnetizations(self) -> tuple[np.ndarray, ...]:
        return tuple(np.tanh(y) for y in self.minimizers)

    def to_dict(self) -> dict:
        return {"f_value": self.f_value,
                "minimizers": [y.tolist() for y in self.minimizers],
                "magnetizations": [m.tolist() for m in self.magnetizations],
                "signatures": [list(s) for s in self.signatures],
                "local_minima": self.local_minima,
                "notes": list(self.notes)}


def _signature(y: np.ndarray) -> tuple[int, ...]:
    return tuple(int(v) for v in np.where(np.abs(y) < 1e-9, 0, np.sign(y)))


def _newton_descent(y0: np.ndarray, Q: np.ndarray, a: np.ndarray, max_iter: int = MAX_ITER):
    """Damped Newton on F with a gradient-descent fallback; returns (y, F, converged)."""

    def F(y):
        return 0.5 * y @ Q @ y - float(np.sum(a * _log_cosh(y)))

    y = y0.astype(float).copy()
    fy = F(y)
    for _ in range(max_iter):
        g = Q @ y - a * np.tanh(y)
        gnorm = float(np.max(np.abs(g)))
        if gnorm <= 1e-13 * max(1.0, float(np.max(np.abs(Q @ y)))):
            return y, fy, True
        H = Q - np.diag(a / np.cosh(y) ** 2)
        try:
            L = np.linalg.cholesky(H)
            d = -np.linalg.solve(L.T, np.linalg.solve(L, g))
            newton = True
        except np.linalg.LinAlgError:
            # indefinite Hessian: Newton step on |H| with eigenvalues floored,
            # which stays a descent direction and escapes saddles along -H curvature
            lam, V = np.linalg.eigh(H)
            floor = 1e-8 * max(1.0, float(np.max(np.abs(lam))))
            d = -V @ ((V.T @ g) / np.maximum(np.abs(lam), floor))
            newton = False
        if newton and gnorm < 1e-6:
            y = y + d
            fy = F(y)
            continue
        slope = float(g @ d)
        t = 1.0
        while True:
            cand = y + t * d
            fc = F(cand)
            if fc <= fy + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                if newton:
                    d, newton, slope, t = -g, False, -float(g @ g), 1.0
                    continue
                return y, fy, gnorm <= GRAD_TOL
        y, fy = cand, fc
    g = Q @ y - a * np.tanh(y)
    return y, fy, float(np.max(np.abs(g))) <= GRAD_TOL


def lemma_signatures(J: CouplingMatrix) -> list[tuple[int, ...]]:
    """Orthant sign patterns where the global minima are expected for each family."""
    M = J.M
    if J.family in ("homogeneous", "uniform"):
        return [(1,) * M]
    if J.family == "two_cluster":
        M1 = J.params["M1"]
        return [(1,) * M1 + (-1,) * (M - M1)]
    if J.family == "hostile":
        k = M // 2 if M % 2 == 0 else (M + 1) // 2
        out = []
        for pos in itertools.combinations(range(M), k):
            out.append(tuple(1 if i in pos else -1 for i in range(M)))
        return out
    return [(1,) * M]


def _seed_signatures(J: CouplingMatrix) -> list[tuple[int, ...]]:
    M = J.M
    if M <= ALL_ORTHANTS_MAX_M:
        # every orthant up to global sign; F is even so the negations are implied
        return [(1,) + s for s in itertools.product((1, -1), repeat=M - 1)]
    return lemma_signatures(J)


def _homogeneous_minima(J: CouplingMatrix, a: np.ndarray) -> StrongMinima:
    beta = J.params["beta"]
    cw = solve_curie_weiss(beta, a, weighted=True)
    s = np.sqrt(a)
    x = cw.root
    phi = x * x / (2.0 * beta) - float(np.sum(a * _log_cosh(x / s)))
    y = x / s
    return StrongMinima((y, -y), phi, (_signature(y), _signature(-y)), 2,
                        ("homogeneous coupling: minima from the weighted Curie-Weiss root",))


def minimize_f(J: CouplingMatrix, alphas) -> StrongMinima:
    """Global minima of F by multistart damped Newton over orthant-seeded starts."""
    a = np.asarray(alphas, dtype=float)
    if a.size != J.M:
        raise ValidationError(f"{a.size} alphas for an M={J.M} coupling")
    reg = classify_regime(J)
    if reg.tag != "strong":
        raise RegimeError(f"strong interaction regime required, coupling is {reg.tag}")
    if J.family == "homogeneous":
        return _homogeneous_minima(J, a)
    Q = _quadratic_form(J, a)
    s = np.sqrt(a)
    x0 = max(solve_curie_weiss(float(np.max(np.diag(J.entries))), a).root, 1.0)

    found: list[tuple[np.ndarray, float]] = []
    for sig in _seed_signatures(J):
        y0 = np.asarray(sig, dtype=float) * x0 / s
        y, fy, ok = _newton_descent(y0, Q, a)
        if not ok:
            raise ConvergenceError(f"no convergence from seed signature {sig} after {MAX_ITER} iterations",
                                   best=(y, fy))
        H = Q - np.diag(a / np.cosh(y) ** 2)
        if np.min(np.linalg.eigvalsh(H)) <= 0.0:
            continue  # saddle or degenerate point
        for cand in (y, -y):
            if not any(np.max(np.abs(cand - z)) < DEDUP_TOL for z, _ in found):
                found.append((cand, fy))
    if not found:
        raise ConvergenceError("multistart found no strict local minimum of F")
    fmin = min(f for _, f in found)
    glob = [(y, f) for y, f in found if f - fmin <= TIE_TOL]
    glob.sort(key=lambda t: (tuple(-v for v in _signature(t[0])), tuple(t[0].tolist())))
    ys = tuple(y for y, _ in glob)
    return StrongMinima(ys, float(fmin), tuple(_signature(y) for y in ys), len(found))


# --------------------------------------------------------------------------- #
# weight solutions
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class WeightSolution:
    """Tagged optimal-weight description.

    tags: ``unique`` (``weights``), ``any_positive`` (every positive tuple, with
    ``total`` the sum fixed by the sigma = N normalization), ``cluster_constrained``
    (``partition`` and ``theta``), ``zero``, ``constrained`` (singular system:
    ``weights`` is a particular solution and ``null_space`` spans the freedom),
    ``per_cluster`` (``blocks``).
    """

    tag: str
    weights: np.ndarray | None = None
    theta: float | None = None
    partition: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    total: float | None = None
    null_space: np.ndarray | None = None
    blocks: tuple["WeightSolution", ...] = ()
    sigma: str | None = None
    coefficients: dict | None = None
    notes: tuple[str, ...] = ()

    def block_totals(self) -> list[float]:
        out = []
        for b in self.blocks:
            if b.tag in ("unique", "constrained"):
                out.append(float(np.sum(b.weights)))
            elif b.tag == "zero":
                out.append(0.0)
            elif b.tag == "any_positive":
                out.append(float(b.total))
            else:
                out.append(float("nan"))
        return out

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"tag": self.tag}
        if self.weights is not None:
            d["weights"] = [float(v) for v in self.weights]
        if self.theta is not None:
            d["theta"] = self.theta
        if self.partition is not None:
            d["partition"] = [list(self.partition[0]), list(self.partition[1])]
        if self.total is not None:
            d["total"] = self.total
        if self.null_space is not None:
            d["null_space"] = self.null_space.tolist()
        if self.blocks:
            d["blocks"] = [b.to_dict() for b in self.blocks]
            d["block_totals"] = self.block_totals()
        if self.sigma is not None:
            d["sigma"] = self.sigma
        if self.coefficients is not None:
            d["coefficients"] = self.coefficients
        d["notes"] = list(self.notes)
        return d


def signature_system(minima: StrongMinima, alphas) -> tuple[np.ndarray, np.ndarray]:
    """Two-point-limit ``A`` and ``b`` (sigma = N) with mass spread evenly over the minima."""
    a = np.asarray(alphas, dtype=float)
    sig = np.array(minima.signatures, dtype=float)
    if np.any(sig == 0):
        raise UnresolvedMinimaError("a minimizer has a vanishing component; council vote undefined")
    mags = np.array(minima.magnetizations)
    A = sig.T @ sig / len(sig)
    per_capita = mags @ a  # S/N at each minimum
    b = sig.T @ per_capita / len(sig)
    return A, b


def _general_solution(minima: StrongMinima, alphas, notes=()) -> WeightSolution:
    A, b = signature_system(minima, alphas)
    try:
        w = solve_dense(A, b)
    except SingularSystemError:
        U, sv, Vt = np.linalg.svd(A)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        w, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.max(np.abs(A @ w - b)) > 1e-9 * (1 + np.max(np.abs(b))):
            raise UnresolvedMinimaError("singular signature system with inconsistent right-hand side")
        return WeightSolution("constrained", weights=w, null_space=Vt[rank:].copy(),
                              notes=tuple(notes) + (f"A has rank {rank} < {A.shape[0]}; "
                                                    "weights determined up to the null space",))
    if np.allclose(w, 0.0, atol=1e-12):
        return WeightSolution("zero", weights=np.zeros_like(w), notes=tuple(notes))
    return WeightSolution("unique", weights=w, notes=tuple(notes))


def _check_pairs(minima: StrongMinima):
    for y in minima.minimizers:
        if not any(np.max(np.abs(y + z)) < DEDUP_TOL for z in minima.minimizers):
            raise UnresolvedMinimaError("minima set is not closed under y -> -y")


def strong_weight_solution(J: CouplingMatrix, alphas, minima: StrongMinima | None = None) -> WeightSolution:
    a = np.asarray(alphas, dtype=float)
    if minima is None:
        minima = minimize_f(J, a)
    _check_pairs(minima)
    M = J.M
    fam = J.family
    jbar = J.params.get("jbar")
    mags = minima.magnetizations
    sigs = [np.array(s) for s in minima.signatures]

    if M == 1:
        return _general_solution(minima, a, ("single group: weight proportional to its population",))

    if fam == "homogeneous" or (fam == "uniform" and jbar > 0):
        if not all(abs(int(s.sum())) == M for s in sigs):
            raise UnresolvedMinimaError("positive coupling but minima outside the +/- orthants")
        total = float(np.abs(mags[0]) @ a)
        return WeightSolution("any_positive", total=total,
                              notes=("AnyPositive: any M-tuple of positive weights is optimal; council votes are "
                                     "asymptotically unanimous",))

    if fam == "two_cluster" and jbar > 0:
        M1 = J.params["M1"]
        split = np.array([1] * M1 + [-1] * (M - M1))
        if len(sigs) != 2:
            raise UnresolvedMinimaError(f"two-cluster coupling with {len(sigs)} global minima; "
                                        "the cluster weight difference is defined only for exactly two")
        if not all(np.array_equal(s, split) or np.array_equal(s, -split) for s in sigs):
            raise UnresolvedMinimaError("two-cluster minima not in the cluster-split orthants")
        m = np.abs(mags[0])
        theta = float(a[:M1] @ m[:M1] - a[M1:] @ m[M1:])
        return WeightSolution("cluster_constrained", theta=theta,
                              partition=(tuple(range(M1)), tuple(range(M1, M))),
                              notes=("any positive weights with sum(C1) - sum(C2) = theta are optimal",))

    if fam == "hostile" and jbar > 0:
        if not np.allclose(a, a[0], rtol=0, atol=1e-12):
            raise UnresolvedMinimaError("hostile world in the strong regime is characterized only "
                                        "for equal group sizes")
        k = M // 2 if M % 2 == 0 else (M + 1) // 2
        if not all(int((s > 0).sum()) in (k, M - k) for s in sigs):
            raise UnresolvedMinimaError("hostile-world minima outside the balanced orthants")
        if M % 2 == 0:
            return WeightSolution("zero", weights=np.zeros(M),
                                  notes=("balanced coalitions: optimal weights are w = 0; the minimal "
                                         "democracy deficit cannot be reached in practice",))
        m = np.zeros(M)
        for lam in range(M):
            vals = [abs(mm[lam]) for mm, s in zip(mags, sigs) if s[lam] > 0 and int((s > 0).sum()) == k]
            m[lam] = float(np.mean(vals))
        w = m * (M + 1) / M ** 3
        return WeightSolution("unique", weights=w,
                              notes=("odd M, equal sizes: w_l = m_l (M+1)/M^3",))

    return _general_solution(minima, a)


# --------------------------------------------------------------------------- #
# independent clusters
# --------------------------------------------------------------------------- #

def mixed_cluster_weights(blocks: Sequence[tuple[CouplingMatrix, Sequence[float], RegimeClass | None]]
                          ) -> WeightSolution:
    """Optimal weights for independent clusters, each solved in its own regime.

    ``alphas`` of each block are the global population fractions of its groups
    (they need not sum to one).  With every block weak the normalization is
    sigma = sqrt(N); otherwise sigma = N and weak blocks get limit weight 0.
    """
    from .weak import solve_weak_weights  # local import: weak depends on model only

    regs = []
    for Jb, ab, reg in blocks:
        reg = reg or classify_regime(Jb)
        if reg.tag == "critical":
            raise RegimeError("a cluster is in the critical regime")
        regs.append(reg)
    all_weak = all(r.tag == "weak" for r in regs)
    out = []
    if all_weak:
        raw = [solve_weak_weights(Jb, ab, normalize=False) for Jb, ab, _ in blocks]
        top = max(float(np.max(w)) for w in raw)
        for w in raw:
            out.append(WeightSolution("unique", weights=w / top))
        return WeightSolution("per_cluster", blocks=tuple(out), sigma="sqrtN",
                              notes=("all clusters weak: sigma = sqrt(N)",))
    for (Jb, ab, _), reg in zip(blocks, regs):
        if reg.tag == "weak":
            out.append(WeightSolution("zero", weights=np.zeros(Jb.M),
                                      notes=("weak cluster under sigma = N: limit weight 0, "
                                             "finite-N weight scales like 1/sqrt(N)",)))
        else:
            out.append(strong_weight_solution(Jb, ab))
    return WeightSolution("per_cluster", blocks=tuple(out), sigma="N",
                          notes=("some cluster strong: sigma = N",))


def block_clusters(J: CouplingMatrix, alphas) -> list[tuple[CouplingMatrix, np.ndarray, RegimeClass]]:
    if J.family != "block":
        raise ValidationError("block coupling required")
    a = np.asarray(alphas, dtype=float)
    return [(b, a[sl], classify_regime(b)) for b, sl in zip(J.blocks, J.block_slices())]
