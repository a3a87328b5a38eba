"""Voting-model specifications, scenario coupling matrices and regime classification.

A model is a set of ``M`` voter groups with limit population fractions
``alphas`` (and optionally finite sizes for simulation) coupled through a
symmetric ``M x M`` matrix ``J``.  The council quota is a simple majority and
is not configurable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConstraintViolation, ValidationError
from .linalg import definiteness, uniform_matrix_eigenvalues

QUOTA = 0.5
CRITICAL_TOL = 1e-10

FAMILIES = ("homogeneous", "uniform", "two_cluster", "hostile", "block", "general")


@dataclass(frozen=True)
class GroupSizes:
    alphas: tuple[float, ...]
    finite_sizes: tuple[int, ...] | None = None

    @property
    def M(self) -> int:
        return len(self.alphas)

    @property
    def N(self) -> int:
        if self.finite_sizes is None:
            raise ValidationError("finite_sizes are required for this operation")
        return int(sum(self.finite_sizes))

    def __post_init__(self):
        if len(self.alphas) < 1:
            raise ValidationError("at least one group is required (M >= 1)")
        if any(not (a > 0.0) for a in self.alphas):
            raise ValidationError(f"alphas must be positive, got {list(self.alphas)}")
        if abs(math.fsum(self.alphas) - 1.0) > 1e-12:
            raise ValidationError(f"alphas must sum to 1, got sum {math.fsum(self.alphas)!r}")
        if self.finite_sizes is not None:
            if len(self.finite_sizes) != len(self.alphas):
                raise ValidationError("finite_sizes and alphas differ in length")
            if any(int(n) < 1 for n in self.finite_sizes):
                raise ValidationError(f"finite sizes must be >= 1, got {list(self.finite_sizes)}")


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric coupling matrix ``J`` tagged with the scenario family that produced it.

    ``params`` holds the family parameters (``beta``; ``j0``/``jbar``;
    ``M1``/``M2``); for ``block`` the sub-matrices are kept in ``blocks``.
    """

    entries: np.ndarray
    family: str = "general"
    params: dict = field(default_factory=dict)
    blocks: tuple["CouplingMatrix", ...] = ()

    def __post_init__(self):
        J = np.array(self.entries, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
            raise ValidationError(f"coupling must be a non-empty square matrix, got shape {J.shape}")
        if not np.allclose(J, J.T, rtol=0.0, atol=1e-12):
            raise ValidationError("coupling matrix is not symmetric within 1e-12")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown coupling family {self.family!r}")
        J.setflags(write=False)
        object.__setattr__(self, "entries", J)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b.M))
            start += b.M
        return out

    def __repr__(self):
        return f"CouplingMatrix(family={self.family!r}, params={self.params!r}, M={self.M})"


@dataclass(frozen=True)
class RegimeClass:
    tag: str  # "weak" | "critical" | "strong"
    margin: float
    per_cluster: tuple["RegimeClass", ...] | None = None

    @property
    def is_weak(self) -> bool:
        return self.tag == "weak"

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"tag": self.tag, "margin": self.margin}
        if self.per_cluster is not None:
            d["per_cluster"] = [r.to_dict() for r in self.per_cluster]
        return d


@dataclass(frozen=True)
class ModelSpec:
    sizes: GroupSizes
    coupling: CouplingMatrix
    quota: float = QUOTA

    def __post_init__(self):
        if self.coupling.M != self.sizes.M:
            raise ValidationError(
                f"coupling dimension {self.coupling.M} does not match M={self.sizes.M}")
        if self.quota != QUOTA:
            raise ValidationError("only the simple-majority quota 1/2 is supported")

    @property
    def M(self) -> int:
        return self.sizes.M

    @property
    def alphas(self) -> np.ndarray:
        return np.asarray(self.sizes.alphas, dtype=float)


# --------------------------------------------------------------------------- #
# coupling construction
# --------------------------------------------------------------------------- #

def _uniform_fill(M: int, diag: float, off: float) -> np.ndarray:
    J = np.full((M, M), float(off))
    np.fill_diagonal(J, float(diag))
    return J


def _require(cond: bool, message: str):
    if not cond:
        raise ConstraintViolation(message)


def build_coupling(family: str, params: dict | None = None, M: int | None = None) -> CouplingMatrix:
    """Materialize the coupling matrix of a scenario family.

    Raises :class:`ConstraintViolation` naming the failed inequality when the
    parameters leave the admissible (positive definite) set.
    """
    params = dict(params or {})
    if family == "block":
        return _build_block(params, M)
    if family == "general":
        J = np.asarray(params.get("matrix"), dtype=float)
        if J.ndim != 2:
            raise ValidationError("general coupling needs a 2-d 'matrix'")
        if M is not None and J.shape[0] != M:
            raise ValidationError(f"matrix dimension {J.shape[0]} does not match M={M}")
        cm = CouplingMatrix(J, "general", {})
        rep = definiteness(cm.entries)
        _require(rep.tag == "positive_definite",
                 f"J positive definite (min eigenvalue {rep.min_eigenvalue:.6g})")
        return cm
    if M is None or int(M) < 1:
        raise ValidationError(f"M must be a positive integer, got {M!r}")
    M = int(M)

    if family == "homogeneous":
        beta = float(params["beta"])
        _require(beta >= 0.0, f"beta >= 0 (got beta={beta})")
        return CouplingMatrix(np.full((M, M), beta), "homogeneous", {"beta": beta})

    j0, jbar = float(params["j0"]), float(params["jbar"])
    if family == "uniform":
        _require(jbar >= 0.0, f"jbar >= 0 (got jbar={jbar})")
        _require(j0 > jbar, f"j0 > jbar (got j0={j0}, jbar={jbar})")
        return CouplingMatrix(_uniform_fill(M, j0, jbar), "uniform", {"j0": j0, "jbar": jbar})

    if family == "two_cluster":
        M1, M2 = int(params["M1"]), int(params["M2"])
        if M1 < 1 or M2 < 1 or M1 + M2 != M:
            raise ValidationError(f"two_cluster needs M1, M2 >= 1 with M1 + M2 = M (got {M1}+{M2}, M={M})")
        _require(jbar >= 0.0, f"jbar >= 0 (got jbar={jbar})")
        _require(j0 > jbar, f"j0 > jbar (got j0={j0}, jbar={jbar})")
        sign = np.concatenate([np.ones(M1), -np.ones(M2)])
        J = _uniform_fill(M, j0, jbar) * np.outer(sign, sign)
        return CouplingMatrix(J, "two_cluster", {"j0": j0, "jbar": jbar, "M1": M1, "M2": M2})

    if family == "hostile":
        _require(j0 > 0.0, f"j0 > 0 (got j0={j0})")
        _require(jbar >= 0.0, f"jbar >= 0 (got jbar={jbar})")
        if M > 1:
            _require(jbar < j0 / (M - 1), f"jbar < j0/(M-1) (got jbar={jbar}, j0/(M-1)={j0 / (M - 1)})")
        return CouplingMatrix(_uniform_fill(M, j0, -jbar), "hostile", {"j0": j0, "jbar": jbar})

    raise ValidationError(f"unknown coupling family {family!r}")


def _build_block(params: dict, M: int | None) -> CouplingMatrix:
    raw = params.get("blocks")
    if not raw:
        raise ValidationError("block coupling needs a non-empty 'blocks' list")
    blocks = []
    for sub in raw:
        if isinstance(sub, CouplingMatrix):
            blocks.append(sub)
            continue
        sub = dict(sub)
        fam = sub.pop("family")
        if fam == "block":
            raise ValidationError("nested block couplings are not supported")
        blocks.append(build_coupling(fam, sub, sub.pop("M", None)))
    dim = sum(b.M for b in blocks)
    if M is not None and dim != M:
        raise ValidationError(f"block dimensions sum to {dim}, expected M={M}")
    J = np.zeros((dim, dim))
    start = 0
    for b in blocks:
        J[start:start + b.M, start:start + b.M] = b.entries
        start += b.M
    return CouplingMatrix(J, "block", {"sizes": [b.M for b in blocks]}, tuple(blocks))


# --------------------------------------------------------------------------- #
# regimes
# --------------------------------------------------------------------------- #

def classify_regime(J: CouplingMatrix) -> RegimeClass:
    """Weak / critical / strong interaction regime of a coupling matrix.

    Homogeneous couplings compare ``beta`` with ``1/M``; all other families
    test definiteness of ``I - J``.  Block couplings are classified per block
    and the overall tag is weak only if every block is weak.
    """
    if J.family == "block":
        per = tuple(classify_regime(b) for b in J.blocks)
        tags = {r.tag for r in per}
        tag = "critical" if "critical" in tags else ("weak" if tags == {"weak"} else "strong")
        return RegimeClass(tag, min(r.margin for r in per), per)
    if J.family == "homogeneous":
        margin = 1.0 / J.M - J.params["beta"]
    else:
        rep = definiteness(np.eye(J.M) - J.entries)
        margin = rep.min_eigenvalue
    if abs(margin) < CRITICAL_TOL:
        return RegimeClass("critical", margin)
    return RegimeClass("weak" if margin > 0 else "strong", margin)


def regime_by_inequalities(family: str, params: dict, M: int) -> str:
    """Closed-form regime tests for the two-parameter families (no eigensolver)."""
    if family == "homogeneous":
        d = 1.0 / M - params["beta"]
    elif family in ("uniform", "two_cluster"):
        lam_minus, lam_plus = uniform_matrix_eigenvalues(1.0 - params["j0"], -params["jbar"], M)
        d = min(lam_minus, lam_plus) if M > 1 else lam_plus
    elif family == "hostile":
        lam_minus, lam_plus = uniform_matrix_eigenvalues(1.0 - params["j0"], params["jbar"], M)
        d = min(lam_minus, lam_plus) if M > 1 else lam_plus
    else:
        raise ValidationError(f"no inequality form for family {family!r}")
    if abs(d) < CRITICAL_TOL:
        return "critical"
    return "weak" if d > 0 else "strong"


# --------------------------------------------------------------------------- #
# validation and JSON
# --------------------------------------------------------------------------- #

def normalize_alphas(alphas: Sequence[float], tol: float = 1e-9) -> tuple[float, ...]:
    a = [float(x) for x in alphas]
    if any(not (x > 0.0) for x in a):
        raise ValidationError(f"alphas must be positive, got {a}")
    s = math.fsum(a)
    if abs(s - 1.0) > tol:
        raise ValidationError(f"alphas must sum to 1, got sum {s:.12g}")
    return tuple(x / s for x in a)


def validate_model(spec: ModelSpec | dict, size_tol: float = 0.05) -> ModelSpec:
    """Normalize and check a model spec (a :class:`ModelSpec` or its JSON dict).

    Alphas off by at most 1e-9 are renormalized.  When finite sizes are given
    the empirical fractions ``N_l / N`` must match the alphas within
    ``size_tol`` (absolute).
    """
    if isinstance(spec, dict):
        return model_from_dict(spec, size_tol=size_tol)
    alphas = normalize_alphas(spec.sizes.alphas)
    finite = spec.sizes.finite_sizes
    if finite is not None:
        _check_sizes(alphas, finite, size_tol)
    J = spec.coupling
    if not np.allclose(J.entries, J.entries.T, rtol=0, atol=1e-12):
        raise ValidationError("coupling matrix is not symmetric")
    return ModelSpec(GroupSizes(alphas, finite), J)


def _check_sizes(alphas, finite, tol):
    if any(int(n) != n or n < 1 for n in finite):
        raise ValidationError(f"finite sizes must be positive integers, got {list(finite)}")
    N = sum(finite)
    for lam, (a, n) in enumerate(zip(alphas, finite)):
        if abs(n / N - a) > tol:
            raise ValidationError(
                f"group {lam}: N_l/N = {n / N:.6g} differs from alpha = {a:.6g} by more than {tol}")


def model_from_dict(doc: dict, size_tol: float = 0.05) -> ModelSpec:
    try:
        M = int(doc["M"])
        coupling_doc = dict(doc["coupling"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model spec: {exc}") from exc
    finite = doc.get("finite_sizes")
    if "alphas" in doc:
        alphas = normalize_alphas(doc["alphas"])
    elif finite is not None:
        alphas = normalize_alphas([n / sum(finite) for n in finite])
    else:
        raise ValidationError("model spec needs 'alphas' or 'finite_sizes'")
    if len(alphas) != M:
        raise ValidationError(f"len(alphas)={len(alphas)} does not match M={M}")
    if finite is not None:
        finite = tuple(int(n) for n in finite)
        if len(finite) != M:
            raise ValidationError(f"len(finite_sizes)={len(finite)} does not match M={M}")
        _check_sizes(alphas, finite, size_tol)
    family = coupling_doc.pop("family", None)
    if family is None:
        raise ValidationError("coupling needs a 'family'")
    J = build_coupling(family, coupling_doc, M)
    return ModelSpec(GroupSizes(alphas, finite), J)


def load_model(path: str | Path) -> ModelSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read model spec {path}: {exc}") from exc
    return model_from_dict(doc)


def coupling_to_dict(J: CouplingMatrix) -> dict:
    if J.family == "general":
        return {"family": "general", "matrix": J.entries.tolist()}
    if J.family == "block":
        return {"family": "block",
                "blocks": [dict(coupling_to_dict(b), M=b.M) for b in J.blocks]}
    return {"family": J.family, **J.params}


def model_to_dict(spec: ModelSpec) -> dict:
    d: dict[str, Any] = {"M": spec.M, "alphas": list(spec.sizes.alphas)}
    if spec.sizes.finite_sizes is not None:
        d["finite_sizes"] = list(spec.sizes.finite_sizes)
    d["coupling"] = coupling_to_dict(spec.coupling)
    return d
