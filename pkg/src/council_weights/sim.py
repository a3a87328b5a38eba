"""Finite-N ground truth: exact enumeration over group margins and Gibbs sampling.

The Gibbs weight of a configuration depends only on the group margins, so the
exact distribution is enumerated over up-vote counts ``k_l`` with binomial
multiplicities; cost is ``prod(N_l + 1)``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.special import gammaln, logsumexp

from . import kernels
from .errors import GuardExceeded, ValidationError
from .linalg import solve_dense
from .model import ModelSpec

ENUMERATION_GUARD = 10 ** 7
N_BATCHES = 32
MIN_SAMPLES = 64
UNIFORM_CHUNK = 1 << 20


def council_vote(S):
    """+1 where the margin is positive, -1 otherwise (ties vote no)."""
    return np.where(np.asarray(S) > 0, 1, -1)


def worker_count() -> int:
    env = os.environ.get("COUNCIL_WEIGHTS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"COUNCIL_WEIGHTS_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _finite_sizes(spec: ModelSpec) -> np.ndarray:
    if spec.sizes.finite_sizes is None:
        raise ValidationError("finite_sizes are required for simulation and enumeration")
    return np.asarray(spec.sizes.finite_sizes, dtype=np.int64)


def _scaled_coupling(spec: ModelSpec, sizes: np.ndarray) -> np.ndarray:
    root = np.sqrt(sizes.astype(float))
    return spec.coupling.entries / np.outer(root, root)


# --------------------------------------------------------------------------- #
# exact distribution
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class MarginDistribution:
    """Exact law of the margin vector on the grid ``axes[0] x ... x axes[M-1]``."""

    axes: tuple[np.ndarray, ...]
    probabilities: np.ndarray
    log_Z: float

    @property
    def M(self) -> int:
        return len(self.axes)

    def support(self) -> Iterator[tuple[tuple[int, ...], float]]:
        for idx in np.ndindex(self.probabilities.shape):
            yield tuple(int(ax[i]) for ax, i in zip(self.axes, idx)), float(self.probabilities[idx])

    def pair_marginal(self, lam: int, nu: int) -> np.ndarray:
        other = tuple(i for i in range(self.M) if i not in (lam, nu))
        P = self.probabilities.sum(axis=other) if other else self.probabilities
        return P if lam < nu else P.T

    def marginal(self, lam: int) -> np.ndarray:
        other = tuple(i for i in range(self.M) if i != lam)
        return self.probabilities.sum(axis=other) if other else self.probabilities

    def council_pattern_probabilities(self) -> np.ndarray:
        """P(chi = s) for every sign pattern, as a ``(2,) * M`` array indexed by (chi > 0)."""
        P = self.probabilities
        for lam, ax in enumerate(self.axes):
            pos = ax > 0
            P = np.stack([np.compress(~pos, P, axis=lam).sum(axis=lam),
                          np.compress(pos, P, axis=lam).sum(axis=lam)], axis=lam)
        return P


def exact_margin_distribution(spec: ModelSpec, guard: int = ENUMERATION_GUARD) -> MarginDistribution:
    sizes = _finite_sizes(spec)
    cells = int(np.prod(sizes + 1, dtype=object))
    if cells > guard:
        raise GuardExceeded(f"margin grid has {cells} cells, guard is {guard}")
    K = _scaled_coupling(spec, sizes)
    M = len(sizes)
    axes = []
    logw = np.zeros((1,) * M)
    for lam, n in enumerate(sizes):
        k = np.arange(n + 1)
        S = (2 * k - n).astype(np.int64)
        axes.append(S)
        logc = gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
        shape = [1] * M
        shape[lam] = n + 1
        logw = logw + logc.reshape(shape)
    Sf = [ax.astype(float).reshape([-1 if i == lam else 1 for i in range(M)])
          for lam, ax in enumerate(axes)]
    # -H = 1/2 sum_{l,m} K_lm S_l S_m
    for lam in range(M):
        logw = logw + 0.5 * K[lam, lam] * Sf[lam] ** 2
        for mu in range(lam + 1, M):
            logw = logw + K[lam, mu] * Sf[lam] * Sf[mu]
    log_Z = float(logsumexp(logw))
    probs = np.exp(logw - log_Z)
    probs /= probs.sum()
    return MarginDistribution(tuple(axes), probs, log_Z)


# --------------------------------------------------------------------------- #
# moments
# --------------------------------------------------------------------------- #

@dataclass
class SampleStats:
    chi_corr: np.ndarray        # E(chi_l chi_m)
    chi_S: np.ndarray           # E(chi_l S_m)
    S_second: np.ndarray        # E(S_l S_m)
    std_errors: dict = field(default_factory=dict)
    n_samples: int = 0
    deficit: float | None = None
    orthant: np.ndarray | None = None  # 4 P(S_l > 0, S_m > 0) - 1, exact only

    @property
    def M(self) -> int:
        return self.chi_corr.shape[0]

    def b_vector(self, sigma: float) -> np.ndarray:
        """``E(chi_l S) / sigma``."""
        return self.chi_S.sum(axis=1) / sigma

    def normal_equation_weights(self, sigma: float) -> np.ndarray:
        return solve_dense(self.chi_corr, self.b_vector(sigma))

    def to_dict(self) -> dict:
        d = {"chi_corr": self.chi_corr.tolist(), "chi_S": self.chi_S.tolist(),
             "S_second": self.S_second.tolist(), "n_samples": self.n_samples,
             "std_errors": {k: np.asarray(v).tolist() for k, v in self.std_errors.items()}}
        if self.deficit is not None:
            d["deficit"] = self.deficit
        if self.orthant is not None:
            d["orthant"] = self.orthant.tolist()
        return d


def exact_moments(spec_or_dist: ModelSpec | MarginDistribution) -> SampleStats:
    dist = (spec_or_dist if isinstance(spec_or_dist, MarginDistribution)
            else exact_margin_distribution(spec_or_dist))
    M = dist.M
    chi = [council_vote(ax).astype(float) for ax in dist.axes]
    S = [ax.astype(float) for ax in dist.axes]
    chi_corr = np.eye(M)
    chi_S = np.zeros((M, M))
    S2 = np.zeros((M, M))
    orth = np.eye(M)
    for lam in range(M):
        p = dist.marginal(lam)
        chi_S[lam, lam] = p @ (chi[lam] * S[lam])
        S2[lam, lam] = p @ (S[lam] ** 2)
        for nu in range(lam + 1, M):
            P = dist.pair_marginal(lam, nu)
            chi_corr[lam, nu] = chi_corr[nu, lam] = chi[lam] @ P @ chi[nu]
            chi_S[lam, nu] = chi[lam] @ P @ S[nu]
            chi_S[nu, lam] = S[lam] @ P @ chi[nu]
            S2[lam, nu] = S2[nu, lam] = S[lam] @ P @ S[nu]
            pos = P[np.ix_(dist.axes[lam] > 0, dist.axes[nu] > 0)].sum()
            orth[lam, nu] = orth[nu, lam] = 4.0 * pos - 1.0
    zeros = np.zeros((M, M))
    return SampleStats(chi_corr, chi_S, S2, {"chi_corr": zeros, "chi_S": zeros, "S_second": zeros},
                       0, None, orth)


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES) -> tuple[np.ndarray, np.ndarray]:
    """Mean and batch-means standard error along axis 0 (trailing remainder dropped)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples for batch means, got {n}")
    size = n // n_batches
    trimmed = values[: size * n_batches]
    batches = trimmed.reshape((n_batches, size) + values.shape[1:]).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return values.mean(axis=0), se


def estimate_moments(samples, sigma: float | None = None, weights=None) -> SampleStats:
    """Plug-in estimates of the council moments from a margin sample ``(n, M)``."""
    S = np.asarray(samples.margins if isinstance(samples, MarginSamples) else samples, dtype=float)
    if S.ndim != 2 or S.shape[0] == 0:
        raise ValidationError("samples must be a non-empty (n, M) array")
    chi = council_vote(S).astype(float)
    cc, cc_se = batch_means(chi[:, :, None] * chi[:, None, :])
    cs, cs_se = batch_means(chi[:, :, None] * S[:, None, :])
    ss, ss_se = batch_means(S[:, :, None] * S[:, None, :])
    np.fill_diagonal(cc, 1.0)
    np.fill_diagonal(cc_se, 0.0)
    stats = SampleStats(cc, cs, ss, {"chi_corr": cc_se, "chi_S": cs_se, "S_second": ss_se}, S.shape[0])
    if weights is not None:
        if sigma is None:
            raise ValidationError("sigma is required to estimate the democracy deficit")
        d, se = democracy_deficit(S, weights, sigma)
        stats.deficit = d
        stats.std_errors["deficit"] = se
    return stats


# --------------------------------------------------------------------------- #
# Gibbs sampling
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class ChainConfig:
    sweeps: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    chains: int = 1

    def __post_init__(self):
        if not (self.sweeps > self.burn_in >= 0):
            raise ValidationError(f"need sweeps > burn_in >= 0, got sweeps={self.sweeps}, burn_in={self.burn_in}")
        if self.thinning < 1:
            raise ValidationError("thinning must be >= 1")
        if self.chains < 1:
            raise ValidationError("chains must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


@dataclass
class MarginSamples:
    """Recorded margins of all chains, ordered by chain index then sweep."""

    chain: np.ndarray
    sweep: np.ndarray
    margins: np.ndarray
    backend: str = kernels.BACKEND

    def __iter__(self):
        for c, t, s in zip(self.chain, self.sweep, self.margins):
            yield int(c), int(t), s

    def __len__(self):
        return self.margins.shape[0]

    def per_chain(self, c: int) -> np.ndarray:
        return self.margins[self.chain == c]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        M = self.margins.shape[1]
        w.writerow(["chain", "sweep"] + [f"S{i + 1}" for i in range(M)])
        for c, t, s in self:
            w.writerow([c, t] + [int(v) for v in s])
        return buf.getvalue()


def chain_rng(seed: int, chain: int) -> np.random.Generator:
    """PCG64 stream for one chain: seeded with ``seed + chain`` (mod 2**64)."""
    return np.random.Generator(np.random.PCG64((int(seed) + int(chain)) % 2 ** 64))


def _run_chain(spec: ModelSpec, cfg: ChainConfig, chain: int, kernel) -> tuple[np.ndarray, np.ndarray]:
    sizes = _finite_sizes(spec)
    n = int(sizes.sum())
    M = len(sizes)
    K = np.ascontiguousarray(_scaled_coupling(spec, sizes))
    selfc = np.ascontiguousarray(np.diag(spec.coupling.entries) / sizes)
    group = np.ascontiguousarray(np.repeat(np.arange(M, dtype=np.int32), sizes))
    rng = chain_rng(cfg.seed, chain)
    spins = (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)
    margins = np.array([spins[group == lam].sum() for lam in range(M)], dtype=np.int64)

    block = max(1, UNIFORM_CHUNK // n)
    out_sweeps, out_margins = [], []
    done = 0
    while done < cfg.sweeps:
        todo = min(block, cfg.sweeps - done)
        u = rng.random(todo * n)
        buf = np.empty((todo, M), dtype=np.int64)
        kernel(spins, group, margins, K, selfc, u, todo, buf)
        t = np.arange(done + 1, done + todo + 1)
        keep = (t > cfg.burn_in) & ((t - cfg.burn_in) % cfg.thinning == 0)
        out_sweeps.append(t[keep])
        out_margins.append(buf[keep])
        done += todo
    return np.concatenate(out_sweeps), np.concatenate(out_margins)


def gibbs_sample(spec: ModelSpec, cfg: ChainConfig, backend: str | None = None,
                 workers: int | None = None) -> MarginSamples:
    """Heat-bath Gibbs sampling of the mean-field measure.

    Chains run concurrently (the compiled kernel releases the GIL) and are
    merged in chain order, so output does not depend on scheduling.
    """
    kernel = kernels.KERNELS[backend] if backend else kernels.heat_bath_sweeps
    name = backend or kernels.BACKEND
    workers = workers or min(worker_count(), cfg.chains)
    if workers > 1 and cfg.chains > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_chain(spec, cfg, c, kernel), range(cfg.chains)))
    else:
        results = [_run_chain(spec, cfg, c, kernel) for c in range(cfg.chains)]
    chain = np.concatenate([np.full(len(t), c, dtype=np.int64) for c, (t, _) in enumerate(results)])
    sweep = np.concatenate([t for t, _ in results])
    margins = np.concatenate([m for _, m in results])
    return MarginSamples(chain, sweep, margins, name)


# --------------------------------------------------------------------------- #
# democracy deficit
# --------------------------------------------------------------------------- #

def democracy_deficit(source, w, sigma: float):
    """``E[(S/sigma - sum_l w_l chi_l)^2]``.

    Exact (a float) for a :class:`MarginDistribution` or exact
    :class:`SampleStats`; ``(mean, standard error)`` for a margin sample.
    """
    w = np.asarray(w, dtype=float)
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    if isinstance(source, MarginDistribution):
        source = exact_moments(source)
    if isinstance(source, SampleStats):
        if w.shape != (source.M,):
            raise ValidationError(f"weights of length {w.size} for M={source.M}")
        return float(source.S_second.sum() / sigma ** 2
                     - 2.0 / sigma * w @ source.chi_S.sum(axis=1)
                     + w @ source.chi_corr @ w)
    S = np.asarray(source.margins if isinstance(source, MarginSamples) else source, dtype=float)
    if S.ndim != 2 or S.shape[1] != w.size:
        raise ValidationError(f"weights of length {w.size} do not match samples of shape {S.shape}")
    d = (S.sum(axis=1) / sigma - council_vote(S) @ w) ** 2
    mean, se = batch_means(d)
    return float(mean), float(se)


@dataclass
class OptimalityReport:
    deficit: float
    n_perturbations: int
    magnitude: float
    improved: int
    significant: int
    min_change: float
    deficit_se: float | None = None

    @property
    def improvement_fraction(self) -> float:
        return self.improved / self.n_perturbations

    def to_dict(self) -> dict:
        return {"deficit": self.deficit, "deficit_se": self.deficit_se,
                "n_perturbations": self.n_perturbations, "magnitude": self.magnitude,
                "improved": self.improved, "significant_improvements": self.significant,
                "improvement_fraction": self.improvement_fraction, "min_change": self.min_change}


def verify_optimality(source, w, sigma: float, n_perturbations: int = 100,
                      magnitude: float = 0.05, seed: int = 0) -> OptimalityReport:
    """Compare the deficit at ``w`` with randomly perturbed weights.

    Perturbations are ``w_l (1 + magnitude u_l)`` with ``u`` uniform on
    ``[-1, 1]^M``.  For samples all perturbations are evaluated on the same
    draws; a decrease counts as significant beyond two standard errors of the
    paired difference.
    """
    w = np.asarray(w, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    scale = np.where(w != 0.0, np.abs(w), max(float(np.max(np.abs(w))), 1.0))
    exact = isinstance(source, (MarginDistribution, SampleStats))
    if exact:
        stats = exact_moments(source) if isinstance(source, MarginDistribution) else source
        base = democracy_deficit(stats, w, sigma)
        base_se = None
    else:
        S = np.asarray(source.margins if isinstance(source, MarginSamples) else source, dtype=float)
        chi = council_vote(S).astype(float)
        target = S.sum(axis=1) / sigma
        d0 = (target - chi @ w) ** 2
        base, base_se = batch_means(d0)
        base, base_se = float(base), float(base_se)
    improved = significant = 0
    min_change = math.inf
    for _ in range(n_perturbations):
        wp = w + magnitude * scale * rng.uniform(-1.0, 1.0, size=w.size)
        if exact:
            change = democracy_deficit(stats, wp, sigma) - base
            sig = change < 0
        else:
            diff = (target - chi @ wp) ** 2 - d0
            change, se = batch_means(diff)
            change = float(change)
            sig = change < -2.0 * float(se)
        min_change = min(min_change, change)
        improved += change < 0
        significant += bool(sig)
    return OptimalityReport(base, n_perturbations, magnitude, int(improved), int(significant),
                            float(min_change), base_se)
