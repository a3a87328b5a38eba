"""Command-line driver: ``council-weights <command> SPEC [options]``.

Exit status: 0 on success, 2 on invalid input, 3 when a regime or
feasibility condition makes the request unanswerable (negative weights only
with ``--strict``).
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .errors import (ConvergenceError, GuardExceeded, RegimeError, SingularSystemError,
                     UnresolvedMinimaError, ValidationError)
from .model import ModelSpec, classify_regime, load_model
from .report import FORMATS, render_report
from . import sim, strong, weak

COMMANDS = ("regime", "weights", "cw", "minimize-f", "simulate", "exact", "deficit", "verify")


class Refusal(Exception):
    """Request answered, but refused with exit status 3."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


def _sigma(spec: ModelSpec, mode: str) -> tuple[float, str]:
    if mode == "auto":
        mode = "sqrtN" if classify_regime(spec.coupling).tag == "weak" else "N"
    N = spec.sizes.N
    return (math.sqrt(N) if mode == "sqrtN" else float(N)), mode


def _parse_weights(text: str | None, M: int):
    if text is None:
        return None
    try:
        w = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ValidationError(f"--weights must be comma-separated numbers: {exc}") from exc
    if w.size != M:
        raise ValidationError(f"--weights has {w.size} entries, model has M={M}")
    return w


def _is_square_root_law(w, alphas) -> bool:
    s = np.sqrt(alphas)
    return bool(np.allclose(w / np.max(w), s / np.max(s), rtol=1e-10, atol=1e-12))


def weights_report(spec: ModelSpec) -> dict:
    J, a = spec.coupling, spec.alphas
    reg = classify_regime(J)
    if reg.tag == "critical":
        raise RegimeError("critical regime: optimal weights are not determined by the limit theory")
    if J.family == "block":
        sol = strong.mixed_cluster_weights(strong.block_clusters(J, a))
        return {"regime": reg.to_dict(), **sol.to_dict()}
    if reg.tag == "weak":
        w = weak.solve_weak_weights(J, a)
        out = {"regime": reg.to_dict(), "tag": "unique", "weights": w,
               "unnormalized": weak.solve_weak_weights(J, a, normalize=False), "notes": []}
        if J.family in weak.CLOSED_FORM_SCENARIOS:
            _, coef = weak.closed_form_weights(J, a)
            out["coefficients"] = coef.to_dict()
        feas = weak.check_feasibility(w)
        out["feasibility"] = feas.to_dict()
        if _is_square_root_law(w, a):
            out["notes"].append("square root law: weights proportional to sqrt(alpha)")
        if not feas.all_nonnegative:
            out["notes"].append(feas.note)
        return out
    minima = strong.minimize_f(J, a)
    sol = strong.strong_weight_solution(J, a, minima)
    out = {"regime": reg.to_dict(), **sol.to_dict()}
    return out


def _cw_report(spec: ModelSpec, beta: float | None) -> dict:
    J = spec.coupling
    if beta is None:
        beta = J.params["beta"] if J.family == "homogeneous" else float(np.max(np.diag(J.entries)))
    verbatim = strong.solve_curie_weiss(beta, spec.alphas)
    weighted = strong.solve_curie_weiss(beta, spec.alphas, weighted=True)
    note = ("unweighted equation: beta sum tanh(x/sqrt(a)) = x; weighted: beta sum sqrt(a) tanh(x/sqrt(a)) = x "
            "(stationary point of the homogeneous free energy; vanishes iff beta <= 1/M)")
    if abs(verbatim.root - weighted.root) > 1e-9:
        note += "; the two roots differ for these alphas"
    return {"beta": beta, "unweighted": verbatim.to_dict(), "weighted": weighted.to_dict(), "notes": [note]}


def _chain_config(args) -> sim.ChainConfig:
    return sim.ChainConfig(sweeps=args.sweeps, burn_in=args.burn_in, thinning=args.thin,
                           seed=args.seed, chains=args.chains)


def _default_weights(spec: ModelSpec, source: str, sigma_mode: str, stats: sim.SampleStats, sigma: float):
    """Weights used when ``--weights`` is absent.

    ``finite`` solves the normal equations of the model at hand; ``asymptotic``
    takes the large-N weak-regime weights, which are on the sigma = sqrt(N) scale.
    """
    if source == "asymptotic":
        if sigma_mode != "sqrtN" or classify_regime(spec.coupling).tag != "weak" \
                or spec.coupling.family == "block":
            raise RegimeError("asymptotic weights are available only for weak models with sigma = sqrt(N)")
        return weak.solve_weak_weights(spec.coupling, spec.alphas, normalize=False), "asymptotic"
    return stats.normal_equation_weights(sigma), "finite_normal_equations"


def dispatch(args) -> dict:
    spec = load_model(args.spec)
    cmd = args.command
    if cmd == "regime":
        return {"command": cmd, **classify_regime(spec.coupling).to_dict()}
    if cmd == "weights":
        out = {"command": cmd, **weights_report(spec)}
        if args.strict and out.get("feasibility", {}).get("all_nonnegative") is False:
            raise Refusal("negative weights: minimal democracy deficit unattainable", out)
        if args.strict and out.get("tag") == "zero":
            raise Refusal("zero weights: minimal democracy deficit unattainable in practice", out)
        return out
    if cmd == "cw":
        return {"command": cmd, **_cw_report(spec, args.beta)}
    if cmd == "minimize-f":
        return {"command": cmd, **strong.minimize_f(spec.coupling, spec.alphas).to_dict()}

    sigma, mode = _sigma(spec, args.sigma_mode)
    w = _parse_weights(getattr(args, "weights", None), spec.M)
    if cmd == "exact":
        stats = sim.exact_moments(spec)
        out = {"command": cmd, "sigma": sigma, "sigma_mode": mode, **stats.to_dict()}
        out["normal_equation_weights"] = stats.normal_equation_weights(sigma)
        if w is not None:
            out["deficit"] = sim.democracy_deficit(stats, w, sigma)
        return out
    if cmd == "simulate":
        samples = sim.gibbs_sample(spec, _chain_config(args))
        if args.samples_out:
            with open(args.samples_out, "w") as fh:
                fh.write(samples.to_csv())
        stats = sim.estimate_moments(samples, sigma, w)
        return {"command": cmd, "sigma": sigma, "sigma_mode": mode, **stats.to_dict()}

    # deficit / verify
    if args.mc:
        source = sim.gibbs_sample(spec, _chain_config(args))
        stats = sim.estimate_moments(source)
    else:
        source = stats = sim.exact_moments(spec)
    origin = "given"
    if w is None:
        w, origin = _default_weights(spec, args.weights_from, mode, stats, sigma)
    if cmd == "deficit":
        d = sim.democracy_deficit(source, w, sigma)
        out = {"command": cmd, "sigma": sigma, "sigma_mode": mode, "weights": w, "weights_origin": origin}
        if isinstance(d, tuple):
            out["deficit"], out["deficit_se"] = d
        else:
            out["deficit"] = d
        return out
    rep = sim.verify_optimality(source, w, sigma, args.perturbations, args.magnitude, args.seed)
    return {"command": cmd, "sigma": sigma, "sigma_mode": mode, "weights": w,
            "weights_origin": origin, **rep.to_dict()}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="council-weights",
                                description="Optimal council weights under multi-group mean-field voters")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="model spec (JSON)")
        sp.add_argument("--format", choices=FORMATS, default="table")
        sp.add_argument("--output", "-o", help="write the report here instead of stdout")

    def sampling(sp, mc_flag=False):
        if mc_flag:
            sp.add_argument("--mc", action="store_true", help="use Gibbs samples instead of enumeration")
            sp.add_argument("--weights-from", choices=("finite", "asymptotic"), default="finite",
                            help="weights to evaluate when --weights is not given")
        sp.add_argument("--sweeps", type=int, default=20000)
        sp.add_argument("--burn-in", type=int, default=1000)
        sp.add_argument("--thin", type=int, default=1)
        sp.add_argument("--chains", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)

    def sigma(sp):
        sp.add_argument("--sigma-mode", choices=("sqrtN", "N", "auto"), default="auto")
        sp.add_argument("--weights", help="comma-separated council weights")

    for name in ("regime", "minimize-f"):
        common(sub.add_parser(name))
    sp = sub.add_parser("weights")
    common(sp)
    sp.add_argument("--strict", action="store_true", help="exit 3 when the optimum is unattainable")
    sp = sub.add_parser("cw")
    common(sp)
    sp.add_argument("--beta", type=float)
    sp = sub.add_parser("exact")
    common(sp)
    sigma(sp)
    sp = sub.add_parser("simulate")
    common(sp)
    sigma(sp)
    sampling(sp)
    sp.add_argument("--samples-out", help="CSV dump of the recorded margins")
    sp = sub.add_parser("deficit")
    common(sp)
    sigma(sp)
    sampling(sp, mc_flag=True)
    sp = sub.add_parser("verify")
    common(sp)
    sigma(sp)
    sampling(sp, mc_flag=True)
    sp.add_argument("--perturbations", type=int, default=100)
    sp.add_argument("--magnitude", type=float, default=0.05)
    return p


def _emit(payload: dict, args):
    data = render_report(payload, args.format)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = dispatch(args)
    except Refusal as exc:
        if exc.payload is not None:
            _emit(exc.payload, args)
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (RegimeError, UnresolvedMinimaError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, GuardExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularSystemError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(payload, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
