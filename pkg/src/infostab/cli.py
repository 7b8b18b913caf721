"""infostab command line: analyze, gen, constants, family-certify.

Exit codes: 0 satisfied or generation done; 1 unsatisfied or inconclusive;
2 usage, parse or domain error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import formats
from .approximant import (bound_constant, certify, eval_approximant_array,
                          noise_residual_bound)
from .domain import (DEFAULT_MARGIN, DEFAULT_RESOLUTION, DomainError, as_alpha,
                     make_interior_grid)
from .equation import (COMB, NOISE_BOUND, NOISE_KINDS, SUPPLIED, UNIFORM, EvaluationError,
                       eval_array, residual_sup, supplied_epsilon)
from .generators import (PerturbationPlan, family_noise_epsilons, make_canonical_family,
                         make_exact_log, make_exact_power, perturb, perturb_family,
                         sample_points, tabulate_family)
from .infomeasure import LogFamily, PowerFamily, certify_family
from .kernels import noise as kernel_noise

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

NOISE_CHOICES = {"uniform": UNIFORM, "comb": COMB}
SUP_ROW = "limit α→0⁻"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated flags of one invocation."""
    subcommand: str
    alpha: Optional[float] = None
    margin: float = DEFAULT_MARGIN
    resolution: int = DEFAULT_RESOLUTION
    input: Optional[str] = None
    output: Optional[str] = None
    plot: Optional[str] = None
    epsilon_mode: str = "estimate"        # estimate | supplied | noise-bound
    epsilon_value: Optional[float] = None
    seed: int = 0
    max_n: Optional[int] = None
    samples: int = 50
    closed_domain: bool = False
    extra: dict = field(default_factory=dict)


def _alpha(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError("alpha must be finite")
    return v


def _check_alpha(v: float) -> float:
    if v > 0:
        raise UsageError("alpha must be <= 0")
    return v


def _output_dir_ok(path: Optional[str]):
    if path is None:
        return
    folder = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(folder):
        raise UsageError(f"output directory does not exist: {folder}")


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        formats.atomic_write(path, text)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _config(args) -> RunConfig:
    cfg = RunConfig(subcommand=args.command)
    for name in ("alpha", "margin", "resolution", "input", "output", "plot", "seed",
                 "max_n", "samples", "closed_domain"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if cfg.alpha is not None:
        _check_alpha(cfg.alpha)
    if getattr(args, "epsilon", None) is not None:
        cfg.epsilon_mode, cfg.epsilon_value = "supplied", args.epsilon
    elif getattr(args, "noise_bound", None) is not None:
        cfg.epsilon_mode, cfg.epsilon_value = "noise-bound", args.noise_bound
    if cfg.epsilon_value is not None and not cfg.epsilon_value >= 0:
        raise UsageError("epsilon and noise bound must be >= 0")
    if cfg.input is not None and not os.path.isfile(cfg.input):
        raise UsageError(f"input file not found: {cfg.input}")
    for p in (cfg.output, cfg.plot):
        _output_dir_ok(p)
    return cfg


# --- subcommands ---------------------------------------------------------

def cmd_analyze(cfg: RunConfig) -> int:
    table = formats.parse_samples_csv(_read(cfg.input), closed_domain=cfg.closed_domain)
    spec = table.spec()
    al = as_alpha(cfg.alpha)
    grid = make_interior_grid(cfg.margin, cfg.resolution)
    if cfg.epsilon_mode == "supplied":
        eps = supplied_epsilon(cfg.epsilon_value)
    elif cfg.epsilon_mode == "noise-bound":
        eps = noise_residual_bound(cfg.epsilon_value, al, grid)
    else:
        eps = residual_sup(spec, al, grid)
    cert = certify(spec, al, grid, eps, closed_domain=cfg.closed_domain,
                   f0_value=table.f0, f1_value=table.f1)
    _write(cfg.output, formats.emit_certificate(cert))
    if cfg.plot:
        xs = grid.coordinates()
        formats.atomic_write(cfg.plot, formats.plot_csv(
            xs, eval_array(spec, al, xs), eval_approximant_array(cert.params, al, xs)))
    return EXIT_OK if cert.satisfied else EXIT_FAIL


def _sidecar(cfg: RunConfig, params: dict):
    if cfg.output is None or cfg.output == "-":
        return
    meta = dict(params, command=f"gen {cfg.extra['kind']}")
    formats.atomic_write(cfg.output + ".meta.json", formats.to_json(meta))


def cmd_gen(cfg: RunConfig) -> int:
    kind = cfg.extra["kind"]
    ex = cfg.extra
    if kind == "family":
        return _gen_family(cfg)
    if kind == "power":
        if cfg.alpha is None:
            raise UsageError("gen power needs --alpha")
        if cfg.alpha == 0:
            raise UsageError("alpha = 0 has no power form; use 'gen log'")
        base = make_exact_power(ex["a"], ex["b"], cfg.alpha)
        alpha = cfg.alpha
        ends = (0.0, ex["a"] - ex["b"])
        params = {"kind": "power", "a": ex["a"], "b": ex["b"], "alpha": alpha}
    else:
        if cfg.alpha not in (None, 0.0):
            raise UsageError("gen log is the alpha = 0 family; drop --alpha")
        base = make_exact_log(ex["lam"], ex["c"])
        alpha = 0.0
        ends = (ex["c"], ex["c"])
        params = {"kind": "log", "lambda": ex["lam"], "c": ex["c"], "alpha": alpha}
    if ex["f0"] is not None or ex["f1"] is not None:
        if not cfg.closed_domain:
            raise UsageError("--f0/--f1 need --closed-domain")
        ends = (ex["f0"] if ex["f0"] is not None else ends[0],
                ex["f1"] if ex["f1"] is not None else ends[1])
    spec = base
    if ex["delta"] > 0:
        spec = perturb(base, PerturbationPlan(ex["delta"], cfg.seed, NOISE_CHOICES[ex["noise"]]))
    xs = sample_points(ex["points"], cfg.margin, ex["spacing"])
    vals = eval_array(spec, alpha, xs)
    f0 = f1 = None
    if cfg.closed_domain:
        # endpoint rows carry the same noise as the interior
        pert = kernel_noise(ex["delta"], cfg.seed % 2**64,
                            NOISE_KINDS[NOISE_CHOICES[ex["noise"]]], np.array([0.0, 1.0]))
        f0, f1 = float(ends[0] + pert[0]), float(ends[1] + pert[1])
    _write(cfg.output, formats.samples_csv(xs, vals, f0, f1))
    params.update(points=ex["points"], margin=cfg.margin, spacing=ex["spacing"],
                  delta=ex["delta"], seed=cfg.seed, noise=ex["noise"],
                  closed_domain=cfg.closed_domain)
    if cfg.closed_domain:
        params.update(f0=f0, f1=f1)
    _sidecar(cfg, params)
    return EXIT_OK


def _family_params(cfg: RunConfig):
    ex = cfg.extra
    if cfg.alpha is None:
        raise UsageError("family needs --alpha")
    if cfg.alpha < 0:
        if ex.get("d") is None or ex.get("lam") is not None:
            raise UsageError("alpha < 0 families take --c and --d")
        return PowerFamily(ex["c"], ex["d"])
    if ex.get("lam") is None or ex.get("d") is not None:
        raise UsageError("alpha = 0 families take --c and --lambda")
    return LogFamily(ex["c"], ex["lam"])


def _synthetic_family(cfg: RunConfig):
    ex = cfg.extra
    if cfg.max_n is None or cfg.max_n < 2:
        raise UsageError("--max-n must be >= 2")
    if ex.get("c") is None:
        raise UsageError("family generation needs --c")
    params = _family_params(cfg)
    top = max(cfg.max_n, 3)
    fam = make_canonical_family(params, cfg.alpha, top)
    deltas = [ex["delta"]] * (top - 1)
    if ex["delta"] > 0:
        fam = perturb_family(fam, deltas, cfg.seed)
    return params, fam, deltas


def _gen_family(cfg: RunConfig) -> int:
    params, fam, deltas = _synthetic_family(cfg)
    top = max(cfg.max_n, 3)
    table = tabulate_family(fam, cfg.alpha, top, cfg.samples, cfg.seed, cfg.extra["margin"])
    _write(cfg.output, formats.emit_family(table))
    meta = dict(formats.params_to_dict(params), alpha=cfg.alpha, max_n=cfg.max_n,
                samples=cfg.samples, seed=cfg.seed, margin=cfg.extra["margin"],
                delta=cfg.extra["delta"], entries=len(table.table))
    _sidecar(cfg, meta)
    return EXIT_OK


def cmd_constants(alphas: Sequence[float], output: Optional[str] = None) -> int:
    for a in alphas:
        if not a < 0:
            raise UsageError(f"constants are tabulated for alpha < 0, got {a!r}")
    rows = ["alpha,K"] + [f"{formats.fmt_float(a)},{formats.fmt_float(bound_constant(a))}"
                          for a in alphas]
    rows.append(f"{SUP_ROW},15")
    _write(output, "\n".join(rows) + "\n")
    return EXIT_OK


def cmd_family_certify(cfg: RunConfig) -> int:
    ex = cfg.extra
    epsilons = None
    if cfg.input is not None:
        fam = formats.parse_family(_read(cfg.input))
        if cfg.alpha is not None and cfg.alpha != fam.alpha:
            raise UsageError(f"--alpha {cfg.alpha} disagrees with the file's alpha {fam.alpha}")
        alpha = fam.alpha
        _check_alpha(alpha)
        N = cfg.max_n if cfg.max_n is not None else fam.max_n
        if cfg.epsilon_mode == "noise-bound":
            raise UsageError("--noise-bound needs a generated family, not --input")
    else:
        params, fam, deltas = _synthetic_family(cfg)
        alpha, N = cfg.alpha, cfg.max_n
        if cfg.epsilon_mode == "noise-bound":
            # the noise level of the generated family is the one given here
            deltas = [cfg.epsilon_value] * (max(N, 3) - 1)
            if ex["delta"] == 0 and cfg.epsilon_value > 0:
                fam = perturb_family(fam, deltas, cfg.seed)
            elif ex["delta"] != cfg.epsilon_value:
                raise UsageError("--delta and --noise-bound disagree")
            epsilons = family_noise_epsilons(deltas, alpha, N, ex["margin"])
    if N < 2:
        raise UsageError("--max-n must be >= 2")
    if cfg.epsilon_mode == "supplied":
        epsilons = [cfg.epsilon_value] * max(N - 1, 2)
    provenance = NOISE_BOUND if cfg.epsilon_mode == "noise-bound" else SUPPLIED
    cert = certify_family(fam, alpha, N, cfg.samples, cfg.seed, margin=ex["margin"],
                          epsilons=epsilons, epsilon_provenance=provenance)
    _write(cfg.output, formats.to_json(formats.family_certificate_to_dict(cert)))
    return EXIT_OK if cert.satisfied else EXIT_FAIL


# --- argument parsing ----------------------------------------------------

def _common(p, grid=True):
    p.add_argument("--alpha", type=_alpha)
    if grid:
        p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
        p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    p.add_argument("--output", help="output path (default stdout)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infostab",
                                 description="Stability certificates for the parametric "
                                             "fundamental equation of information.")
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="certify a tabulated f")
    _common(an)
    an.add_argument("--input", required=True, help="CSV with header x,value")
    an.add_argument("--plot", help="write x,f,approximant,deviation CSV")
    an.add_argument("--closed-domain", action="store_true",
                    help="CSV carries rows x=0 and x=1")
    mode = an.add_mutually_exclusive_group()
    mode.add_argument("--epsilon", type=float, help="use this residual")
    mode.add_argument("--noise-bound", type=float, metavar="DELTA",
                      help="residual from a pointwise noise bound DELTA")

    gen = sub.add_parser("gen", help="generate tables and families")
    gsub = gen.add_subparsers(dest="kind", required=True)
    for kind in ("power", "log"):
        g = gsub.add_parser(kind)
        _common(g, grid=False)
        g.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
        if kind == "power":
            g.add_argument("--a", type=float, required=True)
            g.add_argument("--b", type=float, required=True)
        else:
            g.add_argument("--lambda", dest="lam", type=float, required=True)
            g.add_argument("--c", type=float, required=True)
        g.add_argument("--points", type=int, default=512)
        g.add_argument("--spacing", choices=("graded", "uniform"), default="graded")
        g.add_argument("--delta", type=float, default=0.0, help="noise bound")
        g.add_argument("--noise", choices=sorted(NOISE_CHOICES), default="uniform")
        g.add_argument("--closed-domain", action="store_true")
        g.add_argument("--f0", type=float)
        g.add_argument("--f1", type=float)
    gf = gsub.add_parser("family")
    _common(gf, grid=False)
    _family_flags(gf)

    co = sub.add_parser("constants", help="table of K(alpha)")
    co.add_argument("--alpha", type=_alpha, nargs="+", required=True)
    co.add_argument("--output")

    fc = sub.add_parser("family-certify", help="certify a measure family")
    _common(fc, grid=False)
    fc.add_argument("--input", help="family JSON")
    _family_flags(fc)
    fmode = fc.add_mutually_exclusive_group()
    fmode.add_argument("--epsilon", type=float, help="use this value for every eps_k")
    fmode.add_argument("--noise-bound", type=float, metavar="DELTA",
                       help="per-n noise bound; eps_k from the triangle inequality")
    return ap


def _family_flags(p):
    p.add_argument("--c", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--max-n", type=int)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.0, help="per-n noise bound")
    p.add_argument("--margin", type=float, default=1e-2, help="simplex sample margin")


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "constants":
            return cmd_constants(args.alpha, args.output)
        cfg = _config(args)
        cfg.extra = {k: v for k, v in vars(args).items()
                     if k in ("kind", "a", "b", "lam", "c", "d", "points", "spacing", "delta",
                              "noise", "f0", "f1", "margin")}
        if args.command == "analyze":
            if cfg.alpha is None:
                raise UsageError("analyze needs --alpha")
            return cmd_analyze(cfg)
        if args.command == "gen":
            if cfg.extra.get("delta", 0.0) < 0:
                raise UsageError("--delta must be >= 0")
            return cmd_gen(cfg)
        return cmd_family_certify(cfg)
    except (UsageError, formats.FormatError, DomainError, EvaluationError) as exc:
        print(f"infostab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
