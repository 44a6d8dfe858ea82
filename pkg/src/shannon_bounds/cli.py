"""Command-line front end: ``shannon-bounds {bounds,oracle,validate,describe}``.

Exit codes: 0 success, 1 validation failure, 2 bad input, 3 infeasible
parameters, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import bounds_network as bn
from . import bounds_point as bp
from . import bounds_remote as br
from . import dist_core as dc
from . import oracle_ba as ob
from . import sourcefile, validation
from .errors import InvalidCertificate, NumericalFailure, PreconditionError, SourceError

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4

PROBLEMS = ("classic", "vector", "sum", "conditional", "wyner-ziv", "remote", "an-remote",
            "awgn-remote", "gray-wyner", "ceo", "mmse")
SUITES = ("tightness", "sandwich", "identities", "constructions", "all")


class InputError(Exception):
    """Malformed command-line configuration."""


@dataclass
class SweepSpec:
    """One ``bounds``/``oracle`` invocation after parsing."""

    problem: str
    source: object
    source2: object = None
    deltas: List = field(default_factory=list)
    rps: Optional[List[float]] = None
    agents: Optional[List[int]] = None
    noise_var: Optional[float] = None
    oracle: bool = False
    grid_n: int = 1024
    k_sigma: Optional[float] = None
    jobs: int = 1


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def _floats(text: str, what: str) -> List[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise InputError(f"{what}: empty list")
    return vals


def _increasing(vals, what, positive=True):
    arr = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(arr)) or (positive and np.any(arr <= 0)):
        raise InputError(f"{what}: values must be finite and positive")
    if np.any(np.diff(arr) <= 0):
        raise InputError(f"{what}: values must be strictly increasing")


def parse_sweep(text: str) -> List[float]:
    """``lo:hi:n`` to ``n`` evenly spaced values from ``lo`` to ``hi``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"--sweep: expected lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"--sweep: expected lo:hi:n, got {text!r}") from None
    if n < 1 or (n > 1 and not hi > lo):
        raise InputError("--sweep: need n >= 1 and hi > lo")
    vals = [lo] if n == 1 else list(np.linspace(lo, hi, n))
    _increasing(vals, "--sweep")
    return vals


def _load(path):
    return None if path is None else sourcefile.load_source(path)


def _need(cond, msg):
    if not cond:
        raise InputError(msg)


def build_spec(args) -> SweepSpec:
    problem = args.problem.replace("_", "-")
    if problem not in PROBLEMS:
        raise InputError(f"unknown problem {args.problem!r}; choose from {', '.join(PROBLEMS)}")
    src = _load(args.source)
    src2 = _load(args.source2)
    _need(src is not None, "--source is required")
    spec = SweepSpec(problem, src, src2, oracle=args.oracle or args.command == "oracle",
                     grid_n=args.grid_n, k_sigma=args.k_sigma, jobs=args.jobs,
                     noise_var=args.noise_var)
    if args.grid_n < 16:
        raise InputError("--grid-n must be at least 16")
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")

    if problem == "mmse":
        _need(args.delta is None and args.sweep is None, "mmse takes no distortion grid")
        spec.deltas = [None]
    else:
        _need((args.delta is None) != (args.sweep is None), "give exactly one of --delta or --sweep")
        if problem == "vector" and args.delta is not None:
            vals = _floats(args.delta, "--delta")
            _need(len(vals) in (1, 2), "vector: --delta takes d or d1,d2")
            if any(v <= 0 for v in vals):
                raise InputError("--delta: values must be positive")
            spec.deltas = [(vals[0], vals[-1])]
        elif args.delta is not None:
            spec.deltas = _floats(args.delta, "--delta")
            _increasing(spec.deltas, "--delta")
        else:
            spec.deltas = parse_sweep(args.sweep)
        if problem == "vector" and args.sweep is not None:
            spec.deltas = [(d, d) for d in spec.deltas]

    scalar = isinstance(src, dc.ScalarSource)
    if problem in ("classic", "remote", "an-remote", "awgn-remote", "ceo", "mmse"):
        _need(scalar, f"{problem}: --source must be a scalar source")
    else:
        _need(not scalar, f"{problem}: --source must be a bivariate source")
    if problem in ("remote", "an-remote", "mmse"):
        _need((src2 is None) != (args.noise_var is None),
              f"{problem}: give the noise as --source2 or --noise-var")
        if src2 is not None:
            _need(isinstance(src2, dc.ScalarSource), "--source2 must be a scalar source")
    elif src2 is not None:
        raise InputError(f"{problem}: --source2 is not used")
    if problem in ("awgn-remote", "ceo"):
        _need(args.noise_var is not None, f"{problem}: --noise-var is required")
    if args.noise_var is not None:
        _need(math.isfinite(args.noise_var) and args.noise_var > 0, "--noise-var must be positive")

    if problem == "gray-wyner":
        spec.rps = _floats(args.rp, "--rp") if args.rp is not None else [0.0]
        if any(r < 0 for r in spec.rps):
            raise InputError("--rp: values must be >= 0")
        _increasing(spec.rps, "--rp", positive=False)
    elif args.rp is not None:
        raise InputError(f"{problem}: --rp is not used")
    if problem == "ceo":
        _need(args.agents is not None, "ceo: --agents is required")
        vals = _floats(args.agents, "--agents")
        if any(v != int(v) or v < 1 for v in vals):
            raise InputError("--agents: values must be integers >= 1")
        spec.agents = [int(v) for v in vals]
        _increasing(spec.agents, "--agents")
    elif args.agents is not None:
        raise InputError(f"{problem}: --agents is not used")

    if spec.oracle and problem not in ORACLES:
        raise InputError(f"no oracle for problem {problem!r}; available: {', '.join(ORACLES)}")
    return spec


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _noise(spec: SweepSpec) -> dc.ScalarSource:
    return spec.source2 if spec.source2 is not None else dc.Gaussian(0.0, spec.noise_var)


class _Context:
    """Per-invocation cache of expensive shared objects."""

    def __init__(self, spec: SweepSpec):
        self.spec = spec
        self._model = None
        self._reduction = None
        self._discrete = None

    @property
    def model(self):
        if self._model is None:
            self._model = dc.AdditiveNoiseModel(self.spec.source, _noise(self.spec))
        return self._model

    @property
    def reduction(self):
        if self._reduction is None:
            self._reduction = br.posterior_mean_reduction(self.model)
        return self._reduction

    @property
    def discrete(self):
        if self._discrete is None:
            s = self.spec.source
            k = self.spec.k_sigma if self.spec.k_sigma is not None else validation.k_sigma_for(s)
            self._discrete = ob.discretize(s, n=self.spec.grid_n, k_sigma=k)
        return self._discrete


def _bounds(ctx: _Context, delta, rp, m) -> bp.BoundPair:
    spec = ctx.spec
    p, s = spec.problem, spec.source
    if p == "classic":
        return bp.classic_rd_bounds(s, delta)
    if p == "vector":
        return bp.vector_rd_bounds(s, *delta)
    if p == "sum":
        return bp.sum_distortion_rd_bounds(s, delta)
    if p == "conditional":
        return bp.conditional_rd_bounds(s, delta)
    if p == "wyner-ziv":
        return bp.wyner_ziv_rd_bounds(s, delta)
    if p == "remote":
        return br.remote_rd_bounds(ctx.reduction, delta)
    if p == "an-remote":
        return br.additive_noise_remote_bounds(ctx.model, delta, ctx.reduction)
    if p == "awgn-remote":
        return br.awgn_remote_bounds(s, spec.noise_var, delta)
    if p == "gray-wyner":
        return bn.gray_wyner_bounds(bn.GrayWynerQuery(s, delta, rp))
    if p == "ceo":
        return bn.ceo_sum_rate_bounds(bn.CEOQuery(s, spec.noise_var, m, delta))
    if p == "mmse":
        return bp.mmse_estimation_bounds(ctx.model)
    raise InputError(f"unknown problem {p!r}")


def _oracle_classic(ctx, delta, rp, m):
    zero = ob.blahut_arimoto_rd(ctx.discrete, 0.0).distortion_achieved
    return 0.0 if delta >= zero else ob.rd_at_distortion(ctx.discrete, delta).rate


def _oracle_vector(ctx, delta, rp, m):
    # Lower bound with the determinant maximized by brute force.
    det, _ = ob.d_matrix_search(ctx.spec.source.covariance, *delta)
    return bp.half_log_plus(dc.joint_entropy_power(ctx.spec.source) ** 2 / det)


def _oracle_conditional(ctx, delta, rp, m):
    return ob.conditional_rd_oracle(ctx.spec.source, delta)


def _oracle_remote(ctx, delta, rp, m):
    return ob.remote_rd_oracle(ctx.model, delta, n=ctx.spec.grid_n)


def _oracle_awgn(ctx, delta, rp, m):
    model = dc.AdditiveNoiseModel(ctx.spec.source, dc.Gaussian(0.0, ctx.spec.noise_var))
    return ob.remote_rd_oracle(model, delta, n=ctx.spec.grid_n)


ORACLES: Dict[str, Callable] = {
    "classic": _oracle_classic,
    "vector": _oracle_vector,
    "conditional": _oracle_conditional,
    "remote": _oracle_remote,
    "an-remote": _oracle_remote,
    "awgn-remote": _oracle_awgn,
}


def _points(spec: SweepSpec):
    rps = spec.rps if spec.rps is not None else [None]
    ms = spec.agents if spec.agents is not None else [None]
    return [(d, r, m) for d in spec.deltas for r in rps for m in ms]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, tuple):
        return ";".join(_fmt(v) for v in x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "nan" if math.isnan(x) else f"{float(x):.12g}"


def evaluate(spec: SweepSpec, bounds: bool = True) -> List[dict]:
    """One row per grid point, in grid order."""
    ctx = _Context(spec)
    oracle = ORACLES.get(spec.problem) if spec.oracle else None

    def one(point):
        delta, rp, m = point
        row = {"delta": delta, "rp": rp, "m": m}
        if bounds:
            pair = _bounds(ctx, delta, rp, m)
            row.update(lower=pair.lower, upper=pair.upper, lower_valid=pair.lower_valid,
                       upper_valid=pair.upper_valid, gap=pair.gap, regime=pair.regime)
        if oracle is not None:
            row["oracle"] = oracle(ctx, delta, rp, m)
        return row

    # build shared caches before fanning out
    if spec.problem in ("remote", "an-remote", "mmse"):
        ctx.model
        if spec.problem != "mmse":
            ctx.reduction
    if oracle is not None and spec.problem == "classic":
        ctx.discrete
    points = _points(spec)
    if spec.jobs == 1:
        return [one(p) for p in points]
    with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
        return list(pool.map(one, points))


def write_csv(spec: SweepSpec, rows: List[dict], out, bits: bool = False, bounds: bool = True):
    unit = "bits" if bits else "nats"
    scale = 1.0 / math.log(2.0) if bits else 1.0
    cols = ["delta"]
    if spec.rps is not None:
        cols.append("rp")
    if spec.agents is not None:
        cols.append("m")
    if bounds:
        cols += [f"lower_{unit}", f"upper_{unit}", "lower_valid", "upper_valid", f"gap_{unit}", "regime"]
    if spec.oracle:
        cols.append(f"oracle_{unit}")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        vals = [_fmt(r["delta"])]
        if spec.rps is not None:
            vals.append(_fmt(r["rp"]))
        if spec.agents is not None:
            vals.append(_fmt(r["m"]))
        if bounds:
            vals += [_fmt(r["lower"] * scale), _fmt(r["upper"] * scale), _fmt(r["lower_valid"]),
                     _fmt(r["upper_valid"]), _fmt(r["gap"] * scale), r["regime"] or ""]
        if spec.oracle:
            vals.append(_fmt(r["oracle"] * scale))
        w.writerow(vals)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _add_sweep_args(p):
    p.add_argument("problem", help="one of: " + ", ".join(PROBLEMS))
    p.add_argument("--source", help="source description file (JSON)")
    p.add_argument("--source2", help="noise source file for remote problems")
    p.add_argument("--delta", help="distortion(s), comma separated; d1,d2 for vector")
    p.add_argument("--sweep", help="evenly spaced distortions lo:hi:n")
    p.add_argument("--rp", help="private rate(s) in nats for gray-wyner, comma separated")
    p.add_argument("--agents", help="number(s) of agents for ceo, comma separated")
    p.add_argument("--noise-var", type=float, help="Gaussian observation noise variance")
    p.add_argument("--oracle", action="store_true", help="also run the matching numerical oracle")
    p.add_argument("--grid-n", type=int, default=1024, help="oracle grid size (default 1024)")
    p.add_argument("--k-sigma", type=float, help="oracle grid half-width in standard deviations")
    p.add_argument("--jobs", type=int, default=1, help="grid points evaluated concurrently")
    p.add_argument("--bits", action="store_true", help="report rates in bits")
    p.add_argument("--out", help="output file (default stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shannon-bounds",
        description="Shannon lower/upper bounds on quadratic rate-distortion functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_sweep_args(sub.add_parser("bounds", help="evaluate a bound pair over a grid"))
    _add_sweep_args(sub.add_parser("oracle", help="evaluate only the numerical oracle over a grid"))
    v = sub.add_parser("validate", help="run an invariant suite")
    v.add_argument("suite", choices=SUITES)
    v.add_argument("--jobs", type=int, default=1)
    d = sub.add_parser("describe", help="print a source file with its functionals")
    d.add_argument("source_file")
    d.add_argument("--out", help="output file (default stdout)")
    return parser


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def _run(args) -> int:
    if args.command == "validate":
        code = EXIT_OK
        for res in validation.run_suite(args.suite, max(1, args.jobs)):
            print(res.line(), flush=True)
            if not res.passed:
                code = EXIT_VALIDATION
        return code
    if args.command == "describe":
        src = sourcefile.load_source(args.source_file)
        _emit(json.dumps(sourcefile.describe(src), indent=2) + "\n", args.out)
        return EXIT_OK
    spec = build_spec(args)
    with_bounds = args.command == "bounds"
    rows = evaluate(spec, bounds=with_bounds)
    buf = io.StringIO()
    write_csv(spec, rows, buf, bits=args.bits, bounds=with_bounds)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    label = getattr(args, "problem", None) or getattr(args, "suite", None) or args.command
    try:
        return _run(args)
    except (InputError, SourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, InvalidCertificate) as exc:
        print(f"error: {label}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"error: {label}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
