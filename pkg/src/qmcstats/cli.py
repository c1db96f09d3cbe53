"""Command-line interface.

Subcommands mirror the library surface: ``check`` (validation + spectrum
report), ``probs``, ``scgf``, ``rate``, ``clt``, ``simulate`` (trajectory
batches), ``sweep`` (parameter sweeps to CSV + manifest).  Models are named
built-ins (``example1``/``example2`` with ``--param``) or paths to Kraus
JSON files.  Tables go to stdout or ``--out`` as CSV or JSON; identical
invocations produce byte-identical output.

Exit codes: 0 success, 2 validation failure (bad flags, files, or model
data), 3 model not primitive where a stationary regime is required, 4
numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import __version__
from .channel import (
    KrausFamily,
    NORM_TOL,
    PERIPHERAL_TOL,
    spectrum_report,
    stationary_string_probabilities,
    validate_kraus,
)
from .exceptions import (
    NotPrimitive,
    NumericalError,
    ParamOutOfRange,
    ParseError,
    ValidationError,
)
from .ldp import ScgfEvaluator, clt_moments, rate_function
from .models import MODEL_NAMES, example_model, load_model
from .sweep import default_tilt_direction, run_sweep, sweep_spec_from_json, _fmt
from .tilted import RANK_TOL, code_tuple
from .trajectory import _simulate_batch, rle_encode, trajectory_seed


def parse_grid(text: str) -> np.ndarray:
    """Parse "lo:hi:num" (inclusive linspace) or a comma list of values."""
    try:
        if ":" in text:
            lo, hi, num = text.split(":")
            num = int(num)
            if num < 1:
                raise ValueError
            return np.linspace(float(lo), float(hi), num)
        return np.asarray([float(v) for v in text.split(",")])
    except ValueError:
        raise ParseError(f"bad grid {text!r}, expected lo:hi:num or v1,v2,...") from None


def _parse_vector(text: str, length: int, what: str) -> np.ndarray:
    try:
        vec = np.asarray([float(v) for v in text.split(",")])
    except ValueError:
        raise ParseError(f"bad {what} {text!r}, expected a comma list") from None
    if vec.shape != (length,):
        raise ParseError(f"{what} needs k^m = {length} entries, got {vec.size}")
    return vec


def _resolve_model(args) -> KrausFamily:
    name = args.model
    if name in MODEL_NAMES:
        if args.param is None:
            raise ParamOutOfRange(f"built-in model {name!r} requires --param")
        return example_model(name, args.param)
    return load_model(name, norm_tol=args.tol_norm)


def _labels(k: int, m: int):
    return ["".join(str(i) for i in code_tuple(code, k, m)) for code in range(k**m)]


def _evaluator(fam: KrausFamily, args) -> ScgfEvaluator:
    return ScgfEvaluator(fam, args.m, rank_tol=args.tol_rank,
                         peripheral_tol=args.tol_peripheral)


def _tilt_direction(fam: KrausFamily, args) -> np.ndarray:
    if args.tilt_dir is None:
        return np.asarray(default_tilt_direction(fam.k, args.m))
    return _parse_vector(args.tilt_dir, fam.k**args.m, "--tilt-dir")


def _cmd_check(args):
    fam = _resolve_model(args)
    val = validate_kraus(fam.kraus, norm_tol=args.tol_norm)
    rep = spectrum_report(fam, peripheral_tol=args.tol_peripheral)
    header = ["d", "k", "digest", "gram_residual", "spectral_radius",
              "spectral_gap", "peripheral_count", "is_irreducible",
              "is_primitive", "stationary_rank"]
    row = [fam.d, fam.k, fam.digest(), float(val.residual),
           float(rep.spectral_radius), float(rep.spectral_gap),
           rep.peripheral_count, rep.is_irreducible, rep.is_primitive,
           rep.stationary_rank]
    for q, z in enumerate(rep.eigenvalues):
        header += [f"eig{q}_re", f"eig{q}_im"]
        row += [float(z.real), float(z.imag)]
    meta = {"command": "check", "model": args.model, "param": args.param}
    return meta, header, [row]


def _cmd_probs(args):
    fam = _resolve_model(args)
    probs = stationary_string_probabilities(fam, args.m)
    rows = [[label, float(p)]
            for label, p in zip(_labels(fam.k, args.m), probs)]
    meta = {"command": "probs", "model": args.model, "param": args.param,
            "m": args.m, "digest": fam.digest()}
    return meta, ["string", "probability"], rows


def _cmd_scgf(args):
    fam = _resolve_model(args)
    ev = _evaluator(fam, args)
    u = _tilt_direction(fam, args)
    rows = []
    for s in parse_grid(args.grid):
        f, grad = ev.value_and_gradient(s * u)
        rows.append([float(s), float(f), float(u @ grad)])
    meta = {"command": "scgf", "model": args.model, "param": args.param,
            "m": args.m, "tilt_dir": u.tolist(), "digest": fam.digest()}
    return meta, ["s", "scgf", "scgf_deriv"], rows


def _cmd_rate(args):
    fam = _resolve_model(args)
    ev = _evaluator(fam, args)
    labels = _labels(fam.k, args.m)
    meta = {"command": "rate", "model": args.model, "param": args.param,
            "m": args.m, "digest": fam.digest()}
    if args.x:
        # explicit simplex points: full Legendre-Fenchel ascent
        header = [f"x_{s}" for s in labels] + ["rate", "converged",
                                               "iterations", "grad_norm"]
        rows = []
        for text in args.x:
            x = _parse_vector(text, fam.k**args.m, "--x")
            pt = rate_function(fam, args.m, x, evaluator=ev)
            rows.append([float(v) for v in x]
                        + [float(pt.value), pt.converged, pt.iterations,
                           float(pt.grad_norm)])
        return meta, header, rows
    # no points given: sample the curve through the exact duality pairs
    # x(s) = grad F(s u), I(x) = <s u, x> - F(s u) along the tilt slice
    u = _tilt_direction(fam, args)
    meta["tilt_dir"] = u.tolist()
    header = ["s", "rate"] + [f"x_{s}" for s in labels]
    rows = []
    for s in parse_grid(args.grid):
        f, grad = ev.value_and_gradient(s * u)
        rows.append([float(s), float(s * (u @ grad) - f)]
                    + [float(v) for v in grad])
    return meta, header, rows


def _cmd_clt(args):
    fam = _resolve_model(args)
    ev = _evaluator(fam, args)
    moments = clt_moments(fam, args.m, evaluator=ev)
    labels = _labels(fam.k, args.m)
    header = ["string", "mean"] + [f"cov_{s}" for s in labels]
    rows = [[label, float(moments.mean[a])]
            + [float(v) for v in moments.covariance[a]]
            for a, label in enumerate(labels)]
    meta = {"command": "clt", "model": args.model, "param": args.param,
            "m": args.m, "hessian_step": float(moments.step),
            "digest": fam.digest()}
    return meta, header, rows


def _cmd_simulate(args):
    fam = _resolve_model(args)
    if args.n < 1:
        raise ParamOutOfRange(f"--n must be >= 1, got {args.n}")
    if args.trials < 1:
        raise ParamOutOfRange(f"--trials must be >= 1, got {args.trials}")
    psi0 = np.zeros(fam.d, dtype=complex)
    psi0[0] = 1.0
    seeds = np.asarray([trajectory_seed(args.seed, i) for i in range(args.trials)],
                       dtype=np.uint64)
    outcomes = _simulate_batch(fam, psi0, args.n, seeds)
    rows = [[int(seed), args.n, rle_encode(rec)]
            for seed, rec in zip(seeds, outcomes)]
    meta = {"command": "simulate", "model": args.model, "param": args.param,
            "n": args.n, "trials": args.trials, "base_seed": args.seed,
            "psi0": "e0", "digest": fam.digest()}
    return meta, ["seed", "n", "outcomes_rle"], rows


def _cmd_sweep(args):
    with open(args.spec, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad sweep spec: {exc.msg}", line=exc.lineno,
                             column=exc.colno) from None
    spec = sweep_spec_from_json(payload)
    if args.seed is not None:
        spec = dataclasses.replace(spec, base_seed=args.seed)
    manifest = run_sweep(spec, args.out_dir, workers=args.workers)
    rows = [[name] for name in manifest["files"] + ["manifest.json"]]
    meta = {"command": "sweep", "out_dir": args.out_dir,
            "points": len(manifest["param_grid"])}
    return meta, ["file"], rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmcstats",
        description="Output statistics of quantum Markov chains: stationary "
                    "string probabilities, SCGF / rate functions, CLT moments, "
                    "and Monte Carlo trajectory checks.",
    )
    parser.add_argument("--version", action="version",
                        version=f"qmcstats {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, model=True):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(handler=func)
        if model:
            p.add_argument("model",
                           help="example1 | example2 | path to a Kraus JSON file")
            p.add_argument("--param", type=float, default=None,
                           help="parameter for the built-in models "
                                "(delta for example1, omega for example2)")
        p.add_argument("--out", default=None,
                       help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--tol-norm", type=float, default=NORM_TOL,
                       help="Kraus normalization tolerance")
        p.add_argument("--tol-peripheral", type=float, default=PERIPHERAL_TOL,
                       help="peripheral eigenvalue tolerance")
        p.add_argument("--tol-rank", type=float, default=RANK_TOL,
                       help="support rank threshold")
        return p

    add("check", _cmd_check, "validate a model and report its spectrum")

    p = add("probs", _cmd_probs, "stationary probabilities of length-m strings")
    p.add_argument("--m", type=int, default=1, help="string length (default 1)")

    for name, func, help_ in (
        ("scgf", _cmd_scgf, "scaled cumulant generating function along a tilt slice"),
        ("rate", _cmd_rate, "large-deviation rate function"),
    ):
        p = add(name, func, help_)
        p.add_argument("--m", type=int, default=1)
        p.add_argument("--grid", default="-2:2:21",
                       help="s values, lo:hi:num or comma list (default -2:2:21)")
        p.add_argument("--tilt-dir", default=None,
                       help="tilt direction u as a comma list of k^m entries "
                            "(default: parity direction)")
        if name == "rate":
            p.add_argument("--x", action="append", default=None,
                           help="simplex point as a comma list of k^m entries; "
                                "repeatable; overrides --grid/--tilt-dir")

    p = add("clt", _cmd_clt, "central-limit mean and covariance")
    p.add_argument("--m", type=int, default=1)

    p = add("simulate", _cmd_simulate, "sample measurement trajectories")
    p.add_argument("--n", type=int, default=5000, help="record length (default 5000)")
    p.add_argument("--trials", type=int, default=1,
                   help="number of trajectories (default 1)")
    p.add_argument("--seed", type=int, default=42,
                   help="base seed; trajectory i uses base+i (default 42)")

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec")
    p.set_defaults(handler=_cmd_sweep)
    p.add_argument("spec", help="path to a sweep spec JSON file")
    p.add_argument("--out", dest="out_dir", required=True,
                   help="output directory for CSV files and manifest.json")
    p.add_argument("--workers", type=int, default=1,
                   help="process pool size (default 1, serial)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the spec's Monte Carlo base seed")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _render(fmt: str, meta, header, rows) -> str:
    if fmt == "json":
        payload = {"meta": meta, "columns": list(header),
                   "rows": [list(r) for r in rows]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for usage errors
        return exc.code if isinstance(exc.code, int) else 2
    try:
        meta, header, rows = args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotPrimitive as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = _render(args.format, meta, header, rows)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
