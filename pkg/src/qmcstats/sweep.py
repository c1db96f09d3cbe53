"""Parameter sweeps over the built-in model families.

A sweep evaluates a fixed set of outputs on a grid of model parameters and
persists them as rectangular CSV files plus a JSON manifest (tool version,
seeds, tolerances, per-point model digests).  Output selection:

``spectrum``   transition-operator eigenvalues and the ergodicity verdict,
``probs``      stationary string probabilities per level,
``scgf``       F(s u) and dF/ds along a one-parameter tilt slice,
``rate``       rate-function samples along the same slice via the exact
               duality pairs x(s) = grad F(s u), I = <s u, x(s)> - F(s u),
``clt``        mean and covariance of the central limit theorem,
``mc``         Monte Carlo z-scores and covariance error against ``clt``.

Grid points are independent work items (optionally evaluated by a process
pool); results are always written in grid order, so identical invocations
produce byte-identical files.  Non-primitive grid points do not abort the
sweep: affected rows carry the error name in their status column.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .channel import (
    KrausFamily,
    NORM_TOL,
    PERIPHERAL_TOL,
    spectrum_report,
    stationary_string_probabilities,
)
from .exceptions import (
    NotPrimitive,
    NumericalError,
    ParamOutOfRange,
    ParseError,
    UnknownModel,
)
from .ldp import ScgfEvaluator, clt_moments
from .models import example_model, load_model
from .tilted import RANK_TOL, code_tuple
from .trajectory import monte_carlo_clt

PARAM_RANGES = {"example1": (0.0, 1.0), "example2": (0.0, 2.0 * math.pi)}
ALL_OUTPUTS = ("spectrum", "probs", "scgf", "rate", "clt", "mc")
LDP_OUTPUTS = frozenset({"probs", "scgf", "rate", "clt", "mc"})
ENDPOINT_OFFSET = 1e-3


def _normalize_outputs(outputs) -> tuple:
    # "scgf_deriv" is an alias: the scgf table always carries dF/ds.
    seen = []
    for name in outputs:
        name = "scgf" if name == "scgf_deriv" else name
        if name not in seen:
            seen.append(name)
    return tuple(seen)


def default_tilt_direction(k: int, m: int) -> tuple:
    """Default 1-parameter tilt slice: the parity vector for two outcomes
    ((1,-1) at level 1, (1,-1,-1,1) at level 2), else e_first - e_last."""
    if k == 2:
        u = [1.0] * (k**m)
        for code in range(k**m):
            ones = sum(code_tuple(code, k, m))
            u[code] = -1.0 if ones % 2 else 1.0
        return tuple(u)
    u = [0.0] * (k**m)
    u[0], u[-1] = 1.0, -1.0
    return tuple(u)


def default_param_grid(model: str, outputs) -> tuple:
    """101 uniform points over the model's range; endpoints pulled inward by
    1e-3 when any stationary-regime output is requested (the endpoints are
    not primitive)."""
    lo, hi = PARAM_RANGES[model]
    if LDP_OUTPUTS & set(outputs):
        lo, hi = lo + ENDPOINT_OFFSET, hi - ENDPOINT_OFFSET
    return tuple(float(x) for x in np.linspace(lo, hi, 101))


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one sweep."""

    model: str = "example2"
    model_path: str | None = None
    param_grid: tuple | None = None
    levels: tuple = (1, 2)
    outputs: tuple = ("spectrum", "probs", "scgf", "clt")
    tilt_dirs: dict = field(default_factory=dict)
    s_grid: tuple = tuple(float(x) for x in np.linspace(-2.0, 2.0, 21))
    mc_n: int = 5000
    mc_trials: int = 1000
    base_seed: int = 42
    norm_tol: float = NORM_TOL
    peripheral_tol: float = PERIPHERAL_TOL
    rank_tol: float = RANK_TOL

    def resolved(self) -> "SweepSpec":
        outputs = _normalize_outputs(self.outputs)
        unknown = set(outputs) - set(ALL_OUTPUTS)
        if unknown:
            raise ParseError(f"unknown sweep outputs {sorted(unknown)}")
        if self.model == "file":
            if self.model_path is None:
                raise ParseError("model 'file' needs model_path")
            grid = self.param_grid if self.param_grid is not None else (math.nan,)
        else:
            if self.model not in PARAM_RANGES:
                raise UnknownModel(f"unknown sweep model {self.model!r}")
            grid = (self.param_grid if self.param_grid is not None
                    else default_param_grid(self.model, outputs))
        return replace(self, param_grid=tuple(float(p) for p in grid),
                       levels=tuple(int(m) for m in self.levels),
                       outputs=outputs,
                       s_grid=tuple(float(s) for s in self.s_grid))


def sweep_spec_from_json(payload: dict) -> SweepSpec:
    """Build a SweepSpec from a parsed JSON object (CLI sweep files)."""
    if not isinstance(payload, dict):
        raise ParseError("sweep spec must be a JSON object")
    kwargs = {}
    for key in ("model", "model_path"):
        if key in payload:
            kwargs[key] = payload[key]
    if "param_grid" in payload:
        grid = payload["param_grid"]
        if isinstance(grid, dict):
            model = payload.get("model", "example2")
            lo, hi = PARAM_RANGES.get(model, (0.0, 1.0))
            lo = float(grid.get("lo", lo))
            hi = float(grid.get("hi", hi))
            num = int(grid.get("num", 101))
            kwargs["param_grid"] = tuple(float(x) for x in np.linspace(lo, hi, num))
        else:
            kwargs["param_grid"] = tuple(float(x) for x in grid)
    if "levels" in payload:
        kwargs["levels"] = tuple(int(m) for m in payload["levels"])
    if "outputs" in payload:
        kwargs["outputs"] = tuple(payload["outputs"])
    if "tilt_dirs" in payload:
        kwargs["tilt_dirs"] = {int(k): tuple(float(x) for x in v)
                               for k, v in payload["tilt_dirs"].items()}
    if "s_grid" in payload:
        kwargs["s_grid"] = tuple(float(x) for x in payload["s_grid"])
    mc = payload.get("mc", {})
    if "n" in mc:
        kwargs["mc_n"] = int(mc["n"])
    if "trials" in mc:
        kwargs["mc_trials"] = int(mc["trials"])
    if "seed" in mc:
        kwargs["base_seed"] = int(mc["seed"])
    tol = payload.get("tolerances", {})
    for src, dst in (("norm", "norm_tol"), ("peripheral", "peripheral_tol"),
                     ("rank", "rank_tol")):
        if src in tol:
            kwargs[dst] = float(tol[src])
    return SweepSpec(**kwargs)


def _labels(k: int, m: int):
    return ["".join(str(i) for i in code_tuple(code, k, m)) for code in range(k**m)]


def _model_at(spec: SweepSpec, param: float) -> KrausFamily:
    if spec.model == "file":
        return load_model(spec.model_path, norm_tol=spec.norm_tol)
    return example_model(spec.model, param)


def _sweep_point(spec: SweepSpec, index: int, param: float) -> dict:
    """All requested outputs at one grid point; errors become statuses."""
    fam = _model_at(spec, param)
    out: dict = {"index": index, "param": param, "digest": fam.digest()}
    report = spectrum_report(fam, peripheral_tol=spec.peripheral_tol)
    if "spectrum" in spec.outputs:
        out["spectrum"] = {
            "status": "ok",
            "radius": report.spectral_radius,
            "gap": report.spectral_gap,
            "peripheral_count": report.peripheral_count,
            "irreducible": report.is_irreducible,
            "primitive": report.is_primitive,
            "stationary_rank": report.stationary_rank,
            "eigs": [(z.real, z.imag) for z in report.eigenvalues],
        }
    for m in spec.levels:
        section: dict = {}
        out[f"level{m}"] = section
        try:
            ev = ScgfEvaluator(fam, m, rank_tol=spec.rank_tol,
                               peripheral_tol=spec.peripheral_tol)
        except NotPrimitive as exc:
            for name in LDP_OUTPUTS & set(spec.outputs):
                section[name] = {"status": type(exc).__name__}
            continue
        u = np.asarray(spec.tilt_dirs.get(m) or default_tilt_direction(fam.k, m))
        try:
            if "probs" in spec.outputs:
                probs = stationary_string_probabilities(fam, m, report=ev.report)
                section["probs"] = {"status": "ok", "values": probs.tolist()}
            if "scgf" in spec.outputs or "rate" in spec.outputs:
                rows_f, rows_i = [], []
                for s in spec.s_grid:
                    f, grad = ev.value_and_gradient(s * u)
                    rows_f.append((s, f, float(u @ grad)))
                    rows_i.append((s, float(s * (u @ grad) - f), grad.tolist()))
                if "scgf" in spec.outputs:
                    section["scgf"] = {"status": "ok", "rows": rows_f}
                if "rate" in spec.outputs:
                    section["rate"] = {"status": "ok", "rows": rows_i}
            if "clt" in spec.outputs or "mc" in spec.outputs:
                moments = clt_moments(fam, m, evaluator=ev)
                if "clt" in spec.outputs:
                    section["clt"] = {
                        "status": "ok",
                        "mean": moments.mean.tolist(),
                        "cov": moments.covariance.reshape(-1).tolist(),
                    }
                if "mc" in spec.outputs:
                    psi0 = np.zeros(fam.d, dtype=complex)
                    psi0[0] = 1.0
                    mc = monte_carlo_clt(fam, psi0, m, spec.mc_n, spec.mc_trials,
                                         spec.base_seed)
                    denom = np.linalg.norm(moments.covariance)
                    rel = (np.linalg.norm(mc.sample_covariance - moments.covariance)
                           / denom if denom > 0 else 0.0)
                    section["mc"] = {
                        "status": "ok",
                        "n": spec.mc_n,
                        "trials": spec.mc_trials,
                        "seed": spec.base_seed,
                        "z": mc.z_scores.tolist(),
                        "max_abs_z": float(np.abs(mc.z_scores).max()),
                        "cov_rel_frobenius": float(rel),
                    }
        except (NotPrimitive, NumericalError, ParamOutOfRange) as exc:
            for name in LDP_OUTPUTS & set(spec.outputs):
                section.setdefault(name, {"status": type(exc).__name__})
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def run_sweep(spec: SweepSpec, out_dir, *, workers: int = 1) -> dict:
    """Run the sweep and write CSV files plus manifest.json into out_dir.

    Returns the manifest.  With workers > 1 the grid points are evaluated in
    a process pool; outputs are identical to the serial run.
    """
    spec = spec.resolved()
    os.makedirs(out_dir, exist_ok=True)
    params = spec.param_grid
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, [spec] * len(params),
                                   range(len(params)), params))
    else:
        points = [_sweep_point(spec, i, p) for i, p in enumerate(params)]

    d = _model_at(spec, params[0]).d
    k = _model_at(spec, params[0]).k
    files = []

    def emit(name, header, rows):
        _write_csv(os.path.join(out_dir, name), header, rows)
        files.append(name)

    if "spectrum" in spec.outputs:
        header = (["index", "param", "status", "spectral_radius", "spectral_gap",
                   "peripheral_count", "is_irreducible", "is_primitive",
                   "stationary_rank"]
                  + [f"eig{q}_{part}" for q in range(d * d) for part in ("re", "im")])
        rows = []
        for pt in points:
            sp = pt["spectrum"]
            row = [pt["index"], pt["param"], sp["status"], sp["radius"], sp["gap"],
                   sp["peripheral_count"], sp["irreducible"], sp["primitive"],
                   sp["stationary_rank"]]
            for re_, im_ in sp["eigs"]:
                row += [re_, im_]
            rows.append(row)
        emit("spectrum.csv", header, rows)

    for m in spec.levels:
        labels = _labels(k, m)
        if "probs" in spec.outputs:
            header = ["index", "param", "status"] + [f"p_{s}" for s in labels]
            rows = []
            for pt in points:
                sec = pt[f"level{m}"]["probs"]
                vals = sec.get("values", [None] * len(labels))
                rows.append([pt["index"], pt["param"], sec["status"]] + list(vals))
            emit(f"probs_m{m}.csv", header, rows)
        if "scgf" in spec.outputs:
            header = ["index", "param", "s", "status", "scgf", "scgf_deriv"]
            rows = []
            for pt in points:
                sec = pt[f"level{m}"]["scgf"]
                if sec["status"] != "ok":
                    rows.append([pt["index"], pt["param"], None, sec["status"],
                                 None, None])
                    continue
                for s, f, df in sec["rows"]:
                    rows.append([pt["index"], pt["param"], s, "ok", f, df])
            emit(f"scgf_m{m}.csv", header, rows)
        if "rate" in spec.outputs:
            header = (["index", "param", "s", "status", "rate"]
                      + [f"x_{s}" for s in labels])
            rows = []
            for pt in points:
                sec = pt[f"level{m}"]["rate"]
                if sec["status"] != "ok":
                    rows.append([pt["index"], pt["param"], None, sec["status"], None]
                                + [None] * len(labels))
                    continue
                for s, val, x in sec["rows"]:
                    rows.append([pt["index"], pt["param"], s, "ok", val] + list(x))
            emit(f"rate_m{m}.csv", header, rows)
        if "clt" in spec.outputs:
            header = (["index", "param", "status"]
                      + [f"mean_{s}" for s in labels]
                      + [f"cov_{a}_{b}" for a in labels for b in labels])
            rows = []
            for pt in points:
                sec = pt[f"level{m}"]["clt"]
                if sec["status"] != "ok":
                    rows.append([pt["index"], pt["param"], sec["status"]]
                                + [None] * (len(labels) + len(labels) ** 2))
                    continue
                rows.append([pt["index"], pt["param"], "ok"] + sec["mean"]
                            + sec["cov"])
            emit(f"clt_m{m}.csv", header, rows)
        if "mc" in spec.outputs:
            header = (["index", "param", "status", "n", "trials", "seed",
                       "max_abs_z", "cov_rel_frobenius"]
                      + [f"z_{s}" for s in labels])
            rows = []
            for pt in points:
                sec = pt[f"level{m}"]["mc"]
                if sec["status"] != "ok":
                    rows.append([pt["index"], pt["param"], sec["status"], None,
                                 None, None, None, None] + [None] * len(labels))
                    continue
                rows.append([pt["index"], pt["param"], "ok", sec["n"],
                             sec["trials"], sec["seed"], sec["max_abs_z"],
                             sec["cov_rel_frobenius"]] + sec["z"])
            emit(f"mc_m{m}.csv", header, rows)

    manifest = {
        "tool": "qmcstats",
        "tool_version": __version__,
        "model": spec.model,
        "model_path": spec.model_path,
        "param_grid": list(spec.param_grid),
        "levels": list(spec.levels),
        "outputs": list(spec.outputs),
        "tilt_dirs": {str(m): list(spec.tilt_dirs.get(m)
                                   or default_tilt_direction(k, m))
                      for m in spec.levels},
        "s_grid": list(spec.s_grid),
        "mc": {"n": spec.mc_n, "trials": spec.mc_trials, "seed": spec.base_seed},
        "tolerances": {"norm": spec.norm_tol, "peripheral": spec.peripheral_tol,
                       "rank": spec.rank_tol},
        "model_digests": [pt["digest"] for pt in points],
        "files": files,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
