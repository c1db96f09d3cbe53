"""Built-in model families, random models, and JSON model files.

Two one-parameter qubit families with two outcomes each are built in:

``example1`` (hopping parameter delta in [0, 1])
    V_0 = [[0, delta], [0, eps]],  V_1 = [[eps, 0], [delta, 0]],
    eps = sqrt(1 - delta^2).  At delta = 0 the chain is a projective
    flip-flop with two stationary states; at delta = 1 it is the cyclic
    swap |0> <-> |1> (period two); strictly inside it is primitive.

``example2`` (rotation angle omega in [0, 2 pi])
    V_0 = [[1, 0], [i sin w, cos w]] / sqrt(2),
    V_1 = [[cos w, i sin w], [0, 1]] / sqrt(2).
    The maximally mixed state is stationary and each outcome has stationary
    probability 1/2 for all omega, but consecutive outcomes are correlated:
    pairs (0,0) and (1,1) carry probability (1 + sin^2 w cos w) / 4 each,
    pairs (0,1) and (1,0) carry (1 - sin^2 w cos w) / 4.  Primitive except
    at omega in {0, pi, 2 pi}.

Model files are JSON with full-precision [re, im] entry pairs so that a
save/load round trip reproduces the matrices bit for bit.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .channel import KrausFamily, NORM_TOL, spectrum_report
from .exceptions import (
    BadDimensions,
    NonConvergence,
    ParamOutOfRange,
    ParseError,
    UnknownModel,
)

MODEL_NAMES = ("example1", "example2")


def example_model(name: str, param: float) -> KrausFamily:
    """Construct a built-in family by name and parameter value."""
    if name == "example1":
        if not 0.0 <= param <= 1.0:
            raise ParamOutOfRange(f"example1 needs delta in [0, 1], got {param}")
        delta = float(param)
        eps = math.sqrt(1.0 - delta * delta)
        kraus = np.array([
            [[0.0, delta], [0.0, eps]],
            [[eps, 0.0], [delta, 0.0]],
        ], dtype=complex)
        return KrausFamily(kraus)
    if name == "example2":
        if not 0.0 <= param <= 2.0 * math.pi:
            raise ParamOutOfRange(f"example2 needs omega in [0, 2 pi], got {param}")
        s, c = math.sin(param), math.cos(param)
        kraus = np.array([
            [[1.0, 0.0], [1j * s, c]],
            [[c, 1j * s], [0.0, 1.0]],
        ], dtype=complex) / math.sqrt(2.0)
        return KrausFamily(kraus)
    raise UnknownModel(f"unknown model {name!r}; built-ins are {MODEL_NAMES}")


def random_kraus_family(d: int, k: int, seed=None, *, rng=None,
                        require_primitive: bool = True, min_gap: float = 1e-6,
                        max_tries: int = 200) -> KrausFamily:
    """Random Kraus family from a Haar-random isometry C^d -> C^d kron C^k.

    With require_primitive, redraws until the chain is primitive with a
    spectral gap of at least min_gap (almost every draw is).
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = (rng.standard_normal((d * k, d))
             + 1j * rng.standard_normal((d * k, d))) / math.sqrt(2.0)
        Q, R = np.linalg.qr(A)
        diag = np.diagonal(R)
        Q = Q * (diag.conj() / np.abs(diag))
        # row (s', i) of the isometry is entry V_i[s', :]
        fam = KrausFamily(Q.reshape(d, k, d).transpose(1, 0, 2))
        if not require_primitive:
            return fam
        report = spectrum_report(fam)
        if report.is_primitive and report.spectral_gap >= min_gap:
            return fam
    raise NonConvergence(
        f"no primitive family with gap >= {min_gap} found in {max_tries} draws"
    )


def save_model(fam: KrausFamily, path) -> None:
    """Write a model file: {"d", "k", "kraus": [[[[re, im], ...]]]}."""
    payload = {
        "d": fam.d,
        "k": fam.k,
        "kraus": [
            [[[float(z.real), float(z.imag)] for z in row] for row in mat]
            for mat in fam.kraus
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path, *, norm_tol: float = NORM_TOL) -> KrausFamily:
    """Read and validate a model file (see save_model for the schema).

    Raises ParseError with line/column for malformed JSON, BadDimensions for
    shape problems, NormalizationViolation via the family constructor.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"malformed model file {path}: {exc.msg} "
                f"(line {exc.lineno}, column {exc.colno})",
                line=exc.lineno, column=exc.colno,
            ) from exc
    if not isinstance(payload, dict):
        raise ParseError(f"model file {path} must hold a JSON object")
    try:
        d, k = int(payload["d"]), int(payload["k"])
        raw = payload["kraus"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model file {path} needs integer 'd', 'k' and 'kraus'") from exc
    if d < 1 or k < 1:
        raise BadDimensions(f"d and k must be positive, got d={d}, k={k}")
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError("'kraus' entries must be [re, im] number pairs") from exc
    if arr.shape != (k, d, d, 2):
        raise BadDimensions(
            f"'kraus' must have shape (k={k}, d={d}, d={d}, 2), got {arr.shape}"
        )
    return KrausFamily(arr[..., 0] + 1j * arr[..., 1], norm_tol=norm_tol)
