"""Kraus families of quantum Markov chains and their transition operators.

A quantum Markov chain on C^d with k measurement outcomes per step is given
by Kraus operators V_0, ..., V_{k-1} with sum_i V_i^dag V_i = 1 (0-based
outcome labels throughout).  One step couples the system to a fresh ancilla,
applies a unitary, and measures the ancilla: outcome i occurs with
probability ||V_i psi||^2 and the state jumps to V_i psi (normalized).

Averaging over outcomes gives the transition operator in two pictures,

    Schrodinger:  T_*(rho) = sum_i V_i rho V_i^dag      (trace preserving)
    Heisenberg:   T(A)     = sum_i V_i^dag A V_i        (unital)

which are mutual adjoints under the Hilbert-Schmidt pairing.  Both are
represented as d^2 x d^2 matrices under column-stacking vectorization,
vec(A X B) = (B^T kron A) vec(X).

The spectrum of the Schrodinger matrix decides the ergodic classification:
eigenvalue 1 simple with a full-rank stationary state means irreducible;
additionally a strict spectral gap on the peripheral circle means primitive.
All statistics of the stationary output process (string probabilities,
cumulants, large deviations) require primitivity.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BadDimensions,
    DimensionMismatch,
    EigenSolverFailure,
    NormalizationViolation,
    NotPrimitive,
    NotUnitary,
    SizeCapExceeded,
)

# Default tolerances.  norm_tol bounds the Kraus normalization residual,
# peripheral_tol decides eigenvalue coincidence on the unit circle, and
# stationary ranks use a relative eigenvalue threshold.
NORM_TOL = 1e-10
PERIPHERAL_TOL = 1e-8
STATIONARY_RANK_TOL = 1e-9

# Dense-path cap on the number of outcome tuples held in memory at once.
TUPLE_CAP = 1 << 20


@dataclass(frozen=True)
class KrausValidation:
    """Outcome of checking a would-be Kraus family."""

    d: int
    k: int
    residual: float
    passed: bool
    norm_tol: float


def _as_kraus_array(kraus) -> np.ndarray:
    arr = np.asarray(kraus, dtype=complex)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise BadDimensions(
            f"expected k square matrices of equal size, got shape {arr.shape}"
        )
    if arr.shape[0] < 1:
        raise BadDimensions("need at least one Kraus operator")
    return arr


def validate_kraus(kraus, norm_tol: float = NORM_TOL) -> KrausValidation:
    """Check the normalization sum_i V_i^dag V_i = 1.

    Parameters
    ----------
    kraus : array_like or KrausFamily
        k stacked d x d matrices.
    norm_tol : float
        Allowed operator-norm residual.

    Returns
    -------
    KrausValidation
        Residual report; ``passed`` is True when the residual is within tol.
    """
    if isinstance(kraus, KrausFamily):
        kraus = kraus.kraus
    arr = _as_kraus_array(kraus)
    k, d = arr.shape[0], arr.shape[1]
    gram = np.einsum("iba,ibc->ac", arr.conj(), arr)
    residual = float(np.linalg.norm(gram - np.eye(d), ord=2))
    return KrausValidation(d=d, k=k, residual=residual,
                           passed=residual <= norm_tol, norm_tol=norm_tol)


@dataclass(frozen=True)
class KrausFamily:
    """A validated Kraus family; immutable and safe to share across threads.

    Attributes
    ----------
    kraus : ndarray, shape (k, d, d)
        The operators V_i, read-only.
    norm_tol : float
        Normalization tolerance the family was validated against.
    """

    kraus: np.ndarray
    norm_tol: float = NORM_TOL

    def __post_init__(self):
        arr = _as_kraus_array(self.kraus).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "kraus", arr)
        report = validate_kraus(arr, self.norm_tol)
        if not report.passed:
            raise NormalizationViolation(
                f"sum_i V_i^dag V_i deviates from the identity by "
                f"{report.residual:.3e} (tol {self.norm_tol:.1e})"
            )

    @property
    def d(self) -> int:
        return self.kraus.shape[1]

    @property
    def k(self) -> int:
        return self.kraus.shape[0]

    def digest(self) -> str:
        """Content hash of the family (dims + exact matrix bytes)."""
        h = hashlib.sha256()
        h.update(b"qmcstats-kraus-v1")
        h.update(np.asarray([self.k, self.d], dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.kraus, dtype=np.complex128).tobytes())
        return h.hexdigest()


def kraus_from_unitary(U, chi, d: int, k: int, *, unitary_tol: float = 1e-10,
                       norm_tol: float = NORM_TOL) -> KrausFamily:
    """Build the Kraus family V_i = <i| U |chi> of a unitary dilation.

    ``U`` acts on system kron ancilla (system-major composite index s*k + a),
    ``chi`` is the fresh-ancilla state.  The resulting family satisfies the
    normalization identity automatically, up to roundoff.

    Raises NotUnitary / BadDimensions / NormalizationViolation on bad input.
    """
    U = np.asarray(U, dtype=complex)
    chi = np.asarray(chi, dtype=complex).reshape(-1)
    if U.shape != (d * k, d * k):
        raise BadDimensions(f"U must be {d * k} x {d * k}, got {U.shape}")
    if chi.shape != (k,):
        raise BadDimensions(f"chi must have length {k}, got {chi.shape}")
    if np.linalg.norm(U.conj().T @ U - np.eye(d * k), ord=2) > unitary_tol:
        raise NotUnitary("U^dag U deviates from the identity beyond tolerance")
    if abs(np.linalg.norm(chi) - 1.0) > 1e-12:
        raise NormalizationViolation("chi must be a unit vector")
    # V_i[s', s] = sum_a U[(s', i), (s, a)] chi[a]
    blocks = U.reshape(d, k, d, k)
    kraus = np.einsum("sita,a->ist", blocks, chi)
    return KrausFamily(kraus, norm_tol=norm_tol)


def _check_state_dim(fam: KrausFamily, mat, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=complex)
    if arr.shape != (fam.d, fam.d):
        raise DimensionMismatch(
            f"{name} must be {fam.d} x {fam.d}, got {arr.shape}"
        )
    return arr


def apply_schrodinger(fam: KrausFamily, rho) -> np.ndarray:
    """One step of the state map T_*(rho) = sum_i V_i rho V_i^dag."""
    rho = _check_state_dim(fam, rho, "rho")
    return np.einsum("iab,bc,idc->ad", fam.kraus, rho, fam.kraus.conj())


def apply_heisenberg(fam: KrausFamily, obs) -> np.ndarray:
    """One step of the observable map T(A) = sum_i V_i^dag A V_i."""
    obs = _check_state_dim(fam, obs, "obs")
    return np.einsum("iba,bc,icd->ad", fam.kraus.conj(), obs, fam.kraus)


def superoperator_matrix(fam: KrausFamily, picture: str = "schrodinger") -> np.ndarray:
    """d^2 x d^2 matrix of the transition operator under column stacking.

    The two pictures give mutually adjoint matrices (conjugate transposes).
    """
    if picture == "schrodinger":
        return sum(np.kron(V.conj(), V) for V in fam.kraus)
    if picture == "heisenberg":
        return sum(np.kron(V.T, V.conj().T) for V in fam.kraus)
    raise ValueError(f"picture must be 'schrodinger' or 'heisenberg', got {picture!r}")


@dataclass(frozen=True)
class SpectrumReport:
    """Spectral classification of a quantum Markov chain.

    ``eigenvalues`` are those of the Schrodinger superoperator matrix, sorted
    by decreasing modulus.  ``stationary_state`` is present (with its rank)
    exactly when eigenvalue 1 is simple.
    """

    eigenvalues: np.ndarray
    spectral_radius: float
    spectral_gap: float
    peripheral_count: int
    is_irreducible: bool
    is_primitive: bool
    stationary_state: np.ndarray | None = field(repr=False, default=None)
    stationary_rank: int | None = None
    peripheral_tol: float = PERIPHERAL_TOL


def spectrum_report(fam: KrausFamily, *, peripheral_tol: float = PERIPHERAL_TOL,
                    rank_tol: float = STATIONARY_RANK_TOL) -> SpectrumReport:
    """Eigenvalues of the transition operator and the ergodicity verdict.

    Irreducible: eigenvalue 1 simple and the stationary state has full rank.
    Primitive: additionally no other eigenvalue on the peripheral circle
    (modulus within ``peripheral_tol`` of the spectral radius).
    """
    d = fam.d
    M = superoperator_matrix(fam, "schrodinger")
    try:
        w, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack rarely fails here
        raise EigenSolverFailure(f"eigendecomposition failed: {exc}") from exc
    order = np.lexsort((w.imag, -w.real, -np.abs(w)))
    w, vecs = w[order], vecs[:, order]
    radius = float(np.abs(w[0]))
    gap = radius - float(np.abs(w[1])) if len(w) > 1 else radius
    peripheral = int(np.sum(np.abs(w) >= radius - peripheral_tol))

    unit_idx = np.flatnonzero(np.abs(w - 1.0) <= peripheral_tol)
    stationary = None
    rank = None
    if len(unit_idx) == 1:
        rho = vecs[:, unit_idx[0]].reshape(d, d, order="F")
        rho = (rho + rho.conj().T) / 2
        tr = np.trace(rho).real
        if abs(tr) < 1e-12:
            raise EigenSolverFailure("stationary eigenvector has vanishing trace")
        rho = rho / tr
        stationary = rho
        evals = np.linalg.eigvalsh(rho)
        rank = int(np.sum(evals > rank_tol * evals.max()))

    irreducible = stationary is not None and rank == d
    primitive = irreducible and peripheral == 1
    if stationary is not None:
        stationary = stationary.copy()
        stationary.setflags(write=False)
    eigs = w.copy()
    eigs.setflags(write=False)
    return SpectrumReport(
        eigenvalues=eigs,
        spectral_radius=radius,
        spectral_gap=gap,
        peripheral_count=peripheral,
        is_irreducible=irreducible,
        is_primitive=primitive,
        stationary_state=stationary,
        stationary_rank=rank,
        peripheral_tol=peripheral_tol,
    )


def require_primitive(fam: KrausFamily, *, peripheral_tol: float = PERIPHERAL_TOL,
                      rank_tol: float = STATIONARY_RANK_TOL) -> SpectrumReport:
    """Return the spectrum report, raising NotPrimitive when the unique
    full-rank stationary regime needed by output statistics is absent."""
    report = spectrum_report(fam, peripheral_tol=peripheral_tol, rank_tol=rank_tol)
    if not report.is_primitive:
        raise NotPrimitive(
            f"chain is not primitive (peripheral eigenvalue count "
            f"{report.peripheral_count}, stationary rank {report.stationary_rank})",
            report=report,
        )
    return report


def stationary_string_probabilities(fam: KrausFamily, m: int, *,
                                    size_cap: int = TUPLE_CAP,
                                    report: SpectrumReport | None = None) -> np.ndarray:
    """Stationary law of length-m output strings.

    Returns the k^m probabilities p(i_1, ..., i_m) =
    Tr(V_{i_m} ... V_{i_1} rho_ss V_{i_1}^dag ... V_{i_m}^dag), indexed by
    the big-endian tuple code sum_j i_j * k^(m-j) (i_1 most significant).

    Requires a primitive chain; raises NotPrimitive otherwise.
    """
    if m < 1:
        raise DimensionMismatch(f"m must be >= 1, got {m}")
    k = fam.k
    if k**m > size_cap:
        raise SizeCapExceeded(f"k^m = {k**m} exceeds the size cap {size_cap}")
    if report is None:
        report = require_primitive(fam)
    elif not report.is_primitive:
        raise NotPrimitive("chain is not primitive", report=report)
    R = report.stationary_state[None, :, :]
    for _ in range(m):
        # append one outcome: code -> code * k + i
        R = np.einsum("jab,sbc,jdc->sjad", fam.kraus, R, fam.kraus.conj())
        R = R.reshape(-1, fam.d, fam.d)
    probs = np.einsum("saa->s", R).real
    return probs
