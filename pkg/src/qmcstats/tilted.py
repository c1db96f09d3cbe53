"""Tilted extensions of the transition operator on a block-diagonal algebra.

The moment generating function of the level-m empirical measure of the
output process is generated by an extension of the Heisenberg map to the
algebra of k^(m-1) diagonal blocks of d x d matrices (one block per length
m-1 outcome string).  For a tilt vector t indexed by length-m strings,

    [T_{t,m}(Y)]_{i_1..i_{m-1}} =
        sum_{i_m} e^{t_{i_1..i_m}} V_{i_1}^dag [Y]_{i_2..i_m} V_{i_1},

which for m = 1 is the familiar sum_i e^{t_i} V_i^dag Y V_i on a single
block.  Iterating n-m+1 times from the boundary operator

    [M^(m)]_{i_1..i_{m-1}} = V_{i_1}^dag .. V_{i_{m-1}}^dag
                             V_{i_{m-1}} .. V_{i_1}

and pairing with the initial state reproduces the finite-n moment
generating function exactly (see ldp.finite_mgf_lemma).

At t = 0 the boundary operator is a fixed point, but the extension is never
irreducible on the full block algebra: the relevant Perron eigenvalue lives
on the restriction to the supports of the boundary blocks.  Compressing each
block to an orthonormal basis of its support gives an N x N matrix
(N = sum of squared support ranks) whose spectral radius r(t) yields the scaled
cumulant generating function F(t) = log r(t) for primitive chains.

Tuple indexing is big-endian throughout: the code of (i_1, ..., i_m) is
sum_j i_j * k^(m-j), i_1 most significant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .channel import KrausFamily
from .exceptions import (
    DegeneratePerronEigenvalue,
    DimensionMismatch,
    EigenSolverFailure,
    NonConvergence,
    SizeCapExceeded,
)

# Support-rank threshold (relative to the largest block eigenvalue) and the
# dense/iterative crossover for Perron solves.
RANK_TOL = 1e-10
DENSE_CAP = 4096
BLOCK_DIM_CAP = 65536
POWER_TOL = 1e-12
POWER_MAXITER = 100_000


def tuple_code(indices, k: int) -> int:
    """Big-endian code of an outcome tuple (first entry most significant)."""
    code = 0
    for i in indices:
        if not 0 <= i < k:
            raise DimensionMismatch(f"outcome {i} out of range for k={k}")
        code = code * k + i
    return code


def code_tuple(code: int, k: int, m: int) -> tuple:
    """Inverse of tuple_code."""
    out = []
    for j in range(m):
        out.append((code // k ** (m - 1 - j)) % k)
    return tuple(out)


@dataclass(frozen=True)
class TiltVector:
    """Real tilt parameters indexed by length-m outcome strings."""

    m: int
    k: int
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float).reshape(-1).copy()
        if self.m < 1 or self.k < 1:
            raise DimensionMismatch("m and k must be positive")
        if arr.shape != (self.k**self.m,):
            raise DimensionMismatch(
                f"tilt vector needs k^m = {self.k**self.m} entries, got {arr.shape[0]}"
            )
        if not np.all(np.isfinite(arr)):
            raise DimensionMismatch("tilt entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def zeros(cls, k: int, m: int) -> "TiltVector":
        return cls(m=m, k=k, entries=np.zeros(k**m))


def as_tilt(t, k: int, m: int) -> np.ndarray:
    """Coerce an array or TiltVector to a validated entries array."""
    if isinstance(t, TiltVector):
        if t.k != k or t.m != m:
            raise DimensionMismatch(
                f"tilt is for (k={t.k}, m={t.m}), expected (k={k}, m={m})"
            )
        return t.entries
    return TiltVector(m=m, k=k, entries=t).entries


@dataclass(frozen=True)
class BlockOperator:
    """Element of the block algebra: k^(m-1) stacked d x d blocks."""

    m: int
    k: int
    blocks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=complex)
        nb = self.k ** (self.m - 1)
        if arr.ndim != 3 or arr.shape[0] != nb or arr.shape[1] != arr.shape[2]:
            raise DimensionMismatch(
                f"expected {nb} square blocks, got shape {arr.shape}"
            )
        object.__setattr__(self, "blocks", arr)

    @property
    def d(self) -> int:
        return self.blocks.shape[1]


def _check_block_cap(k: int, m: int, d: int, size_cap: int) -> None:
    if k ** (m - 1) * d * d > size_cap:
        raise SizeCapExceeded(
            f"block algebra dimension k^(m-1) d^2 = {k ** (m - 1) * d * d} "
            f"exceeds the cap {size_cap}"
        )


def boundary_operator(fam: KrausFamily, m: int, *,
                      size_cap: int = BLOCK_DIM_CAP) -> BlockOperator:
    """The boundary element M^(m): per block, W^dag W with W the ordered
    product V_{i_{m-1}} ... V_{i_1}.  For m = 1 this is the identity."""
    if m < 1:
        raise DimensionMismatch(f"m must be >= 1, got {m}")
    k, d = fam.k, fam.d
    _check_block_cap(k, m, d, size_cap)
    if m == 1:
        return BlockOperator(m=1, k=k, blocks=np.eye(d, dtype=complex)[None])
    # grow products one leading outcome at a time: W(code*k + i) = V_i W(code)
    prods = np.eye(d, dtype=complex)[None]
    for _ in range(m - 1):
        prods = np.einsum("iab,sbc->siac", fam.kraus, prods).reshape(-1, d, d)
    blocks = np.einsum("sba,sbc->sac", prods.conj(), prods)
    return BlockOperator(m=m, k=k, blocks=blocks)


@dataclass(frozen=True)
class SupportProjection:
    """Orthogonal projections onto the supports of the boundary blocks.

    ``bases[a]`` holds an orthonormal basis (d x rank_a) of the support of
    block a, so projections[a] = bases[a] @ bases[a]^dag.  Rank-0 blocks are
    dropped from the restriction.
    """

    m: int
    k: int
    ranks: tuple
    projections: np.ndarray = field(repr=False)
    bases: tuple = field(repr=False)
    rank_tol: float = RANK_TOL

    @property
    def dim(self) -> int:
        """Dimension N = sum_a rank_a^2 of the restricted algebra."""
        return int(sum(r * r for r in self.ranks))


def support_projections(boundary: BlockOperator, *,
                        rank_tol: float = RANK_TOL) -> SupportProjection:
    """Support projections of the (PSD) boundary blocks.

    Ranks are decided relative to the largest eigenvalue over all blocks, so
    exactly-zero blocks get rank 0.
    """
    nb, d = boundary.blocks.shape[0], boundary.d
    evals = np.empty((nb, d))
    vecs = np.empty((nb, d, d), dtype=complex)
    for a in range(nb):
        B = boundary.blocks[a]
        try:
            w, U = np.linalg.eigh((B + B.conj().T) / 2)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise EigenSolverFailure(f"block eigh failed: {exc}") from exc
        evals[a], vecs[a] = w, U
    thr = rank_tol * max(float(evals.max()), 0.0)
    bases = []
    ranks = []
    projections = np.zeros((nb, d, d), dtype=complex)
    for a in range(nb):
        keep = evals[a] > thr
        U = vecs[a][:, keep]
        bases.append(U)
        ranks.append(int(keep.sum()))
        projections[a] = U @ U.conj().T
    return SupportProjection(
        m=boundary.m, k=boundary.k, ranks=tuple(ranks),
        projections=projections, bases=tuple(bases), rank_tol=rank_tol,
    )


def apply_tilted(fam: KrausFamily, t, Y: BlockOperator) -> BlockOperator:
    """Apply the tilted extension T_{t,m} once to a block operator."""
    k, d, m = fam.k, fam.d, Y.m
    if Y.k != k or Y.d != d:
        raise DimensionMismatch("block operator does not match the family")
    tt = as_tilt(t, k, m)
    et = np.exp(tt)
    out = np.zeros_like(Y.blocks)
    if m == 1:
        for j in range(k):
            out[0] += et[j] * fam.kraus[j].conj().T @ Y.blocks[0] @ fam.kraus[j]
        return BlockOperator(m=1, k=k, blocks=out)
    lead = k ** (m - 2)
    for a in range(k ** (m - 1)):
        i1, tail = divmod(a, lead)
        Vi = fam.kraus[i1]
        acc = np.zeros((d, d), dtype=complex)
        for j in range(k):
            acc += et[a * k + j] * Y.blocks[tail * k + j]
        out[a] = Vi.conj().T @ acc @ Vi
    return BlockOperator(m=m, k=k, blocks=out)


def _restriction_terms(fam: KrausFamily, Q: SupportProjection):
    """Static data of the compressed tilted matrix.

    Yields one term per tilt index J = code(a)*k + j with nonzero blocks:
    (J, row slice of block a, col slice of block c, kron factor K) such that
    M(t) = sum_J e^{t_J} K_J placed at (rows_a, cols_c).
    """
    k, m = Q.k, Q.m
    offsets = np.concatenate([[0], np.cumsum([r * r for r in Q.ranks])]).astype(int)
    terms = []
    lead = k ** (m - 2) if m >= 2 else 1
    for a in range(k ** (m - 1)):
        if Q.ranks[a] == 0:
            continue
        Ua = Q.bases[a]
        rows = slice(offsets[a], offsets[a + 1])
        for j in range(k):
            if m == 1:
                c, Vi = 0, fam.kraus[j]
            else:
                i1, tail = divmod(a, lead)
                c, Vi = tail * k + j, fam.kraus[i1]
            if Q.ranks[c] == 0:
                continue
            Uc = Q.bases[c]
            G = Uc.conj().T @ Vi @ Ua
            K = np.kron(G.T, G.conj().T)
            terms.append((a * k + j, rows, slice(offsets[c], offsets[c + 1]), K))
    return offsets, terms


def restricted_matrix(fam: KrausFamily, t, Q: SupportProjection) -> np.ndarray:
    """Matrix of T_{t,m} compressed to the supports of the boundary blocks.

    Acts on the stacked column-vectorizations of the compressed blocks;
    for m = 1 with full support this is exactly the tilted Heisenberg
    superoperator matrix.
    """
    tt = as_tilt(t, fam.k, Q.m)
    _, terms = _restriction_terms(fam, Q)
    N = Q.dim
    M = np.zeros((N, N), dtype=complex)
    et = np.exp(tt)
    for J, rows, cols, K in terms:
        M[rows, cols] += et[J] * K
    return M


@dataclass(frozen=True)
class PerronData:
    """Leading eigenvalue data of a restricted tilted matrix.

    ``right`` has unit norm with its largest-modulus component rotated to be
    real positive; ``left`` is scaled so <left, right> = 1.  ``gap`` is the
    modulus gap to the rest of the spectrum.
    """

    eigenvalue: float
    right: np.ndarray
    left: np.ndarray
    gap: float
    method: str
    residual: float


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    j = int(np.argmax(np.abs(v)))
    ph = v[j] / abs(v[j])
    return v * ph.conjugate()


def _power_pair(M: np.ndarray, tol: float, maxiter: int):
    """Power iteration for the leading eigenpair, started in the positive cone."""
    N = M.shape[0]
    v = np.ones(N, dtype=complex) / np.sqrt(N)
    lam = 0.0
    for it in range(maxiter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise EigenSolverFailure("power iteration hit the zero vector")
        w /= nw
        lam = np.vdot(w, M @ w).real
        if np.linalg.norm(M @ w - lam * w) <= tol * max(abs(lam), 1e-300):
            return lam, w, it + 1
        v = w
    raise NonConvergence(
        f"power iteration did not reach tol {tol:.1e} in {maxiter} steps"
    )


def perron_data(matrix: np.ndarray, method: str | None = None, *,
                power_tol: float = POWER_TOL,
                power_maxiter: int = POWER_MAXITER) -> PerronData:
    """Leading (Perron) eigenvalue with right and left eigenvectors.

    method None selects dense for N <= 4096 and power iteration above; both
    paths are available explicitly for cross-checks.
    """
    M = np.asarray(matrix, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {M.shape}")
    N = M.shape[0]
    if method is None:
        method = "dense" if N <= DENSE_CAP else "power"

    if method == "dense":
        try:
            w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
        except Exception as exc:
            raise EigenSolverFailure(f"dense eigensolve failed: {exc}") from exc
        idx = int(np.argmax(np.abs(w)))
        lam = float(np.abs(w[idx]))
        right = _fix_phase(vr[:, idx])
        left = vl[:, idx]
        moduli = np.sort(np.abs(w))[::-1]
        gap = float(moduli[0] - moduli[1]) if N > 1 else lam
    elif method == "power":
        lam_r, right, _ = _power_pair(M, power_tol, power_maxiter)
        lam_l, left, _ = _power_pair(M.conj().T, power_tol, power_maxiter)
        lam = float((abs(lam_r) + abs(lam_l)) / 2)
        right = _fix_phase(right)
        # gap from a rank-1 deflation, run at a loose tolerance
        pairing = np.vdot(left, right)
        if abs(pairing) < 1e-14:
            raise DegeneratePerronEigenvalue("left/right Perron vectors are orthogonal")
        lproj = left / pairing.conjugate()
        v = np.ones(N, dtype=complex) / np.sqrt(N)
        v -= right * np.vdot(lproj, v)
        lam2 = 0.0
        for _ in range(min(2000, power_maxiter)):
            v = M @ v - right * np.vdot(lproj, M @ v)
            nv = np.linalg.norm(v)
            if nv < 1e-280:
                break
            v /= nv
            lam2 = abs(np.vdot(v, M @ v - right * np.vdot(lproj, M @ v)))
        gap = float(lam - lam2)
    else:
        raise ValueError(f"method must be 'dense' or 'power', got {method!r}")

    pairing = np.vdot(left, right)
    if abs(pairing) < 1e-14:
        raise DegeneratePerronEigenvalue(
            "left and right leading eigenvectors are numerically orthogonal"
        )
    left = left / pairing.conjugate()
    residual = float(np.linalg.norm(M @ right - lam * right))
    if residual > 1e-9 * max(lam, 1e-300):
        raise EigenSolverFailure(
            f"leading eigenpair residual {residual:.2e} exceeds 1e-9 * lambda"
        )
    return PerronData(eigenvalue=lam, right=right, left=left, gap=gap,
                      method=method, residual=residual)


def radius_gradient(fam: KrausFamily, t, Q: SupportProjection, *,
                    perron: PerronData | None = None,
                    gap_floor: float = 1e-10) -> np.ndarray:
    """Gradient of log r(T~_{t,m}) in the tilt parameters.

    First-order eigenvalue perturbation: with <l, r> = 1,
    d log r / dt_J = Re <l, (dM/dt_J) r> / r, and dM/dt_J keeps the single
    term of the matrix carrying e^{t_J}.  At t = 0 this returns the
    stationary string probabilities.
    """
    tt = as_tilt(t, fam.k, Q.m)
    _, terms = _restriction_terms(fam, Q)
    if perron is None:
        M = restricted_matrix(fam, tt, Q)
        perron = perron_data(M)
    if perron.gap <= gap_floor:
        raise DegeneratePerronEigenvalue(
            f"spectral gap {perron.gap:.2e} too small for a stable gradient"
        )
    et = np.exp(tt)
    grad = np.zeros(fam.k**Q.m)
    l, r, lam = perron.left, perron.right, perron.eigenvalue
    for J, rows, cols, K in terms:
        grad[J] = (np.vdot(l[rows], K @ r[cols]) * et[J]).real / lam
    return grad


class TiltedRestriction:
    """Precomputed restriction of the tilted extension for one (family, m).

    Building the support compression once makes repeated evaluations over
    tilt vectors (sweeps, optimizer loops, finite differences) cheap.
    """

    def __init__(self, fam: KrausFamily, m: int, *, rank_tol: float = RANK_TOL,
                 size_cap: int = BLOCK_DIM_CAP):
        self.fam = fam
        self.m = m
        self.boundary = boundary_operator(fam, m, size_cap=size_cap)
        self.support = support_projections(self.boundary, rank_tol=rank_tol)
        self._offsets, self._terms = _restriction_terms(fam, self.support)
        self.dim = self.support.dim

    def matrix(self, t) -> np.ndarray:
        tt = as_tilt(t, self.fam.k, self.m)
        M = np.zeros((self.dim, self.dim), dtype=complex)
        et = np.exp(tt)
        for J, rows, cols, K in self._terms:
            M[rows, cols] += et[J] * K
        return M

    def perron(self, t, method: str | None = None) -> PerronData:
        return perron_data(self.matrix(t), method)

    def log_radius(self, t) -> float:
        return float(np.log(self.perron(t).eigenvalue))

    def gradient(self, t, perron: PerronData | None = None,
                 gap_floor: float = 1e-10) -> np.ndarray:
        tt = as_tilt(t, self.fam.k, self.m)
        if perron is None:
            perron = self.perron(tt)
        if perron.gap <= gap_floor:
            raise DegeneratePerronEigenvalue(
                f"spectral gap {perron.gap:.2e} too small for a stable gradient"
            )
        et = np.exp(tt)
        grad = np.zeros(self.fam.k**self.m)
        l, r, lam = perron.left, perron.right, perron.eigenvalue
        for J, rows, cols, K in self._terms:
            grad[J] = (np.vdot(l[rows], K @ r[cols]) * et[J]).real / lam
        return grad

    def embed(self, coords: np.ndarray) -> BlockOperator:
        """Lift stacked compressed coordinates back to full blocks."""
        k, d = self.fam.k, self.fam.d
        blocks = np.zeros((k ** (self.m - 1), d, d), dtype=complex)
        for a in range(k ** (self.m - 1)):
            ra = self.support.ranks[a]
            if ra == 0:
                continue
            X = coords[self._offsets[a]:self._offsets[a + 1]].reshape(ra, ra, order="F")
            U = self.support.bases[a]
            blocks[a] = U @ X @ U.conj().T
        return BlockOperator(m=self.m, k=k, blocks=blocks)

    def compress(self, Y: BlockOperator) -> np.ndarray:
        """Project full blocks onto the supports, returning stacked coordinates."""
        out = np.zeros(self.dim, dtype=complex)
        for a in range(self.fam.k ** (self.m - 1)):
            ra = self.support.ranks[a]
            if ra == 0:
                continue
            U = self.support.bases[a]
            X = U.conj().T @ Y.blocks[a] @ U
            out[self._offsets[a]:self._offsets[a + 1]] = X.reshape(-1, order="F")
        return out
