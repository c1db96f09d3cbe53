"""Finite-n moment generating functions, scaled cumulants, and rate functions.

For a primitive chain started in psi, the level-m empirical measure P_n of
the first n outcomes (sliding windows, prefactor 1/(n-m+1)) has the moment
generating function

    Gamma_n(t) = E[ exp( sum over windows of t_{window} ) ],

computed exactly two independent ways: iterating the tilted block extension
n-m+1 times from the boundary operator (finite_mgf_lemma), or summing the
defining expression over all k^n outcome strings (finite_mgf_bruteforce).
The two routes must agree to roundoff; keeping both is the point.

As n grows, (1/n) log Gamma_n converges to the scaled cumulant generating
function F(t) = log r(t), the log spectral radius of the support-restricted
tilted matrix.  Its Legendre-Fenchel transform

    I(x) = sup_t { <t, x> - F(t) }

is the large-deviation rate function of the empirical measure; the gradient
and Hessian of F at t = 0 give the law-of-large-numbers limit and the
central-limit covariance of sqrt(n) (P_n - p).

Tilts are defined up to a constant shift (F(t + c 1) = F(t) + c), so the
supremum is searched in the gauge sum(t) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .channel import (
    KrausFamily,
    PERIPHERAL_TOL,
    SpectrumReport,
    TUPLE_CAP,
    require_primitive,
)
from .exceptions import (
    DimensionMismatch,
    EigenSolverFailure,
    NonConvergence,
    NormalizationViolation,
    NotOnSimplex,
    ParamOutOfRange,
    SizeCapExceeded,
)
from .tilted import (
    BLOCK_DIM_CAP,
    RANK_TOL,
    TiltVector,
    TiltedRestriction,
    apply_tilted,
    as_tilt,
    boundary_operator,
)

HESSIAN_STEP = 1e-4
GRAD_TOL = 1e-8
MAX_ITER = 10_000
# beyond this spread the optimizer is running off to the simplex boundary
TILT_CAP = 300.0


@dataclass(frozen=True)
class MgfResult:
    """Finite-n moment generating function value (also in log form, since
    the raw value overflows for large n)."""

    m: int
    n: int
    t: np.ndarray
    value: float
    log_value: float


def _check_psi(fam: KrausFamily, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (fam.d,):
        raise DimensionMismatch(f"psi must have length {fam.d}, got {psi.shape[0]}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise NormalizationViolation("psi must be a unit vector")
    return psi


def finite_mgf_lemma(fam: KrausFamily, psi, m: int, t, n: int, *,
                     size_cap: int = BLOCK_DIM_CAP) -> MgfResult:
    """Gamma_n(t) by iterating the tilted extension from the boundary operator.

    Applies T_{t,m} exactly n-m+1 times to M^(m) and pairs the block sum
    with psi.  Rescales intermediate blocks, so only the log may be needed
    for large n (value is +inf past the float range).
    """
    psi = _check_psi(fam, psi)
    if n < m:
        raise DimensionMismatch(f"need n >= m, got n={n}, m={m}")
    tt = as_tilt(t, fam.k, m)
    Y = boundary_operator(fam, m, size_cap=size_cap)
    blocks = Y.blocks.copy()
    log_scale = 0.0
    for _ in range(n - m + 1):
        Y = apply_tilted(fam, tt, Y.__class__(m=m, k=fam.k, blocks=blocks))
        blocks = Y.blocks
        peak = float(np.abs(blocks).max())
        if peak > 1e100 or (0.0 < peak < 1e-100):
            blocks = blocks / peak
            log_scale += math.log(peak)
    total = float(np.einsum("a,sab,b->", psi.conj(), blocks, psi).real)
    if total <= 0.0:
        raise EigenSolverFailure("moment generating function came out nonpositive")
    log_value = math.log(total) + log_scale
    value = math.exp(log_value) if log_value < 709.0 else math.inf
    return MgfResult(m=m, n=n, t=np.array(tt), value=value, log_value=log_value)


def finite_mgf_bruteforce(fam: KrausFamily, psi, m: int, t, n: int, *,
                          size_cap: int = TUPLE_CAP) -> MgfResult:
    """Gamma_n(t) by direct enumeration of all k^n outcome strings.

    Independent oracle for finite_mgf_lemma: string probabilities come from
    the ordered Kraus products applied to psi, window tilts are summed
    explicitly.  Only for k^n within the size cap.
    """
    psi = _check_psi(fam, psi)
    if n < m:
        raise DimensionMismatch(f"need n >= m, got n={n}, m={m}")
    k, d = fam.k, fam.d
    if k**n > size_cap:
        raise SizeCapExceeded(f"k^n = {k**n} exceeds the size cap {size_cap}")
    tt = as_tilt(t, fam.k, m)

    # amplitudes of all strings, grown one outcome at a time (big-endian codes)
    amps = psi[None, :]
    for _ in range(n):
        amps = np.einsum("iab,sb->sia", fam.kraus, amps).reshape(-1, d)
    probs = np.einsum("sa,sa->s", amps.conj(), amps).real

    codes = np.arange(k**n, dtype=np.int64)
    outcomes = np.empty((k**n, n), dtype=np.int64)
    for pos in range(n):
        outcomes[:, pos] = (codes // k ** (n - 1 - pos)) % k
    tilt_sum = np.zeros(k**n)
    for left in range(n - m + 1):
        wcode = np.zeros(k**n, dtype=np.int64)
        for u in range(m):
            wcode = wcode * k + outcomes[:, left + u]
        tilt_sum += tt[wcode]
    value = float(probs @ np.exp(tilt_sum))
    return MgfResult(m=m, n=n, t=np.array(tt), value=value,
                     log_value=math.log(value))


class ScgfEvaluator:
    """Scaled cumulant generating function of one (family, level) pair.

    Checks primitivity once, precomputes the support restriction, and then
    evaluates F(t) = log r(t), its analytic gradient, and finite-difference
    Hessians cheaply for many tilts.
    """

    def __init__(self, fam: KrausFamily, m: int, *, rank_tol: float = RANK_TOL,
                 peripheral_tol: float = PERIPHERAL_TOL,
                 size_cap: int = BLOCK_DIM_CAP,
                 report: SpectrumReport | None = None):
        if report is None:
            report = require_primitive(fam, peripheral_tol=peripheral_tol)
        self.report = report
        self.fam = fam
        self.m = m
        self.restriction = TiltedRestriction(fam, m, rank_tol=rank_tol,
                                             size_cap=size_cap)

    @property
    def k(self) -> int:
        return self.fam.k

    @property
    def dim(self) -> int:
        return self.k**self.m

    def value(self, t) -> float:
        return self.restriction.log_radius(t)

    def gradient(self, t) -> np.ndarray:
        return self.restriction.gradient(t)

    def value_and_gradient(self, t):
        perron = self.restriction.perron(t)
        return (float(np.log(perron.eigenvalue)),
                self.restriction.gradient(t, perron=perron))

    def hessian(self, t, step: float = HESSIAN_STEP) -> np.ndarray:
        """Hessian of F via central differences of the analytic gradient."""
        tt = as_tilt(t, self.k, self.m)
        K = self.dim
        H = np.empty((K, K))
        for j in range(K):
            tp = tt.copy(); tp[j] += step
            tm = tt.copy(); tm[j] -= step
            H[:, j] = (self.gradient(tp) - self.gradient(tm)) / (2 * step)
        return (H + H.T) / 2


def scgf(fam: KrausFamily, m: int, t, *, rank_tol: float = RANK_TOL,
         peripheral_tol: float = PERIPHERAL_TOL,
         size_cap: int = BLOCK_DIM_CAP) -> float:
    """F(t) = log spectral radius of the restricted tilted operator.

    Requires a primitive chain (NotPrimitive otherwise).  F(0) = 0, F is
    convex, and F(t + c 1) = F(t) + c.
    """
    return ScgfEvaluator(fam, m, rank_tol=rank_tol, peripheral_tol=peripheral_tol,
                         size_cap=size_cap).value(t)


@dataclass(frozen=True)
class CltMoments:
    """Law-of-large-numbers limit and CLT covariance of the level-m
    empirical measure: mean = grad F(0), covariance = Hessian F(0)."""

    m: int
    mean: np.ndarray
    covariance: np.ndarray
    step: float


def clt_moments(fam: KrausFamily, m: int, *, step: float = HESSIAN_STEP,
                evaluator: ScgfEvaluator | None = None) -> CltMoments:
    """First and second scaled cumulants of the empirical measure at t = 0.

    The mean reproduces the stationary string probabilities; the covariance
    is the limit of Cov(sqrt(n) P_n) and annihilates the all-ones vector
    (frequencies sum to one exactly).
    """
    ev = evaluator or ScgfEvaluator(fam, m)
    zero = np.zeros(ev.dim)
    mean = ev.gradient(zero)
    cov = ev.hessian(zero, step=step)
    return CltMoments(m=m, mean=mean, covariance=cov, step=step)


@dataclass(frozen=True)
class RatePoint:
    """Value of the rate function at x, with the maximizing tilt if the
    ascent converged.  A non-converged value is still a valid lower bound."""

    x: np.ndarray
    value: float
    argmax_t: TiltVector | None
    converged: bool
    iterations: int
    grad_norm: float


def _gauge_basis(K: int) -> np.ndarray:
    # orthonormal basis of the sum-zero hyperplane
    return scipy.linalg.null_space(np.ones((1, K)))


def rate_function(fam: KrausFamily, m: int, x, *, grad_tol: float = GRAD_TOL,
                  max_iter: int = MAX_ITER, initial_t=None,
                  evaluator: ScgfEvaluator | None = None) -> RatePoint:
    """Legendre-Fenchel transform I(x) = sup_t { <t,x> - F(t) }.

    Damped Newton ascent in the gauge sum(t) = 0, with a gradient-ascent
    fallback; the Hessian of F comes from finite differences of the analytic
    gradient.  For x outside the reachable set (e.g. on the simplex
    boundary) the supremum may be approached but not attained; the returned
    value is then a lower bound and ``converged`` may be False.
    """
    ev = evaluator or ScgfEvaluator(fam, m)
    K = ev.dim
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (K,):
        raise DimensionMismatch(f"x must have length k^m = {K}, got {x.shape[0]}")
    if x.min() < -1e-9 or abs(x.sum() - 1.0) > 1e-9:
        raise NotOnSimplex(
            f"x must lie on the probability simplex (min {x.min():.2e}, "
            f"sum {x.sum():.12f})"
        )

    def phi(t):
        if np.abs(t).max() > TILT_CAP + 10:
            return -math.inf
        try:
            return float(x @ t - ev.value(t))
        except (EigenSolverFailure, FloatingPointError):
            return -math.inf

    B = _gauge_basis(K)
    t = np.zeros(K) if initial_t is None else np.asarray(initial_t, dtype=float).copy()
    t -= t.mean()
    val = phi(t)
    best_val, best_t = val, t.copy()
    converged = False
    grad_norm = math.inf
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        g = x - ev.gradient(t)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= grad_tol:
            converged = True
            break
        if np.abs(t).max() > TILT_CAP:
            break  # unbounded ascent toward the simplex boundary

        # Newton direction on the gauge subspace, ridge-regularized
        H = ev.hessian(t)
        Hz = B.T @ H @ B
        gz = B.T @ g
        ridge = max(1e-14, 1e-12 * abs(np.trace(Hz)) / max(K - 1, 1))
        try:
            s = np.linalg.solve(Hz + ridge * np.eye(K - 1), gz)
            direction = B @ s
        except np.linalg.LinAlgError:
            direction = g
        if direction @ g <= 0.0:
            direction = g

        accepted = False
        for fallback in (direction, g):
            slope = float(fallback @ g)
            alpha = 1.0
            for _ in range(60):
                t_new = t + alpha * fallback
                val_new = phi(t_new)
                if val_new > val + 1e-4 * alpha * slope:
                    accepted = True
                    break
                alpha /= 2
            if accepted:
                break
        if not accepted:
            break  # numerical floor reached

        t = t_new - t_new.mean()
        val = val_new
        if val > best_val + 1e-15 * max(1.0, abs(best_val)):
            best_val, best_t = val, t.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 50:
                break  # value has stopped improving (boundary run-off)

    if val > best_val:
        best_val, best_t = val, t.copy()
    argmax = TiltVector(m=m, k=ev.k, entries=best_t) if converged else None
    return RatePoint(x=x, value=best_val, argmax_t=argmax, converged=converged,
                     iterations=it, grad_norm=grad_norm)


@dataclass(frozen=True)
class TailBound:
    """inf { I(x) : x_component >= a } and its minimizer."""

    value: float
    x: np.ndarray
    converged: bool


def tail_rate_bound(fam: KrausFamily, m: int, component: int, a: float, *,
                    evaluator: ScgfEvaluator | None = None) -> TailBound:
    """Best large-deviation decay rate for the tail event {P_n[c] >= a}.

    Minimizes the rate function over the simplex slice x_c >= a (SLSQP with
    the maximizing tilt as the envelope gradient of I).  ``a`` must lie
    between the stationary probability of the component and 1.
    """
    ev = evaluator or ScgfEvaluator(fam, m)
    K = ev.dim
    if not 0 <= component < K:
        raise DimensionMismatch(f"component {component} out of range for k^m = {K}")
    p = ev.gradient(np.zeros(K))
    if not p[component] - 1e-12 <= a < 1.0:
        raise ParamOutOfRange(
            f"a = {a} must lie in [stationary value {p[component]:.6f}, 1)"
        )
    if a <= p[component]:
        return TailBound(value=0.0, x=p, converged=True)

    # start on the face x_c = a, other mass proportional to stationary
    x0 = p * (1.0 - a) / (1.0 - p[component])
    x0[component] = a
    warm = {"t": None}

    def objective(x):
        # project tiny constraint violations back onto the simplex
        xc = np.clip(x, 0.0, None)
        xc = xc / xc.sum()
        rp = rate_function(fam, m, xc, evaluator=ev, max_iter=2000,
                           initial_t=warm["t"])
        if rp.argmax_t is not None:
            warm["t"] = rp.argmax_t.entries
            jac = rp.argmax_t.entries
        else:
            jac = np.zeros(K)
        return rp.value, jac

    cons = [
        {"type": "eq", "fun": lambda x: x.sum() - 1.0,
         "jac": lambda x: np.ones(K)},
        {"type": "ineq", "fun": lambda x: x[component] - a,
         "jac": lambda x: np.eye(K)[component]},
    ]
    res = scipy.optimize.minimize(
        objective, x0, jac=True, method="SLSQP",
        bounds=[(0.0, 1.0)] * K, constraints=cons,
        options={"maxiter": 200, "ftol": 1e-12},
    )
    if not res.success and res.fun is None:
        raise NonConvergence(f"tail bound minimization failed: {res.message}")
    return TailBound(value=float(max(res.fun, 0.0)), x=np.asarray(res.x),
                     converged=bool(res.success))
