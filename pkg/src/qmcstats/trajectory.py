"""Monte Carlo unraveling of the measurement record.

Each trajectory repeatedly draws outcome i with probability ||V_i psi||^2
and renormalizes psi -> V_i psi / ||.||.  Sampling is vectorized over
batches of trajectories, but every trajectory owns its own PCG64 stream
seeded by (base_seed + index) mod 2^64, and numpy generators hand out the
same variates in bulk as one at a time, so batched and serial runs produce
identical outcome records.  The transient from psi0 is kept (no burn-in by
default): empirical measures converge to the stationary law regardless.

Statistics offered on top of the sampler: sliding-window empirical measures,
a CLT check of sqrt(n) (P_n - p) against the analytic moments, and direct
tail-probability estimates with Wilson confidence intervals for comparison
against the large-deviation rate bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import KrausFamily, stationary_string_probabilities
from .exceptions import (
    DimensionMismatch,
    NormalizationViolation,
    NumericalUnderflow,
    ParamOutOfRange,
    ParseError,
    WindowTooLong,
)
from .ldp import CltMoments, ScgfEvaluator, TailBound, clt_moments, tail_rate_bound

UNDERFLOW_FLOOR = 1e-300
DEFAULT_CHUNK = 4096


def _check_psi0(fam: KrausFamily, psi0) -> np.ndarray:
    psi = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi.shape != (fam.d,):
        raise DimensionMismatch(f"psi0 must have length {fam.d}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-12:
        raise NormalizationViolation("psi0 must be a unit vector")
    return psi


def trajectory_seed(base_seed: int, index: int) -> int:
    """Per-trajectory seed: base_seed advanced by a counter, mod 2^64."""
    return (int(base_seed) + int(index)) % (1 << 64)


def _simulate_batch(fam: KrausFamily, psi0: np.ndarray, n: int,
                    seeds: np.ndarray, *, return_final: bool = False):
    """Sample len(seeds) trajectories of length n; outcomes shape (B, n).

    Uniform variates are pre-drawn per trajectory from its own generator,
    then consumed column by column, which keeps the outcome records
    independent of the batch split.
    """
    k, d = fam.k, fam.d
    B = len(seeds)
    uniforms = np.empty((B, n))
    for b, seed in enumerate(seeds):
        gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
        uniforms[b] = gen.random(n)
    V = fam.kraus
    psi = np.broadcast_to(psi0, (B, d)).copy()
    outcomes = np.empty((B, n), dtype=np.int16)
    rows = np.arange(B)
    for step in range(n):
        amps = np.einsum("iab,Bb->iBa", V, psi)
        weights = np.einsum("iBa,iBa->Bi", amps.conj(), amps).real
        total = weights.sum(axis=1)
        if np.any(total < UNDERFLOW_FLOOR):
            raise NumericalUnderflow(
                f"outcome weights underflowed at step {step}"
            )
        cum = np.cumsum(weights / total[:, None], axis=1)
        draw = uniforms[:, step]
        picked = np.minimum((cum < draw[:, None]).sum(axis=1), k - 1)
        outcomes[:, step] = picked
        psi = amps[picked, rows, :]
        psi /= np.linalg.norm(psi, axis=1)[:, None]
    if return_final:
        return outcomes, psi
    return outcomes


@dataclass(frozen=True)
class Trajectory:
    """One sampled measurement record."""

    outcomes: np.ndarray
    final_state: np.ndarray
    seed: int
    model_digest: str


def sample_trajectory(fam: KrausFamily, psi0, n: int, seed: int) -> Trajectory:
    """Sample a single trajectory of n outcomes (deterministic in all args)."""
    if n < 1:
        raise DimensionMismatch(f"n must be >= 1, got {n}")
    psi = _check_psi0(fam, psi0)
    outcomes, final = _simulate_batch(fam, psi, n, np.asarray([seed]),
                                      return_final=True)
    return Trajectory(outcomes=outcomes[0].astype(np.int64),
                      final_state=final[0], seed=int(seed),
                      model_digest=fam.digest())


def rle_encode(outcomes) -> str:
    """Run-length encode an outcome record as "value*count" tokens.

    [0,0,0,1,1,0] -> "0*3 1*2 0*1".  The persistence format for trajectory
    batches (one CSV row per trajectory: seed, n, encoded outcomes).
    """
    out = np.asarray(outcomes).reshape(-1)
    if out.size == 0:
        return ""
    edges = np.flatnonzero(np.diff(out)) + 1
    starts = np.concatenate(([0], edges))
    lengths = np.diff(np.concatenate((starts, [out.size])))
    return " ".join(f"{out[s]}*{c}" for s, c in zip(starts, lengths))


def rle_decode(text: str) -> np.ndarray:
    """Inverse of rle_encode."""
    if not text.strip():
        return np.zeros(0, dtype=np.int64)
    values, lengths = [], []
    for token in text.split():
        try:
            value, count = token.split("*")
            values.append(int(value))
            lengths.append(int(count))
        except ValueError:
            raise ParseError(f"bad run-length token {token!r}") from None
    return np.repeat(np.asarray(values, dtype=np.int64), lengths)


def window_codes(outcomes: np.ndarray, m: int, k: int) -> np.ndarray:
    """Big-endian codes of all sliding length-m windows (along the last axis)."""
    outcomes = np.asarray(outcomes)
    n = outcomes.shape[-1]
    if m < 1:
        raise DimensionMismatch(f"m must be >= 1, got {m}")
    if m > n:
        raise WindowTooLong(f"window m={m} longer than the record n={n}")
    codes = np.zeros(outcomes.shape[:-1] + (n - m + 1,), dtype=np.int64)
    for u in range(m):
        codes = codes * k + outcomes[..., u:n - m + 1 + u]
    return codes


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Window counts of one record; frequencies = counts / (n - m + 1)."""

    m: int
    n: int
    counts: np.ndarray
    frequencies: np.ndarray


def empirical_measure(outcomes, m: int, k: int) -> EmpiricalMeasure:
    """Level-m empirical measure of a single outcome record."""
    out = np.asarray(outcomes).reshape(-1)
    if out.size and (out.min() < 0 or out.max() >= k):
        raise DimensionMismatch("outcomes contain labels outside range(k)")
    codes = window_codes(out, m, k)
    counts = np.bincount(codes, minlength=k**m)
    return EmpiricalMeasure(m=m, n=out.size, counts=counts,
                            frequencies=counts / codes.size)


def _batched_window_counts(fam: KrausFamily, psi0: np.ndarray, m: int, n: int,
                           trials: int, base_seed: int, *, burn_in: int = 0,
                           chunk: int = DEFAULT_CHUNK, seed_offset: int = 0):
    """Yield (B, k^m) window-count matrices over seed-ordered chunks."""
    k = fam.k
    nw = n - burn_in - m + 1
    if nw < 1:
        raise WindowTooLong(f"record too short: n={n}, burn_in={burn_in}, m={m}")
    done = 0
    while done < trials:
        B = min(chunk, trials - done)
        seeds = np.asarray([trajectory_seed(base_seed, seed_offset + done + b)
                            for b in range(B)])
        outcomes = _simulate_batch(fam, psi0, n, seeds)
        codes = window_codes(outcomes[:, burn_in:], m, k)
        flat = (np.arange(B, dtype=np.int64)[:, None] * (k**m) + codes).reshape(-1)
        counts = np.bincount(flat, minlength=B * k**m).reshape(B, k**m)
        yield counts
        done += B


@dataclass(frozen=True)
class McCltResult:
    """Sample statistics of the rescaled deviation sqrt(n) (P_n - p)."""

    m: int
    n: int
    trials: int
    base_seed: int
    mean_deviation: np.ndarray
    sample_covariance: np.ndarray
    z_scores: np.ndarray
    analytic: CltMoments


def monte_carlo_clt(fam: KrausFamily, psi0, m: int, n: int, trials: int,
                    base_seed: int, *, burn_in: int = 0,
                    chunk: int = DEFAULT_CHUNK) -> McCltResult:
    """Monte Carlo check of the central limit theorem for P_n.

    Samples `trials` independent trajectories, forms sqrt(n) (P_n - p), and
    reports the sample mean (with per-component z-scores against the
    analytic covariance) and the sample covariance.
    """
    if trials < 100:
        raise ParamOutOfRange(f"need trials >= 100 for stable statistics, got {trials}")
    psi = _check_psi0(fam, psi0)
    analytic = clt_moments(fam, m)
    p = analytic.mean
    dim = fam.k**m
    nw = n - burn_in - m + 1
    s1 = np.zeros(dim)
    s2 = np.zeros((dim, dim))
    for counts in _batched_window_counts(fam, psi, m, n, trials, base_seed,
                                         burn_in=burn_in, chunk=chunk):
        dev = math.sqrt(n) * (counts / nw - p)
        s1 += dev.sum(axis=0)
        s2 += dev.T @ dev
    mean = s1 / trials
    cov = (s2 - trials * np.outer(mean, mean)) / (trials - 1)
    var = np.diag(analytic.covariance).copy()
    z = np.where(var > 1e-12, mean / np.sqrt(np.maximum(var, 1e-300) / trials), 0.0)
    return McCltResult(m=m, n=n, trials=trials, base_seed=int(base_seed),
                       mean_deviation=mean, sample_covariance=cov,
                       z_scores=z, analytic=analytic)


def _wilson(hits: int, trials: int, z: float = 1.96):
    # Wilson score interval for a binomial proportion
    ph = hits / trials
    denom = 1.0 + z * z / trials
    center = (ph + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials**2))
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass(frozen=True)
class TailPoint:
    """Tail estimate at one record length."""

    n: int
    trials: int
    hits: int
    frequency: float
    wilson_low: float
    wilson_high: float
    rate: float | None
    rate_low: float
    rate_high: float


@dataclass(frozen=True)
class TailEstimate:
    """Empirical decay-rate estimates against the analytic bound.

    Lengths with no exceedances are reported with rate None (ZeroHits is a
    statistical outcome, not an error).
    """

    m: int
    component: int
    a: float
    points: tuple
    analytic: TailBound
    zero_hit_lengths: tuple


def ld_tail_estimate(fam: KrausFamily, psi0, m: int, component: int, a: float,
                     n_list, trials: int, base_seed: int, *,
                     burn_in: int = 0, chunk: int = DEFAULT_CHUNK,
                     z: float = 1.96) -> TailEstimate:
    """Estimate -(1/n) log P(P_n[component] >= a) over record lengths.

    Direct Monte Carlo with Wilson intervals; the analytic comparison is
    inf { I(x) : x_component >= a } from the rate function.  Trajectory
    seed counters continue across the lengths, so every trajectory in the
    whole experiment is independent.
    """
    psi = _check_psi0(fam, psi0)
    dim = fam.k**m
    if not 0 <= component < dim:
        raise DimensionMismatch(f"component {component} out of range for k^m = {dim}")
    ev = ScgfEvaluator(fam, m)
    p = stationary_string_probabilities(fam, m, report=ev.report)
    if not p[component] - 1e-12 <= a < 1.0:
        raise ParamOutOfRange(
            f"a = {a} must lie in [stationary value {p[component]:.6f}, 1)"
        )
    analytic = tail_rate_bound(fam, m, component, a, evaluator=ev)

    points = []
    zero_hits = []
    offset = 0
    for n in n_list:
        nw = n - burn_in - m + 1
        hits = 0
        for counts in _batched_window_counts(fam, psi, m, n, trials, base_seed,
                                             burn_in=burn_in, chunk=chunk,
                                             seed_offset=offset):
            hits += int(np.sum(counts[:, component] / nw >= a))
        offset += trials
        freq = hits / trials
        wl, wh = _wilson(hits, trials, z)
        if hits > 0:
            rate = -math.log(freq) / n
            rate_low = -math.log(wh) / n
            rate_high = -math.log(wl) / n if wl > 0 else math.inf
        else:
            zero_hits.append(n)
            rate = None
            rate_low = -math.log(wh) / n if wh > 0 else math.inf
            rate_high = math.inf
        points.append(TailPoint(n=n, trials=trials, hits=hits, frequency=freq,
                                wilson_low=wl, wilson_high=wh, rate=rate,
                                rate_low=rate_low, rate_high=rate_high))
    return TailEstimate(m=m, component=component, a=a, points=tuple(points),
                        analytic=analytic, zero_hit_lengths=tuple(zero_hits))
