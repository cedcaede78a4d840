"""
Multi-shot detection.
Likelihood-ratio threshold on the click count, Chernoff bound with the closed-form
optimiser, the penalty function against the Nair-Gu exponent, the M solver,
exact binomial error probability and a seeded Monte Carlo check of the decision rule.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import gammaln, logsumexp

from utils.qi_core import (
    BelowThresholdError,
    DomainError,
    LogProb,
    NoRootError,
    ScenarioParams,
    ShotProbs,
)
from utils.single_shot import m0_threshold, shot_probs

log = logging.getLogger(__name__)

M_UPPER        = 1e20
TAIL_CUTOFF    = 1e-15
MC_BLOCK       = 4096
_LN2           = math.log(2.0)


# ─── Chernoff bound ───────────────────────────────────────────────────────────

def ln_overlap(probs: ShotProbs, s: float) -> float:
    """ln Q(s) = ln[p_D^s p_F^(1−s) + (1−p_D)^s (1−p_F)^(1−s)], evaluated without leaving log space."""
    if s <= 0.0 or s >= 1.0:
        return 0.0
    with np.errstate(divide="ignore"):
        ln_a = s * np.log(probs.p_d) + (1.0 - s) * np.log(probs.p_f)
        ln_b = s * np.log1p(-probs.p_d) + (1.0 - s) * np.log1p(-probs.p_f)
    return float(np.logaddexp(ln_a, ln_b))


def overlap(probs: ShotProbs, s: float) -> float:
    return math.exp(ln_overlap(probs, s))


def chernoff_s_opt(probs: ShotProbs) -> float:
    """Closed-form minimiser of Q(s) for two Bernoulli laws."""
    probs.require_ordered()
    p_f, p_d = probs.p_f, probs.p_d
    ln_r_click = math.log(p_d) - math.log(p_f)           # ln(p_D/p_F) > 0
    ln_r_dark  = math.log1p(-p_f) - math.log1p(-p_d)     # ln[(1−p_F)/(1−p_D)] > 0
    odds_f     = math.log(p_f) - math.log1p(-p_f)
    numer      = odds_f + math.log(ln_r_click) - math.log(ln_r_dark)
    return numer / (-(ln_r_click + ln_r_dark))


@dataclass(frozen=True)
class ChernoffResult:
    s_opt: float
    ln_q:  float

    def ln_bound(self, n_t: int) -> LogProb:
        return LogProb(n_t * self.ln_q - _LN2)


def chernoff_bound(probs: ShotProbs, n_t: int) -> ChernoffResult:
    """Per-shot overlap at the optimal s; the N_T-shot bound is result.ln_bound(n_t)."""
    _require_shots(n_t)
    if probs.p_d == probs.p_f and 0.0 < probs.p_f < 1.0:
        return ChernoffResult(s_opt=0.5, ln_q=0.0)
    s = chernoff_s_opt(probs)
    return ChernoffResult(s_opt=s, ln_q=min(ln_overlap(probs, s), 0.0))


# ─── Penalty ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PenaltyPoint:
    params:                   ScenarioParams
    penalty:                  float
    has_advantage_vs_nair_gu: bool


def penalty(params: ScenarioParams) -> PenaltyPoint:
    """Achieved Chernoff exponent as a fraction of the Nair-Gu exponent κN_T/(N_B+1)."""
    m0 = m0_threshold(params.kappa, params.n_b)
    if params.m <= m0:
        raise BelowThresholdError(f"M={params.m!r} ≤ M_0={m0:.6g} for kappa={params.kappa}, n_b={params.n_b}")
    result = chernoff_bound(shot_probs(params), 1)
    value  = -result.ln_q * (params.n_b + 1.0) / params.kappa
    return PenaltyPoint(params=params, penalty=value, has_advantage_vs_nair_gu=0.0 < value <= 1.0)


def penalty_asymptote(params: ScenarioParams) -> float:
    """Large-M form 1 − (1 + ln L)/L with L = ln(p_D/p_F)."""
    probs = shot_probs(params)
    big_l = math.log(probs.p_d / probs.p_f)
    return 1.0 - (1.0 + math.log(big_l)) / big_l


def solve_m_for_penalty(kappa: float, n_b: float, target: float) -> float:
    """M at which the penalty reaches `target`, by bisection on ln M."""
    if not 0.0 < target < 1.0:
        raise DomainError(f"target must lie in (0, 1), got {target!r}")
    m0 = m0_threshold(kappa, n_b)

    def gap(ln_m: float) -> float:
        return penalty(ScenarioParams(kappa, n_b, math.exp(ln_m))).penalty - target

    lo, hi = math.log(1.001 * m0), math.log(M_UPPER)
    g_lo, g_hi = gap(lo), gap(hi)
    log.debug("solve_m bracket [%.4g, %.4g] gaps (%.3g, %.3g)", math.exp(lo), math.exp(hi), g_lo, g_hi)
    if g_lo * g_hi > 0:
        raise NoRootError(
            f"penalty {target!r} not reached for M in [{math.exp(lo):.4g}, {M_UPPER:.0e}] "
            f"(kappa={kappa}, n_b={n_b})"
        )
    ln_m = bisect(gap, lo, hi, xtol=1e-12, maxiter=400)
    m    = math.exp(ln_m)
    if abs(gap(ln_m)) / target >= 1e-6:
        raise NoRootError(f"bisection stalled at M={m:.6g} for target {target!r}")
    return m


# ─── Exact error ──────────────────────────────────────────────────────────────

def _require_shots(n_t: int) -> None:
    if int(n_t) != n_t or n_t < 1:
        raise DomainError(f"n_t must be a positive integer, got {n_t!r}")


def lrt_threshold(probs: ShotProbs, n_t: int) -> float:
    """Click-count threshold γ of the minimum-error test: decide H1 iff D ≥ γ."""
    probs.require_ordered()
    _require_shots(n_t)
    ln_r_dark  = math.log1p(-probs.p_f) - math.log1p(-probs.p_d)
    ln_r_click = math.log(probs.p_d) - math.log(probs.p_f)
    return n_t * ln_r_dark / (ln_r_click + ln_r_dark)


def _decision_count(gamma: float) -> int:
    """Smallest click count that decides H1; γ within rounding of an integer counts as that integer."""
    nearest = round(gamma)
    if abs(gamma - nearest) <= 1e-9 * max(1.0, abs(gamma)):
        return int(nearest)
    return math.ceil(gamma)


def _log_binom_pmf(n: int, p: float, k: np.ndarray) -> np.ndarray:
    return (gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
            + k * math.log(p) + (n - k) * math.log1p(-p))


def log_binom_sum(n: int, p: float, lo: int, hi: int) -> float:
    """ln Σ_{j=lo}^{hi} Bin(j; n, p), summed from the mode outward with a relative cutoff."""
    lo, hi = max(lo, 0), min(hi, n)
    if lo > hi:
        return -math.inf
    start  = min(max(math.floor((n + 1) * p), lo), hi)
    pieces = [_log_binom_pmf(n, p, np.array([float(start)]))]
    total  = float(pieces[0][0])

    for step in (-1, 1):
        edge  = start
        chunk = 64
        while True:
            nxt = edge + step if step > 0 else edge - 1
            if nxt < lo or nxt > hi:
                break
            stop  = min(nxt + chunk - 1, hi) if step > 0 else max(nxt - chunk + 1, lo)
            ks    = np.arange(nxt, stop + step, step, dtype=float)
            terms = _log_binom_pmf(n, p, ks)
            pieces.append(terms)
            total = float(logsumexp([total, logsumexp(terms)]))
            edge  = int(ks[-1])
            if terms[-1] < total + math.log(TAIL_CUTOFF) and _tail_ratio_small(n, p, edge, step):
                break
            chunk *= 2
    return float(logsumexp(np.concatenate(pieces)))


def _tail_ratio_small(n: int, p: float, k: int, step: int) -> bool:
    """Terms keep shrinking past k, so the remaining tail is geometrically bounded."""
    if step > 0:
        return k >= n or (n - k) * p / ((k + 1) * (1.0 - p)) < 0.5
    return k <= 0 or k * (1.0 - p) / ((n - k + 1) * p) < 0.5


def exact_error(probs: ShotProbs, n_t: int) -> LogProb:
    """Error probability of the threshold test with equally likely hypotheses."""
    k     = _decision_count(lrt_threshold(probs, n_t))
    false = log_binom_sum(n_t, probs.p_f, k, n_t)
    miss  = log_binom_sum(n_t, probs.p_d, 0, k - 1)
    return LogProb(min(float(np.logaddexp(false, miss)) - _LN2, 0.0))


# ─── Monte Carlo ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class McEstimate:
    p_err_hat: float
    std_err:   float
    trials:    int
    seed:      int


def _block_errors(probs: ShotProbs, n_t: int, k: int, seed: int, hypothesis: int,
                  block: int, size: int) -> int:
    """Wrong decisions in one block of trials, drawn from the block's own Philox substream."""
    stream = np.random.SeedSequence(seed, spawn_key=(hypothesis, block))
    rng    = np.random.Generator(np.random.Philox(stream))
    p      = probs.p_d if hypothesis else probs.p_f
    clicks = rng.binomial(n_t, p, size=size)
    if hypothesis:
        return int(np.count_nonzero(clicks < k))
    return int(np.count_nonzero(clicks >= k))


def mc_error(probs: ShotProbs, n_t: int, trials: int, seed: int, threads: int = 1) -> McEstimate:
    """Simulate `trials` N_T-shot experiments per hypothesis and apply the threshold test."""
    _require_shots(n_t)
    if int(trials) != trials or trials < 1000:
        raise DomainError(f"trials must be an integer ≥ 1000, got {trials!r}")
    if int(seed) != seed or not 0 <= seed < 2 ** 64:
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

    if probs.p_d == probs.p_f:
        k = 0
    else:
        k = _decision_count(lrt_threshold(probs, n_t))

    sizes = [min(MC_BLOCK, trials - start) for start in range(0, trials, MC_BLOCK)]
    jobs  = [(h, b, size) for h in (0, 1) for b, size in enumerate(sizes)]
    log.debug("mc_error: %d blocks over %d threads, threshold %d", len(jobs), threads, k)

    def run(job: tuple[int, int, int]) -> int:
        h, b, size = job
        return _block_errors(probs, n_t, k, int(seed), h, b, size)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        errors = sum(pool.map(run, jobs))

    p_hat = errors / (2.0 * trials)
    return McEstimate(
        p_err_hat=p_hat,
        std_err=math.sqrt(p_hat * (1.0 - p_hat) / trials),
        trials=int(trials),
        seed=int(seed),
    )
