"""
Closed-form single-shot statistics.
False-alarm and detection probabilities after mean replacement, their first-order
corrections, and the dimensionality threshold M_0 above which p_D exceeds p_F.
"""

import math
from dataclasses import dataclass

from utils.qi_core import DomainError, RangeError, ScenarioParams, ShotProbs, require_finite


# ─── Approximations ───────────────────────────────────────────────────────────

def _x(params: ScenarioParams) -> float:
    """Mean of |Ñ| + M."""
    return params.m * (params.n_b + 1.0)


def _require_pf_domain(params: ScenarioParams) -> float:
    x = _x(params)
    if x <= 1.0:
        raise DomainError(f"need M(N_B+1) > 1, got {x!r}")
    return x


def p_f_approx(params: ScenarioParams) -> float:
    x = _require_pf_domain(params)
    return params.n_b / (x - 1.0)


def p_d_approx(params: ScenarioParams) -> float:
    return params.kappa / (params.n_b + 1.0) + params.n_b / _x(params)


def p_d_split(params: ScenarioParams) -> tuple[float, float]:
    """(m = m′ term, m ≠ m′ term) before they are recombined into p_d_approx."""
    x = _x(params)
    return (params.kappa + params.n_b) / x, params.kappa * (params.m - 1.0) / x


def shot_probs(params: ScenarioParams) -> ShotProbs:
    return ShotProbs(p_f_approx(params), p_d_approx(params))


# ─── First-order corrections ──────────────────────────────────────────────────

def delta_f(params: ScenarioParams) -> float:
    x = _require_pf_domain(params)
    return params.n_b * (params.n_b + 1.0) / (x - 1.0) ** 2


def delta_d(params: ScenarioParams) -> float:
    k, b, m = params.kappa, params.n_b, params.m
    return (b * (3.0 * k + b) + k * (m - 1.0) * b * b) / _x(params) ** 2


@dataclass(frozen=True)
class CorrectedShotProbs:
    base:      ShotProbs
    delta_f:   float
    delta_d:   float
    corrected: ShotProbs


def corrected_probs(params: ScenarioParams) -> CorrectedShotProbs:
    """Mean-replacement probabilities with the n = 1 Taylor terms included."""
    m0 = m0_threshold(params.kappa, params.n_b)
    if params.m <= 10.0 * m0:
        raise DomainError(f"corrections need M > 10·M_0 = {10.0 * m0:.6g}, got M={params.m!r}")

    base   = shot_probs(params)
    d_f    = delta_f(params)
    d_d    = delta_d(params)
    p_f    = base.p_f - d_f
    p_d    = base.p_d - d_d
    for name, value in (("p_f", p_f), ("p_d", p_d)):
        if not 0.0 <= value <= 1.0:
            raise RangeError(f"corrected {name}={value!r} left [0, 1] at {params}")
    return CorrectedShotProbs(base=base, delta_f=d_f, delta_d=d_d, corrected=ShotProbs(p_f, p_d))


# ─── Threshold and count statistics ───────────────────────────────────────────

def m0_threshold(kappa: float, n_b: float) -> float:
    """Dimensionality at which p_d_approx = p_f_approx."""
    require_finite(kappa=kappa, n_b=n_b)
    if kappa <= 0.0:
        raise DomainError(f"kappa must be > 0, got {kappa!r}")
    if n_b < 0.0:
        raise DomainError(f"n_b must be ≥ 0, got {n_b!r}")
    root = math.sqrt(kappa * kappa + 4.0 * kappa * n_b * (n_b + 1.0))
    return (kappa + root) / (2.0 * kappa * (n_b + 1.0))


def count_snr(params: ScenarioParams, delta: int = 0) -> float:
    """Mean-to-standard-deviation ratio of |Ñ| + M − δ for thermal counts in M modes."""
    if params.n_b == 0.0:
        return math.inf
    return (_x(params) - delta) / math.sqrt(params.m * params.n_b * (params.n_b + 1.0))
