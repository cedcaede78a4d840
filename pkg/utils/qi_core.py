"""
Shared domain types, validation and closed-form baseline bounds.
Every probability bound here is carried as a natural log so that N_T up to 1e7 never underflows.
"""

import math
from dataclasses import dataclass

import numpy as np


# ─── Errors ───────────────────────────────────────────────────────────────────

class QIError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QIError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class OrderingError(DomainError):
    """p_D ≤ p_F where the operation needs p_D > p_F."""


class BelowThresholdError(DomainError):
    """M ≤ M_0: the detection probability does not exceed the false-alarm probability."""


class RangeError(QIError, ArithmeticError):
    """A computed probability left [0, 1]."""


class NoRootError(QIError, RuntimeError):
    """A solver bracket shows no sign change."""


class CapacityError(QIError, RuntimeError):
    """A summation window or truncated Hilbert space exceeds its cap."""


class UnphysicalCovarianceError(QIError, ArithmeticError):
    """A covariance matrix has a symplectic eigenvalue below 1."""


class ConfigError(QIError, ValueError):
    """A scenario file or command-line flag is invalid."""


# ─── Validation helpers ───────────────────────────────────────────────────────

def require_finite(**values: float) -> None:
    """Raise DomainError naming the first non-finite keyword argument."""
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


def require_probability(name: str, value: float) -> None:
    require_finite(**{name: value})
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


# ─── Domain types ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ScenarioParams:
    """Roundtrip transmissivity κ, noise brightness N_B and Bell-state dimensionality M."""

    kappa: float
    n_b:   float
    m:     float

    def __post_init__(self) -> None:
        for name in ("kappa", "n_b", "m"):
            object.__setattr__(self, name, float(getattr(self, name)))
        require_finite(kappa=self.kappa, n_b=self.n_b, m=self.m)
        if not self._kappa_allowed(self.kappa):
            raise DomainError(f"kappa must lie strictly inside (0, 1), got {self.kappa!r}")
        if self.n_b < 0:
            raise DomainError(f"n_b must be ≥ 0, got {self.n_b!r}")
        if self.m < 1:
            raise DomainError(f"m must be ≥ 1, got {self.m!r}")

    @staticmethod
    def _kappa_allowed(kappa: float) -> bool:
        return 0.0 < kappa < 1.0

    @property
    def is_integer_m(self) -> bool:
        return self.m.is_integer()


@dataclass(frozen=True)
class NullScenario(ScenarioParams):
    """Target-absent reference with κ = 0, under which ρ^(1) coincides with ρ^(0)."""

    @staticmethod
    def _kappa_allowed(kappa: float) -> bool:
        return kappa == 0.0


@dataclass(frozen=True)
class ShotProbs:
    """Single-shot false-alarm and detection probabilities."""

    p_f: float
    p_d: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_f", float(self.p_f))
        object.__setattr__(self, "p_d", float(self.p_d))
        require_probability("p_f", self.p_f)
        require_probability("p_d", self.p_d)

    def require_ordered(self) -> None:
        """Raise unless 0 < p_F < p_D < 1."""
        for name, value in (("p_f", self.p_f), ("p_d", self.p_d)):
            if value <= 0.0 or value >= 1.0:
                raise DomainError(f"{name} must lie strictly inside (0, 1), got {value!r}")
        if self.p_d <= self.p_f:
            raise OrderingError(f"need p_d > p_f, got p_f={self.p_f!r}, p_d={self.p_d!r}")


@dataclass(frozen=True)
class LogProb:
    """Natural-log probability; −∞ encodes an exact zero."""

    ln_p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "ln_p", float(self.ln_p))
        if math.isnan(self.ln_p) or self.ln_p > 0.0:
            raise DomainError(f"ln_p must be ≤ 0, got {self.ln_p!r}")

    @property
    def prob(self) -> float:
        return math.exp(self.ln_p)


# ─── Baseline bounds ──────────────────────────────────────────────────────────

def _require_shots(n_t: int) -> None:
    if int(n_t) != n_t or n_t < 1:
        raise DomainError(f"n_t must be a positive integer, got {n_t!r}")


def _nair_gu_exponent(params: ScenarioParams, n_t: int) -> float:
    ratio = params.kappa / (params.n_b + 1.0)
    if ratio >= 1.0:
        raise DomainError(f"kappa/(n_b+1) must be < 1, got {ratio!r}")
    return n_t * math.log1p(-ratio)


def nair_gu_error_lb(params: ScenarioParams, n_t: int) -> LogProb:
    """ln([1 − κ/(N_B+1)]^N_T / 4): no transmitter with N_T signal photons does better."""
    _require_shots(n_t)
    return LogProb(_nair_gu_exponent(params, n_t) - math.log(4.0))


def pannu_asymptotic_ub(params: ScenarioParams, n_t: int) -> LogProb:
    """Infinite-M Bell-state error bound; the Nair-Gu exponent with a 1/2 prefactor."""
    _require_shots(n_t)
    return LogProb(_nair_gu_exponent(params, n_t) - math.log(2.0))


def cs_exponent_factor(n_b: float) -> float:
    """(√(1+N_B) − √N_B)², written as 1/(√(1+N_B) + √N_B)² to avoid cancellation."""
    return 1.0 / (math.sqrt(1.0 + n_b) + math.sqrt(n_b)) ** 2


def cs_chernoff_ub(params: ScenarioParams, n_t: int) -> LogProb:
    """Coherent-state transmitter with homodyne-free photon counting, Chernoff bound."""
    _require_shots(n_t)
    return LogProb(-params.kappa * n_t * cs_exponent_factor(params.n_b) - math.log(2.0))


def quantum_advantage_db(n_b: float) -> float:
    """Nair-Gu exponent over coherent-state exponent, in dB."""
    require_finite(n_b=n_b)
    if n_b < 0:
        raise DomainError(f"n_b must be ≥ 0, got {n_b!r}")
    return 10.0 * math.log10((1.0 / (n_b + 1.0)) / cs_exponent_factor(n_b))


def cs_parity_penalty(n_b: float) -> float:
    """Penalty value at which a Bell-state system only matches the coherent-state exponent."""
    return cs_exponent_factor(n_b) * (n_b + 1.0)


def penalty_db(penalty: float) -> float:
    """Distance below the Nair-Gu exponent in dB (negative for penalty < 1)."""
    if penalty <= 0:
        return float("-inf")
    return 10.0 * math.log10(penalty)


def log_grid(log10_start: float, log10_stop: float, num: int) -> np.ndarray:
    return np.logspace(log10_start, log10_stop, int(num))
