"""
Two-mode squeezed-vacuum comparison system.
Covariance matrices for the two hypotheses, the Gaussian quantum Chernoff exponent per mode pair,
the per-photon penalty against the Nair-Gu exponent, and the N_S solver.

Quadratures are ordered (x_R, p_R, x_I, p_I) with vacuum variance 1.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from utils.qi_core import (
    DomainError,
    LogProb,
    NoRootError,
    UnphysicalCovarianceError,
    require_finite,
)

log = logging.getLogger(__name__)

OMEGA        = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
Z2           = np.diag([1.0, -1.0])
NU_FLOOR     = 1.0 - 1e-9
NS_BRACKET   = (1e-8, 1.0)
S_TOL        = 1e-10


@dataclass(frozen=True)
class GaussianScenario:
    kappa: float
    n_b:   float
    n_s:   float

    def __post_init__(self) -> None:
        for name in ("kappa", "n_b", "n_s"):
            object.__setattr__(self, name, float(getattr(self, name)))
        require_finite(kappa=self.kappa, n_b=self.n_b, n_s=self.n_s)
        if not 0.0 < self.kappa < 1.0:
            raise DomainError(f"kappa must lie strictly inside (0, 1), got {self.kappa!r}")
        if self.n_b < 0.0:
            raise DomainError(f"n_b must be ≥ 0, got {self.n_b!r}")
        if self.n_s <= 0.0:
            raise DomainError(f"n_s must be > 0, got {self.n_s!r}")


@dataclass(frozen=True)
class CovariancePair:
    v0: np.ndarray
    v1: np.ndarray


# ─── Covariances ──────────────────────────────────────────────────────────────

def _standard_form(sc: GaussianScenario) -> tuple[float, float, float]:
    """(return variance a, idler variance b, correlation c) of the H1 state."""
    a = 2.0 * (sc.kappa * sc.n_s + sc.n_b) + 1.0
    b = 2.0 * sc.n_s + 1.0
    c = 2.0 * math.sqrt(sc.kappa * sc.n_s * (sc.n_s + 1.0))
    return a, b, c


def build_covariances(sc: GaussianScenario) -> CovariancePair:
    a, b, c = _standard_form(sc)
    x_r     = 2.0 * sc.n_b + 1.0
    v0      = np.diag([x_r, x_r, b, b])
    v1      = np.block([[a * np.eye(2), c * Z2], [c * Z2, b * np.eye(2)]])
    return CovariancePair(v0=v0, v1=v1)


def symplectic_eigenvalues(v: np.ndarray) -> np.ndarray:
    """Ascending symplectic spectrum, from |eig(iΩV)| (each value appears twice)."""
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ v)))
    return ev[::2]


def is_bona_fide(v: np.ndarray, atol: float = 1e-10) -> bool:
    """V + iΩ ≥ 0."""
    if not np.allclose(v, v.T, atol=1e-12):
        return False
    return float(np.linalg.eigvalsh(v + 1j * OMEGA).min()) >= -atol


# ─── Gaussian s-overlap ───────────────────────────────────────────────────────

def _u(p: float, x: float) -> float:
    """p·ln[(x−1)/(x+1)]; −∞ for the vacuum value x = 1."""
    if x <= 1.0:
        return -math.inf
    return p * (math.log(x - 1.0) - math.log(x + 1.0))


def _lam(p: float, x: float) -> float:
    """Λ_p(x) = [(x+1)^p + (x−1)^p]/[(x+1)^p − (x−1)^p]."""
    u = _u(p, x)
    if u == -math.inf:
        return 1.0
    return 1.0 / math.tanh(-u / 2.0)


def _shift(p: float, x: float, delta: float) -> tuple[float, float]:
    """(ln G_p(x+δ) − ln G_p(x), Λ_p(x+δ) − Λ_p(x)) without subtracting nearby values."""
    if delta == 0.0:
        return 0.0, 0.0
    grow = -p * math.log1p(delta / (x + 1.0))
    if x <= 1.0:
        u_new = p * (math.log(delta) - math.log(2.0 + delta))
        return grow - math.log1p(-math.exp(u_new)), -2.0 * math.exp(u_new) / math.expm1(u_new)

    u     = _u(p, x)
    du    = p * (math.log1p(delta / (x - 1.0)) - math.log1p(delta / (x + 1.0)))
    u_new = u + du
    d_lng = grow - math.log1p(math.exp(u) * math.expm1(du) / math.expm1(u))
    d_lam = math.sinh(du / 2.0) / (math.sinh(-u_new / 2.0) * math.sinh(-u / 2.0))
    return d_lng, d_lam


def _spectrum(sc: GaussianScenario) -> tuple[float, float, float, float, float, float]:
    """(ν_R, ν_I, ν_R − x_R, ν_I − x_I, sinh²r, cosh r·sinh r) of the H1 covariance."""
    a, b, c = _standard_form(sc)
    root    = math.sqrt((a + b) ** 2 - 4.0 * c * c)
    pull    = -2.0 * c * c / (root + a + b)
    nu_r    = a + pull
    nu_i    = b + pull
    if min(nu_r, nu_i) < NU_FLOOR:
        raise UnphysicalCovarianceError(f"symplectic eigenvalues ({nu_r}, {nu_i}) below 1 at {sc}")
    sh2     = 2.0 * c * c / (root * (a + b + root))
    chsh    = c / root
    return nu_r, nu_i, 2.0 * sc.kappa * sc.n_s + pull, pull, sh2, chsh


def ln_overlap(sc: GaussianScenario, s: float) -> float:
    """ln Tr(ρ0^s ρ1^(1−s)) for the two zero-mean Gaussian states."""
    if s <= 0.0 or s >= 1.0:
        return 0.0
    x_r = 2.0 * sc.n_b + 1.0
    x_i = 2.0 * sc.n_s + 1.0
    _, _, d_r, d_i, sh2, chsh = _spectrum(sc)

    lng_r, dlam_r = _shift(1.0 - s, x_r, d_r)
    lng_i, dlam_i = _shift(1.0 - s, x_i, d_i)

    lam_r = _lam(1.0 - s, x_r) + dlam_r
    lam_i = _lam(1.0 - s, x_i) + dlam_i
    x0    = _lam(s, x_r) + _lam(1.0 - s, x_r)
    w0    = _lam(s, x_i) + _lam(1.0 - s, x_i)
    dx    = dlam_r + (lam_r + lam_i) * sh2
    dw    = dlam_i + (lam_r + lam_i) * sh2
    y     = (lam_r + lam_i) * chsh
    det_shift = x0 * dw + w0 * dx + dx * dw - y * y

    return lng_r + lng_i - math.log1p(det_shift / (x0 * w0))


def qcb_minimum(sc: GaussianScenario) -> tuple[float, float]:
    """(s*, ln Q_s*) by golden-section search over s ∈ (0, 1)."""
    symplectic = symplectic_eigenvalues(build_covariances(sc).v1)
    if symplectic.min() < NU_FLOOR:
        raise UnphysicalCovarianceError(f"symplectic eigenvalue {symplectic.min()} below 1 at {sc}")
    mid = ln_overlap(sc, 0.5)
    if mid >= 0.0:
        return 0.5, 0.0
    res = minimize_scalar(lambda s: ln_overlap(sc, s), bracket=(0.0, 0.5, 1.0), method="golden", tol=S_TOL)
    return float(res.x), min(float(res.fun), mid)


def gaussian_qcb_exponent(sc: GaussianScenario) -> float:
    """ξ = −ln min_s Q_s per signal-idler mode pair."""
    return -qcb_minimum(sc)[1]


def tan_penalty(sc: GaussianScenario) -> float:
    """Exponent per transmitted photon relative to the Nair-Gu exponent."""
    return gaussian_qcb_exponent(sc) * (sc.n_b + 1.0) / (sc.kappa * sc.n_s)


def solve_ns_for_penalty(kappa: float, n_b: float, target: float) -> float:
    """Signal brightness at which tan_penalty reaches `target`, by bisection on ln N_S."""
    if not 0.0 < target < 1.0:
        raise DomainError(f"target must lie in (0, 1), got {target!r}")

    def gap(ln_ns: float) -> float:
        return tan_penalty(GaussianScenario(kappa, n_b, math.exp(ln_ns))) - target

    lo, hi     = (math.log(v) for v in NS_BRACKET)
    g_lo, g_hi = gap(lo), gap(hi)
    log.debug("solve_ns bracket gaps (%.3g, %.3g)", g_lo, g_hi)
    if g_lo * g_hi > 0:
        raise NoRootError(
            f"tan penalty {target!r} not reached for N_S in [{NS_BRACKET[0]:.0e}, {NS_BRACKET[1]:.0e}] "
            f"(kappa={kappa}, n_b={n_b})"
        )
    ln_ns = bisect(gap, lo, hi, xtol=1e-13, maxiter=400)
    n_s   = math.exp(ln_ns)
    if abs(gap(ln_ns)) / target >= 1e-6:
        raise NoRootError(f"bisection stalled at N_S={n_s:.6g} for target {target!r}")
    return n_s


def tan_error_ub(sc: GaussianScenario, n_t_photons: float) -> LogProb:
    """Chernoff bound with N_T/N_S mode pairs."""
    require_finite(n_t_photons=n_t_photons)
    if n_t_photons < 0.0:
        raise DomainError(f"n_t_photons must be ≥ 0, got {n_t_photons!r}")
    return LogProb(-(n_t_photons / sc.n_s) * gaussian_qcb_exponent(sc) - math.log(2.0))
