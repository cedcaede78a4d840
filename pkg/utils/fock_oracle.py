"""
Exact single-shot statistics, without mean replacement.

Two independent routes:
  * reduced sums: mode-exchange symmetry collapses the M-mode sums to 2-D sums
    whose aggregate weights are negative binomial; windows are sized from
    analytic tail bounds, so the truncation error is guaranteed, not estimated.
  * brute force: ρ^(0), ρ^(1) and the POVM built in a truncated Fock space for M ≤ 4.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh, ishermitian
from scipy.special import gammaln

from utils.qi_core import CapacityError, DomainError, ScenarioParams, ShotProbs

log = logging.getLogger(__name__)

MAX_WINDOW     = 20_000_000
MAX_CELLS      = 200_000_000
CHUNK_CELLS    = 4_000_000
MAX_DIMENSION  = 50_000
MAX_BF_MODES   = 4
MAX_BF_CUTOFF  = 10
PHASE_DRAWS    = 8
_REFINE_TRIES  = 6


def _integer_modes(params: ScenarioParams, low: int = 2) -> int:
    if not params.is_integer_m or params.m < low:
        raise DomainError(f"the oracle needs integer M ≥ {low}, got {params.m!r}")
    return int(params.m)


def _require_rel_tol(rel_tol: float) -> None:
    if not 1e-14 < rel_tol < 1e-4:
        raise DomainError(f"rel_tol must lie in (1e-14, 1e-4), got {rel_tol!r}")


# ─── Negative-binomial windows ────────────────────────────────────────────────

@dataclass(frozen=True)
class Window:
    """Support points, pmf values and a bound on the pmf mass left outside."""

    k:        np.ndarray
    weights:  np.ndarray
    excluded: float


def _negbin_log_pmf(r: int, n_b: float, k: np.ndarray | float) -> np.ndarray | float:
    ln_t = math.log(n_b) - math.log1p(n_b)
    return gammaln(k + r) - gammaln(r) - gammaln(k + 1.0) - r * math.log1p(n_b) + k * ln_t


def negbin_window(r: int, n_b: float, tau: float) -> Window:
    """Thermal photons summed over r modes, windowed around the mode so that ≤ tau mass is dropped."""
    if r == 0 or n_b == 0.0:
        return Window(k=np.zeros(1), weights=np.ones(1), excluded=0.0)

    t    = n_b / (n_b + 1.0)
    mode = math.floor((r - 1) * n_b) if r > 1 else 0
    half = 8.0 * math.sqrt(r * n_b * (n_b + 1.0)) + 16.0

    while True:
        lo = max(0, math.floor(mode - half))
        hi = math.ceil(mode + half)
        if hi - lo > MAX_WINDOW:
            raise CapacityError(f"negative-binomial window for r={r}, n_b={n_b} exceeds {MAX_WINDOW} terms")

        up_ratio = t * (hi + r) / (hi + 1.0)
        upper    = math.inf
        if up_ratio < 1.0:
            upper = math.exp(_negbin_log_pmf(r, n_b, float(hi))) * up_ratio / (1.0 - up_ratio)

        lower = 0.0
        if lo > 0:
            down_ratio = lo / (t * (lo + r - 1.0))
            lower      = math.inf
            if down_ratio < 1.0:
                lower = math.exp(_negbin_log_pmf(r, n_b, float(lo))) * down_ratio / (1.0 - down_ratio)

        if upper + lower <= tau:
            break
        half *= 1.5

    k = np.arange(lo, hi + 1, dtype=float)
    return Window(k=k, weights=np.exp(_negbin_log_pmf(r, n_b, k)), excluded=upper + lower)


def _geometric_span(n_b: float, tail_bound, tau: float) -> int:
    """Smallest outer index L with tail_bound(L) ≤ tau."""
    if n_b == 0.0:
        return 1
    t     = n_b / (n_b + 1.0)
    span  = max(1, math.ceil(math.log(tau) / math.log(t)))
    while tail_bound(span) > tau:
        span = math.ceil(span * 1.2) + 1
        if span > MAX_WINDOW:
            raise CapacityError(f"geometric span for n_b={n_b} exceeds {MAX_WINDOW} terms")
    return span


def _window_sum(outer_k: np.ndarray, outer_w: np.ndarray, inner: Window, shift: float) -> tuple[float, float]:
    """Σ_i outer_w[i] Σ_k inner(k)/(outer_k[i] + k + shift) and Σ_i outer_w[i]/(outer_k[i] + shift)."""
    cells = outer_k.size * inner.k.size
    if cells > MAX_CELLS:
        raise CapacityError(f"reduced sum needs {cells:.3g} cells, cap is {MAX_CELLS:.0e}")
    log.debug("window sum: %d × %d cells", outer_k.size, inner.k.size)

    rows  = max(1, CHUNK_CELLS // inner.k.size)
    total = 0.0
    for start in range(0, outer_k.size, rows):
        ok    = outer_k[start:start + rows]
        denom = ok[:, None] + inner.k[None, :] + shift
        total += float(outer_w[start:start + rows] @ ((1.0 / denom) @ inner.weights))
    bound_scale = float(np.sum(outer_w / (outer_k + shift)))
    return total, bound_scale


def _refine(evaluate, rel_tol: float, scale: float) -> float:
    """Shrink the window tolerance until the analytic error bound is below rel_tol of the sum."""
    tau = max(0.01 * rel_tol * scale, 1e-300)
    for _ in range(_REFINE_TRIES):
        value, bound = evaluate(tau)
        if bound <= rel_tol * value or value == 0.0 and bound == 0.0:
            return value
        tau *= 1e-3
    raise CapacityError(f"could not reach rel_tol={rel_tol} (last bound {bound:.3g} on {value:.3g})")


# ─── Reduced sums ─────────────────────────────────────────────────────────────

def _single_mode_sum(m: int, n_b: float, tau: float, weight, tail_bound) -> tuple[float, float]:
    """Σ_{j≥1} weight(j) E[1/(j + K + M − 1)], K ~ thermal counts over the other M − 1 modes."""
    span  = _geometric_span(n_b, tail_bound, tau / 2.0)
    j     = np.arange(1, span + 1, dtype=float)
    inner = negbin_window(m - 1, n_b, tau / 2.0)
    value, scale = _window_sum(j, weight(j), inner, m - 1.0)
    return value, tail_bound(span) + inner.excluded * scale


def p_f_exact(params: ScenarioParams, rel_tol: float) -> float:
    """E[Ñ₁/(|Ñ| + M − 1)] over M thermal modes."""
    m = _integer_modes(params)
    _require_rel_tol(rel_tol)
    b = params.n_b
    if b == 0.0:
        return 0.0
    q, t = 1.0 / (b + 1.0), b / (b + 1.0)

    def evaluate(tau: float) -> tuple[float, float]:
        return _single_mode_sum(
            m, b, tau,
            weight=lambda j: j * q * t ** j,
            tail_bound=lambda span: t ** (span + 1),
        )

    return _refine(evaluate, rel_tol, b / (m * (b + 1.0)))


def _same_mode_part(params: ScenarioParams, m: int, rel_tol: float) -> float:
    b, kappa = params.n_b, params.kappa
    q, t = 1.0 / (b + 1.0), b / (b + 1.0)

    def weight(j: np.ndarray) -> np.ndarray:
        # j = n + 1; κ j² q³ t^(j−1) is the 1/N_B term with N_B folded into the power
        return j * q * t ** j * (1.0 - kappa * q) + kappa * j * j * q ** 3 * t ** (j - 1.0)

    def tail_bound(span: int) -> float:
        return t ** (span + 1) * (1.0 - kappa * q) + kappa * q * t ** span * (span + 1.0 - span * t)

    def evaluate(tau: float) -> tuple[float, float]:
        return _single_mode_sum(m, b, tau, weight, tail_bound)

    return _refine(evaluate, rel_tol, (kappa + b) / (m * (b + 1.0)))


def _cross_mode_part(params: ScenarioParams, m: int, rel_tol: float) -> float:
    """κ(M−1) Σ_{n,n′} w(n) w(n′) E[1/(n + n′ + K + M)], grouped by s = n + n′ (negative binomial, r = 4)."""
    b, kappa = params.n_b, params.kappa
    coeff = kappa * (m - 1.0)

    def evaluate(tau: float) -> tuple[float, float]:
        pairs = negbin_window(4, b, tau / (2.0 * kappa))
        inner = negbin_window(m - 2, b, tau / 2.0)
        value, scale = _window_sum(pairs.k, coeff * pairs.weights, inner, float(m))
        return value, kappa * pairs.excluded + inner.excluded * scale

    return _refine(evaluate, rel_tol, kappa * (m - 1.0) / (m * (b + 1.0)))


def p_d_exact_parts(params: ScenarioParams, rel_tol: float) -> tuple[float, float]:
    """(m = m′ part, m ≠ m′ part) of the exact detection probability."""
    m = _integer_modes(params)
    _require_rel_tol(rel_tol)
    same  = _same_mode_part(params, m, rel_tol)
    cross = _cross_mode_part(params, m, rel_tol) if params.kappa > 0.0 else 0.0
    return same, cross


def p_d_exact(params: ScenarioParams, rel_tol: float) -> float:
    same, cross = p_d_exact_parts(params, rel_tol)
    return same + cross


def pair_weight_total(n_b: float, cutoff: int) -> float:
    """Σ_{n,n′ ≤ cutoff} (n+1)(n′+1) N_B^(n+n′)/(N_B+1)^(n+n′+4); tends to 1."""
    n = np.arange(cutoff + 1, dtype=float)
    w = (n + 1.0) * (n_b / (n_b + 1.0)) ** n / (n_b + 1.0) ** 2
    return float(w.sum() ** 2)


def total_count_snr(params: ScenarioParams, delta: int = 0) -> float:
    """Mean-to-σ ratio of |Ñ| + M − δ from the windowed negative-binomial law."""
    m = _integer_modes(params, low=1)
    if params.n_b == 0.0:
        return math.inf
    win   = negbin_window(m, params.n_b, 1e-17)
    w     = win.weights / win.weights.sum()
    mean  = float(w @ win.k)
    var   = float(w @ (win.k - mean) ** 2)
    return (mean + m - delta) / math.sqrt(var)


# ─── Truncated Fock space ─────────────────────────────────────────────────────

@dataclass(frozen=True, order=True)
class FockLabel:
    """Photon numbers (N_1, …, N_M) of the returned modes."""

    occupations: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.occupations)

    def __getitem__(self, mode: int) -> int:
        """1-based mode access."""
        return self.occupations[mode - 1]

    def shifted(self, mode: int, by: int) -> "FockLabel":
        occ = list(self.occupations)
        occ[mode - 1] += by
        return FockLabel(tuple(occ))


def fock_labels(m: int, cutoff: int) -> list[FockLabel]:
    """All labels with total ≤ cutoff, ordered by total then lexicographically."""
    labels = [FockLabel(occ) for occ in itertools.product(range(cutoff + 1), repeat=m) if sum(occ) <= cutoff]
    return sorted(labels, key=lambda lab: (lab.total, lab.occupations))


def _thermal(n_b: float, n: int) -> float:
    return n_b ** n / (n_b + 1.0) ** (n + 1)


def _thermal_product(n_b: float, label: FockLabel, skip: tuple[int, ...] = ()) -> float:
    return math.prod(_thermal(n_b, n) for i, n in enumerate(label.occupations, start=1) if i not in skip)


def _check_pair(m: int, m_prime: int, n: FockLabel, n_prime: FockLabel) -> int:
    modes = len(n.occupations)
    if len(n_prime.occupations) != modes:
        raise DomainError("labels must cover the same number of modes")
    if modes < 2:
        raise DomainError(f"need M ≥ 2 modes, got {modes}")
    for idx in (m, m_prime):
        if not 1 <= idx <= modes:
            raise DomainError(f"mode index {idx} outside 1..{modes}")
    return modes


def rho0_element(m: int, m_prime: int, n: FockLabel, n_prime: FockLabel, params: ScenarioParams) -> complex:
    """⟨N|⟨e_m| ρ^(0) |e_m′⟩|N′⟩: thermal returns, maximally mixed idler."""
    modes = _check_pair(m, m_prime, n, n_prime)
    if m != m_prime or n != n_prime:
        return 0.0 + 0.0j
    return complex(_thermal_product(params.n_b, n) / modes)


def rho1_element(m: int, m_prime: int, n: FockLabel, n_prime: FockLabel, params: ScenarioParams) -> complex:
    """⟨N|⟨e_m| ρ^(1) |e_m′⟩|N′⟩ for the target-present return. Mode indices are 1-based."""
    modes = _check_pair(m, m_prime, n, n_prime)
    b, kappa = params.n_b, params.kappa

    if m == m_prime:
        if n != n_prime:
            return 0.0 + 0.0j
        n_m   = n[m]
        # κ N_m g(N_m)/(N_B(N_B+1)) with the N_B cancelled
        extra = kappa * n_m * b ** (n_m - 1) / (b + 1.0) ** (n_m + 2) if n_m >= 1 else 0.0
        value = _thermal(b, n_m) * (1.0 - kappa / (b + 1.0)) + extra
        return complex(_thermal_product(b, n, skip=(m,)) * value / modes)

    others_equal = all(
        n[i] == n_prime[i] for i in range(1, modes + 1) if i not in (m, m_prime)
    )
    if not (others_equal and n[m] == n_prime[m] + 1 and n_prime[m_prime] == n[m_prime] + 1):
        return 0.0 + 0.0j
    power = n[m_prime] + n_prime[m]
    value = (kappa / modes) * _thermal_product(b, n, skip=(m, m_prime))
    value *= b ** power / (b + 1.0) ** (power + 4) * math.sqrt((n[m_prime] + 1) * (n_prime[m] + 1))
    return complex(value)


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense operator on the (R label, idler mode) basis with the probability weight lost to truncation."""

    basis:     tuple[tuple[FockLabel, int], ...]
    entries:   np.ndarray
    tail_mass: float

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))


def truncated_dimension(m: int, cutoff: int) -> int:
    return math.comb(cutoff + m, m) * m


def _brute_force_args(params: ScenarioParams, cutoff: int) -> int:
    m = _integer_modes(params)
    if m > MAX_BF_MODES:
        raise DomainError(f"brute force supports M ≤ {MAX_BF_MODES}, got {m}")
    if int(cutoff) != cutoff or not 1 <= cutoff <= MAX_BF_CUTOFF:
        raise DomainError(f"cutoff must be an integer in 1..{MAX_BF_CUTOFF}, got {cutoff!r}")
    dim = truncated_dimension(m, cutoff)
    if dim > MAX_DIMENSION:
        raise CapacityError(f"truncated dimension {dim} exceeds {MAX_DIMENSION}")
    return m


def _basis(m: int, cutoff: int) -> tuple[tuple[FockLabel, int], ...]:
    return tuple((lab, idler) for lab in fock_labels(m, cutoff) for idler in range(1, m + 1))


def tail_mass(params: ScenarioParams, cutoff: int, operator: str = "rho0") -> float:
    """Trace weight of ρ^(0) or ρ^(1) on labels with more than `cutoff` photons."""
    m = _integer_modes(params, low=1)
    b = params.n_b
    q, t = 1.0 / (b + 1.0), b / (b + 1.0)
    kept = 0.0
    for total in range(cutoff + 1):
        weight = math.comb(total + m - 1, total) * q ** m * t ** total
        if operator == "rho1":
            # Σ_m κ N_m/(M N_B(N_B+1)) averaged over the shell, N_B cancelled
            bonus  = params.kappa * total * math.comb(total + m - 1, total) * q ** (m + 2) * t ** (total - 1) / m \
                if total >= 1 else 0.0
            weight = weight * (1.0 - params.kappa * q) + bonus
        elif operator != "rho0":
            raise DomainError(f"operator must be 'rho0' or 'rho1', got {operator!r}")
        kept += weight
    return max(0.0, 1.0 - kept)


def truncated_rho0(params: ScenarioParams, cutoff: int) -> TruncatedOperator:
    m     = _brute_force_args(params, cutoff)
    basis = _basis(m, cutoff)
    diag  = [rho0_element(idler, idler, lab, lab, params) for lab, idler in basis]
    return TruncatedOperator(basis=basis, entries=np.diag(np.array(diag, dtype=complex)),
                             tail_mass=tail_mass(params, cutoff, "rho0"))


def truncated_rho1(params: ScenarioParams, cutoff: int) -> TruncatedOperator:
    m       = _brute_force_args(params, cutoff)
    basis   = _basis(m, cutoff)
    index   = {key: i for i, key in enumerate(basis)}
    entries = np.zeros((len(basis), len(basis)), dtype=complex)

    for row, (lab, idler) in enumerate(basis):
        entries[row, row] = rho1_element(idler, idler, lab, lab, params)
        if lab[idler] == 0:
            continue
        for other in range(1, m + 1):
            if other == idler:
                continue
            col_lab = lab.shifted(idler, -1).shifted(other, 1)
            col     = index[(col_lab, other)]
            entries[row, col] = rho1_element(idler, other, lab, col_lab, params)

    return TruncatedOperator(basis=basis, entries=entries, tail_mass=tail_mass(params, cutoff, "rho1"))


def povm_vectors(m: int, cutoff: int, basis: tuple[tuple[FockLabel, int], ...]) -> np.ndarray:
    """Columns |ψ_N⟩ = Σ_m √((N_m+1)/(|N|+M)) |N + e_m⟩|e_m⟩ for every |N| ≤ cutoff − 1."""
    index  = {key: i for i, key in enumerate(basis)}
    labels = [lab for lab in fock_labels(m, cutoff - 1)]
    psi    = np.zeros((len(basis), len(labels)))
    for col, lab in enumerate(labels):
        for mode in range(1, m + 1):
            row = index[(lab.shifted(mode, 1), mode)]
            psi[row, col] = math.sqrt((lab[mode] + 1) / (lab.total + m))
    return psi


# ─── Brute force ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class OracleDiagnostics:
    trace_rho1:                float
    min_eigenvalue:            float
    projector_residual:        float
    phase_invariance_residual: float
    orthonormality_residual:   float
    hermitian_residual:        float
    tail_mass_rho0:            float
    tail_mass_rho1:            float


def _min_eigenvalue(op: TruncatedOperator) -> float:
    """Smallest eigenvalue, computed per photon-number shell (the operator never couples shells)."""
    shells: dict[int, list[int]] = {}
    for i, (lab, _) in enumerate(op.basis):
        shells.setdefault(lab.total, []).append(i)
    lowest = math.inf
    for idx in shells.values():
        block  = op.entries[np.ix_(idx, idx)]
        lowest = min(lowest, float(eigvalsh(block).min()))
    return lowest


def rotate_phases(op: TruncatedOperator, phases: np.ndarray, counter_rotate_idler: bool = True) -> np.ndarray:
    """U op U† for U = Π_m e^(iφ_m N_m) on the returns, times e^(−iφ_m) on idler |e_m⟩ unless disabled.

    ρ^(1) is invariant under the paired rotation; return phases alone flip the m ≠ m′ coherences.
    """
    phases = np.asarray(phases, dtype=float)
    angle  = np.array([np.dot(phases, lab.occupations) - (phases[idler - 1] if counter_rotate_idler else 0.0)
                       for lab, idler in op.basis])
    u      = np.exp(1j * angle)
    return u[:, None] * op.entries * u.conj()[None, :]


def _phase_residual(rho1: TruncatedOperator, psi: np.ndarray, p_d: float, seed: int) -> float:
    """Largest change in Tr(Π₁ρ^(1)) over random per-mode phase tuples applied with their idler counter-phase."""
    m     = len(rho1.basis[0][0].occupations)
    rng   = np.random.default_rng(seed)
    worst = 0.0
    for phases in rng.uniform(0.0, 2.0 * math.pi, size=(PHASE_DRAWS, m)):
        rotated = rotate_phases(rho1, phases)
        p_phi   = float(np.real(np.sum((rotated @ psi) * psi)))
        worst   = max(worst, abs(p_phi - p_d))
    return worst


def brute_force(params: ScenarioParams, cutoff: int, seed: int = 0) -> tuple[ShotProbs, OracleDiagnostics]:
    """p_F, p_D as Tr(Π₁ρ) on the truncated space, with consistency diagnostics."""
    m    = _brute_force_args(params, cutoff)
    rho0 = truncated_rho0(params, cutoff)
    rho1 = truncated_rho1(params, cutoff)
    psi  = povm_vectors(m, cutoff, rho1.basis)
    log.debug("brute force: M=%d cutoff=%d dimension=%d POVM vectors=%d", m, cutoff, rho1.dimension, psi.shape[1])

    p_f = float(np.real(np.diag(rho0.entries)) @ np.sum(psi * psi, axis=1))
    p_d = float(np.real(np.sum((rho1.entries @ psi) * psi)))

    gram    = psi.T @ psi
    proj    = psi @ psi.T
    herm_ok = ishermitian(rho1.entries, atol=1e-12)
    if not herm_ok:
        log.warning("ρ^(1) not Hermitian to 1e-12 at %s", params)

    diagnostics = OracleDiagnostics(
        trace_rho1=float(np.real(np.trace(rho1.entries))),
        min_eigenvalue=_min_eigenvalue(rho1),
        projector_residual=float(np.max(np.abs(proj @ proj - proj))),
        phase_invariance_residual=_phase_residual(rho1, psi, p_d, seed),
        orthonormality_residual=float(np.max(np.abs(gram - np.eye(gram.shape[0])))),
        hermitian_residual=rho1.hermitian_residual(),
        tail_mass_rho0=rho0.tail_mass,
        tail_mass_rho1=rho1.tail_mass,
    )
    return ShotProbs(min(max(p_f, 0.0), 1.0), min(max(p_d, 0.0), 1.0)), diagnostics
