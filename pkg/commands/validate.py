"""
Validation suite.
Drives the exact oracle, brute-force truncated-space construction, Chernoff dominance and Monte Carlo checks.
Each check is one row; any failure makes the command exit with status 2.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from commands import EXIT_OK, EXIT_VALIDATION, KAPPA, TABLE1_REFERENCE, checked
from utils.config import RunConfig, Scenario
from utils.fock_oracle import brute_force, p_d_exact, p_f_exact
from utils.multi_shot import (
    chernoff_bound,
    chernoff_s_opt,
    exact_error,
    ln_overlap,
    mc_error,
)
from utils.output import Report
from utils.qi_core import NullScenario, QIError, ScenarioParams, ShotProbs
from utils.single_shot import corrected_probs, delta_d, delta_f, p_d_approx, p_f_approx, shot_probs

log = logging.getLogger(__name__)

RANDOM_TUPLES   = 200
BAND_POINT      = (0.01, 1.0, 200.0)
LOW_NOISE_POINT = (0.01, 0.2, 200.0)
BRUTE_POINT     = (0.1, 0.2, 2.0)
BRUTE_CUTOFF    = 8
MC_POINT        = (0.1, 1.0, 500.0)
MC_SHOTS        = 200


def _check(name: str, passed: bool, value: float, bound: float, detail: str = "") -> dict:
    return {"check": name, "passed": int(bool(passed)), "value": float(value), "bound": float(bound), "detail": detail}


def _guarded(name: str, fn: Callable[[], list[dict]]) -> list[dict]:
    """Run a group of checks; a library error becomes one failed row."""
    try:
        return fn()
    except QIError as exc:
        log.warning("check %s raised %s: %s", name, type(exc).__name__, exc)
        return [_check(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}")]


# ── Oracle bands ──────────────────────────────────────────────────────────────

def oracle_band_checks(params: ScenarioParams, rel_tol: float, tag: str = "") -> list[dict]:
    pf_x, pd_x = p_f_exact(params, rel_tol), p_d_exact(params, rel_tol)
    pf_a, pd_a = p_f_approx(params), p_d_approx(params)
    d_f, d_d   = delta_f(params), delta_d(params)
    corr       = corrected_probs(params).corrected
    x          = params.m * (params.n_b + 1.0)
    floor      = pf_a * (1.0 - 2.0 * (params.n_b + 1.0) / (x - 1.0))

    err_pf, err_pf_corr = abs(pf_x - pf_a), abs(pf_x - corr.p_f)
    err_pd, err_pd_corr = abs(pd_x - pd_a), abs(pd_x - corr.p_d)
    rows = [
        _check(f"pf_band{tag}", err_pf <= 2.0 * d_f, err_pf, 2.0 * d_f),
        _check(f"pf_below_approx{tag}", floor < pf_x < pf_a or params.n_b == 0.0, pf_x, pf_a,
               f"lower edge {floor:.12e}"),
        _check(f"pd_band{tag}", err_pd <= 2.0 * d_d, err_pd, 2.0 * d_d),
        _check(f"pd_correction_closer{tag}", err_pd_corr < err_pd or d_d == 0.0, err_pd_corr, err_pd),
    ]
    # The n = 1 correction overshoots p_F once N_B ≥ 1; it must still stay within Δ_F
    if x * (1.0 - params.n_b) > 2.0:
        rows.append(_check(f"pf_correction_closer{tag}", err_pf_corr < err_pf, err_pf_corr, err_pf))
    else:
        rows.append(_check(f"pf_correction_within_delta{tag}", err_pf_corr <= d_f, err_pf_corr, d_f,
                           f"uncorrected error {err_pf:.12e}"))
    return rows


def pf_correction_check(params: ScenarioParams, rel_tol: float) -> list[dict]:
    """Below N_B = 1 the corrected false-alarm probability must land closer to exact."""
    exact  = p_f_exact(params, rel_tol)
    before = abs(exact - p_f_approx(params))
    after  = abs(exact - corrected_probs(params).corrected.p_f)
    return [_check("pf_correction_closer_low_noise", after < before, after, before)]


def null_scenario_check(rel_tol: float) -> list[dict]:
    _, n_b, m = BAND_POINT
    null = NullScenario(0.0, n_b, m)
    pf, pd = p_f_exact(null, rel_tol), p_d_exact(null, rel_tol)
    gap = abs(pd - pf) / pf
    return [_check("null_scenario_pd_equals_pf", gap <= 10.0 * rel_tol, gap, 10.0 * rel_tol)]


# ── Brute force ───────────────────────────────────────────────────────────────

def brute_force_checks(params: ScenarioParams, cutoff: int, rel_tol: float, seed: int) -> list[dict]:
    probs, diag = brute_force(params, cutoff, seed=seed)
    pf_x, pd_x  = p_f_exact(params, rel_tol), p_d_exact(params, rel_tol)
    budget_f    = 1e-4 + diag.tail_mass_rho0
    budget_d    = 1e-4 + diag.tail_mass_rho1
    return [
        _check("bf_pf_agreement", abs(probs.p_f - pf_x) <= budget_f, abs(probs.p_f - pf_x), budget_f),
        _check("bf_pd_agreement", abs(probs.p_d - pd_x) <= budget_d, abs(probs.p_d - pd_x), budget_d),
        _check("bf_trace", 1.0 - 2.0 * diag.tail_mass_rho1 - 1e-12 <= diag.trace_rho1 <= 1.0 + 1e-12,
               diag.trace_rho1, 1.0 - 2.0 * diag.tail_mass_rho1),
        _check("bf_min_eigenvalue", diag.min_eigenvalue >= -1e-10, diag.min_eigenvalue, -1e-10),
        _check("bf_hermitian", diag.hermitian_residual < 1e-12, diag.hermitian_residual, 1e-12),
        _check("bf_projector", diag.projector_residual < 1e-10, diag.projector_residual, 1e-10),
        _check("bf_orthonormal", diag.orthonormality_residual < 1e-12, diag.orthonormality_residual, 1e-12),
        _check("bf_phase_invariance", diag.phase_invariance_residual < 1e-12, diag.phase_invariance_residual, 1e-12),
    ]


# ── Chernoff and exact error ──────────────────────────────────────────────────

def random_shot_tuples(seed: int, count: int = RANDOM_TUPLES) -> list[tuple[ShotProbs, int]]:
    """Well-separated (p_F, p_D, N_T) draws: p_F log-uniform in [1e-6, 0.3], p_D/p_F in [2, 50]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        p_f   = 10.0 ** rng.uniform(-6.0, math.log10(0.3))
        top   = min(50.0, 0.95 / p_f)
        ratio = 10.0 ** rng.uniform(math.log10(2.0), math.log10(top))
        out.append((ShotProbs(p_f, p_f * ratio), int(rng.integers(1, 5001))))
    return out


def golden_s(probs: ShotProbs) -> float:
    res = minimize_scalar(lambda s: ln_overlap(probs, s), bracket=(0.0, 0.5, 1.0), method="golden", tol=1e-12)
    return float(res.x)


def dominance_checks(cases: list[tuple[ShotProbs, int]], name: str) -> list[dict]:
    worst_gap, worst_s = -math.inf, 0.0
    for probs, n_t in cases:
        bound     = chernoff_bound(probs, n_t).ln_bound(n_t).ln_p
        exact     = exact_error(probs, n_t).ln_p
        worst_gap = max(worst_gap, exact - bound)
        worst_s   = max(worst_s, abs(chernoff_s_opt(probs) - golden_s(probs)))
    return [
        _check(f"{name}_exact_below_chernoff", worst_gap <= 1e-12, worst_gap, 1e-12, f"{len(cases)} tuples"),
        _check(f"{name}_s_opt_matches_golden", worst_s < 1e-6, worst_s, 1e-6, f"{len(cases)} tuples"),
    ]


def table1_cases() -> list[tuple[ShotProbs, int]]:
    return [(shot_probs(ScenarioParams(KAPPA, n_b, m)), n_t)
            for (n_b, _), m in TABLE1_REFERENCE.items() for n_t in (1000, 100_000)]


# ── Monte Carlo ───────────────────────────────────────────────────────────────

def monte_carlo_checks(config: RunConfig) -> list[dict]:
    probs = shot_probs(ScenarioParams(*MC_POINT))
    exact = exact_error(probs, MC_SHOTS).prob
    est   = mc_error(probs, MC_SHOTS, config.trials, config.seed, threads=1)
    again = mc_error(probs, MC_SHOTS, config.trials, config.seed, threads=max(2, config.threads))
    dev   = abs(est.p_err_hat - exact)
    return [
        _check("mc_agreement", dev <= 3.0 * est.std_err, dev, 3.0 * est.std_err,
               f"estimate {est.p_err_hat:.12e} exact {exact:.12e}"),
        _check("mc_thread_invariance", again == est, again.p_err_hat, est.p_err_hat),
    ]


# ── Scenario-driven checks ────────────────────────────────────────────────────

@dataclass(frozen=True)
class CheckedScenario:
    """A scenario whose parameter objects were built before any check ran."""

    index:  int
    source: Scenario
    probs:  ShotProbs | None
    params: ScenarioParams | None


def validate_scenarios(config: RunConfig) -> list[CheckedScenario]:
    out = []
    for i, sc in enumerate(config.scenarios):
        probs = params = None
        if sc.p_f is not None and sc.p_d is not None:
            probs = checked(lambda: ShotProbs(sc.p_f, sc.p_d), f"scenario {i}")
        if sc.m:
            params = checked(lambda: ScenarioParams(sc.kappa, sc.n_b, sc.m[0]), f"scenario {i}")
        out.append(CheckedScenario(index=i, source=sc, probs=probs, params=params))
    return out


def scenario_checks(item: CheckedScenario, config: RunConfig) -> list[dict]:
    i, sc = item.index, item.source
    rows: list[dict] = []
    if item.probs is not None:
        probs = item.probs
        shots = [int(n) for n in (sc.n_t or (100.0,))]
        rows += _guarded(f"scenario{i}_chernoff", lambda: dominance_checks([(probs, n) for n in shots], f"scenario{i}"))
    if item.params is not None:
        params = item.params
        if sc.cutoff is not None:
            rows += _guarded(f"scenario{i}_brute_force",
                             lambda: brute_force_checks(params, sc.cutoff, config.rel_tol, config.seed))
        else:
            rows += _guarded(f"scenario{i}_oracle",
                             lambda: oracle_band_checks(params, config.rel_tol, f"_scenario{i}"))
    return rows


def default_suite(config: RunConfig) -> list[dict]:
    rel_tol = config.rel_tol
    rows: list[dict] = []
    rows += _guarded("oracle_bands", lambda: oracle_band_checks(ScenarioParams(*BAND_POINT), rel_tol))
    rows += _guarded("oracle_low_noise", lambda: pf_correction_check(ScenarioParams(*LOW_NOISE_POINT), rel_tol))
    rows += _guarded("null_scenario", lambda: null_scenario_check(rel_tol))
    rows += _guarded("brute_force", lambda: brute_force_checks(ScenarioParams(*BRUTE_POINT), BRUTE_CUTOFF,
                                                               rel_tol, config.seed))
    rows += _guarded("table1_dominance", lambda: dominance_checks(table1_cases(), "table1"))
    rows += _guarded("random_dominance", lambda: dominance_checks(random_shot_tuples(config.seed), "random"))
    rows += _guarded("monte_carlo", lambda: monte_carlo_checks(config))
    return rows


def run(config: RunConfig) -> Report:
    if config.scenarios:
        items = validate_scenarios(config)
        rows  = [row for item in items for row in scenario_checks(item, config)]
    else:
        rows = default_suite(config)

    frame  = pd.DataFrame(rows, columns=["check", "passed", "value", "bound", "detail"])
    passed = bool(len(frame)) and bool(frame["passed"].all())
    failed = [row for row in rows if not row["passed"]]
    for row in failed:
        log.warning("check failed: %s (value %s, bound %s) %s", row["check"], row["value"], row["bound"], row["detail"])
    log.info("validate: %d checks, %d failed", len(frame), int((frame["passed"] == 0).sum()))
    return Report(command="validate", rows=frame, passed=passed, exit_code=EXIT_OK if passed else EXIT_VALIDATION,
                  notes=[f"failed: {row['check']}" for row in failed])
