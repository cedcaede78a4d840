"""
Error-probability curves.
Chernoff bounds versus transmitted photons for the Bell-state system at its table dimensionality
and the squeezed-vacuum system at its solved brightness, with the Nair-Gu and coherent-state baselines.
"""

import logging
import math
from dataclasses import dataclass

import pandas as pd

from commands import ONE_DB_OFF, checked, default_scenarios, ordered_map, reference_ns, rel_dev
from utils.config import RunConfig, Scenario
from utils.gaussian_qi import GaussianScenario, solve_ns_for_penalty, tan_error_ub
from utils.multi_shot import ChernoffResult, chernoff_bound, solve_m_for_penalty
from utils.output import Report
from utils.qi_core import ScenarioParams, cs_chernoff_ub, log_grid, nair_gu_error_lb
from utils.single_shot import shot_probs

log = logging.getLogger(__name__)

N_T_GRID = (0.0,) + tuple(float(round(n)) for n in log_grid(2.0, 7.0, 21))
_LN2     = math.log(2.0)


@dataclass(frozen=True)
class OperatingPoint:
    """Both systems tuned to the same penalty."""

    params:        ScenarioParams
    gaussian:      GaussianScenario
    chernoff:      ChernoffResult
    n_s_reference: float

    @property
    def ns_rel_dev(self) -> float:
        return rel_dev(self.gaussian.n_s, self.n_s_reference)


def operating_point(sc: Scenario) -> OperatingPoint:
    """M from the scenario or the penalty solver, N_S likewise."""
    target = sc.target if sc.target is not None else ONE_DB_OFF
    m      = sc.m[0] if sc.m else solve_m_for_penalty(sc.kappa, sc.n_b, target)
    n_s    = sc.n_s[0] if sc.n_s else solve_ns_for_penalty(sc.kappa, sc.n_b, target)
    params = ScenarioParams(sc.kappa, sc.n_b, m)
    log.info("operating point kappa=%g n_b=%g: M=%.4g N_S=%.5g", sc.kappa, sc.n_b, m, n_s)
    return OperatingPoint(params=params,
                          gaussian=GaussianScenario(sc.kappa, sc.n_b, n_s),
                          chernoff=chernoff_bound(shot_probs(params), 1),
                          n_s_reference=reference_ns(sc.kappa, sc.n_b, target))


def ns_notes(points: list[OperatingPoint]) -> list[str]:
    """One note per operating point whose brightness misses the published value by more than 0.5%."""
    return [
        f"n_b={p.params.n_b:g}: N_S={p.gaussian.n_s:.5g} against published {p.n_s_reference:.5g}"
        for p in points if abs(p.ns_rel_dev) > 0.005
    ]


def validate_scenarios(config: RunConfig) -> tuple[Scenario, ...]:
    scenarios = default_scenarios(config)
    for i, sc in enumerate(scenarios):
        checked(lambda: ScenarioParams(sc.kappa, sc.n_b, sc.m[0] if sc.m else 1.0), f"scenario {i}")
        if sc.n_s:
            checked(lambda: GaussianScenario(sc.kappa, sc.n_b, sc.n_s[0]), f"scenario {i}")
    return scenarios


def _block(sc: Scenario) -> tuple[OperatingPoint, list[dict]]:
    point = operating_point(sc)
    rows  = []
    for n_t in sc.n_t or N_T_GRID:
        shots = int(n_t)
        if shots == 0:
            ng, cs = -math.log(4.0), -_LN2
        else:
            ng = nair_gu_error_lb(point.params, shots).ln_p
            cs = cs_chernoff_ub(point.params, shots).ln_p
        rows.append({
            "kappa":           sc.kappa,
            "n_b":             sc.n_b,
            "m_pannu":         point.params.m,
            "n_s_tan":         point.gaussian.n_s,
            "n_s_reference":   point.n_s_reference,
            "ns_rel_dev":      point.ns_rel_dev,
            "n_t":             shots,
            "ln_pr_e_pannu":   point.chernoff.ln_bound(shots).ln_p,
            "ln_pr_e_tan":     tan_error_ub(point.gaussian, float(shots)).ln_p,
            "ln_pr_e_nair_gu": ng,
            "ln_pr_e_coherent": cs,
        })
    return point, rows


def run(config: RunConfig) -> Report:
    scenarios = validate_scenarios(config)
    blocks    = ordered_map(_block, scenarios, config.threads)
    rows      = pd.DataFrame([row for _, block in blocks for row in block])
    return Report(command="pe-curves", rows=rows, notes=ns_notes([point for point, _ in blocks]))
