"""
Dimensionality ratio.
For each target error probability, how many squeezed-vacuum mode pairs the Gaussian system needs
against the Bell-state dimensionality per pulse.
"""

import math

import pandas as pd

from commands import ordered_map
from commands.pe_curves import OperatingPoint, ns_notes, operating_point, validate_scenarios
from utils.config import RunConfig, Scenario
from utils.gaussian_qi import gaussian_qcb_exponent
from utils.output import Report
from utils.qi_core import ConfigError, log_grid

PR_E_GRID = tuple(float(p) for p in log_grid(-6.0, -1.0, 11))


def _block(sc: Scenario) -> tuple[OperatingPoint, list[dict]]:
    point  = operating_point(sc)
    xi     = gaussian_qcb_exponent(point.gaussian)
    n_s    = point.gaussian.n_s
    rows   = []
    for pr_e in sc.pr_e or PR_E_GRID:
        depth     = -math.log(2.0 * pr_e)          # ln of the 1/2 prefactor over Pr(e)
        n_t_pannu = depth / -point.chernoff.ln_q
        n_t_tan   = depth * n_s / xi
        m_tan     = n_t_tan / n_s
        rows.append({
            "kappa":         sc.kappa,
            "n_b":           sc.n_b,
            "pr_e":          pr_e,
            "m_pannu":       point.params.m,
            "n_s_tan":       n_s,
            "n_s_reference": point.n_s_reference,
            "ns_rel_dev":    point.ns_rel_dev,
            "n_t_pannu":     n_t_pannu,
            "n_t_tan":       n_t_tan,
            "m_tan":         m_tan,
            "ratio":         point.params.m / m_tan,
        })
    return point, rows


def run(config: RunConfig) -> Report:
    scenarios = validate_scenarios(config)
    for i, sc in enumerate(scenarios):
        if sc.pr_e and not all(0.0 < p < 0.5 for p in sc.pr_e):
            raise ConfigError(f"scenario {i}: pr_e values must lie in (0, 0.5)")
    blocks = ordered_map(_block, scenarios, config.threads)
    rows   = pd.DataFrame([row for _, block in blocks for row in block])
    return Report(command="dim-ratio", rows=rows, notes=ns_notes([point for point, _ in blocks]))
