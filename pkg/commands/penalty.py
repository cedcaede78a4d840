"""
Penalty curves.
Penalty ℰ(κ, N_B, M) over a log-spaced M grid per scenario; rows below M_0 are flagged, not dropped.
"""

import logging
import math

import pandas as pd

from commands import checked, default_scenarios, ordered_map
from utils.config import RunConfig
from utils.multi_shot import penalty
from utils.output import Report
from utils.qi_core import BelowThresholdError, ScenarioParams, cs_parity_penalty, log_grid, penalty_db
from utils.single_shot import m0_threshold

log = logging.getLogger(__name__)

M_GRID = tuple(float(m) for m in log_grid(2.0, 16.0, 29))


def _row(params: ScenarioParams) -> dict:
    m0     = m0_threshold(params.kappa, params.n_b)
    parity = cs_parity_penalty(params.n_b)
    try:
        value = penalty(params).penalty
        below = 0
    except BelowThresholdError:
        log.warning("M=%.4g below M_0=%.4g for kappa=%g, n_b=%g", params.m, m0, params.kappa, params.n_b)
        value = math.nan
        below = 1
    return {
        "kappa":                params.kappa,
        "n_b":                  params.n_b,
        "m":                    params.m,
        "m0":                   m0,
        "penalty":              value,
        "penalty_db":           penalty_db(value) if not below else math.nan,
        "cs_parity_penalty":    parity,
        "beats_coherent_state": int(not below and value > parity),
        "below_threshold":      below,
    }


def run(config: RunConfig) -> Report:
    points = []
    for i, sc in enumerate(default_scenarios(config)):
        grid = sc.m or M_GRID
        points += [checked(lambda m=m: ScenarioParams(sc.kappa, sc.n_b, m), f"scenario {i}") for m in grid]

    log.info("penalty: %d points", len(points))
    rows = ordered_map(_row, points, config.threads)
    return Report(command="penalty", rows=pd.DataFrame(rows))
