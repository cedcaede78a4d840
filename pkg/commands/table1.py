"""
Dimensionality table.
M needed for a target penalty at each noise level, next to the published values.
"""

import logging
import math

import pandas as pd

from commands import (
    EXIT_NO_ROOT,
    EXIT_OK,
    KAPPA,
    NO_ADVANTAGE,
    NOISE_LEVELS,
    ONE_DB_OFF,
    checked,
    ordered_map,
    reference_m,
    rel_dev,
)
from utils.config import RunConfig
from utils.multi_shot import penalty, solve_m_for_penalty
from utils.output import Report
from utils.qi_core import ConfigError, NoRootError, ScenarioParams, cs_parity_penalty
from utils.single_shot import m0_threshold

log = logging.getLogger(__name__)


def _targets(config: RunConfig) -> list[tuple[float, float, float]]:
    if not config.scenarios:
        return [(KAPPA, n_b, target) for n_b in NOISE_LEVELS for target in (ONE_DB_OFF, NO_ADVANTAGE)]
    out = []
    for i, sc in enumerate(config.scenarios):
        targets = (sc.target,) if sc.target is not None else (ONE_DB_OFF, NO_ADVANTAGE)
        for target in targets:
            checked(lambda: ScenarioParams(sc.kappa, sc.n_b, 1.0), f"scenario {i}")
            if not 0.0 < target < 1.0:
                raise ConfigError(f"scenario {i}: target {target!r} outside (0, 1)")
            out.append((sc.kappa, sc.n_b, target))
    return out


def _row(job: tuple[float, float, float]) -> dict:
    kappa, n_b, target = job
    ref = reference_m(n_b, target) if kappa == KAPPA else math.nan
    row = {
        "kappa":             kappa,
        "n_b":               n_b,
        "target":            target,
        "m0":                m0_threshold(kappa, n_b),
        "cs_parity_penalty": cs_parity_penalty(n_b),
        "m":                 math.nan,
        "m_reference":       ref,
        "rel_dev":           math.nan,
        "penalty_at_m":      math.nan,
        "error":             "",
    }
    try:
        m = solve_m_for_penalty(kappa, n_b, target)
    except NoRootError as exc:
        log.warning("no root for kappa=%g n_b=%g target=%g: %s", kappa, n_b, target, exc)
        row["error"] = "no_root"
        return row
    row["m"]            = m
    row["rel_dev"]      = rel_dev(m, ref)
    row["penalty_at_m"] = penalty(ScenarioParams(kappa, n_b, m)).penalty
    return row


def run(config: RunConfig) -> Report:
    jobs = _targets(config)
    log.info("table1: %d solves", len(jobs))
    rows   = pd.DataFrame(ordered_map(_row, jobs, config.threads))
    missed = rows[rows["error"] != ""]
    notes  = [f"no root for n_b={r.n_b:g} target={r.target:.6g}" for r in missed.itertuples()]
    failed = not missed.empty
    return Report(command="table1", rows=rows, passed=not failed,
                  exit_code=EXIT_NO_ROOT if failed else EXIT_OK, notes=notes)
