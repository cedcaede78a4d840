"""
Report serialisation.
CSV via pandas with fixed float formatting; JSON as {meta, rows} with sorted keys. Same inputs, same bytes.
Report notes go to meta only; CSV carries rows alone.
"""

import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from utils import __version__
from utils.config import RunConfig

FLOAT_FORMAT = "%.12e"


@dataclass
class Report:
    """Rows produced by one command plus its overall outcome."""

    command:   str
    rows:      pd.DataFrame
    passed:    bool = True
    exit_code: int = 0
    notes:     list[str] = field(default_factory=list)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if hasattr(value, "item"):
        return _json_value(value.item())
    return value


def to_csv(report: Report) -> str:
    return report.rows.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def to_json(report: Report, config: RunConfig) -> str:
    rows = [{k: _json_value(v) for k, v in rec.items()} for rec in report.rows.to_dict(orient="records")]
    doc  = {
        "meta": {
            "command": report.command,
            "version": __version__,
            "passed":  report.passed,
            "notes":   list(report.notes),
            "config":  config.echo(),
        },
        "rows": rows,
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render(report: Report, config: RunConfig) -> str:
    return to_json(report, config) if config.fmt == "json" else to_csv(report)


def write(report: Report, config: RunConfig) -> None:
    text = render(report, config)
    if config.out is None:
        sys.stdout.write(text)
        return
    path = Path(config.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
