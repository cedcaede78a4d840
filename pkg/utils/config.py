"""
Run configuration.
Precedence: command-line flag > TOML scenario file > environment (.env) > built-in default.
"""

import math
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # Python 3.10: tomli is the same API under another name
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from utils.qi_core import ConfigError, log_grid

load_dotenv()

FORMATS = ("csv", "json")

# ── Environment defaults ──────────────────────────────────────────────────────

DEFAULT_SEED     = 42
DEFAULT_THREADS  = 1
DEFAULT_REL_TOL  = 1e-10
DEFAULT_TRIALS   = 100_000
DEFAULT_FORMAT   = "csv"


def _env(name: str, cast, default):
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"environment variable {name}={raw!r} is not a valid {cast.__name__}") from exc


# ── Types ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Scenario:
    """One [[scenario]] table. Grids are tuples of floats; unset grids fall back to command defaults."""

    kappa:  float
    n_b:    float
    m:      tuple[float, ...] | None = None
    n_s:    tuple[float, ...] | None = None
    n_t:    tuple[float, ...] | None = None
    pr_e:   tuple[float, ...] | None = None
    target: float | None = None
    cutoff: int | None = None
    p_f:    float | None = None
    p_d:    float | None = None


@dataclass(frozen=True)
class RunConfig:
    scenarios: tuple[Scenario, ...] = ()
    fmt:       str = DEFAULT_FORMAT
    out:       Path | None = None
    seed:      int = DEFAULT_SEED
    rel_tol:   float = DEFAULT_REL_TOL
    threads:   int = DEFAULT_THREADS
    trials:    int = DEFAULT_TRIALS
    source:    str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.fmt not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.fmt!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not 1e-14 < self.rel_tol < 1e-4:
            raise ConfigError(f"rel_tol must lie in (1e-14, 1e-4), got {self.rel_tol!r}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigError(f"threads must be a positive integer, got {self.threads!r}")
        if int(self.trials) != self.trials or self.trials < 1000:
            raise ConfigError(f"trials must be an integer ≥ 1000, got {self.trials!r}")

    def echo(self) -> dict:
        """Plain-data copy for the JSON meta block; excludes the output path."""
        return {
            "format":    self.fmt,
            "seed":      self.seed,
            "rel_tol":   self.rel_tol,
            "threads":   self.threads,
            "trials":    self.trials,
            "source":    self.source,
            "scenarios": [{k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(sc).items() if v is not None}
                          for sc in self.scenarios],
        }


# ── Parsing ───────────────────────────────────────────────────────────────────

def _grid(name: str, raw) -> tuple[float, ...]:
    if isinstance(raw, (int, float)):
        raw = [raw]
    if isinstance(raw, list):
        values = tuple(float(v) for v in raw)
    elif isinstance(raw, dict):
        try:
            values = tuple(float(v) for v in log_grid(raw["log10_start"], raw["log10_stop"], raw["num"]))
        except KeyError as exc:
            raise ConfigError(f"grid {name!r} needs log10_start, log10_stop and num") from exc
    else:
        raise ConfigError(f"grid {name!r} must be a number, list or table, got {type(raw).__name__}")
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"grid {name!r} must be a non-empty list of finite numbers")
    return values


def _scenario(idx: int, raw: dict) -> Scenario:
    known = {"kappa", "n_b", "m", "n_s", "n_t", "pr_e", "target", "cutoff", "p_f", "p_d"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"scenario {idx}: unknown keys {sorted(extra)}")
    try:
        kappa, n_b = float(raw["kappa"]), float(raw["n_b"])
    except KeyError as exc:
        raise ConfigError(f"scenario {idx}: kappa and n_b are required") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scenario {idx}: kappa and n_b must be numbers") from exc

    grids = {k: _grid(k, raw[k]) for k in ("m", "n_s", "n_t", "pr_e") if k in raw}
    extra_values = {}
    for key, cast in (("target", float), ("cutoff", int), ("p_f", float), ("p_d", float)):
        if key in raw:
            try:
                extra_values[key] = cast(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"scenario {idx}: {key} must be a {cast.__name__}") from exc
    return Scenario(kappa=kappa, n_b=n_b, **grids, **extra_values)


def load_config(path: str | Path | None = None, default_fmt: str = DEFAULT_FORMAT, **overrides) -> RunConfig:
    """Build a RunConfig from environment defaults, an optional TOML file, then explicit overrides (None = unset)."""
    values = {
        "fmt":     _env("QI_FORMAT", str, default_fmt),
        "seed":    _env("QI_SEED", int, DEFAULT_SEED),
        "rel_tol": _env("QI_REL_TOL", float, DEFAULT_REL_TOL),
        "threads": _env("QI_THREADS", int, DEFAULT_THREADS),
        "trials":  _env("QI_TRIALS", int, DEFAULT_TRIALS),
    }
    scenarios: tuple[Scenario, ...] = ()
    source = None

    if path is not None:
        source = str(path)
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc

        for key, target in (("format", "fmt"), ("seed", "seed"), ("rel_tol", "rel_tol"),
                            ("threads", "threads"), ("trials", "trials")):
            if key in raw:
                values[target] = raw[key]
        tables    = raw.get("scenario", [])
        if not isinstance(tables, list):
            raise ConfigError("[[scenario]] must be an array of tables")
        scenarios = tuple(_scenario(i, t) for i, t in enumerate(tables))

    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    return RunConfig(scenarios=scenarios, source=source, **values)
