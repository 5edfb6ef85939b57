"""Run configuration: one TOML table file, rationals as "p/q" strings.

Everything is validated up front so a bad file dies with a usage error
before any computation starts.  Floats are refused in exact fields; the
only place a float is legitimate is the tolerance and the float-mode
representation check.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

try:
    import tomllib as _toml
except ImportError:  # pragma: no cover - 3.10 fallback
    import tomli as _toml


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _fraction(value, where: str) -> Fraction:
    # ints are fine, floats are not: 0.1 is not 1/10
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: cannot parse {value!r} as p/q") from exc
    raise ConfigError(
        f"{where}: expected an int or a 'p/q' string, got {type(value).__name__}"
    )


def _int(value, where: str, low: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if low is not None and value < low:
        raise ConfigError(f"{where}: must be >= {low}, got {value}")
    return value


def _theta_matrix(raw, m: int):
    if not isinstance(raw, list) or len(raw) != m:
        raise ConfigError(f"presentation.theta: expected an {m}x{m} array")
    theta = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != m:
            raise ConfigError(f"presentation.theta: row {i} is not length {m}")
        theta.append(tuple(_fraction(v, f"presentation.theta[{i}]") for v in row))
    for i in range(m):
        for j in range(m):
            if theta[i][j] != -theta[j][i]:
                raise ConfigError(
                    f"presentation.theta: not antisymmetric at ({i}, {j})"
                )
    return tuple(theta)


@dataclass
class RunConfig:
    family: str = "weyl"
    m: int = 1
    theta: Optional[tuple] = None
    bounds: tuple = (3,)
    group_bound: Optional[tuple] = None
    depth: int = 16
    grid: tuple = ()
    toeplitz_n: int = 200
    seed: int = 0
    tolerance: Optional[float] = None
    out: Optional[str] = None
    rep_mode: str = "exact"
    corrupt_twist: bool = False
    threads: int = 1
    raw: dict = field(default_factory=dict)

    def as_echo(self) -> dict:
        """Config as it went into the run, rationals back to strings."""
        echo = {
            "family": self.family,
            "m": self.m,
            "bounds": list(self.bounds),
            "depth": self.depth,
            "seed": self.seed,
            "rep_mode": self.rep_mode,
            "toeplitz_n": self.toeplitz_n,
            "threads": self.threads,
        }
        if self.theta is not None:
            echo["theta"] = [[str(v) for v in row] for row in self.theta]
        if self.group_bound is not None:
            echo["group_bound"] = list(self.group_bound)
        if self.grid:
            echo["grid"] = [str(v) for v in self.grid]
        if self.tolerance is not None:
            echo["tolerance"] = self.tolerance
        if self.corrupt_twist:
            echo["corrupt_twist"] = True
        return echo


def _read_threads_env() -> int:
    raw = os.environ.get("FELLFORGE_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FELLFORGE_THREADS: not an integer: {raw!r}")
    if n < 1:
        raise ConfigError(f"FELLFORGE_THREADS: must be >= 1, got {n}")
    return n


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = _toml.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path!r}: {exc}") from exc
    return parse_config(data)


def parse_config(data: dict) -> RunConfig:
    cfg = RunConfig(raw=data)

    pres = data.get("presentation", {})
    if not isinstance(pres, dict):
        raise ConfigError("presentation: expected a table")
    cfg.family = pres.get("family", "weyl")
    if cfg.family not in ("weyl", "twisted-weyl"):
        raise ConfigError(
            f"presentation.family: unknown family {cfg.family!r}"
        )
    cfg.m = _int(pres.get("m", 1), "presentation.m", low=1)
    if "theta" in pres:
        cfg.theta = _theta_matrix(pres["theta"], cfg.m)
    elif cfg.family == "twisted-weyl":
        raise ConfigError("presentation.theta: required for twisted-weyl")

    window = data.get("window", {})
    if not isinstance(window, dict):
        raise ConfigError("window: expected a table")
    bounds = window.get("bounds", [3] * cfg.m)
    if not isinstance(bounds, list) or len(bounds) != cfg.m:
        raise ConfigError(f"window.bounds: expected {cfg.m} entries")
    cfg.bounds = tuple(_int(b, "window.bounds", low=0) for b in bounds)

    chars = data.get("characters", {})
    if not isinstance(chars, dict):
        raise ConfigError("characters: expected a table")
    cfg.depth = _int(chars.get("depth", 16), "characters.depth", low=1)
    grid = chars.get("grid", [])
    if not isinstance(grid, list):
        raise ConfigError("characters.grid: expected an array")
    cfg.grid = tuple(_fraction(v, "characters.grid") for v in grid)

    grp = data.get("groupoid", {})
    if not isinstance(grp, dict):
        raise ConfigError("groupoid: expected a table")
    if "group_bound" in grp:
        gb = grp["group_bound"]
        if not isinstance(gb, list) or len(gb) != cfg.m:
            raise ConfigError(f"groupoid.group_bound: expected {cfg.m} entries")
        cfg.group_bound = tuple(
            _int(b, "groupoid.group_bound", low=0) for b in gb
        )

    twist = data.get("twist", {})
    if not isinstance(twist, dict):
        raise ConfigError("twist: expected a table")
    corrupt = twist.get("corrupt", False)
    if not isinstance(corrupt, bool):
        raise ConfigError("twist.corrupt: expected a boolean")
    cfg.corrupt_twist = corrupt

    rep = data.get("rep", {})
    if not isinstance(rep, dict):
        raise ConfigError("rep: expected a table")
    cfg.rep_mode = rep.get("mode", "exact")
    if cfg.rep_mode not in ("exact", "float"):
        raise ConfigError(f"rep.mode: expected 'exact' or 'float', got {cfg.rep_mode!r}")

    toep = data.get("toeplitz", {})
    if not isinstance(toep, dict):
        raise ConfigError("toeplitz: expected a table")
    cfg.toeplitz_n = _int(toep.get("n", 200), "toeplitz.n", low=1)

    rpt = data.get("report", {})
    if not isinstance(rpt, dict):
        raise ConfigError("report: expected a table")
    cfg.seed = _int(rpt.get("seed", 0), "report.seed", low=0)
    if "tolerance" in rpt:
        tol = rpt["tolerance"]
        if isinstance(tol, bool) or not isinstance(tol, (int, float)):
            raise ConfigError(f"report.tolerance: expected a number, got {tol!r}")
        if tol < 0:
            raise ConfigError(f"report.tolerance: must be >= 0, got {tol}")
        cfg.tolerance = float(tol)
    out = rpt.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("report.out: expected a path string")
    cfg.out = out

    cfg.threads = _read_threads_env()
    return cfg
