"""Experiment configuration: TOML parsing, validation, and defaults.

A config file names one experiment plus its grid, solver, truncation,
initial-data, and output settings.  Validation is line-precise: unknown keys,
type mismatches, and violated invariants are reported with the line they
occur on whenever the key can be located in the source text.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .gaussian import critical_exponent

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "EXPERIMENTS"]

EXPERIMENTS = (
    "similarity_run",
    "physical_run",
    "reduced_ode",
    "dichotomy_probe",
    "spectral_probe",
    "verify",
)

INITIAL_KINDS = ("gaussian", "scaled_gaussian", "gaussian_plus_moment", "from_file")

# end-of-run defaults per experiment (tau for all but physical_run)
_DEFAULT_END = {
    "similarity_run": 15.0,
    "physical_run": 5.0,
    "reduced_ode": 50.0,
    "dichotomy_probe": 30.0,
    "spectral_probe": 6.0,
    "verify": 0.0,
}

_NUMBER = (int, float)

# schema: key -> accepted types; nested dicts are sections
_SCHEMA = {
    "experiment": str,
    "dim": int,
    "q": _NUMBER,
    "use_q_star": bool,
    "grid": {"L": _NUMBER, "n": int},
    "solver": {
        "scheme": str,
        "dt": _NUMBER,
        "tau_end": _NUMBER,
        "t_end": _NUMBER,
        "record_every": int,
    },
    "truncation": {"enabled": bool, "rho": _NUMBER, "m": _NUMBER},
    "initial_data": (str, dict),
    "output": {
        "csv_path": str,
        "svg_path": str,
        "svg_columns": list,
        "svg_log": bool,
    },
    "probe": {"t_switch": _NUMBER},
}

_INITIAL_SCHEMA = {"kind": str, "alpha": _NUMBER, "epsilon": _NUMBER, "path": str}


class ConfigError(ValueError):
    """Invalid experiment configuration, with the offending line when known."""


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment description (all defaults applied)."""

    experiment: str
    dim: int = 1
    q: float = 1.5
    use_q_star: bool = True
    half_width: float = 12.0
    points: int = 513
    scheme: str = "explicit_rk4"
    dt: float = 0.0
    end_time: float = 0.0
    record_every: int = 10
    truncation_enabled: bool = False
    rho: float = 0.5
    weight_m: float = 1.0
    initial_kind: str = "gaussian"
    initial_alpha: float = 1.0
    initial_epsilon: float = 0.3
    initial_path: str | None = None
    csv_path: str = ""
    svg_path: str | None = None
    svg_columns: tuple[str, ...] = ("rescaled_mass",)
    svg_log: bool = False
    t_switch: float = 10.0
    defaults_applied: tuple[str, ...] = dataclass_field(default=())


def _line_of(text: str, dotted_key: str) -> int | None:
    """Best-effort line number of a key ("dt" or "solver.dt") in TOML source."""
    parts = dotted_key.split(".")
    lines = text.splitlines()
    if len(parts) == 1:
        pattern = re.compile(rf"^\s*(?:'|\")?{re.escape(parts[0])}(?:'|\")?\s*=")
        for i, line in enumerate(lines, 1):
            if pattern.match(line):
                return i
        return None
    section, key = parts[0], parts[1]
    in_section = False
    key_pat = re.compile(rf"^\s*(?:'|\")?{re.escape(key)}(?:'|\")?\s*=")
    sec_pat = re.compile(rf"^\s*\[\s*{re.escape(section)}\s*\]")
    any_sec = re.compile(r"^\s*\[")
    for i, line in enumerate(lines, 1):
        if sec_pat.match(line):
            in_section = True
            continue
        if in_section and any_sec.match(line):
            return None
        if in_section and key_pat.match(line):
            return i
    return None


def _fail(text: str, key: str, message: str) -> None:
    line = _line_of(text, key)
    where = f"line {line}: " if line is not None else ""
    raise ConfigError(f"{where}{key}: {message}")


def _check_types(data: dict, schema: dict, text: str, prefix: str = "") -> None:
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        if key not in schema:
            _fail(text, dotted, "unknown key")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                _fail(text, dotted, f"expected a section, got {type(value).__name__}")
            _check_types(value, expected, text, prefix=f"{dotted}.")
        else:
            if isinstance(value, bool) and expected is not bool and bool not in (
                expected if isinstance(expected, tuple) else (expected,)
            ):
                _fail(text, dotted, "expected a number, got a boolean")
            if not isinstance(value, expected):
                names = (
                    "/".join(t.__name__ for t in expected)
                    if isinstance(expected, tuple)
                    else expected.__name__
                )
                _fail(text, dotted, f"expected {names}, got {type(value).__name__}")


def parse_config(source: str | Path) -> ExperimentConfig:
    """Parse a config from a file path or inline TOML text.

    Strings that name an existing file are read from disk; anything else is
    treated as inline TOML.
    """
    if isinstance(source, Path):
        text = source.read_text()
    elif "\n" not in source and os.path.exists(source):
        text = Path(source).read_text()
    else:
        text = source
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc

    _check_types(data, _SCHEMA, text)
    applied: list[str] = []

    experiment = data.get("experiment")
    if experiment is None:
        raise ConfigError("experiment: required key is missing")
    if experiment not in EXPERIMENTS:
        _fail(text, "experiment", f"must be one of {EXPERIMENTS}, got {experiment!r}")

    dim = data.get("dim", 1)
    if dim not in (1, 2):
        _fail(text, "dim", f"must be 1 or 2, got {dim}")

    # exactly one of q / use_q_star after defaults
    has_q = "q" in data
    has_flag = "use_q_star" in data
    if has_q and has_flag:
        _fail(text, "q", "set either q or use_q_star, not both (use_q_star also given)")
    if has_q:
        q = float(data["q"])
        use_q_star = False
        if not q > 0:
            _fail(text, "q", f"must be positive, got {q}")
    else:
        if not has_flag:
            applied.append("use_q_star=true")
        elif data["use_q_star"] is False:
            _fail(text, "use_q_star", "false requires an explicit q")
        use_q_star = True
        q = critical_exponent(dim)

    # the probe's physical leg must hold the box 12*sqrt(1+t_switch)
    default_L, default_n = (40.0, 1601) if experiment == "dichotomy_probe" else (12.0, 513)
    grid = data.get("grid", {})
    half_width = float(grid.get("L", default_L))
    points = grid.get("n", default_n)
    if "L" not in grid:
        applied.append(f"grid.L={default_L}")
    if "n" not in grid:
        applied.append(f"grid.n={default_n}")
    if half_width < 8.0:
        _fail(text, "grid.L", f"half-width below 8 truncates the Gaussian tail, got {half_width}")
    if points < 3 or points % 2 == 0:
        _fail(text, "grid.n", f"points per axis must be odd and >= 3, got {points}")
    spacing = 2.0 * half_width / (points - 1)

    solver = data.get("solver", {})
    scheme = solver.get("scheme", "explicit_rk4")
    if scheme not in ("explicit_rk4", "imex_euler"):
        _fail(text, "solver.scheme", f"must be explicit_rk4 or imex_euler, got {scheme!r}")
    if "scheme" not in solver:
        applied.append("solver.scheme=explicit_rk4")

    if "tau_end" in solver and "t_end" in solver:
        _fail(text, "solver.tau_end", "give tau_end or t_end, not both (t_end also given)")
    end_key = "t_end" if experiment == "physical_run" else "tau_end"
    wrong_key = "tau_end" if end_key == "t_end" else "t_end"
    if wrong_key in solver:
        _fail(text, f"solver.{wrong_key}", f"{experiment} is configured by solver.{end_key}")
    if end_key in solver:
        end_time = float(solver[end_key])
        if not end_time > 0:
            _fail(text, f"solver.{end_key}", f"must be positive, got {end_time}")
    else:
        end_time = _DEFAULT_END[experiment]
        applied.append(f"solver.{end_key}={end_time}")

    if "dt" in solver:
        dt = float(solver["dt"])
        if not dt > 0:
            _fail(text, "solver.dt", f"must be positive, got {dt}")
        if experiment == "reduced_ode" and dt > 1e-2:
            _fail(text, "solver.dt", f"the mass ODE integrator caps dt at 1e-2, got {dt}")
        if scheme == "explicit_rk4" and experiment in ("similarity_run", "physical_run"):
            bound = spacing * spacing / (4.0 * dim)
            if dt > bound * (1.0 + 1e-12):
                _fail(
                    text,
                    "solver.dt",
                    f"explicit_rk4 requires dt <= h^2/(4*dim) = {bound:.6e}, got {dt:.6e}",
                )
    else:
        dt = 1e-3 if experiment == "reduced_ode" else spacing * spacing / (6.0 * dim)
        applied.append(f"solver.dt={dt!r}")

    if "record_every" in solver:
        record_every = solver["record_every"]
        if record_every < 1:
            _fail(text, "solver.record_every", f"must be >= 1, got {record_every}")
    else:
        record_every = max(10, int(math.ceil(0.01 / dt)))
        applied.append(f"solver.record_every={record_every}")

    trunc = data.get("truncation", {})
    truncation_enabled = trunc.get("enabled", False)
    rho = float(trunc.get("rho", 0.5))
    weight_m = float(trunc.get("m", dim // 2 + 1))
    if truncation_enabled:
        if not 0.0 < rho < 1.0:
            _fail(text, "truncation.rho", f"must lie in (0, 1), got {rho}")
        if not weight_m > dim / 2:
            _fail(text, "truncation.m", f"must exceed dim/2 = {dim / 2}, got {weight_m}")

    initial = data.get("initial_data", "gaussian")
    if isinstance(initial, str):
        initial = {"kind": initial}
    _check_types(initial, _INITIAL_SCHEMA, text, prefix="initial_data.")
    initial_kind = initial.get("kind", "gaussian")
    if initial_kind not in INITIAL_KINDS:
        _fail(text, "initial_data", f"kind must be one of {INITIAL_KINDS}, got {initial_kind!r}")
    initial_alpha = float(initial.get("alpha", 1.0))
    initial_epsilon = float(initial.get("epsilon", 0.3))
    initial_path = initial.get("path")
    if initial_kind == "from_file":
        if initial_path is None:
            _fail(text, "initial_data", "kind='from_file' requires a path")
        if not os.path.isfile(initial_path):
            _fail(text, "initial_data.path", f"no such file: {initial_path}")
    if initial_kind == "scaled_gaussian" and not initial_alpha > 0:
        _fail(text, "initial_data.alpha", f"must be positive, got {initial_alpha}")
    if "initial_data" not in data:
        applied.append("initial_data=gaussian")

    output = data.get("output", {})
    csv_path = output.get("csv_path", f"{experiment}.csv")
    if "csv_path" not in output:
        applied.append(f"output.csv_path={csv_path}")
    svg_path = output.get("svg_path")
    svg_columns = tuple(output.get("svg_columns", ("rescaled_mass",)))
    for col in svg_columns:
        if not isinstance(col, str):
            _fail(text, "output.svg_columns", f"column names must be strings, got {col!r}")
    svg_log = output.get("svg_log", False)
    for path_key, path_val in (("output.csv_path", csv_path), ("output.svg_path", svg_path)):
        if path_val is None:
            continue
        parent = os.path.dirname(os.path.abspath(path_val))
        if not os.path.isdir(parent):
            _fail(text, path_key, f"directory does not exist: {parent}")
        if not os.access(parent, os.W_OK):
            _fail(text, path_key, f"directory is not writable: {parent}")

    probe = data.get("probe", {})
    t_switch = float(probe.get("t_switch", 10.0))
    if not t_switch > 0:
        _fail(text, "probe.t_switch", f"must be positive, got {t_switch}")
    if experiment == "dichotomy_probe" and not end_time > math.log1p(t_switch):
        _fail(
            text,
            "solver.tau_end",
            f"horizon must exceed the switch time ln(1+t_switch) = {math.log1p(t_switch):.4g}",
        )

    return ExperimentConfig(
        experiment=experiment,
        dim=dim,
        q=q,
        use_q_star=use_q_star,
        half_width=half_width,
        points=points,
        scheme=scheme,
        dt=dt,
        end_time=end_time,
        record_every=record_every,
        truncation_enabled=truncation_enabled,
        rho=rho,
        weight_m=weight_m,
        initial_kind=initial_kind,
        initial_alpha=initial_alpha,
        initial_epsilon=initial_epsilon,
        initial_path=initial_path,
        csv_path=csv_path,
        svg_path=svg_path,
        svg_columns=svg_columns,
        svg_log=svg_log,
        t_switch=t_switch,
        defaults_applied=tuple(applied),
    )
