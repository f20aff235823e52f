"""Run configuration: a flat ``section.key = value`` document.

Lines starting with ``#`` (and anything after a ``#`` on a line) are
comments.  Every problem found is reported at once through
:class:`ConfigError`.  Example::

    grid.nx = 32
    grid.regime = C
    model.c0 = 0.1
    model.mu_law = affine
    model.mu0 = 0.5
    model.mu1 = 0.2
    time.t_end = 0.1
    time.dt = 1e-3
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass
from typing import Any, Callable

from .diagnostics import ExponentError, validate_exponents
from .grid import Grid, make_grid
from .initial import KINDS, InitialSpec
from .model import ModelError, ModelParams, MuLaw, StepControls


class ConfigError(ValueError):
    """Carries every violation found in a configuration document."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


_REQUIRED = object()


def _choice(*options):
    def conv(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return conv


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _serrin_float(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return _float(text)


# (converter, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "grid.nx": (int, _REQUIRED),
    "grid.ny": (int, None),
    "grid.lx": (_float, 1.0),
    "grid.ly": (_float, 1.0),
    "grid.regime": (_choice("A", "B", "C"), _REQUIRED),
    "model.c0": (_float, _REQUIRED),
    "model.alpha": (_float, 0.5),
    "model.beta": (_float, 2.0),
    "model.rho_tilde": (_float, 1.0),
    "model.mu_law": (_choice("constant", "affine", "exp"), _REQUIRED),
    "model.mu0": (_float, _REQUIRED),
    "model.mu1": (_float, None),
    "model.k": (_float, None),
    "model.friction": (_choice("zero", "constant"), "zero"),
    "model.friction_b0": (_float, None),
    "initial.kind": (_choice(*KINDS), "rest"),
    "initial.level": (_float, None),
    "initial.amplitude": (_float, 0.0),
    "initial.swirl": (_float, 0.0),
    "initial.mode_x": (int, 1),
    "initial.mode_y": (int, 1),
    "time.t_end": (_float, _REQUIRED),
    "time.dt": (_float, _REQUIRED),
    "time.pic_tol": (_float, 1e-9),
    "time.pic_max": (int, 50),
    "time.constraint_tol": (_float, 1e-7),
    "output.csv": (str, "diagnostics.csv"),
    "output.snapshot_every": (int, 0),
    "output.snapshot_dir": (str, "snapshots"),
    "output.checkpoint_every": (int, 0),
    "output.checkpoint_path": (str, "run.ckpt"),
    "serrin.r": (_serrin_float, 4.0),
    "serrin.s": (_serrin_float, 4.0),
    "serrin.threshold": (_float, 1e6),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict
    grid: Grid
    params: ModelParams
    controls: StepControls
    initial: InitialSpec
    t_end: float
    csv_path: str
    snapshot_every: int
    snapshot_dir: str
    checkpoint_every: int
    checkpoint_path: str
    serrin_r: float
    serrin_s: float
    serrin_threshold: float

    def canonical(self) -> str:
        """Resolved key-value text, independent of comments and key order."""
        return "".join(f"{k} = {self.values[k]!r}\n" for k in sorted(self.values))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _tokenize(text: str, problems: list[str]) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'section.key = value'")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in raw:
            problems.append(f"line {lineno}: duplicate key {key!r}")
            continue
        if value == "":
            problems.append(f"line {lineno}: {key} has no value")
            continue
        raw[key] = value
    return raw


def _convert(raw: dict[str, str], problems: list[str]) -> dict:
    values = {}
    for key, (conv, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = conv(raw[key])
            except ValueError as exc:
                problems.append(f"{key} = {raw[key]!r}: {exc}")
        elif default is _REQUIRED:
            problems.append(f"{key}: missing (no default)")
        else:
            values[key] = default
    return values


def _model_problems(v: dict) -> list[str]:
    out = []
    if v["model.c0"] <= 0:
        out.append(f"model.c0: must be positive (got {v['model.c0']})")
    if not 0 < v["model.alpha"] <= v["model.beta"]:
        out.append(f"model.alpha, model.beta: need 0 < alpha <= beta (alpha={v['model.alpha']}, beta={v['model.beta']})")
    elif not v["model.alpha"] <= v["model.rho_tilde"] <= v["model.beta"]:
        out.append("model.rho_tilde: must lie in [model.alpha, model.beta]")
    law = v["model.mu_law"]
    if law == "affine" and v["model.mu1"] is None:
        out.append("model.mu1: required by mu_law = affine")
    if law == "exp" and v["model.k"] is None:
        out.append("model.k: required by mu_law = exp")
    if law == "constant" and (v["model.mu1"] is not None or v["model.k"] is not None):
        out.append("model.mu1/model.k: not used by mu_law = constant")
    if v["model.friction"] == "constant":
        b0 = v["model.friction_b0"]
        if b0 is None:
            out.append("model.friction_b0: required by friction = constant")
        elif b0 < 0:
            out.append(f"model.friction_b0: must be nonnegative (got {b0})")
        if v["grid.regime"] != "A":
            out.append("model.friction: friction only applies to regime A")
    elif v["model.friction_b0"] is not None:
        out.append("model.friction_b0: set but friction = zero")
    return out


def _other_problems(v: dict) -> list[str]:
    out = []
    nx, ny = v["grid.nx"], v["grid.ny"] if v["grid.ny"] is not None else v["grid.nx"]
    if nx < 4 or ny < 4:
        out.append("grid.nx, grid.ny: need at least 4 cells per direction")
    if v["grid.lx"] <= 0 or v["grid.ly"] <= 0:
        out.append("grid.lx, grid.ly: must be positive")
    if v["time.t_end"] < 0:
        out.append("time.t_end: must be nonnegative")
    if v["time.dt"] <= 0:
        out.append("time.dt: must be positive")
    if v["time.pic_tol"] <= 0:
        out.append("time.pic_tol: must be positive")
    if v["time.pic_max"] < 1:
        out.append("time.pic_max: must be at least 1")
    if v["time.constraint_tol"] <= 0:
        out.append("time.constraint_tol: must be positive")
    for key in ("output.snapshot_every", "output.checkpoint_every"):
        if v[key] < 0:
            out.append(f"{key}: must be nonnegative (0 disables)")
    try:
        validate_exponents(v["serrin.r"], v["serrin.s"])
    except ExponentError as exc:
        out.append(f"serrin.r, serrin.s: {exc}")
    if v["serrin.threshold"] <= 0:
        out.append("serrin.threshold: must be positive")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        Listing every unknown key, missing required key, malformed value and
        violated constraint.
    """
    problems: list[str] = []
    raw = _tokenize(text, problems)
    values = _convert(raw, problems)
    if len(values) < len(SCHEMA):  # a value is missing or malformed
        raise ConfigError(problems)
    # unknown keys do not stop the semantic checks, so everything is reported at once
    problems += _model_problems(values) + _other_problems(values)
    if problems:
        raise ConfigError(problems)
    mu_law = MuLaw(values["model.mu_law"], values["model.mu0"], values["model.mu1"] or 0.0, values["model.k"] or 0.0)
    try:
        params = ModelParams(values["model.c0"], mu_law, values["model.alpha"], values["model.beta"],
                             values["model.rho_tilde"], values["model.friction_b0"] or 0.0)
    except ModelError as exc:
        raise ConfigError([f"model: {exc}"]) from None
    spec = InitialSpec(values["initial.kind"], values["initial.level"], values["initial.amplitude"],
                       values["initial.swirl"], values["initial.mode_x"], values["initial.mode_y"])
    problems = spec.problems(values["grid.regime"], params)
    if problems:
        raise ConfigError(problems)
    ny = values["grid.ny"] if values["grid.ny"] is not None else values["grid.nx"]
    values["grid.ny"] = ny
    grid = make_grid(values["grid.nx"], ny, values["grid.lx"], values["grid.ly"], values["grid.regime"])
    controls = StepControls(values["time.dt"], values["time.pic_tol"], values["time.pic_max"],
                            values["time.constraint_tol"])
    return RunConfig(values, grid, params, controls, spec, values["time.t_end"],
                     values["output.csv"], values["output.snapshot_every"], values["output.snapshot_dir"],
                     values["output.checkpoint_every"], values["output.checkpoint_path"],
                     values["serrin.r"], values["serrin.s"], values["serrin.threshold"])


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
