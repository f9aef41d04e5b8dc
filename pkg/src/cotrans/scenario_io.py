"""Scenario files: a small INI dialect describing one transport problem.

Sections and keys (defaults in parentheses; everything else is required):

    [geometry]   robot_radius, object_radius, stiffness
    [gains]      k_v, k_p, eps (0.01), directions
    [command]    type = circular | constant | zero
                 circular: amplitude, period; constant: velocity
    [initial]    object_position, object_velocity, robot_positions
    [integration] dt (1e-3), t_end (60.0), seed (0)   -- section optional

Vectors are bracketed: ``[1, 0]``; lists of vectors are comma-separated
brackets: ``[1, 0], [0, 1]``. ``directions`` also accepts
``evenly_spaced(N)`` for N planar unit vectors at angles 2*pi*(i-1)/N.
Unknown sections or keys are schema errors, never ignored.
"""

from __future__ import annotations

import configparser
import re
from pathlib import Path

import numpy as np

from .controller import (
    CircularCommand,
    ConstantCommand,
    ControllerGains,
    ZeroCommand,
)
from .dynamics import BodyGeometry, SystemState
from .geometry import DirectionSet, evenly_spaced_directions
from .simulation import ScenarioConfig

__all__ = ["ParseError", "SchemaError", "parse_scenario", "config_echo"]


class ParseError(Exception):
    """The file could not be read as the scenario dialect (syntax level)."""


class SchemaError(Exception):
    """The file parsed but a key is unknown, missing, or out of range."""


_SCHEMA: dict[str, set[str]] = {
    "geometry": {"robot_radius", "object_radius", "stiffness"},
    "gains": {"k_v", "k_p", "eps", "directions"},
    "command": {"type", "amplitude", "period", "velocity"},
    "initial": {"object_position", "object_velocity", "robot_positions"},
    "integration": {"dt", "t_end", "seed"},
}

_VECTOR_RE = re.compile(r"\[[^\[\]]*\]")
_EVENLY_RE = re.compile(r"^evenly_spaced\(\s*(\d+)\s*\)$")


def _parse_float(section: str, key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise ParseError(f"[{section}] {key}: not a number: {text!r}") from exc
    if not np.isfinite(value):
        raise SchemaError(f"[{section}] {key}: must be finite, got {text!r}")
    return value


def _parse_int(section: str, key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ParseError(f"[{section}] {key}: not an integer: {text!r}") from exc


def _parse_vector(section: str, key: str, text: str) -> np.ndarray:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ParseError(f"[{section}] {key}: expected a bracketed vector, got {text!r}")
    parts = [p for p in re.split(r"[,\s]+", body[1:-1].strip()) if p]
    if not parts:
        raise ParseError(f"[{section}] {key}: empty vector")
    return np.array([_parse_float(section, key, p) for p in parts])


def _parse_vector_list(section: str, key: str, text: str) -> np.ndarray:
    groups = _VECTOR_RE.findall(text)
    if not groups:
        raise ParseError(f"[{section}] {key}: expected one or more bracketed vectors")
    leftover = _VECTOR_RE.sub("", text).replace(",", "").strip()
    if leftover:
        raise ParseError(f"[{section}] {key}: unparsed text {leftover!r}")
    rows = [_parse_vector(section, key, g) for g in groups]
    lengths = {row.shape[0] for row in rows}
    if len(lengths) != 1:
        raise SchemaError(f"[{section}] {key}: vectors differ in length")
    return np.vstack(rows)


def _require_positive(section: str, key: str, value: float) -> float:
    if value <= 0.0:
        raise SchemaError(f"[{section}] {key}: must be positive, got {value}")
    return value


def _section(raw: configparser.ConfigParser, name: str, required: bool) -> dict[str, str]:
    if not raw.has_section(name):
        if required:
            raise SchemaError(f"missing required section [{name}]")
        return {}
    found = dict(raw.items(name))
    unknown = set(found) - _SCHEMA[name]
    if unknown:
        raise SchemaError(f"unknown key {sorted(unknown)[0]!r} in section [{name}]")
    return found


def _pop_required(section: str, table: dict[str, str], key: str) -> str:
    if key not in table:
        raise SchemaError(f"missing key {key!r} in section [{section}]")
    return table[key]


def _parse_directions(text: str, n: int, robot_count: int) -> DirectionSet:
    match = _EVENLY_RE.match(text.strip())
    if match:
        count = int(match.group(1))
        if n != 2:
            raise SchemaError("[gains] directions: evenly_spaced requires n = 2")
        if count != robot_count:
            raise SchemaError(
                f"[gains] directions: evenly_spaced({count}) but {robot_count} robots"
            )
        return evenly_spaced_directions(count)
    rows = _parse_vector_list("gains", "directions", text)
    if rows.shape != (robot_count, n):
        raise SchemaError(
            f"[gains] directions: expected {robot_count} vectors of length {n}, "
            f"got shape {rows.shape}"
        )
    return DirectionSet(rows)


def parse_scenario(path) -> ScenarioConfig:
    """Read a scenario file into a ScenarioConfig.

    Raises ParseError for unreadable files or syntax-level problems and
    SchemaError for unknown/missing keys and out-of-range values. The
    result is structurally consistent but still subject to
    validate_scenario for the physics-level checks.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario file {path}: {exc}") from exc

    raw = configparser.ConfigParser(interpolation=None)
    try:
        raw.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ParseError(f"{path}: {exc}") from exc

    unknown_sections = set(raw.sections()) - set(_SCHEMA)
    if unknown_sections:
        raise SchemaError(f"unknown section [{sorted(unknown_sections)[0]}]")

    geometry = _section(raw, "geometry", required=True)
    gains_tbl = _section(raw, "gains", required=True)
    command_tbl = _section(raw, "command", required=True)
    initial = _section(raw, "initial", required=True)
    integration = _section(raw, "integration", required=False)

    geom = BodyGeometry(
        robot_radius=_require_positive(
            "geometry", "robot_radius",
            _parse_float("geometry", "robot_radius", _pop_required("geometry", geometry, "robot_radius")),
        ),
        object_radius=_require_positive(
            "geometry", "object_radius",
            _parse_float("geometry", "object_radius", _pop_required("geometry", geometry, "object_radius")),
        ),
        stiffness=_require_positive(
            "geometry", "stiffness",
            _parse_float("geometry", "stiffness", _pop_required("geometry", geometry, "stiffness")),
        ),
    )

    object_position = _parse_vector(
        "initial", "object_position", _pop_required("initial", initial, "object_position")
    )
    n = object_position.shape[0]
    if n not in (2, 3):
        raise SchemaError(f"[initial] object_position: dimension must be 2 or 3, got {n}")
    object_velocity = _parse_vector(
        "initial", "object_velocity", _pop_required("initial", initial, "object_velocity")
    )
    robot_positions = _parse_vector_list(
        "initial", "robot_positions", _pop_required("initial", initial, "robot_positions")
    )
    if object_velocity.shape[0] != n:
        raise SchemaError(f"[initial] object_velocity: expected length {n}")
    if robot_positions.shape[1] != n:
        raise SchemaError(f"[initial] robot_positions: expected vectors of length {n}")
    robot_count = robot_positions.shape[0]

    directions = _parse_directions(
        _pop_required("gains", gains_tbl, "directions"), n, robot_count
    )
    gains = ControllerGains(
        k_v=_require_positive(
            "gains", "k_v", _parse_float("gains", "k_v", _pop_required("gains", gains_tbl, "k_v"))
        ),
        k_p=_require_positive(
            "gains", "k_p", _parse_float("gains", "k_p", _pop_required("gains", gains_tbl, "k_p"))
        ),
        eps=_require_positive(
            "gains", "eps", _parse_float("gains", "eps", gains_tbl.get("eps", "0.01"))
        ),
        directions=directions,
    )

    kind = _pop_required("command", command_tbl, "type").strip().lower()
    if kind == "circular":
        if n != 2:
            raise SchemaError("[command] type: circular command requires n = 2")
        command = CircularCommand(
            amplitude=_parse_float(
                "command", "amplitude", _pop_required("command", command_tbl, "amplitude")
            ),
            period=_require_positive(
                "command", "period",
                _parse_float("command", "period", _pop_required("command", command_tbl, "period")),
            ),
            dimension=n,
        )
        extra = set(command_tbl) - {"type", "amplitude", "period"}
    elif kind == "constant":
        velocity = _parse_vector(
            "command", "velocity", _pop_required("command", command_tbl, "velocity")
        )
        if velocity.shape[0] != n:
            raise SchemaError(f"[command] velocity: expected length {n}")
        command = ConstantCommand(value=velocity)
        extra = set(command_tbl) - {"type", "velocity"}
    elif kind == "zero":
        command = ZeroCommand(dimension=n)
        extra = set(command_tbl) - {"type"}
    else:
        raise SchemaError(f"[command] type: unknown command type {kind!r}")
    if extra:
        raise SchemaError(
            f"key {sorted(extra)[0]!r} does not apply to command type {kind!r}"
        )

    dt = _require_positive(
        "integration", "dt", _parse_float("integration", "dt", integration.get("dt", "1e-3"))
    )
    t_end = _require_positive(
        "integration", "t_end",
        _parse_float("integration", "t_end", integration.get("t_end", "60")),
    )
    seed = _parse_int("integration", "seed", integration.get("seed", "0"))

    return ScenarioConfig(
        n=n,
        N=robot_count,
        geom=geom,
        gains=gains,
        command=command,
        initial_state=SystemState(p_o=object_position, v_o=object_velocity, p=robot_positions),
        dt=dt,
        t_end=t_end,
        seed=seed,
        label=path.stem,
    )


def config_echo(cfg: ScenarioConfig) -> dict:
    """Flatten a config into JSON-serializable primitives for reports."""
    command: dict[str, object] = {"type": type(cfg.command).__name__}
    for attr in ("amplitude", "period", "value", "dimension"):
        if hasattr(cfg.command, attr):
            value = getattr(cfg.command, attr)
            command[attr] = value.tolist() if isinstance(value, np.ndarray) else value
    return {
        "label": cfg.label,
        "n": cfg.n,
        "N": cfg.N,
        "geometry": {
            "robot_radius": cfg.geom.robot_radius,
            "object_radius": cfg.geom.object_radius,
            "stiffness": cfg.geom.stiffness,
        },
        "gains": {
            "k_v": cfg.gains.k_v,
            "k_p": cfg.gains.k_p,
            "eps": cfg.gains.eps,
            "directions": cfg.gains.directions.vectors.tolist(),
        },
        "command": command,
        "initial": {
            "object_position": cfg.initial_state.p_o.tolist(),
            "object_velocity": cfg.initial_state.v_o.tolist(),
            "robot_positions": cfg.initial_state.p.tolist(),
        },
        "integration": {"dt": cfg.dt, "t_end": cfg.t_end, "seed": cfg.seed},
    }
