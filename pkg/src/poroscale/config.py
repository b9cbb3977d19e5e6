"""Flat sectioned key=value configuration: parsing, validation, emission.

Every key is addressed as section.key so error messages can name the
offending entry verbatim.  `parse_and_validate` fills documented defaults,
checks the physical admissibility constraints (diffusivity bounds, the
regularized-mode step restriction, rate-constant consistency, grid/tiling
alignment) and returns an immutable SimulationConfig; `emit` writes it back
in the same format and round-trips exactly.
"""

import configparser
import io
from dataclasses import dataclass, replace

from .errors import ConfigError

_REQUIRED = object()


def _parse_bool(s):
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_inv_epsilon(s):
    s = s.strip()
    if "/" in s:
        num, den = s.split("/")
        if float(num) != 1.0:
            raise ValueError("epsilon must be 1/<integer>")
        return int(den)
    val = float(s)
    inv = 1.0 / val
    if abs(inv - round(inv)) > 1e-9:
        raise ValueError(f"epsilon {s} is not the reciprocal of an integer")
    return int(round(inv))


def _parse_int_list(s):
    return tuple(_parse_inv_epsilon(tok) for tok in s.split(",") if tok.strip())


def _parse_float_list(s):
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


@dataclass(frozen=True)
class SimulationConfig:
    # geometry
    cell_resolution: int
    inclusion: str
    inclusion_size: float
    inv_epsilon: int
    macro_extent: float
    macro_resolution: int
    cell_refine: int
    # physics
    mu: float
    diff_u: str
    diff_v: str
    alpha: float
    m_bound: float
    cell_flow: str
    q0: str
    # kinetics
    rate_forward: float
    rate_dissolution: float
    langmuir_u: float
    langmuir_v: float
    delta: float
    mode: str
    # boundary
    inflow_edge: str
    outflow_edge: str
    inflow_u: str
    outflow_u: str
    inflow_v: str
    outflow_v: str
    # initial
    init_u: str
    init_v: str
    init_mineral: float
    # time
    t_end: float
    dt: float
    snapshot_stride: int
    # output
    out_dir: str
    write_vtk: bool
    # sweep
    eps_list: tuple
    delta_list: tuple
    # kinetics_table
    table_u_max: float
    table_v_max: float
    table_points: int
    # run
    seed: int
    time_dependent_cells: bool


# section -> key -> (attribute, parser, default)
_SCHEMA = {
    "geometry": {
        "cell_resolution": ("cell_resolution", int, 16),
        "inclusion": ("inclusion", str, "none"),
        "inclusion_size": ("inclusion_size", float, 0.25),
        "epsilon": ("inv_epsilon", _parse_inv_epsilon, 8),
        "macro_extent": ("macro_extent", float, 1.0),
        "macro_resolution": ("macro_resolution", int, 16),
        "cell_refine": ("cell_refine", int, 4),
    },
    "physics": {
        "mu": ("mu", float, 1.0),
        "diff_u": ("diff_u", str, "constant:1.0"),
        "diff_v": ("diff_v", str, "constant:1.0"),
        "alpha": ("alpha", float, 0.5),
        "m_bound": ("m_bound", float, 10.0),
        "cell_flow": ("cell_flow", str, "none"),
        "q0": ("q0", str, "zero"),
    },
    "kinetics": {
        "rate_forward": ("rate_forward", float, 1.0),
        "rate_dissolution": ("rate_dissolution", float, 1.0),
        "k": (None, float, None),          # optional consistency check only
        "langmuir_u": ("langmuir_u", float, 1.0),
        "langmuir_v": ("langmuir_v", float, 1.0),
        "delta": ("delta", float, 0.1),
        "mode": ("mode", str, "regularized"),
    },
    "boundary": {
        "inflow_edge": ("inflow_edge", str, "left"),
        "outflow_edge": ("outflow_edge", str, "right"),
        "inflow_u": ("inflow_u", str, "0.0"),
        "outflow_u": ("outflow_u", str, "0.0"),
        "inflow_v": ("inflow_v", str, "0.0"),
        "outflow_v": ("outflow_v", str, "0.0"),
    },
    "initial": {
        "init_u": ("init_u", str, "constant:1.0"),
        "init_v": ("init_v", str, "constant:1.0"),
        "init_mineral": ("init_mineral", float, 0.05),
    },
    "time": {
        "t_end": ("t_end", float, 0.1),
        "dt": ("dt", float, 0.005),
        "snapshot_stride": ("snapshot_stride", int, 0),
    },
    "output": {
        "dir": ("out_dir", str, "out"),
        "write_vtk": ("write_vtk", _parse_bool, False),
    },
    "sweep": {
        "eps_list": ("eps_list", _parse_int_list, (4, 8, 16)),
        "delta_list": ("delta_list", _parse_float_list, (0.1, 0.05, 0.025)),
    },
    "kinetics_table": {
        "u_max": ("table_u_max", float, 2.0),
        "v_max": ("table_v_max", float, 2.0),
        "points": ("table_points", int, 41),
    },
    "run": {
        "seed": ("seed", int, 0),
        "time_dependent_cells": ("time_dependent_cells", _parse_bool, False),
    },
}

# emission order and reverse mapping attribute -> (section, key, parser)
_ATTR_TO_KEY = {}
for _sec, _keys in _SCHEMA.items():
    for _k, (_attr, _p, _d) in _keys.items():
        if _attr is not None:
            _ATTR_TO_KEY[_attr] = (_sec, _k)


def _field_spec_ok(spec, kinds):
    parts = spec.split(":")
    return parts[0] in kinds


def diffusivity_range(spec, extent):
    """(min, max) of a diffusivity spec over the domain, for the bound check."""
    kind, _, rest = spec.partition(":")
    try:
        vals = [float(t) for t in rest.split(",")] if rest else []
    except ValueError as exc:
        raise ConfigError(f"bad diffusivity spec {spec!r}: {exc}") from exc
    if kind == "constant":
        (v,) = vals
        return v, v
    if kind == "laminate":
        a, b = vals
        return min(a, b), max(a, b)
    if kind == "xlinear":
        (v,) = vals
        return v, v * (1.0 + extent)
    raise ConfigError(f"unknown diffusivity kind {spec!r} "
                      "(expected constant:/laminate:/xlinear:)")


def _parse_time_table(spec, name):
    """Constant or 't0:v0;t1:v1' piecewise-constant boundary table."""
    spec = spec.strip()
    try:
        if ";" not in spec and ":" not in spec:
            return float(spec)
        entries = []
        for tok in spec.split(";"):
            t, _, v = tok.partition(":")
            entries.append((float(t), float(v)))
        return entries
    except ValueError as exc:
        raise ConfigError(f"{name}: bad boundary value {spec!r}: {exc}") from exc


def parse_and_validate(text, overrides=()):
    """Parse config text, apply 'section.key=value' overrides, validate."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    raw = {}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, val in cp.items(sec):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown config key {sec}.{key}")
            raw[(sec, key)] = val
    for ov in overrides:
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ConfigError(f"override must be section.key=value, got {ov!r}")
        dotted, val = ov.split("=", 1)
        sec, _, key = dotted.partition(".")
        if sec not in _SCHEMA or key not in _SCHEMA[sec]:
            raise ConfigError(f"unknown config key {sec}.{key}")
        raw[(sec, key)] = val

    values = {}
    explicit_k = None
    for sec, keys in _SCHEMA.items():
        for key, (attr, parser, default) in keys.items():
            if (sec, key) in raw:
                try:
                    parsed = parser(raw[(sec, key)])
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{sec}.{key}: {exc}") from exc
            elif default is _REQUIRED:
                raise ConfigError(f"missing required config key {sec}.{key}")
            else:
                parsed = default
            if attr is None:
                if (sec, key) in raw:
                    explicit_k = parsed
                continue
            values[attr] = parsed

    cfg = SimulationConfig(**values)
    _validate(cfg, explicit_k)
    return cfg


def _validate(cfg, explicit_k=None):
    if cfg.cell_resolution < 8:
        raise ConfigError("geometry.cell_resolution must be >= 8")
    if cfg.inclusion not in ("none", "disk", "square"):
        raise ConfigError(f"geometry.inclusion must be none|disk|square, got {cfg.inclusion!r}")
    tiles = cfg.macro_extent * cfg.inv_epsilon
    if abs(tiles - round(tiles)) > 1e-9 or round(tiles) < 1:
        raise ConfigError("geometry.macro_extent must be an integer multiple of epsilon")
    if cfg.cell_refine < 1:
        raise ConfigError("geometry.cell_refine must be >= 1")
    if cfg.mu <= 0:
        raise ConfigError("physics.mu must be positive")
    if cfg.mode not in ("regularized", "event"):
        raise ConfigError("kinetics.mode must be regularized|event")
    for name in ("rate_forward", "rate_dissolution", "langmuir_u", "langmuir_v"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"kinetics.{name} must be positive")
    if cfg.mode == "regularized":
        if cfg.delta <= 0:
            raise ConfigError("kinetics.delta must be positive in regularized mode")
        if cfg.dt * cfg.rate_dissolution > cfg.delta * (1 + 1e-12):
            raise ConfigError(
                f"time.dt violates the step restriction dt*k_d <= delta "
                f"({cfg.dt}*{cfg.rate_dissolution} > {cfg.delta})")
    if explicit_k is not None:
        k = cfg.rate_forward / cfg.rate_dissolution
        if abs(explicit_k - k) > 1e-12 * max(1.0, abs(k)):
            raise ConfigError(
                f"kinetics.k = {explicit_k} conflicts with rate_forward/rate_dissolution = {k}")
    if cfg.alpha <= 0 or cfg.m_bound < cfg.alpha:
        raise ConfigError("physics.alpha must satisfy 0 < alpha <= m_bound")
    for attr in ("diff_u", "diff_v"):
        lo, hi = diffusivity_range(getattr(cfg, attr), cfg.macro_extent)
        if lo < cfg.alpha - 1e-12 or hi > cfg.m_bound + 1e-12:
            raise ConfigError(
                f"physics.{attr} range [{lo}, {hi}] violates the declared bounds "
                f"alpha={cfg.alpha}, M={cfg.m_bound}")
    if cfg.inflow_edge == cfg.outflow_edge:
        raise ConfigError("boundary.inflow_edge and boundary.outflow_edge must differ")
    for e in ("inflow_edge", "outflow_edge"):
        if getattr(cfg, e) not in ("left", "right", "top", "bottom"):
            raise ConfigError(f"boundary.{e} must be left|right|top|bottom")
    for attr in ("inflow_u", "outflow_u", "inflow_v", "outflow_v"):
        _parse_time_table(getattr(cfg, attr), f"boundary.{attr}")
    for attr in ("init_u", "init_v"):
        spec = getattr(cfg, attr)
        if not _field_spec_ok(spec, ("constant", "cosx", "cosy")):
            raise ConfigError(f"initial.{attr} must be constant:/cosx:/cosy:")
        kind, _, rest = spec.partition(":")
        try:
            vals = [float(t) for t in rest.split(",")]
        except ValueError as exc:
            raise ConfigError(f"initial.{attr}: {exc}") from exc
        low = vals[0] if kind == "constant" else vals[0] - abs(vals[1])
        if low < 0.0:
            raise ConfigError(f"initial.{attr} takes negative values "
                              f"(minimum {low}); initial data must be nonnegative")
    if cfg.init_mineral < 0:
        raise ConfigError("initial.init_mineral must be nonnegative")
    if cfg.t_end < 0 or cfg.dt <= 0:
        raise ConfigError("time.t_end must be >= 0 and time.dt > 0")
    if cfg.snapshot_stride < 0:
        raise ConfigError("time.snapshot_stride must be >= 0")
    if cfg.cell_flow not in ("none", "x", "y"):
        raise ConfigError("physics.cell_flow must be none|x|y")
    if not (cfg.q0 == "zero" or cfg.q0.startswith("shear:")):
        raise ConfigError("physics.q0 must be zero or shear:amplitude,wavenumber")
    if cfg.table_points < 2:
        raise ConfigError("kinetics_table.points must be >= 2")
    if len(cfg.eps_list) != 0 and min(cfg.eps_list) < 1:
        raise ConfigError("sweep.eps_list entries must be reciprocals of positive integers")
    if any(d <= 0 for d in cfg.delta_list):
        raise ConfigError("sweep.delta_list entries must be positive")


def _format_value(attr, value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if attr == "inv_epsilon":
        return f"1/{value}"
    if attr == "eps_list":
        return ",".join(f"1/{m}" for m in value)
    if attr == "delta_list":
        return ",".join(f"{d:.17g}" for d in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit(cfg):
    """Serialize a config in the parseable key=value format (round-trips)."""
    out = io.StringIO()
    for sec, keys in _SCHEMA.items():
        lines = []
        for key, (attr, parser, default) in keys.items():
            if attr is None:
                continue
            lines.append(f"{key} = {_format_value(attr, getattr(cfg, attr))}")
        if lines:
            out.write(f"[{sec}]\n")
            out.write("\n".join(lines))
            out.write("\n\n")
    return out.getvalue()


def with_updates(cfg, **updates):
    new = replace(cfg, **updates)
    _validate(new)
    return new


def boundary_tables(cfg):
    """The four boundary flux tables in solver form."""
    return {name: _parse_time_table(getattr(cfg, name), f"boundary.{name}")
            for name in ("inflow_u", "outflow_u", "inflow_v", "outflow_v")}
