"""Wiring from a validated SimulationConfig to solver runs.

Evaluates the field mini-language (diffusivities, initial data, initial
flow) on the cell, pore-scale and macro grids, caches the cell-problem
solve, and exposes the run_micro/run_macro pair the sweep harness drives.
"""

import numpy as np

from . import cell as cell_mod
from .config import boundary_tables
from .errors import ConfigError
from .geometry import build_perforated_domain, build_unit_cell
from .kinetics import KineticsParams
from .macro import macro_simulate
from .micro import BoundaryData, micro_simulate


def _split_spec(spec):
    kind, _, rest = spec.partition(":")
    vals = [float(t) for t in rest.split(",")] if rest else []
    return kind, vals


def diffusivity_cell_values(spec, cell):
    """The periodic y-part of a diffusivity spec on the cell grid."""
    kind, vals = _split_spec(spec)
    n = cell.resolution
    if kind in ("constant", "xlinear"):
        return np.full((n, n), vals[0])
    if kind == "laminate":
        a, b = vals
        y1 = (np.arange(n) + 0.5) / n
        col = np.where(y1 < 0.5, a, b)
        return np.broadcast_to(col[:, None], (n, n)).copy()
    raise ConfigError(f"unknown diffusivity kind {spec!r}")


def diffusivity_modulation(spec):
    """The macroscopic multiplier m(x1) of a separable spec (vectorized over
    the first coordinate), or None for x-independent data."""
    kind, _ = _split_spec(spec)
    if kind == "xlinear":
        return lambda x1: 1.0 + np.asarray(x1, dtype=float)
    return None


def diffusivity_micro_values(spec, domain):
    """D(x, x/eps) on the global pore grid: the periodic y-part tiled
    exactly, times the macroscopic multiplier at the cell centers."""
    base = diffusivity_cell_values(spec, domain.cell)
    tiles = domain.n_grid // domain.cell.resolution
    vals = np.tile(base, (tiles, tiles))
    mod = diffusivity_modulation(spec)
    if mod is not None:
        x, _ = domain.cell_centers()
        vals = vals * mod(x)
    return vals


def check_diffusivity_bounds(vals, alpha, m_bound, name):
    """Runtime recheck of the declared ellipticity bounds on the evaluated
    diffusivity array (config validation bounds the field description
    analytically; this guards the arrays the solvers actually consume)."""
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if lo < alpha - 1e-12 or hi > m_bound + 1e-12:
        raise ConfigError(f"{name}: evaluated diffusivity range [{lo}, {hi}] "
                          f"violates the declared bounds [{alpha}, {m_bound}]")


def initial_field(spec, xs, ys, extent):
    kind, vals = _split_spec(spec)
    if kind == "constant":
        return np.full_like(xs, vals[0])
    if kind == "cosx":
        base, amp = vals
        return base + amp * np.cos(np.pi * xs / extent)
    if kind == "cosy":
        base, amp = vals
        return base + amp * np.cos(np.pi * ys / extent)
    raise ConfigError(f"unknown initial field kind {spec!r}")


def initial_flow(spec, domain):
    """Optional initial MAC velocity; None keeps the fluid at rest."""
    if spec == "zero":
        return None
    kind, vals = _split_spec(spec)
    amp, wavenum = vals[0], int(vals[1]) if len(vals) > 1 else 1
    n = domain.n_grid
    h = domain.spacing
    yc = (np.arange(n) + 0.5) * h
    qu = np.zeros((n + 1, n))
    qu[:, :] = amp * np.sin(2.0 * np.pi * wavenum * yc / domain.macro_extent)[None, :]
    qv = np.zeros((n, n + 1))
    return qu, qv


class ConfigRunner:
    """Builds geometry once and runs pore-scale/homogenized problems with
    optional per-run overrides of epsilon, delta and the dissolution mode
    (what the sweep and commutation studies vary)."""

    def __init__(self, cfg):
        self.cfg = cfg
        inclusion = None if cfg.inclusion == "none" else (cfg.inclusion, cfg.inclusion_size)
        self.unit_cell = build_unit_cell(cfg.cell_resolution, inclusion)
        self._eff = None
        self._domains = {}

    # -- shared pieces ------------------------------------------------------

    def kinetics(self, delta=None, mode=None):
        return KineticsParams(
            k_f=self.cfg.rate_forward, k_d=self.cfg.rate_dissolution,
            k1=self.cfg.langmuir_u, k2=self.cfg.langmuir_v,
            delta=self.cfg.delta if delta is None else delta,
            mode=self.cfg.mode if mode is None else mode)

    def boundary(self):
        t = boundary_tables(self.cfg)
        return BoundaryData(t["inflow_u"], t["outflow_u"], t["inflow_v"], t["outflow_v"])

    def domain(self, inv_epsilon=None):
        m = self.cfg.inv_epsilon if inv_epsilon is None else inv_epsilon
        if m not in self._domains:
            self._domains[m] = build_perforated_domain(
                self.unit_cell, m, self.cfg.macro_extent,
                self.cfg.inflow_edge, self.cfg.outflow_edge)
        return self._domains[m]

    def effective(self):
        """Cell-problem solve on the refined pixel geometry (cached)."""
        if self._eff is None:
            cfg = self.cfg
            for attr in ("diff_u", "diff_v"):
                if diffusivity_modulation(getattr(cfg, attr)) is not None:
                    raise ConfigError(
                        f"physics.{attr}: x-modulated diffusivities need the "
                        "tensor sweep (cell subcommand), not a homogenized run")
            flow_dir = {"none": None, "x": 0, "y": 1}[cfg.cell_flow]
            self._eff = cell_mod.solve_effective(
                self.unit_cell,
                lambda c: diffusivity_cell_values(cfg.diff_u, c),
                lambda c: diffusivity_cell_values(cfg.diff_v, c),
                mu=cfg.mu, flow_direction=flow_dir, refine=cfg.cell_refine)
        return self._eff

    # -- runs ---------------------------------------------------------------

    def run_micro(self, inv_epsilon=None, delta=None, mode=None,
                  t_end=None, dt=None, snapshot_stride=None, w0=None,
                  u0=None, v0=None):
        cfg = self.cfg
        dom = self.domain(inv_epsilon)
        xs, ys = dom.cell_centers()
        dvals_u = diffusivity_micro_values(cfg.diff_u, dom)
        dvals_v = diffusivity_micro_values(cfg.diff_v, dom)
        check_diffusivity_bounds(dvals_u, cfg.alpha, cfg.m_bound, "physics.diff_u")
        check_diffusivity_bounds(dvals_v, cfg.alpha, cfg.m_bound, "physics.diff_v")
        return micro_simulate(
            dom,
            dvals_u,
            dvals_v,
            self.kinetics(delta, mode), self.boundary(),
            cfg.t_end if t_end is None else t_end,
            cfg.dt if dt is None else dt,
            initial_field(cfg.init_u, xs, ys, cfg.macro_extent) if u0 is None else u0,
            initial_field(cfg.init_v, xs, ys, cfg.macro_extent) if v0 is None else v0,
            cfg.init_mineral if w0 is None else w0,
            mu=cfg.mu, q0=initial_flow(cfg.q0, dom),
            snapshot_stride=cfg.snapshot_stride if snapshot_stride is None else snapshot_stride)

    def run_macro(self, mode=None, delta=None, n=None, t_end=None, dt=None,
                  snapshot_stride=None, w0=None, u0=None, v0=None):
        cfg = self.cfg
        eff = self.effective()
        m = cfg.macro_resolution if n is None else n
        c = (np.arange(m) + 0.5) * (cfg.macro_extent / m)
        xs, ys = np.meshgrid(c, c, indexing="ij")
        provider = None
        if cfg.time_dependent_cells:
            provider = lambda t: eff      # steady cell flow: constant in time
        return macro_simulate(
            m, cfg.macro_extent, eff, self.kinetics(delta, mode),
            self.boundary(), self.unit_cell.boundary_measure,
            cfg.t_end if t_end is None else t_end,
            cfg.dt if dt is None else dt,
            initial_field(cfg.init_u, xs, ys, cfg.macro_extent) if u0 is None else u0,
            initial_field(cfg.init_v, xs, ys, cfg.macro_extent) if v0 is None else v0,
            cfg.init_mineral if w0 is None else w0,
            snapshot_stride=cfg.snapshot_stride if snapshot_stride is None else snapshot_stride,
            eff_provider=provider,
            inflow_edge=cfg.inflow_edge, outflow_edge=cfg.outflow_edge)
