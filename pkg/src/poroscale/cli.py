"""Command-line interface.

Subcommands: cell, micro, macro, sweep, commute, kinetics-table.  Every run
reads one config file (--config), applies repeatable --override
section.key=value patches, echoes the fully resolved configuration into the
output directory and writes the subcommand's CSV artifacts there.

Exit codes: 0 success, 2 configuration/geometry error, 3 solver error,
4 verification-assertion failure (sweep/commute monotonicity).
"""

import argparse
import os
import sys

import numpy as np

from . import cell as cell_mod
from . import output, upscale
from .config import emit, parse_and_validate, with_updates
from .driver import (ConfigRunner, diffusivity_cell_values,
                     diffusivity_modulation)
from .errors import ConfigError, GeometryError, SolverError, VerificationError
from .geometry import geometry_summary
from .kinetics import langmuir_rate, psi_delta


def _load_config(args):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    cfg = parse_and_validate(text, args.override)
    if args.out:
        cfg = with_updates(cfg, out_dir=args.out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, "resolved_config"), "w") as fh:
        fh.write(emit(cfg))
    return cfg


def _write_snapshots_micro(cfg, run):
    for state in run.states:
        step = int(round(state.t / cfg.dt)) if cfg.dt else 0
        output.write_micro_fields_csv(cfg.out_dir, step, run.domain, state)
        output.write_micro_boundary_csv(cfg.out_dir, step, run.domain, state)
    output.write_diag_csv(os.path.join(cfg.out_dir, "micro_diag.csv"), run.diag)


def _write_snapshots_macro(cfg, run):
    for state in run.states:
        step = int(round(state.t / cfg.dt)) if cfg.dt else 0
        output.write_macro_fields_csv(cfg.out_dir, step, run, state)
    output.write_diag_csv(os.path.join(cfg.out_dir, "macro_diag.csv"), run.diag)


def cmd_cell(cfg):
    runner = ConfigRunner(cfg)
    mod_u = diffusivity_modulation(cfg.diff_u)
    mod_v = diffusivity_modulation(cfg.diff_v)
    flow_dir = {"none": None, "x": 0, "y": 1}[cfg.cell_flow]
    if mod_u is None and mod_v is None:
        eff = runner.effective()
        center = cfg.macro_extent / 2.0
        entries = [(np.array([center, center]), eff)]
    else:
        m = cfg.macro_resolution
        c = (np.arange(m) + 0.5) * (cfg.macro_extent / m)
        points = [np.array([xi, cfg.macro_extent / 2.0]) for xi in c]
        entries = cell_mod.effective_sweep(
            runner.unit_cell,
            lambda cl: diffusivity_cell_values(cfg.diff_u, cl),
            lambda cl: diffusivity_cell_values(cfg.diff_v, cl),
            points, m1=mod_u, m2=mod_v, mu=cfg.mu,
            flow_direction=flow_dir, refine=cfg.cell_refine)
    output.write_tensors_csv(os.path.join(cfg.out_dir, "tensors.csv"), entries)
    output.write_geometry_csv(os.path.join(cfg.out_dir, "geometry.csv"),
                              [geometry_summary(runner.domain())])
    if cfg.write_vtk:
        rc = runner.unit_cell.refine(cfg.cell_refine)
        corr = cell_mod.solve_correctors(rc, diffusivity_cell_values(cfg.diff_u, rc))
        fields = {"k1": corr.k[0], "k2": corr.k[1]}
        output.write_vtk_structured(os.path.join(cfg.out_dir, "correctors.vtk"),
                                    fields, rc.spacing)
    return 0


def cmd_micro(cfg):
    runner = ConfigRunner(cfg)
    stride = cfg.snapshot_stride or max(1, int(round(cfg.t_end / cfg.dt)) or 1)
    run = runner.run_micro(snapshot_stride=stride)
    _write_snapshots_micro(cfg, run)
    output.write_geometry_csv(os.path.join(cfg.out_dir, "geometry.csv"),
                              [geometry_summary(run.domain)])
    return 0


def cmd_macro(cfg):
    runner = ConfigRunner(cfg)
    eff = runner.effective()
    center = cfg.macro_extent / 2.0
    output.write_tensors_csv(os.path.join(cfg.out_dir, "tensors.csv"),
                             [(np.array([center, center]), eff)])
    stride = cfg.snapshot_stride or max(1, int(round(cfg.t_end / cfg.dt)) or 1)
    run = runner.run_macro(snapshot_stride=stride)
    _write_snapshots_macro(cfg, run)
    return 0


def cmd_sweep(cfg):
    runner = ConfigRunner(cfg)
    table, _macro = upscale.epsilon_sweep(runner, cfg.eps_list, cfg.delta)
    output.write_errors_csv(os.path.join(cfg.out_dir, "errors.csv"), table)
    output.write_geometry_csv(
        os.path.join(cfg.out_dir, "geometry.csv"),
        [geometry_summary(runner.domain(m)) for m in cfg.eps_list])
    text, ok = upscale.format_report(table=table)
    with open(os.path.join(cfg.out_dir, "report.txt"), "w") as fh:
        fh.write(text)
    if not ok:
        raise VerificationError("scale-sweep error trend assertion failed; see report.txt")
    return 0


def cmd_commute(cfg):
    runner = ConfigRunner(cfg)
    if len(cfg.eps_list) != len(cfg.delta_list):
        raise ConfigError("sweep.eps_list and sweep.delta_list must pair up for commute")
    report = upscale.limit_order_study(runner, cfg.eps_list, cfg.delta_list)
    control = upscale.limit_order_study(runner, cfg.eps_list, cfg.delta_list,
                                        frozen_delta=1.0)
    output.write_commutation_csv(os.path.join(cfg.out_dir, "commutation.csv"), report)
    text, ok = upscale.format_report(commutation=report, control=control)
    with open(os.path.join(cfg.out_dir, "report.txt"), "w") as fh:
        fh.write(text)
    if not ok:
        raise VerificationError("commutation assertion failed; see report.txt")
    return 0


def cmd_kinetics_table(cfg):
    kin = ConfigRunner(cfg).kinetics()
    us = np.linspace(0.0, cfg.table_u_max, cfg.table_points)
    vs = np.linspace(0.0, cfg.table_v_max, cfg.table_points)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    rates = langmuir_rate(uu, vv, kin)
    psi0 = psi_delta(cfg.init_mineral, kin.delta)
    output.write_kinetics_csv(os.path.join(cfg.out_dir, "kinetics.csv"),
                              us, vs, rates, psi0)
    return 0


_COMMANDS = {
    "cell": cmd_cell,
    "micro": cmd_micro,
    "macro": cmd_macro,
    "sweep": cmd_sweep,
    "commute": cmd_commute,
    "kinetics-table": cmd_kinetics_table,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="poroscale",
        description="Two-scale reactive-transport simulator with crystal "
                    "dissolution/precipitation in periodic porous media.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the key=value config file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="config override, repeatable")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, GeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
