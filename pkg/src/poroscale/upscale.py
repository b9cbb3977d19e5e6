"""Verification harness: pore-scale vs homogenized comparisons, scale
sweeps, and the iterated-limit commutation study.

The comparison metric is the pore-restricted L2 distance: the macroscopic
fields are bilinearly sampled at the pore-cell centers (concentrations) and
at the interface-face midpoints (mineral mass, with the epsilon-weighted
surface measure).  Both solvers evolve intrinsic pore concentrations, so no
porosity factor enters the pointwise differences; the report headers state
the metric.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import VerificationError


def bilinear_sample(grid_field, extent, xs, ys):
    """Sample a cell-centered (n, n) field at physical points, clamping to
    the outermost cell centers (constant extrapolation in the half-cell
    margin)."""
    n = grid_field.shape[0]
    h = extent / n
    gx = np.clip(xs / h - 0.5, 0.0, n - 1.0)
    gy = np.clip(ys / h - 0.5, 0.0, n - 1.0)
    i0 = np.minimum(gx.astype(np.int64), n - 2)
    j0 = np.minimum(gy.astype(np.int64), n - 2)
    fx = gx - i0
    fy = gy - j0
    f00 = grid_field[i0, j0]
    f10 = grid_field[i0 + 1, j0]
    f01 = grid_field[i0, j0 + 1]
    f11 = grid_field[i0 + 1, j0 + 1]
    return (f00 * (1 - fx) * (1 - fy) + f10 * fx * (1 - fy)
            + f01 * (1 - fx) * fy + f11 * fx * fy)


def compare_micro_macro(micro_run, macro_run):
    """Pore-restricted L2 differences of the final states.

    Returns {"L2_u", "L2_v", "L2_w"}; concentrations are compared on pore
    cells with the cell volume, mineral mass on interface faces with the
    epsilon-weighted surface measure."""
    ms = micro_run.final
    hs = macro_run.final
    if abs(ms.t - hs.t) > 1e-9 * max(1.0, ms.t):
        raise VerificationError(
            f"snapshot times differ: micro t={ms.t}, macro t={hs.t}")
    dom = micro_run.domain
    extent = macro_run.extent
    if abs(extent - dom.macro_extent) > 1e-12:
        raise VerificationError("micro and macro domains have different extents")
    pore = dom.pore_mask
    xs, ys = dom.cell_centers()
    vol = dom.spacing ** 2

    out = {}
    for name, mic, mac in (("L2_u", ms.u, hs.u), ("L2_v", ms.v, hs.v)):
        sampled = bilinear_sample(mac, extent, xs[pore], ys[pore])
        diff = mic[pore] - sampled
        out[name] = float(np.sqrt((diff ** 2).sum() * vol))

    fx, fy = dom.face_midpoints()
    w_mac = bilinear_sample(hs.w, extent, fx, fy)
    diff_w = ms.w - w_mac
    out["L2_w"] = float(np.sqrt(dom.epsilon * dom.spacing * (diff_w ** 2).sum()))
    return out


@dataclass
class ErrorTable:
    """Rows of {epsilon, delta, L2_u, L2_v, L2_w, runtime_seconds}, kept
    sorted by (epsilon, delta)."""
    rows: list = field(default_factory=list)

    def add(self, epsilon, delta, errs, runtime):
        self.rows.append({
            "epsilon": epsilon, "delta": delta,
            "L2_u": errs["L2_u"], "L2_v": errs["L2_v"], "L2_w": errs["L2_w"],
            "runtime_seconds": runtime,
        })
        self.rows.sort(key=lambda r: (r["epsilon"], r["delta"]))

    def column(self, name, reverse_eps=False):
        rows = self.rows
        if reverse_eps:
            rows = sorted(rows, key=lambda r: -r["epsilon"])
        return [r[name] for r in rows]


def epsilon_sweep(runner, eps_list, delta):
    """One micro run per epsilon against a shared macro reference.

    runner must provide run_micro(inv_epsilon, delta) -> MicroRun and
    run_macro(mode, delta) -> MacroRun; see cli/config wiring or the tests
    for concrete runners.
    """
    table = ErrorTable()
    if not eps_list:
        return table, None
    macro = runner.run_macro("regularized", delta)
    for inv_eps in eps_list:
        t0 = time.perf_counter()
        micro = runner.run_micro(inv_eps, delta)
        errs = compare_micro_macro(micro, macro)
        table.add(1.0 / inv_eps, delta, errs, time.perf_counter() - t0)
    return table, macro


@dataclass
class CommutationReport:
    rows: list                    # per diagonal stage: delta, epsilon, gaps
    path_b_trend: list            # ||macro_reg(delta_k) - macro_event|| per stage
    frozen: bool = False

    def gap_columns(self):
        return {k: [r[k] for r in self.rows] for k in ("gap_u", "gap_v", "gap_w")}


def macro_state_distance(run_a, run_b):
    """L2 distances between two macro runs on the same grid."""
    a, b = run_a.final, run_b.final
    vol = run_a.h ** 2
    return {
        "u": float(np.sqrt(((a.u - b.u) ** 2).sum() * vol)),
        "v": float(np.sqrt(((a.v - b.v) ** 2).sum() * vol)),
        "w": float(np.sqrt(((a.w - b.w) ** 2).sum() * vol)),
    }


def limit_order_study(runner, eps_list, delta_list, frozen_delta=None):
    """Iterated-limit commutation study along the diagonal
    (delta_k, epsilon_k).

    Path A sends the regularization to zero inside the pore-scale solver
    and targets the event-mode (multivalued) macro system; path B
    homogenizes at fixed delta (regularized macro system) and then sends
    delta to zero.  The commutation gap reported per stage is the
    pore-restricted L2 distance between the stage's micro run and the
    event-mode macro run; the path-B trend is the distance between the
    regularized and the event-mode macro runs.  With frozen_delta set, the
    micro runs keep that regularization while epsilon still shrinks (the
    negative control: the gap then stalls at the regularization error).
    """
    if not eps_list or not delta_list:
        raise VerificationError("limit_order_study needs nonempty sweep lists")
    macro_event = runner.run_macro("event", None)
    rows = []
    path_b = []
    for inv_eps, delta in zip(eps_list, delta_list):
        micro_delta = frozen_delta if frozen_delta is not None else delta
        micro = runner.run_micro(inv_eps, micro_delta)
        gaps = compare_micro_macro(micro, macro_event)
        rows.append({
            "delta": micro_delta, "epsilon": 1.0 / inv_eps,
            "gap_u": gaps["L2_u"], "gap_v": gaps["L2_v"], "gap_w": gaps["L2_w"],
        })
        macro_reg = runner.run_macro("regularized", delta)
        path_b.append(macro_state_distance(macro_reg, macro_event))
    return CommutationReport(rows, path_b, frozen=frozen_delta is not None)


def format_report(table=None, commutation=None, control=None):
    """Human-readable verification summary (written as report.txt)."""
    lines = [
        "verification report",
        "metric: pore-restricted L2 (concentrations on pore-cell centers,",
        "        mineral mass on interface faces with the eps-weighted surface measure);",
        "        both scales carry intrinsic pore concentrations, no porosity factor.",
        "",
    ]
    ok = True
    if table is not None:
        lines.append("scale sweep (fixed delta):")
        lines.append("  epsilon      L2_u          L2_v          L2_w")
        for r in sorted(table.rows, key=lambda r: -r["epsilon"]):
            lines.append(f"  {r['epsilon']:<10.6g} {r['L2_u']:<13.6g} "
                         f"{r['L2_v']:<13.6g} {r['L2_w']:<13.6g}")
        for name in ("L2_u", "L2_v", "L2_w"):
            col = table.column(name, reverse_eps=True)
            mono = all(b < a for a, b in zip(col, col[1:]))
            ok &= mono
            lines.append(f"  {name} strictly decreasing in epsilon: {'PASS' if mono else 'FAIL'}")
        lines.append("")
    if commutation is not None:
        lines.append("iterated-limit study (diagonal delta_k, epsilon_k):")
        lines.append("  delta      epsilon    gap_u         gap_v         gap_w")
        for r in commutation.rows:
            lines.append(f"  {r['delta']:<10.6g} {r['epsilon']:<10.6g} "
                         f"{r['gap_u']:<13.6g} {r['gap_v']:<13.6g} {r['gap_w']:<13.6g}")
        for name in ("gap_u", "gap_v", "gap_w"):
            col = [r[name] for r in commutation.rows]
            mono = all(b < a for a, b in zip(col, col[1:]))
            ok &= mono
            lines.append(f"  {name} strictly decreasing along the diagonal: "
                         f"{'PASS' if mono else 'FAIL'}")
        lines.append("  path-B trend ||macro_reg(delta_k) - macro_event||_u: "
                     + ", ".join(f"{d['u']:.6g}" for d in commutation.path_b_trend))
        lines.append("")
    if control is not None:
        lines.append("negative control (delta frozen):")
        for name in ("gap_u", "gap_v", "gap_w"):
            col = [r[name] for r in control.rows]
            lines.append(f"  {name}: " + ", ".join(f"{v:.6g}" for v in col))
        col = [r["gap_u"] for r in control.rows]
        nondec = all(b >= a for a, b in zip(col, col[1:]))
        ok &= nondec
        lines.append(f"  gap_u non-decreasing (commutation requires both limits): "
                     f"{'PASS' if nondec else 'FAIL'}")
        lines.append("")
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    return "\n".join(lines) + "\n", ok
