"""CSV and (optional) legacy-VTK writers.

All floats are written with %.17g so files round-trip exactly and repeated
runs of a deterministic simulation produce byte-identical output (the sweep
error table additionally records wall-clock runtimes, which are excluded
from any byte-identity claim).
"""

import os

import numpy as np


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_geometry_csv(path, summaries):
    write_csv(path, ["epsilon", "pore_volume", "gamma_measure", "eps_times_gamma_star"],
              [(s["epsilon"], s["pore_volume"], s["gamma_measure"],
                s["eps_times_gamma_star"]) for s in summaries])


def write_tensors_csv(path, entries):
    """entries: iterable of (x_point, EffectiveCoefficients)."""
    header = ["x1", "x2", "a11", "a12", "a21", "a22",
              "b11", "b12", "b21", "b22",
              "qbar1", "qbar2", "qt01", "qt02", "porosity"]
    rows = []
    for x, eff in entries:
        rows.append((x[0], x[1],
                     eff.a[0, 0], eff.a[0, 1], eff.a[1, 0], eff.a[1, 1],
                     eff.b[0, 0], eff.b[0, 1], eff.b[1, 0], eff.b[1, 1],
                     eff.q_bar[0], eff.q_bar[1],
                     eff.q_tilde0[0], eff.q_tilde0[1], eff.porosity))
    write_csv(path, header, rows)


def write_kinetics_csv(path, us, vs, rates, psi_at_w0):
    rows = []
    for i, u in enumerate(us):
        for j, v in enumerate(vs):
            rows.append((u, v, rates[i, j], psi_at_w0))
    write_csv(path, ["u", "v", "R", "psi_delta_at_w0"], rows)


def write_micro_fields_csv(out_dir, step, domain, state):
    pore = domain.pore_mask
    xs, ys = domain.cell_centers()
    rows = zip(xs[pore], ys[pore], state.u[pore], state.v[pore])
    write_csv(os.path.join(out_dir, f"micro_fields_{step}.csv"),
              ["x1", "x2", "u", "v"], rows)


def write_micro_boundary_csv(out_dir, step, domain, state):
    fx, fy = domain.face_midpoints()
    rows = ((fid, fx[fid], fy[fid], state.w[fid], state.z[fid])
            for fid in range(domain.n_faces))
    write_csv(os.path.join(out_dir, f"micro_boundary_{step}.csv"),
              ["face_id", "x1", "x2", "w", "z_used"], rows)


def write_diag_csv(path, diag_rows):
    if not diag_rows:
        return
    header = list(diag_rows[0].keys())
    write_csv(path, header, ([row[k] for k in header] for row in diag_rows))


def write_macro_fields_csv(out_dir, step, run, state):
    xs, ys = run.cell_centers()
    rows = zip(xs.ravel(), ys.ravel(), state.u.ravel(), state.v.ravel(),
               state.w.ravel(), state.sink.ravel(), state.z.ravel())
    write_csv(os.path.join(out_dir, f"macro_fields_{step}.csv"),
              ["x1", "x2", "u", "v", "w", "P", "z_used"], rows)


def write_errors_csv(path, table):
    write_csv(path, ["epsilon", "delta", "L2_u", "L2_v", "L2_w", "runtime_seconds"],
              ([r["epsilon"], r["delta"], r["L2_u"], r["L2_v"], r["L2_w"],
                r["runtime_seconds"]] for r in table.rows))


def write_commutation_csv(path, report):
    write_csv(path, ["delta", "epsilon", "gap_u", "gap_v", "gap_w"],
              ([r["delta"], r["epsilon"], r["gap_u"], r["gap_v"], r["gap_w"]]
               for r in report.rows))


def write_vtk_structured(path, fields, spacing, origin=(0.0, 0.0)):
    """Legacy-ASCII structured-points dump of cell-centered 2D fields
    (point data on the lattice of cell centers), for visualization only."""
    names = list(fields)
    n0, n1 = fields[names[0]].shape
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("poroscale cell fields\nASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {n0} {n1} 1\n")
        fh.write(f"ORIGIN {origin[0] + spacing / 2:.17g} {origin[1] + spacing / 2:.17g} 0\n")
        fh.write(f"SPACING {spacing:.17g} {spacing:.17g} 1\n")
        fh.write(f"POINT_DATA {n0 * n1}\n")
        for name in names:
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            # VTK varies x fastest
            for j in range(n1):
                for i in range(n0):
                    fh.write(f"{fields[name][i, j]:.17g}\n")
