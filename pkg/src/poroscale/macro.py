"""Macroscopic (homogenized) solver on the plain square grid.

The mineral mass w is carried per macro cell (the interface value is
y-uniform when the initial mineral mass is, since the precipitation rate
only sees the macroscopic concentrations).  Each step advances w by the
same surface ODE used at the pore scale, turns its rate into the solute
sink P = (|Gamma|/|Y^p|) dw/dt, and then takes one implicit step of the
tensor-diffusion/drift transport for each species with P and the boundary
data explicit.  Boundary flux densities are scaled by 1/|Y^p| exactly as
the limit equations require, which makes the closed-system mass identity
|Y^p| int u + |Gamma| int w = const hold to solver precision.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError
from .kinetics import surface_ode_step


@dataclass
class MacroState:
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray
    sink: np.ndarray

    def copy(self):
        return MacroState(self.t, self.u.copy(), self.v.copy(), self.w.copy(),
                          self.z.copy(), self.sink.copy())


def sink_term(w_rate, gamma_measure, porosity):
    """Solute sink P = (|Gamma|/|Y^p|) * dw/dt for y-uniform mineral mass."""
    return (gamma_measure / porosity) * np.asarray(w_rate)


class MacroTransport:
    """Backward-Euler step operator for one species:
    (u+ - u)/dt - div(T grad u+ - drift u+) = -P with prescribed-flux
    boundaries (inflow/outflow scaled data, no-flux elsewhere).

    The 2x2 tensor T uses a 9-point stencil: two-point fluxes for the
    diagonal entries and clamped tangential averages for the off-diagonal
    correction.  The drift is folded in with first-order upwinding.
    """

    def __init__(self, n, extent, tensor, drift, dt,
                 inflow_edge="left", outflow_edge="right"):
        self.n = n
        self.h = extent / n
        self.dt = dt
        self.vol = self.h ** 2
        self.inflow_edge = inflow_edge
        self.outflow_edge = outflow_edge
        t11, t12 = tensor[0]
        t21, t22 = tensor[1]
        h = self.h
        idx = np.arange(n * n).reshape(n, n)
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(r)
            cols.append(c)
            vals.append(v)

        def cross_pairs(i, j, axis):
            """Clamped tangential difference (u[hi]-u[lo])/span at cell (i,j)."""
            if axis == 1:
                lo, hi = max(j - 1, 0), min(j + 1, n - 1)
                return idx[i, hi], idx[i, lo], (hi - lo) * h
            lo, hi = max(i - 1, 0), min(i + 1, n - 1)
            return idx[hi, j], idx[lo, j], (hi - lo) * h

        def face(axis, i, j):
            """Assemble the flux through one interior face into the rows of
            both adjacent cells (normal points from cell a to cell b)."""
            if axis == 0:
                a_cell, b_cell = (i - 1, j), (i, j)
                dmain, dcross = t11, t12
            else:
                a_cell, b_cell = (i, j - 1), (i, j)
                dmain, dcross = t22, t21
            ca, cb = idx[a_cell], idx[b_cell]
            qn = drift[axis]
            dcoef = dmain / h * h
            qa = max(qn, 0.0) * h
            qb = min(qn, 0.0) * h
            # main diffusive + upwind advective part: outflow of a = inflow of b
            add(ca, ca, dcoef + qa)
            add(ca, cb, -dcoef + qb)
            add(cb, cb, dcoef - qb)
            add(cb, ca, -dcoef - qa)
            if dcross != 0.0:
                # tangential gradient averaged over the two adjacent cells
                for ii, jj in (a_cell, b_cell):
                    chi, clo, span = cross_pairs(ii, jj, 1 - axis)
                    coef = 0.5 * dcross * h / span
                    add(ca, chi, -coef)
                    add(ca, clo, coef)
                    add(cb, chi, coef)
                    add(cb, clo, -coef)

        for i in range(1, n):
            for j in range(n):
                face(0, i, j)
        for i in range(n):
            for j in range(1, n):
                face(1, i, j)

        all_idx = np.arange(n * n)
        rows.extend(all_idx)
        cols.extend(all_idx)
        vals.extend(np.full(n * n, self.vol / dt))
        mat = sp.csc_matrix((vals, (rows, cols)), shape=(n * n, n * n))
        try:
            self.lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SolverError(f"macro transport factorization failed: {exc}") from exc

        edges = {
            "left": idx[0, :], "right": idx[-1, :],
            "bottom": idx[:, 0], "top": idx[:, -1],
        }
        self.in_cells = edges[inflow_edge]
        self.out_cells = edges[outflow_edge]

    def step(self, u_prev, sink, bc_in, bc_out):
        rhs = (self.vol / self.dt) * u_prev.ravel() - self.vol * sink.ravel()
        if bc_in != 0.0:
            np.add.at(rhs, self.in_cells, -bc_in * self.h)
        if bc_out != 0.0:
            np.add.at(rhs, self.out_cells, -bc_out * self.h)
        return self.lu.solve(rhs).reshape(self.n, self.n)


def macro_step(state, dt, eff, boundary, kin, gamma_measure, trans_u, trans_v):
    """One coupled step: mineral ODE, sink assembly, two implicit transport
    solves.  Returns the new state."""
    w_new, z = surface_ode_step(state.w.ravel(), state.u.ravel(), state.v.ravel(), dt, kin)
    w_new = w_new.reshape(state.w.shape)
    z = z.reshape(state.w.shape)
    sink = sink_term((w_new - state.w) / dt, gamma_measure, eff.porosity)
    d_in, d_out, g_in, g_out = boundary.at(state.t)
    scale = 1.0 / eff.porosity
    u_new = trans_u.step(state.u, sink, d_in * scale, d_out * scale)
    v_new = trans_v.step(state.v, sink, g_in * scale, g_out * scale)
    return MacroState(state.t + dt, u_new, v_new, w_new, z, sink)


def macro_norms(state, h, gamma_measure):
    vol = h * h
    gx = np.diff(state.u, axis=0) / h
    gy = np.diff(state.u, axis=1) / h
    gvx = np.diff(state.v, axis=0) / h
    gvy = np.diff(state.v, axis=1) / h
    return {
        "t": state.t,
        "l2_u": np.sqrt(float((state.u ** 2).sum()) * vol),
        "l2_v": np.sqrt(float((state.v ** 2).sum()) * vol),
        "h1_u": np.sqrt(float((gx ** 2).sum() + (gy ** 2).sum()) * vol),
        "h1_v": np.sqrt(float((gvx ** 2).sum() + (gvy ** 2).sum()) * vol),
        "l2_w": np.sqrt(gamma_measure * float((state.w ** 2).sum()) * vol),
        "linf_w": float(np.abs(state.w).max()),
        "l2_sink": np.sqrt(float((state.sink ** 2).sum()) * vol),
        "max_sink": float(np.abs(state.sink).max()),
    }


@dataclass
class MacroRun:
    n: int
    extent: float
    eff: object
    states: list
    diag: list = field(default_factory=list)

    @property
    def h(self):
        return self.extent / self.n

    @property
    def final(self):
        return self.states[-1]

    def cell_centers(self):
        c = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(c, c, indexing="ij")


def macro_simulate(n, extent, eff, kin, boundary, gamma_measure, t_end, dt,
                   u0, v0, w0, snapshot_stride=0, eff_provider=None,
                   inflow_edge="left", outflow_edge="right"):
    """Run the homogenized system to t_end on an n x n grid.

    eff_provider, when given, is called as eff_provider(t) before every step
    and the transport operators are rebuilt from its result (time-dependent
    cell problems); otherwise the operators are factorized once from `eff`.
    """
    n_steps = int(round(t_end / dt)) if t_end > 0 else 0
    if t_end > 0 and abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise SolverError(f"t_end={t_end} is not an integer number of steps of dt={dt}")

    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    w = np.full((n, n), float(w0)) if np.isscalar(w0) else np.asarray(w0, float).copy()

    state = MacroState(0.0, u, v, w, np.zeros_like(w), np.zeros_like(w))
    run = MacroRun(n, extent, eff, [state.copy()])
    run.diag.append(macro_norms(state, extent / n, gamma_measure))

    trans_u = trans_v = None
    if eff_provider is None and n_steps:
        trans_u = MacroTransport(n, extent, eff.a, eff.drift, dt, inflow_edge, outflow_edge)
        trans_v = MacroTransport(n, extent, eff.b, eff.drift, dt, inflow_edge, outflow_edge)

    for step in range(1, n_steps + 1):
        cur_eff = eff
        if eff_provider is not None:
            cur_eff = eff_provider(state.t)
            trans_u = MacroTransport(n, extent, cur_eff.a, cur_eff.drift, dt,
                                     inflow_edge, outflow_edge)
            trans_v = MacroTransport(n, extent, cur_eff.b, cur_eff.drift, dt,
                                     inflow_edge, outflow_edge)
        state = macro_step(state, dt, cur_eff, boundary, kin, gamma_measure,
                           trans_u, trans_v)
        run.diag.append(macro_norms(state, extent / n, gamma_measure))
        if snapshot_stride and (step % snapshot_stride == 0 or step == n_steps):
            run.states.append(state.copy())
    if run.states[-1].t != state.t:
        run.states.append(state.copy())
    return run
