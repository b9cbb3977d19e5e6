"""Pore-scale solver on the perforated domain.

One time level advances in the order the semi-implicit scheme prescribes:
the unsteady Stokes flow (implicit viscous step + pressure projection on
the masked MAC grid), then the per-face mineral ODE with the traces of the
previous concentration level, then one implicit diffusion/upwind-advection
step for each species with the surface term and boundary data taken
explicitly.  The same mineral increment feeds both species' interface
fluxes, weighted by epsilon times the face length, so the closed system
conserves  int u + eps int_Gamma* w  to solver precision.

All implicit operators are time-invariant and factorized once (sparse LU).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import SolverError
from .geometry import FACE_NORMALS
from .kinetics import surface_ode_step


@dataclass
class MicroState:
    """Fields of one time level: cell concentrations u, v (zero on solid),
    per-interface-face mineral mass w and dissolution value z, MAC face
    velocities and cell pressure."""
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray
    qu: np.ndarray
    qv: np.ndarray
    p: np.ndarray

    def copy(self):
        return MicroState(self.t, self.u.copy(), self.v.copy(), self.w.copy(),
                          self.z.copy(), self.qu.copy(), self.qv.copy(), self.p.copy())


class BoundaryData:
    """Prescribed total normal-flux densities on the inflow/outflow edges
    for both species; negative inflow values mean influx.  Each entry is a
    constant or a piecewise-constant-in-time table [(t0, v0), (t1, v1), ...]
    evaluated left-continuously."""

    def __init__(self, inflow_u=0.0, outflow_u=0.0, inflow_v=0.0, outflow_v=0.0):
        self.inflow_u = self._table(inflow_u)
        self.outflow_u = self._table(outflow_u)
        self.inflow_v = self._table(inflow_v)
        self.outflow_v = self._table(outflow_v)

    @staticmethod
    def _table(spec):
        if np.isscalar(spec):
            return [(0.0, float(spec))]
        table = sorted((float(t), float(v)) for t, v in spec)
        if not table or table[0][0] > 0.0:
            table.insert(0, (0.0, 0.0))
        return table

    @staticmethod
    def _eval(table, t):
        val = table[0][1]
        for ti, vi in table:
            if ti <= t:
                val = vi
            else:
                break
        return val

    def at(self, t):
        return (self._eval(self.inflow_u, t), self._eval(self.outflow_u, t),
                self._eval(self.inflow_v, t), self._eval(self.outflow_v, t))


# ---------------------------------------------------------------------------
# unsteady Stokes on the masked MAC grid (no-slip everywhere)
# ---------------------------------------------------------------------------

class MicroStokes:
    """Implicit-Euler viscous step with Chorin projection; viscosity scales
    with epsilon^2 as the pore-scale equations require.  Operators are
    factorized once."""

    def __init__(self, domain, mu, dt):
        self.domain = domain
        self.dt = dt
        n = domain.n_grid
        h = domain.spacing
        pore = domain.pore_mask
        nu_eff = (domain.epsilon ** 2) * mu

        au = np.zeros((n + 1, n), dtype=bool)
        av = np.zeros((n, n + 1), dtype=bool)
        au[1:n, :] = pore[:-1, :] & pore[1:, :]
        av[:, 1:n] = pore[:, :-1] & pore[:, 1:]
        self.active_u = au
        self.active_v = av

        self.idx_u = -np.ones((n + 1, n), dtype=np.int64)
        self.idx_v = -np.ones((n, n + 1), dtype=np.int64)
        self.idx_u[au] = np.arange(int(au.sum()))
        self.idx_v[av] = np.arange(int(av.sum()))

        self.visc_u = self._factor_viscous(self.idx_u, comp=0, coef=dt * nu_eff / h ** 2)
        self.visc_v = self._factor_viscous(self.idx_v, comp=1, coef=dt * nu_eff / h ** 2)

        self.idx_p = -np.ones((n, n), dtype=np.int64)
        self.idx_p[pore] = np.arange(int(pore.sum()))
        self.poisson = self._factor_poisson()

    def _neighbor(self, idx, i, j, comp, axis, step):
        """Neighbor face DOF and the wall treatment code:
        returns (dof or -1, diag_factor)."""
        n = self.domain.n_grid
        if comp == 0:
            ni, nj = i + step if axis == 0 else i, j + step if axis == 1 else j
            if axis == 0:
                if ni < 0 or ni > n:
                    return -1, 0.0          # beyond the boundary face: nothing
                return idx[ni, nj], 1.0
            if nj < 0 or nj >= n:
                return -1, 2.0              # tangential wall at the domain edge
            return idx[ni, nj], 1.0
        ni, nj = i + step if axis == 0 else i, j + step if axis == 1 else j
        if axis == 1:
            if nj < 0 or nj > n:
                return -1, 0.0
            return idx[ni, nj], 1.0
        if ni < 0 or ni >= n:
            return -1, 2.0
        return idx[ni, nj], 1.0

    def _factor_viscous(self, idx, comp, coef):
        rows, cols, vals = [], [], []
        ii, jj = np.nonzero(idx >= 0)
        for i, j in zip(ii, jj):
            r = idx[i, j]
            diag = 1.0
            for axis, step in ((0, -1), (0, 1), (1, -1), (1, 1)):
                nb, factor = self._neighbor(idx, i, j, comp, axis, step)
                if factor == 0.0:
                    continue
                diag += factor * coef
                if nb >= 0:
                    rows.append(r)
                    cols.append(nb)
                    vals.append(-coef)
                # inactive neighbor (-1 with factor>0): no-slip value 0
            rows.append(r)
            cols.append(r)
            vals.append(diag)
        nunk = int((idx >= 0).sum())
        if nunk == 0:
            return None
        mat = sp.csc_matrix((vals, (rows, cols)), shape=(nunk, nunk))
        return spla.splu(mat)

    def _factor_poisson(self):
        n = self.domain.n_grid
        pore = self.domain.pore_mask
        rows, cols, vals = [], [], []
        ii, jj = np.nonzero(pore)
        for i, j in zip(ii, jj):
            r = self.idx_p[i, j]
            if r == 0:
                rows.append(0)
                cols.append(0)
                vals.append(1.0)
                continue
            diag = 0.0
            for di, dj in FACE_NORMALS:
                ni, nj = i + di, j + dj
                if 0 <= ni < n and 0 <= nj < n and pore[ni, nj]:
                    nb = self.idx_p[ni, nj]
                    diag += 1.0
                    rows.append(r)
                    cols.append(nb)
                    vals.append(-1.0)
            rows.append(r)
            cols.append(r)
            vals.append(diag)
        npc = int(pore.sum())
        mat = sp.csc_matrix((vals, (rows, cols)), shape=(npc, npc))
        return spla.splu(mat)

    def project(self, qu, qv):
        """Project face velocities onto the discrete divergence-free space;
        returns corrected (qu, qv, phi) with phi the cell potential."""
        dom = self.domain
        h = dom.spacing
        pore = dom.pore_mask
        div = (qu[1:, :] - qu[:-1, :] + qv[:, 1:] - qv[:, :-1]) / h
        b = (-div[pore]) * h * h
        b[0] = 0.0      # pinned potential; the dropped row is implied by the rest
        phi_flat = self.poisson.solve(b)
        phi = np.zeros_like(div)
        phi[pore] = phi_flat
        phi[pore] -= phi[pore].mean()
        qu = qu.copy()
        qv = qv.copy()
        gx = (phi[1:, :] - phi[:-1, :]) / h
        qu[1:-1, :] = np.where(self.active_u[1:-1, :], qu[1:-1, :] - gx, qu[1:-1, :])
        gy = (phi[:, 1:] - phi[:, :-1]) / h
        qv[:, 1:-1] = np.where(self.active_v[:, 1:-1], qv[:, 1:-1] - gy, qv[:, 1:-1])
        return qu, qv, phi

    def step(self, qu, qv):
        """One implicit viscous + projection step; returns (qu, qv, p)."""
        qu1 = np.zeros_like(qu)
        qv1 = np.zeros_like(qv)
        if self.visc_u is not None:
            qu1[self.active_u] = self.visc_u.solve(qu[self.active_u])
        if self.visc_v is not None:
            qv1[self.active_v] = self.visc_v.solve(qv[self.active_v])
        qu2, qv2, phi = self.project(qu1, qv1)
        return qu2, qv2, phi / self.dt

    def max_divergence(self, qu, qv):
        h = self.domain.spacing
        div = (qu[1:, :] - qu[:-1, :] + qv[:, 1:] - qv[:, :-1]) / h
        return float(np.abs(div[self.domain.pore_mask]).max(initial=0.0))


class PeriodicStokesBox:
    """Validation-only stepper: the same implicit-viscous + projection
    scheme on an unperforated fully periodic box (used to check the decay
    rate of a single Fourier mode against the heat-kernel rate)."""

    def __init__(self, n, extent, mu, dt, epsilon=1.0):
        self.n = n
        self.h = extent / n
        coef = dt * (epsilon ** 2) * mu / self.h ** 2
        lap = self._periodic_lap(n)
        eye = sp.identity(n * n, format="csc")
        self.visc = spla.splu((eye + coef * lap).tocsc())
        pin = self._periodic_lap(n).tolil()
        pin[0, :] = 0.0
        pin[0, 0] = 1.0
        self.poisson = spla.splu(pin.tocsc())
        self.dt = dt

    @staticmethod
    def _periodic_lap(n):
        idx = np.arange(n * n).reshape(n, n)
        rows, cols, vals = [], [], []
        for sh, ax in ((1, 0), (-1, 0), (1, 1), (-1, 1)):
            rows.append(idx.ravel())
            cols.append(np.roll(idx, sh, axis=ax).ravel())
            vals.append(np.full(n * n, -1.0))
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(np.full(n * n, 4.0))
        return sp.csc_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n * n, n * n))

    def step(self, qu, qv):
        n = self.n
        qu1 = self.visc.solve(qu.ravel()).reshape(n, n)
        qv1 = self.visc.solve(qv.ravel()).reshape(n, n)
        div = (np.roll(qu1, -1, axis=0) - qu1 + np.roll(qv1, -1, axis=1) - qv1) / self.h
        b = (-div * self.h ** 2).ravel()
        b[0] = 0.0
        phi = self.poisson.solve(b).reshape(n, n)
        phi -= phi.mean()
        qu2 = qu1 - (phi - np.roll(phi, 1, axis=0)) / self.h
        qv2 = qv1 - (phi - np.roll(phi, 1, axis=1)) / self.h
        return qu2, qv2, phi / self.dt


# ---------------------------------------------------------------------------
# implicit transport operator (diffusion + upwind advection) on pore cells
# ---------------------------------------------------------------------------

class MicroTransport:
    """Backward-Euler diffusion/advection operator over the pore cells of a
    perforated domain, factorized once.  Interface and outer-boundary fluxes
    are prescribed data and enter the right-hand side only."""

    def __init__(self, domain, dvals, dt, qu=None, qv=None):
        self.domain = domain
        self.dt = dt
        n = domain.n_grid
        h = domain.spacing
        pore = domain.pore_mask
        self.idx = -np.ones((n, n), dtype=np.int64)
        self.idx[pore] = np.arange(int(pore.sum()))
        self.n_unknown = int(pore.sum())
        self.vol = h * h

        if qu is None:
            qu = np.zeros((n + 1, n))
        if qv is None:
            qv = np.zeros((n, n + 1))

        rows, cols, vals = [], [], []

        def couple(ca, cb, dface, qface):
            """Interior face between pore cells ca, cb (normal from a to b):
            diffusion D_f*(u_a-u_b)/h * len plus upwind q*len."""
            dcoef = dface / h * h        # D_f * len / h
            qa = max(qface, 0.0) * h     # outflow of a when q > 0
            qb = min(qface, 0.0) * h
            rows.extend((ca, ca, cb, cb))
            cols.extend((ca, cb, cb, ca))
            vals.extend((dcoef + qa, -dcoef + qb, dcoef - qb, -dcoef - qa))

        dW = np.roll(dvals, 1, axis=0)
        dS = np.roll(dvals, 1, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            hfx = np.where((dvals > 0) & (dW > 0), 2.0 * dvals * dW / (dvals + dW), 0.0)
            hfy = np.where((dvals > 0) & (dS > 0), 2.0 * dvals * dS / (dvals + dS), 0.0)

        act_x = np.zeros((n + 1, n), dtype=bool)
        act_x[1:n, :] = pore[:-1, :] & pore[1:, :]
        fi, fj = np.nonzero(act_x)
        for i, j in zip(fi, fj):
            couple(self.idx[i - 1, j], self.idx[i, j], hfx[i, j], qu[i, j])
        act_y = np.zeros((n, n + 1), dtype=bool)
        act_y[:, 1:n] = pore[:, :-1] & pore[:, 1:]
        fi, fj = np.nonzero(act_y)
        for i, j in zip(fi, fj):
            couple(self.idx[i, j - 1], self.idx[i, j], hfy[i, j], qv[i, j])

        all_idx = np.arange(self.n_unknown)
        rows.extend(all_idx)
        cols.extend(all_idx)
        vals.extend(np.full(self.n_unknown, self.vol / dt))
        mat = sp.csc_matrix((vals, (rows, cols)), shape=(self.n_unknown, self.n_unknown))
        try:
            self.lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SolverError(f"transport operator factorization failed: {exc}") from exc

        # interface faces scatter: flat pore index and eps*len weight per face
        self.face_cell = self.idx[domain.face_ci, domain.face_cj]
        self.face_weight = domain.epsilon * h
        # outer boundary edges
        self.in_cells = self.idx[domain.edge_cells(domain.inflow_edge)]
        self.out_cells = self.idx[domain.edge_cells(domain.outflow_edge)]
        self.edge_len = h

    def step(self, u_prev_cells, dw_over_dt, bc_in, bc_out):
        """One implicit step; u_prev_cells is the flat pore-cell vector,
        dw_over_dt the per-face mineral rate taken explicitly."""
        rhs = (self.vol / self.dt) * u_prev_cells
        surf = np.zeros(self.n_unknown)
        _kernels.face_scatter_add(surf, self.face_cell,
                                  self.face_weight * np.asarray(dw_over_dt))
        rhs -= surf
        if bc_in != 0.0:
            np.add.at(rhs, self.in_cells, -bc_in * self.edge_len)
        if bc_out != 0.0:
            np.add.at(rhs, self.out_cells, -bc_out * self.edge_len)
        return self.lu.solve(rhs)


# ---------------------------------------------------------------------------
# mass audit and the full simulation loop
# ---------------------------------------------------------------------------

def mass_audit(domain, state):
    """Pore-volume and epsilon-weighted surface totals of the state."""
    vol = domain.spacing ** 2
    mobile_u = float(state.u[domain.pore_mask].sum()) * vol
    mobile_v = float(state.v[domain.pore_mask].sum()) * vol
    mineral = domain.epsilon * domain.spacing * float(state.w.sum())
    return {
        "mobile_u": mobile_u,
        "mobile_v": mobile_v,
        "mineral": mineral,
        # each precipitated unit binds one unit of both species
        "combined": mobile_u + mobile_v + 2.0 * mineral,
        "combined_u": mobile_u + mineral,
        "combined_v": mobile_v + mineral,
    }


def _grad_norm_sq(field, pore, h):
    """Squared L2 norm of the discrete gradient over interior pore faces."""
    gx = (field[1:, :] - field[:-1, :]) / h
    mx = pore[1:, :] & pore[:-1, :]
    gy = (field[:, 1:] - field[:, :-1]) / h
    my = pore[:, 1:] & pore[:, :-1]
    return float((gx[mx] ** 2).sum() + (gy[my] ** 2).sum()) * h * h


def diagnostics(domain, state, stokes=None):
    vol = domain.spacing ** 2
    pore = domain.pore_mask
    h = domain.spacing
    surf_w = domain.epsilon * h
    d = {
        "t": state.t,
        "l2_u": np.sqrt(float((state.u[pore] ** 2).sum()) * vol),
        "l2_v": np.sqrt(float((state.v[pore] ** 2).sum()) * vol),
        "h1_u": np.sqrt(_grad_norm_sq(state.u, pore, h)),
        "h1_v": np.sqrt(_grad_norm_sq(state.v, pore, h)),
        "l2_w": np.sqrt(surf_w * float((state.w ** 2).sum())),
        "linf_w": float(np.abs(state.w).max(initial=0.0)),
        "l2_q": np.sqrt(float((state.qu ** 2).sum() + (state.qv ** 2).sum()) * vol),
        "div_q": stokes.max_divergence(state.qu, state.qv) if stokes else 0.0,
    }
    d.update(mass_audit(domain, state))
    return d


@dataclass
class MicroRun:
    domain: object
    states: list
    diag: list = field(default_factory=list)

    @property
    def final(self):
        return self.states[-1]


def micro_simulate(domain, dvals_u, dvals_v, kin, boundary, t_end, dt,
                   u0, v0, w0, mu=1.0, q0=None, snapshot_stride=0):
    """Run the pore-scale problem to t_end.

    dvals_*: (N, N) diffusivities on the global grid; u0/v0: (N, N) initial
    concentrations (values on solid cells are ignored); w0: initial mineral
    mass per interface face (scalar or per-face array); q0: optional (qu, qv)
    MAC initial velocity, None for a fluid at rest (the flow then stays
    identically zero and the Stokes stepper is skipped).
    """
    n = domain.n_grid
    pore = domain.pore_mask
    n_steps = int(round(t_end / dt)) if t_end > 0 else 0
    if t_end > 0 and abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise SolverError(f"t_end={t_end} is not an integer number of steps of dt={dt}")

    u = np.where(pore, u0, 0.0).astype(float)
    v = np.where(pore, v0, 0.0).astype(float)
    w = np.full(domain.n_faces, float(w0)) if np.isscalar(w0) else np.asarray(w0, float).copy()
    z = np.zeros_like(w)

    stokes = None
    qu = np.zeros((n + 1, n))
    qv = np.zeros((n, n + 1))
    p = np.zeros((n, n))
    if q0 is not None:
        stokes = MicroStokes(domain, mu, dt)
        qu0, qv0 = q0
        qu = np.where(stokes.active_u, qu0, 0.0)
        qv = np.where(stokes.active_v, qv0, 0.0)
        qu, qv, _ = stokes.project(qu, qv)

    trans_u = MicroTransport(domain, dvals_u, dt, qu, qv) if n_steps else None
    trans_v = MicroTransport(domain, dvals_v, dt, qu, qv) if n_steps else None

    state = MicroState(0.0, u, v, w, z, qu, qv, p)
    run = MicroRun(domain, [state.copy()])
    run.diag.append(diagnostics(domain, state, stokes))

    fci, fcj = domain.face_ci, domain.face_cj
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        if stokes is not None:
            qu, qv, p = stokes.step(qu, qv)
        # mineral ODE with previous-level traces
        w_new, z = surface_ode_step(w, u[fci, fcj], v[fci, fcj], dt, kin)
        dw_dt = (w_new - w) / dt
        d_in, d_out, g_in, g_out = boundary.at(t_prev)
        u_flat = trans_u.step(u[pore], dw_dt, d_in, d_out)
        v_flat = trans_v.step(v[pore], dw_dt, g_in, g_out)
        u = np.zeros_like(u)
        v = np.zeros_like(v)
        u[pore] = u_flat
        v[pore] = v_flat
        w = w_new
        state = MicroState(step * dt, u, v, w, z, qu, qv, p)
        run.diag.append(diagnostics(domain, state, stokes))
        if snapshot_stride and (step % snapshot_stride == 0 or step == n_steps):
            run.states.append(state.copy())
    if run.states[-1].t != state.t:
        run.states.append(state.copy())
    return run
