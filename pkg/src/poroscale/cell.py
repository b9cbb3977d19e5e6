"""Periodic cell problems on the pore part of the unit cell.

Solves the scalar correctors (one per coordinate direction, plus the
advective corrector driven by the cell flow), the steady Stokes flow on the
periodic pore space, and assembles the effective diffusion tensors, mean
flow and drift correction from them.

Discretization: cell-centered finite volumes with harmonic-mean face
diffusivities and periodic wraparound; zero-flux on the pore/solid
interface enters by dropping the face conductance.  The corrector systems
are symmetric positive semidefinite with the constant nullspace, solved by
Jacobi-preconditioned CG with a mean-zero pinning.  The Stokes cell flow is
a MAC staggered saddle system solved directly (sparse LU) with one pinned
pressure; the dropped continuity row is linearly dependent, so nothing is
approximated.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import SolverError


# ---------------------------------------------------------------------------
# face data and the corrector solver
# ---------------------------------------------------------------------------

def face_diffusivities(cell, dvals):
    """Harmonic-mean diffusivity on x- and y-faces; zero where either side
    is solid (zero-flux interface).  Face [i, j] of the x-array sits between
    cells ((i-1) % n, j) and (i, j)."""
    pore = cell.pore_mask
    d = np.where(pore, dvals, 0.0)
    dW = np.roll(d, 1, axis=0)
    dS = np.roll(d, 1, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dfx = np.where((d > 0) & (dW > 0), 2.0 * d * dW / (d + dW), 0.0)
        dfy = np.where((d > 0) & (dS > 0), 2.0 * d * dS / (d + dS), 0.0)
    return dfx, dfy


def _pore_mean(x, pore):
    return x[pore].sum() / np.count_nonzero(pore)


def cg_periodic(cx, cy, b, pore, rtol=1e-12, maxiter=50000):
    """CG for the singular periodic diffusion system; returns the mean-zero
    solution over the pore cells.  b must be (and is re-)projected onto the
    orthogonal complement of constants."""
    b = np.where(pore, b, 0.0)
    b = np.where(pore, b - _pore_mean(b, pore), 0.0)
    bnorm = np.sqrt(float((b * b).sum()))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x
    diag = cx + np.roll(cx, -1, axis=0) + cy + np.roll(cy, -1, axis=1)
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 0.0)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float((r * z).sum())
    for _ in range(maxiter):
        Ap = _kernels.diffusion_apply(cx, cy, p)
        alpha = rz / float((p * Ap).sum())
        x += alpha * p
        r -= alpha * Ap
        if np.sqrt(float((r * r).sum())) <= rtol * bnorm:
            x = np.where(pore, x - _pore_mean(x, pore), 0.0)
            return x
        z = inv_diag * r
        rz_new = float((r * z).sum())
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"corrector CG stalled: relative residual "
        f"{np.sqrt(float((r * r).sum())) / bnorm:.3e} after {maxiter} iterations")


def _forcing_divergence(cell, dfx, dfy, gx, gy):
    """RHS of the corrector system for face-normal forcing g: the cell
    balance of -div(D(grad k + g)) = 0 puts +div(D g) on the right."""
    h = cell.spacing
    fx = dfx * gx
    fy = dfy * gy
    return (np.roll(fx, -1, axis=0) - fx + np.roll(fy, -1, axis=1) - fy) / h


def _face_gradients(field, h):
    gx = (field - np.roll(field, 1, axis=0)) / h
    gy = (field - np.roll(field, 1, axis=1)) / h
    return gx, gy


def solve_corrector(cell, dvals, j, flow=None, k0=None, rtol=1e-12, maxiter=50000):
    """Directional corrector k_j: -div(D(grad k_j + e_j [+ grad k0 - q])) = 0
    on the pore space, zero interface flux, periodic, mean zero.

    flow/k0 are optional: when k0 solves the advective corrector equation
    for the same flow their joint contribution to this right-hand side is
    zero, so passing them only reproduces the coupled form of the problem.
    """
    h = cell.spacing
    dfx, dfy = face_diffusivities(cell, dvals)
    gx = np.full_like(dfx, 1.0 if j == 0 else 0.0)
    gy = np.full_like(dfy, 1.0 if j == 1 else 0.0)
    if k0 is not None:
        kx, ky = _face_gradients(k0, h)
        gx = gx + kx
        gy = gy + ky
    if flow is not None:
        gx = gx - flow.qu
        gy = gy - flow.qv
    b = _forcing_divergence(cell, dfx, dfy, gx, gy)
    return cg_periodic(dfx / h ** 2, dfy / h ** 2, b, cell.pore_mask, rtol, maxiter)


def solve_k0(cell, dvals, flow, rtol=1e-12, maxiter=50000):
    """Advective corrector: -div(D(grad k0 - q)) = 0, zero interface flux,
    periodic, mean zero."""
    h = cell.spacing
    dfx, dfy = face_diffusivities(cell, dvals)
    b = _forcing_divergence(cell, dfx, dfy, -flow.qu, -flow.qv)
    return cg_periodic(dfx / h ** 2, dfy / h ** 2, b, cell.pore_mask, rtol, maxiter)


@dataclass(frozen=True)
class CorrectorSet:
    """Correctors for one diffusivity field: k = (k_1, k_2), advective k0."""
    k: tuple
    k0: np.ndarray = None

    def residual_fields(self):
        return self.k if self.k0 is None else (*self.k, self.k0)


def solve_correctors(cell, dvals, flow=None, rtol=1e-12, maxiter=50000):
    k0 = None
    if flow is not None and (np.any(flow.qu) or np.any(flow.qv)):
        k0 = solve_k0(cell, dvals, flow, rtol, maxiter)
    kj = tuple(solve_corrector(cell, dvals, j, rtol=rtol, maxiter=maxiter) for j in (0, 1))
    return CorrectorSet(kj, k0)


# ---------------------------------------------------------------------------
# steady Stokes cell flow (MAC saddle system, periodic)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellFlow:
    """MAC face velocities and cell pressure of the periodic cell flow.
    qu[i, j] lives on the x-face between cells ((i-1) % n, j) and (i, j);
    qv[i, j] on the y-face below cell (i, j)."""
    qu: np.ndarray
    qv: np.ndarray
    p: np.ndarray

    def mean(self, pore_volume):
        h2 = 1.0 / self.qu.shape[0] ** 2
        return np.array([self.qu.sum(), self.qv.sum()]) * h2 / pore_volume

    def max_divergence(self):
        n = self.qu.shape[0]
        div = (np.roll(self.qu, -1, axis=0) - self.qu
               + np.roll(self.qv, -1, axis=1) - self.qv) * n
        return float(np.abs(div).max())


def zero_flow(cell):
    z = np.zeros((cell.resolution, cell.resolution))
    return CellFlow(z, z.copy(), z.copy())


def solve_stokes_cell(cell, mu, direction=0, channel=False):
    """Steady Stokes flow on the periodic pore space driven by a unit
    macroscopic pressure gradient along `direction`:
        -mu lap q + grad p1 = e_dir,   div q = 0,   q = 0 on the interface.

    channel=True replaces the top/bottom periodic coupling by no-slip walls
    at y = 0 and y = 1 (plane-channel validation geometry; second-order
    ghost treatment of the tangential velocity at the walls).

    direction=None means no forcing; the flow is identically zero.
    """
    if direction is None:
        return zero_flow(cell)
    n = cell.resolution
    h = cell.spacing
    pore = cell.pore_mask

    active_u = pore & np.roll(pore, 1, axis=0)
    active_v = pore & np.roll(pore, 1, axis=1)
    if channel:
        if not pore.all():
            raise SolverError("channel validation geometry requires an unperforated cell")
        active_v = active_v.copy()
        active_v[:, 0] = False          # wall where the y-direction would wrap
    elif pore.all():
        raise SolverError(
            "unperforated periodic cell has no steady flow under constant forcing; "
            "add an inclusion or use channel walls")

    nu = int(active_u.sum())
    nv = int(active_v.sum())
    npc = int(pore.sum())
    idx_u = -np.ones((n, n), dtype=np.int64)
    idx_v = -np.ones((n, n), dtype=np.int64)
    idx_p = -np.ones((n, n), dtype=np.int64)
    idx_u[active_u] = np.arange(nu)
    idx_v[active_v] = np.arange(nv) + nu
    idx_p[pore] = np.arange(npc) + nu + nv
    nt = nu + nv + npc

    rows, cols, vals = [], [], []
    rhs = np.zeros(nt)

    def add(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(v)

    visc = mu / h ** 2
    hinv = 1.0 / h

    def momentum_rows(idx_self, comp):
        ii, jj = np.nonzero(idx_self >= 0)
        for i, j in zip(ii, jj):
            r = idx_self[i, j]
            diag = 0.0
            for axis, step in ((0, -1), (0, 1), (1, -1), (1, 1)):
                ni, nj = i, j
                wall_ghost = False
                if axis == 0:
                    ni = (i + step) % n
                else:
                    if channel and ((j == 0 and step == -1) or (j == n - 1 and step == 1)):
                        # tangential wall half a cell away: ghost value -u
                        wall_ghost = comp == 0
                        nj = None
                    else:
                        nj = (j + step) % n
                if nj is None:
                    diag += 2.0 * visc if wall_ghost else visc
                    continue
                nb = idx_self[ni, nj]
                diag += visc
                if nb >= 0:
                    add(r, nb, -visc)
                # inactive neighbor: velocity 0 at that face, only the diag term
            add(r, r, diag)
            # pressure gradient and forcing
            if comp == 0:
                pw = idx_p[(i - 1) % n, j]
                pe = idx_p[i, j]
            else:
                pw = idx_p[i, (j - 1) % n]
                pe = idx_p[i, j]
            if pe >= 0:
                add(r, pe, hinv)
            if pw >= 0:
                add(r, pw, -hinv)
            if comp == direction:
                rhs[r] = 1.0

    momentum_rows(idx_u, 0)
    momentum_rows(idx_v, 1)

    # continuity (negated for symmetry): one row per pore cell, first pinned
    ii, jj = np.nonzero(pore)
    pinned = False
    for i, j in zip(ii, jj):
        r = idx_p[i, j]
        if not pinned:
            add(r, r, 1.0)
            pinned = True
            continue
        for col, s in ((idx_u[(i + 1) % n, j], -1.0), (idx_u[i, j], 1.0),
                       (idx_v[i, (j + 1) % n], -1.0), (idx_v[i, j], 1.0)):
            if col >= 0:
                add(r, col, s * hinv)

    mat = sp.csc_matrix((vals, (rows, cols)), shape=(nt, nt))
    try:
        sol = spla.splu(mat).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"Stokes cell saddle solve failed: {exc}") from exc

    qu = np.zeros((n, n))
    qv = np.zeros((n, n))
    p = np.zeros((n, n))
    qu[active_u] = sol[idx_u[active_u]]
    qv[active_v] = sol[idx_v[active_v]]
    p[pore] = sol[idx_p[pore]]
    p[pore] -= p[pore].mean()
    flow = CellFlow(qu, qv, p)
    div = flow.max_divergence()
    if div > 1e-8:
        raise SolverError(f"cell flow divergence {div:.3e} exceeds tolerance")
    return flow


# ---------------------------------------------------------------------------
# effective coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveCoefficients:
    a: np.ndarray           # 2x2 effective diffusivity of species u
    b: np.ndarray           # 2x2 effective diffusivity of species v
    q_bar: np.ndarray       # mean cell flow
    q_tilde0: np.ndarray    # advective drift correction
    porosity: float

    @property
    def drift(self):
        return self.q_bar - self.q_tilde0

    def check_ellipticity(self, alpha, m_bound, n_samples=1000, seed=0):
        """Sampled inheritance check alpha |z|^2 <= z.Az <= M |z|^2."""
        rng = np.random.default_rng(seed)
        theta = rng.uniform(0.0, 2.0 * np.pi, n_samples)
        zs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        for mat in (self.a, self.b):
            quad = np.einsum("si,ij,sj->s", zs, mat, zs)
            if quad.min() < alpha - 1e-10 or quad.max() > m_bound + 1e-10:
                return False
        return True


def tensor_from_correctors(cell, dvals, correctors):
    """Effective tensor in energy form,
    t_ij = (1/|Y^p|) sum_f D_f (e_i + grad k_i)_f (e_j + grad k_j)_f vol_f,
    which is exactly symmetric and coincides with the flux quadrature of
    (1/|Y^p|) int D (delta_ij + d k_j / d y_i) up to the solver residual."""
    h = cell.spacing
    dfx, dfy = face_diffusivities(cell, dvals)
    fx, fy = [], []
    for j, kj in enumerate(correctors.k):
        gx, gy = _face_gradients(kj, h)
        fx.append(gx + (1.0 if j == 0 else 0.0))
        fy.append(gy + (1.0 if j == 1 else 0.0))
    t = np.empty((2, 2))
    h2 = h * h
    for i in range(2):
        for j in range(i, 2):
            t[i, j] = t[j, i] = ((dfx * fx[i] * fx[j]).sum() + (dfy * fy[i] * fy[j]).sum()) * h2
    return t / cell.pore_volume


def drift_from_k0(cell, dvals, k0):
    """q_tilde0 = (1/|Y^p|) int D grad k0 dy via face-flux quadrature."""
    if k0 is None:
        return np.zeros(2)
    h = cell.spacing
    dfx, dfy = face_diffusivities(cell, dvals)
    gx, gy = _face_gradients(k0, h)
    return np.array([(dfx * gx).sum(), (dfy * gy).sum()]) * h * h / cell.pore_volume


def assemble_effective(cell, d1_vals, d2_vals, correctors_u, correctors_v, flow=None):
    """Midpoint-quadrature assembly of the effective coefficients from the
    solved correctors (one set per species diffusivity) and the cell flow."""
    a = tensor_from_correctors(cell, d1_vals, correctors_u)
    b = tensor_from_correctors(cell, d2_vals, correctors_v)
    q_tilde0 = drift_from_k0(cell, d1_vals, correctors_u.k0)
    q_bar = flow.mean(cell.pore_volume) if flow is not None else np.zeros(2)
    return EffectiveCoefficients(a, b, q_bar, q_tilde0, cell.pore_volume)


def solve_effective(cell, d1_fn, d2_fn, mu=1.0, flow_direction=None, refine=1,
                    rtol=1e-12):
    """One-shot: refine the pixel geometry, evaluate the diffusivities,
    solve the cell flow (if requested) and all correctors, assemble.

    d*_fn map a UnitCell to an (n, n) array of cell diffusivities.
    """
    rc = cell.refine(refine)
    d1 = d1_fn(rc)
    d2 = d2_fn(rc)
    flow = None
    if flow_direction is not None:
        flow = solve_stokes_cell(rc, mu, flow_direction)
    cu = solve_correctors(rc, d1, flow, rtol=rtol)
    cv = solve_correctors(rc, d2, flow, rtol=rtol)
    return assemble_effective(rc, d1, d2, cu, cv, flow)


def effective_sweep(cell, d1_fn, d2_fn, points, m1=None, m2=None, mu=1.0,
                    flow_direction=None, refine=1):
    """Per-macro-point coefficients for separable data D_i(x, y) =
    m_i(x) c_i(y): the cell problems are solved once on the y-parts and the
    tensors scale with the positive multipliers m_i (the correctors are
    invariant under scalar scaling of D).  m_i None means m_i == 1."""
    base = solve_effective(cell, d1_fn, d2_fn, mu, flow_direction, refine)
    out = []
    for x in points:
        s1 = 1.0 if m1 is None else float(m1(x))
        s2 = 1.0 if m2 is None else float(m2(x))
        if s1 <= 0.0 or s2 <= 0.0:
            raise SolverError(f"separable multiplier must be positive at x={x}")
        out.append((np.asarray(x, dtype=float),
                    EffectiveCoefficients(s1 * base.a, s2 * base.b, base.q_bar,
                                          s1 * base.q_tilde0, base.porosity)))
    return out
