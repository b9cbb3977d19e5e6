"""Unit periodicity cell and its scaled periodic tiling.

Everything lives on uniform cell-centered grids indexed ``[ix, iy]``; cell
(i, j) of an n-cell grid covers ``[i*h, (i+1)*h] x [j*h, (j+1)*h]`` with
``h = extent / n``.  Solid obstacles are staircase (pixel) sets: a cell is
solid when its center falls inside the inclusion, so tilings and integer
grid refinements reproduce the geometry exactly and the interface measure
is the exact count of pore/solid cell faces.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import GeometryError

# face normal encoding: index into these offsets, normal points from the
# pore cell into the solid neighbor
FACE_NORMALS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)


@dataclass(frozen=True)
class UnitCell:
    """Discretized cell Y = (0,1)^2 with an interior solid inclusion."""

    resolution: int
    pore_mask: np.ndarray          # (n, n) bool, True = pore
    face_ci: np.ndarray            # pore-cell i index per interface face
    face_cj: np.ndarray
    face_normal: np.ndarray        # index into FACE_NORMALS

    @property
    def pore_volume(self):
        return float(np.count_nonzero(self.pore_mask)) / self.resolution ** 2

    @property
    def boundary_measure(self):
        return self.face_ci.size / self.resolution

    @property
    def n_faces(self):
        return self.face_ci.size

    @property
    def spacing(self):
        return 1.0 / self.resolution

    def cell_centers(self):
        c = (np.arange(self.resolution) + 0.5) * self.spacing
        return np.meshgrid(c, c, indexing="ij")

    def refine(self, factor):
        """Same pixel geometry on a grid `factor` times finer."""
        if factor == 1:
            return self
        mask = np.repeat(np.repeat(self.pore_mask, factor, axis=0), factor, axis=1)
        return _cell_from_mask(mask)


def _interface_faces(pore_mask):
    """All (pore cell, outward normal) pairs on the pore/solid interface."""
    ci, cj, nrm = [], [], []
    solid = ~pore_mask
    for k, (di, dj) in enumerate(FACE_NORMALS):
        shifted = np.roll(solid, (-di, -dj), axis=(0, 1))
        hit = pore_mask & shifted
        ii, jj = np.nonzero(hit)
        ci.append(ii)
        cj.append(jj)
        nrm.append(np.full(ii.size, k, dtype=np.int64))
    return (np.concatenate(ci), np.concatenate(cj), np.concatenate(nrm))


def _cell_from_mask(mask):
    n = mask.shape[0]
    if not mask.any():
        raise GeometryError("inclusion covers the whole cell: empty pore space")
    solid = ~mask
    if solid.any():
        if solid[0, :].any() or solid[-1, :].any() or solid[:, 0].any() or solid[:, -1].any():
            raise GeometryError("solid region touches the cell boundary; it must be strictly interior")
    labels, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise GeometryError(f"pore space is disconnected ({ncomp} components)")
    fi, fj, fn = _interface_faces(mask)
    return UnitCell(n, mask, fi, fj, fn)


def build_unit_cell(resolution, inclusion=None):
    """Build the periodicity cell on a resolution x resolution pixel grid.

    inclusion: None, ("disk", radius) or ("square", side), centered at
    (1/2, 1/2).  The inclusion must stay strictly inside (0,1)^2.
    """
    if resolution < 8:
        raise GeometryError(f"resolution must be >= 8, got {resolution}")
    n = int(resolution)
    mask = np.ones((n, n), dtype=bool)
    if inclusion is not None:
        kind, size = inclusion
        size = float(size)
        c = (np.arange(n) + 0.5) / n
        x, y = np.meshgrid(c, c, indexing="ij")
        if kind == "disk":
            if not 0.0 < size < 0.5:
                raise GeometryError(f"disk radius {size} must lie in (0, 0.5) to stay interior")
            mask = (x - 0.5) ** 2 + (y - 0.5) ** 2 > size ** 2
        elif kind == "square":
            if not 0.0 < size < 1.0:
                raise GeometryError(f"square side {size} must lie in (0, 1) to stay interior")
            half = size / 2.0
            mask = ~((np.abs(x - 0.5) < half) & (np.abs(y - 0.5) < half))
        else:
            raise GeometryError(f"unknown inclusion kind {kind!r}")
    return _cell_from_mask(mask)


@dataclass(frozen=True)
class PerforatedDomain:
    """The scaled periodic tiling of a UnitCell over the square Omega."""

    cell: UnitCell
    inv_epsilon: int               # scale parameter epsilon = 1/inv_epsilon
    macro_extent: float
    pore_mask: np.ndarray          # (N, N) bool global mask
    face_ci: np.ndarray            # global interface faces, as in UnitCell
    face_cj: np.ndarray
    face_normal: np.ndarray
    inflow_edge: str = "left"
    outflow_edge: str = "right"

    @property
    def epsilon(self):
        return 1.0 / self.inv_epsilon

    @property
    def n_grid(self):
        return self.pore_mask.shape[0]

    @property
    def spacing(self):
        return self.macro_extent / self.n_grid

    @property
    def gamma_measure(self):
        """Total interface length |Gamma*_eps|."""
        return self.face_ci.size * self.spacing

    @property
    def pore_fraction(self):
        return float(np.count_nonzero(self.pore_mask)) / self.n_grid ** 2

    @property
    def n_faces(self):
        return self.face_ci.size

    def cell_centers(self):
        c = (np.arange(self.n_grid) + 0.5) * self.spacing
        return np.meshgrid(c, c, indexing="ij")

    def face_midpoints(self):
        """Physical midpoints of the interface faces."""
        h = self.spacing
        nx = FACE_NORMALS[self.face_normal]
        x = (self.face_ci + 0.5 + 0.5 * nx[:, 0]) * h
        y = (self.face_cj + 0.5 + 0.5 * nx[:, 1]) * h
        return x, y

    def edge_cells(self, edge):
        """(i, j) index arrays of the pore cells along a domain edge."""
        n = self.n_grid
        sel = {
            "left": (np.zeros(n, np.int64), np.arange(n)),
            "right": (np.full(n, n - 1, dtype=np.int64), np.arange(n)),
            "bottom": (np.arange(n), np.zeros(n, np.int64)),
            "top": (np.arange(n), np.full(n, n - 1, dtype=np.int64)),
        }[edge]
        keep = self.pore_mask[sel]
        return sel[0][keep], sel[1][keep]


def build_perforated_domain(cell, inv_epsilon, macro_extent=1.0,
                            inflow_edge="left", outflow_edge="right"):
    """Tile `cell`, scaled by epsilon = 1/inv_epsilon, over (0, macro_extent)^2."""
    inv_epsilon = int(inv_epsilon)
    if inv_epsilon < 1:
        raise GeometryError(f"1/epsilon must be a positive integer, got {inv_epsilon}")
    tiles_f = macro_extent * inv_epsilon
    tiles = int(round(tiles_f))
    if abs(tiles_f - tiles) > 1e-12 or tiles < 1:
        raise GeometryError(
            f"macro extent {macro_extent} is not an integer multiple of epsilon = 1/{inv_epsilon}")
    mask = np.tile(cell.pore_mask, (tiles, tiles))
    # tile the cell's interface faces; solid never touches tile edges so no
    # face can straddle a tile boundary
    n = cell.resolution
    off = np.arange(tiles) * n
    oi, oj = np.meshgrid(off, off, indexing="ij")
    oi = oi.ravel()[:, None]
    oj = oj.ravel()[:, None]
    fi = (cell.face_ci[None, :] + oi).ravel()
    fj = (cell.face_cj[None, :] + oj).ravel()
    fn = np.tile(cell.face_normal, tiles * tiles)
    if inflow_edge == outflow_edge:
        raise GeometryError("inflow and outflow edges must differ")
    for e in (inflow_edge, outflow_edge):
        if e not in ("left", "right", "top", "bottom"):
            raise GeometryError(f"unknown edge {e!r}")
    return PerforatedDomain(cell, inv_epsilon, float(macro_extent), mask,
                            fi, fj, fn, inflow_edge, outflow_edge)


def geometry_summary(domain):
    """One row of the geometry CSV for this domain."""
    return {
        "epsilon": domain.epsilon,
        "pore_volume": domain.cell.pore_volume,
        "gamma_measure": domain.cell.boundary_measure,
        "eps_times_gamma_star": domain.epsilon * domain.gamma_measure,
    }
