"""Hot numeric kernels, compiled with numba when available.

The backend is fixed at import time.  Set POROSCALE_NUMBA=0 to force the
pure-numpy fallback, POROSCALE_NUMBA=1 to require numba (ImportError if it
is missing); the default ("auto") uses numba when it imports cleanly.
``benchmarks/bench_kernels.py`` times one backend against the other and
``backend_name()`` reports which one this process runs.

Both implementations of each kernel are importable (``*_numpy`` /
``*_numba`` suffixes) so tests and the benchmark can compare them directly.
"""

import os

import numpy as np

_ENV = os.environ.get("POROSCALE_NUMBA", "auto").strip().lower()

if _ENV in ("0", "off", "false", "numpy", "no"):
    _HAVE_NUMBA = False
elif _ENV in ("1", "on", "true", "numba", "yes"):
    from numba import njit  # noqa: F401  (required backend)
    _HAVE_NUMBA = True
else:
    try:
        from numba import njit
        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False


def backend_name():
    return "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# masked periodic diffusion stencil: out = A x with
#   (A x)[i,j] = cx[i,j]*(x[i,j]-x[i-1,j]) + cx[i+1,j]*(x[i,j]-x[i+1,j])
#              + cy[i,j]*(x[i,j]-x[i,j-1]) + cy[i,j+1]*(x[i,j]-x[i,j+1])
# with periodic index wraparound.  cx[i,j] is the conductance of the x-face
# between cells (i-1,j) and (i,j); faces touching solid cells carry zero
# conductance so solid rows are identically zero.
# ---------------------------------------------------------------------------

def diffusion_apply_numpy(cx, cy, x):
    xe = np.roll(x, -1, axis=0)
    xw = np.roll(x, 1, axis=0)
    xn = np.roll(x, -1, axis=1)
    xs = np.roll(x, 1, axis=1)
    cxe = np.roll(cx, -1, axis=0)
    cyn = np.roll(cy, -1, axis=1)
    return cx * (x - xw) + cxe * (x - xe) + cy * (x - xs) + cyn * (x - xn)


def _diffusion_apply_loop(cx, cy, x, out):
    n0, n1 = x.shape
    for i in range(n0):
        im = i - 1 if i > 0 else n0 - 1
        ip = i + 1 if i < n0 - 1 else 0
        for j in range(n1):
            jm = j - 1 if j > 0 else n1 - 1
            jp = j + 1 if j < n1 - 1 else 0
            out[i, j] = (cx[i, j] * (x[i, j] - x[im, j])
                         + cx[ip, j] * (x[i, j] - x[ip, j])
                         + cy[i, j] * (x[i, j] - x[i, jm])
                         + cy[i, jp] * (x[i, j] - x[i, jp]))
    return out


if _HAVE_NUMBA:
    _diffusion_apply_numba = njit(cache=True)(_diffusion_apply_loop)

    def diffusion_apply(cx, cy, x):
        out = np.empty_like(x)
        return _diffusion_apply_numba(cx, cy, x, out)
else:
    diffusion_apply = diffusion_apply_numpy


# ---------------------------------------------------------------------------
# event-mode surface ODE step.  Integrates dw/dt = kd*(r - z), z in the
# multivalued graph {0} (w<0), [0,1] (w=0), {1} (w>0), exactly over one step
# of size h with r frozen: linear decay with z=1 while w>0, stop at the zero
# crossing, hold w=0 while r <= 1, grow with z=1 when r > 1.
# ---------------------------------------------------------------------------

def surface_event_step_numpy(w, r, h, kd):
    wn = np.empty_like(w)

    pos = w > 0.0
    lin = w + h * kd * (r - 1.0)
    wn[pos] = np.maximum(lin[pos], 0.0)

    zero = w == 0.0
    grow = zero & (r > 1.0)
    wn[zero] = 0.0
    wn[grow] = h * kd * (r[grow] - 1.0)

    neg = w < 0.0
    if np.any(neg):
        up = w + h * kd * r
        # crossed into w=0 territory with time to spare: apply the w=0 rule
        crossed = neg & (up > 0.0)
        wn[neg] = up[neg]
        rem = h + w / (kd * np.maximum(r, 1e-300))   # h - t_cross
        regrow = crossed & (r > 1.0)
        wn[crossed] = 0.0
        wn[regrow] = rem[regrow] * kd * (r[regrow] - 1.0)
    return wn


def _surface_event_step_loop(w, r, h, kd, out):
    for idx in range(w.shape[0]):
        wi = w[idx]
        ri = r[idx]
        if wi > 0.0:
            lin = wi + h * kd * (ri - 1.0)
            out[idx] = lin if lin > 0.0 else 0.0
        elif wi == 0.0:
            out[idx] = h * kd * (ri - 1.0) if ri > 1.0 else 0.0
        else:
            up = wi + h * kd * ri
            if up <= 0.0:
                out[idx] = up
            else:
                rem = h + wi / (kd * ri)
                out[idx] = rem * kd * (ri - 1.0) if ri > 1.0 else 0.0
    return out


if _HAVE_NUMBA:
    _surface_event_step_numba = njit(cache=True)(_surface_event_step_loop)

    def surface_event_step(w, r, h, kd):
        out = np.empty_like(w)
        return _surface_event_step_numba(w, r, float(h), float(kd), out)
else:
    surface_event_step = surface_event_step_numpy


# ---------------------------------------------------------------------------
# scatter-add of per-face values into per-cell accumulators (surface source
# assembly: thousands of faces every transport step).
# ---------------------------------------------------------------------------

def face_scatter_add_numpy(acc_flat, cell_index, values):
    np.add.at(acc_flat, cell_index, values)
    return acc_flat


def _face_scatter_add_loop(acc_flat, cell_index, values):
    for f in range(cell_index.shape[0]):
        acc_flat[cell_index[f]] += values[f]
    return acc_flat


if _HAVE_NUMBA:
    face_scatter_add = njit(cache=True)(_face_scatter_add_loop)
else:
    face_scatter_add = face_scatter_add_numpy
