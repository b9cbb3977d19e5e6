"""Surface reaction kinetics: saturating precipitation rate, multivalued
dissolution graph, its Lipschitz ramp regularization, and the per-site
mineral-mass ODE step in both regularized and exact-event form.

All rate functions are total and vectorize over numpy arrays.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError


@dataclass(frozen=True)
class KineticsParams:
    k_f: float              # forward (precipitation) rate constant, 1/time
    k_d: float              # dissolution rate constant, 1/time
    k1: float               # saturation parameter of species u, 1/concentration
    k2: float               # saturation parameter of species v, 1/concentration
    delta: float = 0.1      # ramp width of the regularized dissolution graph
    mode: str = "regularized"   # "regularized" | "event"

    def __post_init__(self):
        for name in ("k_f", "k_d", "k1", "k2"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"kinetics.{name} must be positive")
        if self.mode not in ("regularized", "event"):
            raise ConfigError(f"kinetics.mode must be 'regularized' or 'event', got {self.mode!r}")
        if self.mode == "regularized" and self.delta <= 0.0:
            raise ConfigError("kinetics.delta must be positive in regularized mode")

    @property
    def k(self):
        """Equilibrium ratio k_f/k_d; bounds the precipitation rate by k/4."""
        return self.k_f / self.k_d


@dataclass(frozen=True)
class DissolutionValue:
    """Admissible interval of the multivalued dissolution graph at one w."""
    lo: float
    hi: float


def langmuir_rate(u, v, params):
    """Dimensionless precipitation rate: k*k1*u*k2*v/(1+k1*u+k2*v)^2 on the
    closed positive quadrant, 0 elsewhere.  Bounded by k/4."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    ok = (u >= 0.0) & (v >= 0.0)
    us = np.where(ok, u, 0.0)
    vs = np.where(ok, v, 0.0)
    s = 1.0 + params.k1 * us + params.k2 * vs
    r = params.k * (params.k1 * us * params.k2 * vs) / (s * s)
    out = np.where(ok, r, 0.0)
    return out if out.ndim else float(out)


def lipschitz_bound(params, u_max, v_max, samples=201):
    """Box-local Lipschitz constant of u -> R(u, v) over [0,u_max]^2 x [0,v_max].

    Samples k*k1*k2*|v|*|(1+k2 v)^2 + k1^2 u1 u2| on a dense grid and takes
    the max with a 10% safety factor.  The global supremum is unbounded, so
    a finite box is required.
    """
    if u_max < 0 or v_max < 0:
        raise ConfigError("lipschitz_bound box limits must be nonnegative")
    us = np.linspace(0.0, u_max, samples)
    vs = np.linspace(0.0, v_max, samples)
    u1, u2 = np.meshgrid(us, us, indexing="ij")
    uu = (u1 * u2).ravel()[:, None]
    vv = vs[None, :]
    expr = params.k * params.k1 * params.k2 * vv * np.abs((1.0 + params.k2 * vv) ** 2 + params.k1 ** 2 * uu)
    return 1.1 * float(expr.max())


def psi_multivalued(w):
    """The dissolution graph: {0} below zero mineral mass, [0,1] at zero,
    {1} above."""
    if w < 0.0:
        return DissolutionValue(0.0, 0.0)
    if w == 0.0:
        return DissolutionValue(0.0, 1.0)
    return DissolutionValue(1.0, 1.0)


def psi_delta(w, delta):
    """Lipschitz ramp replacing the graph: 0 for w<=0, w/delta on (0,delta),
    1 for w>=delta."""
    if delta <= 0.0:
        raise ConfigError("psi_delta requires delta > 0")
    w = np.asarray(w, dtype=float)
    out = np.clip(w / delta, 0.0, 1.0)
    return out if out.ndim else float(out)


def surface_ode_step(w, u, v, h, params):
    """Advance the mineral mass one step of size h; returns (w_new, z_used).

    regularized mode: explicit Euler w+ = w + h*k_d*(R - psi_delta(w)),
    stable and sign-preserving under h*k_d <= delta.

    event mode: exact handling of the multivalued graph with R frozen over
    the step: decay with z=1 while w>0 and stop at the zero crossing, hold
    w=0 while R<=1 (there z=R), grow with z=1 when R>1.

    z_used is the step-effective dissolution value
    R - (w+ - w)/(h*k_d), which lies in [0, 1] and matches the pointwise z
    whenever no crossing occurs inside the step.
    """
    if h <= 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    scalar = np.ndim(w) == 0
    w = np.atleast_1d(np.asarray(w, dtype=float))
    r = np.atleast_1d(np.asarray(langmuir_rate(u, v, params), dtype=float))
    r = np.broadcast_to(r, w.shape).copy()
    if params.mode == "regularized":
        z = np.clip(w / params.delta, 0.0, 1.0)
        w_new = w + h * params.k_d * (r - z)
    else:
        w_new = _kernels.surface_event_step(w, r, h, params.k_d)
        z = r - (w_new - w) / (h * params.k_d)
    if scalar:
        return float(w_new[0]), float(z[0])
    return w_new, z
