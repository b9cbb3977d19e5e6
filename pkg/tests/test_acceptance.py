"""Acceptance criteria, one test per criterion.

Each test prints a single [PASS] line with its measured runtime when its
assertions hold (pytest -v -s shows them in order); tolerances are pinned
in the assertions themselves.
"""

import time

import numpy as np
import pytest

from poroscale import (KineticsParams, build_perforated_domain,
                       build_unit_cell, langmuir_rate, psi_delta)
from poroscale.cell import solve_correctors, assemble_effective, solve_effective, solve_stokes_cell
from poroscale.config import parse_and_validate
from poroscale.driver import ConfigRunner
from poroscale.macro import macro_simulate
from poroscale.micro import BoundaryData, micro_simulate
from poroscale.upscale import epsilon_sweep, limit_order_study

from oracles import laminate_tensor_1d, ls_slope


def _report(num, text, t0):
    print(f"[PASS] criterion {num}: {text} ({time.perf_counter() - t0:.1f}s)")


DISK_SWEEP_CONFIG = """
[geometry]
cell_resolution = 16
inclusion = disk
inclusion_size = 0.25
macro_resolution = 32
cell_refine = 8
[physics]
diff_u = constant:1.0
diff_v = constant:0.5
alpha = 0.4
m_bound = 2.0
[kinetics]
delta = 0.1
[initial]
init_u = cosx:1.0,0.3
init_v = cosy:1.0,0.3
init_mineral = 0.05
[time]
t_end = 0.2
dt = 0.004
"""

COMMUTE_CONFIG = DISK_SWEEP_CONFIG.replace(
    "[kinetics]\ndelta = 0.1",
    "[kinetics]\nrate_forward = 2.0\nrate_dissolution = 2.0\ndelta = 0.1"
).replace("t_end = 0.2", "t_end = 0.4")


def test_c01_kinetics_exactness():
    t0 = time.perf_counter()
    p = KineticsParams(k_f=2.0, k_d=1.0, k1=0.9, k2=1.4, delta=0.08)
    d = p.delta
    assert psi_delta(-1.0, d) == 0.0
    assert psi_delta(0.0, d) == 0.0
    assert psi_delta(d / 2.0, d) == 0.5
    assert psi_delta(d, d) == 1.0
    assert psi_delta(2.0 * d, d) == 1.0
    rng = np.random.default_rng(42)
    u = rng.uniform(-10.0, 100.0, 100000)
    v = rng.uniform(-10.0, 100.0, 100000)
    r = langmuir_rate(u, v, p)
    violations = int(((r < 0.0) | (r > p.k / 4.0)).sum())
    assert violations == 0
    probe = rng.uniform(0.0, 50.0, 1000)
    assert np.all(langmuir_rate(probe, 0.0, p) == 0.0)
    assert np.all(langmuir_rate(0.0, probe, p) == 0.0)
    assert time.perf_counter() - t0 < 1.0
    _report(1, "ramp branchwise exact, 1e5-point rate bound, zero on the axes", t0)


def test_c02_trivial_cell_identity():
    t0 = time.perf_counter()
    cell = build_unit_cell(64)
    d = np.full((64, 64), 1.7)
    corr = solve_correctors(cell, d)
    assert max(np.abs(k).max() for k in corr.k) < 1e-10
    eff = assemble_effective(cell, d, d, corr, corr)
    assert np.abs(eff.a - 1.7 * np.eye(2)).max() < 1e-8
    _report(2, "constant data gives zero correctors and A = d*I at 64^2", t0)


def test_c03_laminate_oracle():
    t0 = time.perf_counter()
    n = 128
    cell = build_unit_cell(n)
    y1 = (np.arange(n) + 0.5) / n
    d = np.where(y1[:, None] < 0.5, 1.0, 4.0) * np.ones((1, n))
    corr = solve_correctors(cell, d)
    eff = assemble_effective(cell, d, d, corr, corr)
    assert eff.a[0, 0] == pytest.approx(1.6, rel=0.01)
    assert eff.a[1, 1] == pytest.approx(2.5, rel=0.01)
    along, across = laminate_tensor_1d(1.0, 4.0, n)
    assert eff.a[0, 0] == pytest.approx(along, rel=1e-9)
    assert eff.a[1, 1] == pytest.approx(across, rel=1e-12)
    _report(3, "laminate a11 = harmonic 1.6, a22 = arithmetic 2.5, matches 1D solve", t0)


def test_c04_ellipticity_inheritance():
    t0 = time.perf_counter()
    ones = lambda c: np.ones((c.resolution,) * 2)
    eff = solve_effective(build_unit_cell(64, ("disk", 0.25)), ones, ones)
    alpha, m_bound = 0.5, 1.0          # declared bounds of the unit data
    rng = np.random.default_rng(7)
    theta = rng.uniform(0.0, 2.0 * np.pi, 1000)
    zs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    for mat in (eff.a, eff.b):
        quad = np.einsum("si,ij,sj->s", zs, mat, zs)
        assert quad.min() >= alpha and quad.max() <= m_bound
    _report(4, "alpha |z|^2 <= z.Az <= M |z|^2 for 1000 random unit z", t0)


def test_c05_stokes_cell_validation():
    t0 = time.perf_counter()
    mu = 1.5
    chan = solve_stokes_cell(build_unit_cell(64), mu=mu, direction=0, channel=True)
    mean = chan.mean(1.0)
    assert mean[0] == pytest.approx(1.0 / (12.0 * mu), rel=0.02)
    disk = solve_stokes_cell(build_unit_cell(64, ("disk", 0.25)), mu=1.0, direction=0)
    qbar = disk.mean(build_unit_cell(64, ("disk", 0.25)).pore_volume)
    assert abs(qbar[1]) < 1e-10
    _report(5, "plane-channel mean within 2% of 1/(12 mu); disk transverse mean < 1e-10", t0)


def test_c06_closed_system_conservation():
    t0 = time.perf_counter()
    cell = build_unit_cell(8, ("square", 0.5))
    dom = build_perforated_domain(cell, 8)        # 64^2 grid at eps = 1/8
    xs, ys = dom.cell_centers()
    n = dom.n_grid
    kin = KineticsParams(1.0, 1.0, 1.0, 1.0, delta=0.1)
    run = micro_simulate(dom, np.ones((n, n)), np.full((n, n), 0.5), kin,
                        BoundaryData(), 500 * 0.0005, 0.0005,
                        1.0 + 0.3 * np.cos(np.pi * xs), 1.0 + 0.3 * np.cos(np.pi * ys),
                        0.05)
    cu = [d["combined_u"] for d in run.diag]
    cv = [d["combined_v"] for d in run.diag]
    assert len(cu) == 501
    for seq in (cu, cv):
        steps = np.abs(np.diff(seq)) / seq[0]
        assert steps.max() <= 1e-10
    _report(6, "500 steps, per-step relative drift of u + eps*surface(w) below 1e-10", t0)


def _fuzz_micro(rng, idx):
    r = 8
    inv_eps = int(rng.choice([2, 4]))
    incl = ("square", 0.5) if idx % 2 == 0 else ("disk", 0.3)
    cell = build_unit_cell(r, incl)
    dom = build_perforated_domain(cell, inv_eps)
    n = dom.n_grid
    mode = "event" if idx % 5 == 0 else "regularized"
    kin = KineticsParams(k_f=rng.uniform(0.5, 2.0), k_d=rng.uniform(0.5, 2.0),
                         k1=rng.uniform(0.5, 2.0), k2=rng.uniform(0.5, 2.0),
                         delta=rng.uniform(0.05, 0.3), mode=mode)
    dt = min(0.5 * kin.delta / kin.k_d, 0.005)
    steps = 25
    u0 = rng.uniform(0.2, 2.0, (n, n))
    v0 = rng.uniform(0.2, 2.0, (n, n))
    w0 = float(rng.uniform(0.0, 0.5))
    d1 = np.full((n, n), rng.uniform(0.5, 2.0))
    d2 = np.full((n, n), rng.uniform(0.5, 2.0))
    bd = BoundaryData(inflow_u=-rng.uniform(0.0, 0.2), inflow_v=-rng.uniform(0.0, 0.2))
    run = micro_simulate(dom, d1, d2, kin, bd, steps * dt, dt, u0, v0, w0,
                        snapshot_stride=5)
    bound = w0 + kin.k_d * (1.0 + kin.k / 4.0) * steps * dt
    pore = dom.pore_mask
    for st in run.states:
        assert st.u[pore].min() >= 0.0, f"fuzz case {idx}: negative u"
        assert st.v[pore].min() >= 0.0, f"fuzz case {idx}: negative v"
        assert st.w.min() >= 0.0, f"fuzz case {idx}: negative w"
        assert st.w.max() <= bound + 1e-12, f"fuzz case {idx}: mineral bound"


def _fuzz_macro(rng, idx):
    from poroscale.cell import EffectiveCoefficients
    n = 12
    du, dv = rng.uniform(0.3, 1.5, 2)
    eff = EffectiveCoefficients(du * np.eye(2), dv * np.eye(2),
                                np.zeros(2), np.zeros(2), rng.uniform(0.6, 0.9))
    mode = "event" if idx % 5 == 0 else "regularized"
    kin = KineticsParams(k_f=rng.uniform(0.5, 2.0), k_d=rng.uniform(0.5, 2.0),
                         k1=rng.uniform(0.5, 2.0), k2=rng.uniform(0.5, 2.0),
                         delta=rng.uniform(0.05, 0.3), mode=mode)
    dt = min(0.5 * kin.delta / kin.k_d, 0.005)
    steps = 25
    gamma = rng.uniform(1.0, 3.0)
    u0 = rng.uniform(0.2, 2.0, (n, n))
    v0 = rng.uniform(0.2, 2.0, (n, n))
    w0 = float(rng.uniform(0.0, 0.5))
    run = macro_simulate(n, 1.0, eff, kin, BoundaryData(inflow_u=-0.05, inflow_v=-0.05),
                         gamma, steps * dt, dt, u0, v0, w0, snapshot_stride=5)
    bound = w0 + kin.k_d * (1.0 + kin.k / 4.0) * steps * dt
    for st in run.states:
        assert st.u.min() >= 0.0 and st.v.min() >= 0.0, f"macro fuzz {idx}"
        assert st.w.min() >= 0.0 and st.w.max() <= bound + 1e-12, f"macro fuzz {idx}"


def test_c07_positivity_and_mineral_bound_fuzz():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for idx in range(30):
        _fuzz_micro(rng, idx)
    for idx in range(20):
        _fuzz_macro(rng, idx)
    _report(7, "50 random admissible configs keep u, v, w >= 0 and the mineral bound", t0)


def test_c08_rothe_self_convergence():
    t0 = time.perf_counter()
    cell = build_unit_cell(8, ("square", 0.5))
    dom = build_perforated_domain(cell, 2)
    xs, ys = dom.cell_centers()
    n = dom.n_grid
    u0 = 1.0 + 0.3 * np.cos(np.pi * xs)
    v0 = 1.0 + 0.3 * np.cos(np.pi * ys)
    kin = KineticsParams(1.0, 1.0, 1.0, 1.0, delta=0.2)
    bd = BoundaryData(-0.1, 0.0, -0.05, 0.0)
    d1, d2 = np.ones((n, n)), np.full((n, n), 0.5)
    t_end = 0.1

    def final_u(h):
        return micro_simulate(dom, d1, d2, kin, bd, t_end, h, u0, v0, 0.05).final.u

    ref = final_u(t_end / 128)
    hs = [t_end / 8, t_end / 16, t_end / 32]
    errs = [np.sqrt((((final_u(h) - ref)[dom.pore_mask]) ** 2).sum() * dom.spacing ** 2)
            for h in hs]
    eoc = ls_slope(hs, errs)
    assert 0.8 <= eoc <= 1.2, (eoc, errs)
    _report(8, f"EOC against the h/16 reference is {eoc:.3f} in [0.8, 1.2]", t0)


def test_c09_homogenization_error_trend():
    t0 = time.perf_counter()
    runner = ConfigRunner(parse_and_validate(DISK_SWEEP_CONFIG))
    table, _ = epsilon_sweep(runner, [4, 8, 16], 0.1)
    for name in ("L2_u", "L2_v", "L2_w"):
        col = table.column(name, reverse_eps=True)
        assert all(b < a for a, b in zip(col, col[1:])), (name, col)
    _report(9, "pore-restricted L2 errors strictly decrease over eps = 1/4, 1/8, 1/16", t0)


def test_c10_limit_commutation():
    t0 = time.perf_counter()
    runner = ConfigRunner(parse_and_validate(COMMUTE_CONFIG))
    eps, deltas = [4, 8, 16], [0.1, 0.05, 0.025]
    rep = limit_order_study(runner, eps, deltas)
    for key in ("gap_u", "gap_v", "gap_w"):
        col = [r[key] for r in rep.rows]
        assert all(b < a for a, b in zip(col, col[1:])), (key, col)
    ctrl = limit_order_study(runner, eps, deltas, frozen_delta=1.0)
    for key in ("gap_u", "gap_v", "gap_w"):
        col = [r[key] for r in ctrl.rows]
        assert all(b >= a for a, b in zip(col, col[1:])), (key, col)
    _report(10, "diagonal commutation gap strictly decreases; frozen-delta control does not", t0)


def test_c11_gronwall_stability():
    t0 = time.perf_counter()
    runner = ConfigRunner(parse_and_validate(DISK_SWEEP_CONFIG))

    def final(w0):
        return runner.run_macro(w0=w0).final

    base = final(0.05)
    diffs = []
    for eta in (1e-2, 1e-3, 1e-4):
        pert = final(0.05 + eta)
        diffs.append(np.linalg.norm(pert.u - base.u) + np.linalg.norm(pert.v - base.v)
                     + np.linalg.norm(pert.w - base.w))
    assert 5.0 <= diffs[0] / diffs[1] <= 20.0, diffs
    assert 5.0 <= diffs[1] / diffs[2] <= 20.0, diffs
    r1 = final(0.05)
    r2 = final(0.05)
    for f in ("u", "v", "w", "z", "sink"):
        assert np.array_equal(getattr(r1, f), getattr(r2, f))
    _report(11, "terminal difference scales linearly over the eta decade; reruns bit-identical", t0)


def test_c12_sink_bound():
    t0 = time.perf_counter()
    from poroscale.cell import EffectiveCoefficients
    rng = np.random.default_rng(99)
    n = 12
    for idx in range(10):
        eff = EffectiveCoefficients(np.eye(2), 0.5 * np.eye(2), np.zeros(2),
                                    np.zeros(2), rng.uniform(0.6, 0.9))
        kin = KineticsParams(k_f=rng.uniform(0.5, 3.0), k_d=rng.uniform(0.5, 2.0),
                             k1=1.0, k2=1.0, delta=0.1,
                             mode="event" if idx % 2 else "regularized")
        gamma = rng.uniform(1.0, 3.0)
        run = macro_simulate(n, 1.0, eff, kin, BoundaryData(), gamma, 0.05, 0.005,
                             rng.uniform(0.0, 4.0, (n, n)), rng.uniform(0.0, 4.0, (n, n)),
                             float(rng.uniform(0.0, 1.0)), snapshot_stride=1)
        bound = (gamma / eff.porosity) * kin.k_d * (1.0 + kin.k / 4.0)
        for d in run.diag:
            assert d["max_sink"] <= bound + 1e-12
    _report(12, "sink magnitude never exceeds (|Gamma|/|Y^p|) k_d (1 + k/4)", t0)
