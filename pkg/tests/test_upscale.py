import numpy as np
import pytest

from poroscale import KineticsParams, build_perforated_domain, build_unit_cell
from poroscale.cell import EffectiveCoefficients
from poroscale.config import parse_and_validate
from poroscale.driver import ConfigRunner
from poroscale.errors import VerificationError
from poroscale.macro import macro_simulate
from poroscale.micro import BoundaryData, micro_simulate
from poroscale.upscale import (ErrorTable, bilinear_sample, compare_micro_macro,
                               epsilon_sweep, format_report, limit_order_study,
                               macro_state_distance)


def test_bilinear_sample_exact_on_linear_fields(rng):
    n = 16
    c = (np.arange(n) + 0.5) / n
    xs, ys = np.meshgrid(c, c, indexing="ij")
    field = 2.0 + 3.0 * xs - 1.5 * ys
    px = rng.uniform(1.0 / n, 1.0 - 1.0 / n, 200)
    py = rng.uniform(1.0 / n, 1.0 - 1.0 / n, 200)
    vals = bilinear_sample(field, 1.0, px, py)
    np.testing.assert_allclose(vals, 2.0 + 3.0 * px - 1.5 * py, atol=1e-12)


def _trivial_pair(n_micro, n_macro, kin):
    """Unperforated micro domain vs the identical macro equation."""
    dom = build_perforated_domain(build_unit_cell(8), n_micro // 8)
    xs, ys = dom.cell_centers()
    u0 = 1.0 + 0.3 * np.cos(np.pi * xs)
    v0 = 1.0 + 0.3 * np.cos(np.pi * ys)
    d = np.full((dom.n_grid, dom.n_grid), 0.8)
    bd = BoundaryData(-0.1, 0.05, -0.02, 0.0)
    micro = micro_simulate(dom, d, d, kin, bd, 0.1, 0.005, u0, v0, 0.0)
    eff = EffectiveCoefficients(0.8 * np.eye(2), 0.8 * np.eye(2),
                                np.zeros(2), np.zeros(2), 1.0)
    c = (np.arange(n_macro) + 0.5) / n_macro
    mx, my = np.meshgrid(c, c, indexing="ij")
    macro = macro_simulate(n_macro, 1.0, eff, kin, bd, 0.0, 0.1, 0.005,
                           1.0 + 0.3 * np.cos(np.pi * mx),
                           1.0 + 0.3 * np.cos(np.pi * my), 0.0)
    return micro, macro


def test_unperforated_same_grid_agrees_to_solver_precision(kin_reg):
    micro, macro = _trivial_pair(64, 64, kin_reg)
    errs = compare_micro_macro(micro, macro)
    assert errs["L2_u"] < 1e-10
    assert errs["L2_v"] < 1e-10
    assert errs["L2_w"] == 0.0


def test_unperforated_cross_grid_within_discretization(kin_reg):
    micro, macro = _trivial_pair(64, 32, kin_reg)
    errs = compare_micro_macro(micro, macro)
    assert errs["L2_u"] < 1e-3
    assert errs["L2_v"] < 1e-3


def test_identical_state_zero_error(kin_reg):
    # a macro run carrying exactly the micro fields compares to zero
    from poroscale.macro import MacroRun, MacroState
    micro, _ = _trivial_pair(32, 32, kin_reg)
    ms = micro.final
    zero = np.zeros_like(ms.u)
    fake = MacroRun(n=ms.u.shape[0], extent=1.0, eff=None,
                    states=[MacroState(ms.t, ms.u.copy(), ms.v.copy(),
                                       zero, zero.copy(), zero.copy())])
    errs = compare_micro_macro(micro, fake)
    assert errs["L2_u"] < 1e-12 and errs["L2_v"] < 1e-12 and errs["L2_w"] == 0.0


def test_mismatched_times_rejected(kin_reg):
    micro, macro = _trivial_pair(32, 32, kin_reg)
    macro.final.t = 0.2
    with pytest.raises(VerificationError):
        compare_micro_macro(micro, macro)


def test_error_table_sorted_and_columns():
    t = ErrorTable()
    t.add(0.25, 0.1, {"L2_u": 3.0, "L2_v": 1.0, "L2_w": 0.5}, 1.0)
    t.add(0.0625, 0.1, {"L2_u": 1.0, "L2_v": 0.3, "L2_w": 0.1}, 1.0)
    t.add(0.125, 0.1, {"L2_u": 2.0, "L2_v": 0.6, "L2_w": 0.2}, 1.0)
    assert [r["epsilon"] for r in t.rows] == [0.0625, 0.125, 0.25]
    assert t.column("L2_u", reverse_eps=True) == [3.0, 2.0, 1.0]


SWEEP_CONFIG = """
[geometry]
cell_resolution = 8
inclusion = square
inclusion_size = 0.5
macro_resolution = 16
cell_refine = 4
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
t_end = 0.1
dt = 0.005
"""


def test_small_epsilon_sweep_monotone():
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    table, _ = epsilon_sweep(runner, [2, 4, 8], 0.1)
    for name in ("L2_u", "L2_v", "L2_w"):
        col = table.column(name, reverse_eps=True)
        assert all(b < a for a, b in zip(col, col[1:])), (name, col)
    text, ok = format_report(table=table)
    assert ok and "PASS" in text


def test_empty_eps_list_gives_empty_table():
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    table, macro = epsilon_sweep(runner, [], 0.1)
    assert table.rows == [] and macro is None


def test_discrete_energy_uniform_in_epsilon():
    # ||u(T)||^2 + sum_i dt ||grad u_i||^2 stays within a fixed band across
    # the scale sweep (uniform-in-epsilon energy estimate at desk scale)
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    dt = runner.cfg.dt
    energies = []
    for inv_eps in (2, 4, 8):
        run = runner.run_micro(inv_epsilon=inv_eps)
        e = run.diag[-1]["l2_u"] ** 2 + dt * sum(d["h1_u"] ** 2 for d in run.diag[1:])
        energies.append(e)
    assert max(energies) <= 5.0
    assert max(energies) <= 1.5 * min(energies)


def test_sweep_determinism():
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    t1, _ = epsilon_sweep(runner, [2, 4], 0.1)
    t2, _ = epsilon_sweep(runner, [2, 4], 0.1)
    for r1, r2 in zip(t1.rows, t2.rows):
        for k in ("epsilon", "delta", "L2_u", "L2_v", "L2_w"):
            assert r1[k] == r2[k]


def test_limit_order_study_shapes_and_trend():
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    rep = limit_order_study(runner, [2, 4, 8], [0.1, 0.05, 0.025])
    assert len(rep.rows) == 3 and len(rep.path_b_trend) == 3
    for key in ("gap_u", "gap_v", "gap_w"):
        col = [r[key] for r in rep.rows]
        assert all(b < a for a, b in zip(col, col[1:])), (key, col)
    bu = [d["u"] for d in rep.path_b_trend]
    assert all(b < a for a, b in zip(bu, bu[1:]))


def test_limit_order_study_rejects_empty():
    runner = ConfigRunner(parse_and_validate(SWEEP_CONFIG))
    with pytest.raises(VerificationError):
        limit_order_study(runner, [], [])


def test_macro_state_distance_zero_on_self(kin_reg):
    _, macro = _trivial_pair(32, 16, kin_reg)
    d = macro_state_distance(macro, macro)
    assert d == {"u": 0.0, "v": 0.0, "w": 0.0}
