import numpy as np
import pytest

from poroscale import (DissolutionValue, KineticsParams, langmuir_rate,
                       lipschitz_bound, psi_delta, psi_multivalued,
                       surface_ode_step)
from poroscale.errors import ConfigError

from oracles import event_decay_closed_form


def test_rate_zero_on_axes(kin_reg):
    assert langmuir_rate(0.0, 5.0, kin_reg) == 0.0
    assert langmuir_rate(3.0, 0.0, kin_reg) == 0.0


def test_rate_zero_outside_quadrant(kin_reg):
    assert langmuir_rate(-1.0, 3.0, kin_reg) == 0.0
    assert langmuir_rate(2.0, -0.5, kin_reg) == 0.0
    assert langmuir_rate(-1.0, -1.0, kin_reg) == 0.0


def test_rate_closed_form_point(kin_reg):
    # independent scalar evaluation at k = k1 = k2 = 1, u = v = 1
    assert langmuir_rate(1.0, 1.0, kin_reg) == pytest.approx(1.0 / 9.0, rel=1e-14)


def test_rate_bounded_by_quarter_k(rng):
    p = KineticsParams(k_f=3.0, k_d=2.0, k1=0.7, k2=1.9, delta=0.1)
    u = rng.uniform(-5.0, 50.0, 100000)
    v = rng.uniform(-5.0, 50.0, 100000)
    r = langmuir_rate(u, v, p)
    assert np.all(r >= 0.0)
    assert np.all(r <= p.k / 4.0 + 1e-15)


def test_psi_multivalued_branches():
    assert psi_multivalued(-0.3) == DissolutionValue(0.0, 0.0)
    assert psi_multivalued(0.0) == DissolutionValue(0.0, 1.0)
    assert psi_multivalued(7.0) == DissolutionValue(1.0, 1.0)


def test_psi_delta_branchwise_exact():
    d = 0.137
    assert psi_delta(-1.0, d) == 0.0
    assert psi_delta(0.0, d) == 0.0
    assert psi_delta(d / 2, d) == 0.5
    assert psi_delta(d, d) == 1.0
    assert psi_delta(2 * d, d) == 1.0


def test_psi_delta_monotone_lipschitz(rng):
    d = 0.05
    w = np.sort(rng.uniform(-1.0, 1.0, 2000))
    vals = psi_delta(w, d)
    assert np.all(np.diff(vals) >= 0.0)
    assert vals.min() >= 0.0 and vals.max() <= 1.0
    slopes = np.abs(np.diff(vals)) / np.diff(w)
    assert slopes.max() <= 1.0 / d + 1e-9


def test_psi_delta_converges_to_graph_off_zero():
    for w in (-0.5, 0.3, 1.0):
        limits = [psi_delta(w, d) for d in (1e-2, 1e-4, 1e-6)]
        target = psi_multivalued(w).hi if w > 0 else 0.0
        assert abs(limits[-1] - target) <= abs(limits[0] - target)
        assert limits[-1] == pytest.approx(target, abs=1e-12)


def test_lipschitz_bound_degenerate_box(kin_reg):
    assert lipschitz_bound(kin_reg, 0.0, 0.0) == 0.0


def test_lipschitz_bound_dominates_expression(kin_reg):
    lr = lipschitz_bound(kin_reg, 1.0, 1.0)
    at_corner = kin_reg.k * kin_reg.k1 * kin_reg.k2 * 1.0 * abs((1 + kin_reg.k2) ** 2 + kin_reg.k1 ** 2)
    assert lr >= at_corner


def test_lipschitz_bound_monte_carlo(rng):
    p = KineticsParams(k_f=2.0, k_d=1.0, k1=1.3, k2=0.8, delta=0.1)
    u_max, v_max = 3.0, 2.0
    lr = lipschitz_bound(p, u_max, v_max)
    u1 = rng.uniform(0.0, u_max, 100000)
    u2 = rng.uniform(0.0, u_max, 100000)
    v = rng.uniform(0.0, v_max, 100000)
    lhs = np.abs(langmuir_rate(u1, v, p) - langmuir_rate(u2, v, p))
    assert np.all(lhs <= lr * np.abs(u1 - u2) + 1e-14)


def test_params_validation():
    with pytest.raises(ConfigError):
        KineticsParams(k_f=0.0, k_d=1.0, k1=1.0, k2=1.0)
    with pytest.raises(ConfigError):
        KineticsParams(k_f=1.0, k_d=1.0, k1=1.0, k2=1.0, delta=0.0, mode="regularized")
    with pytest.raises(ConfigError):
        KineticsParams(k_f=1.0, k_d=1.0, k1=1.0, k2=1.0, mode="sticky")
    p = KineticsParams(k_f=3.0, k_d=1.5, k1=1.0, k2=1.0)
    assert p.k == 2.0


def test_surface_step_rejects_bad_h(kin_reg):
    with pytest.raises(ValueError):
        surface_ode_step(0.1, 1.0, 1.0, 0.0, kin_reg)


def test_event_hold_at_zero_reports_rate(kin_event):
    # R(1,1) = 1/9 < 1 at w = 0: stays put, z equals the rate
    w_new, z = surface_ode_step(0.0, 1.0, 1.0, 0.01, kin_event)
    assert w_new == 0.0
    assert z == pytest.approx(1.0 / 9.0, rel=1e-14)


def test_event_nothing_happens_without_species(kin_event):
    w_new, z = surface_ode_step(0.0, 0.0, 0.0, 0.01, kin_event)
    assert w_new == 0.0 and z == 0.0


def test_event_decay_matches_closed_form(kin_event):
    r = langmuir_rate(1.0, 1.0, kin_event)        # 1/9, decay slope kd(r-1)
    w0 = 0.01
    h = 0.002
    w, t = w0, 0.0
    for _ in range(20):
        w, z = surface_ode_step(w, 1.0, 1.0, h, kin_event)
        t += h
        assert w == pytest.approx(event_decay_closed_form(w0, r, kin_event.k_d, t), abs=1e-14)
        assert 0.0 <= z <= 1.0
    assert w == 0.0                               # crossed within the horizon


def test_event_growth_above_unit_rate():
    p = KineticsParams(k_f=8.0, k_d=1.0, k1=1.0, k2=1.0, mode="event")
    r = langmuir_rate(4.0, 4.0, p)                # 8*16/81 > 1
    assert r > 1.0
    w_new, z = surface_ode_step(0.0, 4.0, 4.0, 0.5, p)
    assert w_new == pytest.approx(0.5 * (r - 1.0), rel=1e-13)
    assert z == 1.0


def test_event_never_negative(rng, kin_event):
    w = rng.uniform(0.0, 0.5, 5000)
    u = rng.uniform(0.0, 3.0, 5000)
    v = rng.uniform(0.0, 3.0, 5000)
    for _ in range(40):
        w, z = surface_ode_step(w, u, v, 0.05, kin_event)
        assert np.all(w >= 0.0)
        assert np.all(z >= -1e-15) and np.all(z <= 1.0 + 1e-15)


def test_regularized_sign_preserving_under_restriction(rng, kin_reg):
    # h k_d <= delta keeps w nonnegative
    h = kin_reg.delta / kin_reg.k_d
    w = rng.uniform(0.0, 0.4, 5000)
    u = rng.uniform(0.0, 3.0, 5000)
    v = rng.uniform(0.0, 3.0, 5000)
    for _ in range(40):
        w, _ = surface_ode_step(w, u, v, h, kin_reg)
        assert np.all(w >= 0.0)


@pytest.mark.parametrize("mode", ["regularized", "event"])
def test_uniform_bound_on_iterates(rng, mode):
    p = KineticsParams(k_f=2.0, k_d=1.5, k1=1.0, k2=1.0, delta=0.05, mode=mode)
    t_end, h = 2.0, 0.02
    w0 = rng.uniform(0.0, 1.0, 1000)
    w = w0.copy()
    for _ in range(int(t_end / h)):
        u = rng.uniform(0.0, 10.0, 1000)
        v = rng.uniform(0.0, 10.0, 1000)
        w, _ = surface_ode_step(w, u, v, h, p)
    bound = w0.max() + p.k_d * (1.0 + p.k / 4.0) * t_end
    assert w.max() <= bound + 1e-12


def test_scalar_and_array_paths_agree(kin_event):
    ws = np.array([0.0, 0.005, 0.3, -0.02])
    us = np.array([1.0, 1.0, 0.2, 2.0])
    vs = np.array([1.0, 0.5, 0.2, 2.0])
    batch_w, batch_z = surface_ode_step(ws, us, vs, 0.01, kin_event)
    for i in range(ws.size):
        w1, z1 = surface_ode_step(ws[i], us[i], vs[i], 0.01, kin_event)
        assert w1 == batch_w[i]
        assert z1 == batch_z[i]
