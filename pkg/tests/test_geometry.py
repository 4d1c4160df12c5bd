import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlab.geometry import (
    CEPoint,
    ConstantForm,
    CotangentPoint,
    Direction,
    GeometryError,
    Jet,
    MetricForm,
    PullbackForm,
    RoundForm,
    TorusPoint,
    TrigForm,
    TrigTerm,
    chart_decode,
    chart_encode,
    chart_to_point,
    check_positive,
    eval_form,
    jacobian,
    jatan2,
    jcos,
    jmod1,
    jsin,
    jsqrt,
    jval,
    norm_of,
    point_to_chart,
    seed_jets,
    sphere_grid_array,
    wrap,
)

finite = st.floats(-10.0, 10.0, allow_nan=False)


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(finite, finite)
def test_jet_arithmetic_matches_finite_differences(a, b):
    def f(x, y):
        return (x * y + 3.0) / (1.5 + x * x) - y + jsin(x) * jcos(y)

    jx, jy = seed_jets([a, b])
    out = f(jx, jy)
    h = 1e-6
    dx = (f(a + h, b) - f(a - h, b)) / (2 * h)
    dy = (f(a, b + h) - f(a, b - h)) / (2 * h)
    assert out.partials[0] == pytest.approx(dx, abs=1e-6, rel=1e-5)
    assert out.partials[1] == pytest.approx(dy, abs=1e-6, rel=1e-5)


def test_jet_sqrt_and_atan2():
    (jx,) = seed_jets([4.0])
    r = jsqrt(jx)
    assert r.value == 2.0 and r.partials[0] == pytest.approx(0.25)
    jy, jx2 = seed_jets([1.0, 1.0])
    t = jatan2(jy, jx2)
    assert t.value == pytest.approx(math.pi / 4)
    assert t.partials[0] == pytest.approx(0.5)   # d atan2 / dy = x / r^2
    assert t.partials[1] == pytest.approx(-0.5)  # d atan2 / dx = -y / r^2


def test_jet_mod1_keeps_derivative():
    (jx,) = seed_jets([1.75])
    out = jmod1(jx)
    assert out.value == pytest.approx(0.75)
    assert out.partials[0] == 1.0


def test_jet_batched_values():
    x = Jet(np.array([1.0, 2.0, 3.0]), np.ones((1, 3)))
    y = (x * x + 1.0) / x
    assert np.allclose(jval(y), np.array([2.0, 2.5, 10.0 / 3.0]))
    assert np.allclose(y.partials[0], 1.0 - 1.0 / np.array([1.0, 4.0, 9.0]))


def test_jacobian_of_linear_map_is_exact():
    m = np.array([[2.0, 1.0], [1.0, 1.0]])

    def phi(x):
        return [m[0, 0] * x[0] + m[0, 1] * x[1], m[1, 0] * x[0] + m[1, 1] * x[1]]

    assert np.allclose(jacobian(phi, [0.3, -0.7]), m)


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------

def test_torus_point_wraps():
    p = TorusPoint([1.25, -0.5])
    assert p.q == (0.25, 0.5)
    assert wrap([2.0, 3.0, 4.5]).q == (0.0, 0.0, 0.5)


def test_torus_point_bad_dimension():
    with pytest.raises(GeometryError):
        TorusPoint([0.1])


def test_direction_normalizes_and_rejects_zero():
    d = Direction([3.0, 4.0])
    assert d.u == pytest.approx((0.6, 0.8))
    assert Direction.from_angle(0.25).u == pytest.approx((0.0, 1.0), abs=1e-15)
    assert Direction.from_angle(0.125).theta == pytest.approx(0.125)
    with pytest.raises(GeometryError):
        Direction([0.0, 0.0])


def test_cotangent_point_rejects_zero_covector():
    with pytest.raises(GeometryError, match="not in T"):
        CotangentPoint((0.0, 0.0), wrap([0.1, 0.2]))


def test_ce_point_dimension_consistency():
    with pytest.raises(GeometryError):
        CEPoint(Direction([1.0, 0.0]), wrap([0.1, 0.2, 0.3]))


# ---------------------------------------------------------------------------
# Forms
# ---------------------------------------------------------------------------

def test_round_form_norm():
    z = CotangentPoint((3.0, 4.0), wrap([0.0, 0.0]))
    assert norm_of(z, RoundForm()) == pytest.approx(5.0)
    assert norm_of(z, ConstantForm(2.0)) == pytest.approx(2.5)


def test_metric_form_profile_is_dual_radius():
    g = np.diag([4.0, 1.0])
    form = MetricForm(g)
    # In direction e1 the unit-cosphere radius is sqrt(g^{-1})^{-1} = 2.
    assert float(jval(form.profile([1.0, 0.0], [0.0, 0.0]))) == pytest.approx(2.0)
    assert float(jval(form.profile([0.0, 1.0], [0.0, 0.0]))) == pytest.approx(1.0)


def test_metric_form_validation():
    with pytest.raises(GeometryError):
        MetricForm(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(GeometryError):
        MetricForm(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_trig_form_positivity_check():
    ok = TrigForm(1.0, [TrigTerm(0.4, (1, 0))])
    assert check_positive(ok, 2, q_res=16, fiber_res=16) > 0
    bad = TrigForm(1.0, [TrigTerm(1.5, (1, 0))])
    with pytest.raises(GeometryError, match="not positive"):
        check_positive(bad, 2, q_res=32, fiber_res=8)


def test_pullback_form_round_is_stretch():
    m = [[2, 1], [1, 1]]
    form = PullbackForm(m, RoundForm())
    u = np.array([1.0, 0.0])
    w = np.linalg.inv(np.array(m, float)).T @ u
    expected = 1.0 / np.linalg.norm(w)
    assert float(jval(form.profile(list(u), [0.0, 0.0]))) == pytest.approx(expected)


def test_eval_form_chart_coefficients():
    x = CEPoint(Direction.from_angle(0.125), wrap([0.3, 0.4]))
    coeffs = eval_form(ConstantForm(2.0), x)
    s = math.sqrt(0.5)
    assert coeffs == pytest.approx([0.0, 2.0 * s, 2.0 * s])


# ---------------------------------------------------------------------------
# Sphere grids and charts
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n,res", [(2, 32), (3, 200)])
def test_sphere_grid_unit_norm(n, res):
    g = sphere_grid_array(n, res)
    assert g.shape == (res, n)
    assert np.allclose(np.linalg.norm(g, axis=1), 1.0)


def test_chart_roundtrip_n2(rng):
    for _ in range(50):
        u = rng.normal(size=2)
        q = rng.random(2)
        x = CEPoint(Direction(u), wrap(q))
        chart, coords = point_to_chart(x)
        y = chart_to_point(2, chart, coords)
        assert np.allclose(y.u.u, x.u.u, atol=1e-12)
        assert np.allclose(y.q.q, x.q.q, atol=1e-12)


def test_chart_roundtrip_n3_both_charts(rng):
    for _ in range(100):
        u = rng.normal(size=3)
        q = rng.random(3)
        x = CEPoint(Direction(u), wrap(q))
        chart, coords = point_to_chart(x)
        y = chart_to_point(3, chart, coords)
        assert np.allclose(y.u.u, x.u.u, atol=1e-10)
        assert np.allclose(y.q.q, x.q.q, atol=1e-12)
    # near-pole directions must land in the second chart
    chart, _ = point_to_chart(CEPoint(Direction([0.01, 0.0, 1.0]), wrap([0, 0, 0])))
    assert chart == 1


def test_chart_encode_decode_consistency_n3():
    u = [0.6, 0.0, 0.8]
    for chart in (0, 1):
        coords = chart_encode(3, chart, u, [0.1, 0.2, 0.3])
        u2, q2 = chart_decode(3, chart, [float(jval(c)) for c in coords])
        assert np.allclose([float(jval(c)) for c in u2], u, atol=1e-12)
        assert np.allclose([float(jval(c)) for c in q2], [0.1, 0.2, 0.3])
