import math

import numpy as np
import pytest

from contactlab import algebra as A
from contactlab import shapes as S
from contactlab.geometry import (
    ConstantForm,
    MetricForm,
    PullbackForm,
    RoundForm,
    TrigForm,
    TrigTerm,
)

CAT = ((2, 1), (1, 1))


def random_domain(rng, dirs):
    return S.StarDomain(dirs, 0.5 + rng.random(dirs.shape[0]))


@pytest.fixture
def dirs2():
    return S.direction_grid(2)


@pytest.fixture
def q2():
    return S.q_lattice(2, 32)


# ---------------------------------------------------------------------------
# StarDomain / FlatMetric validation
# ---------------------------------------------------------------------------

def test_star_domain_rejects_nonpositive_radii(dirs2):
    with pytest.raises(S.ShapeError):
        S.StarDomain(dirs2, np.zeros(dirs2.shape[0]))


def test_flat_metric_validation():
    with pytest.raises(S.ShapeError):
        S.FlatMetric(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(S.ShapeError):
        S.FlatMetric(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert S.FlatMetric(np.eye(2)).g.shape == (2, 2)


# ---------------------------------------------------------------------------
# flat_shape
# ---------------------------------------------------------------------------

def test_flat_shape_round_is_unit_ball(dirs2, q2):
    dom = S.flat_shape(RoundForm(), dirs2, q2)
    assert np.allclose(dom.rho, 1.0)


def test_flat_shape_constant_scales(dirs2, q2):
    dom = S.flat_shape(ConstantForm(2.0), dirs2, q2)
    assert np.allclose(dom.rho, 2.0)


def test_flat_shape_trig_min(dirs2, q2):
    form = TrigForm(1.0, [TrigTerm(0.5, (1, 0))])
    dom = S.flat_shape(form, dirs2, q2)
    assert np.allclose(dom.rho, 0.5, atol=1e-12)


def test_flat_shape_monotone_and_scaling(dirs2, q2, rng):
    form1 = TrigForm(1.0, [TrigTerm(0.3, (1, 0))])
    form2 = TrigForm(1.5, [TrigTerm(0.3, (1, 0))])  # pointwise larger
    r1 = S.flat_shape(form1, dirs2, q2).rho
    r2 = S.flat_shape(form2, dirs2, q2).rho
    assert np.all(r1 <= r2)
    scaled = S.flat_shape(TrigForm(2.0, [TrigTerm(0.6, (1, 0))]), dirs2, q2).rho
    assert np.allclose(scaled, 2.0 * r1)


def test_flat_shape_metric_is_dual_ball(dirs2, q2):
    dom = S.flat_shape(MetricForm(np.diag([4.0, 1.0])), dirs2, q2)
    # boundary: b1^2/4 + b2^2 = 1, radius in direction u is 1/sqrt(u G^{-1} u)
    expected = 1.0 / np.sqrt(dirs2[:, 0] ** 2 / 4.0 + dirs2[:, 1] ** 2)
    assert np.allclose(dom.rho, expected)


# ---------------------------------------------------------------------------
# delta metric
# ---------------------------------------------------------------------------

def test_delta_examples(dirs2):
    ball = S.ball(dirs2)
    assert S.delta(ball, ball) == 0.0
    assert S.delta(ball, S.ball(dirs2, 2.0)) == pytest.approx(math.log(2.0))
    ellipse = S.StarDomain(
        dirs2, 1.0 / np.sqrt(dirs2[:, 0] ** 2 / 4.0 + 4.0 * dirs2[:, 1] ** 2)
    )
    assert S.delta(ball, ellipse) == pytest.approx(math.log(2.0), abs=1e-10)


def test_delta_metric_axioms(rng, dirs2):
    for _ in range(100):
        a, b, c = (random_domain(rng, dirs2) for _ in range(3))
        assert S.delta(a, b) == S.delta(b, a)
        assert S.delta(a, a) == 0.0
        assert S.delta(a, b) >= 0.0
        assert S.delta(a, c) <= S.delta(a, b) + S.delta(b, c) + 1e-12
    d = random_domain(rng, dirs2)
    e = S.StarDomain(dirs2, d.rho.copy())
    assert S.delta(d, e) == 0.0


def test_delta_grid_mismatch(dirs2):
    other = S.direction_grid(2, 128)
    with pytest.raises(S.ShapeError, match="grid"):
        S.delta(S.ball(dirs2), S.ball(other))


# ---------------------------------------------------------------------------
# act
# ---------------------------------------------------------------------------

def test_act_identity(dirs2, rng):
    a = random_domain(rng, dirs2)
    b = S.act(A.identity_matrix(2), a)
    assert np.allclose(b.rho, a.rho)


def test_act_cat_on_ball_membership_oracle(dirs2, rng):
    a = S.ball(dirs2)
    image = S.act(CAT, a)
    inv = np.linalg.inv(np.array(CAT, float))
    hits = 0
    for _ in range(10000):
        v = rng.normal(size=2) * 1.5
        truth = np.linalg.norm(inv @ v) < 1.0  # v in M·A iff M^-1 v in A
        got = image.contains(v)
        if truth == got:
            hits += 1
        else:
            # disagreements must hug the boundary (nearest-direction grid)
            assert abs(np.linalg.norm(inv @ v) - 1.0) < 0.03
    assert hits > 9900


def test_act_cat_on_ball_singular_values(dirs2):
    image = S.act(CAT, S.ball(S.direction_grid(2, 4096)))
    svals = np.linalg.svd(np.array(CAT, float), compute_uv=False)
    assert image.rho.max() == pytest.approx(svals[0], abs=1e-4)
    assert image.rho.min() == pytest.approx(svals[1], abs=1e-4)


def smooth_domain(dirs):
    theta = np.arctan2(dirs[:, 1], dirs[:, 0])
    return S.StarDomain(dirs, 1.0 + 0.3 * np.cos(2.0 * theta))


def test_act_group_action_law(rng):
    # Nearest-direction resampling error scales with the grid spacing, so the
    # composition law is checked on a smooth domain at a fine grid.
    dirs = S.direction_grid(2, 32768)
    a = smooth_domain(dirs)
    mats = [((1, 1), (0, 1)), ((1, 0), (-1, 1)), ((0, -1), (1, 0))]
    for i_mat in mats:
        for j_mat in mats:
            lhs = S.act(A.mat_mul(i_mat, j_mat), a)
            rhs = S.act(i_mat, S.act(j_mat, a))
            assert S.delta(lhs, rhs) < 1e-3
    assert np.allclose(S.act(A.identity_matrix(2), a).rho, a.rho)


def test_equivariance_of_linear_lifts():
    # flat shape of the pulled-back form = act(M^T, flat shape of the form)
    dirs = S.direction_grid(2, 32768)
    q = S.q_lattice(2, 4)
    base = MetricForm(np.array([[2.0, 0.5], [0.5, 1.0]]))
    m = [[2, 1], [1, 1]]
    lhs = S.flat_shape(PullbackForm(m, base), dirs, q)
    rhs = S.act(A.mat_transpose(A.as_matrix(m)), S.flat_shape(base, dirs, q))
    assert S.delta(lhs, rhs) < 1e-3


# ---------------------------------------------------------------------------
# displacement
# ---------------------------------------------------------------------------

def test_displacement_identity_and_rotation(dirs2):
    ball = S.ball(dirs2)
    assert S.displacement_estimate(A.identity_matrix(2), ball, 10) == 0.0
    rot = ((0, -1), (1, 0))
    assert S.displacement_estimate(rot, ball, 12) == pytest.approx(0.0, abs=1e-9)


def test_displacement_cat_map(dirs2):
    val = S.displacement_estimate(CAT, S.ball(dirs2), 20)
    assert val == pytest.approx(A.s_value(CAT), abs=1e-2)


def test_displacement_matches_spectrum_random(rng, dirs2):
    dirs3 = S.direction_grid(3)
    for dim, dirs in ((2, dirs2), (3, dirs3)):
        for m in A.sample_hyperbolic_lattice_matrices(rng, dim, 5):
            val = S.displacement_estimate(m, S.ball(dirs), 20)
            assert val == pytest.approx(A.s_value(m), abs=1e-2)


def test_displacement_needs_enough_iterates(dirs2):
    with pytest.raises(S.ShapeError):
        S.displacement_estimate(CAT, S.ball(dirs2), 4)


# ---------------------------------------------------------------------------
# stable norm and duality
# ---------------------------------------------------------------------------

def test_stable_norm_examples():
    assert S.stable_norm(np.eye(2), (1, 0)) == 1.0
    assert S.stable_norm(np.eye(2), (3, 4)) == 5.0
    assert S.stable_norm(np.diag([4.0, 1.0]), (1, 0)) == 2.0
    with pytest.raises(S.ShapeError, match="trivial"):
        S.stable_norm(np.eye(2), (0, 0))


def test_stable_norm_is_a_norm(rng):
    g = S.FlatMetric(np.array([[2.0, 0.3], [0.3, 1.0]]))
    for _ in range(100):
        a = rng.integers(-5, 6, 2)
        b = rng.integers(-5, 6, 2)
        if not a.any() or not b.any() or not (a + b).any():
            continue
        assert S.stable_norm(g, 3 * a) == pytest.approx(3 * S.stable_norm(g, a))
        assert S.stable_norm(g, a + b) <= S.stable_norm(g, a) + S.stable_norm(g, b) + 1e-12


def test_duality_check_examples(dirs2, rng):
    q = S.q_lattice(2, 8)
    classes = [(1, 0), (0, 1), (2, -3), (-1, 4)]
    for g in (np.eye(2), np.diag([4.0, 1.0])):
        res = S.duality_check(g, classes, dirs2, q)
        assert res["pass"] and res["worst_margin"] >= 0.0
    with pytest.raises(S.ShapeError, match="trivial"):
        S.duality_check(np.eye(2), [(0, 0)], dirs2, q)
    with pytest.raises(S.ShapeError):
        S.duality_check(np.eye(2), [], dirs2, q)
