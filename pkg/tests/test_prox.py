import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from penprox.prox import (Box, BoxIndicator, Elastic, L1, L2Norm, Linear,
                          NonnegativeOrthant, Quadratic, SecondOrderCone,
                          SetIndicator, SquaredL2, Translated, Zero, ZeroSet)


def fun_zoo():
    rng = np.random.default_rng(2024)
    Q = rng.standard_normal((4, 4))
    Q = Q @ Q.T + 0.5 * np.eye(4)
    return {
        "zero": (Zero(), 4),
        "linear": (Linear(rng.standard_normal(4)), 4),
        "squared-l2": (SquaredL2(1.3), 4),
        "l1": (L1(0.7), 4),
        "elastic": (Elastic(0.3, 0.2), 4),
        "l2-norm": (L2Norm(), 4),
        "box": (BoxIndicator(-np.ones(4), np.ones(4)), 4),
        "set-indicator": (SetIndicator(NonnegativeOrthant(4)), 4),
        "quadratic": (Quadratic(Q, rng.standard_normal(4)), 4),
    }


def scalar_ternary_prox(value_1d, x, lo, hi, iters=300):
    """Independent per-coordinate minimizer by ternary search."""
    a, b = lo, hi
    for _ in range(iters):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if value_1d(m1) <= value_1d(m2):
            b = m2
        else:
            a = m1
    return 0.5 * (a + b)


def test_zero_prox_is_identity():
    f = Zero()
    assert_allclose(f.prox(2.5, np.array([1.0, -2.0])), [1.0, -2.0])


def test_l1_prox_example_and_oracle():
    f = L1(1.0)
    out = f.prox(1.0, np.array([3.0, -0.5, 0.0]))
    assert_allclose(out, [2.0, 0.0, 0.0])
    rng = np.random.default_rng(8)
    for _ in range(5):
        x = rng.standard_normal(3) * 2
        gamma = rng.uniform(0.2, 3.0)
        got = f.prox(gamma, x)
        for i in range(3):
            expect = scalar_ternary_prox(
                lambda u, xi=x[i]: abs(u) + (u - xi) ** 2 / (2 * gamma),
                x[i], -abs(x[i]) - 1, abs(x[i]) + 1)
            # value-based ternary search resolves to ~sqrt(eps)
            assert abs(got[i] - expect) <= 5e-8


def test_l1_tie_break_exact_zero():
    f = L1(2.0)
    out = f.prox(0.5, np.array([1.0, -1.0, 0.999]))
    # |x| == gamma*kappa2 lands exactly on zero
    assert out[0] == 0.0 and out[1] == 0.0 and out[2] == 0.0


def test_l2norm_prox_examples():
    f = L2Norm()
    got = f.prox(1.0, np.array([3.0, 4.0]))
    assert_allclose(got, [2.4, 3.2], rtol=1e-15)
    # radial oracle: minimize over t >= 0 along x/||x||
    t = scalar_ternary_prox(lambda u: abs(u) + (u - 5.0) ** 2 / 2.0, 5.0, 0, 6)
    assert_allclose(np.linalg.norm(got), t, atol=1e-8)
    assert_allclose(f.prox(1.0, np.array([0.5, 0.5])), [0.0, 0.0])


def test_conj_prox_zero_kind():
    f = Zero()
    out = f.conj_prox(3.0, np.array([4.0, -1.0]))
    assert_allclose(out, [0.0, 0.0], atol=1e-15)


def test_conj_prox_l2_is_unit_ball_projection():
    f = L2Norm()
    assert_allclose(f.conj_prox(1.0, np.array([3.0, 4.0])), [0.6, 0.8],
                    rtol=1e-15)
    inside = np.array([0.3, -0.4])
    assert_allclose(f.conj_prox(1.0, inside), inside)


@pytest.mark.parametrize("name", sorted(fun_zoo()))
@pytest.mark.parametrize("gamma", [0.1, 1.0, 10.0])
def test_moreau_identity(name, gamma):
    f, dim = fun_zoo()[name]
    rng = np.random.default_rng(17)
    for _ in range(100):
        x = rng.standard_normal(dim) * 3
        recon = f.prox(gamma, x) + gamma * f.conj_prox(1.0 / gamma, x / gamma)
        assert np.linalg.norm(recon - x) <= 1e-10 * (1 + np.linalg.norm(x))


@pytest.mark.parametrize("name", sorted(fun_zoo()))
def test_firm_nonexpansiveness(name):
    f, dim = fun_zoo()[name]
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.standard_normal(dim) * 2
        y = rng.standard_normal(dim) * 2
        px, py = f.prox(1.0, x), f.prox(1.0, y)
        lhs = float(np.dot(px - py, px - py))
        rhs = float(np.dot(px - py, x - y))
        assert lhs <= rhs + 1e-12


@pytest.mark.parametrize("name", sorted(fun_zoo()))
def test_prox_optimality_against_perturbations(name):
    f, dim = fun_zoo()[name]
    rng = np.random.default_rng(5)
    gamma = 0.8
    x = rng.standard_normal(dim)
    u = f.prox(gamma, x)
    base = f.value(u) + float(np.dot(u - x, u - x)) / (2 * gamma)
    for _ in range(50):
        d = rng.standard_normal(dim)
        d *= 1e-4 / np.linalg.norm(d)
        v = u + d
        val = f.value(v) + float(np.dot(v - x, v - x)) / (2 * gamma)
        assert base <= val + 1e-15


def test_elastic_contraction_factor():
    kap1 = 0.6
    f = Elastic(kap1, 0.25)
    rng = np.random.default_rng(12)
    for gamma in (0.5, 2.0):
        bound = 1.0 / (1.0 + gamma * kap1)
        for _ in range(50):
            x, y = rng.standard_normal(5), rng.standard_normal(5)
            lhs = np.linalg.norm(f.prox(gamma, x) - f.prox(gamma, y))
            assert lhs <= bound * np.linalg.norm(x - y) + 1e-10


def test_quadratic_prox_solves_shifted_system():
    rng = np.random.default_rng(77)
    Q = rng.standard_normal((5, 5))
    Q = Q @ Q.T
    q = rng.standard_normal(5)
    f = Quadratic(Q, q)
    x = rng.standard_normal(5)
    for gamma in (0.3, 0.3, 1.7):  # repeated gamma exercises the cache
        u = f.prox(gamma, x)
        assert_allclose((np.eye(5) + gamma * Q) @ u, x - gamma * q, atol=1e-10)
    assert len(f._cache) <= f._CACHE_SIZE


def test_quadratic_cache_stays_bounded():
    f = Quadratic(np.eye(3), np.zeros(3))
    x = np.ones(3)
    for i in range(50):
        f.prox(1.0 + i, x)
    assert len(f._cache) <= f._CACHE_SIZE


def test_translated_prox_shift_rule():
    c = np.array([1.0, -2.0])
    f = Translated(L2Norm(), c)
    x = np.array([4.0, 2.0])
    assert_allclose(f.prox(1.0, x), c + L2Norm().prox(1.0, x - c))
    assert f.lip == 1.0


def test_gamma_must_be_positive():
    with pytest.raises(ValueError, match="positive"):
        Zero().prox(0.0, np.zeros(2))
    with pytest.raises(ValueError, match="positive"):
        L1(1.0).conj_prox(-1.0, np.zeros(2))


def test_lip_constants():
    assert L2Norm().lip == 1.0
    assert_allclose(L1(1.0, dim=9).lip, 3.0)


# ---------------------------------------------------------------------------
# projections


def set_zoo():
    return {
        "zero": ZeroSet(3),
        "box": Box(-np.ones(3), np.ones(3)),
        "orthant": NonnegativeOrthant(3),
        "soc": SecondOrderCone(3),
    }


def test_box_interior_point_fixed():
    s = Box(-np.ones(2), np.ones(2))
    u = np.array([0.5, -0.3])
    assert_allclose(s.project(u), u)


def test_singleton_zero_projection():
    s = ZeroSet(2)
    assert_allclose(s.project(np.array([2.0, -7.0])), [0.0, 0.0])
    assert s.dist(np.array([3.0, 4.0])) == 5.0


def test_soc_projection_closed_form():
    s = SecondOrderCone(3)
    assert_allclose(s.project(np.array([-1.0, 0.0, 0.0])), np.zeros(3))
    assert_allclose(s.project(np.array([0.0, 1.0, 0.0])), [0.5, 0.5, 0.0])


def test_soc_projection_beats_grid():
    s = SecondOrderCone(3)
    rng = np.random.default_rng(31)
    ts = np.linspace(0.0, 4.0, 60)
    angles = np.linspace(0.0, 2 * np.pi, 90, endpoint=False)
    rads = np.linspace(0.0, 1.0, 40)
    for _ in range(5):
        u = rng.standard_normal(3) * 2
        p = s.project(u)
        d_closed = np.linalg.norm(u - p)
        best = math.inf
        for t in ts:
            for frac in rads:
                r = frac * t
                for ang in angles:
                    cand = np.array([t, r * math.cos(ang), r * math.sin(ang)])
                    best = min(best, np.linalg.norm(u - cand))
        assert d_closed <= best + 1e-12
        assert np.linalg.norm(p[1:]) <= p[0] + 1e-12


@pytest.mark.parametrize("name", sorted(set_zoo()))
def test_projection_idempotent_and_firm(name):
    s = set_zoo()[name]
    rng = np.random.default_rng(9)
    for _ in range(50):
        u = rng.standard_normal(s.dim) * 3
        p = s.project(u)
        assert_allclose(s.project(p), p, atol=1e-12)
        v = rng.standard_normal(s.dim) * 3
        pv = s.project(v)
        lhs = float(np.dot(p - pv, p - pv))
        assert lhs <= float(np.dot(p - pv, u - v)) + 1e-12


@pytest.mark.parametrize("name", sorted(set_zoo()))
def test_dist_zero_for_members(name):
    s = set_zoo()[name]
    rng = np.random.default_rng(10)
    u = s.project(rng.standard_normal(s.dim))
    assert s.dist(u) <= 1e-14


def test_box_scalar_clamp_distance():
    s = Box(np.array([0.0]), np.array([1.0]))
    assert_allclose(s.dist(np.array([2.0])), 1.0)


def test_project_dimension_error():
    with pytest.raises(ValueError, match="length 3"):
        ZeroSet(3).project(np.ones(2))
