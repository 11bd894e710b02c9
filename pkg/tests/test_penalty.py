import numpy as np
import pytest
from numpy.testing import assert_allclose

from penprox.linop import DenseMap, IdentityMap, ScaledIdentityMap
from penprox.penalty import (PenaltySpec, certificate_bounds, grad_phi,
                             penalty_val_grad, phi_val, residual)
from penprox.prox import Box, NonnegativeOrthant, SecondOrderCone, ZeroSet
from conftest import oracle_payload


def random_spec(K, n, p1, p2, seed, lambda0=None):
    rng = np.random.default_rng(seed)
    return PenaltySpec(
        A=DenseMap(rng.standard_normal((n, p1))),
        B=DenseMap(rng.standard_normal((n, p2))),
        c=rng.standard_normal(n), K=K, lambda0=lambda0,
    )


def set_kinds(n):
    return {
        "zero": ZeroSet(n),
        "box": Box(-np.ones(n), np.ones(n)),
        "orthant": NonnegativeOrthant(n),
        "soc": SecondOrderCone(n),
    }


def test_residual_examples():
    n = 2
    spec = PenaltySpec(ScaledIdentityMap(n, -1.0), IdentityMap(n),
                       np.zeros(n), ZeroSet(n))
    v = np.array([1.0, 2.0])
    assert_allclose(residual(spec, v, v), [0.0, 0.0])

    spec2 = PenaltySpec(IdentityMap(n), IdentityMap(n), np.ones(n), ZeroSet(n))
    assert_allclose(residual(spec2, np.array([1.0, 0.0]), np.zeros(2)),
                    [0.0, -1.0])

    spec3 = PenaltySpec(DenseMap(np.zeros((1, 2))), DenseMap(np.zeros((1, 2))),
                        np.array([3.0]), ZeroSet(1))
    assert_allclose(residual(spec3, np.zeros(2), np.zeros(2)), [-3.0])


def test_penalty_zero_at_feasible_pair():
    spec = random_spec(ZeroSet(3), 3, 3, 3, seed=1)
    rng = np.random.default_rng(2)
    y = rng.standard_normal(3)
    # pick x solving A x = c - B y
    x = np.linalg.solve(spec.A.matrix, spec.c - spec.B.matrix @ y)
    val, gx, gy = penalty_val_grad(spec, 1.0, x, y)
    assert val <= 1e-24
    assert_allclose(gx, np.zeros(3), atol=1e-11)
    assert_allclose(gy, np.zeros(3), atol=1e-11)


def test_penalty_closed_form_for_zero_set():
    spec = random_spec(ZeroSet(3), 3, 2, 4, seed=3)
    rng = np.random.default_rng(4)
    x, y = rng.standard_normal(2), rng.standard_normal(4)
    w = residual(spec, x, y)
    val, gx, gy = penalty_val_grad(spec, 2.0, x, y)
    assert_allclose(val, 0.5 * w @ w)
    assert_allclose(gx, spec.A.matrix.T @ w)
    assert_allclose(gy, spec.B.matrix.T @ w)


def test_penalty_independent_of_rho_when_unshifted():
    spec = random_spec(Box(-np.ones(3), np.ones(3)), 3, 3, 3, seed=5)
    rng = np.random.default_rng(6)
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    outs = [penalty_val_grad(spec, rho, x, y) for rho in (0.5, 1.0, 7.0)]
    for val, gx, gy in outs[1:]:
        assert val == outs[0][0]
        assert np.array_equal(gx, outs[0][1])
        assert np.array_equal(gy, outs[0][2])


def test_penalty_rejects_nonpositive_rho():
    spec = random_spec(ZeroSet(2), 2, 2, 2, seed=7)
    with pytest.raises(ValueError, match="rho"):
        penalty_val_grad(spec, 0.0, np.zeros(2), np.zeros(2))


@pytest.mark.parametrize("kind", sorted(set_kinds(3)))
def test_gradients_match_finite_differences(kind):
    h = 1e-5
    for seed in range(20):
        K = set_kinds(3)[kind]
        spec = random_spec(K, 3, 2, 4, seed=100 + seed)
        rng = np.random.default_rng(200 + seed)
        x, y = rng.standard_normal(2), rng.standard_normal(4)
        _, gx, gy = penalty_val_grad(spec, 1.0, x, y)

        def val(xx, yy):
            return penalty_val_grad(spec, 1.0, xx, yy)[0]

        fd_x = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            fd_x[i] = (val(x + e, y) - val(x - e, y)) / (2 * h)
        fd_y = np.empty_like(y)
        for i in range(y.size):
            e = np.zeros_like(y)
            e[i] = h
            fd_y[i] = (val(x, y + e) - val(x, y - e)) / (2 * h)
        scale = 1.0 + np.linalg.norm(np.concatenate([gx, gy]))
        assert np.linalg.norm(fd_x - gx) <= 1e-6 * scale
        assert np.linalg.norm(fd_y - gy) <= 1e-6 * scale


def test_grad_phi_examples_and_lipschitz():
    K = Box(-np.ones(2), np.ones(2))
    u_in = np.array([0.2, -0.8])
    assert_allclose(grad_phi(K, u_in), [0.0, 0.0])

    Kz = ZeroSet(2)
    assert_allclose(grad_phi(Kz, np.array([2.0, -1.0])), [2.0, -1.0])

    rng = np.random.default_rng(11)
    for K in set_kinds(4).values():
        for _ in range(100):
            u, v = rng.standard_normal(4) * 3, rng.standard_normal(4) * 3
            assert (np.linalg.norm(grad_phi(K, u) - grad_phi(K, v))
                    <= np.linalg.norm(u - v) + 1e-14)


def test_descent_inequality_pair():
    rng = np.random.default_rng(13)
    for K in set_kinds(4).values():
        for _ in range(100):
            u, v = rng.standard_normal(4) * 2, rng.standard_normal(4) * 2
            pu, pv = phi_val(K, u), phi_val(K, v)
            gu, gv = grad_phi(K, u), grad_phi(K, v)
            lin = pu + float(gu @ (v - u))
            assert pv <= lin + 0.5 * float(np.dot(v - u, v - u)) + 1e-10
            assert lin + 0.5 * float(np.dot(gv - gu, gv - gu)) <= pv + 1e-10


def test_certificate_feasible_optimum():
    spec = random_spec(ZeroSet(2), 2, 2, 2, seed=15)
    rng = np.random.default_rng(16)
    y = rng.standard_normal(2)
    x = np.linalg.solve(spec.A.matrix, spec.c - spec.B.matrix @ y)
    out = certificate_bounds(spec, 2.0, F_of_z=5.0, F_star=5.0,
                             lambda_star_norm=1.5, x=x, y=y)
    assert_allclose(out.obj_lower, 0.0, atol=1e-11)
    assert_allclose(out.obj_upper, 0.0, atol=1e-10)
    assert_allclose(out.feas_upper, 2 * 1.5 / 2.0, atol=1e-10)
    assert out.radicand >= 0


def test_certificate_zero_multiplier_simplifies():
    spec = random_spec(ZeroSet(2), 2, 2, 2, seed=17)
    rng = np.random.default_rng(18)
    x, y = rng.standard_normal(2), rng.standard_normal(2)
    rho = 3.0
    d = spec.K.dist(residual(spec, x, y))
    S = 1.0 + rho * 0.5 * d * d  # F(z) - F_star = 1
    out = certificate_bounds(spec, rho, F_of_z=1.0, F_star=0.0,
                             lambda_star_norm=0.0, x=x, y=y)
    assert out.obj_lower == 0.0
    assert_allclose(out.feas_upper, np.sqrt(2 * S / rho))


def test_certificate_rejects_shifted_spec():
    spec = random_spec(ZeroSet(2), 2, 2, 2, seed=19,
                       lambda0=np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="unshifted"):
        certificate_bounds(spec, 1.0, 0.0, 0.0, 0.0, np.zeros(2), np.zeros(2))


def test_certificate_inequalities_on_oracle_qp(qp_small_scvx):
    prob = qp_small_scvx
    ref = prob.reference
    spec = prob.penalty_spec()
    rng = np.random.default_rng(21)
    a, b = prob.data["a"], prob.data["b"]
    for _ in range(200):
        x = rng.uniform(a, b)
        y = rng.standard_normal(prob.B.cols)
        rho = rng.uniform(0.1, 5.0)
        F = prob.F_value(x, y)
        out = certificate_bounds(spec, rho, F, ref.F_star, ref.lam_norm, x, y)
        d = spec.K.dist(residual(spec, x, y))
        assert out.obj_lower - 1e-8 <= F - ref.F_star <= out.obj_upper + 1e-8
        assert d <= out.feas_upper + 1e-8
        assert out.radicand >= -1e-10


def test_shifted_penalty_matches_manual_computation():
    lam0 = np.array([0.5, -1.0, 2.0])
    spec = random_spec(Box(-np.ones(3), np.ones(3)), 3, 2, 3, seed=23,
                       lambda0=lam0)
    rng = np.random.default_rng(24)
    x, y = rng.standard_normal(2), rng.standard_normal(3)
    rho = 1.7
    w = residual(spec, x, y) + lam0 / rho
    s = w - spec.K.project(w)
    val, gx, gy = penalty_val_grad(spec, rho, x, y)
    assert_allclose(val, 0.5 * s @ s)
    assert_allclose(gx, spec.A.matrix.T @ s)
    assert_allclose(gy, spec.B.matrix.T @ s)
