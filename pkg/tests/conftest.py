import numpy as np
import pytest

from penprox import problems


@pytest.fixture(scope="session")
def qp_small_scvx():
    """Strongly convex QP small enough for the enumeration oracle."""
    prob = problems.gen_qp(p2=8, n=8, strongly_convex=True, seed=11)
    prob.reference = problems.qp_reference_oracle(prob)
    return prob


@pytest.fixture(scope="session")
def qp_small_nonscvx():
    prob = problems.gen_qp(p2=8, n=8, strongly_convex=False, seed=23)
    prob.reference = problems.qp_reference_oracle(prob)
    return prob


@pytest.fixture(scope="session")
def qp_desk_scvx():
    """Desk-scale strongly convex QP with a long-run reference."""
    prob = problems.gen_qp(p2=60, n=60, strongly_convex=True, seed=7)
    prob.reference = problems.estimate_reference(prob, iters=30000)
    return prob


@pytest.fixture(scope="session")
def qp_desk_nonscvx():
    prob = problems.gen_qp(p2=60, n=60, strongly_convex=False, seed=7)
    prob.reference = problems.estimate_reference(prob, iters=30000)
    return prob


@pytest.fixture(scope="session")
def qp10_nonscvx():
    """n=10 sub-benchmark certified by active-set enumeration."""
    prob = problems.gen_qp(p2=10, n=10, strongly_convex=False, seed=3)
    prob.reference = problems.qp_reference_oracle(prob)
    return prob


def oracle_payload(ref):
    return {
        "F_star": ref.F_star, "err_bar": ref.err_bar,
        "lambda_star_norm": ref.lam_norm,
        "x_star": ref.x_star, "y_star": ref.y_star,
    }
