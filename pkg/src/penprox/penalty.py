"""Quadratic penalty machinery for constraints A x + B y - c in K.

The penalty building block is half the squared Euclidean distance to K,

    dist_half_sq(u) = 0.5 * dist_K(u)^2,    grad = u - proj_K(u),

evaluated on the (optionally shifted) constraint image.  The shifted form
adds ``lambda0 / rho`` inside the distance, which reduces to the plain
penalty at ``lambda0 = 0`` and makes the multiplier update used by
restarting an exact augmented-Lagrangian step.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "PenaltySpec", "residual", "penalty_val_grad", "grad_phi", "phi_val",
    "CertificateBounds", "certificate_bounds",
]


@dataclass
class PenaltySpec:
    """Constraint data (A, B, c, K) plus the dual shift lambda0."""

    A: object
    B: object
    c: np.ndarray
    K: object
    lambda0: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        if self.A.rows != n or self.B.rows != n or self.K.dim != n:
            raise ValueError(
                "inconsistent constraint dimensions: A rows %d, B rows %d, "
                "len(c) %d, K dim %d" % (self.A.rows, self.B.rows, n, self.K.dim)
            )
        if self.lambda0 is None:
            self.lambda0 = np.zeros(n)
        else:
            self.lambda0 = np.asarray(self.lambda0, dtype=float)
            if self.lambda0.shape != (n,):
                raise ValueError("lambda0 must live in the constraint space")


def residual(spec, x, y):
    """A x + B y - c."""
    return spec.A.apply(x) + spec.B.apply(y) - spec.c


def grad_phi(K, u):
    """Gradient of 0.5*dist_K(.)^2 at u: the projection residual, 1-Lipschitz."""
    u = np.asarray(u, dtype=float)
    return u - K.project(u)


def phi_val(K, u):
    s = grad_phi(K, u)
    return 0.5 * float(s @ s)


def penalty_val_grad(spec, rho, x, y):
    """Value and both partial gradients of the penalty term.

    With ``w = A x + B y - c + lambda0/rho`` and ``s = w - proj_K(w)``:
    value ``= 0.5*||s||^2``, gradients ``A's`` and ``B's``.  The scaling by
    the penalty weight is left to the caller; at ``lambda0 = 0`` the output
    does not depend on rho at all.
    """
    if not rho > 0:
        raise ValueError("penalty parameter rho must be positive, got %r" % (rho,))
    w = residual(spec, x, y)
    if np.any(spec.lambda0):
        w = w + spec.lambda0 / rho
    s = w - spec.K.project(w)
    val = 0.5 * float(s @ s)
    return val, spec.A.adjoint(s), spec.B.adjoint(s)


class CertificateBounds(NamedTuple):
    obj_lower: float
    obj_upper: float
    feas_upper: float
    radicand: float


def certificate_bounds(spec, rho, F_of_z, F_star, lambda_star_norm, x, y):
    """Two-sided objective bracket and feasibility bound at z = (x, y).

    With ``S = F(z) + rho*penalty - F_star`` and ``d = dist_K(Ax+By-c)``:

        -||lam*|| * d  <=  F(z) - F_star  <=  S - (rho/2) d^2,
        d  <=  ( ||lam*|| + sqrt(||lam*||^2 + 2 rho S) ) / rho.

    Requires an unshifted spec (lambda0 = 0).  A radicand below -1e-10
    signals inconsistent (F_star, lam*) inputs and raises.
    """
    if np.any(spec.lambda0):
        raise ValueError("certificates are stated for the unshifted penalty")
    if not rho > 0:
        raise ValueError("rho must be positive")
    lam = float(lambda_star_norm)
    if lam < 0:
        raise ValueError("lambda_star_norm must be nonnegative")
    d = spec.K.dist(residual(spec, x, y))
    S = F_of_z + rho * 0.5 * d * d - F_star
    radicand = lam * lam + 2.0 * rho * S
    if radicand < -1e-10:
        raise ValueError(
            "negative certificate radicand %.3e: F_star or multiplier norm "
            "inconsistent with the problem" % radicand
        )
    feas = (lam + np.sqrt(max(radicand, 0.0))) / rho
    return CertificateBounds(-lam * d, S - 0.5 * rho * d * d, feas, radicand)
