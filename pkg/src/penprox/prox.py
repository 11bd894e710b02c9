"""Proximal operators and Euclidean projections.

``ProxFunction`` instances expose ``value``, ``prox`` and ``conj_prox``;
``ConvexSet`` instances expose ``project``, ``contains`` and ``dist``.
Every prox is closed form; the quadratic kind solves a shifted SPD system
with a small cached Cholesky factorization.

Conventions
-----------
``prox(gamma, x)`` returns ``argmin_u { f(u) + ||u - x||^2 / (2 gamma) }``
for ``gamma > 0``.  ``conj_prox(gamma, x)`` returns the prox of
``gamma * f^*`` at ``x``, computed through Moreau's decomposition as
``x - gamma * prox(1/gamma, x/gamma)`` without ever forming ``f^*``.
"""

import math
import threading
from collections import OrderedDict

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "ProxFunction", "Zero", "Linear", "SquaredL2", "L1", "Elastic",
    "L2Norm", "BoxIndicator", "SetIndicator", "Quadratic", "Translated",
    "translate", "ConvexSet", "ZeroSet", "Box", "NonnegativeOrthant",
    "SecondOrderCone",
]

# Slack admitted when evaluating indicator functions at points produced by
# floating-point projections.
_FEAS_TOL = 1e-9


def _check_gamma(gamma):
    if not gamma > 0:
        raise ValueError("prox parameter must be positive, got %r" % (gamma,))
    return float(gamma)


class ProxFunction:
    """A proper closed convex function with an exact prox map.

    Attributes
    ----------
    mu : float
        Strong-convexity modulus (0 for merely convex kinds).
    lip : float or None
        Lipschitz constant of the function value, when finite and known.
    """

    mu = 0.0
    lip = None

    def value(self, x):
        raise NotImplementedError

    def prox(self, gamma, x):
        raise NotImplementedError

    def conj_prox(self, gamma, x):
        """Prox of ``gamma * f^*`` at x, by Moreau's decomposition."""
        gamma = _check_gamma(gamma)
        x = np.asarray(x, dtype=float)
        return x - gamma * self.prox(1.0 / gamma, x / gamma)


class Zero(ProxFunction):
    def value(self, x):
        return 0.0

    def prox(self, gamma, x):
        _check_gamma(gamma)
        return np.asarray(x, dtype=float).copy()


class Linear(ProxFunction):
    """<q, x>."""

    def __init__(self, q):
        self.q = np.asarray(q, dtype=float)

    def value(self, x):
        return float(self.q @ x)

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        return np.asarray(x, dtype=float) - gamma * self.q


class SquaredL2(ProxFunction):
    """(kappa1/2) * ||x||^2."""

    def __init__(self, kappa1):
        if kappa1 < 0:
            raise ValueError("kappa1 must be nonnegative")
        self.kappa1 = float(kappa1)
        self.mu = self.kappa1

    def value(self, x):
        return 0.5 * self.kappa1 * float(np.dot(x, x))

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        return np.asarray(x, dtype=float) / (1.0 + gamma * self.kappa1)


def _soft(x, t):
    # |x| == t maps to exactly 0, the unique minimizer there
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class L1(ProxFunction):
    """kappa2 * ||x||_1; Lipschitz with constant kappa2*sqrt(dim)."""

    def __init__(self, kappa2, dim=None):
        if kappa2 < 0:
            raise ValueError("kappa2 must be nonnegative")
        self.kappa2 = float(kappa2)
        if dim is not None:
            self.lip = self.kappa2 * math.sqrt(dim)

    def value(self, x):
        return self.kappa2 * float(np.abs(x).sum())

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        return _soft(np.asarray(x, dtype=float), gamma * self.kappa2)


class Elastic(ProxFunction):
    """(kappa1/2)*||x||^2 + kappa2*||x||_1, strongly convex with modulus kappa1."""

    def __init__(self, kappa1, kappa2):
        if kappa1 < 0 or kappa2 < 0:
            raise ValueError("elastic weights must be nonnegative")
        self.kappa1 = float(kappa1)
        self.kappa2 = float(kappa2)
        self.mu = self.kappa1

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.kappa1 * float(x @ x) + self.kappa2 * float(np.abs(x).sum())

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        return _soft(np.asarray(x, dtype=float), gamma * self.kappa2) / (
            1.0 + gamma * self.kappa1
        )


class L2Norm(ProxFunction):
    """||x||_2 (unsqueared); prox is the block shrinkage, 1-Lipschitz."""

    lip = 1.0

    def value(self, x):
        return float(np.linalg.norm(x))

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        x = np.asarray(x, dtype=float)
        nx = np.linalg.norm(x)
        if nx <= gamma:
            return np.zeros_like(x)
        return (1.0 - gamma / nx) * x


class BoxIndicator(ProxFunction):
    """Indicator of [lo, hi] componentwise; prox is the clamp (gamma-free)."""

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi componentwise")
        self.lo, self.hi = lo, hi

    def value(self, x):
        x = np.asarray(x, dtype=float)
        tol = _FEAS_TOL * (1.0 + max(np.abs(self.lo).max(), np.abs(self.hi).max()))
        if np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol):
            return 0.0
        return math.inf

    def prox(self, gamma, x):
        _check_gamma(gamma)
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)


class SetIndicator(ProxFunction):
    """Indicator of a ConvexSet; prox is the projection (gamma-free)."""

    def __init__(self, cset):
        self.set = cset

    def value(self, x):
        return 0.0 if self.set.contains(x, tol=_FEAS_TOL) else math.inf

    def prox(self, gamma, x):
        _check_gamma(gamma)
        return self.set.project(x)


class Quadratic(ProxFunction):
    """(1/2) y'Qy + q'y with symmetric positive semidefinite Q.

    The prox solves ``(I + gamma*Q) u = x - gamma*q``.  Factorizations are
    cached per distinct gamma; the cache is bounded because homotopy solvers
    change the coefficient every iteration.
    """

    _CACHE_SIZE = 8

    def __init__(self, Q, q, mu=None):
        Q = np.asarray(Q, dtype=float)
        q = np.asarray(q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or q.shape != (Q.shape[0],):
            raise ValueError("Q must be square and q of matching length")
        self.Q = 0.5 * (Q + Q.T)
        self.q = q
        if mu is None:
            mu = max(float(np.linalg.eigvalsh(self.Q)[0]), 0.0)
        self.mu = float(mu)
        self._cache = OrderedDict()
        self._lock = threading.Lock()

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ (self.Q @ x)) + float(self.q @ x)

    def grad(self, x):
        return self.Q @ np.asarray(x, dtype=float) + self.q

    def _factor(self, gamma):
        with self._lock:
            fac = self._cache.get(gamma)
            if fac is None:
                n = self.Q.shape[0]
                fac = cho_factor(np.eye(n) + gamma * self.Q)
                self._cache[gamma] = fac
                if len(self._cache) > self._CACHE_SIZE:
                    self._cache.popitem(last=False)
            else:
                self._cache.move_to_end(gamma)
            return fac

    def prox(self, gamma, x):
        gamma = _check_gamma(gamma)
        rhs = np.asarray(x, dtype=float) - gamma * self.q
        return cho_solve(self._factor(gamma), rhs)


class Translated(ProxFunction):
    """f(x - offset) for an inner ProxFunction f; moduli are preserved."""

    def __init__(self, inner, offset):
        self.inner = inner
        self.offset = np.asarray(offset, dtype=float)
        self.mu = inner.mu
        self.lip = inner.lip

    def value(self, x):
        return self.inner.value(np.asarray(x, dtype=float) - self.offset)

    def prox(self, gamma, x):
        x = np.asarray(x, dtype=float)
        return self.offset + self.inner.prox(gamma, x - self.offset)


def translate(fun, offset):
    return Translated(fun, offset)


# ---------------------------------------------------------------------------
# Convex sets


class ConvexSet:
    """A nonempty closed convex set with a Euclidean projection."""

    dim = 0

    def project(self, u):
        raise NotImplementedError

    def contains(self, u, tol=1e-12):
        return self.dist(u) <= tol * (1.0 + float(np.linalg.norm(u)))

    def dist(self, u):
        u = np.asarray(u, dtype=float)
        return float(np.linalg.norm(u - self.project(u)))

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        if u.ndim != 1 or u.shape[0] != self.dim:
            raise ValueError(
                "%s: expected vector of length %d, got shape %s"
                % (type(self).__name__, self.dim, u.shape)
            )
        return u


class ZeroSet(ConvexSet):
    """The singleton {0}."""

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, u):
        return np.zeros_like(self._check(u))


class Box(ConvexSet):
    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi componentwise")
        self.lo, self.hi = lo, hi
        self.dim = lo.shape[0]

    def project(self, u):
        return np.clip(self._check(u), self.lo, self.hi)


class NonnegativeOrthant(ConvexSet):
    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, u):
        return np.maximum(self._check(u), 0.0)


class SecondOrderCone(ConvexSet):
    """{(t, z) in R x R^(dim-1) : ||z|| <= t}."""

    def __init__(self, dim):
        if dim < 2:
            raise ValueError("second-order cone needs dimension >= 2")
        self.dim = int(dim)

    def project(self, u):
        u = self._check(u)
        t, z = u[0], u[1:]
        nz = float(np.linalg.norm(z))
        if nz <= t:
            return u.copy()
        if nz <= -t:
            return np.zeros_like(u)
        alpha = 0.5 * (t + nz)
        out = np.empty_like(u)
        out[0] = alpha
        out[1:] = alpha * z / nz
        return out
