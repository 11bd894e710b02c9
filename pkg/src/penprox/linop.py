"""Linear operators with adjoints and spectral-norm estimation.

All maps act on dense 1-D float64 arrays. Every map knows its output
dimension ``rows`` and input dimension ``cols``, provides ``apply`` and
``adjoint``, and can estimate the squared operator norm via seeded power
iteration on the normal operator.
"""

import numpy as np

__all__ = [
    "LinearMap", "DenseMap", "IdentityMap", "ScaledIdentityMap",
    "NegatedMap", "RowSubsampleMap", "ForwardDiff2D", "ComposeMap",
    "compose", "load_dense_csv", "op_norm_sq",
]

# Safety factor applied to the power-iteration estimate so step-size
# conditions of the form rho0 <= c / ||B||^2 stay valid under estimation
# error.
_NORM_SAFETY = 1.0 + 1e-6
_POWER_SEED = 2718281828


def _as_vec(x, n, what):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(
            "%s: expected vector of length %d, got shape %s" % (what, n, x.shape)
        )
    return x


class LinearMap:
    """Base class: a linear map R^cols -> R^rows with an adjoint.

    Instances are immutable after construction and safe to share; ``apply``
    and ``adjoint`` are pure functions of their input.
    """

    rows = 0
    cols = 0

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, u):
        raise NotImplementedError

    def op_norm_sq(self, max_iters=10000, tol=1e-12):
        """Estimate of the largest squared singular value.

        Power iteration on ``M^T M`` from a seeded start vector, run until
        the Rayleigh quotient is stationary to ``tol`` (relative), then
        inflated by a factor ``1 + 1e-6`` so the result upper-bounds the
        true value under small estimation error.  A zero map returns 0.
        """
        cached = getattr(self, "_norm_sq", None)
        if cached is not None:
            return cached
        val = _power_norm_sq(self, max_iters=max_iters, tol=tol)
        self._norm_sq = val
        return val

    def op_norm(self):
        return float(np.sqrt(self.op_norm_sq()))

    def _check_in(self, x):
        return _as_vec(x, self.cols, type(self).__name__ + ".apply")

    def _check_out(self, u):
        return _as_vec(u, self.rows, type(self).__name__ + ".adjoint")


def _power_norm_sq(m, max_iters=10000, tol=1e-12):
    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(m.cols)
    nv = np.linalg.norm(v)
    if nv == 0.0 or m.cols == 0 or m.rows == 0:
        return 0.0
    v /= nv
    rayleigh = None
    for _ in range(max_iters):
        w = m.adjoint(m.apply(v))
        r = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        if rayleigh is not None and abs(r - rayleigh) <= tol * max(abs(r), 1e-300):
            return r * _NORM_SAFETY
        rayleigh = r
        v = w / nw
    raise RuntimeError(
        "power iteration did not converge in %d iterations; "
        "last Rayleigh quotient %.17g" % (max_iters, rayleigh)
    )


class DenseMap(LinearMap):
    """Dense matrix, stored row-major as float64."""

    def __init__(self, matrix):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError("DenseMap expects a 2-D array, got shape %s" % (a.shape,))
        self.matrix = a
        self.rows, self.cols = a.shape

    def apply(self, x):
        return self.matrix @ self._check_in(x)

    def adjoint(self, u):
        return self.matrix.T @ self._check_out(u)


class IdentityMap(LinearMap):
    def __init__(self, n):
        self.rows = self.cols = int(n)

    def apply(self, x):
        return self._check_in(x).copy()

    def adjoint(self, u):
        return self._check_out(u).copy()

    def op_norm_sq(self, **_):
        return 1.0 * _NORM_SAFETY


class ScaledIdentityMap(LinearMap):
    def __init__(self, n, scale):
        self.rows = self.cols = int(n)
        self.scale = float(scale)

    def apply(self, x):
        return self.scale * self._check_in(x)

    def adjoint(self, u):
        return self.scale * self._check_out(u)

    def op_norm_sq(self, **_):
        s2 = self.scale * self.scale
        return s2 * _NORM_SAFETY if s2 > 0 else 0.0


class NegatedMap(LinearMap):
    """-M for an inner map M."""

    def __init__(self, inner):
        self.inner = inner
        self.rows, self.cols = inner.rows, inner.cols

    def apply(self, x):
        return -self.inner.apply(x)

    def adjoint(self, u):
        return -self.inner.adjoint(u)

    def op_norm_sq(self, **kw):
        return self.inner.op_norm_sq(**kw)


class RowSubsampleMap(LinearMap):
    """Selected output rows of an inner map.

    ``adjoint`` scatters back into the inner output space before applying
    the inner adjoint.
    """

    def __init__(self, inner, row_indices):
        idx = np.asarray(row_indices, dtype=int)
        if idx.ndim != 1:
            raise ValueError("row_indices must be 1-D")
        if idx.size and (idx.min() < 0 or idx.max() >= inner.rows):
            raise ValueError("row index out of range for inner map")
        self.inner = inner
        self.row_indices = idx
        self.rows = idx.size
        self.cols = inner.cols

    def apply(self, x):
        return self.inner.apply(self._check_in(x))[self.row_indices]

    def adjoint(self, u):
        u = self._check_out(u)
        full = np.zeros(self.inner.rows)
        full[self.row_indices] = u
        return self.inner.adjoint(full)


class ForwardDiff2D(LinearMap):
    """Discrete gradient of an image by forward differences.

    Input is an h*w image flattened row-major; output stacks the vertical
    differences then the horizontal ones (2*h*w entries).  Replicate
    boundary: differences across the last row/column are zero, the standard
    discrete total-variation choice.  Known bound: op_norm_sq <= 8.
    """

    def __init__(self, height, width):
        self.height, self.width = int(height), int(width)
        self.cols = self.height * self.width
        self.rows = 2 * self.cols

    def apply(self, x):
        img = self._check_in(x).reshape(self.height, self.width)
        gx = np.zeros_like(img)
        gy = np.zeros_like(img)
        gx[:-1, :] = img[1:, :] - img[:-1, :]
        gy[:, :-1] = img[:, 1:] - img[:, :-1]
        return np.concatenate([gx.ravel(), gy.ravel()])

    def adjoint(self, u):
        u = self._check_out(u)
        n = self.cols
        gx = u[:n].reshape(self.height, self.width)
        gy = u[n:].reshape(self.height, self.width)
        out = np.zeros((self.height, self.width))
        # adjoint of forward difference = backward difference with sign flip
        out[:-1, :] -= gx[:-1, :]
        out[1:, :] += gx[:-1, :]
        out[:, :-1] -= gy[:, :-1]
        out[:, 1:] += gy[:, :-1]
        return out.ravel()


class ComposeMap(LinearMap):
    """outer(inner(x))."""

    def __init__(self, outer, inner):
        if outer.cols != inner.rows:
            raise ValueError(
                "cannot compose: outer expects %d inputs, inner produces %d"
                % (outer.cols, inner.rows)
            )
        self.outer, self.inner = outer, inner
        self.rows, self.cols = outer.rows, inner.cols

    def apply(self, x):
        return self.outer.apply(self.inner.apply(self._check_in(x)))

    def adjoint(self, u):
        return self.inner.adjoint(self.outer.adjoint(self._check_out(u)))


def compose(outer, inner):
    return ComposeMap(outer, inner)


def op_norm_sq(m, **kw):
    return m.op_norm_sq(**kw)


def load_dense_csv(path):
    """Load a DenseMap from a headerless comma-separated file, row-major."""
    a = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    return DenseMap(a)
