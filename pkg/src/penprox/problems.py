"""Seeded benchmark generators and reference-solution oracles.

Instances are generated from a single 64-bit seed through named
``numpy.random.SeedSequence`` child streams (PCG64), one stream per array,
so identical seeds reproduce identical data byte for byte on any platform.
Desk-scale default sizes keep every benchmark under a minute.
"""

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .linop import (DenseMap, ForwardDiff2D, IdentityMap, NegatedMap,
                    RowSubsampleMap, ScaledIdentityMap)
from .penalty import PenaltySpec, grad_phi, residual
from .prox import (Box, BoxIndicator, Elastic, L1, L2Norm, Linear,
                   NonnegativeOrthant, Quadratic, SecondOrderCone,
                   SetIndicator, Translated, ZeroSet, Zero)

__all__ = [
    "SmoothTerm", "Reference", "ProblemInstance", "CompositeForm",
    "gen_qp", "gen_elastic_sqrt", "gen_tv_recon", "gen_sqrt_composite",
    "make_conic", "qp_reference_oracle", "fstar_crosscheck_oracle",
    "crosscheck_composite", "estimate_reference", "kkt_residuals",
    "from_spec", "materialize",
]


@dataclass
class SmoothTerm:
    value: callable
    grad: callable
    L: float
    mu: float = 0.0


@dataclass
class Reference:
    F_star: float
    x_star: np.ndarray = None
    y_star: np.ndarray = None
    lam_star: np.ndarray = None
    err_bar: float = 0.0
    verified: bool = False
    non_unique: bool = False
    source: str = ""

    @property
    def lam_norm(self):
        return 0.0 if self.lam_star is None else float(np.linalg.norm(self.lam_star))


@dataclass
class CompositeForm:
    """Unconstrained composite view min_y f(op(y)) + g(y) + h(y)."""

    f_outer: object
    g_inner: object
    y_dim: int
    op: object = None
    h: SmoothTerm = None
    mu_g: float = None
    norm_op_sq_exact: float = None

    def norm_op_sq(self):
        if self.op is None:
            return 1.0
        if self.norm_op_sq_exact is not None:
            return self.norm_op_sq_exact
        return self.op.op_norm_sq()

    def modulus(self):
        return self.mu_g if self.mu_g is not None else getattr(self.g_inner, "mu", 0.0)

    def start(self):
        return np.zeros(self.y_dim)

    def objective(self, y):
        """Finite objective parts; indicator terms are tracked as feasibility."""
        u = y if self.op is None else self.op.apply(y)
        val = self.g_inner.value(y)
        if self.h is not None:
            val += self.h.value(y)
        fv = self.f_outer.value(u)
        if math.isfinite(fv):
            val += fv
        return float(val)


@dataclass
class ProblemInstance:
    f: object
    g: object
    A: object
    B: object
    c: np.ndarray
    K: object
    h: SmoothTerm = None
    mu_g: float = None
    exact_x_solver: callable = None
    x0: np.ndarray = None
    y0: np.ndarray = None
    reference: Reference = None
    composite: CompositeForm = None
    seed: int = None
    spec_dict: dict = None
    normB_sq: float = None
    normA_sq: float = None
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self._spec = PenaltySpec(self.A, self.B, self.c, self.K)

    def penalty_spec(self):
        return self._spec

    def norm_b_sq(self):
        if self.normB_sq is None:
            self.normB_sq = self.B.op_norm_sq()
        return self.normB_sq

    def norm_a_sq(self):
        if self.normA_sq is None:
            self.normA_sq = self.A.op_norm_sq()
        return self.normA_sq

    def start_x(self):
        return (np.zeros(self.A.cols) if self.x0 is None else self.x0).copy()

    def start_y(self):
        return (np.zeros(self.B.cols) if self.y0 is None else self.y0).copy()

    def F_value(self, x, y):
        val = self.f.value(x) + self.g.value(y)
        if self.h is not None:
            val += self.h.value(y)
        return float(val)

    def to_spec(self):
        if self.spec_dict is None:
            raise ValueError("instance has no regeneration recipe")
        return dict(self.spec_dict)


def _identity_block_solver(fun, sign):
    """Exact x-step when A = sign * identity and K = {0}.

    Solves min_x f(x) + (rho/2)||sign*x + t||^2 + (gamma/2)||x - xh||^2
    where t = B yh - c + shift; both quadratic anchors combine into one.
    """

    def solve(xh, yh, rho, gamma, shift, t_of):
        t = t_of(yh)
        if shift is not None:
            t = t + shift
        anchor = -sign * t
        if gamma > 0:
            total = rho + gamma
            return fun.prox(1.0 / total, (rho * anchor + gamma * xh) / total)
        return fun.prox(1.0 / rho, anchor)

    return solve


def _streams(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def gen_qp(p2, n, strongly_convex, seed):
    """Box-constrained dense quadratic program, penalty-template form.

    Data: Q = R R' + mu_g*I with R (p2 x m) standard normal scaled by
    1/sqrt(m), m = floor(p2/2)+1; B (n x p2) scaled by 1/sqrt(n); bounds
    a = B y_nat - u, b = B y_nat + u with u uniform(0,1)^n, feasible by
    construction.  Template: f = box indicator on x, x - B y = 0, K = {0}.
    """
    if p2 < 1 or n < 1:
        raise ValueError("p2 and n must be >= 1")
    rng_r, rng_q, rng_b, rng_y, rng_u = _streams(seed, 5)
    m = p2 // 2 + 1
    mu_g = 1.0 if strongly_convex else 0.0
    R = rng_r.standard_normal((p2, m)) / math.sqrt(m)
    Q = R @ R.T + mu_g * np.eye(p2)
    q = rng_q.standard_normal(p2)
    B = rng_b.standard_normal((n, p2)) / math.sqrt(n)
    y_nat = rng_y.standard_normal(p2)
    u = rng_u.uniform(size=n)
    By = B @ y_nat
    a, b = By - u, By + u

    f = BoxIndicator(a, b)
    g = Quadratic(Q, q, mu=mu_g)
    Bmap = DenseMap(B)
    inner = _identity_block_solver(f, +1.0)

    def x_solver(xh, yh, rho, gamma, shift):
        return inner(xh, yh, rho, gamma, shift, lambda yv: -(B @ yv))

    prob = ProblemInstance(
        f=f, g=g, A=IdentityMap(n), B=NegatedMap(Bmap), c=np.zeros(n),
        K=ZeroSet(n), mu_g=(mu_g if strongly_convex else None),
        exact_x_solver=x_solver,
        x0=np.clip(np.zeros(n), a, b), y0=np.zeros(p2),
        composite=CompositeForm(f_outer=f, g_inner=g, y_dim=p2, op=Bmap,
                                mu_g=(mu_g if strongly_convex else None)),
        seed=seed,
        spec_dict={"kind": "qp", "seed": seed,
                   "params": {"p2": p2, "n": n,
                              "strongly_convex": bool(strongly_convex)}},
        data={"Q": Q, "q": q, "B": B, "a": a, "b": b, "y_nat": y_nat},
    )
    return prob


def gen_elastic_sqrt(p2, n, s, kappa1=0.1, kappa2=0.01, noise_sigma=1e-3,
                     seed=0):
    """Square-root loss with elastic-net regularizer.

    min ||B y - c||_2 + (kappa1/2)||y||^2 + kappa2 ||y||_1, written with an
    auxiliary block x = B y - c, i.e. -x + B y = c, K = {0}.  kappa1 = 0
    gives the square-root lasso.
    """
    if not 0 <= s <= p2:
        raise ValueError("sparsity s must lie in [0, p2]")
    if kappa1 < 0 or kappa2 < 0:
        raise ValueError("regularization weights must be nonnegative")
    rng_b, rng_sup, rng_val, rng_noise = _streams(seed, 4)
    B = rng_b.standard_normal((n, p2)) / math.sqrt(n)
    y_nat = np.zeros(p2)
    support = rng_sup.choice(p2, size=s, replace=False)
    y_nat[support] = rng_val.standard_normal(s)
    c = B @ y_nat
    if noise_sigma > 0:
        c = c + noise_sigma * rng_noise.standard_normal(n)

    f = L2Norm()
    g = Elastic(kappa1, kappa2)
    Bmap = DenseMap(B)
    inner = _identity_block_solver(f, -1.0)

    def x_solver(xh, yh, rho, gamma, shift):
        return inner(xh, yh, rho, gamma, shift, lambda yv: B @ yv - c)

    prob = ProblemInstance(
        f=f, g=g, A=ScaledIdentityMap(n, -1.0), B=Bmap, c=c, K=ZeroSet(n),
        mu_g=(kappa1 if kappa1 > 0 else None), exact_x_solver=x_solver,
        x0=np.zeros(n), y0=np.zeros(p2),
        composite=CompositeForm(f_outer=Translated(L2Norm(), c), g_inner=g,
                                y_dim=p2, op=Bmap,
                                mu_g=(kappa1 if kappa1 > 0 else None)),
        seed=seed,
        spec_dict={"kind": "elastic_sqrt", "seed": seed,
                   "params": {"p2": p2, "n": n, "s": s, "kappa1": kappa1,
                              "kappa2": kappa2, "noise_sigma": noise_sigma}},
        data={"B": B, "c": c, "y_nat": y_nat},
    )
    return prob


def _blocky_image(height, width, rng, n_blocks=5):
    img = np.zeros((height, width))
    for _ in range(n_blocks):
        i0, i1 = sorted(rng.integers(0, height, size=2).tolist())
        j0, j1 = sorted(rng.integers(0, width, size=2).tolist())
        img[i0:i1 + 1, j0:j1 + 1] += rng.uniform(-1.0, 1.0)
    peak = np.abs(img).max()
    return img / peak if peak > 0 else img


def gen_tv_recon(height, width, sample_rate, kappa=4.0912e-4,
                 noise_sigma=0.0, seed=0):
    """Image reconstruction from row-subsampled Gaussian measurements.

    min (1/2)||M y - b||^2 + kappa * TV(y), rewritten with x = D y where D
    is the forward-difference stencil: f = kappa||.||_1 on x, g = 0, h the
    data-fit term, constraint x - D y = 0.
    """
    if not 0 < sample_rate <= 1:
        raise ValueError("sample_rate must lie in (0, 1]")
    rng_g, rng_rows, rng_img, rng_noise = _streams(seed, 4)
    p = height * width
    n_meas = max(1, int(round(sample_rate * p)))
    G = rng_g.standard_normal((p, p)) / math.sqrt(p)
    rows = np.sort(rng_rows.choice(p, size=n_meas, replace=False))
    M = RowSubsampleMap(DenseMap(G), rows)
    img = _blocky_image(height, width, rng_img)
    b = M.apply(img.ravel())
    if noise_sigma > 0:
        b = b + noise_sigma * rng_noise.standard_normal(n_meas)

    L_h = M.op_norm_sq()

    def h_val(y):
        r = M.apply(y) - b
        return 0.5 * float(r @ r)

    def h_grad(y):
        return M.adjoint(M.apply(y) - b)

    h = SmoothTerm(value=h_val, grad=h_grad, L=L_h)
    D = ForwardDiff2D(height, width)
    f = L1(kappa, dim=2 * p)
    inner = _identity_block_solver(f, +1.0)

    def x_solver(xh, yh, rho, gamma, shift):
        return inner(xh, yh, rho, gamma, shift, lambda yv: -D.apply(yv))

    prob = ProblemInstance(
        f=f, g=Zero(), A=IdentityMap(2 * p), B=NegatedMap(D), c=np.zeros(2 * p),
        K=ZeroSet(2 * p), h=h, exact_x_solver=x_solver,
        x0=np.zeros(2 * p), y0=np.zeros(p),
        composite=CompositeForm(f_outer=f, g_inner=Zero(), y_dim=p, op=D, h=h),
        seed=seed,
        spec_dict={"kind": "tv_recon", "seed": seed,
                   "params": {"height": height, "width": width,
                              "sample_rate": sample_rate, "kappa": kappa,
                              "noise_sigma": noise_sigma}},
        data={"M": M, "b": b, "image": img, "D": D, "kappa": kappa},
    )
    return prob


def gen_sqrt_composite(dim, kappa1=0.1, kappa2=0.01, seed=0):
    """Composite desk instance min_y ||y - c||_2 + elastic(y) (no operator)."""
    (rng,) = _streams(seed, 1)
    c = rng.standard_normal(dim)
    comp = CompositeForm(
        f_outer=Translated(L2Norm(), c), g_inner=Elastic(kappa1, kappa2),
        y_dim=dim, mu_g=kappa1,
    )
    comp.spec_dict = {"kind": "sqrt_composite", "seed": seed,
                      "params": {"dim": dim, "kappa1": kappa1,
                                 "kappa2": kappa2}}
    return comp


def make_conic(q, Bmap, c, cone):
    """min <q,y> s.t. B(y) + x = c, x in cone; template with A = I, K = {0}."""
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    f = SetIndicator(cone)

    def x_solver(xh, yh, rho, gamma, shift):
        target = c - Bmap.apply(yh)
        if shift is not None:
            target = target - shift
        if gamma > 0:
            total = rho + gamma
            return cone.project((rho * target + gamma * xh) / total)
        return cone.project(target)

    return ProblemInstance(
        f=f, g=Linear(q), A=IdentityMap(c.shape[0]), B=Bmap, c=c,
        K=ZeroSet(c.shape[0]), exact_x_solver=x_solver,
        x0=cone.project(np.zeros(c.shape[0])), y0=np.zeros(Bmap.cols),
    )


# ---------------------------------------------------------------------------
# Reference oracles


def qp_reference_oracle(problem, tol=1e-9):
    """Exact QP reference by enumeration of bound-activity patterns.

    Each of the n constraints is fixed at its lower bound, its upper bound,
    or left inactive (3^n patterns); the equality-constrained stationarity
    system is solved for each, candidates are screened by primal feasibility
    and multiplier signs, and the best feasible candidate wins.  Intended
    for n <= 12.
    """
    d = problem.data
    if not {"Q", "q", "B", "a", "b"} <= set(d):
        raise ValueError("active-set oracle needs a generated QP instance")
    Q, q, B, a, b = d["Q"], d["q"], d["B"], d["a"], d["b"]
    n, p2 = B.shape
    if n > 12:
        raise ValueError("enumeration oracle limited to n <= 12, got n=%d" % n)

    scale = 1.0 + max(np.abs(a).max(), np.abs(b).max())
    best = None
    candidates = []
    for pattern in product((0, 1, 2), repeat=n):
        act = [i for i, p in enumerate(pattern) if p != 0]
        na = len(act)
        if na > p2:
            continue
        kkt = np.zeros((p2 + na, p2 + na))
        kkt[:p2, :p2] = Q
        rhs = np.empty(p2 + na)
        rhs[:p2] = -q
        for r, i in enumerate(act):
            kkt[:p2, p2 + r] = B[i]
            kkt[p2 + r, :p2] = B[i]
            rhs[p2 + r] = b[i] if pattern[i] == 2 else a[i]
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(sol)):
            continue
        y = sol[:p2]
        mu = sol[p2:]
        By = B @ y
        ok = True
        for i, p in enumerate(pattern):
            if p == 0 and not (a[i] - tol * scale <= By[i] <= b[i] + tol * scale):
                ok = False
                break
        if ok:
            for r, i in enumerate(act):
                if pattern[i] == 2 and mu[r] < -tol:
                    ok = False
                    break
                if pattern[i] == 1 and mu[r] > tol:
                    ok = False
                    break
        if not ok:
            continue
        lam = np.zeros(n)
        lam[act] = mu
        val = 0.5 * float(y @ (Q @ y)) + float(q @ y)
        candidates.append(val)
        if best is None or val < best[0]:
            best = (val, y, lam)

    if best is None:
        raise RuntimeError("no KKT-consistent activity pattern found")
    F_star, y_star, lam_star = best
    stat = np.abs(Q @ y_star + q + B.T @ lam_star).max()
    if stat > 1e-10 * (1.0 + np.abs(q).max()):
        raise RuntimeError("oracle stationarity residual %.3e too large" % stat)
    others = [v for v in candidates if abs(v - F_star) <= 1e-12 * (1 + abs(F_star))]
    ref = Reference(
        F_star=F_star, x_star=B @ y_star, y_star=y_star, lam_star=lam_star,
        non_unique=len(others) > 1, source="active-set-enumeration",
    )
    ref.verified = max(kkt_residuals(problem, ref).values()) <= 1e-8
    return ref


def kkt_residuals(problem, ref):
    """Prox fixed-point residuals of the template optimality conditions."""
    xs, ys, lam = ref.x_star, ref.y_star, ref.lam_star
    rx = np.linalg.norm(xs - problem.f.prox(1.0, xs + problem.A.adjoint(lam)))
    gy = problem.h.grad(ys) if problem.h is not None else 0.0
    ry = np.linalg.norm(ys - problem.g.prox(1.0, ys + problem.B.adjoint(lam) - gy))
    rk = problem.K.dist(residual(problem.penalty_spec(), xs, ys))
    scale = 1.0 + float(np.linalg.norm(lam))
    return {"x": float(rx) / scale, "y": float(ry) / scale, "K": float(rk)}


_NAMED_CFGS = {
    "papa": dict(algorithm="papa"),
    "papa-rs": dict(algorithm="papa", restart_period=50),
    "scvx": dict(algorithm="scvx"),
    "scvx-rs": dict(algorithm="scvx", restart_period=100),
}


def _run_keep_state(problem, name, iters):
    """Drive a named method without tracing; returns the final state."""
    from . import papa

    cfg = papa.SolverConfig(max_iters=iters, **_NAMED_CFGS[name])
    iterate = papa.scvx_iterate if cfg.algorithm == "scvx" else papa.papa_iterate
    st = papa.init_state(problem, cfg)
    for k in range(iters):
        if cfg.restart_period and k > 0 and k % cfg.restart_period == 0:
            st = papa.restart(st, cfg, problem)
        st = iterate(problem, st, cfg)
    return st


def fstar_crosscheck_oracle(problem, budget, methods=("scvx-rs", "papa-rs")):
    """Optimal-value estimate from two structurally different runs.

    Returns a Reference whose ``err_bar`` is the inter-method gap (relative
    to max(1, |F|)).  A gap above 1e-6 marks the estimate low-confidence;
    dependent checks should then fall back to slope-only assertions.
    """
    if budget < 1:
        raise ValueError("crosscheck budget must be >= 1")
    finals = [problem.F_value(st.x, st.y)
              for st in (_run_keep_state(problem, nm, budget) for nm in methods)]
    f_best = min(finals)
    gap = abs(finals[0] - finals[1]) / max(1.0, abs(f_best))
    ref = Reference(F_star=float(f_best), err_bar=float(gap),
                    source="crosscheck:" + "+".join(methods))
    ref.low_confidence = gap > 1e-6
    return ref


def estimate_reference(problem, iters=20000, methods=("scvx-rs", "papa-rs")):
    """Long-run reference (F*, x*, y*, lam*) for template instances.

    Runs two restarted methods, keeps the better final y, pairs it with the
    exactly feasible x (A is +/- identity on all generated instances), and
    recovers the multiplier from the stationarity conditions:

    * quadratic g:  solve  B' lam = -(Q y + q)  in least squares;
    * square-root loss f = ||.||_2 on x:  lam = -x/||x||;
    * l1-type f (TV): the scaled penalty gradient, clipped to [-kappa,kappa].
    """
    states = [_run_keep_state(problem, nm, iters) for nm in methods]
    objs = [problem.F_value(st.x, st.y) for st in states]
    pick = int(np.argmin(objs))
    st = states[pick]
    y_star = st.y
    # exactly feasible partner block: A x = c - B y with A = +/- I
    x_star = problem.A.adjoint(problem.c - problem.B.apply(y_star))

    kind = (problem.spec_dict or {}).get("kind", "")
    if kind == "qp":
        Q, q, B = problem.data["Q"], problem.data["q"], problem.data["B"]
        lam = np.linalg.lstsq(B.T, -(Q @ y_star + q), rcond=None)[0]
    elif kind == "elastic_sqrt":
        nx = np.linalg.norm(x_star)
        lam = -x_star / nx if nx > 0 else np.zeros_like(x_star)
    elif kind == "tv_recon":
        kappa = problem.data["kappa"]
        spec = problem.penalty_spec()
        w = residual(spec, st.x, (1 - st.tau) * st.y + st.tau * st.yt)
        lam = np.clip(st.rho * grad_phi(spec.K, w), -kappa, kappa)
    else:
        lam = np.zeros(problem.c.shape[0])

    F_star = problem.F_value(x_star, y_star)
    gap = abs(objs[0] - objs[1]) / max(1.0, abs(F_star))
    ref = Reference(F_star=F_star, x_star=x_star, y_star=y_star, lam_star=lam,
                    err_bar=float(gap), source="long-run:" + methods[pick])
    ref.verified = max(kkt_residuals(problem, ref).values()) <= 1e-8
    return ref


def crosscheck_composite(comp, budget):
    """P* and y* estimate for a composite instance from two schemes."""
    from . import papa
    from .baselines import BaselineConfig, run_baseline

    if budget < 1:
        raise ValueError("crosscheck budget must be >= 1")
    scheme = "dr-scvx" if comp.op is None else "linop-scvx"
    tr1 = papa.run_composite(comp, papa.SolverConfig(max_iters=budget), scheme)
    tr2 = run_baseline(comp, BaselineConfig(method="cp-scvx", max_iters=budget))
    p1, p2_ = tr1.records[-1].objective, tr2.records[-1].objective
    gap = abs(p1 - p2_) / max(1.0, abs(min(p1, p2_)))
    winner = tr1 if p1 <= p2_ else tr2
    ref = Reference(F_star=float(min(p1, p2_)), err_bar=float(gap),
                    y_star=winner.meta["y_final"],
                    source="crosscheck:%s+cp-scvx" % scheme)
    ref.low_confidence = gap > 1e-6
    return ref


def from_spec(d):
    """Regenerate an instance from its JSON description."""
    kind, seed, params = d["kind"], d["seed"], d["params"]
    if kind == "qp":
        return gen_qp(seed=seed, **params)
    if kind == "elastic_sqrt":
        return gen_elastic_sqrt(seed=seed, **params)
    if kind == "tv_recon":
        return gen_tv_recon(seed=seed, **params)
    if kind == "sqrt_composite":
        return gen_sqrt_composite(seed=seed, **params)
    raise ValueError("unknown instance kind %r" % (kind,))


def materialize(m):
    """Dense matrix of a LinearMap (small dimensions only)."""
    cols = []
    e = np.zeros(m.cols)
    for i in range(m.cols):
        e[i] = 1.0
        cols.append(m.apply(e))
        e[i] = 0.0
    return np.column_stack(cols)
