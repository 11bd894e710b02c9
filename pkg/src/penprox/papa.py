"""Alternating proximal penalty solvers with parameter homotopy.

Two main schemes over the template ``min f(x) + g(y) + h(y)`` subject to
``A x + B y - c in K`` (h optional, smooth):

* ``papa``: alternating prox steps on the quadratic penalty with momentum
  weight ``k/(k+2)`` and schedules ``rho_k = rho0*(k+1)``,
  ``gamma_k = gamma0*(k+1)``, ``tau_k = 1/(k+1)``.  Last-iterate O(1/k)
  guarantees on objective residual and feasibility violation.
* ``scvx``: the semi-strongly convex variant (g strongly convex with
  modulus mu_g).  ``tau`` follows the accelerated root recurrence,
  ``rho_k = rho_{k-1}/(1-tau_k)``, the y-block is updated through an
  auxiliary sequence with either a weighted averaging step (Option 1) or a
  second prox of g (Option 2).  O(1/k^2) guarantees.

Both support an exact x-subproblem solver supplied by the problem or a
prox-linearized x-step, periodic restarting with a multiplier-style shift
of the penalty center, and per-iteration descent diagnostics.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .penalty import PenaltySpec, grad_phi, penalty_val_grad, phi_val, residual
from .trace import ConvergenceTrace, TraceRecord

__all__ = [
    "ConfigurationError", "SolverConfig", "SolverState", "tau_next",
    "tighter_tau_rho_next", "init_state", "papa_iterate", "scvx_iterate",
    "conic_iterate", "restart", "run", "diagnostics_descent",
    "CompositeState", "composite_init", "composite_iterate", "run_composite",
    "three_term_y_step",
]


class ConfigurationError(ValueError):
    pass


@dataclass
class SolverConfig:
    algorithm: str = "papa"            # "papa" | "scvx" | "conic"
    rho0: float = None                 # default 1/||B|| (papa), mu_g/(2||B||^2) (scvx)
    gamma0: float = 0.0
    mu_g: float = None                 # override of the declared modulus of g
    option: str = "averaging"          # scvx y-step: "averaging" | "proximal"
    tau_rule: str = "standard"         # "standard" | "tighter"
    x_mode: str = "exact"              # "exact" | "linearized"
    smooth_case: str = "i"             # scvx three-term case: "i" | "ii"
    restart_period: int = None
    max_iters: int = 1000
    record_diagnostics: bool = False
    accelerated: bool = True           # False: momentum suppressed (O(1/sqrt(k)))
    allow_rho0_violation: bool = False


@dataclass
class SolverState:
    k: int                 # global iteration count
    j: int                 # iterations since the last restart (drives schedules)
    x: np.ndarray
    y: np.ndarray
    xh: np.ndarray         # extrapolated x
    yh: np.ndarray         # extrapolated y (papa) / unused between scvx steps
    xt: np.ndarray         # auxiliary x-sequence of the momentum interpolation
    yt: np.ndarray         # auxiliary y-sequence
    tau: float
    rho: float
    gamma: float
    lambda0: np.ndarray


def tau_next(tau):
    """Root of t^2 = (1 - t) tau^2: t = (tau/2)(sqrt(tau^2 + 4) - tau)."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1], got %r" % (tau,))
    return 0.5 * tau * (math.sqrt(tau * tau + 4.0) - tau)


def tighter_tau_rho_next(tau_prev, rho_prev, mu_g, normB_sq):
    """One step of the modulus-aware tau/rho recurrence.

    Solves ``rho tau^2 ||B||^2 / (1 - tau) = rho_prev tau_prev^2 ||B||^2
    + mu_g tau_prev`` together with ``rho = rho_prev / (1 - tau)``:
    with ``s = sqrt(tau_prev^2 + (mu_g/||B||^2) tau_prev / rho_prev)``,
    ``tau = s / (1 + s)``.
    """
    if not (tau_prev > 0 and rho_prev > 0 and normB_sq > 0):
        raise ValueError("tau_prev, rho_prev, normB_sq must be positive")
    if not mu_g > 0:
        raise ConfigurationError("the tighter tau rule requires mu_g > 0")
    s = math.sqrt(tau_prev * tau_prev + (mu_g / normB_sq) * tau_prev / rho_prev)
    tau = s / (1.0 + s)
    return tau, rho_prev / (1.0 - tau)


@dataclass
class _Resolved:
    rho0: float
    gamma0: float
    mu_g: float
    normB_sq: float
    normA_sq: float
    L_h: float
    mu_h: float
    notes: list = field(default_factory=list)


def _resolve(problem, cfg):
    notes = []
    nB = problem.norm_b_sq()
    nA = problem.norm_a_sq() if cfg.x_mode == "linearized" else 0.0
    L_h = problem.h.L if problem.h is not None else 0.0
    mu_h = problem.h.mu if problem.h is not None else 0.0

    mu = cfg.mu_g
    if mu is None:
        mu = problem.mu_g if problem.mu_g is not None else getattr(problem.g, "mu", 0.0)
    if cfg.algorithm == "scvx" and not mu > 0:
        mu = 0.1
        notes.append("mu_g undeclared; using exploratory fallback mu_g=0.1")

    rho0 = cfg.rho0
    if rho0 is None:
        if cfg.algorithm == "scvx":
            rho0 = mu / (2.0 * nB)
        else:
            rho0 = 1.0 / math.sqrt(nB)
    if not rho0 > 0:
        raise ConfigurationError("rho0 must be positive, got %r" % (rho0,))

    if cfg.algorithm == "scvx" and cfg.tau_rule == "standard":
        if problem.h is not None and cfg.smooth_case == "ii":
            if not L_h < 2.0 * mu_h:
                raise ConfigurationError(
                    "smooth case ii needs L_h < 2*mu_h (L_h=%g, mu_h=%g)"
                    % (L_h, mu_h)
                )
            cap = (mu + 2.0 * mu_h - L_h) / (2.0 * nB)
        else:
            cap = mu / (2.0 * nB)
        if rho0 > cap * (1.0 + 1e-12):
            msg = "rho0=%g violates rho0 <= %g required by the step rule" % (rho0, cap)
            if cfg.allow_rho0_violation:
                notes.append("override: " + msg)
            else:
                raise ConfigurationError(msg)
    if cfg.restart_period is not None and cfg.restart_period < 2:
        raise ConfigurationError("restart_period must be >= 2")
    if cfg.option not in ("averaging", "proximal"):
        raise ConfigurationError("unknown option %r" % (cfg.option,))
    if cfg.x_mode not in ("exact", "linearized"):
        raise ConfigurationError("unknown x_mode %r" % (cfg.x_mode,))
    if cfg.x_mode == "exact" and problem.exact_x_solver is None:
        raise ConfigurationError(
            "x_mode='exact' needs an exact x-subproblem solver on the problem"
        )
    return _Resolved(rho0, cfg.gamma0, mu, nB, nA, L_h, mu_h, notes)


def init_state(problem, cfg):
    x0 = problem.start_x()
    y0 = problem.start_y()
    res = _resolve(problem, cfg)
    return SolverState(
        k=0, j=0, x=x0, y=y0.copy(), xh=x0.copy(), yh=y0.copy(),
        xt=x0.copy(), yt=y0.copy(), tau=1.0, rho=res.rho0, gamma=res.gamma0,
        lambda0=np.zeros(problem.c.shape[0]),
    )


def _shift(state, rho):
    if np.any(state.lambda0):
        return state.lambda0 / rho
    return None


def _solve_x(problem, xh, yh, rho, gamma, shift, cfg, res):
    if cfg.x_mode == "exact":
        return problem.exact_x_solver(xh, yh, rho, gamma, shift)
    # prox-linearized x-step: quadratic model with the smallest curvature
    # rho*||A||^2 + gamma that still upper-bounds the penalty term
    spec = problem.penalty_spec()
    w = spec.A.apply(xh) + spec.B.apply(yh) - spec.c
    if shift is not None:
        w = w + shift
    gx = spec.A.adjoint(w - spec.K.project(w))
    gamma_hat = rho * res.normA_sq + gamma
    return problem.f.prox(1.0 / gamma_hat, xh - (rho / gamma_hat) * gx)


def _grad_y_penalty(problem, x, y_anchor, rho, shift):
    spec = problem.penalty_spec()
    w = spec.A.apply(x) + spec.B.apply(y_anchor) - spec.c
    if shift is not None:
        w = w + shift
    s = w - spec.K.project(w)
    return spec.B.adjoint(s), s


def three_term_y_step(problem, anchor_prox, anchor_grad_h, gy, rho, beta,
                      prox_gamma_scale=1.0):
    """Shared smooth-aware y update: prox of g at the combined gradient step.

    ``anchor_prox`` is the point the quadratic model is centered at,
    ``anchor_grad_h`` the point where the smooth gradient is evaluated,
    ``beta`` the model curvature, and ``prox_gamma_scale`` multiplies beta
    inside the prox weight (tau_k for the auxiliary scvx sequence).
    """
    gh = problem.h.grad(anchor_grad_h)
    step = anchor_prox - (gh + rho * gy) / (prox_gamma_scale * beta)
    return problem.g.prox(1.0 / (prox_gamma_scale * beta), step)


def papa_iterate(problem, state, cfg):
    """One step of the O(1/k) scheme; returns the successor state."""
    res = _resolve(problem, cfg)
    j, rho, gamma = state.j, state.rho, state.gamma
    tau = state.tau
    shift = _shift(state, rho)

    if cfg.x_mode == "linearized":
        # parallel form: both blocks linearized at the extrapolated pair
        x_new = _solve_x(problem, state.xh, state.yh, rho, gamma, shift, cfg, res)
        gy, _ = _grad_y_penalty(problem, state.xh, state.yh, rho, shift)
    else:
        x_new = _solve_x(problem, state.xh, state.yh, rho, gamma, shift, cfg, res)
        gy, _ = _grad_y_penalty(problem, x_new, state.yh, rho, shift)

    nB = res.normB_sq
    if problem.h is None:
        y_new = problem.g.prox(1.0 / (rho * nB), state.yh - gy / nB)
    else:
        beta = rho * nB + res.L_h
        y_new = three_term_y_step(problem, state.yh, state.yh, gy, rho, beta)

    w = j / (j + 2.0)
    xh = x_new + w * (x_new - state.x)
    yh = y_new + w * (y_new - state.y)
    xt = state.xt + (x_new - state.xh) / tau
    yt = state.yt + (y_new - state.yh) / tau
    if not cfg.accelerated:
        xh, yh, xt, yt = x_new, y_new, x_new, y_new
    return SolverState(
        k=state.k + 1, j=j + 1, x=x_new, y=y_new, xh=xh, yh=yh, xt=xt, yt=yt,
        tau=1.0 / (j + 2.0), rho=res.rho0 * (j + 2.0), gamma=res.gamma0 * (j + 2.0),
        lambda0=state.lambda0,
    )


def scvx_iterate(problem, state, cfg):
    """One step of the O(1/k^2) scheme; returns the successor state."""
    res = _resolve(problem, cfg)
    tau, rho = state.tau, state.rho
    shift = _shift(state, rho)
    if cfg.tau_rule == "tighter":
        tau_new, rho_new = tighter_tau_rho_next(tau, rho, res.mu_g, res.normB_sq)
    else:
        tau_new = tau_next(tau)
        rho_new = rho / (1.0 - tau_new)

    yh = (1.0 - tau) * state.y + tau * state.yt
    x_new = _solve_x(problem, state.xh, yh, rho, res.gamma0, shift, cfg, res)
    xh_new = x_new + (tau_new * (1.0 - tau) / tau) * (x_new - state.x)
    gy, _ = _grad_y_penalty(problem, x_new, yh, rho, shift)

    nB = res.normB_sq
    if problem.h is None:
        yt_new = problem.g.prox(
            1.0 / (tau * rho * nB), state.yt - gy / (tau * nB)
        )
    elif cfg.smooth_case == "ii":
        beta = rho * nB + res.L_h / tau
        yt_new = three_term_y_step(
            problem, state.yt, state.yt, gy, rho, beta, prox_gamma_scale=tau
        )
    else:
        beta = rho * nB + res.L_h
        yt_new = three_term_y_step(
            problem, state.yt, yh, gy, rho, beta, prox_gamma_scale=tau
        )

    if cfg.option == "averaging":
        y_new = (1.0 - tau) * state.y + tau * yt_new
    else:
        if problem.h is None:
            y_new = problem.g.prox(1.0 / (rho * nB), yh - gy / nB)
        else:
            beta2 = rho * nB + res.L_h
            y_new = three_term_y_step(problem, yh, yh, gy, rho, beta2)

    xt_new = state.xt + (x_new - state.xh) / tau
    return SolverState(
        k=state.k + 1, j=state.j + 1, x=x_new, y=y_new, xh=xh_new, yh=yh,
        xt=xt_new, yt=yt_new, tau=tau_new, rho=rho_new, gamma=res.gamma0,
        lambda0=state.lambda0,
    )


def conic_iterate(problem, state, cfg):
    """Specialized step for min <q,y> s.t. B(y) + x = c, x in a cone.

    x is a projection onto the cone, y an explicit gradient step; momentum
    and schedules match the O(1/k) scheme.
    """
    from .prox import Linear, SetIndicator, ZeroSet
    from .linop import IdentityMap

    if not (isinstance(problem.f, SetIndicator) and isinstance(problem.g, Linear)
            and isinstance(problem.A, IdentityMap) and isinstance(problem.K, ZeroSet)):
        raise ConfigurationError(
            "conic step needs f = cone indicator, g linear, A identity, K = {0}"
        )
    res = _resolve(problem, cfg)
    j, rho = state.j, state.rho
    cone = problem.f.set
    q = problem.g.q
    nB = res.normB_sq
    shift = _shift(state, rho)

    by = problem.B.apply(state.yh)
    target = problem.c - by
    if shift is not None:
        target = target - shift
    x_new = cone.project(target)
    w = x_new + by - problem.c
    if shift is not None:
        w = w + shift
    y_new = state.yh - (q + rho * problem.B.adjoint(w)) / (rho * nB)

    mom = j / (j + 2.0)
    xh = x_new + mom * (x_new - state.x)
    yh = y_new + mom * (y_new - state.y)
    xt = state.xt + (x_new - state.xh) / state.tau
    yt = state.yt + (y_new - state.yh) / state.tau
    return SolverState(
        k=state.k + 1, j=j + 1, x=x_new, y=y_new, xh=xh, yh=yh, xt=xt, yt=yt,
        tau=1.0 / (j + 2.0), rho=res.rho0 * (j + 2.0), gamma=res.gamma0 * (j + 2.0),
        lambda0=state.lambda0,
    )


def restart(state, cfg, problem):
    """Reset schedules and momentum; move the penalty center multiplier.

    The multiplier update is taken at the pre-reset penalty weight: with
    ``w = A x+ + B y - c + lambda0/rho`` (x+ the x-subproblem solution at
    the reset anchors), ``lambda0 <- rho*(w - proj_K(w))``, the
    augmented-Lagrangian estimate (for K = {0} this is the classical
    ``lambda0 + rho*residual``).  At a feasible point with lambda0 = 0 the
    shift is unchanged.
    """
    res = _resolve(problem, cfg)
    rho_pre, gamma_pre = state.rho, state.gamma
    shift = _shift(state, rho_pre)
    x_plus = _solve_x(problem, state.x, state.y, rho_pre, gamma_pre, shift, cfg, res)
    spec = problem.penalty_spec()
    w = spec.A.apply(x_plus) + spec.B.apply(state.y) - spec.c
    if shift is not None:
        w = w + shift
    lam = rho_pre * (w - spec.K.project(w))
    return SolverState(
        k=state.k, j=0, x=state.x, y=state.y, xh=state.x.copy(), yh=state.y.copy(),
        xt=state.x.copy(), yt=state.y.copy(), tau=1.0, rho=res.rho0,
        gamma=res.gamma0, lambda0=lam,
    )


def _record(problem, state, wall_ms):
    d = problem.K.dist(residual(problem.penalty_spec(), state.x, state.y))
    return TraceRecord(
        k=state.k,
        objective=problem.F_value(state.x, state.y),
        feasibility=d,
        psi=0.5 * d * d,
        rho=state.rho,
        tau=state.tau,
        wall_ms=wall_ms,
    )


def run(problem, cfg):
    """Drive the configured scheme for cfg.max_iters iterations.

    Deterministic given the problem and config.  Records one trace entry
    per state including k = 0.  Restarting, when enabled, happens before
    iterations at multiples of the restart period.
    """
    res = _resolve(problem, cfg)
    iterate = {"papa": papa_iterate, "scvx": scvx_iterate,
               "conic": conic_iterate}.get(cfg.algorithm)
    if iterate is None:
        raise ConfigurationError("unknown algorithm %r" % (cfg.algorithm,))

    state = init_state(problem, cfg)
    trace = ConvergenceTrace()
    trace.notes.extend(res.notes)
    trace.meta = {
        "algorithm": cfg.algorithm,
        "option": cfg.option,
        "tau_rule": cfg.tau_rule,
        "x_mode": cfg.x_mode,
        "rho0": res.rho0,
        "gamma0": res.gamma0,
        "mu_g": res.mu_g,
        "normB_sq": res.normB_sq,
        "L_h": res.L_h,
        "restart_period": cfg.restart_period,
        "x0": state.x.copy(),
        "y0": state.y.copy(),
    }
    diagnostics = [] if cfg.record_diagnostics else None
    if cfg.record_diagnostics and problem.reference is None:
        trace.notes.append("diagnostics requested but no reference available; skipped")
        diagnostics = None

    t0 = time.perf_counter()
    trace.records.append(_record(problem, state, 0.0))
    for k in range(cfg.max_iters):
        if cfg.restart_period and k > 0 and k % cfg.restart_period == 0:
            state = restart(state, cfg, problem)
            if diagnostics is not None:
                trace.notes.append(
                    "diagnostics stop at first restart (shifted penalty)"
                )
                diagnostics = None
        prev = state
        state = iterate(problem, state, cfg)
        if diagnostics is not None:
            diagnostics.append(diagnostics_descent(problem, prev, state, cfg))
        trace.records.append(
            _record(problem, state, (time.perf_counter() - t0) * 1e3)
        )
    trace.meta["y_final"] = state.y.copy()
    trace.diagnostics = diagnostics
    return trace


def diagnostics_descent(problem, prev, new, cfg):
    """Per-iteration inequality report for one transition.

    Evaluates the linearization ``l_k`` at the reference solution and at
    the previous iterate, the projection residuals ``s^k`` and
    ``s_hat^{k+1}``, and the one-step descent estimate of the momentum
    interpolation analysis.  Requires an unshifted run and a problem
    reference.
    """
    if np.any(prev.lambda0):
        raise ValueError("descent diagnostics require an unshifted run")
    ref = problem.reference
    if ref is None:
        raise ValueError("descent diagnostics need a problem reference")
    res = _resolve(problem, cfg)
    spec = problem.penalty_spec()
    tau, rho_k = prev.tau, prev.rho
    nB = res.normB_sq
    xs, ys, F_star = ref.x_star, ref.y_star, ref.F_star

    if cfg.algorithm == "scvx":
        y_anchor = (1.0 - tau) * prev.y + tau * prev.yt
        gamma_coeff = res.gamma0
    else:
        y_anchor = prev.yh
        gamma_coeff = prev.gamma

    # linearization of the penalty at (x^{k+1}, y_anchor)
    u_hat = spec.A.apply(new.x) + spec.B.apply(y_anchor) - spec.c
    s_hat = grad_phi(spec.K, u_hat)
    psi_hat = 0.5 * float(s_hat @ s_hat)
    gx = spec.A.adjoint(s_hat)
    gy = spec.B.adjoint(s_hat)

    def ell(px, py):
        return (psi_hat + float(gx @ (px - new.x)) + float(gy @ (py - y_anchor)))

    s_k = grad_phi(spec.K, residual(spec, prev.x, prev.y))
    psi_k = 0.5 * float(s_k @ s_k)
    l4_star = -0.5 * float(s_hat @ s_hat) - ell(xs, ys)
    diff = s_k - s_hat
    l4_zk = psi_k - 0.5 * float(diff @ diff) - ell(prev.x, prev.y)

    F_new = problem.F_value(new.x, new.y)
    F_prev = problem.F_value(prev.x, prev.y)
    d_new = spec.K.dist(residual(spec, new.x, new.y))
    phi_new = F_new + rho_k * 0.5 * d_new * d_new
    # rho_{k-1} = rho_k (1 - tau_k) along both schedules, so the trailing
    # coefficient [rho_{k-1} - rho_k(1-tau_k)] vanishes identically
    rho_prev = rho_k * (1.0 - tau)
    phi_prev = F_prev + rho_prev * psi_k

    dxs = float(np.dot(prev.xt - xs, prev.xt - xs) - np.dot(new.xt - xs, new.xt - xs))
    rhs = ((1.0 - tau) * phi_prev + tau * F_star
           + 0.5 * gamma_coeff * tau * tau * dxs
           + 0.5 * rho_k * tau * tau * nB * float(np.dot(prev.yt - ys, prev.yt - ys)))
    if cfg.algorithm == "scvx":
        rhs -= 0.5 * (rho_k * tau * tau * nB + res.mu_g * tau) * float(
            np.dot(new.yt - ys, new.yt - ys)
        )
    else:
        rhs -= 0.5 * rho_k * tau * tau * nB * float(np.dot(new.yt - ys, new.yt - ys))
    key_slack = rhs - phi_new

    interp_x = float(np.linalg.norm(prev.xh - ((1.0 - tau) * prev.x + tau * prev.xt)))
    interp_y = float(np.linalg.norm(y_anchor - ((1.0 - tau) * prev.y + tau * prev.yt)))
    return {
        "k": prev.k,
        "key_slack": key_slack,
        "lemma4_star_slack": l4_star,
        "lemma4_prev_slack": l4_zk,
        "interp_x": interp_x,
        "interp_y": interp_y,
    }


# ---------------------------------------------------------------------------
# Specializations to unconstrained composite problems
#
# min_y f(op(y)) + g(y), rewritten through an auxiliary penalty block.  Six
# recursions: prox-prox ("dr"), a linear-operator form ("linop"), and the
# conjugate/primal-dual rewriting of the x-step ("pd"), each in a plain
# O(1/k) and a strongly convex O(1/k^2) flavor.

_COMPOSITE_SCHEMES = (
    "dr-plain", "dr-scvx", "linop-plain", "linop-scvx", "pd-plain", "pd-scvx",
)


@dataclass
class CompositeState:
    k: int
    y: np.ndarray
    yh: np.ndarray
    yt: np.ndarray
    tau: float
    rho: float


def _composite_resolve(comp, cfg, scheme):
    if scheme not in _COMPOSITE_SCHEMES:
        raise ConfigurationError("unknown composite scheme %r" % (scheme,))
    if scheme.startswith("dr") and comp.op is not None:
        raise ConfigurationError("dr schemes apply to the identity-operator form")
    if not scheme.startswith("dr") and comp.op is None:
        raise ConfigurationError("scheme %r needs a linear operator" % (scheme,))
    nB = 1.0 if comp.op is None else comp.norm_op_sq()
    mu = cfg.mu_g if cfg.mu_g is not None else comp.modulus()
    rho0 = cfg.rho0
    if rho0 is None:
        rho0 = mu / (2.0 * nB) if scheme.endswith("scvx") else 1.0 / math.sqrt(nB)
    if scheme.endswith("scvx"):
        if not mu > 0:
            raise ConfigurationError("scvx composite schemes need mu_g > 0")
        if rho0 > mu / (2.0 * nB) * (1.0 + 1e-12) and not cfg.allow_rho0_violation:
            raise ConfigurationError(
                "rho0=%g violates rho0 <= mu_g/(2||B||^2)=%g" % (rho0, mu / (2 * nB))
            )
    return rho0, nB


def composite_init(comp, cfg, scheme):
    y0 = comp.start()
    rho0, _ = _composite_resolve(comp, cfg, scheme)
    return CompositeState(k=0, y=y0, yh=y0.copy(), yt=y0.copy(), tau=1.0, rho=rho0)


def composite_iterate(comp, state, cfg, scheme):
    """One step of the selected composite recursion; returns (state, aux)."""
    rho0, nB = _composite_resolve(comp, cfg, scheme)
    f, g, op = comp.f_outer, comp.g_inner, comp.op
    k, tau, rho = state.k, state.tau, state.rho
    y, yh, yt = state.y, state.yh, state.yt
    aux = {}

    if scheme == "dr-plain":
        x_new = f.prox(1.0 / rho, yh)
        y_new = g.prox(1.0 / rho, x_new)
        yh_new = y_new + (k / (k + 2.0)) * (y_new - y)
        aux["x"] = x_new
        return (CompositeState(k + 1, y_new, yh_new, y_new, 1.0 / (k + 2.0),
                               rho0 * (k + 2.0)), aux)

    if scheme == "dr-scvx":
        tau_new = tau_next(tau)
        yh_k = (1.0 - tau) * y + tau * yt
        x_new = f.prox(1.0 / rho, yh_k)
        yt_new = g.prox(1.0 / (tau * rho), x_new / tau - ((1.0 - tau) / tau) * y)
        y_new = (1.0 - tau) * y + tau * yt_new
        aux["x"] = x_new
        return (CompositeState(k + 1, y_new, yh_k, yt_new, tau_new,
                               rho / (1.0 - tau_new)), aux)

    if scheme == "linop-plain":
        u = op.apply(yh)
        x_new = f.prox(1.0 / rho, u)
        y_new = g.prox(1.0 / (rho * nB), yh - op.adjoint(u - x_new) / nB)
        yh_new = y_new + (k / (k + 2.0)) * (y_new - y)
        aux["x"] = x_new
        return (CompositeState(k + 1, y_new, yh_new, y_new, 1.0 / (k + 2.0),
                               rho0 * (k + 2.0)), aux)

    if scheme == "linop-scvx":
        tau_new = tau_next(tau)
        u = op.apply(yh)
        x_new = f.prox(1.0 / rho, u)
        yt_new = g.prox(1.0 / (tau * rho * nB),
                        yt - op.adjoint(u - x_new) / (tau * nB))
        y_new = (1.0 - tau) * y + tau * yt_new
        yh_new = y_new + (tau_new * (1.0 - tau) / tau) * (y_new - y)
        aux["x"] = x_new
        return (CompositeState(k + 1, y_new, yh_new, yt_new, tau_new,
                               rho / (1.0 - tau_new)), aux)

    if scheme == "pd-plain":
        xbar = f.conj_prox(rho, rho * op.apply(yh))
        y_new = g.prox(1.0 / (rho * nB), yh - op.adjoint(xbar) / (rho * nB))
        yh_new = y_new + (k / (k + 2.0)) * (y_new - y)
        aux["xbar"] = xbar
        return (CompositeState(k + 1, y_new, yh_new, y_new, 1.0 / (k + 2.0),
                               rho0 * (k + 2.0)), aux)

    # pd-scvx
    tau_new = tau_next(tau)
    xbar = f.conj_prox(rho, rho * op.apply(yh))
    yt_new = g.prox(1.0 / (tau * rho * nB), yt - op.adjoint(xbar) / (tau * rho * nB))
    y_new = (1.0 - tau) * y + tau * yt_new
    yh_new = y_new + (tau_new * (1.0 - tau) / tau) * (y_new - y)
    aux["xbar"] = xbar
    return (CompositeState(k + 1, y_new, yh_new, yt_new, tau_new,
                           rho / (1.0 - tau_new)), aux)


def run_composite(comp, cfg, scheme):
    rho0, nB = _composite_resolve(comp, cfg, scheme)
    state = composite_init(comp, cfg, scheme)
    trace = ConvergenceTrace()
    trace.meta = {
        "algorithm": scheme,
        "rho0": rho0,
        "normB_sq": nB,
        "L_f": comp.f_outer.lip,
        "y0": state.y.copy(),
    }
    t0 = time.perf_counter()

    def rec(st):
        return TraceRecord(
            k=st.k, objective=comp.objective(st.y), feasibility=0.0, psi=0.0,
            rho=st.rho, tau=st.tau, wall_ms=(time.perf_counter() - t0) * 1e3,
        )

    trace.records.append(rec(state))
    for _ in range(cfg.max_iters):
        state, _ = composite_iterate(comp, state, cfg, scheme)
        trace.records.append(rec(state))
    trace.meta["y_final"] = state.y.copy()
    return trace
