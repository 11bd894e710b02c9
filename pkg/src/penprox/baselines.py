"""Comparator first-order solvers on the composite form f(B y) + g(y) + h(y).

All three baselines consume a ``CompositeForm`` and share the prox and
operator vocabulary of the rest of the package, so there is a single source
of truth for every prox map.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .papa import ConfigurationError
from .prox import Zero
from .trace import ConvergenceTrace, TraceRecord

__all__ = ["BaselineConfig", "BaselineState", "cp_step", "vu_condat_step",
           "acc_prox_grad_step", "init_baseline", "run_baseline", "tv_prox_pd"]


@dataclass
class BaselineConfig:
    method: str = "cp-plain"   # cp-plain | cp-scvx | vu-condat | acc-prox-grad
    sigma: float = None
    tau: float = None
    theta: float = 1.0
    inner_iters: int = 25      # prox subiterations for acc-prox-grad
    restart_period: int = None
    max_iters: int = 1000


@dataclass
class BaselineState:
    k: int
    y: np.ndarray
    y_bar: np.ndarray          # extrapolated primal (cp) / previous y (fista)
    dual: np.ndarray
    sigma: float
    tau: float
    theta: float
    t: float = 1.0             # fista momentum scalar
    t_phase: float = 1.0


def _op_apply(comp, y):
    return y if comp.op is None else comp.op.apply(y)


def _op_adj(comp, u):
    return u if comp.op is None else comp.op.adjoint(u)


def _dual_dim(comp):
    return comp.y_dim if comp.op is None else comp.op.rows


def _default_steps(comp, cfg):
    nB = comp.norm_op_sq()
    if cfg.method in ("cp-plain", "cp-scvx"):
        if cfg.method == "cp-scvx":
            # modulus-driven acceleration needs tau0*sigma0*||B||^2 <= 1
            s = cfg.sigma if cfg.sigma is not None else (
                1.0 / math.sqrt(nB) if nB > 0 else 1.0)
            t = cfg.tau if cfg.tau is not None else (
                1.0 / math.sqrt(nB) if nB > 0 else 1.0)
        else:
            s = cfg.sigma if cfg.sigma is not None else (
                1.0 / (2.0 * nB) if nB > 0 else 1.0)
            t = cfg.tau if cfg.tau is not None else (
                1.0 / (2.0 * nB) if nB > 0 else 1.0)
        if s * t * nB > 1.0 + 1e-12:
            raise ConfigurationError(
                "primal-dual steps violate sigma*tau*||B||^2 <= 1 "
                "(sigma=%g, tau=%g, ||B||^2=%g)" % (s, t, nB)
            )
        return s, t
    if cfg.method == "vu-condat":
        L = comp.h.L if comp.h is not None else 0.0
        t = cfg.tau if cfg.tau is not None else (0.089 / L if L > 0 else 1.0)
        s = cfg.sigma if cfg.sigma is not None else (1.0 / t - L / 2.0) / nB
        if 1.0 / t - s * nB < L / 2.0 - 1e-12:
            raise ConfigurationError(
                "vu-condat steps violate 1/tau - sigma*||B||^2 >= L_h/2 "
                "(tau=%g, sigma=%g, ||B||^2=%g, L_h=%g)" % (t, s, nB, L)
            )
        return s, t
    return cfg.sigma or 0.0, cfg.tau or 0.0


def init_baseline(comp, cfg):
    y0 = comp.start()
    if cfg.method == "acc-prox-grad":
        if comp.h is None or not comp.h.L > 0:
            raise ConfigurationError("acc-prox-grad needs a smooth term with L > 0")
        if not isinstance(comp.g_inner, Zero):
            raise ConfigurationError(
                "acc-prox-grad handles a single nonsmooth term; g must be zero"
            )
        return BaselineState(k=0, y=y0, y_bar=y0.copy(),
                             dual=np.zeros(_dual_dim(comp)),
                             sigma=0.0, tau=0.0, theta=1.0)
    s, t = _default_steps(comp, cfg)
    return BaselineState(k=0, y=y0, y_bar=y0.copy(),
                         dual=np.zeros(_dual_dim(comp)),
                         sigma=s, tau=t, theta=cfg.theta)


def cp_step(comp, state, cfg):
    """Primal-dual step on min_y f(B y) + g(y).

    Plain mode: fixed (sigma, tau, theta) with sigma*tau*||B||^2 <= 1.
    Strongly convex mode: per-iteration acceleration driven by the modulus
    mu of g,

        theta_k = 1/sqrt(1 + 2*mu*tau_k),  tau_{k+1} = theta_k*tau_k,
        sigma_{k+1} = sigma_k/theta_k,

    the standard modulus-driven recursion for accelerated primal-dual
    methods (externally sourced parameter schedule).
    """
    f, g = comp.f_outer, comp.g_inner
    sigma, tau = state.sigma, state.tau
    if cfg.method == "cp-scvx":
        mu = comp.modulus()
        if not mu > 0:
            raise ConfigurationError("cp-scvx needs a strongly convex g")
        theta = 1.0 / math.sqrt(1.0 + 2.0 * mu * tau)
    else:
        theta = cfg.theta

    dual_new = f.conj_prox(sigma, state.dual + sigma * _op_apply(comp, state.y_bar))
    y_new = g.prox(tau, state.y - tau * _op_adj(comp, dual_new))
    y_bar = y_new + theta * (y_new - state.y)
    if cfg.method == "cp-scvx":
        sigma, tau = sigma / theta, theta * tau
    return BaselineState(k=state.k + 1, y=y_new, y_bar=y_bar, dual=dual_new,
                         sigma=sigma, tau=tau, theta=theta)


def vu_condat_step(comp, state, cfg):
    """Three-operator primal-dual step with explicit smooth gradient.

    Primal step with grad h and the dual variable, dual prox of f through
    Moreau, relaxation theta; valid when 1/tau - sigma*||B||^2 >= L_h/2.
    """
    f, g, h = comp.f_outer, comp.g_inner, comp.h
    sigma, tau, theta = state.sigma, state.tau, state.theta
    gh = h.grad(state.y) if h is not None else 0.0
    y_tilde = g.prox(tau, state.y - tau * (gh + _op_adj(comp, state.dual)))
    dual_tilde = f.conj_prox(
        sigma, state.dual + sigma * _op_apply(comp, 2.0 * y_tilde - state.y)
    )
    y_new = (1.0 - theta) * state.y + theta * y_tilde
    dual_new = (1.0 - theta) * state.dual + theta * dual_tilde
    return BaselineState(k=state.k + 1, y=y_new, y_bar=y_new, dual=dual_new,
                         sigma=sigma, tau=tau, theta=theta)


def tv_prox_pd(f_outer, op, v, gamma, iters):
    """argmin f(op(u)) + ||u - v||^2/(2 gamma), by a fixed number of
    primal-dual subiterations (deterministic: cold-started each call)."""
    nD = op.op_norm_sq()
    s = t = 1.0 / math.sqrt(nD) if nD > 0 else 1.0
    u = v.copy()
    u_bar = v.copy()
    p = np.zeros(op.rows)
    for _ in range(iters):
        p = f_outer.conj_prox(s, p + s * op.apply(u_bar))
        u_prev = u
        u = (u - t * op.adjoint(p) + (t / gamma) * v) / (1.0 + t / gamma)
        u_bar = 2.0 * u - u_prev
    return u


def acc_prox_grad_step(comp, state, cfg):
    """Momentum proximal-gradient step on min h(y) + f(B y).

    Gradient step on h at the extrapolated point with step 1/L, then the
    prox of the nonsmooth part: exact when B is absent, otherwise a fixed
    number of inner primal-dual subiterations.  Optional fixed-period
    restart resets the momentum scalar.
    """
    h, f = comp.h, comp.f_outer
    L = h.L
    w = state.y_bar
    v = w - h.grad(w) / L
    if isinstance(f, Zero):
        y_new = v
    elif comp.op is None:
        y_new = f.prox(1.0 / L, v)
    else:
        y_new = tv_prox_pd(f, comp.op, v, 1.0 / L, cfg.inner_iters)

    t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * state.t_phase * state.t_phase))
    y_bar = y_new + ((state.t_phase - 1.0) / t_new) * (y_new - state.y)
    st = BaselineState(k=state.k + 1, y=y_new, y_bar=y_bar, dual=state.dual,
                       sigma=0.0, tau=0.0, theta=1.0, t=t_new, t_phase=t_new)
    if cfg.restart_period and st.k % cfg.restart_period == 0:
        st.t_phase = 1.0
        st.y_bar = y_new.copy()
    return st


_STEPS = {"cp-plain": cp_step, "cp-scvx": cp_step, "vu-condat": vu_condat_step,
          "acc-prox-grad": acc_prox_grad_step}


def run_baseline(comp, cfg):
    if cfg.method not in _STEPS:
        raise ConfigurationError("unknown baseline method %r" % (cfg.method,))
    step = _STEPS[cfg.method]
    state = init_baseline(comp, cfg)
    trace = ConvergenceTrace()
    trace.meta = {"algorithm": cfg.method, "sigma": state.sigma,
                  "tau": state.tau, "inner_iters": cfg.inner_iters,
                  "y0": state.y.copy()}
    t0 = time.perf_counter()

    def rec(st):
        return TraceRecord(k=st.k, objective=comp.objective(st.y),
                           feasibility=0.0, psi=0.0, rho=0.0, tau=st.tau,
                           wall_ms=(time.perf_counter() - t0) * 1e3)

    trace.records.append(rec(state))
    for _ in range(cfg.max_iters):
        state = step(comp, state, cfg)
        trace.records.append(rec(state))
    trace.meta["y_final"] = state.y.copy()
    return trace
