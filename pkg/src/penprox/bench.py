"""Experiment harness: configure runs, emit traces, certify bounds.

Outputs per experiment: one CSV trace per solver (schema
``k,objective,rel_obj_residual,feasibility,rho,tau,wall_ms``), a JSON meta
sidecar per solver with the constants a bound check needs, an oracle JSON
when a reference was computed, and a summary JSON with fitted rates and
bound-check results.  Everything is reproducible byte for byte from
(config, seed); wall-clock timing is only written when explicitly enabled
because it would break that reproducibility.
"""

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import baselines, papa, problems

__all__ = [
    "SOLVERS", "BENCHMARKS", "run_experiment", "rate_slope", "check_bounds",
    "write_trace_csv", "read_trace_csv", "iterations_to_tol",
]

_TOL = 1e-8
_CSV_HEADER = "k,objective,rel_obj_residual,feasibility,rho,tau,wall_ms"


# ---------------------------------------------------------------------------
# Solver registry

def _template(alg, **base):
    def build(problem, iters, opts):
        kw = dict(base)
        kw.update(opts)
        cfg = papa.SolverConfig(algorithm=alg, max_iters=iters, **kw)
        return papa.run(problem, cfg)
    return build


def _baseline(method, **base):
    def build(problem, iters, opts):
        if problem.composite is None:
            raise papa.ConfigurationError(
                "solver %r needs a composite view of the benchmark" % method)
        kw = dict(base)
        kw.update(opts)
        cfg = baselines.BaselineConfig(method=method, max_iters=iters, **kw)
        return baselines.run_baseline(problem.composite, cfg)
    return build


def _composite(scheme):
    def build(problem, iters, opts):
        comp = problem if isinstance(problem, problems.CompositeForm) \
            else problem.composite
        if comp is None:
            raise papa.ConfigurationError(
                "scheme %r needs a composite view of the benchmark" % scheme)
        cfg = papa.SolverConfig(max_iters=iters, **opts)
        return papa.run_composite(comp, cfg, scheme)
    return build


SOLVERS = {
    "papa": _template("papa"),
    "papa-rs": _template("papa", restart_period=50),
    "papa-linearized": _template("papa", x_mode="linearized"),
    "papa-nonaccel": _template("papa", accelerated=False),
    "scvx-papa": _template("scvx"),
    "scvx-papa-opt2": _template("scvx", option="proximal"),
    "scvx-papa-rs": _template("scvx", restart_period=100),
    "scvx-papa-tighter": _template("scvx", tau_rule="tighter"),
    "cp-plain": _baseline("cp-plain"),
    "cp-scvx": _baseline("cp-scvx"),
    "vu-condat": _baseline("vu-condat"),
    "acc-prox-grad-25": _baseline("acc-prox-grad", inner_iters=25),
    "acc-prox-grad-50": _baseline("acc-prox-grad", inner_iters=50),
    "acc-prox-grad-rs": _baseline("acc-prox-grad", inner_iters=25,
                                  restart_period=50),
    "dr-plain": _composite("dr-plain"),
    "dr-scvx": _composite("dr-scvx"),
    "linop-plain": _composite("linop-plain"),
    "linop-scvx": _composite("linop-scvx"),
    "pd-plain": _composite("pd-plain"),
    "pd-scvx": _composite("pd-scvx"),
}


# ---------------------------------------------------------------------------
# Benchmark registry: desk-scale defaults, paper-scale sizes behind a flag

_DESK = {
    "qp": {"p2": 60, "n": 60, "strongly_convex": True},
    "elastic": {"p2": 400, "n": 140, "s": 40, "kappa1": 0.1, "kappa2": 0.01,
                "noise_sigma": 1e-3},
    "lasso": {"p2": 400, "n": 140, "s": 40, "kappa1": 0.0, "kappa2": 0.01,
              "noise_sigma": 1e-3},
    "tv": {"height": 32, "width": 32, "sample_rate": 0.2,
           "kappa": 4.0912e-4, "noise_sigma": 0.0},
    "sqrt_composite": {"dim": 150, "kappa1": 0.1, "kappa2": 0.01},
}

_PAPER = {
    "qp": {"p2": 2000, "n": 2000},
    "elastic": {"p2": 5000, "n": 1750, "s": 500},
    "lasso": {"p2": 5000, "n": 1750, "s": 500},
}


def _gen_benchmark(kind, params, seed, paper_scale=False):
    merged = dict(_DESK[kind])
    if paper_scale:
        if kind not in _PAPER:
            raise papa.ConfigurationError(
                "benchmark %r has no paper-scale variant (dense measurement "
                "maps do not fit)" % kind)
        merged.update(_PAPER[kind])
    merged.update(params or {})
    if kind == "qp":
        return problems.gen_qp(seed=seed, **merged)
    if kind in ("elastic", "lasso"):
        return problems.gen_elastic_sqrt(seed=seed, **merged)
    if kind == "tv":
        return problems.gen_tv_recon(seed=seed, **merged)
    if kind == "sqrt_composite":
        return problems.gen_sqrt_composite(seed=seed, **merged)
    raise papa.ConfigurationError("unknown benchmark kind %r" % (kind,))


BENCHMARKS = tuple(_DESK)


def qp_display_feasibility(problem, y):
    """Relative box violation (||max(By-b,0)|| + ||min(By-a,0)||)/max(||a||,||b||)."""
    d = problem.data
    By = d["B"] @ y
    num = (np.linalg.norm(np.maximum(By - d["b"], 0.0))
           + np.linalg.norm(np.minimum(By - d["a"], 0.0)))
    return float(num / max(np.linalg.norm(d["a"]), np.linalg.norm(d["b"])))


# ---------------------------------------------------------------------------
# Trace IO

def _fmt(x):
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x))


def write_trace_csv(trace, path, F_star=None, include_timing=False):
    lines = [_CSV_HEADER]
    for r in trace.records:
        if F_star is None:
            rel = float("nan")
        else:
            rel = abs(r.objective - F_star) / max(1.0, abs(F_star))
        wall = r.wall_ms if include_timing else 0.0
        lines.append(",".join([
            str(r.k), _fmt(r.objective), _fmt(rel), _fmt(r.feasibility),
            _fmt(r.rho), _fmt(r.tau), _fmt(wall),
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError("unexpected trace header %r" % header)
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: [] for name in _CSV_HEADER.split(",")}
    for row in rows:
        for name, val in zip(cols, row):
            cols[name].append(int(val) if name == "k" else float(val))
    return cols


def _json_ready(obj):
    if isinstance(obj, np.ndarray):
        return [float(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_json_ready(obj), fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Empirical rates and theorem bounds

def rate_slope(ks, values, k_from, k_to):
    """Least-squares slope of log(value) vs log(k) over [k_from, k_to].

    Nonpositive or nonfinite entries are skipped (noted); fewer than 10
    usable points is an error.
    """
    pts = [(k, v) for k, v in zip(ks, values)
           if k_from <= k <= k_to and k > 0 and math.isfinite(v) and v > 0]
    skipped = sum(1 for k in ks if k_from <= k <= k_to) - len(pts)
    if len(pts) < 10:
        raise ValueError("only %d usable points in window [%d, %d]"
                         % (len(pts), k_from, k_to))
    lk = np.log([p[0] for p in pts])
    lv = np.log([p[1] for p in pts])
    slope = float(np.polyfit(lk, lv, 1)[0])
    note = "%d nonpositive entries skipped" % skipped if skipped else ""
    return slope, len(pts), note


@dataclass
class BoundCheck:
    theorem: str
    passed: bool
    worst_slack: float
    violations: int
    checked: int
    note: str = ""

    def to_dict(self):
        return {"theorem": self.theorem, "passed": self.passed,
                "worst_slack": self.worst_slack, "violations": self.violations,
                "checked": self.checked, "note": self.note}


def _guarantee_radii(meta, oracle, theorem):
    x0 = np.asarray(meta["x0"]) if meta.get("x0") is not None else None
    y0 = np.asarray(meta["y0"])
    ys = np.asarray(oracle["y_star"])
    lam = float(oracle["lambda_star_norm"])
    rho0 = float(meta["rho0"])
    gamma0 = float(meta.get("gamma0", 0.0))
    y_coeff = rho0 * float(meta["normB_sq"])
    if theorem == "t3":
        y_coeff = float(meta.get("L_h", 0.0)) + rho0 * float(meta["normB_sq"])
    rp2 = y_coeff * float(np.dot(y0 - ys, y0 - ys))
    if gamma0 > 0 and x0 is not None and oracle.get("x_star") is not None:
        xs = np.asarray(oracle["x_star"])
        rp2 += gamma0 * float(np.dot(x0 - xs, x0 - xs))
    rd = lam + math.sqrt(lam * lam + rho0 * rp2)
    return rp2, rd, lam, rho0


def check_bounds(ks, objectives, feasibilities, meta, oracle, theorem,
                 tol=_TOL):
    """Evaluate the named guarantee at every recorded iterate k >= 1.

    ``oracle`` is a dict with F_star, err_bar, lambda_star_norm, and the
    reference point; ``meta`` is the run's sidecar.  Violations are slacks
    below -tol relative to max(1, bound); the oracle error bar inflates the
    objective tolerance.
    """
    if oracle is None:
        return BoundCheck(theorem, passed=True, worst_slack=math.inf,
                          violations=0, checked=0,
                          note="skipped: no oracle available")
    F_star = float(oracle["F_star"])
    err = float(oracle.get("err_bar", 0.0)) * max(1.0, abs(F_star))
    worst = math.inf
    bad = 0
    checked = 0

    if theorem == "c1":
        L_f = float(meta["L_f"])
        rho0 = float(meta["rho0"])
        r = float(np.linalg.norm(np.asarray(meta["y0"])
                                 - np.asarray(oracle["y_star"])))
        scvx = str(meta.get("algorithm", "")).endswith("scvx")
        for k, obj in zip(ks, objectives):
            if k < 1:
                continue
            if scvx:
                bound = (2.0 * rho0 * r * r / (k + 1.0) ** 2
                         + 8.0 * (L_f * L_f + L_f * rho0 * r)
                         / (rho0 * (k + 1.0) ** 2))
            else:
                bound = ((rho0 * rho0 * r * r + 4.0 * L_f * L_f
                          + 2.0 * L_f * rho0 * r) / (2.0 * rho0 * k))
            val = obj - F_star
            slack = (bound - (val - err)) / max(1.0, bound)
            checked += 1
            worst = min(worst, slack)
            if slack < -tol:
                bad += 1
        return BoundCheck(theorem, bad == 0, worst, bad, checked)

    rp2, rd, lam, rho0 = _guarantee_radii(meta, oracle, theorem)
    alg = str(meta.get("algorithm", "papa"))
    accel2 = (theorem == "t2") or (theorem == "t3" and alg == "scvx")
    num_obj = max(rho0 * rp2, 2.0 * lam * rd)
    for k, obj, feas in zip(ks, objectives, feasibilities):
        if k < 1:
            continue
        if accel2:
            obj_bound = 2.0 * num_obj / (rho0 * (k + 1.0) ** 2)
            feas_bound = 4.0 * rd / (rho0 * (k + 1.0) ** 2)
        else:
            obj_bound = num_obj / (2.0 * rho0 * k)
            feas_bound = rd / (rho0 * k)
        sl_o = (obj_bound - (abs(obj - F_star) - err)) / max(1.0, obj_bound)
        sl_f = (feas_bound - feas) / max(1.0, feas_bound)
        checked += 1
        slack = min(sl_o, sl_f)
        worst = min(worst, slack)
        if slack < -tol:
            bad += 1
    return BoundCheck(theorem, bad == 0, worst, bad, checked)


def iterations_to_tol(ks, rel_residuals, tol):
    for k, v in zip(ks, rel_residuals):
        if k >= 1 and math.isfinite(v) and v <= tol:
            return k
    return None


# ---------------------------------------------------------------------------
# Experiment driver

def _compute_oracle(problem, oracle_cfg, iters):
    mode = (oracle_cfg or {}).get("mode", "none")
    if mode == "none":
        return None, None
    if isinstance(problem, problems.CompositeForm):
        ref = problems.crosscheck_composite(
            problem, (oracle_cfg or {}).get("budget", 10 * iters))
        return ref, {"F_star": ref.F_star, "err_bar": ref.err_bar,
                     "y_star": ref.y_star, "lambda_star_norm": 0.0,
                     "source": ref.source}
    if mode == "enumeration":
        ref = problems.qp_reference_oracle(problem)
    elif mode == "crosscheck":
        ref = problems.fstar_crosscheck_oracle(
            problem, oracle_cfg.get("budget", 10 * iters))
    else:  # longrun / auto
        ref = problems.estimate_reference(
            problem, iters=oracle_cfg.get("budget", 10 * iters))
    payload = {
        "F_star": ref.F_star, "err_bar": ref.err_bar,
        "lambda_star_norm": ref.lam_norm, "source": ref.source,
        "x_star": ref.x_star, "y_star": ref.y_star,
    }
    return ref, payload


def run_experiment(config, out_dir, paper_scale=False, timing=False,
                   seed=None):
    """Run the configured benchmark/solver matrix and write all reports."""
    kind = config["benchmark"]["kind"]
    if kind not in _DESK:
        raise papa.ConfigurationError("unknown benchmark kind %r" % (kind,))
    for spec in config["solvers"]:
        if spec["name"] not in SOLVERS:
            raise papa.ConfigurationError("unknown solver %r" % (spec["name"],))
    iters = int(config.get("iters", 1000))
    if iters < 1:
        raise papa.ConfigurationError("iteration budget must be >= 1")
    run_seed = int(config.get("seed", 0) if seed is None else seed)

    problem = _gen_benchmark(kind, config["benchmark"].get("params"),
                             run_seed, paper_scale)
    ref, oracle_payload = _compute_oracle(problem, config.get("oracle"), iters)
    if ref is not None and not isinstance(problem, problems.CompositeForm):
        problem.reference = ref

    os.makedirs(out_dir, exist_ok=True)
    if oracle_payload is not None:
        _dump_json(oracle_payload, os.path.join(out_dir, "oracle.json"))

    window = config.get("window")
    if window is None:
        window = [max(1, iters // 4), iters]
    if not (iters // 4 <= window[0] <= window[1] <= iters):
        raise papa.ConfigurationError(
            "slope window %r must lie inside [budget/4, budget]" % (window,))

    f_star = None if ref is None else ref.F_star
    summary = {"benchmark": {"kind": kind,
                             "params": config["benchmark"].get("params") or {}},
               "seed": run_seed, "iters": iters, "window": window,
               "oracle": None if ref is None else
               {"F_star": ref.F_star, "err_bar": ref.err_bar,
                "source": ref.source},
               "solvers": {}}

    traces = {}
    for spec in config["solvers"]:
        name = spec["name"]
        label = spec.get("label", name)
        opts = {k: v for k, v in spec.items() if k not in ("name", "label")}
        trace = SOLVERS[name](problem, iters, opts)
        traces[label] = trace
        path = os.path.join(out_dir, label + ".csv")
        write_trace_csv(trace, path, F_star=f_star, include_timing=timing)
        meta = dict(trace.meta)
        meta["solver"] = name
        _dump_json(meta, os.path.join(out_dir, label + ".meta.json"))

        entry = {"solver": name, "notes": list(trace.notes),
                 "final_objective": trace.records[-1].objective,
                 "final_feasibility": trace.records[-1].feasibility}
        if kind == "qp" and trace.meta.get("y_final") is not None:
            entry["final_box_violation"] = qp_display_feasibility(
                problem, np.asarray(trace.meta["y_final"]))
        if f_star is not None:
            ks = trace.column("k")
            rel = [abs(o - f_star) / max(1.0, abs(f_star))
                   for o in trace.column("objective")]
            try:
                slope, npts, note = rate_slope(ks, rel, window[0], window[1])
                entry["slope_obj"] = slope
                entry["slope_points"] = npts
                if note:
                    entry["slope_note"] = note
            except ValueError as exc:
                entry["slope_obj"] = None
                entry["slope_note"] = str(exc)
            try:
                slope_f, _, _ = rate_slope(ks, trace.column("feasibility"),
                                           window[0], window[1])
                entry["slope_feas"] = slope_f
            except ValueError:
                entry["slope_feas"] = None
            entry["iters_to_1e-8"] = iterations_to_tol(ks, rel, 1e-8)
        summary["solvers"][label] = entry

    for chk in config.get("checks", ()):
        label = chk.get("solver")
        if label not in traces:
            raise papa.ConfigurationError(
                "check refers to unknown solver %r" % (label,))
        trace = traces[label]
        oracle = oracle_payload
        result = check_bounds(
            trace.column("k"), trace.column("objective"),
            trace.column("feasibility"), trace.meta, oracle, chk["theorem"])
        summary["solvers"][label].setdefault("bound_checks", []).append(
            result.to_dict())

    _validate_summary(summary)
    _dump_json(summary, os.path.join(out_dir, "summary.json"))
    return summary


def _validate_summary(summary):
    import jsonschema

    schema_path = os.path.join(os.path.dirname(__file__), "schemas",
                               "summary_schema.json")
    with open(schema_path, "r", encoding="utf-8") as fh:
        schema = json.load(fh)
    jsonschema.validate(_json_ready(summary), schema)
