"""Built-in diagnostic suites behind ``proxgrad check``.

Each suite runs desk-scale problems and evaluates the analysis inequalities
the solvers are supposed to satisfy, returning (name, passed, detail) rows.
The pytest acceptance suite is the authoritative gate; these are the same
checks in a quick, scriptable form.
"""

from __future__ import annotations

import numpy as np

from . import diagnostics as diag
from .data import generate_pnorm_lasso, lasso_problem
from .harness import run_solver
from .linop import CountedOperator, dense_to_csr
from .objectives import CompositeProblem, PNormResidualLoss, ZeroRegularizer
from .solvers import AdaPGConfig, StoppingRule, adapg_run

__all__ = ["invariant_suite", "rate_suite", "SUITES"]


def _adjointness(rng):
    worst = 0.0
    for _ in range(50):
        m, n = rng.integers(2, 12, size=2)
        a = rng.uniform(-1, 1, (m, n))
        op = CountedOperator(a)
        x = rng.normal(size=n)
        y = rng.normal(size=m)
        lhs = float(op.apply(x) @ y)
        rhs = float(x @ op.apply_transpose(y))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst <= 1e-12, f"max relative defect {worst:.2e}"


def _dense_vs_csr(rng):
    worst = 0.0
    for _ in range(30):
        m, n = rng.integers(2, 15, size=2)
        a = rng.uniform(-1, 1, (m, n))
        a[rng.random((m, n)) < 0.5] = 0.0
        dense, sparse = CountedOperator(a), CountedOperator(dense_to_csr(a))
        x = rng.normal(size=n)
        y = rng.normal(size=m)
        worst = max(worst, float(np.max(np.abs(dense.apply(x) - sparse.apply(x)))))
        worst = max(
            worst, float(np.max(np.abs(dense.apply_transpose(y) - sparse.apply_transpose(y))))
        )
    return worst <= 1e-12, f"max representation defect {worst:.2e}"


def _forward_identity(rng):
    a = rng.uniform(-1, 1, (8, 5))
    loss = PNormResidualLoss(CountedOperator(a), rng.uniform(-1, 1, 8), 1.6)
    worst = 0.0
    for _ in range(500):
        x0, x1 = rng.normal(size=5), rng.normal(size=5)
        g0 = loss.value_grad(x0)[1]
        g1 = loss.value_grad(x1)[1]
        gamma = float(rng.uniform(0.05, 5.0))
        est = diag.estimates(x0, x1, g0, g1, gamma, nu=1.0)
        formula = 1.0 + gamma**2 * est.lip**2 - 2.0 * gamma * est.ell
        worst = max(worst, abs(est.forward_lip**2 - formula) / (1.0 + est.forward_lip**2))
    return worst <= 1e-9, f"max identity defect {worst:.2e}"


def _adapg_suite_trace():
    inst = generate_pnorm_lasso(40, 120, 10, 1.5, 1.0, seed=7)
    prob = lasso_problem(inst)
    trace = run_solver("adapg:q=1.5", prob, budget=400, keep_iterates=True)
    return prob, trace


def _fne(prob, trace):
    lower, middle, upper = diag.fne_chain(trace, prob)
    scale = 1e-9 * (1.0 + np.maximum(np.abs(middle), np.abs(upper)))
    ok = np.all(lower <= middle + scale) and np.all(middle <= upper + scale)
    return bool(ok), f"{lower.size} iterations"


def _residual_ratio(prob, trace):
    lhs, rhs = diag.residual_ratio_bound(trace, prob)
    ok = np.all(lhs <= rhs + 1e-12)
    return bool(ok), f"max excess {float(np.max(lhs - rhs)):.2e}"


def _ratio_cap(prob, trace):
    gammas = trace.gammas
    rho = gammas[1:] / gammas[:-1]
    cap = diag.stepsize_ratio_cap(trace.q, gammas[0], trace.gamma_start)
    ok = np.all(rho <= cap * (1 + 1e-12))
    return bool(ok), f"max ratio {float(rho.max()):.4f} vs cap {cap:.4f}"


def _accounting():
    inst = generate_pnorm_lasso(30, 90, 8, 1.5, 1.0, seed=11)
    expected = {"adapg:q=1": 2, "acfgm": 2}
    for spec, per_iter in expected.items():
        trace = run_solver(spec, lasso_problem(inst), budget=120)
        calls = trace.a_calls
        if not np.all(np.diff(calls) == per_iter):
            return False, f"{spec} deltas deviate from {per_iter}"
    for spec, base in (("nupg", 1), ("fnupg", 3)):
        trace = run_solver(spec, lasso_problem(inst), budget=120)
        calls = trace.a_calls
        for i in range(1, len(trace.records)):
            trials = trace.records[i].ls_trials
            if calls[i] - calls[i - 1] != base + trials:
                return False, f"{spec} delta != {base} + trials at row {i}"
    return True, "adapg=2, acfgm=2, nupg=1+LS, fnupg=3+LS"


def _scaling_identities(prob, trace):
    pts = [trace.start_point] + list(trace.iterates)
    grads = [prob.f.value_grad(p)[1] for p in pts]
    worst = 0.0
    for k in range(len(pts) - 1):
        est = diag.estimates(pts[k], pts[k + 1], grads[k], grads[k + 1], trace.gammas[k], nu=0.5)
        if est.step_norm == 0.0:
            continue
        worst = max(worst, abs(est.scaled_step * est.lip_scaled - est.gamma * est.lip))
        worst = max(worst, abs(est.scaled_step * est.ell_scaled - est.gamma * est.ell))
    return worst <= 1e-9, f"max defect {worst:.2e}"


def invariant_suite():
    rng = np.random.default_rng(0)
    rows = []
    rows.append(("operator adjointness",) + _adjointness(rng))
    rows.append(("dense/CSR agreement",) + _dense_vs_csr(rng))
    rows.append(("forward-map Lipschitz identity",) + _forward_identity(rng))
    prob, trace = _adapg_suite_trace()
    rows.append(("nonexpansiveness chain",) + _fne(prob, trace))
    rows.append(("residual ratio bound",) + _residual_ratio(prob, trace))
    rows.append(("stepsize ratio cap",) + _ratio_cap(prob, trace))
    rows.append(("operator-call accounting",) + _accounting())
    rows.append(("stepsize scaling identities",) + _scaling_identities(prob, trace))
    return rows


def _lyapunov_rows():
    rows = []
    inst = generate_pnorm_lasso(50, 150, 12, 1.5, 1.0, seed=3)
    for q in (1.0, 1.5, 2.0):
        prob = lasso_problem(inst)
        trace = run_solver(f"adapg:q={q:g}", prob, budget=300, keep_iterates=True)
        series = diag.lyapunov_series(trace, prob)
        mono = np.all(np.diff(series.values) <= 1e-10)
        slack_ok = np.all(series.descent_slack >= -1e-10)
        lhs, rhs = diag.min_gap_bound_series(trace, prob)
        bound_ok = np.all(lhs <= rhs)
        rows.append((f"Lyapunov decrease (q={q:g})", bool(mono), f"{series.values.size} values"))
        rows.append(
            (
                f"descent slack >= 0 (q={q:g})",
                bool(slack_ok),
                f"min slack {float(series.descent_slack.min()):.2e}",
            )
        )
        rows.append((f"min-gap bound (q={q:g})", bool(bound_ok), f"{lhs.size} horizons"))
    return rows


def _power_rate_rows():
    rows = []
    for p in (1.3, 1.5, 1.9):
        modulus = 2.0 ** (2.0 - p)
        for q in (1.0, 1.5, 2.0):
            prob = CompositeProblem(
                PNormResidualLoss(CountedOperator([[1.0]]), [0.0], p), ZeroRegularizer(),
                certificate=([0.0], 0.0),
            )
            cfg = AdaPGConfig(q=q, gamma0=1.0, gamma_minus1=1.0, x_minus1=np.array([1.5]))
            trace = adapg_run(
                prob, cfg, StoppingRule(max_operator_calls=2 * 20000 + 4), keep_iterates=True
            )
            bound = diag.rate_envelope(trace, prob, nu=p - 1.0, holder_modulus=modulus)
            envelope = diag.best_so_far(trace.gaps)
            ok = bool(np.all(envelope <= bound))
            rows.append(
                (f"rate envelope p={p:g} q={q:g}", ok, f"{len(trace.records)} iterates")
            )
    return rows


def rate_suite():
    return _lyapunov_rows() + _power_rate_rows()


SUITES = {"invariants": invariant_suite, "rates": rate_suite}
