"""Acceptance suite.

One test per acceptance criterion.  Each runs at its stated tolerance and
prints a single pass/fail line (visible with ``pytest -s`` or in failure
output).  Shared fixtures build the run collections once per session.
"""

import math
import time

import numpy as np
import pytest

import proxgrad as pg
from proxgrad import diagnostics as diag
from proxgrad.objectives import signed_power
from conftest import central_difference_gradient, family_losses, power_gradient_modulus


def _report(number, ok, detail=""):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    assert ok, line


# -------------------------------------------------------------- fixtures

# 20 generated sparse-regression instances, all within 200 x 500
LASSO_CONFIGS = [
    (50, 150, 10, 1.3, 0.5, 0),
    (60, 180, 12, 1.5, 1.0, 1),
    (70, 200, 15, 1.7, 2.0, 2),
    (80, 240, 16, 1.9, 1.0, 3),
    (90, 270, 18, 1.3, 1.0, 4),
    (100, 300, 20, 1.5, 0.5, 5),
    (110, 330, 22, 1.7, 1.0, 6),
    (120, 360, 24, 1.9, 2.0, 7),
    (130, 390, 26, 1.3, 2.0, 8),
    (140, 420, 28, 1.5, 1.0, 9),
    (150, 450, 30, 1.7, 0.5, 10),
    (160, 480, 32, 1.9, 1.0, 11),
    (170, 490, 34, 1.3, 1.0, 12),
    (180, 500, 36, 1.5, 2.0, 13),
    (190, 500, 38, 1.7, 1.0, 14),
    (200, 500, 40, 1.9, 0.5, 15),
    (40, 120, 8, 1.5, 1.0, 16),
    (45, 135, 9, 1.7, 1.0, 17),
    (55, 165, 11, 1.9, 1.0, 18),
    (65, 195, 13, 1.3, 1.0, 19),
]

Q_VALUES = (1.0, 1.5, 2.0)
POWERS = (1.3, 1.5, 1.9)
POWER_HORIZON = 100_000


@pytest.fixture(scope="session")
def lasso_suite():
    """Adaptive runs with Lyapunov series on 20 generated instances x 3 q."""
    suite = []
    for m, n, k, p, lam, seed in LASSO_CONFIGS:
        inst = pg.generate_pnorm_lasso(m, n, k, p, lam, seed)
        for q in Q_VALUES:
            prob = pg.lasso_problem(inst)
            trace = pg.run_solver(f"adapg:q={q:g}", prob, budget=400, keep_iterates=True)
            series = diag.lyapunov_series(trace, prob)
            suite.append((prob, trace, series))
    return suite


@pytest.fixture(scope="session")
def power_suite():
    """1-D power-loss runs up to 1e5 iterations for every (p, q); timed.

    The cyclic collector is paused while the runs allocate millions of small
    record objects; it is restored before the traces are consumed.
    """
    import gc

    t0 = time.perf_counter()
    runs = []
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for p in POWERS:
            for q in Q_VALUES:
                prob = pg.CompositeProblem(
                    pg.PNormResidualLoss(pg.CountedOperator([[1.0]]), [0.0], p),
                    pg.ZeroRegularizer(),
                    certificate=([0.0], 0.0),
                )
                cfg = pg.AdaPGConfig(
                    q=q, gamma0=1.0, gamma_minus1=1.0, x_minus1=np.array([1.5])
                )
                trace = pg.adapg_run(
                    prob, cfg, pg.StoppingRule(max_operator_calls=2 * POWER_HORIZON + 4)
                )
                runs.append((p, q, prob, trace))
    finally:
        if gc_was_enabled:
            gc.enable()
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="session")
def baseline_traces():
    """Backtracking/auto-conditioned runs for the accounting criterion."""
    import warnings

    traces = []
    for m, n, k, p, lam, seed in LASSO_CONFIGS[:5]:
        inst = pg.generate_pnorm_lasso(m, n, k, p, lam, seed)
        for spec in ("nupg", "fnupg", "acfgm"):
            with warnings.catch_warnings():
                # the probe-based first stepsize may fall just outside the
                # interval implied by the realized curvature; that is the
                # documented warn-and-continue path
                warnings.simplefilter("ignore", RuntimeWarning)
                traces.append(pg.run_solver(spec, pg.lasso_problem(inst), budget=300))
    return traces


@pytest.fixture(scope="session")
def figure_experiment(tmp_path_factory):
    """The reference experiment: generated instance (100, 300, 30), p = 1.5,
    lam = 1.0, seed 50, all six solvers, budget 2e4 operator calls."""
    out = tmp_path_factory.mktemp("figure") / "lasso-small.csv"
    cfg = pg.preset("lasso-small")
    cfg.budget = 20_000
    cfg.out = str(out)
    return pg.run_experiment(cfg)


# -------------------------------------------------------------- criteria


def test_criterion_1_forward_map_identity(rng):
    t0 = time.perf_counter()
    worst = 0.0
    for make in family_losses(seed=101).values():
        loss = make()
        dim = loss.dim
        for _ in range(10_000):
            x0 = rng.normal(size=dim)
            x1 = rng.normal(size=dim)
            g0 = loss.value_grad(x0)[1]
            g1 = loss.value_grad(x1)[1]
            gamma = float(rng.uniform(0.01, 10.0))
            est = diag.estimates(x0, x1, g0, g1, gamma, nu=1.0)
            direct_sq = est.forward_lip**2
            formula = 1.0 + gamma**2 * est.lip**2 - 2.0 * gamma * est.ell
            worst = max(worst, abs(direct_sq - formula) / (1.0 + direct_sq))
    elapsed = time.perf_counter() - t0
    _report(
        1,
        worst <= 1e-9 and elapsed < 10.0,
        f"max identity defect {worst:.2e} over 4x10^4 triples in {elapsed:.1f}s",
    )


def test_criterion_2_lyapunov_descent(lasso_suite):
    worst = -np.inf
    for _, _, series in lasso_suite:
        worst = max(worst, float(np.max(np.diff(series.values))))
    _report(2, worst <= 1e-10, f"max Lyapunov increase {worst:.2e} over {len(lasso_suite)} runs")


def test_criterion_3_descent_slack(lasso_suite):
    worst = np.inf
    for _, _, series in lasso_suite:
        worst = min(worst, float(np.min(series.descent_slack)))
    _report(3, worst >= -1e-10, f"min descent slack {worst:.2e}")


def test_criterion_4_min_gap_bound(lasso_suite):
    ok = True
    for prob, trace, _ in lasso_suite:
        lhs, rhs = diag.min_gap_bound_series(trace, prob)
        ok = ok and bool(np.all(lhs <= rhs))
    _report(4, ok, f"best-gap bound held at every horizon of {len(lasso_suite)} runs")


def test_criterion_5_rate_envelope(power_suite):
    runs, run_time = power_suite
    t0 = time.perf_counter()
    ok = True
    worst_ratio = 0.0
    for p, q, prob, trace in runs:
        modulus = 2.0 ** (2.0 - p)
        grid_max = power_gradient_modulus(p)
        assert grid_max <= modulus * (1.0 + 1e-6)  # verified before use
        horizon = min(len(trace.records), POWER_HORIZON + 1)
        bound = diag.rate_envelope(trace, prob, nu=p - 1.0, holder_modulus=modulus)[:horizon]
        envelope = diag.best_so_far(trace.gaps)[:horizon]
        ok = ok and bool(np.all(envelope <= bound))
        worst_ratio = max(worst_ratio, float(np.max(envelope / bound)))
    elapsed = run_time + (time.perf_counter() - t0)
    _report(
        5,
        ok and elapsed < 30.0,
        f"envelope held for all K (worst gap/bound {worst_ratio:.3f}) in {elapsed:.1f}s",
    )


def test_criterion_6_ratio_cap_and_scaled_step_bound(lasso_suite, power_suite):
    runs, _ = power_suite
    ok_cap = True
    for _, trace, series in lasso_suite:
        gammas = trace.gammas
        rho = gammas[1:] / gammas[:-1]
        ok_cap = ok_cap and bool(np.all(rho <= series.rho_max * (1.0 + 1e-12)))

    ok_lambda = True
    checked = 0
    for p, q, prob, trace in runs:
        nu = p - 1.0
        pts = np.concatenate([[float(trace.start_point[0])], [float(x[0]) for x in trace.iterates]])
        grads = signed_power(pts, p - 1.0)  # the loss gradient, bitwise
        gammas = np.concatenate([[trace.gamma_start], trace.gammas])
        rho = gammas[1:] / gammas[:-1]
        cap = diag.stepsize_ratio_cap(q, gammas[1], gammas[0])
        ok_cap = ok_cap and bool(np.all(rho <= cap * (1.0 + 1e-12)))
        # replicate the in-run estimate arithmetic operation-for-operation so
        # the branch classification matches the updates the solver took; a
        # 1-element dot product is the same IEEE multiply as the elementwise one
        n_steps = len(pts) - 2  # updates with a successor stepsize
        dxp = np.diff(pts)[:n_steps]
        dg = np.diff(grads)[:n_steps]
        nd2 = dxp * dxp
        move = nd2 != 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ell = (dxp * dg) / nd2
            lip = np.sqrt((dg * dg) / nd2)
            g_k = gammas[1:-1][:n_steps]
            first = np.sqrt(1.0 / q + g_k / gammas[:-2][:n_steps])
            bracket = g_k * g_k * lip * lip - (2.0 - q) * g_k * ell + 1.0 - q
            second = np.where(bracket > 0.0, 1.0 / np.sqrt(2.0 * np.abs(bracket)), np.inf)
            curvature_limited = move & (second <= first)
            step = np.sqrt(nd2)
            lam = g_k * step ** (nu - 1.0)
            lip_nu = np.sqrt(dg * dg) / step**nu
        sel = curvature_limited
        lam_ok = lam[sel] >= (1.0 - 1e-12) / (math.sqrt(2.0) * lip_nu[sel] * cap)
        rho_ok = rho[1:][:n_steps][sel] >= (1.0 - 1e-12) / (
            math.sqrt(2.0) * lam[sel] * lip_nu[sel]
        )
        ok_lambda = ok_lambda and bool(np.all(lam_ok)) and bool(np.all(rho_ok))
        checked += int(np.count_nonzero(sel))
    _report(
        6,
        ok_cap and ok_lambda and checked > 0,
        f"ratio cap on all runs; scaled-step bound on {checked} curvature-limited updates",
    )


def test_criterion_7_accounting(lasso_suite, power_suite, baseline_traces, figure_experiment):
    runs, _ = power_suite
    ok = True

    def check(trace):
        nonlocal ok
        calls = trace.a_calls
        deltas = np.diff(calls)
        sid = trace.solver_id
        if sid.startswith("adapg") or sid.startswith("acfgm"):
            ok = ok and bool(np.all(deltas == 2))
        elif sid.startswith("nupg"):
            for i, d in enumerate(deltas, start=1):
                ok = ok and d == 1 + trace.records[i].ls_trials
        elif sid.startswith("fnupg"):
            for i, d in enumerate(deltas, start=1):
                ok = ok and d == 3 + trace.records[i].ls_trials
        else:
            ok = False

    total = 0
    for _, trace, _ in lasso_suite:
        check(trace)
        total += 1
    for _, _, _, trace in runs:
        check(trace)
        total += 1
    for trace in baseline_traces:
        check(trace)
        total += 1
    for trace in figure_experiment.traces.values():
        check(trace)
        total += 1
    _report(7, ok, f"per-iteration operator deltas exact on {total} runs")


def test_criterion_8_generator_certification():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for seed in range(100):
        m = int(rng.integers(10, 120))
        n = int(rng.integers(m + 1, 3 * m + 20))
        k = int(rng.integers(1, max(2, m // 2)))
        p = float(rng.uniform(1.1, 1.95))
        lam = float(rng.uniform(0.3, 3.0))
        inst = pg.generate_pnorm_lasso(m, n, k, p, lam, seed=seed)
        # independent subgradient-inclusion check, no generator internals
        r = inst.A @ inst.x_star - inst.b
        grad = inst.A.T @ signed_power(r, inst.p - 1.0)
        on = inst.x_star != 0.0
        defect = max(
            float(np.max(np.abs(grad[on] + inst.lam * np.sign(inst.x_star[on])))),
            float(np.max(np.maximum(np.abs(grad[~on]) - inst.lam, 0.0))),
        )
        worst = max(worst, defect)
        prob = pg.lasso_problem(inst)
        worst = max(worst, prob.kkt_residual(inst.x_star))
    _report(8, worst <= 1e-10, f"worst certification defect {worst:.2e} over 100 instances")


def test_criterion_9_qualitative_ordering(figure_experiment):
    def calls_to(sid, threshold):
        trace = figure_experiment.traces[sid]
        for rec in trace.records:
            if rec.gap is not None and rec.gap <= threshold:
                return rec.a_calls
        return None

    ada = calls_to("adapg:q=1.5", 1e-6)
    base = calls_to("nupg", 1e-6)
    ok = ada is not None and base is not None and ada < base
    _report(9, ok, f"calls to gap 1e-6: adaptive {ada} vs backtracking {base}")


def test_criterion_10_gradient_checks(rng):
    worst = 0.0
    for family, make in family_losses(seed=202).items():
        checked = 0
        while checked < 100:
            loss = make()
            x = rng.normal(size=loss.dim)
            probe = loss.operator.kernel @ x
            if family == "hinge" and np.min(np.abs(1.0 - loss.labels * probe)) <= 1e-3:
                continue
            if family in ("pnorm", "mixture") and np.min(np.abs(probe - loss.b)) <= 1e-2:
                continue
            _, grad, _ = loss.value_grad(x)
            fd = central_difference_gradient(lambda z: loss.value_at(z, loss.forward(z)), x)
            rel = np.linalg.norm(fd - grad) / max(1.0, np.linalg.norm(grad))
            worst = max(worst, rel)
            checked += 1
    _report(10, worst <= 1e-5, f"max relative gradient defect {worst:.2e} (4 families x 100 pts)")


def test_criterion_11_acfgm_recursion():
    beta = pg.DEFAULT_ACFGM_BETA
    # tau_1 = 0, tau_2 = 2, gamma_2 = beta/(2 c1); with alpha = 0 and c2 = c1
    # the recursion gives tau_3 = 2 + gamma_2 c1 / beta = 2.5 exactly
    c1 = 1.0
    gamma2 = beta / (2.0 * c1)
    tau3, gamma3 = pg.acfgm_sequence_step(0.0, 2.0, gamma2, c1, 0.0, beta)
    exact = tau3 == 2.5
    assert gamma3 == min(0.5 * gamma2, beta * 2.0 / (4.0 * c1))
    for c in (0.25, 1.0, 3.7, 128.0):
        t3, _ = pg.acfgm_sequence_step(0.0, 2.0, beta / (2.0 * c), c, 0.0, beta)
        assert t3 == pytest.approx(2.5, rel=1e-15)

    # sequence fields match the recursions on the first iterations of the
    # 1-D quadratic run
    prob = pg.CompositeProblem(
        pg.PNormResidualLoss(pg.CountedOperator([[1.0]]), [0.0], 2.0),
        pg.ZeroRegularizer(),
        certificate=([0.0], 0.0),
    )
    start = np.array([3.0])
    eps = 1e-12
    gamma1 = pg.acfgm_initial_stepsize(prob, start, 1.0, beta, eps)
    cfg = pg.ACFGMConfig(epsilon=eps, beta=beta, alpha=0.0, gamma1=gamma1, x0=start)
    trace = pg.acfgm_run(prob, cfg, pg.StoppingRule(max_operator_calls=16))
    xs = [float(x[0]) for x in trace.iterates]
    taus, cs, gammas = trace.extras["tau"], trace.extras["c"], trace.extras["gamma"]
    nd2 = (xs[1] - xs[0]) ** 2
    c1_run = (math.sqrt(nd2 * (xs[1] - xs[0]) ** 2 + (eps / 4.0) ** 2) - eps / 4.0) / nd2
    symbolic = (
        taus[0] == 0.0
        and taus[1] == 2.0
        and cs[0] == pytest.approx(c1_run, rel=1e-12)
        and gammas[1] == pytest.approx(beta / (2.0 * cs[0]), rel=1e-15)
    )
    for k in range(2, 5):
        num = (xs[k] - xs[k - 1]) ** 2  # gradient of x^2/2 is x
        den = 2.0 * (0.5 * xs[k - 1] ** 2 - 0.5 * xs[k] ** 2 - xs[k] * (xs[k - 1] - xs[k]))
        ck = num / (den + eps / taus[k - 1])
        t_next, g_next = pg.acfgm_sequence_step(
            taus[k - 2], taus[k - 1], gammas[k - 1], cs[k - 1], 0.0, beta
        )
        symbolic = (
            symbolic
            and cs[k - 1] == pytest.approx(ck, rel=1e-9)
            and taus[k] == t_next
            and gammas[k] == g_next
        )
    _report(11, exact and symbolic, "tau_3 = 2.5 exactly; sequences replayed on the quadratic")
