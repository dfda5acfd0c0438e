"""Four first-order methods behind one uniform run interface.

* ``adapg_run``      -- proximal gradient with an adaptive, linesearch-free
                        stepsize built from local curvature estimates at
                        consecutive iterates; 2 operator calls per iteration.
* ``nupg_run``       -- universal primal gradient with an epsilon-relaxed
                        backtracking test; 1 + #trials calls per iteration.
* ``fnupg_run``      -- its accelerated variant with estimate-sequence
                        weights; 3 + #trials calls per iteration.
* ``acfgm_run``      -- auto-conditioned fast gradient method driven by a
                        local curvature sequence; 2 calls per iteration.

All runs produce a :class:`SolverTrace` whose per-row cumulative operator
counts obey the per-iteration accounting stated above exactly; the traces of
different solvers on the same problem are therefore comparable by operator
calls, the cost unit of the benchmark harness.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linop import as_vector

__all__ = [
    "AdaPGConfig",
    "NUPGConfig",
    "ACFGMConfig",
    "StoppingRule",
    "TraceRecord",
    "SolverTrace",
    "DEFAULT_ACFGM_BETA",
    "adapg_stepsize",
    "adapg_run",
    "tune_initial_stepsize",
    "acfgm_initial_stepsize",
    "acfgm_sequence_step",
    "nupg_run",
    "fnupg_run",
    "acfgm_run",
]

# The printed value (1 - sqrt(3))/2 is negative and outside (0, 1); this is
# the conventional positive reading.  Configurable per run.
DEFAULT_ACFGM_BETA = 1.0 - math.sqrt(3.0) / 2.0

_LINESEARCH_CAP = 60


@dataclass
class AdaPGConfig:
    q: float
    gamma0: float
    gamma_minus1: float
    x_minus1: np.ndarray

    def __post_init__(self):
        if not 1.0 <= self.q <= 2.0:
            raise ValueError("q must lie in [1, 2]")
        if not self.gamma0 >= self.gamma_minus1 > 0:
            raise ValueError("need gamma0 >= gamma_minus1 > 0")
        self.x_minus1 = as_vector(self.x_minus1, name="x_minus1")


@dataclass
class NUPGConfig:
    epsilon: float
    eta: float
    gamma0: float
    x0: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be > 0")
        self.x0 = as_vector(self.x0, name="x0")


@dataclass
class ACFGMConfig:
    epsilon: float
    beta: float
    alpha: float
    gamma1: float
    x0: np.ndarray

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.gamma1 <= 0:
            raise ValueError("gamma1 must be > 0")
        self.x0 = as_vector(self.x0, name="x0")


@dataclass
class StoppingRule:
    """Stop on the first of: operator-call budget, optimality gap (needs a
    certificate), unit-step fixed-point residual.  At least one must be set."""

    max_operator_calls: int | None = None
    gap_threshold: float | None = None
    fixed_point_threshold: float | None = None

    def __post_init__(self):
        if (
            self.max_operator_calls is None
            and self.gap_threshold is None
            and self.fixed_point_threshold is None
        ):
            raise ValueError("at least one stopping criterion must be set")
        if self.max_operator_calls is not None and self.max_operator_calls <= 0:
            raise ValueError("max_operator_calls must be > 0")
        for name in ("gap_threshold", "fixed_point_threshold"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(slots=True)
class TraceRecord:
    iteration: int
    a_calls: int
    f_calls: int
    grad_calls: int
    cost: float
    gap: float | None
    gamma: float
    step_norm: float
    kkt_residual: float | None
    elapsed_s: float
    ls_trials: int | None = None


@dataclass
class SolverTrace:
    """Per-iteration records plus enough state to replay the analysis.

    ``records[k]`` describes iterate k; cumulative counters are
    non-decreasing and the record count equals iterations + 1.  When
    ``iterates`` is kept, diagnostics can recompute every analysis quantity
    of the run offline.
    """

    solver_id: str
    records: list[TraceRecord]
    final_x: np.ndarray
    stop_reason: str
    iterates: list[np.ndarray] | None = None
    start_point: np.ndarray | None = None  # the pre-initialization point, when distinct
    gamma_start: float | None = None  # stepsize paired with start_point
    q: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def gammas(self):
        return np.array([r.gamma for r in self.records])

    @property
    def costs(self):
        return np.array([r.cost for r in self.records])

    @property
    def gaps(self):
        return np.array([np.nan if r.gap is None else r.gap for r in self.records])

    @property
    def a_calls(self):
        return np.array([r.a_calls for r in self.records], dtype=np.int64)


def adapg_stepsize(gamma_k, gamma_km1, ell_k, lip_k, q):
    """Adaptive stepsize update from local curvature estimates.

    Returns ``gamma_k * min(sqrt(1/q + gamma_k/gamma_km1), t)`` where
    ``t = 1 / sqrt(2 * max(gamma_k^2 lip^2 - (2-q) gamma_k ell + 1 - q, 0))``
    and the second term is infinite when the clamped bracket is zero.
    """
    if gamma_k <= 0 or gamma_km1 <= 0:
        raise ValueError("stepsizes must be positive")
    first = math.sqrt(1.0 / q + gamma_k / gamma_km1)
    bracket = gamma_k * gamma_k * lip_k * lip_k - (2.0 - q) * gamma_k * ell_k + 1.0 - q
    if bracket > 0.0:
        second = 1.0 / math.sqrt(2.0 * bracket)
    else:
        second = math.inf
    return gamma_k * min(first, second)


def _gap(prob, cost):
    if prob.phi_star is None:
        return None
    return cost - prob.phi_star


def _kkt(g, x, grad):
    d = x - g.prox(1.0, x - grad)
    return float(math.sqrt(d @ d))


def _run_counter(prob):
    """Run-relative operator-call counter: calls made after run entry.

    Budgets and recorded a_calls measure the run's own consumption; shared
    setup work (instance certification, stepsize tuning) happens before the
    run and is not charged to it.
    """
    op = prob.f.operator
    base = op.forward_count + op.transpose_count
    return lambda: op.forward_count + op.transpose_count - base


def _over_budget(count, stop, margin=0):
    b = stop.max_operator_calls
    return b is not None and count > b - margin


def adapg_run(prob, cfg, stop, solver_id="adapg", keep_iterates=True):
    """Adaptive proximal gradient run.

    Initializes ``x0 = prox_{gamma0 g}(x_minus1 - gamma0 grad_f(x_minus1))``,
    then iterates ``x_{k+1} = prox_{gamma_{k+1} g}(x_k - gamma_{k+1} grad_f(x_k))``
    with the stepsize of :func:`adapg_stepsize` computed from the estimates

        ell_k = <dx, dg> / ||dx||^2,   lip_k = ||dg|| / ||dx||

    at consecutive iterates (0/0 read as 0).  Exactly one gradient evaluation
    per iteration, i.e. 2 operator calls.  Terminates on an exact fixed point
    or when the stopping rule fires.
    """
    f, g = prob.f, prob.g
    op = f.operator
    base = op.forward_count + op.transpose_count
    t0 = time.perf_counter()
    want_kkt = stop.fixed_point_threshold is not None
    budget = stop.max_operator_calls
    gap_threshold = stop.gap_threshold if prob.phi_star is not None else None
    phi_star = prob.phi_star
    q = cfg.q
    g_value, g_prox = g.value, g.prox
    perf = time.perf_counter

    x_prev = cfg.x_minus1.copy()
    _, grad_prev, _ = f.value_grad(x_prev)  # 2 calls (initialization)
    gamma_prev = cfg.gamma_minus1
    gamma = cfg.gamma0
    x = g_prox(gamma, x_prev - gamma * grad_prev)

    records = []
    append = records.append
    iterates = [] if keep_iterates else None
    f_calls = 0
    grad_calls = 1
    stop_reason = "fixed_point"
    last_recorded = x
    k = 0
    while True:
        if budget is not None and op.forward_count + op.transpose_count - base > budget:
            stop_reason = "budget"
            break
        fwd = f.forward(x)
        val, grad = f.value_grad_at(x, fwd)  # 2 calls total per iteration
        grad_calls += 1
        cost = val + g_value(x)
        gap = None if phi_star is None else cost - phi_star
        dxp = x - x_prev
        nd2 = float(dxp @ dxp)
        step_norm = math.sqrt(nd2)
        kkt = _kkt(g, x, grad) if want_kkt else None
        append(
            TraceRecord(
                k, op.forward_count + op.transpose_count - base, f_calls, grad_calls,
                cost, gap, gamma, step_norm, kkt, perf() - t0,
            )
        )
        last_recorded = x
        if keep_iterates:
            iterates.append(x.copy())
        if gap_threshold is not None and gap <= gap_threshold:
            stop_reason = "gap"
            break
        if kkt is not None and kkt <= stop.fixed_point_threshold:
            stop_reason = "fixed_point_residual"
            break

        dg = grad - grad_prev
        if nd2 == 0.0:
            ell = lip = 0.0  # coincident iterates: 0/0 convention
        else:
            ell = float(dxp @ dg) / nd2
            lip = math.sqrt(float(dg @ dg) / nd2)
        gamma_next = adapg_stepsize(gamma, gamma_prev, ell, lip, q)
        x_next = g_prox(gamma_next, x - gamma_next * grad)
        if (x_next == x).all():
            stop_reason = "fixed_point"
            break
        x_prev, grad_prev = x, grad
        gamma_prev, gamma = gamma, gamma_next
        x = x_next
        k += 1

    return SolverTrace(
        solver_id=solver_id,
        records=records,
        final_x=last_recorded.copy(),
        stop_reason=stop_reason,
        iterates=iterates,
        start_point=cfg.x_minus1.copy(),
        gamma_start=cfg.gamma_minus1,
        q=cfg.q,
    )


def tune_initial_stepsize(prob, x_init, gamma_guess, q):
    """Offline refinement of the initial stepsize pair.

    One proximal gradient probe from ``x_init`` with ``gamma_guess`` yields a
    local Lipschitz estimate L between the two points; the candidate is
    gamma0 = 1/L.  The probe is repeated once with the candidate when the
    first candidate came out more than a factor 10 below the guess.  The
    companion gamma_minus1 is the largest value <= gamma0 satisfying

        sqrt(1/q + gamma0/gamma_minus1) >= 1/sqrt(2 L gamma0^2),

    which keeps the first adaptive update proportional to 1/L; when the
    inequality already holds with equal stepsizes, gamma_minus1 = gamma0.
    Degenerate probes (no movement, or a flat direction with L = 0) return
    the guess unchanged for both values.
    """
    if gamma_guess <= 0:
        raise ValueError("gamma_guess must be > 0")
    f, g = prob.f, prob.g
    x_init = as_vector(x_init, f.dim, "x_init")
    _, grad0, _ = f.value_grad(x_init)

    gamma = float(gamma_guess)
    lip = None
    for attempt in range(2):
        probe = g.prox(gamma, x_init - gamma * grad0)
        dx = probe - x_init
        nd2 = float(dx @ dx)
        if nd2 == 0.0:
            return gamma_guess, gamma_guess
        _, gradp, _ = f.value_grad(probe)
        dg = gradp - grad0
        ng2 = float(dg @ dg)
        if ng2 == 0.0:
            return gamma_guess, gamma_guess
        lip = math.sqrt(ng2 / nd2)
        candidate = 1.0 / lip
        substantially_smaller = candidate * 10.0 < gamma
        gamma = candidate
        if not (attempt == 0 and substantially_smaller):
            break

    gamma0 = gamma
    target = 1.0 / (2.0 * lip * gamma0 * gamma0)
    if target - 1.0 / q <= 1.0:
        gamma_minus1 = gamma0
    else:
        gamma_minus1 = gamma0 / (target - 1.0 / q)
    return gamma0, gamma_minus1


def acfgm_initial_stepsize(prob, x_init, gamma_probe, beta, epsilon):
    """First stepsize for the auto-conditioned method: the midpoint of the
    admissible interval [beta/(4(1-beta)c), 1/(3c)], with the curvature
    estimate c taken between ``x_init`` and one offline proximal gradient
    probe.  Degenerate probes fall back to ``gamma_probe``."""
    if gamma_probe <= 0:
        raise ValueError("gamma_probe must be > 0")
    f, g = prob.f, prob.g
    x_init = as_vector(x_init, f.dim, "x_init")
    _, grad0, _ = f.value_grad(x_init)
    probe = g.prox(gamma_probe, x_init - gamma_probe * grad0)
    dx = probe - x_init
    nd2 = float(dx @ dx)
    if nd2 == 0.0:
        return gamma_probe
    _, gradp, _ = f.value_grad(probe)
    dg = gradp - grad0
    ng2 = float(dg @ dg)
    c1 = (math.sqrt(nd2 * ng2 + (epsilon / 4.0) ** 2) - epsilon / 4.0) / nd2
    if c1 <= 0.0:
        return gamma_probe
    lo = beta / (4.0 * (1.0 - beta) * c1)
    hi = 1.0 / (3.0 * c1)
    return 0.5 * (lo + hi)


def acfgm_sequence_step(tau_prev, tau, gamma, c, alpha, beta):
    """One step of the auto-conditioned averaging/stepsize recursion.

    Given tau_k (``tau_prev``), tau_{k+1} (``tau``), gamma_{k+1} (``gamma``)
    and the curvature estimate c_{k+1} (``c``), returns

        tau_{k+2}   = tau + alpha/2 + 2 (1 - alpha) gamma c / (beta tau)
        gamma_{k+2} = min((tau_prev + 1)/tau * gamma, beta tau / (4 c))
    """
    tau_next = tau + alpha / 2.0 + 2.0 * (1.0 - alpha) * gamma * c / (beta * tau)
    gamma_next = min((tau_prev + 1.0) / tau * gamma, beta * tau / (4.0 * c))
    return tau_next, gamma_next


def nupg_run(prob, cfg, stop, solver_id="nupg", keep_iterates=True):
    """Universal primal gradient run with epsilon-relaxed backtracking.

    Each iteration tries ``gamma = 2 * gamma_prev * eta^m`` for the smallest
    m >= 0 such that the candidate ``x+ = prox_{gamma g}(x - gamma grad)``
    satisfies

        f(x+) <= f(x) + <grad, x+ - x> + ||x+ - x||^2 / (2 gamma) + eps/2.

    The forward product of the accepted candidate is cached, so an iteration
    costs one transpose (the gradient) plus one forward per trial:
    1 + #trials operator calls.
    """
    f, g = prob.f, prob.g
    calls = _run_counter(prob)
    t0 = time.perf_counter()
    want_kkt = stop.fixed_point_threshold is not None
    eps, eta = cfg.epsilon, cfg.eta

    x = cfg.x0.copy()
    fwd = f.forward(x)  # 1 call (initialization)
    fx = f.value_at(x, fwd)
    f_calls = 1
    grad_calls = 0
    gamma = cfg.gamma0

    records = []
    iterates = [] if keep_iterates else None
    stop_reason = "fixed_point"
    last_recorded = x
    prev_trials = None
    prev_step = 0.0
    k = 0
    while True:
        if _over_budget(calls(), stop):
            stop_reason = "budget"
            break
        grad = f.grad_at(x, fwd)  # the iteration's single transpose
        grad_calls += 1
        cost = fx + g.value(x)
        gap = _gap(prob, cost)
        kkt = _kkt(g, x, grad) if want_kkt else None
        records.append(
            TraceRecord(
                k, calls(), f_calls, grad_calls, cost, gap, gamma,
                prev_step, kkt, time.perf_counter() - t0, ls_trials=prev_trials,
            )
        )
        last_recorded = x
        if keep_iterates:
            iterates.append(x.copy())
        if gap is not None and stop.gap_threshold is not None and gap <= stop.gap_threshold:
            stop_reason = "gap"
            break
        if kkt is not None and kkt <= stop.fixed_point_threshold:
            stop_reason = "fixed_point_residual"
            break

        trial = 2.0 * gamma
        trials = 0
        halvings = 0
        abandoned = False
        while True:
            if _over_budget(calls(), stop, margin=-1):  # a trial would exceed budget + 2
                abandoned = True
                break
            xc = g.prox(trial, x - trial * grad)
            fwdc = f.forward(xc)  # one forward per trial
            trials += 1
            fc = f.value_at(xc, fwdc)
            f_calls += 1
            d = xc - x
            if fc <= fx + float(grad @ d) + float(d @ d) / (2.0 * trial) + 0.5 * eps:
                break
            if halvings >= _LINESEARCH_CAP:
                raise RuntimeError(
                    f"backtracking failed after {_LINESEARCH_CAP} halvings (numerical fault)"
                )
            trial *= eta
            halvings += 1
        if abandoned:
            stop_reason = "budget"
            break
        if np.array_equal(xc, x):
            stop_reason = "fixed_point"
            break
        dstep = xc - x
        prev_step = float(math.sqrt(dstep @ dstep))
        prev_trials = trials
        x, fwd, fx, gamma = xc, fwdc, fc, trial
        k += 1

    return SolverTrace(
        solver_id=solver_id,
        records=records,
        final_x=last_recorded.copy(),
        stop_reason=stop_reason,
        iterates=iterates,
    )


def fnupg_run(prob, cfg, stop, solver_id="fnupg", keep_iterates=True):
    """Universal fast gradient run (estimate-sequence accelerated variant).

    State (x_k, v_k, A_k) with trial modulus M (the inverse stepsize).  Each
    iteration fixes the extrapolation point once,

        a solves M a^2 = A_k + a,  tau = a / (A_k + a),
        y = tau v_k + (1 - tau) x_k,

    evaluates f and grad at y, then backtracks over M (doubling it per failed
    trial, starting from half the previous accepted value); a trial computes

        v+ = prox_{a_m g}(v_k - a_m grad),  x+ = tau_m v+ + (1 - tau_m) x_k

    and accepts when f(x+) <= f(y) + <grad, x+ - y> + M ||x+ - y||^2 / 2
    + eps a_m / (2 (A_k + a_m)).  Forward products of x_k and v_k are taken
    fresh each iteration and every combination point reuses them by
    linearity, so an iteration costs exactly 3 + #trials operator calls.
    """
    f, g = prob.f, prob.g
    calls = _run_counter(prob)
    t0 = time.perf_counter()
    eps, eta = cfg.epsilon, cfg.eta

    x = cfg.x0.copy()
    v = cfg.x0.copy()
    acc = 0.0  # sum of estimate-sequence weights
    mod = 1.0 / cfg.gamma0

    fwd0 = f.forward(x)  # 1 call (initialization)
    fx = f.value_at(x, fwd0)
    f_calls = 1
    grad_calls = 0

    records = [
        TraceRecord(
            0, calls(), f_calls, grad_calls, fx + g.value(x),
            _gap(prob, fx + g.value(x)), cfg.gamma0, 0.0, None,
            time.perf_counter() - t0,
        )
    ]
    iterates = [x.copy()] if keep_iterates else None
    if records[0].gap is not None and stop.gap_threshold is not None and records[0].gap <= stop.gap_threshold:
        return SolverTrace(solver_id, records, x.copy(), "gap", iterates)

    stop_reason = "fixed_point"
    k = 0
    while True:
        if _over_budget(calls(), stop, margin=2):  # minimal iteration cost is 4 calls
            stop_reason = "budget"
            break
        trial_mod = 0.5 * mod
        a = (1.0 + math.sqrt(1.0 + 4.0 * trial_mod * acc)) / (2.0 * trial_mod)
        tau = a / (acc + a)
        y = tau * v + (1.0 - tau) * x
        fwd_x = f.forward(x)
        fwd_v = f.forward(v)
        fwd_y = tau * fwd_v + (1.0 - tau) * fwd_x
        fy = f.value_at(y, fwd_y)
        f_calls += 1
        gy = f.grad_at(y, fwd_y)
        grad_calls += 1

        trials = 0
        halvings = 0
        abandoned = False
        m = trial_mod
        while True:
            if _over_budget(calls(), stop, margin=-1):
                abandoned = True
                break
            a_m = (1.0 + math.sqrt(1.0 + 4.0 * m * acc)) / (2.0 * m)
            acc_m = acc + a_m
            tau_m = a_m / acc_m
            vh = g.prox(a_m, v - a_m * gy)
            fwd_vh = f.forward(vh)  # one forward per trial
            trials += 1
            xh = tau_m * vh + (1.0 - tau_m) * x
            fwd_xh = tau_m * fwd_vh + (1.0 - tau_m) * fwd_x
            fxh = f.value_at(xh, fwd_xh)
            f_calls += 1
            d = xh - y
            if fxh <= fy + float(gy @ d) + 0.5 * m * float(d @ d) + eps * a_m / (2.0 * acc_m):
                break
            if halvings >= _LINESEARCH_CAP:
                raise RuntimeError(
                    f"backtracking failed after {_LINESEARCH_CAP} halvings (numerical fault)"
                )
            m /= eta
            halvings += 1
        if abandoned:
            stop_reason = "budget"
            break
        dstep = xh - x
        step_norm = float(math.sqrt(dstep @ dstep))
        frozen = np.array_equal(xh, x)
        x_new = xh
        cost = fxh + g.value(x_new)
        gap = _gap(prob, cost)
        k += 1
        records.append(
            TraceRecord(
                k, calls(), f_calls, grad_calls, cost, gap,
                1.0 / m, step_norm, None, time.perf_counter() - t0,
                ls_trials=trials,
            )
        )
        if keep_iterates:
            iterates.append(x_new.copy())
        x, v, acc, mod, fx = x_new, vh, acc_m, m, fxh
        if frozen:
            stop_reason = "fixed_point"
            break
        if gap is not None and stop.gap_threshold is not None and gap <= stop.gap_threshold:
            stop_reason = "gap"
            break
        if stop.fixed_point_threshold is not None and step_norm <= stop.fixed_point_threshold:
            # gradient at x is never formed here; the step norm stands in
            stop_reason = "fixed_point_residual"
            break

    return SolverTrace(
        solver_id=solver_id,
        records=records,
        final_x=x.copy(),
        stop_reason=stop_reason,
        iterates=iterates,
    )


def acfgm_run(prob, cfg, stop, solver_id="acfgm", keep_iterates=True):
    """Auto-conditioned fast gradient run.

    With mixing weight beta and averaging weights tau, each iteration does

        z_{k+1} = prox_{gamma_{k+1} g}(y_k - gamma_{k+1} grad_f(x_k))
        y_{k+1} = (1 - beta_{k+1}) y_k + beta_{k+1} z_{k+1}
        x_{k+1} = (z_{k+1} + tau_{k+1} x_k) / (1 + tau_{k+1})

    with beta_1 = 0, beta_k = beta for k >= 2, tau_1 = 0, tau_2 = 2, and for
    k >= 2

        tau_{k+1}   = tau_k + alpha/2 + 2 (1 - alpha) gamma_k c_k / (beta tau_k)
        gamma_{k+1} = min((tau_{k-1} + 1)/tau_k * gamma_k, beta tau_k / (4 c_k))

    where c_k is the local curvature estimate (a regularized gradient-ratio
    at k = 1, a Bregman-distance ratio with slack eps/tau_k afterwards) and
    gamma_2 = beta / (2 c_1).  The forward product of x_{k+1} follows from
    z_{k+1} and x_k by linearity, so an iteration costs exactly 2 operator
    calls (one gradient, one objective value).
    """
    f, g = prob.f, prob.g
    calls = _run_counter(prob)
    t0 = time.perf_counter()
    want_kkt = stop.fixed_point_threshold is not None
    beta, alpha, eps = cfg.beta, cfg.alpha, cfg.epsilon

    x = cfg.x0.copy()
    y = cfg.x0.copy()
    fwd = f.forward(x)  # initialization: 2 calls
    fx = f.value_at(x, fwd)
    gx = f.grad_at(x, fwd)
    f_calls = 1
    grad_calls = 1

    gamma = cfg.gamma1
    tau_prev = None  # tau_k while gamma is gamma_{k+1}
    tau = 0.0  # tau_{k+1}

    cost0 = fx + g.value(x)
    records = [
        TraceRecord(
            0, calls(), f_calls, grad_calls, cost0, _gap(prob, cost0),
            gamma, 0.0, _kkt(g, x, gx) if want_kkt else None,
            time.perf_counter() - t0,
        )
    ]
    iterates = [x.copy()] if keep_iterates else None
    if records[0].gap is not None and stop.gap_threshold is not None and records[0].gap <= stop.gap_threshold:
        return SolverTrace(solver_id, records, x.copy(), "gap", iterates)

    taus = [0.0]
    cs = []
    gammas_seq = [gamma]
    stop_reason = "fixed_point"
    k = 0
    while True:
        if _over_budget(calls(), stop):
            stop_reason = "budget"
            break
        z = g.prox(gamma, y - gamma * gx)
        beta_k1 = 0.0 if k == 0 else beta
        y = (1.0 - beta_k1) * y + beta_k1 * z
        x_new = (z + tau * x) / (1.0 + tau)
        fwd_z = f.forward(z)
        fwd_new = (fwd_z + tau * fwd) / (1.0 + tau)
        fx_new = f.value_at(x_new, fwd_new)
        f_calls += 1
        gx_new = f.grad_at(x_new, fwd_new)
        grad_calls += 1
        cost = fx_new + g.value(x_new)
        gap = _gap(prob, cost)
        dx = x_new - x
        step_norm = float(math.sqrt(dx @ dx))
        kkt = _kkt(g, x_new, gx_new) if want_kkt else None
        k += 1
        records.append(
            TraceRecord(
                k, calls(), f_calls, grad_calls, cost, gap, gamma,
                step_norm, kkt, time.perf_counter() - t0,
            )
        )
        if keep_iterates:
            iterates.append(x_new.copy())
        if np.array_equal(x_new, x):
            x = x_new
            stop_reason = "fixed_point"
            break
        if gap is not None and stop.gap_threshold is not None and gap <= stop.gap_threshold:
            x, fwd, fx, gx = x_new, fwd_new, fx_new, gx_new
            stop_reason = "gap"
            break
        if kkt is not None and kkt <= stop.fixed_point_threshold:
            x, fwd, fx, gx = x_new, fwd_new, fx_new, gx_new
            stop_reason = "fixed_point_residual"
            break

        dg = gx_new - gx
        nd2 = float(dx @ dx)
        if k == 1:
            c = (math.sqrt(nd2 * float(dg @ dg) + (eps / 4.0) ** 2) - eps / 4.0) / nd2
            lo = beta / (4.0 * (1.0 - beta) * c)
            hi = 1.0 / (3.0 * c)
            if not lo <= cfg.gamma1 <= hi:
                warnings.warn(
                    f"gamma1={cfg.gamma1:.3e} outside admissible interval "
                    f"[{lo:.3e}, {hi:.3e}] implied by the first curvature estimate",
                    RuntimeWarning,
                    stacklevel=2,
                )
            gamma_next = beta / (2.0 * c)
            tau_next = 2.0
        else:
            denom = 2.0 * (fx - fx_new - float(gx_new @ (x - x_new))) + eps / tau
            if denom <= 0.0:
                raise RuntimeError(
                    "curvature estimate denominator is not positive (convexity violated?)"
                )
            c = float(dg @ dg) / denom
            tau_next, gamma_next = acfgm_sequence_step(tau_prev, tau, gamma, c, alpha, beta)
        cs.append(c)
        taus.append(tau_next)
        gammas_seq.append(gamma_next)
        tau_prev, tau, gamma = tau, tau_next, gamma_next
        x, fwd, fx, gx = x_new, fwd_new, fx_new, gx_new

    return SolverTrace(
        solver_id=solver_id,
        records=records,
        final_x=x.copy(),
        stop_reason=stop_reason,
        iterates=iterates,
        extras={"beta": beta, "alpha": alpha, "tau": taus, "c": cs, "gamma": gammas_seq},
    )
