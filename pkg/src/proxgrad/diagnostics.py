"""Analysis quantities recomputed from solver traces.

Everything here is an offline check: local curvature and Hölder-order
estimates at consecutive iterates, the Lyapunov series with its per-iteration
descent slack, the min-gap bound, and the sublinear rate envelope.  The
Hölder order ``nu`` is exclusively a diagnostics input -- no solver consumes
it -- mirroring the fact that the adaptive method itself never needs to know
the smoothness order it is exploiting.

These functions re-evaluate the problem oracles at stored iterates, so the
operator counters of the problem advance; recorded traces are immutable and
unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "HolderEstimates",
    "LyapunovSeries",
    "estimates",
    "stepsize_ratio_cap",
    "lyapunov_series",
    "min_gap_bound",
    "min_gap_bound_series",
    "rate_envelope",
    "best_so_far",
    "fne_chain",
    "residual_ratio_bound",
]


@dataclass
class HolderEstimates:
    """Per-step curvature estimates between two iterates.

    ``ell`` and ``lip`` are the inner-product and norm-ratio Lipschitz
    estimates; ``ell_scaled``/``lip_scaled`` their order-``nu`` analogues
    (denominators ``||dx||^(1+nu)`` and ``||dx||^nu``).  ``scaled_step`` is
    the implicit stepsize ``lambda`` with ``gamma = lambda * ||dx||^(1-nu)``;
    the algebra gives ``scaled_step * lip_scaled == gamma * lip`` and likewise
    for ``ell``.  ``forward_lip`` is the direct Lipschitz estimate of the
    forward map ``x -> x - gamma * grad f(x)``; squared it equals
    ``1 + gamma^2 lip^2 - 2 gamma ell`` identically.  ``forward_holder`` is
    its order-``nu`` scaling.  Coincident points yield all-zero estimates
    (the 0/0 convention).
    """

    gamma: float
    nu: float
    step_norm: float
    ell: float
    lip: float
    ell_scaled: float
    lip_scaled: float
    scaled_step: float
    forward_lip: float
    forward_holder: float


def estimates(x_prev, x_cur, g_prev, g_cur, gamma, nu):
    """Compute :class:`HolderEstimates` from two points and their gradients."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    dx = np.asarray(x_cur, dtype=float) - np.asarray(x_prev, dtype=float)
    dg = np.asarray(g_cur, dtype=float) - np.asarray(g_prev, dtype=float)
    nd2 = float(dx @ dx)
    if nd2 == 0.0:
        return HolderEstimates(gamma, nu, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    nd = math.sqrt(nd2)
    inner = float(dx @ dg)
    gnorm = math.sqrt(float(dg @ dg))
    h = dx - gamma * dg
    forward_lip = math.sqrt(float(h @ h)) / nd
    return HolderEstimates(
        gamma=gamma,
        nu=nu,
        step_norm=nd,
        ell=inner / nd2,
        lip=gnorm / nd,
        ell_scaled=inner / nd ** (1.0 + nu),
        lip_scaled=gnorm / nd**nu,
        scaled_step=gamma * nd ** (nu - 1.0),
        forward_lip=forward_lip,
        forward_holder=forward_lip * nd ** (1.0 - nu),
    )


def stepsize_ratio_cap(q, gamma0, gamma_minus1):
    """Proven cap on consecutive stepsize ratios: max((1+sqrt(1+4/q))/2, gamma0/gamma_minus1)."""
    return max(0.5 * (1.0 + math.sqrt(1.0 + 4.0 / q)), gamma0 / gamma_minus1)


@dataclass
class LyapunovSeries:
    """Lyapunov values and the descent-inequality slack along an adaptive run.

    ``values[k]`` is  0.5 ||x_k - x*||^2 + 0.5 ||x_k - x_{k-1}||^2
    + gamma_k (1 + q rho_k) P_{k-1}  with gap P_k = phi(x_k) - phi(x*) and
    ratio rho_k = gamma_k / gamma_{k-1}.  ``descent_slack[k]`` is the
    non-negative amount by which the main descent inequality

        values[k+1] <= values[k] - gamma_k (1 + q rho_k - q rho_{k+1}^2) P_{k-1}
                       - (1/2 - rho_{k+1}^2 [gamma_k^2 lip_k^2
                          - (2-q) gamma_k ell_k + 1 - q]) ||x_k - x_{k-1}||^2

    holds.  ``second_branch[k]`` flags iterations whose stepsize update took
    the curvature-limited branch of the min (ties counted as such).
    """

    values: np.ndarray
    gaps: np.ndarray
    gap_start: float
    descent_slack: np.ndarray
    second_branch: np.ndarray
    rho: np.ndarray
    rho_max: float
    q: float
    ell: np.ndarray
    lip: np.ndarray
    step_norms: np.ndarray


def _require_adaptive_trace(trace, prob):
    if prob.phi_star is None:
        raise ValueError("problem carries no optimality certificate")
    if trace.iterates is None or trace.start_point is None or trace.gamma_start is None:
        raise ValueError("trace must come from an adaptive run with keep_iterates=True")


def lyapunov_series(trace, prob, q=None):
    """Recompute the Lyapunov series and descent slack from a kept trace."""
    _require_adaptive_trace(trace, prob)
    q = trace.q if q is None else float(q)
    if q is None:
        raise ValueError("q is required when the trace does not carry one")
    x_star = prob.certificate[0]
    phi_star = prob.phi_star

    pts = [trace.start_point] + list(trace.iterates)  # x_{-1}, x_0 .. x_K
    gammas = np.concatenate([[trace.gamma_start], trace.gammas])  # gamma_{-1} ..
    n_pts = len(pts)
    vals = np.empty(n_pts)
    grads = []
    for i, pt in enumerate(pts):
        v, gr, _ = prob.f.value_grad(pt)
        vals[i] = v + prob.g.value(pt)
        grads.append(gr)
    gaps_all = vals - phi_star  # P_{-1}, P_0 .. P_K
    rho = gammas[1:] / gammas[:-1]  # rho_0 .. rho_K
    n_iter = n_pts - 1  # iterates 0..K -> K+1 of them

    values = np.empty(n_iter)
    ell = np.empty(n_iter)
    lip = np.empty(n_iter)
    step_norms = np.empty(n_iter)
    for k in range(n_iter):
        xk, xkm1 = pts[k + 1], pts[k]
        ds = xk - x_star
        dx = xk - xkm1
        nd2 = float(dx @ dx)
        step_norms[k] = math.sqrt(nd2)
        values[k] = (
            0.5 * float(ds @ ds)
            + 0.5 * nd2
            + gammas[k + 1] * (1.0 + q * rho[k]) * gaps_all[k]
        )
        dg = grads[k + 1] - grads[k]
        if nd2 == 0.0:
            ell[k] = lip[k] = 0.0
        else:
            ell[k] = float(dx @ dg) / nd2
            lip[k] = math.sqrt(float(dg @ dg) / nd2)

    slack = np.empty(max(n_iter - 1, 0))
    second = np.zeros(max(n_iter - 1, 0), dtype=bool)
    for k in range(n_iter - 1):
        g_k = gammas[k + 1]
        bracket = g_k * g_k * lip[k] * lip[k] - (2.0 - q) * g_k * ell[k] + 1.0 - q
        slack[k] = (
            values[k]
            - values[k + 1]
            - g_k * (1.0 + q * rho[k] - q * rho[k + 1] ** 2) * gaps_all[k]
            - (0.5 - rho[k + 1] ** 2 * bracket) * step_norms[k] ** 2
        )
        first_term = g_k * math.sqrt(1.0 / q + rho[k])
        if bracket > 0.0:
            second_term = g_k / math.sqrt(2.0 * bracket)
        else:
            second_term = math.inf
        second[k] = second_term <= first_term

    return LyapunovSeries(
        values=values,
        gaps=gaps_all[1:],
        gap_start=float(gaps_all[0]),
        descent_slack=slack,
        second_branch=second,
        rho=rho,
        rho_max=stepsize_ratio_cap(q, gammas[1], gammas[0]),
        q=q,
        ell=ell,
        lip=lip,
        step_norms=step_norms,
    )


def _initial_lyapunov(trace, prob, q):
    """U_0 computed directly from the trace head (one oracle evaluation)."""
    x_star = prob.certificate[0]
    x0 = trace.iterates[0]
    gamma0 = trace.records[0].gamma
    rho0 = gamma0 / trace.gamma_start
    p_start = prob.value(trace.start_point) - prob.phi_star
    ds = x0 - x_star
    dx = x0 - trace.start_point
    return 0.5 * float(ds @ ds) + 0.5 * float(dx @ dx) + gamma0 * (1.0 + q * rho0) * p_start


def min_gap_bound_series(trace, prob, q=None):
    """Best-gap-so-far versus the stepsize-sum bound, for every checkable horizon.

    Returns ``(lhs, rhs)`` arrays indexed by horizon K = 1 .. K_max - 1:
    ``lhs[i] = min(P_0..P_{i+1})`` and ``rhs[i] = U_0 / sum(gamma_1..gamma_{i+2})``.
    """
    _require_adaptive_trace(trace, prob)
    q = trace.q if q is None else float(q)
    u0 = _initial_lyapunov(trace, prob, q)
    gaps = trace.gaps
    gammas = trace.gammas
    n = len(gaps)
    if n < 2:
        return np.empty(0), np.empty(0)
    # horizon K runs 1..n-2; the bound needs gamma_{K+1}
    gamma_cum = np.cumsum(gammas[1:])  # sum_{k=1}^{j} gamma_k at index j-1
    ks = np.arange(1, n - 1)
    lhs = np.minimum.accumulate(gaps)[ks]
    rhs = u0 / gamma_cum[ks]  # gamma_cum[K] = sum_{k=1}^{K+1}
    return lhs, rhs


def min_gap_bound(trace, prob, q=None):
    """The pair (min gap so far, Lyapunov-over-stepsize-sum bound) at the last
    checkable horizon; the contract is lhs <= rhs."""
    lhs, rhs = min_gap_bound_series(trace, prob, q=q)
    if lhs.size == 0:
        raise ValueError("trace is too short to evaluate the bound")
    return float(lhs[-1]), float(rhs[-1])


def rate_envelope(trace, prob, q=None, nu=1.0, holder_modulus=1.0):
    """Sublinear-rate envelope for the best gap so far.

    ``bound[K] = max(U_0 / (gamma_0 (K+1)),
                     C(q, nu) U_0^((1+nu)/2) * holder_modulus / (K+1)^nu)``

    with ``C(q, nu) = sqrt(2) * q^(nu/2) * (sqrt(2) rho_max + 1)^(1-nu)``.
    ``holder_modulus`` must be a valid order-``nu`` modulus for grad f on a
    set containing the iterates; the contract is
    ``min(P_0..P_K) <= bound[K]`` for every K.
    """
    _require_adaptive_trace(trace, prob)
    q = trace.q if q is None else float(q)
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if holder_modulus <= 0:
        raise ValueError("holder_modulus must be > 0")
    u0 = _initial_lyapunov(trace, prob, q)
    gamma0 = trace.records[0].gamma
    rho_max = stepsize_ratio_cap(q, gamma0, trace.gamma_start)
    c_qnu = math.sqrt(2.0) * q ** (0.5 * nu) * (math.sqrt(2.0) * rho_max + 1.0) ** (1.0 - nu)
    horizon = np.arange(len(trace.records), dtype=float) + 1.0
    return np.maximum(
        u0 / (gamma0 * horizon),
        c_qnu * u0 ** (0.5 * (1.0 + nu)) * holder_modulus / horizon**nu,
    )


def best_so_far(values):
    """Monotone non-increasing envelope of a sequence."""
    return np.minimum.accumulate(np.asarray(values, dtype=float))


def _replay_points(trace, prob):
    """Recompute gradients at x_{-1}, x_0, ..., x_K of a kept adaptive trace."""
    if trace.iterates is None or trace.start_point is None:
        raise ValueError("trace must come from an adaptive run with keep_iterates=True")
    pts = [trace.start_point] + list(trace.iterates)
    grads = [prob.f.value_grad(pt)[1] for pt in pts]
    gammas = np.concatenate([[trace.gamma_start], trace.gammas])
    return pts, grads, gammas


def fne_chain(trace, prob):
    """Three-sided nonexpansiveness chain of the proximal gradient update.

    For each k with x_{k+1} available, with the forward map
    ``H_k(x) = x - gamma_k * grad f(x)`` and ``rho = gamma_{k+1}/gamma_k``,
    returns arrays (lower, middle, upper):

        lower  = ||x_{k+1} - x_k||^2 / rho
        middle = <H_k(x_{k-1}) - H_k(x_k), x_k - x_{k+1}>
        upper  = rho * ||H_k(x_{k-1}) - H_k(x_k)||^2

    The contract along any adaptive run is lower <= middle <= upper.
    """
    pts, grads, gammas = _replay_points(trace, prob)
    n_steps = len(pts) - 2  # k = 0 .. K-1
    lower = np.empty(max(n_steps, 0))
    middle = np.empty(max(n_steps, 0))
    upper = np.empty(max(n_steps, 0))
    for k in range(n_steps):
        g_k, g_k1 = gammas[k + 1], gammas[k + 2]
        rho = g_k1 / g_k
        hdiff = (pts[k] - g_k * grads[k]) - (pts[k + 1] - g_k * grads[k + 1])
        step = pts[k + 1] - pts[k + 2]
        lower[k] = float(step @ step) / rho
        middle[k] = float(hdiff @ step)
        upper[k] = rho * float(hdiff @ hdiff)
    return lower, middle, upper


def residual_ratio_bound(trace, prob):
    """Per-iteration pair (||x_{k+1} - x_k||, rho_{k+1} * M_k * ||x_{k-1} - x_k||)
    where M_k is the direct forward-map Lipschitz estimate; the contract is
    lhs <= rhs (up to roundoff)."""
    pts, grads, gammas = _replay_points(trace, prob)
    n_steps = len(pts) - 2
    lhs = np.empty(max(n_steps, 0))
    rhs = np.empty(max(n_steps, 0))
    for k in range(n_steps):
        g_k, g_k1 = gammas[k + 1], gammas[k + 2]
        est = estimates(pts[k], pts[k + 1], grads[k], grads[k + 1], g_k, nu=1.0)
        step = pts[k + 2] - pts[k + 1]
        lhs[k] = math.sqrt(float(step @ step))
        rhs[k] = (g_k1 / g_k) * est.forward_lip * est.step_norm
    return lhs, rhs
