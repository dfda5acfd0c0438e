"""Smooth losses of the form psi(A x), proximable regularizers, and the
composite problem container minimize f(x) + g(x).

All losses expose the intermediate forward product ``A x`` so that callers
can reuse it: a backtracking solver pays one forward application per trial
point instead of re-deriving the gradient, and value reporting at a point
whose forward product is already known is free.  This is what makes the
operator-call accounting of the benchmark harness exact.
"""

from __future__ import annotations

import math

import numpy as np

from .linop import CountedOperator, as_vector

__all__ = [
    "SmoothLoss",
    "PNormResidualLoss",
    "PowerHingeLoss",
    "LogisticLoss",
    "MixtureLoss",
    "ZeroRegularizer",
    "L1Regularizer",
    "BallRegularizer",
    "CompositeProblem",
]

# Relative slack when evaluating the ball indicator: convex combinations of
# feasible iterates can exceed the radius by a few ulps.
_BALL_SLACK = 1e-9


def signed_power(r, e):
    """sign(r) * |r|**e, with the continuous extension 0 at r = 0."""
    return np.sign(r) * np.abs(r) ** e


class SmoothLoss:
    """Base class: value/gradient oracle for f(x) = psi(A x) [+ smooth p-norm term].

    ``smooth_reg_weight`` > 0 adds (w / p_s) * sum |x_i|**p_s to the value and
    w * sign(x) |x|**(p_s - 1) to the gradient; 0 disables the term.
    """

    def __init__(self, operator, smooth_reg_weight=0.0, smooth_reg_power=2.0):
        if not isinstance(operator, CountedOperator):
            operator = CountedOperator(operator)
        if smooth_reg_weight < 0:
            raise ValueError("smooth_reg_weight must be >= 0")
        if smooth_reg_weight > 0 and not 1.0 < smooth_reg_power <= 2.0:
            raise ValueError("smooth_reg_power must lie in (1, 2]")
        self.operator = operator
        self.smooth_reg_weight = float(smooth_reg_weight)
        self.smooth_reg_power = float(smooth_reg_power)

    @property
    def dim(self):
        return self.operator.shape[1]

    # subclasses implement the scalar part psi and its gradient in y = A x
    def _psi(self, y):
        raise NotImplementedError

    def _dpsi(self, y):
        raise NotImplementedError

    def _psi_dpsi(self, y):
        # fused evaluation; subclasses override to share intermediates
        return self._psi(y), self._dpsi(y)

    def forward(self, x):
        """One forward application; returns A x."""
        return self.operator.apply(x)

    def value_at(self, x, fwd):
        """Loss value at x given its forward product; no operator calls."""
        val = self._psi(fwd)
        if self.smooth_reg_weight > 0.0:
            p = self.smooth_reg_power
            val += self.smooth_reg_weight / p * np.sum(np.abs(x) ** p)
        val = float(val)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite loss value")
        return val

    def grad_at(self, x, fwd):
        """Loss gradient at x given its forward product; one transpose call."""
        return self._finish_grad(x, self.operator.apply_transpose(self._dpsi(fwd)))

    def _finish_grad(self, x, grad):
        if self.smooth_reg_weight > 0.0:
            grad = grad + self.smooth_reg_weight * signed_power(x, self.smooth_reg_power - 1.0)
        # a single reduction catches NaN/Inf contamination cheaply
        if not math.isfinite(float(grad @ grad)):
            raise FloatingPointError("non-finite gradient")
        return grad

    def value_grad_at(self, x, fwd):
        """(value, gradient) at x given its forward product; one transpose call."""
        val, w = self._psi_dpsi(fwd)
        if self.smooth_reg_weight > 0.0:
            p = self.smooth_reg_power
            val += self.smooth_reg_weight / p * np.sum(np.abs(x) ** p)
        val = float(val)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite loss value")
        return val, self._finish_grad(x, self.operator.apply_transpose(w))

    def value_grad(self, x):
        """Return (value, gradient, forward product).

        Costs exactly one forward and one transpose application.  The forward
        product is returned so callers can evaluate the loss again at the same
        point for free.
        """
        fwd = self.forward(x)
        val, grad = self.value_grad_at(x, fwd)
        return val, grad, fwd


class PNormResidualLoss(SmoothLoss):
    """f(x) = (1/p) * ||A x - b||_p^p with p in (1, 2]."""

    def __init__(self, operator, b, p, **kw):
        super().__init__(operator, **kw)
        if not 1.0 < p <= 2.0:
            raise ValueError("p must lie in (1, 2]")
        self.b = as_vector(b, self.operator.shape[0], "b")
        self.p = float(p)

    def _psi(self, y):
        return np.sum(np.abs(y - self.b) ** self.p) / self.p

    def _dpsi(self, y):
        return signed_power(y - self.b, self.p - 1.0)

    def _psi_dpsi(self, y):
        r = y - self.b
        a = np.abs(r)
        t = a ** (self.p - 1.0)
        return float(t @ a) / self.p, np.sign(r) * t


class PowerHingeLoss(SmoothLoss):
    """f(x) = (1/m) * sum_j (1/p) * max(0, 1 - b_j <a_j, x>)**p, labels b_j in {-1,+1}.

    For p in (1, 2) the hinge power is continuously differentiable at the
    margin boundary with derivative 0, so no subgradient selection is needed.
    """

    def __init__(self, operator, labels, p, **kw):
        super().__init__(operator, **kw)
        if not 1.0 < p <= 2.0:
            raise ValueError("p must lie in (1, 2]")
        labels = as_vector(labels, self.operator.shape[0], "labels")
        if not np.all(np.abs(labels) == 1.0):
            raise ValueError("labels must be +-1")
        self.labels = labels
        self.p = float(p)
        self._m = labels.shape[0]

    def _psi(self, y):
        t = np.maximum(0.0, 1.0 - self.labels * y)
        return np.sum(t ** self.p) / (self.p * self._m)

    def _dpsi(self, y):
        t = np.maximum(0.0, 1.0 - self.labels * y)
        return -(self.labels / self._m) * t ** (self.p - 1.0)

    def _psi_dpsi(self, y):
        t = np.maximum(0.0, 1.0 - self.labels * y)
        tp = t ** (self.p - 1.0)
        return float(tp @ t) / (self.p * self._m), -(self.labels / self._m) * tp


class LogisticLoss(SmoothLoss):
    """f(x) = (1/m) * sum_j log(1 + exp(-b_j <a_j, x>)), labels in {-1,+1}.

    Evaluated in log-sum-exp form; the sigmoid uses tanh so both value and
    gradient stay finite for arbitrarily large scores.
    """

    def __init__(self, operator, labels, **kw):
        super().__init__(operator, **kw)
        labels = as_vector(labels, self.operator.shape[0], "labels")
        if not np.all(np.abs(labels) == 1.0):
            raise ValueError("labels must be +-1")
        self.labels = labels
        self._m = labels.shape[0]

    def _psi(self, y):
        return np.sum(np.logaddexp(0.0, -self.labels * y)) / self._m

    def _dpsi(self, y):
        # sigmoid(-u) = 0.5 * (1 - tanh(u / 2)) with u = b * y
        u = self.labels * y
        return -(self.labels / self._m) * 0.5 * (1.0 - np.tanh(0.5 * u))


class MixtureLoss(SmoothLoss):
    """f(x) = sum_j (1/p_j) * ||A^j x - b^j||_{p_j}^{p_j} over row blocks.

    The blocks are stored vertically stacked in a single counted operator, so
    one gradient evaluation is one forward and one transpose application of
    the full design matrix -- the cost unit all solvers are compared in.
    """

    def __init__(self, operator, b, block_sizes, powers, **kw):
        super().__init__(operator, **kw)
        self.b = as_vector(b, self.operator.shape[0], "b")
        block_sizes = [int(m) for m in block_sizes]
        powers = [float(p) for p in powers]
        if len(block_sizes) != len(powers):
            raise ValueError("block_sizes and powers must have equal length")
        if sum(block_sizes) != self.operator.shape[0]:
            raise ValueError("block sizes must sum to the operator row count")
        for p in powers:
            if not 1.0 < p <= 2.0:
                raise ValueError("every block power must lie in (1, 2]")
        offsets = np.concatenate([[0], np.cumsum(block_sizes)])
        self.slices = [slice(int(a), int(b_)) for a, b_ in zip(offsets[:-1], offsets[1:])]
        self.powers = powers

    def _psi(self, y):
        r = y - self.b
        return sum(np.sum(np.abs(r[s]) ** p) / p for s, p in zip(self.slices, self.powers))

    def _dpsi(self, y):
        r = y - self.b
        out = np.empty_like(r)
        for s, p in zip(self.slices, self.powers):
            out[s] = signed_power(r[s], p - 1.0)
        return out


class ZeroRegularizer:
    """g = 0; the proximal mapping is the identity."""

    def value(self, x):
        return 0.0

    def prox(self, gamma, v):
        if gamma <= 0:
            raise ValueError("gamma must be > 0")
        return v


class L1Regularizer:
    """g(x) = lam * ||x||_1; prox is componentwise soft thresholding."""

    def __init__(self, lam):
        if lam < 0:
            raise ValueError("lam must be >= 0")
        self.lam = float(lam)

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, gamma, v):
        if gamma <= 0:
            raise ValueError("gamma must be > 0")
        t = gamma * self.lam
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class BallRegularizer:
    """Indicator of the Euclidean ball of given radius; prox is the radial projection.

    The feasibility test carries a 1e-12 relative slack so that projecting an
    already-projected point is an exact no-op despite norm roundoff; the
    indicator value uses the looser slack since averaged iterates drift a few
    ulps outside the ball.
    """

    def __init__(self, radius):
        if radius <= 0:
            raise ValueError("radius must be > 0")
        self.radius = float(radius)

    def value(self, x):
        nrm = float(np.sqrt(x @ x))
        return 0.0 if nrm <= self.radius * (1.0 + _BALL_SLACK) else np.inf

    def prox(self, gamma, v):
        if gamma <= 0:
            raise ValueError("gamma must be > 0")
        nrm = float(np.sqrt(v @ v))
        if nrm <= self.radius * (1.0 + 1e-12):
            return v
        return (self.radius / nrm) * v


class CompositeProblem:
    """Container for minimize f(x) + g(x), optionally with an optimality certificate.

    ``certificate`` is a pair (x_star, phi_star).  When given, it is verified
    at construction: the unit-step fixed-point residual at x_star must not
    exceed 1e-10 and phi(x_star) must match phi_star to 1e-12 relative.  Runs
    and diagnostics measure gaps against the evaluated phi(x_star) so that
    gap arithmetic is consistent with cost arithmetic to machine precision.
    """

    def __init__(self, f, g, certificate=None):
        self.f = f
        self.g = g
        self.certificate = None
        self.phi_star = None
        if certificate is not None:
            x_star = as_vector(certificate[0], f.dim, "x_star")
            phi_star = float(certificate[1])
            evaluated = self.value(x_star)
            scale = max(1.0, abs(phi_star))
            if abs(evaluated - phi_star) > 1e-12 * scale:
                raise ValueError(
                    f"certificate value mismatch: stated {phi_star!r}, evaluated {evaluated!r}"
                )
            res = self.kkt_residual(x_star)
            if res > 1e-10:
                raise ValueError(f"certificate point is not stationary: residual {res:.3e}")
            self.certificate = (x_star, phi_star)
            self.phi_star = evaluated

    @property
    def dim(self):
        return self.f.dim

    @property
    def operator_calls(self):
        return self.f.operator.total_calls

    def value(self, x):
        fwd = self.f.forward(x)
        return self.f.value_at(x, fwd) + self.g.value(x)

    def kkt_residual(self, x):
        """Unit-step fixed-point residual ||x - prox_g(1, x - grad f(x))||; 0 iff x is optimal."""
        _, grad, _ = self.f.value_grad(x)
        step = self.g.prox(1.0, x - grad)
        d = x - step
        return float(np.sqrt(d @ d))
