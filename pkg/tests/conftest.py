import numpy as np
import pytest

import proxgrad as pg


def quad_problem_1d(certified=True):
    """f(x) = x^2 / 2 through a 1x1 identity design; minimum 0 at the origin."""
    loss = pg.PNormResidualLoss(pg.CountedOperator([[1.0]]), [0.0], 2.0)
    cert = (np.array([0.0]), 0.0) if certified else None
    return pg.CompositeProblem(loss, pg.ZeroRegularizer(), certificate=cert)


def power_problem_1d(p):
    """f(x) = |x|^p / p; gradient sign(x)|x|^(p-1), minimum 0 at the origin."""
    loss = pg.PNormResidualLoss(pg.CountedOperator([[1.0]]), [0.0], p)
    return pg.CompositeProblem(loss, pg.ZeroRegularizer(), certificate=(np.array([0.0]), 0.0))


def family_losses(seed=0, m=10, n=6):
    """One small loss per family; each call builds fresh operators/counters."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, (m, n))
    b = rng.uniform(-1.0, 1.0, m)
    labels = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    split = m // 2
    return {
        "pnorm": lambda: pg.PNormResidualLoss(pg.CountedOperator(a.copy()), b, 1.5),
        "hinge": lambda: pg.PowerHingeLoss(pg.CountedOperator(a.copy()), labels, 1.5),
        "logistic": lambda: pg.LogisticLoss(
            pg.CountedOperator(a.copy()), labels, smooth_reg_weight=0.01, smooth_reg_power=1.5
        ),
        "mixture": lambda: pg.MixtureLoss(
            pg.CountedOperator(a.copy()), b, [split, m - split], [1.8, 1.5]
        ),
    }


def central_difference_gradient(value_fn, x, h=1e-6):
    """Coordinatewise central finite differences of a scalar function."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (value_fn(x + e) - value_fn(x - e)) / (2.0 * h)
    return grad


def power_gradient_modulus(p, lo=-3.0, hi=3.0, num=400):
    """Grid maximization of |sign(a)|a|^(p-1) - sign(b)|b|^(p-1)| / |a-b|^(p-1).

    Independent oracle for the Hölder modulus of the 1-D power gradient; the
    analytic value 2^(2-p) is attained at b = -a.
    """
    grid = np.linspace(lo, hi, num)
    aa, bb = np.meshgrid(grid, grid)
    mask = aa != bb
    ga = np.sign(aa) * np.abs(aa) ** (p - 1.0)
    gb = np.sign(bb) * np.abs(bb) ** (p - 1.0)
    ratios = np.abs(ga - gb)[mask] / np.abs(aa - bb)[mask] ** (p - 1.0)
    return float(ratios.max())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
