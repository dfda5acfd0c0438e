"""Dataset ingestion (LibSVM text format) and synthetic instance generation.

The sparse-regression generator plants a solution with a known support and
rescales design columns so that the stationarity inclusion holds exactly at
the planted point; every instance therefore carries a certificate
(x_star, phi_star) that is verified independently in the tests.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .linop import CountedOperator, CsrMatrix
from .objectives import (
    BallRegularizer,
    CompositeProblem,
    L1Regularizer,
    MixtureLoss,
    PNormResidualLoss,
    signed_power,
)

__all__ = [
    "LabeledDataset",
    "GeneratedInstance",
    "parse_libsvm",
    "load_libsvm",
    "to_libsvm",
    "generate_pnorm_lasso",
    "lasso_problem",
    "generate_mixture",
]

# strict dual-feasibility margin for off-support columns
_OFF_SUPPORT_SLACK = 0.9
_RESAMPLE_CAP = 10_000


@dataclass
class LabeledDataset:
    """Sparse feature matrix (rows are examples) with labels in {-1, +1}."""

    features: CsrMatrix
    labels: np.ndarray

    def __post_init__(self):
        if self.labels.shape[0] != self.features.shape[0]:
            raise ValueError("label count must equal the number of feature rows")
        if not np.all(np.abs(self.labels) == 1.0):
            raise ValueError("labels must be +-1")


def parse_libsvm(stream):
    """Parse LibSVM text: one example per line, ``label idx:val idx:val ...``.

    Indices are 1-based and must be strictly increasing within a line.  Blank
    lines and lines starting with '#' are skipped.  The feature dimension is
    the largest index seen.  Raw labels may be {-1,+1}, {0,1} or {1,2}; with
    two distinct values the smaller maps to -1 and the larger to +1.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    raw_labels = []
    indptr = [0]
    indices = []
    values = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            raw_labels.append(float(tokens[0]))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed label {tokens[0]!r}") from None
        prev_idx = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ValueError(f"line {lineno}: malformed token {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ValueError(f"line {lineno}: malformed token {tok!r}") from None
            if idx <= prev_idx:
                raise ValueError(
                    f"line {lineno}: feature index {idx} not strictly increasing"
                )
            prev_idx = idx
            indices.append(idx - 1)
            values.append(val)
        indptr.append(len(indices))

    if not raw_labels:
        raise ValueError("no examples in stream")
    distinct = sorted(set(raw_labels))
    if len(distinct) > 2:
        raise ValueError(f"cannot map {len(distinct)} label classes onto -1/+1")
    if set(distinct) <= {-1.0, 1.0}:
        labels = np.asarray(raw_labels)
    elif len(distinct) == 2:
        lo = distinct[0]
        labels = np.where(np.asarray(raw_labels) == lo, -1.0, 1.0)
    else:
        raise ValueError(f"cannot map single label class {distinct[0]!r} onto -1/+1")

    n_features = max(indices) + 1 if indices else 0
    features = CsrMatrix(
        (len(raw_labels), n_features),
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(values, dtype=np.float64),
    )
    return LabeledDataset(features=features, labels=labels)


def load_libsvm(path):
    with open(path, "r", encoding="ascii") as fh:
        return parse_libsvm(fh)


def to_libsvm(dataset):
    """Serialize back to LibSVM text; parse(to_libsvm(d)) reproduces d exactly."""
    feats = dataset.features
    lines = []
    for i in range(feats.shape[0]):
        lo, hi = feats.indptr[i], feats.indptr[i + 1]
        pairs = " ".join(
            f"{feats.indices[j] + 1}:{float(feats.values[j])!r}" for j in range(lo, hi)
        )
        label = int(dataset.labels[i])
        lines.append(f"{label:+d} {pairs}".rstrip())
    return "\n".join(lines) + "\n"


@dataclass
class GeneratedInstance:
    """Sparse p-norm regression instance with a planted certified solution."""

    A: np.ndarray
    b: np.ndarray
    p: float
    lam: float
    x_star: np.ndarray
    phi_star: float
    seed: int

    def __post_init__(self):
        if np.max(np.abs(self.A)) > 1.0:
            raise ValueError("design entries must lie in [-1, 1]")


def generate_pnorm_lasso(m, n, k, p, lam, seed):
    """Generate an instance of  (1/p) ||A x - b||_p^p + lam ||x||_1  whose
    minimizer is known exactly.

    Construction: sample a design in [-1,1]^(m x n) and a residual direction
    r; let d be the residual's gradient image sign(r)|r|^(p-1).  Rescale each
    of the k support columns so its inner product with d equals -lam times a
    random sign (resampling a column when the required rescale would leave
    [-1,1]), and shrink every off-support column until its inner product
    magnitude is at most 0.9 lam.  Plant x_star on the support with matching
    signs and set b = A x_star - r, so the stationarity inclusion holds with
    strict slack off the support and the planted point is the unique-support
    solution.  Deterministic in ``seed``.
    """
    if not k <= m < n:
        raise ValueError("need k <= m < n")
    if not 1.0 < p < 2.0:
        raise ValueError("p must lie in (1, 2)")
    if lam <= 0:
        raise ValueError("lam must be > 0")
    rng = np.random.default_rng(seed)
    design = rng.uniform(-1.0, 1.0, size=(m, n))
    resid = rng.uniform(-1.0, 1.0, size=m)
    d = signed_power(resid, p - 1.0)

    support = rng.choice(n, size=k, replace=False)
    signs = rng.choice([-1.0, 1.0], size=k)
    for s_i, col in zip(signs, support):
        for _ in range(_RESAMPLE_CAP):
            dot = float(design[:, col] @ d)
            if dot != 0.0 and abs(lam / dot) <= 1.0:
                design[:, col] *= -lam * s_i / dot
                break
            design[:, col] = rng.uniform(-1.0, 1.0, size=m)
        else:
            raise RuntimeError("could not rescale a support column into [-1, 1]")

    off = np.setdiff1d(np.arange(n), support)
    dots = design[:, off].T @ d
    too_big = np.abs(dots) > _OFF_SUPPORT_SLACK * lam
    scale = np.ones(off.size)
    scale[too_big] = _OFF_SUPPORT_SLACK * lam / np.abs(dots[too_big])
    design[:, off] *= scale

    x_star = np.zeros(n)
    x_star[support] = signs * (1.0 - rng.uniform(0.0, 1.0, size=k))  # magnitudes in (0, 1]
    b = design @ x_star - resid
    # state the optimal value through the float residual actually realized at x_star
    r_realized = design @ x_star - b
    phi_star = float(np.sum(np.abs(r_realized) ** p) / p + lam * np.sum(np.abs(x_star)))
    return GeneratedInstance(A=design, b=b, p=p, lam=lam, x_star=x_star, phi_star=phi_star, seed=seed)


def lasso_problem(instance):
    """Wrap a generated instance as a certified composite problem (fresh counters)."""
    loss = PNormResidualLoss(CountedOperator(instance.A), instance.b, instance.p)
    return CompositeProblem(
        loss, L1Regularizer(instance.lam), certificate=(instance.x_star, instance.phi_star)
    )


def generate_mixture(n, blocks, radius, seed):
    """Ball-constrained mixture regression: sum_j (1/p_j) ||A^j x - b^j||_{p_j}^{p_j}
    over B_2(radius), all entries uniform in [-1, 1].

    The blocks are stacked into a single counted design so one gradient costs
    one forward and one transpose pass.  No certificate exists; the harness
    reports gaps against the best cost achieved in an experiment.
    """
    if radius <= 0:
        raise ValueError("radius must be > 0")
    sizes = [int(mj) for mj, _ in blocks]
    powers = [float(pj) for _, pj in blocks]
    rng = np.random.default_rng(seed)
    total = sum(sizes)
    stacked = rng.uniform(-1.0, 1.0, size=(total, n))
    b = rng.uniform(-1.0, 1.0, size=total)
    loss = MixtureLoss(CountedOperator(stacked), b, sizes, powers)
    return CompositeProblem(loss, BallRegularizer(radius))
