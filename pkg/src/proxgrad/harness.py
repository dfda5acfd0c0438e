"""Experiment harness: builds problems, runs solver line-ups under a shared
operator-call budget, and writes CSV traces plus a reach-threshold summary.

Every solver in an experiment gets a fresh problem instance (same data, its
own call counters) and the same tuned initial stepsize, starts at x = 0, and
runs until the operator budget is exhausted.  The CSV is byte-reproducible
for a fixed configuration except for the elapsed_ms column.
"""

from __future__ import annotations

import copy
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import generate_mixture, generate_pnorm_lasso, lasso_problem, load_libsvm
from .linop import CountedOperator
from .objectives import (
    CompositeProblem,
    L1Regularizer,
    LogisticLoss,
    PowerHingeLoss,
    ZeroRegularizer,
)
from .solvers import (
    ACFGMConfig,
    AdaPGConfig,
    DEFAULT_ACFGM_BETA,
    NUPGConfig,
    StoppingRule,
    acfgm_initial_stepsize,
    acfgm_run,
    adapg_run,
    fnupg_run,
    nupg_run,
    tune_initial_stepsize,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "preset",
    "preset_names",
    "config_from_json",
    "run_experiment",
    "CSV_COLUMNS",
    "GAP_THRESHOLDS",
    "DATA_DIR_ENV",
]

CSV_COLUMNS = [
    "solver_id",
    "iter",
    "a_calls",
    "f_calls",
    "grad_calls",
    "cost",
    "gap",
    "gamma",
    "residual",
    "elapsed_ms",
]
GAP_THRESHOLDS = (1e-3, 1e-6, 1e-9)
DATA_DIR_ENV = "PROXGRAD_DATA_DIR"

_DEFAULT_SOLVERS = ["adapg:q=1", "adapg:q=1.5", "adapg:q=2", "nupg", "fnupg", "acfgm"]
_DEFAULT_GAMMA_GUESS = 1.0


@dataclass
class ExperimentConfig:
    problem: dict
    solvers: list
    budget: int
    out: str | None = None

    def __post_init__(self):
        if not self.solvers:
            raise ValueError("at least one solver is required")
        if self.budget <= 0:
            raise ValueError("budget must be > 0")
        if "family" not in self.problem:
            raise ValueError("problem spec needs a 'family' field")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict
    csv_text: str
    csv_path: str | None
    summary: str


def _resolve_dataset(name_or_path):
    p = Path(name_or_path)
    if p.exists():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / name_or_path
        if candidate.exists():
            return candidate
    raise FileNotFoundError(
        f"dataset {name_or_path!r} not found (looked at the path itself and under ${DATA_DIR_ENV})"
    )


def problem_factory(spec):
    """Return a zero-argument callable producing fresh, identical problem
    instances (shared immutable data, per-instance operator counters)."""
    family = spec["family"]
    if family == "lasso":
        inst = generate_pnorm_lasso(
            spec["m"], spec["n"], spec["k"], spec["p"], spec["lambda"], spec["seed"]
        )
        return lambda: lasso_problem(inst)
    if family == "svm":
        ds = load_libsvm(_resolve_dataset(spec["dataset"]))
        p, lam = float(spec["p"]), float(spec["lambda"])
        return lambda: CompositeProblem(
            PowerHingeLoss(CountedOperator(ds.features), ds.labels, p),
            L1Regularizer(lam),
        )
    if family == "logistic":
        ds = load_libsvm(_resolve_dataset(spec["dataset"]))
        p, lam = float(spec["p"]), float(spec["lambda"])
        return lambda: CompositeProblem(
            LogisticLoss(
                CountedOperator(ds.features), ds.labels,
                smooth_reg_weight=lam, smooth_reg_power=p,
            ),
            ZeroRegularizer(),
        )
    if family == "mixture":
        blocks = [tuple(b) for b in spec["blocks"]]
        return lambda: generate_mixture(spec["n"], blocks, spec["radius"], spec["seed"])
    raise ValueError(f"unknown problem family {family!r}")


def parse_solver_spec(spec):
    """Parse 'name[:key=value]*' into (name, params); the full string is the solver id."""
    parts = spec.split(":")
    name = parts[0]
    allowed = {
        "adapg": {"q"},
        "nupg": {"eps", "eta"},
        "fnupg": {"eps", "eta"},
        "acfgm": {"alpha", "beta", "eps"},
    }
    if name not in allowed:
        raise ValueError(f"unknown solver {name!r} in {spec!r}")
    params = {}
    for part in parts[1:]:
        key, sep, val = part.partition("=")
        if not sep or key not in allowed[name]:
            raise ValueError(f"malformed or unknown parameter {part!r} in {spec!r}")
        params[key] = float(val)
    return name, params


def run_solver(spec, prob, budget, x0=None, keep_iterates=False):
    """Tune the initial stepsize on ``prob`` and run the solver named by ``spec``."""
    name, params = parse_solver_spec(spec)
    if x0 is None:
        x0 = np.zeros(prob.dim)
    stop = StoppingRule(max_operator_calls=budget)
    if name == "adapg":
        q = params.get("q", 1.5)
        gamma0, gamma_minus1 = tune_initial_stepsize(prob, x0, _DEFAULT_GAMMA_GUESS, q)
        cfg = AdaPGConfig(q=q, gamma0=gamma0, gamma_minus1=gamma_minus1, x_minus1=x0)
        return adapg_run(prob, cfg, stop, solver_id=spec, keep_iterates=keep_iterates)
    if name in ("nupg", "fnupg"):
        eps = params.get("eps", 1e-12)
        eta = params.get("eta", 0.5)
        gamma0, _ = tune_initial_stepsize(prob, x0, _DEFAULT_GAMMA_GUESS, 1.0)
        cfg = NUPGConfig(epsilon=eps, eta=eta, gamma0=gamma0, x0=x0)
        runner = nupg_run if name == "nupg" else fnupg_run
        return runner(prob, cfg, stop, solver_id=spec, keep_iterates=keep_iterates)
    # acfgm
    eps = params.get("eps", 1e-12)
    beta = params.get("beta", DEFAULT_ACFGM_BETA)
    alpha = params.get("alpha", 0.0)
    gamma0, _ = tune_initial_stepsize(prob, x0, _DEFAULT_GAMMA_GUESS, 1.0)
    gamma1 = acfgm_initial_stepsize(prob, x0, gamma0, beta, eps)
    cfg = ACFGMConfig(epsilon=eps, beta=beta, alpha=alpha, gamma1=gamma1, x0=x0)
    return acfgm_run(prob, cfg, stop, solver_id=spec, keep_iterates=keep_iterates)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_experiment(config):
    """Run every solver of the config on its own copy of the problem and
    assemble one CSV (one block of rows per solver) plus a summary table of
    the operator calls needed to reach the gap thresholds."""
    make = problem_factory(config.problem)
    traces = {}
    certified = None
    for spec in config.solvers:
        prob = make()
        if certified is None:
            certified = prob.phi_star is not None
        traces[spec] = run_solver(spec, prob, config.budget)

    # gap column: true gap when a certificate exists, otherwise distance to
    # the best cost achieved by any solver in this experiment
    if certified:
        gaps = {sid: [r.gap for r in tr.records] for sid, tr in traces.items()}
    else:
        best = min(r.cost for tr in traces.values() for r in tr.records)
        gaps = {sid: [r.cost - best for r in tr.records] for sid, tr in traces.items()}

    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for sid, tr in traces.items():
        for rec, gap in zip(tr.records, gaps[sid]):
            row = [
                sid,
                rec.iteration,
                rec.a_calls,
                rec.f_calls,
                rec.grad_calls,
                _fmt(rec.cost),
                _fmt(gap),
                _fmt(rec.gamma),
                _fmt(rec.step_norm),
                _fmt(rec.elapsed_s * 1e3),
            ]
            buf.write(",".join(str(c) for c in row) + "\n")
    csv_text = buf.getvalue()

    lines = [
        "operator calls to reach gap thresholds"
        + ("" if certified else " (gap = cost minus best achieved)"),
        f"{'solver':<24}" + "".join(f"{t:>12.0e}" for t in GAP_THRESHOLDS),
    ]
    for sid, tr in traces.items():
        cells = []
        series = gaps[sid]
        calls = [r.a_calls for r in tr.records]
        for thresh in GAP_THRESHOLDS:
            hit = next((c for c, g in zip(calls, series) if g <= thresh), None)
            cells.append(f"{hit:>12}" if hit is not None else f"{'-':>12}")
        lines.append(f"{sid:<24}" + "".join(cells))
    summary = "\n".join(lines) + "\n"

    csv_path = None
    if config.out:
        csv_path = str(config.out)
        Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", encoding="ascii") as fh:
            fh.write(csv_text)
        with open(Path(csv_path).with_suffix(".summary.txt"), "w", encoding="ascii") as fh:
            fh.write(summary)

    return ExperimentResult(
        config=config, traces=traces, csv_text=csv_text, csv_path=csv_path, summary=summary
    )


def _build_presets():
    presets = {}

    def add(name, problem, budget=20000):
        presets[name] = {
            "problem": problem,
            "solvers": list(_DEFAULT_SOLVERS),
            "budget": budget,
        }

    for m, n, k in [(100, 300, 30), (200, 500, 60), (500, 1000, 100), (500, 1000, 200)]:
        for p in (1.5, 1.7, 1.9):
            add(
                f"lasso-{m}x{n}x{k}-p{p:g}",
                {"family": "lasso", "m": m, "n": n, "k": k, "p": p, "lambda": 1.0, "seed": 50},
            )
    presets["lasso-small"] = copy.deepcopy(presets["lasso-100x300x30-p1.5"])

    svm_grids = {
        "phishing": (0.01, 0.005, 0.001),
        "a9a": (0.01, 0.005, 0.001),
        "w8a": (0.005, 0.003, 0.001),
        "covtype.binary": (20.0, 10.0, 1.0),
    }
    for ds, lams in svm_grids.items():
        for lam in lams:
            add(
                f"svm-{ds}-lamb{lam:g}",
                {"family": "svm", "dataset": ds, "p": 1.5, "lambda": lam},
            )

    for ds in ("mushrooms", "w8a"):
        for lam in (0.005, 0.003, 0.001):
            add(
                f"logistic-{ds}-lamb{lam:g}",
                {"family": "logistic", "dataset": ds, "p": 1.5, "lambda": lam},
            )

    blocks = [[400, 1.8], [300, 1.7], [400, 1.6], [100, 1.5], [100, 1.5], [300, 1.5]]
    for n in (1000, 2000, 3000, 4000):
        add(
            f"mixture-{n}",
            {"family": "mixture", "n": n, "blocks": copy.deepcopy(blocks), "radius": 0.1, "seed": 50},
        )
    return presets


_PRESETS = _build_presets()


def preset_names():
    return sorted(_PRESETS)


def preset(name):
    """Look up a named experiment configuration."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    entry = copy.deepcopy(_PRESETS[name])
    return ExperimentConfig(
        problem=entry["problem"], solvers=entry["solvers"], budget=entry["budget"]
    )


def config_from_json(path):
    with open(path, "r", encoding="ascii") as fh:
        raw = json.load(fh)
    unknown = set(raw) - {"problem", "solvers", "budget", "out"}
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return ExperimentConfig(
        problem=raw["problem"],
        solvers=raw["solvers"],
        budget=int(raw["budget"]),
        out=raw.get("out"),
    )
