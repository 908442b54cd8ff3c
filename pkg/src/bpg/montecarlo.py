"""Monte-Carlo study of maximum-likelihood estimator quality.

Replication ``r`` draws its sample from ``RandomStream(seed, r)`` for every
sample size, so results do not depend on how replications are distributed
over worker processes, and the samples for different sizes share their
leading variates (common random numbers).
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import BpgError, DomainError
from .estimation import FitConfig, fit_mle, get_model
from .numerics import RandomStream

__all__ = [
    "SimulationPlan",
    "SimulationCell",
    "SimulationReport",
    "run_simulation",
    "bias_mse_curve",
    "default_workers",
]

WORKERS_ENV = "BPG_WORKERS"
UNRELIABLE_FRACTION = 0.2


def default_workers() -> int:
    """Worker count from the ``BPG_WORKERS`` environment variable (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate.

    ``truth`` is ordered as the model's parameters, e.g. ``(m, n, lam, beta)``
    for ``bp_e``. When ``fit_config`` is omitted each fit makes a single
    start at the true parameters.
    """

    truth: Sequence[float]
    sample_sizes: Sequence[int]
    replications: int = 500
    seed: int = 0
    model: str = "bp_e"
    fit_config: FitConfig | None = None

    def __post_init__(self):
        spec = get_model(self.model)
        if len(self.truth) != spec.k:
            raise DomainError(f"{self.model} needs {spec.k} true parameters, got {len(self.truth)}")
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        if not self.sample_sizes or min(self.sample_sizes) < 5:
            raise DomainError("sample sizes must be >= 5")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")

    def config(self) -> FitConfig:
        if self.fit_config is not None:
            return self.fit_config
        return FitConfig(starts=1, initial=(tuple(self.truth),), polish=False)


@dataclass(frozen=True)
class SimulationCell:
    w: int
    param: str
    truth: float
    mean_est: float
    bias: float
    mse: float
    n_ok: int
    n_failed: int
    unreliable: bool


@dataclass
class SimulationReport:
    """Per (sample size, parameter) summaries plus the raw estimates.

    ``estimates[w]`` is a ``(replications, k)`` array with ``nan`` rows for
    failed fits.
    """

    plan: SimulationPlan
    param_names: tuple[str, ...]
    cells: list[SimulationCell]
    estimates: dict[int, np.ndarray] = field(repr=False)

    def cell(self, w: int, param: str) -> SimulationCell:
        for c in self.cells:
            if c.w == w and c.param == param:
                return c
        raise KeyError((w, param))

    def rows(self) -> list[dict]:
        keys = ("w", "param", "truth", "mean_est", "bias", "mse", "n_failed")
        return [{k: asdict(c)[k] for k in keys} for c in self.cells]

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> str:
        meta = {"model": self.plan.model, "truth": list(map(float, self.plan.truth)),
                "replications": self.plan.replications, "seed": self.plan.seed}
        return json.dumps({"metadata": meta, "rows": self.rows()}, indent=2)


def _replicate(args):
    model, truth, w, seed, rep, config = args
    spec = get_model(model)
    dist = spec.build(np.asarray(truth, dtype=float))
    sample = dist.sample(w, RandomStream(seed, rep))
    try:
        fit = fit_mle(sample, spec, config)
    except BpgError:
        return None
    if not fit.converged:
        return None
    return fit.values


def run_simulation(plan: SimulationPlan, workers: int | None = None) -> SimulationReport:
    """Sample, fit and summarize for every sample size in ``plan``.

    Failed fits (exceptions or non-converged optimizers) are excluded from
    the averages and counted; a cell with more than 20% failures is marked
    unreliable.
    """
    spec = get_model(plan.model)
    workers = default_workers() if workers is None else max(1, int(workers))
    config = plan.config()
    truth = np.asarray(plan.truth, dtype=float)
    sizes = [int(w) for w in plan.sample_sizes]
    tasks = [(plan.model, tuple(truth), w, plan.seed, rep, config)
             for w in sizes for rep in range(plan.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_replicate(t) for t in tasks]

    cells, estimates = [], {}
    for i, w in enumerate(sizes):
        block = results[i * plan.replications:(i + 1) * plan.replications]
        est = np.array([r if r is not None else np.full(spec.k, np.nan) for r in block])
        estimates[w] = est
        ok = ~np.isnan(est).any(axis=1)
        n_ok = int(ok.sum())
        n_failed = plan.replications - n_ok
        for j, name in enumerate(spec.param_names):
            vals = est[ok, j]
            if n_ok:
                mean = float(vals.mean())
                mse = float(np.mean((vals - truth[j]) ** 2))
            else:
                mean = mse = float("nan")
            cells.append(SimulationCell(w, name, float(truth[j]), mean, mean - float(truth[j]), mse,
                                        n_ok, n_failed, n_failed > UNRELIABLE_FRACTION * plan.replications))
    return SimulationReport(plan, spec.param_names, cells, estimates)


def bias_mse_curve(truth: Sequence[float], w_grid: Sequence[int], replications: int, seed: int,
                   model: str = "bp_e", fit_config: FitConfig | None = None,
                   workers: int | None = None) -> list[dict]:
    """Long-format ``(w, param, bias, mse)`` rows over a grid of sample sizes."""
    plan = SimulationPlan(tuple(truth), tuple(w_grid), replications, seed, model, fit_config)
    report = run_simulation(plan, workers)
    return [{"w": c.w, "param": c.param, "bias": c.bias, "mse": c.mse} for c in report.cells]
