"""Replicated regret experiments and their export.

A :class:`RunConfig` names an experiment kind, its instance, the horizon
and batch budget; :func:`run_experiment` runs R independent replications,
each seeded by ``(seed, replication)`` only, and folds them in replication
order, so results do not depend on the number of workers.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .env import (
    AdversarialRewardTable,
    LinearBanditInstance,
    StochasticMabInstance,
    make_batch_random_adversary,
    make_iid_adversary,
    make_switching_adversary,
)
from .exceptions import ValidationError
from .policy_adversarial import make_uniform_schedule, run_batched_adversarial
from .policy_linear import run_batched_linear
from .policy_mab import run_batched_mab
from .regret import RegretTrace, theoretical_bound_mab
from .rng import make_rng

logger = logging.getLogger(__name__)

KINDS = ("mab", "linear", "adversarial", "sweep")
ADVERSARIES = ("batchrandom", "switching", "iid", "file")
FORMATS = ("csv", "json", "svg")

Z95 = 1.959963984540054


@dataclass
class RunConfig:
    """Everything needed to reproduce an experiment."""

    kind: str = "mab"
    horizon: int = 1000
    batches: int | list[int] = 4
    reps: int = 100
    seed: int = 0
    means: list[float] | None = None
    reward_kind: str = "bernoulli"
    sigma: float | None = None
    theta: list[float] | None = None
    actions: list[list[float]] | None = None
    noise: str = "gaussian"
    adversary: str = "batchrandom"
    table_file: str | None = None
    q: float | None = None
    sweep_kind: str = "mab"
    out: str | None = None
    format: str = "json"
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def batch_list(self) -> list[int]:
        return list(self.batches) if isinstance(self.batches, (list, tuple)) else [int(self.batches)]

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"kind: expected one of {KINDS}, got {self.kind!r}")
        if self.kind == "sweep" and self.sweep_kind not in KINDS[:3]:
            raise ValidationError(f"sweep_kind: expected one of {KINDS[:3]}, got {self.sweep_kind!r}")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValidationError(f"horizon: must be a positive integer, got {self.horizon!r}")
        blist = self.batch_list()
        if not blist:
            raise ValidationError("batches: need at least one value")
        if self.kind != "sweep" and len(blist) != 1:
            raise ValidationError("batches: a list of values is only valid for sweeps")
        for b in blist:
            if not 1 <= int(b) <= self.horizon:
                raise ValidationError(f"batches: need 1 <= B <= T, got B={b}, T={self.horizon}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ValidationError(f"reps: must be >= 1, got {self.reps!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValidationError(f"seed: must be a non-negative integer, got {self.seed!r}")
        if self.format not in FORMATS:
            raise ValidationError(f"format: expected one of {FORMATS}, got {self.format!r}")
        if self.adversary not in ADVERSARIES:
            raise ValidationError(f"adversary: expected one of {ADVERSARIES}, got {self.adversary!r}")
        if self.workers < 1:
            raise ValidationError("workers: must be >= 1")
        base = self.sweep_kind if self.kind == "sweep" else self.kind
        if base == "mab" and not self.means:
            raise ValidationError("means: required for mab experiments")
        if base == "linear" and (self.theta is None or self.actions is None):
            raise ValidationError("theta/actions: required for linear experiments")
        if base == "adversarial" and self.adversary == "file" and not self.table_file:
            raise ValidationError("table_file: required with adversary 'file'")
        if base == "adversarial" and self.adversary == "iid" and not self.means:
            raise ValidationError("means: required with adversary 'iid'")
        # instance-level checks are delegated to the env constructors
        if base == "mab":
            self.mab_instance()
        elif base == "linear":
            self.linear_instance()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def mab_instance(self) -> StochasticMabInstance:
        return StochasticMabInstance(self.means, reward_kind=self.reward_kind, sigma=self.sigma)

    def linear_instance(self) -> LinearBanditInstance:
        return LinearBanditInstance(self.theta, self.actions, noise=self.noise)


@dataclass
class RunSummary:
    experiment: str
    n_batches: int
    horizon: int
    reps: int
    mean: float
    std: float
    ci_halfwidth: float
    min: float
    max: float
    finals: list[float]
    batch_count_mean: float
    batch_count_max: int
    bound: float | None = None
    traces: list[RegretTrace] = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("traces")
        return out


def summarize(finals, experiment: str = "", n_batches: int = 0, horizon: int = 0,
              batch_counts=None, bound: float | None = None, traces=None) -> RunSummary:
    finals = [float(x) for x in finals]
    arr = np.asarray(finals)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    counts = np.asarray(batch_counts if batch_counts is not None else [n_batches] * arr.size)
    return RunSummary(
        experiment=experiment,
        n_batches=n_batches,
        horizon=horizon,
        reps=arr.size,
        mean=math.fsum(finals) / arr.size,
        std=std,
        ci_halfwidth=Z95 * std / math.sqrt(arr.size),
        min=float(arr.min()),
        max=float(arr.max()),
        finals=finals,
        batch_count_mean=float(counts.mean()),
        batch_count_max=int(counts.max()),
        bound=bound,
        traces=list(traces or []),
    )


def _load_table(config: RunConfig) -> AdversarialRewardTable | None:
    if config.adversary != "file":
        return None
    table = AdversarialRewardTable.from_csv(config.table_file)
    if table.horizon != config.horizon:
        raise ValidationError(f"table_file: table has {table.horizon} rounds but horizon is {config.horizon}")
    return table


def _replicate(args) -> tuple[RegretTrace, int, int]:
    """One replication; returns (trace, batch count, pulls)."""
    config, kind, n_batches, rep, table = args
    rng = make_rng(config.seed, rep)
    t = config.horizon
    if kind == "mab":
        res = run_batched_mab(config.mab_instance(), t, n_batches, rng, q=config.q)
        pulls = int(res.pull_counts.sum())
    elif kind == "linear":
        res = run_batched_linear(config.linear_instance(), t, n_batches, rng)
        pulls = int(res.actions.size)
    else:
        if config.adversary == "batchrandom":
            table = make_batch_random_adversary(make_uniform_schedule(t, n_batches), rng)
        elif config.adversary == "switching":
            table = make_switching_adversary(t, rng)
        elif config.adversary == "iid":
            table = make_iid_adversary(config.means, t, rng)
        res = run_batched_adversarial(table, t, n_batches, rng)
        pulls = int(res.actions.size)
    return res.trace, res.n_batches, pulls


def run_replications(config: RunConfig, kind: str, n_batches: int) -> RunSummary:
    table = _load_table(config) if kind == "adversarial" else None
    jobs = [(config, kind, n_batches, rep, table) for rep in range(config.reps)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, config.reps // (4 * config.workers))))
    else:
        results = [_replicate(job) for job in jobs]
    traces, counts = [], []
    for trace, used, pulls in results:
        if pulls != config.horizon or used > n_batches:
            raise RuntimeError(f"run issued {pulls} pulls in {used} batches (T={config.horizon}, B={n_batches})")
        traces.append(trace)
        counts.append(used)
    bound = None
    if kind == "mab":
        bound = theoretical_bound_mab(config.mab_instance(), config.horizon, n_batches, q=config.q)
    label = kind if config.kind != "sweep" else f"{kind}_B{n_batches}"
    summary = summarize(
        [tr.final for tr in traces], label, n_batches, config.horizon,
        batch_counts=counts, bound=bound, traces=traces,
    )
    logger.info("%s: mean regret %.3f +/- %.3f over %d reps", label, summary.mean, summary.ci_halfwidth, summary.reps)
    return summary


def run_experiment(config: RunConfig) -> RunSummary:
    """Run a single (non-sweep) experiment."""
    if config.kind == "sweep":
        raise ValidationError("kind: use run_sweep for sweep experiments")
    return run_replications(config, config.kind, config.batch_list()[0])


def run_sweep(config: RunConfig) -> list[RunSummary]:
    """One summary per batch budget in ``config.batches``."""
    kind = config.sweep_kind if config.kind == "sweep" else config.kind
    return [run_replications(config, kind, int(b)) for b in config.batch_list()]


# -- export -----------------------------------------------------------------

CSV_HEADER = ["experiment", "rep", "round", "cum_regret"]


def write_traces_csv(summaries: list[RunSummary], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in summaries:
            for rep, tr in enumerate(s.traces):
                for t, v in enumerate(tr.cumulative, start=1):
                    writer.writerow([s.experiment, rep, t, repr(float(v))])


def read_traces_csv(path) -> dict[str, list[np.ndarray]]:
    """Parse a trace CSV back into ``{experiment: [trace per rep]}``."""
    rows: dict[str, dict[int, list[float]]] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValidationError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for exp, rep, _, value in reader:
            rows.setdefault(exp, {}).setdefault(int(rep), []).append(float(value))
    return {exp: [np.asarray(v) for _, v in sorted(reps.items())] for exp, reps in rows.items()}


def write_summary_json(summaries: list[RunSummary], path) -> None:
    payload = [s.to_dict() for s in summaries]
    with Path(path).open("w") as fh:
        json.dump(payload[0] if len(payload) == 1 else payload, fh, indent=2)


def write_svg(summaries: list[RunSummary], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for s in summaries:
        if not s.traces:
            continue
        curves = np.stack([tr.cumulative for tr in s.traces])
        mean = curves.mean(axis=0)
        half = Z95 * curves.std(axis=0, ddof=1) / math.sqrt(len(curves)) if len(curves) > 1 else 0 * mean
        rounds = np.arange(1, mean.size + 1)
        (line,) = ax.plot(rounds, mean, label=f"{s.experiment} (B={s.n_batches})")
        ax.fill_between(rounds, mean - half, mean + half, color=line.get_color(), alpha=0.25, linewidth=0)
        if s.bound is not None:
            ax.axhline(s.bound, color=line.get_color(), linestyle="--", linewidth=1,
                       label=f"regret bound (B={s.n_batches})")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.legend(loc="upper left", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def export(summaries, path, fmt: str) -> Path:
    """Write ``summaries`` to ``path`` as csv (traces), json (summary) or svg (plot)."""
    if isinstance(summaries, RunSummary):
        summaries = [summaries]
    path = Path(path)
    if fmt == "csv":
        write_traces_csv(summaries, path)
    elif fmt == "json":
        write_summary_json(summaries, path)
    elif fmt == "svg":
        write_svg(summaries, path)
    else:
        raise ValidationError(f"format: expected one of {FORMATS}, got {fmt!r}")
    return path


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Copy of ``config`` with the non-None overrides applied."""
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
