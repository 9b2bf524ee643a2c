"""Command-line entry point: ``batchbandits {mab,linear,adversarial,sweep}``.

Settings are resolved as: built-in defaults < ``--config FILE`` (JSON with
RunConfig field names) < explicit command-line flags.

Exit codes: 0 success, 1 invalid input, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .harness import ADVERSARIES, FORMATS, RunConfig, export, run_experiment, run_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def load_actions(path) -> list[list[float]]:
    """Read actions from JSON (list of vectors) or CSV/whitespace text (one per row)."""
    path = Path(path)
    if path.suffix == ".json":
        with path.open() as fh:
            data = json.load(fh)
    else:
        data = np.loadtxt(path, delimiter="," if path.suffix == ".csv" else None, ndmin=2).tolist()
    return [list(map(float, row)) for row in data]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON config; explicit flags override its values")
    common.add_argument("--horizon", "-T", type=int, help="time horizon T")
    common.add_argument("--reps", "-R", type=int, help="number of replications")
    common.add_argument("--seed", "-S", type=int, help="master seed")
    common.add_argument("--out", metavar="PATH", help="output path (stdout summary if omitted)")
    common.add_argument("--format", choices=FORMATS, help="output format (default json)")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--verbose", "-v", action="count", default=0, help="-v: per-run info, -vv: per-batch log")
    common.add_argument("--means", type=_floats, help="arm means, comma separated")
    common.add_argument("--reward-kind", choices=["bernoulli", "truncated_gaussian"])
    common.add_argument("--sigma", type=float, help="sigma of truncated-Gaussian rewards")
    common.add_argument("--theta", type=_floats, help="hidden parameter of a linear instance")
    common.add_argument("--actions-file", metavar="FILE", help="action vectors (.json, .csv or whitespace text)")
    common.add_argument("--noise", choices=["gaussian", "uniform", "none"], help="linear reward noise")
    common.add_argument("--adversary", choices=ADVERSARIES, help="adversarial reward table construction")
    common.add_argument("--table-file", metavar="FILE", help="reward table CSV for --adversary file")
    common.add_argument("--q", type=float, help="override the batch growth factor q (mab only)")

    parser = _Parser(
        prog="batchbandits",
        description="Batched bandit regret experiments. Precedence: defaults < --config < flags.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, help_text in [
        ("mab", "batched arm elimination on a stochastic K-armed bandit"),
        ("linear", "batched G-optimal elimination on a stochastic linear bandit"),
        ("adversarial", "batch-delayed EXP3 on an adversarial reward table"),
    ]:
        p = sub.add_parser(kind, parents=[common], help=help_text)
        p.add_argument("--batches", "-B", type=int, help="number of batches B")
    p = sub.add_parser("sweep", parents=[common], help="repeat an experiment for several batch budgets")
    p.add_argument("--batches", "-B", type=_ints, help="comma-separated batch budgets")
    p.add_argument("--of", dest="sweep_kind", choices=["mab", "linear", "adversarial"], help="experiment to sweep (default mab)")
    return parser


_FLAG_FIELDS = (
    "horizon", "reps", "seed", "out", "format", "workers", "means", "reward_kind", "sigma",
    "theta", "noise", "adversary", "table_file", "q", "batches", "sweep_kind",
)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    if args.actions_file:
        data["actions"] = load_actions(args.actions_file)
    data["kind"] = args.kind
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
    return RunConfig(**data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(name)s: %(message)s")

    try:
        config = resolve_config(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        summaries = run_sweep(config) if config.kind == "sweep" else [run_experiment(config)]
        if config.out:
            export(summaries, config.out, config.format)
        else:
            payload = [s.to_dict() for s in summaries]
            for item in payload:
                item.pop("finals")
            json.dump(payload[0] if len(payload) == 1 else payload, sys.stdout, indent=2)
            sys.stdout.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
