"""Command-line entry point.

Subcommands: init, run, resume, report, validate, render-manifest.
Exit codes: 0 success, 2 configuration/validation error, 3 runtime or
executor error, 4 corrupt state. The config path and master seed can
also come from the STREAMTUNE_CONFIG and STREAMTUNE_SEED environment
variables.
"""

from __future__ import annotations

import argparse
import importlib.resources
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import filelock

from .analysis import emit_report
from .campaign import (
    CampaignConfig,
    CampaignState,
    TrialId,
    resume_campaign,
    run_campaign,
    validate_best,
)
from .errors import ConfigurationError, ExecutionError, StateError
from .execution import ExperimentRequest, render_execution_manifest
from .space import map_to_normalized

logger = logging.getLogger(__name__)

DEFAULT_STATE = "streamtune_state.json"
_SCAFFOLD_FILES = ("campaign.yaml", "kafka_streams_space.yaml")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="campaign config file (or $STREAMTUNE_CONFIG)")
    common.add_argument("--state", help=f"campaign state file (default {DEFAULT_STATE})")
    common.add_argument("--seed", type=int, help="override the master seed (or $STREAMTUNE_SEED)")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="streamtune",
        description="Experiment-driven configuration tuning for stream processing benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser(
        "init", parents=[common], help="write a template campaign config and parameter space"
    )
    p_init.add_argument("target", nargs="?", default=".", help="target directory")
    p_init.add_argument("--force", action="store_true", help="overwrite existing files")

    sub.add_parser("run", parents=[common], help="run a tuning campaign")
    sub.add_parser("resume", parents=[common], help="continue a persisted campaign")

    p_report = sub.add_parser("report", parents=[common], help="emit the report bundle")
    p_report.add_argument("--out", default="report", help="output directory")
    p_report.add_argument(
        "--formats",
        default="markdown,csv,jsonl,svg",
        help="comma-separated subset of markdown,csv,jsonl,svg",
    )

    p_validate = sub.add_parser(
        "validate", parents=[common], help="re-measure the best configuration and its ancestor"
    )
    p_validate.add_argument("--repetitions", type=int, help="validation repetitions")

    p_manifest = sub.add_parser(
        "render-manifest", parents=[common], help="render a benchmark execution manifest"
    )
    p_manifest.add_argument("--id", default="c_default", help="experiment identifier")
    p_manifest.add_argument("--out", help="output file (stdout when omitted)")

    return parser


def _config_path(args) -> Path:
    path = args.config or os.environ.get("STREAMTUNE_CONFIG")
    if not path:
        raise ConfigurationError(
            "no campaign config given (use --config or $STREAMTUNE_CONFIG)"
        )
    return Path(path)


def _load_config(args) -> CampaignConfig:
    config = CampaignConfig.from_file(_config_path(args))
    seed = args.seed if args.seed is not None else os.environ.get("STREAMTUNE_SEED")
    if seed is not None:
        config = replace(config, master_seed=int(seed))
    return config


def _state_path(args) -> Path:
    return Path(args.state or DEFAULT_STATE)


def _lock(state_path: Path) -> filelock.FileLock:
    return filelock.FileLock(str(state_path) + ".lock", timeout=0.5)


def _cmd_init(args) -> int:
    target = Path(args.target)
    target.mkdir(parents=True, exist_ok=True)
    existing = [name for name in _SCAFFOLD_FILES if (target / name).exists()]
    if existing and not args.force:
        raise ConfigurationError(
            f"refusing to overwrite {', '.join(existing)} in {target} (use --force)"
        )
    data = importlib.resources.files("streamtune") / "data"
    for name, source in (("campaign.yaml", "demo_campaign.yaml"),
                         ("kafka_streams_space.yaml", "kafka_streams_space.yaml")):
        (target / name).write_text(
            (data / source).read_text(encoding="utf-8"), encoding="utf-8"
        )
        print(f"wrote {target / name}")
    print("edit campaign.yaml, then: streamtune run --config campaign.yaml")
    return 0


def _cmd_run(args) -> int:
    config = _load_config(args)
    state_path = _state_path(args)
    try:
        with _lock(state_path):
            state = run_campaign(config, state_path=state_path)
    except filelock.Timeout:
        raise ExecutionError(f"state file {state_path} is locked by another campaign")
    print(_summary(state, state_path))
    return 0


def _cmd_resume(args) -> int:
    state_path = _state_path(args)
    if not state_path.exists():
        raise ConfigurationError(f"state file {state_path} does not exist")
    try:
        with _lock(state_path):
            state = resume_campaign(state_path)
    except filelock.Timeout:
        raise ExecutionError(f"state file {state_path} is locked by another campaign")
    print(_summary(state, state_path))
    return 0


def _summary(state: CampaignState, state_path: Path) -> str:
    best = state.best_record()
    lines = [f"campaign {'completed' if state.completed else 'in progress'}: "
             f"{len(state.trials)} trials logged to {state_path}"]
    baseline = state.results.get("baseline", {}).get("objective")
    if baseline is not None:
        lines.append(f"baseline objective: {baseline:.1f} records/s")
    if best is not None and best.objective is not None:
        lines.append(f"best: {best.trial_id} at {best.objective:.1f} records/s")
    return "\n".join(lines)


def _cmd_report(args) -> int:
    state = CampaignState.load(_state_path(args))
    formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
    unknown = [f for f in formats if f not in ("markdown", "csv", "jsonl", "svg")]
    if unknown:
        raise ConfigurationError(f"unknown report formats: {unknown}")
    written = emit_report(state, args.out, formats)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_validate(args) -> int:
    state = CampaignState.load(_state_path(args))
    report = validate_best(state, repetitions=args.repetitions)

    def fmt(value: float | None) -> str:
        return f"{value:.1f} records/s" if value is not None else "no objective (failed)"

    print(f"best     {report.best_trial}: {fmt(report.best_objective)} "
          f"over {len(report.best_per_rep)} repetitions")
    print(f"ancestor {report.ancestor_trial}: {fmt(report.ancestor_objective)} "
          f"over {len(report.ancestor_per_rep)} repetitions")
    if report.relative_difference is not None:
        print(f"relative difference: {report.relative_difference * 100:+.1f}%")
    return 0


def _cmd_render_manifest(args) -> int:
    config = _load_config(args)
    try:
        TrialId.parse(args.id)  # reject malformed identifiers before side effects
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    request = ExperimentRequest(
        config=config.space.default_values(),
        experiment_id=args.id,
        duration_s=config.experiment.duration_s,
        warmup_s=config.experiment.warmup_s,
        cadence_s=config.experiment.cadence_s,
        repetitions=config.lhs.repetitions,
    )
    # constructing the normalized point validates the declared defaults
    map_to_normalized(config.space, request.config)
    text = render_execution_manifest(request, config.manifest)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "init": _cmd_init,
    "run": _cmd_run,
    "resume": _cmd_resume,
    "report": _cmd_report,
    "validate": _cmd_validate,
    "render-manifest": _cmd_render_manifest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        logger.error("%s", exc)
        return 2
    except StateError as exc:
        logger.error("%s", exc)
        return 4
    except ExecutionError as exc:
        logger.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
