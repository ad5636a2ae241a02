"""Three-phase tuning campaign: orchestration, identifiers, persistence.

A campaign measures the default configuration as the baseline, explores
the space with a maximin Latin hypercube design, refines the best seeds
with simulated annealing, fine-tunes the surviving annealing results
with hill climbing, and finally re-measures the overall best against its
phase-2 ancestor.

Trials are identified by their lineage: ``c_default``, ``c_x`` for the
x-th design sample, ``c_{x,y}`` for the y-th annealing iteration seeded
from sample x, and ``c_{x,y,z}`` for the z-th hill-climbing iteration
started from the best annealing step ``c_{x,y}``.

State is persisted to a single versioned JSON document after every
trial (written atomically: temp file then rename). The trial list is
append-only; derived sections (design, selected seeds, traces,
validation) are recomputed deterministically on resume. Resuming replays
the campaign from the start with the same master seed, substituting
logged outcomes for executions, so the continuation is identical to an
uninterrupted run under a pure executor and no experiment ever runs
twice.
"""

from __future__ import annotations

import itertools
import json
import logging
import os
import re
import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from .annealing import (
    Evaluation,
    SaSettings,
    SaTrace,
    TemperatureSchedule,
    initial_temperature,
    sa_run,
)
from .early_stop import StopRule, ThroughputMonitor
from .errors import ConfigurationError, ExecutionError, StateError
from .execution import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    STATUS_TERMINATED,
    ExperimentRequest,
    ManifestSettings,
    build_executor,
    run_experiment,
)
from .hillclimb import HcSettings, HcTrace, gate_seeds, hc_run
from .sampling import maximin_lhs, min_pairwise_distance
from .space import ParameterSpace, load_space, map_to_concrete, map_to_normalized

logger = logging.getLogger(__name__)

STATE_VERSION = 1

PHASE_BASELINE = "baseline"
PHASE_LHS = "lhs"
PHASE_SA = "sa"
PHASE_HC = "hc"
PHASE_VALIDATION = "validation"

_ID_PATTERN = re.compile(
    r"^c_(?:default|(\d+)|\{(\d+),(\d+)\}|\{(\d+),(\d+),(\d+)\})$"
)


@dataclass(frozen=True)
class TrialId:
    """Lineage identifier of one trial."""

    x: int | None = None
    y: int | None = None
    z: int | None = None
    is_default: bool = False

    def __post_init__(self) -> None:
        if self.is_default:
            if self.x is not None or self.y is not None or self.z is not None:
                raise ValueError("the default identifier carries no lineage indexes")
        else:
            if self.x is None:
                raise ValueError("a non-default identifier needs at least x")
            if self.z is not None and self.y is None:
                raise ValueError("z requires y")

    def render(self) -> str:
        if self.is_default:
            return "c_default"
        if self.y is None:
            return f"c_{self.x}"
        if self.z is None:
            return f"c_{{{self.x},{self.y}}}"
        return f"c_{{{self.x},{self.y},{self.z}}}"

    @classmethod
    def parse(cls, text: str) -> "TrialId":
        match = _ID_PATTERN.match(text)
        if not match:
            raise ValueError(f"malformed trial identifier: {text!r}")
        groups = match.groups()
        if all(g is None for g in groups):
            return cls(is_default=True)
        if groups[0] is not None:
            return cls(x=int(groups[0]))
        if groups[1] is not None:
            return cls(x=int(groups[1]), y=int(groups[2]))
        return cls(x=int(groups[3]), y=int(groups[4]), z=int(groups[5]))


@dataclass(frozen=True)
class ExperimentSettings:
    duration_s: float = 480.0
    warmup_s: float = 180.0
    cadence_s: float = 5.0


@dataclass(frozen=True)
class LhsPhaseSettings:
    samples: int = 30
    restarts: int = 5
    repetitions: int = 3


@dataclass(frozen=True)
class SaPhaseSettings:
    iterations: int = 25
    params_per_move: int = 2
    step_range: float = 0.10
    repetitions: int = 1
    cooling_rate: float = 0.95
    initial_temperature: float | None = None
    accepted_loss: float = 2500.0
    acceptance_probability: float = 0.75

    def schedule(self) -> TemperatureSchedule:
        t0 = self.initial_temperature
        if t0 is None:
            t0 = initial_temperature(self.accepted_loss, self.acceptance_probability)
        return TemperatureSchedule(initial_temperature=t0, cooling_rate=self.cooling_rate)


@dataclass(frozen=True)
class HcPhaseSettings:
    iterations: int = 17
    params_per_move: int = 1
    step_range: float = 0.10
    repetitions: int = 1
    entry_gate: float | None = None


@dataclass(frozen=True)
class SeedSelectionSettings:
    tolerance: float = 0.95
    top_k: int = 6


@dataclass(frozen=True)
class ValidationSettings:
    repetitions: int = 3


@dataclass(frozen=True)
class CampaignConfig:
    space: ParameterSpace
    executor: dict
    master_seed: int = 1
    experiment: ExperimentSettings = ExperimentSettings()
    lhs: LhsPhaseSettings = LhsPhaseSettings()
    sa: SaPhaseSettings = SaPhaseSettings()
    hc: HcPhaseSettings = HcPhaseSettings()
    seed_selection: SeedSelectionSettings = SeedSelectionSettings()
    validation: ValidationSettings = ValidationSettings()
    stop_rules: tuple[StopRule, ...] = ()
    manifest: ManifestSettings = ManifestSettings()

    def to_dict(self) -> dict:
        return {
            "space": self.space.to_dict(),
            "executor": dict(self.executor),
            "seed": self.master_seed,
            "experiment": {
                "duration_s": self.experiment.duration_s,
                "warmup_s": self.experiment.warmup_s,
                "cadence_s": self.experiment.cadence_s,
            },
            "phases": {
                "lhs": {
                    "samples": self.lhs.samples,
                    "restarts": self.lhs.restarts,
                    "repetitions": self.lhs.repetitions,
                },
                "sa": {
                    "iterations": self.sa.iterations,
                    "params_per_move": self.sa.params_per_move,
                    "step_range": self.sa.step_range,
                    "repetitions": self.sa.repetitions,
                    "cooling_rate": self.sa.cooling_rate,
                    "initial_temperature": self.sa.initial_temperature,
                    "accepted_loss": self.sa.accepted_loss,
                    "acceptance_probability": self.sa.acceptance_probability,
                },
                "hc": {
                    "iterations": self.hc.iterations,
                    "params_per_move": self.hc.params_per_move,
                    "step_range": self.hc.step_range,
                    "repetitions": self.hc.repetitions,
                    "entry_gate": self.hc.entry_gate,
                },
            },
            "seed_selection": {
                "tolerance": self.seed_selection.tolerance,
                "top_k": self.seed_selection.top_k,
            },
            "validation": {"repetitions": self.validation.repetitions},
            "stop_rules": [
                {
                    "fraction": r.fraction,
                    "sustain_s": r.sustain_s,
                    "id": r.rule_id,
                    "during_warmup": r.during_warmup,
                }
                for r in self.stop_rules
            ],
            "manifest": {
                "benchmark": self.manifest.benchmark,
                "api_version": self.manifest.api_version,
                "kind": self.manifest.kind,
                "namespace": self.manifest.namespace,
                "name_prefix": self.manifest.name_prefix,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | None = None) -> "CampaignConfig":
        if not isinstance(data, Mapping):
            raise ConfigurationError("campaign config must be a mapping")
        if "space" not in data:
            raise ConfigurationError("campaign config needs a 'space' section or file path")
        space_section = data["space"]
        if isinstance(space_section, str):
            space_path = Path(space_section)
            if not space_path.is_absolute() and base_dir is not None:
                space_path = base_dir / space_path
            space = load_space(space_path)
        else:
            space = ParameterSpace.from_dict(space_section)
        if "executor" not in data:
            raise ConfigurationError("campaign config needs an 'executor' section")

        def section(name: str) -> dict:
            value = data.get(name, {}) or {}
            if not isinstance(value, Mapping):
                raise ConfigurationError(f"config section {name!r} must be a mapping")
            return dict(value)

        phases = section("phases")

        def phase(name: str) -> dict:
            value = phases.get(name, {}) or {}
            if not isinstance(value, Mapping):
                raise ConfigurationError(f"phase section {name!r} must be a mapping")
            return dict(value)

        try:
            experiment = ExperimentSettings(**section("experiment"))
            lhs = LhsPhaseSettings(**phase("lhs"))
            sa = SaPhaseSettings(**phase("sa"))
            hc = HcPhaseSettings(**phase("hc"))
            seed_selection = SeedSelectionSettings(**section("seed_selection"))
            validation = ValidationSettings(**section("validation"))
            manifest = ManifestSettings(**section("manifest"))
        except TypeError as exc:
            raise ConfigurationError(f"invalid campaign config field: {exc}") from None
        rules = []
        for entry in data.get("stop_rules", []) or []:
            if not isinstance(entry, Mapping):
                raise ConfigurationError("each stop rule must be a mapping")
            rules.append(
                StopRule(
                    fraction=float(entry["fraction"]),
                    sustain_s=float(entry["sustain_s"]),
                    rule_id=str(entry.get("id", "")),
                    during_warmup=bool(entry.get("during_warmup", True)),
                )
            )
        config = cls(
            space=space,
            executor=dict(data["executor"]),
            master_seed=int(data.get("seed", 1)),
            experiment=experiment,
            lhs=lhs,
            sa=sa,
            hc=hc,
            seed_selection=seed_selection,
            validation=validation,
            stop_rules=tuple(rules),
            manifest=manifest,
        )
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "CampaignConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read campaign config {path}: {exc}") from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f" (line {mark.line + 1})" if mark is not None else ""
            raise ConfigurationError(f"parse error in {path}{where}: {exc}") from None
        return cls.from_dict(data, base_dir=path.parent)

    def validate(self) -> None:
        d = self.space.dimension
        if self.sa.params_per_move > d:
            raise ConfigurationError(
                f"sa.params_per_move ({self.sa.params_per_move}) exceeds dimension {d}"
            )
        if self.hc.params_per_move > d:
            raise ConfigurationError(
                f"hc.params_per_move ({self.hc.params_per_move}) exceeds dimension {d}"
            )
        if self.seed_selection.top_k < 1:
            raise ConfigurationError("seed_selection.top_k must be >= 1")
        if not 0.0 <= self.seed_selection.tolerance:
            raise ConfigurationError("seed_selection.tolerance must be >= 0")
        self.sa.schedule()  # validates temperature settings


def derive_seed(master_seed: int, *path) -> int:
    """Deterministic named child seed of the campaign master seed."""
    tokens = [int(master_seed) & 0xFFFFFFFF]
    for part in path:
        if isinstance(part, str):
            tokens.append(zlib.crc32(part.encode()))
        else:
            tokens.append(int(part))
    state = np.random.SeedSequence(tokens).generate_state(4, np.uint32)
    return int.from_bytes(state.tobytes(), "little")


@dataclass
class TrialRecord:
    """One logged trial: lineage, point, and measured outcome."""

    seq: int
    trial_id: str
    phase: str
    x: int | None
    y: int | None
    z: int | None
    normalized: list[float]
    values: dict
    status: str
    objective: float | None
    per_rep: list[float]
    repetitions: int
    rule_id: str | None = None
    reason: str | None = None
    latency: dict | None = None
    started: float = 0.0
    finished: float = 0.0

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "id": self.trial_id,
            "phase": self.phase,
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "normalized": self.normalized,
            "values": self.values,
            "status": self.status,
            "objective": self.objective,
            "per_rep": self.per_rep,
            "repetitions": self.repetitions,
            "rule_id": self.rule_id,
            "reason": self.reason,
            "latency": self.latency,
            "started": self.started,
            "finished": self.finished,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "TrialRecord":
        return cls(
            seq=int(data["seq"]),
            trial_id=str(data["id"]),
            phase=str(data["phase"]),
            x=data.get("x"),
            y=data.get("y"),
            z=data.get("z"),
            normalized=list(data.get("normalized", [])),
            values=dict(data.get("values", {})),
            status=str(data["status"]),
            objective=data.get("objective"),
            per_rep=list(data.get("per_rep", [])),
            repetitions=int(data.get("repetitions", 1)),
            rule_id=data.get("rule_id"),
            reason=data.get("reason"),
            latency=data.get("latency"),
            started=float(data.get("started", 0.0)),
            finished=float(data.get("finished", 0.0)),
        )


class CampaignState:
    """Full campaign record: config snapshot, append-only trial log, and
    derived per-phase results."""

    def __init__(self, config: CampaignConfig, path: str | Path | None = None):
        self.config = config
        self.path = Path(path) if path is not None else None
        self.trials: list[TrialRecord] = []
        self.results: dict = {}
        self.completed = False

    def append(self, record: TrialRecord) -> None:
        self.trials.append(record)
        self.save()

    def save(self) -> None:
        if self.path is None:
            return
        payload = json.dumps(self.to_dict(), indent=1)
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(payload, encoding="utf-8")
        os.replace(tmp, self.path)

    def to_dict(self) -> dict:
        return {
            "version": STATE_VERSION,
            "completed": self.completed,
            "config": self.config.to_dict(),
            "results": self.results,
            "trials": [t.to_dict() for t in self.trials],
        }

    @classmethod
    def load(cls, path: str | Path) -> "CampaignState":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise StateError(f"cannot read state file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise StateError(f"state file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict) or data.get("version") != STATE_VERSION:
            raise StateError(
                f"state file {path} has unsupported version {data.get('version')!r} "
                f"(expected {STATE_VERSION})"
            )
        try:
            config = CampaignConfig.from_dict(data["config"])
            state = cls(config, path=path)
            state.results = data.get("results", {})
            state.completed = bool(data.get("completed", False))
            state.trials = [TrialRecord.from_dict(t) for t in data.get("trials", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise StateError(f"state file {path} is corrupt: {exc}") from None
        return state

    def fingerprint(self) -> str:
        """Canonical serialization with wall-clock timestamps removed,
        for determinism comparisons."""
        data = self.to_dict()
        for trial in data["trials"]:
            trial.pop("started", None)
            trial.pop("finished", None)
        return json.dumps(data, sort_keys=True)

    def baseline_record(self) -> TrialRecord | None:
        for record in self.trials:
            if record.phase == PHASE_BASELINE:
                return record
        return None

    def phase_trials(self, phase: str) -> list[TrialRecord]:
        return [t for t in self.trials if t.phase == phase]

    def best_record(self) -> TrialRecord | None:
        best = None
        for record in self.trials:
            if record.status != STATUS_COMPLETED or record.objective is None:
                continue
            if best is None or record.objective > best.objective:
                best = record
        return best

    def accounting(self) -> dict:
        """Trial-count bookkeeping: expected per-phase counts derived
        from the config and results versus the actual log."""
        by_phase: dict[str, int] = {}
        for record in self.trials:
            by_phase[record.phase] = by_phase.get(record.phase, 0) + 1
        selected = self.results.get("seeds", {}).get("selected", [])
        gated = self.results.get("hc_gate", {}).get("passed", [])
        validation_runs = 2 if self.results.get("validation") else 0
        expected = (
            1
            + self.config.lhs.samples
            + len(selected) * self.config.sa.iterations
            + len(gated) * self.config.hc.iterations
            + validation_runs
        )
        return {
            "expected_total": expected,
            "actual_total": len(self.trials),
            "by_phase": by_phase,
            "selected_seeds": len(selected),
            "gated_seeds": len(gated),
            "validation_runs": validation_runs,
        }


def select_seeds(
    phase1: Sequence[TrialRecord],
    baseline_objective: float,
    tolerance: float,
    top_k: int,
) -> list[TrialRecord]:
    """Completed phase-1 trials at or above tolerance * baseline, best
    first, capped at top_k. Falls back to the best completed trials
    regardless of tolerance when none qualify."""
    completed = [
        r for r in phase1 if r.status == STATUS_COMPLETED and r.objective is not None
    ]
    passing = [r for r in completed if r.objective >= tolerance * baseline_objective]
    if not passing:
        logger.warning(
            "no configuration reached %.3g x baseline; falling back to the "
            "best %d completed configurations",
            tolerance,
            top_k,
        )
        passing = completed
    ranked = sorted(passing, key=lambda r: -r.objective)
    return ranked[:top_k]


def _sa_trace_summary(trace: SaTrace) -> dict:
    return {
        "start_objective": trace.start_objective,
        "steps": [
            {
                "iteration": s.iteration,
                "objective": s.objective,
                "temperature": s.temperature,
                "accepted": s.accepted,
                "status": s.status,
            }
            for s in trace.steps
        ],
        "best": {
            "iteration": trace.best_iteration,
            "objective": trace.best_objective,
            "config": [float(v) for v in trace.best_config],
        },
    }


def _hc_trace_summary(trace: HcTrace) -> dict:
    return {
        "start_objective": trace.start_objective,
        "steps": [
            {
                "iteration": s.iteration,
                "objective": s.objective,
                "accepted": s.accepted,
                "status": s.status,
            }
            for s in trace.steps
        ],
        "best": {
            "iteration": trace.best_iteration,
            "objective": trace.best_objective,
            "config": [float(v) for v in trace.best_config],
        },
    }


def _record_evaluation(record: TrialRecord) -> Evaluation:
    if record.status == STATUS_COMPLETED:
        return Evaluation(objective=record.objective)
    if record.status == STATUS_TERMINATED:
        return Evaluation(objective=record.objective, completed=False, note=record.rule_id)
    return Evaluation(objective=None, completed=False, failed=True, note=record.reason)


class Campaign:
    """Drives one campaign over a state, executing or replaying trials."""

    def __init__(
        self,
        config: CampaignConfig,
        state: CampaignState | None = None,
        executor=None,
    ):
        self.config = config
        self.space = config.space
        self.state = state if state is not None else CampaignState(config)
        self.executor = executor if executor is not None else build_executor(
            config.executor, self.space
        )
        self._cursor = 0
        self._baseline: float | None = None

    # -- trial execution / replay -------------------------------------

    def _run_point(
        self,
        trial_id: TrialId,
        phase: str,
        u: np.ndarray,
        repetitions: int,
        with_monitor: bool = True,
    ) -> TrialRecord:
        rendered = trial_id.render()
        index = self._cursor
        if index < len(self.state.trials):
            record = self.state.trials[index]
            if record.trial_id != rendered or record.phase != phase:
                raise StateError(
                    f"trial log mismatch at position {index}: expected "
                    f"{rendered}/{phase}, found {record.trial_id}/{record.phase}; "
                    f"was the state produced by a different configuration?"
                )
            self._cursor += 1
            return record

        values = map_to_concrete(self.space, u)
        request = ExperimentRequest(
            config=values,
            experiment_id=rendered,
            duration_s=self.config.experiment.duration_s,
            warmup_s=self.config.experiment.warmup_s,
            cadence_s=self.config.experiment.cadence_s,
            repetitions=repetitions,
            baseline_throughput=self._baseline,
        )
        monitor = None
        if with_monitor and self.config.stop_rules and self._baseline:
            monitor = ThroughputMonitor(
                self.config.stop_rules, self._baseline, self.config.experiment.warmup_s
            )
        started = time.time()
        outcome = run_experiment(request, self.executor, monitor)
        record = TrialRecord(
            seq=index,
            trial_id=rendered,
            phase=phase,
            x=trial_id.x,
            y=trial_id.y,
            z=trial_id.z,
            normalized=[float(v) for v in np.asarray(u, dtype=float)],
            values=values,
            status=outcome.status,
            objective=outcome.objective,
            per_rep=outcome.per_rep_objectives,
            repetitions=repetitions,
            rule_id=outcome.rule_id,
            reason=outcome.reason,
            latency=outcome.latency_summary,
            started=started,
            finished=time.time(),
        )
        logger.info(
            "trial %s (%s): %s%s",
            rendered,
            phase,
            outcome.status,
            f", objective {outcome.objective:.1f}" if outcome.objective is not None else "",
        )
        self.state.append(record)
        self._cursor += 1
        return record

    # -- phases --------------------------------------------------------

    def run(self) -> CampaignState:
        config = self.config
        d = self.space.dimension

        baseline_record = self._run_point(
            TrialId(is_default=True),
            PHASE_BASELINE,
            map_to_normalized(self.space, self.space.default_values()),
            config.lhs.repetitions,
            with_monitor=False,
        )
        if baseline_record.status != STATUS_COMPLETED or baseline_record.objective is None:
            raise ExecutionError(
                "baseline measurement did not complete "
                f"({baseline_record.status}: {baseline_record.reason or baseline_record.rule_id}); "
                "the campaign needs a baseline for seed selection and stop rules"
            )
        self._baseline = baseline_record.objective
        self.state.results["baseline"] = {
            "trial": baseline_record.trial_id,
            "objective": baseline_record.objective,
        }

        design = maximin_lhs(
            config.lhs.samples, d, config.lhs.restarts, derive_seed(config.master_seed, "lhs")
        )
        self.state.results["lhs"] = {
            "seed": design.seed,
            "restarts": design.restarts,
            "min_pairwise_distance": min_pairwise_distance(design),
            "samples": design.samples.tolist(),
        }
        for i in range(len(design)):
            self._run_point(
                TrialId(x=i + 1), PHASE_LHS, design.samples[i], config.lhs.repetitions
            )

        phase1 = self.state.phase_trials(PHASE_LHS)
        seeds = select_seeds(
            phase1,
            self._baseline,
            config.seed_selection.tolerance,
            config.seed_selection.top_k,
        )
        self.state.results["seeds"] = {
            "tolerance": config.seed_selection.tolerance,
            "top_k": config.seed_selection.top_k,
            "selected": [r.trial_id for r in seeds],
        }
        if not seeds:
            logger.warning("no usable phase-1 configuration; skipping the search phases")

        sa_section = self.state.results.setdefault("sa", {})
        sa_settings = SaSettings(
            schedule=config.sa.schedule(),
            iterations=config.sa.iterations,
            params_per_move=config.sa.params_per_move,
            step_range=config.sa.step_range,
        )
        sa_traces: list[tuple[TrialRecord, SaTrace]] = []
        for seed in seeds:
            counter = itertools.count(1)

            def evaluate(u, _x=seed.x, _counter=counter):
                record = self._run_point(
                    TrialId(x=_x, y=next(_counter)), PHASE_SA, u, config.sa.repetitions
                )
                return _record_evaluation(record)

            rng = np.random.default_rng(derive_seed(config.master_seed, "sa", seed.x))
            trace = sa_run(
                np.asarray(seed.normalized), seed.objective, sa_settings, evaluate, rng
            )
            sa_traces.append((seed, trace))
            sa_section[seed.trial_id] = _sa_trace_summary(trace)
            self.state.save()

        candidates = [((seed, trace), trace.best_objective) for seed, trace in sa_traces]
        if config.hc.entry_gate is not None:
            gated = gate_seeds(candidates, config.hc.entry_gate)
        else:
            gated = list(candidates)
        self.state.results["hc_gate"] = {
            "entry_gate": config.hc.entry_gate,
            "passed": [seed.trial_id for (seed, _), _ in gated],
            "excluded": [
                seed.trial_id
                for (seed, _), _ in candidates
                if seed.trial_id not in {s.trial_id for (s, _), _ in gated}
            ],
        }

        hc_section = self.state.results.setdefault("hc", {})
        hc_settings = HcSettings(
            iterations=config.hc.iterations,
            params_per_move=config.hc.params_per_move,
            step_range=config.hc.step_range,
            entry_gate=config.hc.entry_gate,
        )
        hc_runs: list[tuple[TrialRecord, SaTrace, HcTrace]] = []
        for (seed, sa_trace), _ in gated:
            counter = itertools.count(1)
            y = sa_trace.best_iteration

            def evaluate(u, _x=seed.x, _y=y, _counter=counter):
                record = self._run_point(
                    TrialId(x=_x, y=_y, z=next(_counter)), PHASE_HC, u, config.hc.repetitions
                )
                return _record_evaluation(record)

            rng = np.random.default_rng(derive_seed(config.master_seed, "hc", seed.x))
            trace = hc_run(
                sa_trace.best_config, sa_trace.best_objective, hc_settings, evaluate, rng
            )
            hc_runs.append((seed, sa_trace, trace))
            start_id = TrialId(x=seed.x, y=y).render() if y > 0 else seed.trial_id
            hc_section[start_id] = _hc_trace_summary(trace)
            self.state.save()

        if hc_runs:
            self._validate_best(hc_runs)

        self.state.completed = True
        self.state.save()
        return self.state

    def _validate_best(self, hc_runs) -> None:
        config = self.config
        seed, sa_trace, hc_trace = max(hc_runs, key=lambda item: item[2].best_objective)
        y = sa_trace.best_iteration
        if hc_trace.best_iteration > 0:
            best_id = TrialId(x=seed.x, y=y, z=hc_trace.best_iteration)
        elif y > 0:
            best_id = TrialId(x=seed.x, y=y)
        else:
            best_id = TrialId(x=seed.x)
        ancestor_id = TrialId(x=seed.x, y=y) if y > 0 else TrialId(x=seed.x)

        best_rec = self._run_point(
            best_id,
            PHASE_VALIDATION,
            hc_trace.best_config,
            config.validation.repetitions,
        )
        ancestor_rec = self._run_point(
            ancestor_id,
            PHASE_VALIDATION,
            sa_trace.best_config,
            config.validation.repetitions,
        )
        comparison = _compare_validation(best_rec, ancestor_rec)
        self.state.results["validation"] = comparison
        self.state.save()


def _spread(per_rep: list[float]) -> dict | None:
    if not per_rep:
        return None
    return {"min": float(min(per_rep)), "max": float(max(per_rep))}


def _compare_validation(best: TrialRecord, ancestor: TrialRecord) -> dict:
    relative = None
    if (
        best.objective is not None
        and ancestor.objective is not None
        and ancestor.objective != 0
    ):
        relative = (best.objective - ancestor.objective) / ancestor.objective
    return {
        "best": {
            "trial": best.trial_id,
            "objective": best.objective,
            "per_rep": best.per_rep,
            "spread": _spread(best.per_rep),
            "status": best.status,
        },
        "ancestor": {
            "trial": ancestor.trial_id,
            "objective": ancestor.objective,
            "per_rep": ancestor.per_rep,
            "spread": _spread(ancestor.per_rep),
            "status": ancestor.status,
        },
        "relative_difference": relative,
    }


def run_campaign(
    config: CampaignConfig,
    state_path: str | Path | None = None,
    executor=None,
) -> CampaignState:
    """Run (or continue) a campaign, persisting after every trial."""
    if state_path is not None and Path(state_path).exists():
        state = CampaignState.load(state_path)
        if state.config.to_dict() != config.to_dict():
            raise StateError(
                f"state file {state_path} was produced by a different configuration; "
                "use resume, a fresh state path, or the original config"
            )
    else:
        state = CampaignState(config, path=state_path)
    return Campaign(config, state=state, executor=executor).run()


def resume_campaign(state_path: str | Path, executor=None) -> CampaignState:
    """Continue a persisted campaign using its embedded config snapshot."""
    state = CampaignState.load(state_path)
    return Campaign(state.config, state=state, executor=executor).run()


@dataclass(frozen=True)
class ValidationReport:
    best_trial: str
    best_objective: float | None
    best_per_rep: tuple[float, ...]
    ancestor_trial: str
    ancestor_objective: float | None
    ancestor_per_rep: tuple[float, ...]
    relative_difference: float | None

    def to_dict(self) -> dict:
        return {
            "best": {
                "trial": self.best_trial,
                "objective": self.best_objective,
                "per_rep": list(self.best_per_rep),
                "spread": _spread(list(self.best_per_rep)),
            },
            "ancestor": {
                "trial": self.ancestor_trial,
                "objective": self.ancestor_objective,
                "per_rep": list(self.ancestor_per_rep),
                "spread": _spread(list(self.ancestor_per_rep)),
            },
            "relative_difference": self.relative_difference,
        }


def validate_best(
    state: CampaignState, repetitions: int | None = None, executor=None
) -> ValidationReport:
    """Re-measure the campaign's best configuration and its phase-2
    starting point; does not modify the state."""
    hc_section = state.results.get("hc", {})
    if not hc_section:
        raise ConfigurationError("state contains no hill-climbing results to validate")
    config = state.config
    repetitions = repetitions if repetitions is not None else config.validation.repetitions
    executor = executor if executor is not None else build_executor(
        config.executor, config.space
    )
    baseline = state.results.get("baseline", {}).get("objective")

    start_id, trace = max(
        hc_section.items(), key=lambda item: item[1]["best"]["objective"]
    )
    best_u = np.asarray(trace["best"]["config"], dtype=float)
    start_records = [r for r in state.trials if r.trial_id == start_id]
    if not start_records:
        raise StateError(f"hill-climbing start {start_id} missing from the trial log")
    ancestor_u = np.asarray(start_records[0].normalized, dtype=float)

    def measure(u: np.ndarray, label: str) -> tuple[float | None, list[float]]:
        request = ExperimentRequest(
            config=map_to_concrete(config.space, u),
            experiment_id=label,
            duration_s=config.experiment.duration_s,
            warmup_s=config.experiment.warmup_s,
            cadence_s=config.experiment.cadence_s,
            repetitions=repetitions,
            baseline_throughput=baseline,
        )
        monitor = None
        if config.stop_rules and baseline:
            monitor = ThroughputMonitor(
                config.stop_rules, baseline, config.experiment.warmup_s
            )
        outcome = run_experiment(request, executor, monitor)
        return outcome.objective, outcome.per_rep_objectives

    best_objective, best_reps = measure(best_u, "revalidate-best")
    ancestor_objective, ancestor_reps = measure(ancestor_u, "revalidate-start")
    relative = None
    if best_objective is not None and ancestor_objective:
        relative = (best_objective - ancestor_objective) / ancestor_objective
    best_z = trace["best"]["iteration"]
    start_tid = TrialId.parse(start_id)
    if best_z > 0:
        best_trial = TrialId(x=start_tid.x, y=start_tid.y or 0, z=best_z).render() \
            if start_tid.y is not None else TrialId(x=start_tid.x, y=0, z=best_z).render()
    else:
        best_trial = start_id
    return ValidationReport(
        best_trial=best_trial,
        best_objective=best_objective,
        best_per_rep=tuple(best_reps),
        ancestor_trial=start_id,
        ancestor_objective=ancestor_objective,
        ancestor_per_rep=tuple(ancestor_reps),
        relative_difference=relative,
    )
