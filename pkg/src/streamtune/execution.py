"""Experiment execution: run one configuration, collect a throughput
time series, and aggregate the objective.

Three executors are provided:

- :class:`SyntheticExecutor` evaluates a Gaussian-bump response surface
  in simulated time (useful for tests, demos, and dry runs),
- :class:`CommandExecutor` launches an external benchmark command and
  ingests metric lines ``t_seconds,throughput[,latency_ms]`` from its
  stdout or from a metrics file,
- :func:`render_execution_manifest` emits a custom-resource style YAML
  document describing one benchmark run, for cluster setups where an
  operator picks up manifests instead of us launching processes.

The objective of a run is the mean throughput over samples past the
warm-up prefix, averaged across repetitions.
"""

from __future__ import annotations

import logging
import math
import re
import shlex
import subprocess
import tempfile
import threading
import time
import queue
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterator, Mapping

import numpy as np

from .errors import ConfigurationError, ExecutionError
from .space import ParameterSpace, map_to_normalized

if TYPE_CHECKING:
    from .early_stop import ThroughputMonitor

logger = logging.getLogger(__name__)

STATUS_COMPLETED = "completed"
STATUS_TERMINATED = "terminated_early"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class MetricSample:
    t: float  # seconds since run start
    throughput: float  # records/s
    latency: float | None = None  # milliseconds

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"sample timestamp must be >= 0, got {self.t}")
        if self.throughput < 0:
            raise ValueError(f"throughput must be >= 0, got {self.throughput}")


@dataclass(frozen=True)
class ExperimentRequest:
    config: Mapping[str, float | int]
    experiment_id: str = "experiment"
    duration_s: float = 480.0
    warmup_s: float = 180.0
    cadence_s: float = 5.0
    repetitions: int = 1
    baseline_throughput: float | None = None

    def __post_init__(self) -> None:
        if not self.warmup_s < self.duration_s:
            raise ConfigurationError(
                f"warmup_s ({self.warmup_s}) must be < duration_s ({self.duration_s})"
            )
        if self.repetitions < 1:
            raise ConfigurationError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.cadence_s <= 0:
            raise ConfigurationError(f"cadence_s must be > 0, got {self.cadence_s}")


@dataclass
class ExperimentOutcome:
    request_id: str
    status: str
    objective: float | None
    per_rep_objectives: list[float]
    samples: list[list[MetricSample]]
    rule_id: str | None = None
    reason: str | None = None
    latency_summary: dict | None = None


@dataclass(frozen=True)
class SyntheticSurface:
    """Deterministic response surface with one Gaussian bump.

    throughput(u) = base * exp(-sum_i widths_i * (u_i - optimum_i)^2),
    multiplied per sample by (1 + eps), eps ~ Normal(0, noise^2), and
    clamped at zero. With noise = 0 the surface is a pure function whose
    global maximum is ``base`` exactly at ``optimum``.
    """

    base: float
    optimum: tuple[float, ...]
    widths: tuple[float, ...]
    noise: float = 0.0
    seed: int = 0
    latency_base_ms: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "optimum", tuple(float(o) for o in self.optimum))
        object.__setattr__(self, "widths", tuple(float(w) for w in self.widths))
        if self.base <= 0:
            raise ConfigurationError(f"surface base must be > 0, got {self.base}")
        if len(self.optimum) != len(self.widths):
            raise ConfigurationError("optimum and widths must have the same length")
        if any(w <= 0 for w in self.widths):
            raise ConfigurationError("surface widths must all be > 0")
        if any(not 0.0 <= o <= 1.0 for o in self.optimum):
            raise ConfigurationError("surface optimum must lie in [0, 1]^d")
        if self.noise < 0:
            raise ConfigurationError(f"noise must be >= 0, got {self.noise}")

    def value(self, u) -> float:
        """Noiseless surface value at a normalized point."""
        u = np.asarray(u, dtype=float)
        o = np.asarray(self.optimum)
        w = np.asarray(self.widths)
        return float(self.base * math.exp(-float(np.sum(w * (u - o) ** 2))))


class SyntheticExecutor:
    """Streams samples of a synthetic surface in simulated time.

    Per-sample noise is seeded from (surface seed, experiment id,
    repetition), so a rerun of the same trial reproduces the same series
    regardless of what ran before it.
    """

    def __init__(self, surface: SyntheticSurface, space: ParameterSpace):
        if len(surface.optimum) != space.dimension:
            raise ConfigurationError(
                f"surface dimension {len(surface.optimum)} != space dimension {space.dimension}"
            )
        self.surface = surface
        self.space = space

    def run(self, request: ExperimentRequest, repetition: int) -> Iterator[MetricSample]:
        u = map_to_normalized(self.space, request.config)
        mean = self.surface.value(u)
        rng = np.random.default_rng(
            np.random.SeedSequence(
                [self.surface.seed, zlib.crc32(request.experiment_id.encode()), repetition]
            )
        )
        steps = int(request.duration_s / request.cadence_s + 1e-9)
        for k in range(1, steps + 1):
            t = k * request.cadence_s
            throughput = mean
            latency = self.surface.latency_base_ms
            if self.surface.noise > 0:
                throughput = mean * (1.0 + rng.normal(0.0, self.surface.noise))
                if latency is not None:
                    latency = latency * (1.0 + rng.normal(0.0, self.surface.noise))
            throughput = max(0.0, throughput)
            latency = max(0.0, latency) if latency is not None else None
            yield MetricSample(t=t, throughput=throughput, latency=latency)


_METRIC_LINE = re.compile(r"^\s*([0-9.eE+-]+)\s*,\s*([0-9.eE+-]+)\s*(?:,\s*([0-9.eE+-]+)\s*)?$")


def parse_metric_line(line: str) -> MetricSample | None:
    """Parse one ``t,throughput[,latency]`` line; None when malformed."""
    match = _METRIC_LINE.match(line)
    if not match:
        return None
    try:
        t = float(match.group(1))
        throughput = float(match.group(2))
        latency = float(match.group(3)) if match.group(3) is not None else None
        return MetricSample(t=t, throughput=throughput, latency=latency)
    except ValueError:
        return None


def write_config_file(config: Mapping[str, float | int], path: Path) -> None:
    """Key/value config handoff: one ``name=value`` line per parameter,
    plain integers/decimals, no SI suffixes."""
    lines = []
    for name, value in config.items():
        if isinstance(value, float) and value == int(value):
            value = int(value)
        lines.append(f"{name}={value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class CommandExecutor:
    """Runs an external command per repetition and streams its metrics.

    The command template must reference ``{config_file}``; it may also
    reference ``{metrics_file}`` (then metric lines are tailed from that
    file instead of stdout), ``{experiment_id}`` and ``{repetition}``.
    A nonzero exit status or a majority of malformed metric lines fails
    the run. Cancellation (closing the sample iterator) kills the
    process.
    """

    def __init__(
        self,
        template: str,
        workdir: str | Path | None = None,
        timeout_s: float | None = None,
        poll_s: float = 0.05,
    ):
        if "{config_file}" not in template:
            raise ConfigurationError("command template must reference {config_file}")
        self.template = template
        self.workdir = Path(workdir) if workdir is not None else None
        self.timeout_s = timeout_s
        self.poll_s = poll_s

    def run(self, request: ExperimentRequest, repetition: int) -> Iterator[MetricSample]:
        use_metrics_file = "{metrics_file}" in self.template
        with tempfile.TemporaryDirectory(prefix="streamtune-run-") as tmp:
            tmpdir = Path(tmp)
            config_path = tmpdir / "config.properties"
            metrics_path = tmpdir / "metrics.csv"
            write_config_file(request.config, config_path)
            command = self.template.format(
                config_file=config_path,
                metrics_file=metrics_path,
                experiment_id=request.experiment_id,
                repetition=repetition,
            )
            try:
                proc = subprocess.Popen(
                    shlex.split(command),
                    cwd=self.workdir,
                    stdout=subprocess.DEVNULL if use_metrics_file else subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    text=True,
                    start_new_session=True,
                )
            except OSError as exc:
                raise ExecutionError(f"cannot spawn benchmark command: {exc}") from None

            parsed = 0
            malformed = 0
            cancelled = False
            try:
                if use_metrics_file:
                    lines = self._tail_file(proc, metrics_path)
                else:
                    lines = self._pump_stdout(proc)
                for line in lines:
                    if not line.strip():
                        continue
                    sample = parse_metric_line(line)
                    if sample is None:
                        malformed += 1
                        logger.warning("skipping malformed metric line: %r", line.strip())
                        continue
                    parsed += 1
                    yield sample
            except GeneratorExit:
                cancelled = True
                raise
            finally:
                if proc.poll() is None:
                    proc.kill()
                proc.wait()
                if proc.stderr is not None:
                    stderr_tail = proc.stderr.read()[-2000:]
                    proc.stderr.close()
                else:  # pragma: no cover - stderr is always piped above
                    stderr_tail = ""
                if not cancelled:
                    if proc.returncode != 0:
                        raise ExecutionError(
                            f"exit status {proc.returncode}"
                            + (f": {stderr_tail.strip()}" if stderr_tail.strip() else "")
                        )
                    if malformed > parsed:
                        raise ExecutionError(
                            f"more than half of metric lines malformed "
                            f"({malformed} malformed, {parsed} parsed)"
                        )

    def _pump_stdout(self, proc: subprocess.Popen) -> Iterator[str]:
        lines: queue.Queue = queue.Queue()
        eof = object()

        def pump() -> None:
            assert proc.stdout is not None
            for line in proc.stdout:
                lines.put(line)
            lines.put(eof)

        thread = threading.Thread(target=pump, daemon=True)
        thread.start()
        deadline = time.monotonic() + self.timeout_s if self.timeout_s else None
        while True:
            timeout = None
            if deadline is not None:
                timeout = max(0.0, deadline - time.monotonic())
            try:
                item = lines.get(timeout=timeout) if timeout is not None else lines.get()
            except queue.Empty:
                raise ExecutionError(f"benchmark command timed out after {self.timeout_s} s")
            if item is eof:
                return
            yield item

    def _tail_file(self, proc: subprocess.Popen, path: Path) -> Iterator[str]:
        deadline = time.monotonic() + self.timeout_s if self.timeout_s else None
        handle = None
        buffer = ""
        try:
            while True:
                if handle is None and path.exists():
                    handle = path.open("r", encoding="utf-8")
                if handle is not None:
                    chunk = handle.read()
                    if chunk:
                        buffer += chunk
                        while "\n" in buffer:
                            line, buffer = buffer.split("\n", 1)
                            yield line
                        continue
                if proc.poll() is not None:
                    if handle is not None:
                        chunk = handle.read()
                        if chunk:
                            buffer += chunk
                            continue
                    if buffer.strip():
                        yield buffer
                    return
                if deadline is not None and time.monotonic() > deadline:
                    raise ExecutionError(f"benchmark command timed out after {self.timeout_s} s")
                time.sleep(self.poll_s)
        finally:
            if handle is not None:
                handle.close()


def _rep_objective(samples: list[MetricSample], warmup_s: float) -> float | None:
    """Mean post-warm-up throughput; falls back to the mean over all
    collected samples when a run ends before warm-up does."""
    post = [s.throughput for s in samples if s.t >= warmup_s]
    if post:
        return float(np.mean(post))
    if samples:
        return float(np.mean([s.throughput for s in samples]))
    return None


def _latency_summary(all_samples: list[list[MetricSample]], warmup_s: float) -> dict | None:
    values = [
        s.latency
        for rep in all_samples
        for s in rep
        if s.latency is not None and s.t >= warmup_s
    ]
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "p50": float(np.percentile(arr, 50)),
        "p95": float(np.percentile(arr, 95)),
        "min": float(arr.min()),
        "max": float(arr.max()),
        "count": int(arr.size),
    }


def run_experiment(
    request: ExperimentRequest,
    executor,
    monitor: "ThroughputMonitor | None" = None,
) -> ExperimentOutcome:
    """Execute one configuration for ``request.repetitions`` runs.

    Samples stream through the monitor as they arrive; a fired rule
    cancels the executor and marks the outcome ``terminated_early`` (the
    first early termination also skips any remaining repetitions). An
    executor failure yields ``failed`` with the reason. The objective is
    the across-repetition mean of per-repetition post-warm-up means.
    """
    all_samples: list[list[MetricSample]] = []
    per_rep: list[float] = []
    status = STATUS_COMPLETED
    rule_id: str | None = None
    reason: str | None = None

    for repetition in range(request.repetitions):
        if monitor is not None:
            monitor.reset()
        rep_samples: list[MetricSample] = []
        fired: str | None = None
        generator = executor.run(request, repetition)
        try:
            try:
                for sample in generator:
                    rep_samples.append(sample)
                    if monitor is not None:
                        fired = monitor.observe(sample)
                        if fired is not None:
                            break
            finally:
                generator.close()
        except ExecutionError as exc:
            all_samples.append(rep_samples)
            status, reason = STATUS_FAILED, str(exc)
            logger.warning("experiment %s failed: %s", request.experiment_id, exc)
            break
        all_samples.append(rep_samples)
        if not rep_samples:
            status, reason = STATUS_FAILED, "executor produced no metric samples"
            break
        per_rep.append(_rep_objective(rep_samples, request.warmup_s))
        if fired is not None:
            status, rule_id = STATUS_TERMINATED, fired
            logger.info(
                "experiment %s terminated early by rule %s", request.experiment_id, fired
            )
            break

    objective = None
    if status != STATUS_FAILED and per_rep:
        objective = float(np.mean(per_rep))
    return ExperimentOutcome(
        request_id=request.experiment_id,
        status=status,
        objective=objective,
        per_rep_objectives=per_rep,
        samples=all_samples,
        rule_id=rule_id,
        reason=reason,
        latency_summary=_latency_summary(all_samples, request.warmup_s),
    )


@dataclass(frozen=True)
class ManifestSettings:
    benchmark: str = "shufflebench-kafka-streams"
    api_version: str = "tuning.streamtune.dev/v1"
    kind: str = "BenchmarkRun"
    namespace: str = "default"
    name_prefix: str = "tune-"


def _manifest_name(settings: ManifestSettings, experiment_id: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", experiment_id.lower()).strip("-")
    return f"{settings.name_prefix}{slug}"


def _plain_number(value: float | int) -> str:
    if isinstance(value, float) and value == int(value):
        value = int(value)
    return str(value)


def render_execution_manifest(
    request: ExperimentRequest, settings: ManifestSettings = ManifestSettings()
) -> str:
    """Render the benchmark-run manifest for one experiment request.

    Custom-resource style (kind/metadata/spec) with one override entry
    per configuration parameter. Byte-stable for fixed inputs.
    """
    lines = [
        f"apiVersion: {settings.api_version}",
        f"kind: {settings.kind}",
        "metadata:",
        f"  name: {_manifest_name(settings, request.experiment_id)}",
        f"  namespace: {settings.namespace}",
        "  labels:",
        "    app.kubernetes.io/managed-by: streamtune",
        "spec:",
        f"  benchmark: {settings.benchmark}",
        f"  durationSeconds: {_plain_number(request.duration_s)}",
        f"  warmupSeconds: {_plain_number(request.warmup_s)}",
        f"  repetitions: {request.repetitions}",
        "  metrics:",
        "    objective: throughput",
        "  configOverrides:",
    ]
    for name, value in request.config.items():
        lines.append(f"  - name: {name}")
        lines.append(f'    value: "{_plain_number(value)}"')
    return "\n".join(lines) + "\n"


def build_executor(executor_config: Mapping, space: ParameterSpace):
    """Construct an executor from the campaign config's executor section."""
    if not isinstance(executor_config, Mapping) or "kind" not in executor_config:
        raise ConfigurationError("executor config needs a 'kind' field (synthetic or command)")
    kind = executor_config["kind"]
    if kind == "synthetic":
        try:
            optimum = executor_config["optimum"]
            base = float(executor_config["base_throughput"])
        except KeyError as exc:
            raise ConfigurationError(f"synthetic executor config missing field {exc}") from None
        widths = executor_config.get("widths", 1.0)
        if isinstance(widths, (int, float)):
            widths = [float(widths)] * space.dimension
        surface = SyntheticSurface(
            base=base,
            optimum=tuple(optimum),
            widths=tuple(widths),
            noise=float(executor_config.get("noise", 0.0)),
            seed=int(executor_config.get("seed", 0)),
            latency_base_ms=(
                float(executor_config["latency_base_ms"])
                if executor_config.get("latency_base_ms") is not None
                else None
            ),
        )
        return SyntheticExecutor(surface, space)
    if kind == "command":
        if "template" not in executor_config:
            raise ConfigurationError("command executor config needs a 'template' field")
        return CommandExecutor(
            template=str(executor_config["template"]),
            workdir=executor_config.get("workdir"),
            timeout_s=(
                float(executor_config["timeout_s"])
                if executor_config.get("timeout_s") is not None
                else None
            ),
        )
    raise ConfigurationError(f"unknown executor kind {kind!r} (expected synthetic or command)")
