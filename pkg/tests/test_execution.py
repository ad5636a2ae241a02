from __future__ import annotations

import sys
import textwrap
import time
from pathlib import Path

import numpy as np
import pytest

from streamtune import (
    CommandExecutor,
    ConfigurationError,
    ExperimentRequest,
    ManifestSettings,
    MetricSample,
    StopRule,
    SyntheticExecutor,
    SyntheticSurface,
    ThroughputMonitor,
    map_to_concrete,
    map_to_normalized,
    render_execution_manifest,
    run_experiment,
)
from streamtune.execution import parse_metric_line, write_config_file

from tests.conftest import GOLDEN_DIR, OPTIMUM


def surface_executor(space, *, base=20000.0, widths=0.25, noise=0.0, seed=0, latency=None):
    surface = SyntheticSurface(
        base=base,
        optimum=OPTIMUM,
        widths=(widths,) * space.dimension,
        noise=noise,
        seed=seed,
        latency_base_ms=latency,
    )
    return SyntheticExecutor(surface, space)


def request_at(space, u, **kwargs) -> ExperimentRequest:
    return ExperimentRequest(config=map_to_concrete(space, u), **kwargs)


class TestSyntheticSurface:
    def test_maximum_at_optimum(self):
        surface = SyntheticSurface(base=20000, optimum=(0.5, 0.5), widths=(1.0, 1.0))
        assert surface.value([0.5, 0.5]) == 20000.0
        assert surface.value([0.4, 0.5]) < 20000.0

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            SyntheticSurface(base=0, optimum=(0.5,), widths=(1.0,))
        with pytest.raises(ConfigurationError):
            SyntheticSurface(base=1, optimum=(0.5,), widths=(0.0,))
        with pytest.raises(ConfigurationError):
            SyntheticSurface(base=1, optimum=(1.5,), widths=(1.0,))
        with pytest.raises(ConfigurationError):
            SyntheticSurface(base=1, optimum=(0.5, 0.5), widths=(1.0,))


class TestRunExperiment:
    def test_noiseless_optimum_reaches_base(self, kafka_space):
        executor = surface_executor(kafka_space)
        outcome = run_experiment(
            request_at(kafka_space, np.array(OPTIMUM), experiment_id="opt"), executor
        )
        assert outcome.status == "completed"
        # integer rounding of the concrete point costs a whisker of objective
        assert outcome.objective == pytest.approx(20000.0, rel=1e-4)

    def test_pinned_low_surface_terminates_early(self, kafka_space):
        baseline = 20000.0
        executor = surface_executor(kafka_space, base=0.25 * baseline, widths=1e-9)
        monitor = ThroughputMonitor(
            (StopRule(0.30, 90), StopRule(0.50, 300)), baseline, warmup_s=180.0
        )
        outcome = run_experiment(
            request_at(kafka_space, np.full(9, 0.5), experiment_id="low", repetitions=3),
            executor,
            monitor,
        )
        assert outcome.status == "terminated_early"
        assert outcome.rule_id == "below-30pct-for-90s"
        assert outcome.samples[0][-1].t >= 90.0
        assert len(outcome.samples) == 1  # remaining repetitions skipped
        assert outcome.objective is not None  # partial average is recorded

    def test_repetition_objective_is_mean_of_means(self, kafka_space):
        executor = surface_executor(kafka_space, noise=0.05, seed=11)
        outcome = run_experiment(
            request_at(kafka_space, np.full(9, 0.5), experiment_id="reps", repetitions=3),
            executor,
        )
        assert outcome.status == "completed"
        assert len(outcome.per_rep_objectives) == 3
        assert outcome.objective == pytest.approx(float(np.mean(outcome.per_rep_objectives)))
        assert len(set(outcome.per_rep_objectives)) == 3  # independent noise per repetition

    def test_objective_ignores_warmup_samples(self, kafka_space):
        class StubExecutor:
            def __init__(self, warmup_factor):
                self.warmup_factor = warmup_factor

            def run(self, request, repetition):
                for k in range(1, 97):
                    t = 5.0 * k
                    value = 1000.0 if t >= request.warmup_s else 1000.0 * self.warmup_factor
                    yield MetricSample(t=t, throughput=value)

        request = ExperimentRequest(config={"a": 1}, experiment_id="warmup")
        a = run_experiment(request, StubExecutor(0.1))
        b = run_experiment(request, StubExecutor(10.0))
        assert a.objective == b.objective == 1000.0

    def test_synthetic_is_reproducible(self, kafka_space):
        executor = surface_executor(kafka_space, noise=0.2, seed=21)
        request = request_at(kafka_space, np.full(9, 0.4), experiment_id="same", repetitions=2)
        a = run_experiment(request, executor)
        b = run_experiment(request, executor)
        assert a.objective == b.objective
        assert a.per_rep_objectives == b.per_rep_objectives

    def test_latency_summary_present_when_emitted(self, kafka_space):
        executor = surface_executor(kafka_space, latency=120.0)
        outcome = run_experiment(
            request_at(kafka_space, np.full(9, 0.5), experiment_id="lat"), executor
        )
        assert outcome.latency_summary is not None
        assert outcome.latency_summary["mean"] == pytest.approx(120.0)
        assert outcome.latency_summary["count"] == 61  # samples at t in [180, 480]

    def test_invalid_request(self):
        with pytest.raises(ConfigurationError):
            ExperimentRequest(config={}, duration_s=100, warmup_s=100)
        with pytest.raises(ConfigurationError):
            ExperimentRequest(config={}, repetitions=0)


EMIT_SCRIPT = textwrap.dedent(
    """
    import sys, time
    mode = sys.argv[1]
    if mode == "ok":
        for k in range(1, 101):
            print(f"{k*5},{1000+k}")
    elif mode == "latency":
        for k in range(1, 101):
            print(f"{k*5},{1000+k},{50+k}")
    elif mode == "fail":
        sys.exit(1)
    elif mode == "garbage":
        print("t,throughput")
        print("not,numbers,here,at all")
        print("nonsense")
        print("5,100")
    elif mode == "hang":
        for k in range(1, 40):
            print(f"{k*5},10", flush=True)
        time.sleep(600)
    """
).strip()


@pytest.fixture()
def emit_script(tmp_path) -> Path:
    path = tmp_path / "emit.py"
    path.write_text(EMIT_SCRIPT, encoding="utf-8")
    return path


class TestCommandExecutor:
    def test_happy_path_parses_series(self, emit_script):
        executor = CommandExecutor(
            f"{sys.executable} {emit_script} ok --config {{config_file}}"
        )
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1, "b": 2.5}, experiment_id="cmd", duration_s=500,
                              warmup_s=100),
            executor,
        )
        assert outcome.status == "completed"
        assert len(outcome.samples[0]) == 100
        assert outcome.objective == pytest.approx(np.mean([1000 + k for k in range(20, 101)]))

    def test_latency_column_parsed(self, emit_script):
        executor = CommandExecutor(
            f"{sys.executable} {emit_script} latency --config {{config_file}}"
        )
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd", duration_s=500,
                              warmup_s=100),
            executor,
        )
        assert outcome.latency_summary is not None

    def test_nonzero_exit_fails(self, emit_script):
        executor = CommandExecutor(
            f"{sys.executable} {emit_script} fail --config {{config_file}}"
        )
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd"), executor
        )
        assert outcome.status == "failed"
        assert "exit status 1" in outcome.reason

    def test_majority_malformed_fails(self, emit_script):
        executor = CommandExecutor(
            f"{sys.executable} {emit_script} garbage --config {{config_file}}"
        )
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd"), executor
        )
        assert outcome.status == "failed"
        assert "malformed" in outcome.reason

    def test_early_stop_kills_long_running_command(self, emit_script):
        executor = CommandExecutor(
            f"{sys.executable} {emit_script} hang --config {{config_file}}"
        )
        monitor = ThroughputMonitor((StopRule(0.30, 90),), baseline=1000.0)
        started = time.monotonic()
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd"), executor, monitor
        )
        assert outcome.status == "terminated_early"
        assert time.monotonic() - started < 30  # nowhere near the script's sleep
        assert outcome.samples[0][-1].t == 95.0

    def test_metrics_file_mode(self, tmp_path):
        script = tmp_path / "filemode.py"
        script.write_text(
            textwrap.dedent(
                """
                import sys
                with open(sys.argv[1], "w") as f:
                    for k in range(1, 51):
                        f.write(f"{k*5},{2000}\\n")
                """
            ).strip(),
            encoding="utf-8",
        )
        executor = CommandExecutor(
            f"{sys.executable} {script} {{metrics_file}} --config {{config_file}}"
        )
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd", duration_s=260,
                              warmup_s=50),
            executor,
        )
        assert outcome.status == "completed"
        assert len(outcome.samples[0]) == 50

    def test_spawn_failure(self):
        executor = CommandExecutor("/definitely/not/a/binary {config_file}")
        outcome = run_experiment(
            ExperimentRequest(config={"a": 1}, experiment_id="cmd"), executor
        )
        assert outcome.status == "failed"

    def test_template_requires_config_placeholder(self):
        with pytest.raises(ConfigurationError):
            CommandExecutor("echo no-placeholders")

    def test_config_handoff_format(self, tmp_path):
        path = tmp_path / "config.properties"
        write_config_file({"x": 16384, "y": 2.5, "z": 3.0}, path)
        assert path.read_text(encoding="utf-8") == "x=16384\ny=2.5\nz=3\n"

    def test_parse_metric_line(self):
        assert parse_metric_line("5,100") == MetricSample(5, 100)
        assert parse_metric_line(" 5 , 100 , 12.5 ") == MetricSample(5, 100, 12.5)
        assert parse_metric_line("bogus") is None
        assert parse_metric_line("5,100,extra,junk") is None


class TestManifest:
    def test_default_config_manifest_matches_golden(self, kafka_space):
        request = ExperimentRequest(
            config=kafka_space.default_values(),
            experiment_id="c_default",
            repetitions=3,
        )
        text = render_execution_manifest(request, ManifestSettings())
        golden = (GOLDEN_DIR / "manifest_default.yaml").read_text(encoding="utf-8")
        assert text == golden

    def test_contains_all_nine_overrides(self, kafka_space):
        request = ExperimentRequest(
            config=kafka_space.default_values(), experiment_id="c_default", repetitions=3
        )
        text = render_execution_manifest(request)
        assert text.count("- name: ") == 9
        assert '  - name: commit.interval.ms\n    value: "5000"' in text
        assert '  - name: producer.batch.size\n    value: "16384"' in text
        assert '  - name: consumer.max.poll.records\n    value: "500"' in text

    def test_rendering_is_deterministic(self, kafka_space):
        request = ExperimentRequest(
            config=kafka_space.default_values(), experiment_id="c_{1,13}", repetitions=1
        )
        assert render_execution_manifest(request) == render_execution_manifest(request)
        assert "name: tune-c-1-13" in render_execution_manifest(request)
