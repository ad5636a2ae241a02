from __future__ import annotations

import math

import numpy as np
import pytest

from streamtune import (
    ConfigurationError,
    Evaluation,
    SaSettings,
    TemperatureSchedule,
    acceptance_probability,
    initial_temperature,
    propose_neighbor,
    sa_run,
    temperature_at,
)

T_PAPER = 2500 / (-math.log(0.75))  # 8690.148741955518


class TestInitialTemperature:
    def test_derivation_from_target_loss(self):
        assert initial_temperature(2500, 0.75) == pytest.approx(T_PAPER, abs=1e-9)

    def test_loss_at_inverse_e_gives_loss(self):
        assert initial_temperature(1234.5, math.exp(-1)) == pytest.approx(1234.5, rel=1e-12)

    def test_half_probability(self):
        assert initial_temperature(1000, 0.5) == pytest.approx(1442.6950408889634, abs=1e-6)

    @pytest.mark.parametrize("loss,p", [(0, 0.5), (-1, 0.5), (100, 0.0), (100, 1.0), (100, 1.5)])
    def test_invalid_inputs(self, loss, p):
        with pytest.raises(ConfigurationError):
            initial_temperature(loss, p)


class TestTemperatureSchedule:
    def test_cooling_sequence(self):
        schedule = TemperatureSchedule(initial_temperature=T_PAPER, cooling_rate=0.95)
        assert temperature_at(schedule, 0) == T_PAPER
        assert temperature_at(schedule, 1) == T_PAPER * 0.95
        assert temperature_at(schedule, 25) == pytest.approx(T_PAPER * 0.27738957312183377)

    def test_strictly_decreasing(self):
        schedule = TemperatureSchedule(initial_temperature=100.0, cooling_rate=0.95)
        temperatures = [temperature_at(schedule, k) for k in range(30)]
        assert all(a > b for a, b in zip(temperatures, temperatures[1:]))

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            TemperatureSchedule(initial_temperature=0.0)
        with pytest.raises(ConfigurationError):
            TemperatureSchedule(initial_temperature=1.0, cooling_rate=1.0)
        with pytest.raises(ValueError):
            temperature_at(TemperatureSchedule(1.0), -1)


class TestAcceptanceProbability:
    def test_improvements_always_accepted(self):
        assert acceptance_probability(100, 1.0) == 1.0
        assert acceptance_probability(0, 1e-9) == 1.0

    def test_paper_operating_point(self):
        assert acceptance_probability(-2500, T_PAPER) == pytest.approx(0.75, abs=1e-12)

    def test_loss_equal_to_temperature(self):
        assert acceptance_probability(-123.0, 123.0) == pytest.approx(math.exp(-1))

    def test_increasing_in_temperature_for_losses(self):
        probs = [acceptance_probability(-500, t) for t in (10, 100, 1000, 10000)]
        assert all(a < b for a, b in zip(probs, probs[1:]))

    def test_temperature_must_be_positive(self):
        with pytest.raises(ValueError):
            acceptance_probability(-1, 0.0)

    def test_empirical_rate(self):
        rng = np.random.default_rng(20240809)
        p = acceptance_probability(-2500, T_PAPER)
        accepted = sum(rng.random() < p for _ in range(10_000))
        assert abs(accepted / 10_000 - 0.75) <= 0.02


class _StubRng:
    """Drives propose_neighbor with scripted dimension and delta draws."""

    def __init__(self, dims, deltas):
        self._dims = np.asarray(dims)
        self._deltas = np.asarray(deltas, dtype=float)

    def choice(self, d, size, replace):
        assert size == len(self._dims)
        return self._dims

    def uniform(self, lo, hi, size):
        return self._deltas


class TestProposeNeighbor:
    def test_zero_step_is_identity(self):
        u = np.linspace(0.1, 0.9, 5)
        out = propose_neighbor(u, 5, 1e-12, np.random.default_rng(0))
        assert np.allclose(out, u, atol=1e-11)

    def test_untouched_coordinates_bit_identical(self):
        u = np.random.default_rng(1).random(9)
        out = propose_neighbor(u, 2, 0.1, np.random.default_rng(2))
        unchanged = sum(1 for a, b in zip(u, out) if a == b)
        assert unchanged == 7

    def test_clamped_at_upper_boundary(self):
        out = propose_neighbor(np.array([0.95]), 1, 0.1, _StubRng([0], [0.1]))
        assert out[0] == 1.0

    def test_clamped_at_lower_boundary(self):
        out = propose_neighbor(np.array([0.03]), 1, 0.1, _StubRng([0], [-0.1]))
        assert out[0] == 0.0

    def test_too_many_dimensions(self):
        with pytest.raises(ValueError):
            propose_neighbor(np.zeros(3), 4, 0.1, np.random.default_rng(0))

    def test_deterministic_given_rng_state(self):
        u = np.full(6, 0.5)
        a = propose_neighbor(u, 2, 0.1, np.random.default_rng(7))
        b = propose_neighbor(u, 2, 0.1, np.random.default_rng(7))
        assert np.array_equal(a, b)


def _settings(iterations=25, t0=T_PAPER):
    return SaSettings(
        schedule=TemperatureSchedule(initial_temperature=t0),
        iterations=iterations,
        params_per_move=2,
        step_range=0.1,
    )


class TestSaRun:
    def test_constant_objective_accepts_everything(self):
        start = np.full(4, 0.5)
        trace = sa_run(start, 100.0, _settings(10), lambda u: 100.0, np.random.default_rng(0))
        assert len(trace.steps) == 10
        assert all(step.accepted for step in trace.steps)
        assert trace.best_objective == 100.0
        assert trace.best_iteration == 0

    def test_iteration_count_is_exact(self):
        calls = []
        trace = sa_run(
            np.full(9, 0.5),
            1.0,
            _settings(25),
            lambda u: calls.append(1) or 1.0,
            np.random.default_rng(3),
        )
        assert len(calls) == 25
        assert len(trace.steps) == 25

    def test_best_is_running_maximum_over_completed(self):
        rng_obj = np.random.default_rng(11)

        def noisy(u):
            return float(1000 + 100 * rng_obj.standard_normal())

        trace = sa_run(np.full(3, 0.5), 1000.0, _settings(20), noisy, np.random.default_rng(4))
        completed = [s.objective for s in trace.steps if s.status == "completed"]
        assert trace.best_objective == max([1000.0] + completed)

    def test_replay_is_identical(self):
        def surface(u):
            return float(50 - ((u - 0.3) ** 2).sum())

        a = sa_run(np.full(5, 0.5), surface(np.full(5, 0.5)), _settings(15), surface,
                   np.random.default_rng(99))
        b = sa_run(np.full(5, 0.5), surface(np.full(5, 0.5)), _settings(15), surface,
                   np.random.default_rng(99))
        assert [s.objective for s in a.steps] == [s.objective for s in b.steps]
        assert [s.accepted for s in a.steps] == [s.accepted for s in b.steps]
        assert np.array_equal(a.best_config, b.best_config)

    def test_failed_evaluation_keeps_current_and_continues(self):
        calls = {"n": 0}

        def flaky(u):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("executor crashed")
            return 10.0

        trace = sa_run(np.full(2, 0.5), 10.0, _settings(6), flaky, np.random.default_rng(1))
        assert len(trace.steps) == 6
        assert trace.steps[2].status == "failed"
        assert not trace.steps[2].accepted
        assert trace.steps[2].objective is None

    def test_terminated_evaluations_never_adopted(self):
        def always_terminated(u):
            return Evaluation(objective=99999.0, completed=False)

        trace = sa_run(
            np.full(3, 0.5), 10.0, _settings(8), always_terminated, np.random.default_rng(2)
        )
        assert not any(step.accepted for step in trace.steps)
        assert trace.best_objective == 10.0  # partial averages do not update the best

    def test_temperatures_follow_schedule(self):
        trace = sa_run(np.full(2, 0.5), 1.0, _settings(5, t0=100.0), lambda u: 1.0,
                       np.random.default_rng(0))
        assert [s.temperature for s in trace.steps] == [
            100.0 * 0.95**k for k in range(5)
        ]
