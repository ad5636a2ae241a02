"""Simulated annealing over the normalized configuration space.

Proposals perturb a fixed-size random subset of coordinates by a uniform
step; worse configurations are accepted with probability exp(delta/T)
under an exponentially cooled temperature. The starting temperature is
derived from a target (loss, acceptance probability) pair, i.e. the
temperature at which that loss is still accepted with that probability.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

STEP_COMPLETED = "completed"
STEP_TERMINATED = "terminated_early"
STEP_FAILED = "failed"


@dataclass(frozen=True)
class Evaluation:
    """Outcome of one objective evaluation as seen by a search loop.

    ``completed=False`` marks an early-terminated run whose objective is
    a partial average: it is recorded but never adopted as the current
    solution and never updates the best. ``failed=True`` marks a run
    without a usable objective.
    """

    objective: float | None
    completed: bool = True
    failed: bool = False
    note: str | None = None

    @classmethod
    def wrap(cls, result) -> "Evaluation":
        if isinstance(result, Evaluation):
            return result
        return cls(objective=float(result))

    @property
    def status(self) -> str:
        if self.failed:
            return STEP_FAILED
        return STEP_COMPLETED if self.completed else STEP_TERMINATED


@dataclass(frozen=True)
class TemperatureSchedule:
    initial_temperature: float
    cooling_rate: float = 0.95

    def __post_init__(self) -> None:
        if self.initial_temperature <= 0:
            raise ConfigurationError(
                f"initial temperature must be > 0, got {self.initial_temperature}"
            )
        if not 0.0 < self.cooling_rate < 1.0:
            raise ConfigurationError(
                f"cooling rate must be in (0, 1), got {self.cooling_rate}"
            )


@dataclass(frozen=True)
class SaSettings:
    schedule: TemperatureSchedule
    iterations: int = 25
    params_per_move: int = 2
    step_range: float = 0.10

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations}")
        if self.params_per_move < 1:
            raise ConfigurationError(
                f"params_per_move must be >= 1, got {self.params_per_move}"
            )
        if not 0.0 < self.step_range <= 1.0:
            raise ConfigurationError(f"step_range must be in (0, 1], got {self.step_range}")


@dataclass(frozen=True)
class SaStep:
    iteration: int
    config: np.ndarray
    objective: float | None
    temperature: float
    accepted: bool
    status: str


@dataclass(frozen=True)
class SaTrace:
    steps: tuple[SaStep, ...]
    start_config: np.ndarray
    start_objective: float
    best_config: np.ndarray
    best_objective: float
    best_iteration: int  # 0 means the starting configuration


def initial_temperature(accepted_loss: float, acceptance_probability: float) -> float:
    """Temperature at which a given objective loss is accepted with the
    given probability: loss / (-ln p)."""
    if accepted_loss <= 0:
        raise ConfigurationError(f"accepted loss must be > 0, got {accepted_loss}")
    if not 0.0 < acceptance_probability < 1.0:
        raise ConfigurationError(
            f"acceptance probability must be in (0, 1), got {acceptance_probability}"
        )
    return accepted_loss / (-math.log(acceptance_probability))


def temperature_at(schedule: TemperatureSchedule, k: int) -> float:
    """Temperature after k cooling steps: T0 * rate^k."""
    if k < 0:
        raise ValueError(f"iteration index must be >= 0, got {k}")
    return schedule.initial_temperature * schedule.cooling_rate**k


def acceptance_probability(delta: float, temperature: float) -> float:
    """1 for improvements, exp(delta/T) for a loss of -delta."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    if delta >= 0:
        return 1.0
    return math.exp(delta / temperature)


def propose_neighbor(
    u: np.ndarray, params_per_move: int, step_range: float, rng: np.random.Generator
) -> np.ndarray:
    """Perturb exactly ``params_per_move`` distinct coordinates by
    Uniform[-step_range, +step_range], clamped to [0, 1]; the remaining
    coordinates are returned bit-identical."""
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    if params_per_move > d:
        raise ValueError(f"cannot move {params_per_move} of {d} coordinates")
    dims = rng.choice(d, size=params_per_move, replace=False)
    deltas = rng.uniform(-step_range, step_range, size=params_per_move)
    out = u.copy()
    out[dims] = np.clip(out[dims] + deltas, 0.0, 1.0)
    return out


def sa_run(
    start: np.ndarray,
    start_objective: float,
    settings: SaSettings,
    evaluate: Callable,
    rng: np.random.Generator,
) -> SaTrace:
    """Run the annealing loop from a measured starting point.

    ``evaluate`` receives a normalized point and returns a float or an
    :class:`Evaluation`; exceptions it raises are recorded as failed
    steps and the search continues from the retained current solution.
    The best tracks the maximum over the start and all completed steps.
    """
    current = np.asarray(start, dtype=float).copy()
    current_objective = float(start_objective)
    best = current.copy()
    best_objective = current_objective
    best_iteration = 0
    steps: list[SaStep] = []

    for k in range(1, settings.iterations + 1):
        temperature = temperature_at(settings.schedule, k - 1)
        proposal = propose_neighbor(current, settings.params_per_move, settings.step_range, rng)
        try:
            evaluation = Evaluation.wrap(evaluate(proposal))
        except Exception as exc:
            logger.warning("objective evaluation failed at iteration %d: %s", k, exc)
            evaluation = Evaluation(objective=None, completed=False, failed=True, note=str(exc))

        accepted = False
        if evaluation.status == STEP_COMPLETED:
            objective = float(evaluation.objective)
            delta = objective - current_objective
            accepted = rng.random() < acceptance_probability(delta, temperature)
            if objective > best_objective:
                best = proposal.copy()
                best_objective = objective
                best_iteration = k
            if accepted:
                current = proposal
                current_objective = objective
        steps.append(
            SaStep(
                iteration=k,
                config=proposal,
                objective=evaluation.objective,
                temperature=temperature,
                accepted=accepted,
                status=evaluation.status,
            )
        )

    return SaTrace(
        steps=tuple(steps),
        start_config=np.asarray(start, dtype=float).copy(),
        start_objective=float(start_objective),
        best_config=best,
        best_objective=best_objective,
        best_iteration=best_iteration,
    )
