"""Hill climbing refinement: single-coordinate moves, strict-improvement
acceptance, plus the entry gate that filters which seeds are worth
refining at all."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

from .annealing import STEP_COMPLETED, Evaluation, propose_neighbor
from .errors import ConfigurationError

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class HcSettings:
    iterations: int = 17
    params_per_move: int = 1
    step_range: float = 0.10
    entry_gate: float | None = None  # minimum objective a seed must have reached

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
class HcStep:
    iteration: int
    config: np.ndarray
    objective: float | None
    accepted: bool
    status: str


@dataclass(frozen=True)
class HcTrace:
    steps: tuple[HcStep, ...]
    start_config: np.ndarray
    start_objective: float
    best_config: np.ndarray
    best_objective: float
    best_iteration: int  # 0 means the starting configuration


def hc_run(
    start: np.ndarray,
    start_objective: float,
    settings: HcSettings,
    evaluate: Callable,
    rng: np.random.Generator,
) -> HcTrace:
    """Propose/evaluate loop adopting only strictly better proposals.

    Early-terminated or failed evaluations are recorded and rejected.
    The final current solution equals the best: rejected steps never
    change it.
    """
    current = np.asarray(start, dtype=float).copy()
    current_objective = float(start_objective)
    best_iteration = 0
    steps: list[HcStep] = []

    for k in range(1, settings.iterations + 1):
        proposal = propose_neighbor(current, settings.params_per_move, settings.step_range, rng)
        try:
            evaluation = Evaluation.wrap(evaluate(proposal))
        except Exception as exc:
            logger.warning("objective evaluation failed at iteration %d: %s", k, exc)
            evaluation = Evaluation(objective=None, completed=False, failed=True, note=str(exc))

        accepted = (
            evaluation.status == STEP_COMPLETED
            and float(evaluation.objective) > current_objective
        )
        if accepted:
            current = proposal
            current_objective = float(evaluation.objective)
            best_iteration = k
        steps.append(
            HcStep(
                iteration=k,
                config=proposal,
                objective=evaluation.objective,
                accepted=accepted,
                status=evaluation.status,
            )
        )

    return HcTrace(
        steps=tuple(steps),
        start_config=np.asarray(start, dtype=float).copy(),
        start_objective=float(start_objective),
        best_config=current,
        best_objective=current_objective,
        best_iteration=best_iteration,
    )


def gate_seeds(
    candidates: Sequence[tuple[T, float]], threshold: float
) -> list[tuple[T, float]]:
    """Keep candidates whose objective reached the threshold, preserving
    order."""
    return [(item, objective) for item, objective in candidates if objective >= threshold]
