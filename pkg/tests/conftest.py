from __future__ import annotations

import importlib.resources
from pathlib import Path

import pytest

from streamtune import CampaignConfig, ParameterSpace, load_space

GOLDEN_DIR = Path(__file__).parent / "goldens"

# Single-bump surface shared by campaign-level tests; see the demo config.
OPTIMUM = (0.62, 0.41, 0.55, 0.33, 0.70, 0.48, 0.59, 0.36, 0.52)


def kafka_space_path() -> Path:
    return Path(importlib.resources.files("streamtune") / "data" / "kafka_streams_space.yaml")


@pytest.fixture(scope="session")
def kafka_space() -> ParameterSpace:
    return load_space(kafka_space_path())


def synthetic_campaign_config(
    space: ParameterSpace,
    *,
    master_seed: int = 5,
    base: float = 20000.0,
    widths=0.25,
    surface_seed: int = 3,
    noise: float = 0.0,
    latency_base_ms: float | None = None,
    lhs_samples: int = 6,
    lhs_restarts: int = 3,
    lhs_repetitions: int = 1,
    sa_iterations: int = 4,
    hc_iterations: int = 3,
    tolerance: float = 0.9,
    top_k: int = 2,
    entry_gate: float | None = None,
    validation_repetitions: int = 2,
    stop_rules: bool = True,
) -> CampaignConfig:
    return CampaignConfig.from_dict(
        {
            "space": space.to_dict(),
            "executor": {
                "kind": "synthetic",
                "base_throughput": base,
                "optimum": list(OPTIMUM),
                "widths": widths,
                "noise": noise,
                "seed": surface_seed,
                "latency_base_ms": latency_base_ms,
            },
            "seed": master_seed,
            "phases": {
                "lhs": {
                    "samples": lhs_samples,
                    "restarts": lhs_restarts,
                    "repetitions": lhs_repetitions,
                },
                "sa": {"iterations": sa_iterations},
                "hc": {"iterations": hc_iterations, "entry_gate": entry_gate},
            },
            "seed_selection": {"tolerance": tolerance, "top_k": top_k},
            "stop_rules": (
                [
                    {"fraction": 0.30, "sustain_s": 90},
                    {"fraction": 0.50, "sustain_s": 300},
                ]
                if stop_rules
                else []
            ),
            "validation": {"repetitions": validation_repetitions},
        }
    )


@pytest.fixture()
def mini_config(kafka_space) -> CampaignConfig:
    return synthetic_campaign_config(kafka_space)


@pytest.fixture()
def golden_config(kafka_space) -> CampaignConfig:
    # frozen: the checked-in report goldens were produced from this exact config
    return synthetic_campaign_config(kafka_space, latency_base_ms=150.0)
