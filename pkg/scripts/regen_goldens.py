#!/usr/bin/env python3
"""Regenerate the golden files under tests/goldens/.

Run this after an intentional change to the manifest or report layout,
inspect the diff, and commit the result. The campaign feeding the report
goldens is frozen in tests/conftest.py (golden_config).
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

from streamtune import (  # noqa: E402
    ExperimentRequest,
    ManifestSettings,
    emit_report,
    load_space,
    render_execution_manifest,
    run_campaign,
)
from tests.conftest import kafka_space_path, synthetic_campaign_config  # noqa: E402


def main() -> None:
    goldens = ROOT / "tests" / "goldens"
    goldens.mkdir(exist_ok=True)

    space = load_space(kafka_space_path())
    request = ExperimentRequest(
        config=space.default_values(), experiment_id="c_default", repetitions=3
    )
    (goldens / "manifest_default.yaml").write_text(
        render_execution_manifest(request, ManifestSettings()), encoding="utf-8"
    )

    config = synthetic_campaign_config(space, latency_base_ms=150.0)
    with tempfile.TemporaryDirectory() as tmp:
        state = run_campaign(config, state_path=Path(tmp) / "state.json")
        out = Path(tmp) / "report"
        emit_report(state, out)
        shutil.copy(out / "report.md", goldens / "report.md")
        shutil.copy(out / "trials.csv", goldens / "trials.csv")

    for name in ("manifest_default.yaml", "report.md", "trials.csv"):
        print(f"wrote {goldens / name}")


if __name__ == "__main__":
    main()
