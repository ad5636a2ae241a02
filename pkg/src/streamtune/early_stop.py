"""Early termination of clearly underperforming experiment runs.

A monitor watches the live throughput stream of one run and signals
termination once a rule's condition (throughput below a fraction of the
baseline) has held continuously for the rule's sustain window. Breach
duration is measured on sample timestamps, not wall clock or sample
counts, so irregular cadences behave correctly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class StopRule:
    """Terminate when throughput < fraction * baseline for >= sustain_s."""

    fraction: float
    sustain_s: float
    rule_id: str = ""
    during_warmup: bool = True  # the sustain window may overlap warm-up

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction < 1.0:
            raise ConfigurationError(f"stop rule fraction must be in (0, 1), got {self.fraction}")
        if self.sustain_s <= 0:
            raise ConfigurationError(f"stop rule sustain_s must be > 0, got {self.sustain_s}")
        if not self.rule_id:
            pct = int(round(self.fraction * 100))
            object.__setattr__(self, "rule_id", f"below-{pct}pct-for-{int(self.sustain_s)}s")


class ThroughputMonitor:
    """Per-run monitor state: rules, baseline, and one breach clock per rule.

    ``observe`` returns the id of the first rule that fires, or None. A
    rule's breach clock resets whenever a sample meets or exceeds its
    threshold.
    """

    def __init__(self, rules, baseline: float, warmup_s: float = 0.0):
        if baseline <= 0:
            raise ValueError(f"baseline must be > 0, got {baseline}")
        self.rules = tuple(rules)
        self.baseline = float(baseline)
        self.warmup_s = float(warmup_s)
        self._breach_since: dict[str, float | None] = {r.rule_id: None for r in self.rules}

    def reset(self) -> None:
        for rule_id in self._breach_since:
            self._breach_since[rule_id] = None

    def observe(self, sample) -> str | None:
        for rule in self.rules:
            if not rule.during_warmup and sample.t < self.warmup_s:
                continue
            if sample.throughput < rule.fraction * self.baseline:
                since = self._breach_since[rule.rule_id]
                if since is None:
                    since = sample.t
                    self._breach_since[rule.rule_id] = since
                if sample.t - since >= rule.sustain_s:
                    return rule.rule_id
            else:
                self._breach_since[rule.rule_id] = None
        return None
