"""Post-hoc campaign analysis: parameter/throughput correlation,
phase-over-phase improvement tables, and report emission (markdown, CSV,
JSON lines, simple SVG figures)."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import spearmanr

from .campaign import (
    PHASE_BASELINE,
    PHASE_HC,
    PHASE_LHS,
    PHASE_SA,
    CampaignState,
    TrialRecord,
)
from .execution import STATUS_COMPLETED
from .space import INTEGER, ParameterSpace, format_si

DEFAULT_THRESHOLDS = (0.2, 0.4, 0.6, 0.8)
_CATEGORIES = ("negligible", "weak", "moderate", "strong", "very strong")


@dataclass(frozen=True)
class CorrelationEntry:
    parameter: str
    coefficient: float | None
    category: str
    n: int


@dataclass(frozen=True)
class CorrelationReport:
    entries: tuple[CorrelationEntry, ...]
    n_trials: int


def _categorize(coefficient: float | None, thresholds) -> str:
    if coefficient is None:
        return "undefined"
    magnitude = abs(coefficient)
    category = _CATEGORIES[0]
    for threshold, name in zip(thresholds, _CATEGORIES[1:]):
        if magnitude >= threshold:
            category = name
    return category


def correlate(
    trials: Sequence[TrialRecord],
    space: ParameterSpace,
    thresholds=DEFAULT_THRESHOLDS,
) -> CorrelationReport:
    """Spearman rank correlation between each parameter's normalized
    coordinate and the objective, over completed trials only."""
    usable = [
        t
        for t in trials
        if t.status == STATUS_COMPLETED
        and t.objective is not None
        and len(t.normalized) == space.dimension
    ]
    if len(usable) < 3:
        raise ValueError(
            f"correlation needs at least 3 completed trials, got {len(usable)}"
        )
    coords = np.array([t.normalized for t in usable])
    objectives = np.array([t.objective for t in usable])
    entries = []
    for j, parameter in enumerate(space.parameters):
        column = coords[:, j]
        if np.all(column == column[0]) or np.all(objectives == objectives[0]):
            coefficient = None
        else:
            rho = spearmanr(column, objectives).statistic
            coefficient = None if np.isnan(rho) else float(rho)
        entries.append(
            CorrelationEntry(
                parameter=parameter.name,
                coefficient=coefficient,
                category=_categorize(coefficient, thresholds),
                n=len(usable),
            )
        )
    return CorrelationReport(entries=tuple(entries), n_trials=len(usable))


@dataclass(frozen=True)
class ImprovementRow:
    trial_id: str
    phase: str
    values: dict
    objective: float
    delta_prev: float | None  # relative to the previous-phase ancestor
    delta_baseline: float | None


@dataclass(frozen=True)
class ImprovementTable:
    rows: tuple[ImprovementRow, ...]
    baseline_objective: float | None


def _relative(child: float | None, ancestor: float | None) -> float | None:
    if child is None or ancestor is None or ancestor == 0:
        return None
    return (child - ancestor) / ancestor


def _completed(trials: Iterable[TrialRecord]) -> list[TrialRecord]:
    return [t for t in trials if t.status == STATUS_COMPLETED and t.objective is not None]


def improvement_table(state_or_trials) -> ImprovementTable:
    """Best configurations per phase with relative deltas, derived from
    the trial log alone (Table-style summary: phase-1 completions, then
    each seed's best annealing trial, then each seed's best
    hill-climbing trial)."""
    if isinstance(state_or_trials, CampaignState):
        trials = state_or_trials.trials
    else:
        trials = list(state_or_trials)
    if not trials:
        raise ValueError("improvement table needs at least one trial")
    baseline = next((t for t in trials if t.phase == PHASE_BASELINE), None)
    baseline_objective = baseline.objective if baseline is not None else None

    rows: list[ImprovementRow] = []

    block1: list[ImprovementRow] = []
    if baseline is not None and baseline.objective is not None:
        block1.append(
            ImprovementRow(
                trial_id=baseline.trial_id,
                phase=PHASE_BASELINE,
                values=baseline.values,
                objective=baseline.objective,
                delta_prev=None,
                delta_baseline=None,
            )
        )
    for record in _completed(t for t in trials if t.phase == PHASE_LHS):
        delta = _relative(record.objective, baseline_objective)
        block1.append(
            ImprovementRow(
                trial_id=record.trial_id,
                phase=PHASE_LHS,
                values=record.values,
                objective=record.objective,
                delta_prev=delta,
                delta_baseline=delta,
            )
        )
    rows.extend(sorted(block1, key=lambda r: -r.objective))

    lhs_by_x = {t.x: t for t in trials if t.phase == PHASE_LHS}
    sa_trials = [t for t in trials if t.phase == PHASE_SA]
    seed_order = list(dict.fromkeys(t.x for t in sa_trials))
    block2: list[ImprovementRow] = []
    sa_best_by_seed: dict[int, TrialRecord] = {}
    for x in seed_order:
        ancestor = lhs_by_x.get(x)
        candidates = _completed(t for t in sa_trials if t.x == x)
        if ancestor is not None and ancestor.objective is not None:
            candidates = candidates + [ancestor]
        if not candidates:
            continue
        best = max(candidates, key=lambda t: (t.objective, -t.seq))
        sa_best_by_seed[x] = best
        ancestor_objective = ancestor.objective if ancestor is not None else None
        block2.append(
            ImprovementRow(
                trial_id=best.trial_id,
                phase=PHASE_SA,
                values=best.values,
                objective=best.objective,
                delta_prev=_relative(best.objective, ancestor_objective),
                delta_baseline=_relative(best.objective, baseline_objective),
            )
        )
    rows.extend(sorted(block2, key=lambda r: -r.objective))

    hc_trials = [t for t in trials if t.phase == PHASE_HC]
    group_order = list(dict.fromkeys((t.x, t.y) for t in hc_trials))
    block3: list[ImprovementRow] = []
    for x, y in group_order:
        candidates = _completed(t for t in hc_trials if t.x == x and t.y == y)
        if not candidates:
            continue
        best = max(candidates, key=lambda t: (t.objective, -t.seq))
        ancestor = sa_best_by_seed.get(x, lhs_by_x.get(x))
        ancestor_objective = ancestor.objective if ancestor is not None else None
        block3.append(
            ImprovementRow(
                trial_id=best.trial_id,
                phase=PHASE_HC,
                values=best.values,
                objective=best.objective,
                delta_prev=_relative(best.objective, ancestor_objective),
                delta_baseline=_relative(best.objective, baseline_objective),
            )
        )
    rows.extend(sorted(block3, key=lambda r: -r.objective))

    return ImprovementTable(rows=tuple(rows), baseline_objective=baseline_objective)


# -- exports -----------------------------------------------------------


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(state: CampaignState, path: Path) -> None:
    names = state.config.space.names()
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["id", "phase", "x", "y", "z", "status", "rule_id", "repetitions", "objective"]
            + names
        )
        for t in state.trials:
            writer.writerow(
                [
                    t.trial_id,
                    t.phase,
                    _csv_cell(t.x),
                    _csv_cell(t.y),
                    _csv_cell(t.z),
                    t.status,
                    _csv_cell(t.rule_id),
                    t.repetitions,
                    _csv_cell(t.objective),
                ]
                + [_csv_cell(t.values.get(n)) for n in names]
            )


def read_trials_csv(path: Path, space: ParameterSpace) -> list[TrialRecord]:
    """Parse a trials.csv back into records (normalized coordinates and
    timings are not part of the CSV and come back empty)."""
    records = []
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for seq, row in enumerate(reader):
            values = {}
            for parameter in space.parameters:
                cell = row.get(parameter.name, "")
                if cell == "":
                    continue
                values[parameter.name] = (
                    int(float(cell)) if parameter.value_type == INTEGER else float(cell)
                )
            records.append(
                TrialRecord(
                    seq=seq,
                    trial_id=row["id"],
                    phase=row["phase"],
                    x=int(row["x"]) if row["x"] else None,
                    y=int(row["y"]) if row["y"] else None,
                    z=int(row["z"]) if row["z"] else None,
                    normalized=[],
                    values=values,
                    status=row["status"],
                    objective=float(row["objective"]) if row["objective"] else None,
                    per_rep=[],
                    repetitions=int(row["repetitions"]),
                    rule_id=row["rule_id"] or None,
                )
            )
    return records


def write_trials_jsonl(state: CampaignState, path: Path) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for t in state.trials:
            handle.write(json.dumps(t.to_dict()) + "\n")


# -- SVG figures -------------------------------------------------------

_SVG_W, _SVG_H = 640, 360
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 20, 40, 50


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]


def _scale(value: float, lo: float, hi: float, out_lo: float, out_hi: float) -> float:
    if hi == lo:
        return (out_lo + out_hi) / 2
    return out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)


def _axes(lines: list[str], x_label: str, y_label: str) -> None:
    x0, x1 = _MARGIN_L, _SVG_W - _MARGIN_R
    y0, y1 = _SVG_H - _MARGIN_B, _MARGIN_T
    lines.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<text x="{(x0 + x1) / 2:.1f}" y="{_SVG_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    lines.append(
        f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{y_label}</text>'
    )


def svg_line_chart(
    title: str, points: Sequence[tuple[float, float]], x_label: str, y_label: str
) -> str:
    """Minimal line chart: one polyline plus one circle per data point."""
    lines = _svg_open(title)
    _axes(lines, x_label, y_label)
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        lo_x, hi_x = min(xs), max(xs)
        lo_y, hi_y = min(ys), max(ys)
        pad = (hi_y - lo_y) * 0.08 or max(abs(hi_y), 1.0) * 0.05
        lo_y, hi_y = lo_y - pad, hi_y + pad
        coords = [
            (
                _scale(x, lo_x, hi_x, _MARGIN_L, _SVG_W - _MARGIN_R),
                _scale(y, lo_y, hi_y, _SVG_H - _MARGIN_B, _MARGIN_T),
            )
            for x, y in points
        ]
        for label, value in ((f"{lo_y:.0f}", lo_y), (f"{hi_y:.0f}", hi_y)):
            sy = _scale(value, lo_y, hi_y, _SVG_H - _MARGIN_B, _MARGIN_T)
            lines.append(
                f'<text x="{_MARGIN_L - 6}" y="{sy:.1f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="10">{label}</text>'
            )
        if len(coords) > 1:
            path = " ".join(f"{sx:.1f},{sy:.1f}" for sx, sy in coords)
            lines.append(
                f'<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
            )
        for sx, sy in coords:
            lines.append(f'<circle cx="{sx:.1f}" cy="{sy:.1f}" r="3" fill="#1f77b4"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_bar_chart(title: str, labels: Sequence[str], values: Sequence[float]) -> str:
    """Horizontal bars in [-1, 1], one per label (correlation report)."""
    height = _MARGIN_T + 28 * max(1, len(labels)) + _MARGIN_B
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{height}" '
        f'viewBox="0 0 {_SVG_W} {height}">',
        f'<rect width="{_SVG_W}" height="{height}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    left, right = 280, _SVG_W - 30
    center = _scale(0.0, -1.0, 1.0, left, right)
    lines.append(
        f'<line x1="{center:.1f}" y1="{_MARGIN_T}" x2="{center:.1f}" '
        f'y2="{height - _MARGIN_B}" stroke="#999" stroke-width="1"/>'
    )
    for i, (label, value) in enumerate(zip(labels, values)):
        cy = _MARGIN_T + 28 * i + 14
        sx = _scale(max(-1.0, min(1.0, value)), -1.0, 1.0, left, right)
        x0, x1 = (center, sx) if sx >= center else (sx, center)
        color = "#2ca02c" if value >= 0 else "#d62728"
        lines.append(
            f'<text x="{left - 10}" y="{cy + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
        lines.append(
            f'<rect x="{x0:.1f}" y="{cy - 8:.1f}" width="{max(x1 - x0, 0.5):.1f}" '
            f'height="16" fill="{color}"/>'
        )
        lines.append(
            f'<text x="{right + 4}" y="{cy + 4:.1f}" text-anchor="start" '
            f'font-family="sans-serif" font-size="10">{value:+.2f}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def svg_scatter(
    title: str, points: Sequence[tuple[float, float]], x_label: str, y_label: str
) -> str:
    lines = _svg_open(title)
    _axes(lines, x_label, y_label)
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
        for x, y in points:
            sx = _scale(x, lo_x, hi_x, _MARGIN_L + 10, _SVG_W - _MARGIN_R - 10)
            sy = _scale(y, lo_y, hi_y, _SVG_H - _MARGIN_B - 10, _MARGIN_T + 10)
            lines.append(f'<circle cx="{sx:.1f}" cy="{sy:.1f}" r="4" fill="#1f77b4"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# -- report ------------------------------------------------------------


def _slug(identifier: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", identifier).strip("_")


def _fmt_objective(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:,.0f}".replace(",", " ")


def _fmt_delta(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value * 100:+.1f}%"


def _markdown_report(state: CampaignState) -> str:
    space = state.config.space
    table = improvement_table(state)
    baseline = table.baseline_objective
    best = state.best_record()

    out: list[str] = ["# Configuration tuning report", ""]
    out.append(f"- Campaign completed: {'yes' if state.completed else 'no'}")
    out.append(f"- Trials logged: {len(state.trials)}")
    if baseline is not None:
        out.append(f"- Baseline objective: {_fmt_objective(baseline)} records/s (`c_default`)")
    if best is not None and baseline is not None:
        delta = _relative(best.objective, baseline)
        if delta is not None and delta > 0:
            out.append(
                f"- Best configuration: `{best.trial_id}` at "
                f"{_fmt_objective(best.objective)} records/s ({_fmt_delta(delta)} vs baseline)"
            )
        else:
            out.append(
                f"- No configuration improved on the baseline "
                f"(best `{best.trial_id}` at {_fmt_objective(best.objective)} records/s)"
            )
    out.append("")

    out.append("## Best configurations by phase")
    out.append("")
    headers = ["Identifier"] + space.names() + [
        "Throughput (records/s)",
        "+/- to previous phase",
        "+/- to baseline",
    ]
    out.append("| " + " | ".join(headers) + " |")
    out.append("|" + "|".join([":--"] + ["--:"] * (len(headers) - 1)) + "|")
    for row in table.rows:
        cells = [f"`{row.trial_id}`"]
        for parameter in space.parameters:
            value = row.values.get(parameter.name)
            cells.append(format_si(value, parameter.unit) if value is not None else "")
        cells.append(_fmt_objective(row.objective))
        cells.append(_fmt_delta(row.delta_prev))
        cells.append(_fmt_delta(row.delta_baseline))
        out.append("| " + " | ".join(cells) + " |")
    out.append("")

    out.append("## Parameter correlation with throughput")
    out.append("")
    phase1 = state.phase_trials(PHASE_LHS)
    try:
        report = correlate(phase1, space)
    except ValueError:
        out.append("Not enough completed exploration trials for a correlation analysis.")
        out.append("")
    else:
        out.append("| Parameter | Spearman r | Strength | Trials |")
        out.append("|:--|--:|:--|--:|")
        for entry in report.entries:
            r_text = "undefined" if entry.coefficient is None else f"{entry.coefficient:+.2f}"
            out.append(f"| {entry.parameter} | {r_text} | {entry.category} | {entry.n} |")
        out.append("")
        out.append("![Parameter correlation](figures/correlation.svg)")
        out.append("")

    sa_section = state.results.get("sa", {})
    hc_section = state.results.get("hc", {})
    if sa_section or hc_section:
        out.append("## Search traces")
        out.append("")
        for seed_id, trace in sa_section.items():
            best_info = trace["best"]
            out.append(
                f"- annealing from `{seed_id}`: best at iteration {best_info['iteration']} "
                f"({_fmt_objective(best_info['objective'])} records/s) "
                f"([figure](figures/sa_{_slug(seed_id)}.svg))"
            )
        for start_id, trace in hc_section.items():
            best_info = trace["best"]
            out.append(
                f"- hill climbing from `{start_id}`: best at iteration {best_info['iteration']} "
                f"({_fmt_objective(best_info['objective'])} records/s) "
                f"([figure](figures/hc_{_slug(start_id)}.svg))"
            )
        out.append("")

    validation = state.results.get("validation")
    if validation:
        out.append("## Validation re-runs")
        out.append("")
        for role in ("best", "ancestor"):
            entry = validation[role]
            spread = entry.get("spread")
            spread_text = (
                f" (spread {_fmt_objective(spread['min'])} .. {_fmt_objective(spread['max'])})"
                if spread
                else ""
            )
            out.append(
                f"- {role}: `{entry['trial']}` at {_fmt_objective(entry['objective'])} "
                f"records/s over {len(entry['per_rep'])} repetitions{spread_text}"
            )
        relative = validation.get("relative_difference")
        if relative is not None:
            out.append(f"- Relative difference: {_fmt_delta(relative)}")
        out.append("")

    latency_points = [
        (t.objective, t.latency["mean"])
        for t in state.trials
        if t.status == STATUS_COMPLETED and t.objective is not None and t.latency
    ]
    if latency_points:
        out.append("## Latency versus throughput")
        out.append("")
        out.append(
            f"{len(latency_points)} completed trials carry latency statistics; "
            "latency is reported, not optimized."
        )
        out.append("")
        out.append("![Latency vs throughput](figures/latency_throughput.svg)")
        out.append("")

    return "\n".join(out)


def emit_report(
    state: CampaignState,
    out_dir: str | Path,
    formats: Sequence[str] = ("markdown", "csv", "jsonl", "svg"),
) -> list[Path]:
    """Write the report bundle; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "csv" in formats:
        path = out_dir / "trials.csv"
        write_trials_csv(state, path)
        written.append(path)
    if "jsonl" in formats:
        path = out_dir / "trials.jsonl"
        write_trials_jsonl(state, path)
        written.append(path)
    if "svg" in formats:
        figures = out_dir / "figures"
        figures.mkdir(exist_ok=True)
        for seed_id, trace in state.results.get("sa", {}).items():
            points = [
                (s["iteration"], s["objective"])
                for s in trace["steps"]
                if s["objective"] is not None
            ]
            path = figures / f"sa_{_slug(seed_id)}.svg"
            path.write_text(
                svg_line_chart(
                    f"Annealing from {seed_id}", points, "iteration", "records/s"
                ),
                encoding="utf-8",
            )
            written.append(path)
        for start_id, trace in state.results.get("hc", {}).items():
            points = [
                (s["iteration"], s["objective"])
                for s in trace["steps"]
                if s["objective"] is not None
            ]
            path = figures / f"hc_{_slug(start_id)}.svg"
            path.write_text(
                svg_line_chart(
                    f"Hill climbing from {start_id}", points, "iteration", "records/s"
                ),
                encoding="utf-8",
            )
            written.append(path)
        phase1 = state.phase_trials(PHASE_LHS)
        try:
            report = correlate(phase1, state.config.space)
        except ValueError:
            pass
        else:
            path = figures / "correlation.svg"
            path.write_text(
                svg_bar_chart(
                    "Parameter correlation with throughput",
                    [e.parameter for e in report.entries],
                    [e.coefficient if e.coefficient is not None else 0.0 for e in report.entries],
                ),
                encoding="utf-8",
            )
            written.append(path)
        latency_points = [
            (t.objective, t.latency["mean"])
            for t in state.trials
            if t.status == STATUS_COMPLETED and t.objective is not None and t.latency
        ]
        if latency_points:
            path = figures / "latency_throughput.svg"
            path.write_text(
                svg_scatter(
                    "Latency versus throughput",
                    latency_points,
                    "records/s",
                    "latency (ms)",
                ),
                encoding="utf-8",
            )
            written.append(path)
    if "markdown" in formats:
        path = out_dir / "report.md"
        path.write_text(_markdown_report(state) + "\n", encoding="utf-8")
        written.append(path)
    return written
