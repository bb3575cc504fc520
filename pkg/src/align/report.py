"""Hypothesis analyses over a corpus, plus table/plot-data emission.

Four analyses mirror the measurement pipeline end to end:
- h1.1: when routine expressions get established, vs task success;
- h1.2: filler (uh/um) positions vs routine priming/establishment positions;
- h2.1: when instructions are matched/mismatched by actions, vs task success;
- h2.2: "oh" marker times vs match/mismatch action times.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .corpus import Corpus, TeamCorpus, relative_time
from .instructions import (
    MATCH,
    MISMATCH,
    MatchRecord,
    grouped_records,
    match_instructions_to_actions,
    match_mismatch_times,
)
from .measures import TeamSuccess, common_window, learning_groups, team_success
from .routines import (
    Routine,
    collaborative_period,
    establishment_times,
    extract_routines,
    filter_task_routines,
    token_events,
)
from .stats import cliffs_delta, interpret_rho, kruskal_wallis, mann_whitney_u, spearman

FILLERS = frozenset({"uh", "um"})
OH = "oh"

HYPOTHESES = ("h1.1", "h1.2", "h2.1", "h2.2")

_COLUMNS = {
    "h1.1": ["team", "n_routine", "n_common", "median_abs", "median_common",
             "median_norm", "q1_norm", "q3_norm"],
    "h1.2": ["team", "n_filler", "n_routine", "median_filler", "median_priming",
             "median_establishment", "U_priming", "p_priming", "delta_priming",
             "U_estab", "p_estab", "delta_estab"],
    "h2.1": ["team", "n_match_actions", "n_mismatch_actions", "n_match", "n_mismatch",
             "ratio", "median_match_abs", "median_match_common", "median_match_norm",
             "median_mismatch_abs", "median_mismatch_common", "median_mismatch_norm"],
    "h2.2": ["team", "n_oh", "n_oh_tokens", "n_match", "n_mismatch", "median_oh",
             "median_match", "median_mismatch", "U", "p", "delta"],
}


@dataclass(frozen=True)
class HypothesisReport:
    """Per-team rows plus dialogue-level summary for one hypothesis.

    Rows are sorted by decreasing task performance: increasing error, with
    increasing duration breaking ties.
    """

    hypothesis: str
    per_team_rows: tuple[dict, ...]
    summary: dict
    distributions: dict[str, dict[int, tuple[float, ...]]]

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "per_team_rows": [dict(r) for r in self.per_team_rows],
            "summary": self.summary,
            "distributions": {
                series: {str(team): list(values) for team, values in by_team.items()}
                for series, by_team in self.distributions.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HypothesisReport":
        return cls(
            hypothesis=data["hypothesis"],
            per_team_rows=tuple(dict(r) for r in data["per_team_rows"]),
            summary=data["summary"],
            distributions={
                series: {int(team): tuple(values) for team, values in by_team.items()}
                for series, by_team in data["distributions"].items()
            },
        )


class TeamPipeline:
    """Derived analysis artifacts for one team, computed on demand."""

    def __init__(self, team_corpus: TeamCorpus, corpus: Corpus, clear_on_verdict: bool = False):
        self.corpus = team_corpus
        self.network = corpus.network
        self.clear_on_verdict = clear_on_verdict

    @cached_property
    def success(self) -> TeamSuccess:
        return team_success(self.corpus, self.network.optimal_cost)

    @cached_property
    def routines(self) -> list[Routine]:
        return extract_routines(list(self.corpus.utterances))

    @cached_property
    def task_routines(self) -> list[Routine]:
        return filter_task_routines(self.routines, self.network)

    @cached_property
    def records(self) -> list[MatchRecord]:
        records, _ = match_instructions_to_actions(self.corpus.stream, self.network,
                                                   self.clear_on_verdict)
        return records

    @cached_property
    def annotated(self):
        _, annotated = match_instructions_to_actions(self.corpus.stream, self.network,
                                                     self.clear_on_verdict)
        return annotated

    @cached_property
    def total_tokens(self) -> int:
        return sum(len(u.tokens) for u in self.corpus.utterances)


class Pipeline:
    """All per-team pipelines for a corpus, in report row order."""

    def __init__(self, corpus: Corpus, clear_on_verdict: bool = False):
        self.corpus = corpus
        self.teams = [TeamPipeline(tc, corpus, clear_on_verdict) for tc in corpus.teams]

    @cached_property
    def ordered(self) -> list[TeamPipeline]:
        return sorted(self.teams, key=lambda tp: (tp.success.error, tp.success.duration,
                                                  tp.success.team))

    @cached_property
    def successes(self) -> list[TeamSuccess]:
        return [tp.success for tp in self.ordered]

    @cached_property
    def window(self) -> float:
        return common_window([tp.corpus.duration for tp in self.teams])


def _as_pipeline(corpus) -> Pipeline:
    return corpus if isinstance(corpus, Pipeline) else Pipeline(corpus)


def _median(values: list[float]) -> float | None:
    return float(np.median(values)) if values else None


def _paired(teams: list[TeamSuccess], values: dict[int, float | None]) -> tuple[list, list, list]:
    """Listwise-complete (value, error) pairs plus the teams kept."""
    xs, ys, kept = [], [], []
    for s in teams:
        v = values.get(s.team)
        if v is None:
            continue
        xs.append(v)
        ys.append(s.error)
        kept.append(s.team)
    return xs, ys, kept


def _safe_spearman(x: list[float], y: list[float]) -> dict | None:
    if len(x) < 3:
        return None
    try:
        result = spearman(x, y)
    except ValueError:
        return None
    return {"rho": result.statistic, "p": result.p_value, "n": len(x),
            "magnitude": interpret_rho(result.statistic)}


def _safe_kruskal(groups: list[list[float]]) -> dict | None:
    groups = [g for g in groups if g]
    if len(groups) < 2 or sum(len(g) for g in groups) < 3:
        return None
    try:
        result = kruskal_wallis(groups)
    except ValueError:
        return None
    return {"H": result.statistic, "p": result.p_value, "n": list(result.n)}


def _learning_medians(successes: list[TeamSuccess], values: dict[int, float | None]) -> list[list[float]]:
    positive, other = learning_groups(successes)
    return [
        [values[s.team] for s in successes if s.team in group and values.get(s.team) is not None]
        for group in (positive, other)
    ]


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def run_h11(corpus, window: float | None = None) -> HypothesisReport:
    """Establishment-time analysis: medians vs error, learning-group split."""
    pipeline = _as_pipeline(corpus)
    window = pipeline.window if window is None else window

    rows = []
    med_abs: dict[int, float | None] = {}
    med_common: dict[int, float | None] = {}
    med_norm: dict[int, float | None] = {}
    dist_abs, dist_common, dist_norm = {}, {}, {}
    for tp in pipeline.ordered:
        team = tp.corpus.team
        abs_times = establishment_times(tp.task_routines, "absolute")
        common = establishment_times(tp.task_routines, "common_window", window=window)
        norm = establishment_times(tp.task_routines, "normalized", duration=tp.corpus.duration)
        med_abs[team] = _median(abs_times)
        med_common[team] = _median(common)
        med_norm[team] = _median(norm)
        q1, q3 = collaborative_period(norm) if norm else (None, None)
        rows.append({
            "team": team,
            "n_routine": len(abs_times),
            "n_common": len(common),
            "median_abs": med_abs[team],
            "median_common": med_common[team],
            "median_norm": med_norm[team],
            "q1_norm": q1,
            "q3_norm": q3,
        })
        dist_abs[team] = tuple(abs_times)
        dist_common[team] = tuple(common)
        dist_norm[team] = tuple(norm)

    successes = pipeline.successes
    summary = {"common_window_sec": window}
    for label, medians in (("abs", med_abs), ("common", med_common), ("norm", med_norm)):
        xs, ys, _ = _paired(successes, medians)
        summary[f"spearman_median_{label}_vs_error"] = _safe_spearman(xs, ys)
    summary["kruskal_learning_median_abs"] = _safe_kruskal(_learning_medians(successes, med_abs))
    summary["kruskal_learning_median_norm"] = _safe_kruskal(_learning_medians(successes, med_norm))
    summary["mean_of_medians_norm"] = _mean([v for v in med_norm.values() if v is not None])

    return HypothesisReport(
        hypothesis="h1.1",
        per_team_rows=tuple(rows),
        summary=summary,
        distributions={"establishment_abs": dist_abs, "establishment_common": dist_common,
                       "establishment_norm": dist_norm},
    )


def run_h12(corpus, markers: frozenset[str] = FILLERS) -> HypothesisReport:
    """Filler-position analysis against priming and establishment positions."""
    pipeline = _as_pipeline(corpus)

    rows = []
    delta_priming: dict[int, float | None] = {}
    delta_estab: dict[int, float | None] = {}
    dist_filler, dist_priming, dist_estab = {}, {}, {}
    for tp in pipeline.ordered:
        team = tp.corpus.team
        events = token_events(list(tp.corpus.utterances), tp.task_routines, markers)
        fillers = [float(p) for p in events.marker_positions]
        priming = [float(p) for p in events.priming_positions]
        estab = [float(p) for p in events.establishment_positions]
        total = tp.total_tokens

        def pct(values: list[float]) -> list[float]:
            return [100.0 * v / total for v in values] if total else []

        row = {
            "team": team,
            "n_filler": len(fillers),
            "n_routine": len(tp.task_routines),
            "median_filler": _median(pct(fillers)),
            "median_priming": _median(pct(priming)),
            "median_establishment": _median(pct(estab)),
            "U_priming": None, "p_priming": None, "delta_priming": None,
            "U_estab": None, "p_estab": None, "delta_estab": None,
        }
        if fillers and priming:
            u = mann_whitney_u(fillers, priming)
            row["U_priming"], row["p_priming"] = u.statistic, u.p_value
            row["delta_priming"] = cliffs_delta(fillers, priming)
        if fillers and estab:
            u = mann_whitney_u(fillers, estab)
            row["U_estab"], row["p_estab"] = u.statistic, u.p_value
            row["delta_estab"] = cliffs_delta(fillers, estab)
        delta_priming[team] = row["delta_priming"]
        delta_estab[team] = row["delta_estab"]
        rows.append(row)
        dist_filler[team] = tuple(fillers)
        dist_priming[team] = tuple(priming)
        dist_estab[team] = tuple(estab)

    successes = pipeline.successes
    summary = {}
    for label, deltas in (("priming", delta_priming), ("establishment", delta_estab)):
        xs, ys, _ = _paired(successes, deltas)
        summary[f"spearman_delta_{label}_vs_error"] = _safe_spearman(xs, ys)
        summary[f"kruskal_learning_delta_{label}"] = _safe_kruskal(
            _learning_medians(successes, deltas))

    return HypothesisReport(
        hypothesis="h1.2",
        per_team_rows=tuple(rows),
        summary=summary,
        distributions={"filler_positions": dist_filler, "priming_positions": dist_priming,
                       "establishment_positions": dist_estab},
    )


def run_h21(corpus, window: float | None = None, grouped: bool = False) -> HypothesisReport:
    """Match/mismatch timing analysis, following the establishment-time recipe.

    `grouped` switches the time series from per-action records to one event
    per instructing utterance.
    """
    pipeline = _as_pipeline(corpus)
    window = pipeline.window if window is None else window

    rows = []
    med: dict[str, dict[int, float | None]] = {
        "match_abs": {}, "match_common": {}, "match_norm": {},
        "mismatch_abs": {}, "mismatch_common": {}, "mismatch_norm": {},
    }
    distributions: dict[str, dict[int, tuple[float, ...]]] = {
        "match_abs": {}, "match_norm": {}, "mismatch_abs": {}, "mismatch_norm": {},
    }
    for tp in pipeline.ordered:
        team = tp.corpus.team
        duration = tp.corpus.duration
        grouped_match = grouped_records(tp.records, MATCH)
        grouped_mismatch = grouped_records(tp.records, MISMATCH)
        if grouped:
            times = {MATCH: [r.time for r in grouped_match],
                     MISMATCH: [r.time for r in grouped_mismatch]}
        else:
            times = {MATCH: match_mismatch_times(tp.records, MATCH),
                     MISMATCH: match_mismatch_times(tp.records, MISMATCH)}

        row: dict = {
            "team": team,
            "n_match_actions": len(match_mismatch_times(tp.records, MATCH)),
            "n_mismatch_actions": len(match_mismatch_times(tp.records, MISMATCH)),
            "n_match": len(grouped_match),
            "n_mismatch": len(grouped_mismatch),
            "ratio": (len(grouped_match) / len(grouped_mismatch)) if grouped_mismatch else None,
        }
        for verdict, label in ((MATCH, "match"), (MISMATCH, "mismatch")):
            abs_times = times[verdict]
            norm = [relative_time(t, duration) for t in abs_times]
            med[f"{label}_abs"][team] = _median(abs_times)
            med[f"{label}_common"][team] = _median([t for t in abs_times if t <= window])
            med[f"{label}_norm"][team] = _median(norm)
            row[f"median_{label}_abs"] = med[f"{label}_abs"][team]
            row[f"median_{label}_common"] = med[f"{label}_common"][team]
            row[f"median_{label}_norm"] = med[f"{label}_norm"][team]
            distributions[f"{label}_abs"][team] = tuple(abs_times)
            distributions[f"{label}_norm"][team] = tuple(norm)
        rows.append(row)

    successes = pipeline.successes
    summary = {"common_window_sec": window, "grouped_times": grouped}
    for key in ("match_abs", "match_common", "match_norm", "mismatch_abs"):
        xs, ys, _ = _paired(successes, med[key])
        summary[f"spearman_median_{key}_vs_error"] = _safe_spearman(xs, ys)
    summary["kruskal_learning_median_match_abs"] = _safe_kruskal(
        _learning_medians(successes, med["match_abs"]))
    summary["kruskal_learning_median_match_norm"] = _safe_kruskal(
        _learning_medians(successes, med["match_norm"]))
    summary["mean_of_medians_match_norm"] = _mean(
        [v for v in med["match_norm"].values() if v is not None])
    summary["mean_of_medians_mismatch_norm"] = _mean(
        [v for v in med["mismatch_norm"].values() if v is not None])

    return HypothesisReport(hypothesis="h2.1", per_team_rows=tuple(rows), summary=summary,
                            distributions=distributions)


def run_h22(corpus, oh_events: str = "token", mm_events: str = "action") -> HypothesisReport:
    """"oh" marker times vs pooled match+mismatch action times.

    An "oh" event takes the end time of its containing utterance;
    oh_events="token" emits one event per occurrence, "utterance" one per
    utterance containing the marker. mm_events="utterance" pools the
    per-instructing-utterance series instead of per-action times.
    """
    if oh_events not in ("token", "utterance"):
        raise ValueError(f"oh_events must be 'token' or 'utterance', got {oh_events!r}")
    if mm_events not in ("action", "utterance"):
        raise ValueError(f"mm_events must be 'action' or 'utterance', got {mm_events!r}")
    pipeline = _as_pipeline(corpus)

    rows = []
    deltas: dict[int, float | None] = {}
    dist_oh, dist_match, dist_mismatch = {}, {}, {}
    for tp in pipeline.ordered:
        team = tp.corpus.team
        duration = tp.corpus.duration

        oh_times = []
        n_oh_utterances = 0
        n_oh_tokens = 0
        for utt in tp.corpus.utterances:
            if not utt.is_human:
                continue
            count = sum(1 for tok in utt.tokens if tok == OH)
            if count == 0:
                continue
            n_oh_utterances += 1
            n_oh_tokens += count
            oh_times.extend([utt.end] * (count if oh_events == "token" else 1))

        if mm_events == "utterance":
            match_times = [r.time for r in grouped_records(tp.records, MATCH)]
            mismatch_times = [r.time for r in grouped_records(tp.records, MISMATCH)]
        else:
            match_times = match_mismatch_times(tp.records, MATCH)
            mismatch_times = match_mismatch_times(tp.records, MISMATCH)
        pooled = match_times + mismatch_times

        row: dict = {
            "team": team,
            "n_oh": n_oh_utterances,
            "n_oh_tokens": n_oh_tokens,
            "n_match": len(grouped_records(tp.records, MATCH)),
            "n_mismatch": len(grouped_records(tp.records, MISMATCH)),
            "median_oh": _median([relative_time(t, duration) for t in oh_times]),
            "median_match": _median([relative_time(t, duration) for t in match_times]),
            "median_mismatch": _median([relative_time(t, duration) for t in mismatch_times]),
            "U": None, "p": None, "delta": None,
        }
        if oh_times and pooled:
            u = mann_whitney_u(oh_times, pooled)
            row["U"], row["p"] = u.statistic, u.p_value
            row["delta"] = cliffs_delta(oh_times, pooled)
        deltas[team] = row["delta"]
        rows.append(row)
        dist_oh[team] = tuple(relative_time(t, duration) for t in oh_times)
        dist_match[team] = tuple(relative_time(t, duration) for t in match_times)
        dist_mismatch[team] = tuple(relative_time(t, duration) for t in mismatch_times)

    successes = pipeline.successes
    xs, ys, _ = _paired(successes, deltas)
    summary = {
        "oh_events": oh_events,
        "mm_events": mm_events,
        "spearman_delta_vs_error": _safe_spearman(xs, ys),
        "kruskal_learning_delta": _safe_kruskal(_learning_medians(successes, deltas)),
    }
    return HypothesisReport(
        hypothesis="h2.2",
        per_team_rows=tuple(rows),
        summary=summary,
        distributions={"oh_norm": dist_oh, "match_norm": dist_match,
                       "mismatch_norm": dist_mismatch},
    )


RUNNERS = {"h1.1": run_h11, "h1.2": run_h12, "h2.1": run_h21, "h2.2": run_h22}


# ---------------------------------------------------------------------------
# Emission. Identical inputs produce byte-identical files: fixed column
# orders, shortest-roundtrip float repr, LF newlines, sorted JSON keys.

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def emit(report: HypothesisReport, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write a hypothesis report as csv tables or a single json document."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.hypothesis.replace(".", "")

    written = []
    if fmt == "json":
        path = out / f"{stem}.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        written.append(path)
        return written

    columns = _COLUMNS[report.hypothesis]
    per_team = out / f"{stem}_per_team.csv"
    _write_csv(per_team, columns, [[row.get(c) for c in columns] for row in report.per_team_rows])
    written.append(per_team)

    dist_path = out / f"{stem}_distributions.csv"
    dist_rows = []
    for series in sorted(report.distributions):
        by_team = report.distributions[series]
        for team in sorted(by_team):
            for value in by_team[team]:
                dist_rows.append([series, team, value])
    _write_csv(dist_path, ["series", "team", "value"], dist_rows)
    written.append(dist_path)

    summary_path = out / f"{stem}_summary.json"
    summary_path.write_text(json.dumps(report.summary, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    written.append(summary_path)
    return written


def emit_routine_table(pipeline: Pipeline, path: str | Path, task_only: bool = False) -> Path:
    """Routine table CSV across all teams."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = pipeline.corpus.network.node_names
    rows = []
    for tp in sorted(pipeline.teams, key=lambda t: t.corpus.team):
        routines = tp.task_routines if task_only else tp.routines
        for r in routines:
            rows.append([
                tp.corpus.team, r.text, r.initiator,
                r.priming.time, r.establishment.time,
                r.priming.token_position, r.establishment.token_position,
                any(tok in names for tok in r.expression),
            ])
    _write_csv(path, ["team", "expression", "initiator", "priming_time", "establishment_time",
                      "priming_token_pos", "establishment_token_pos", "contains_referent"], rows)
    return path


def _format_object(action, label_by_id: dict[int, str]) -> str:
    if action.utterance is not None:
        return action.utterance.text
    u, v = action.edge
    return f"{label_by_id[u]}-{label_by_id[v]}"


def emit_annotated_corpus(pipeline: Pipeline, path: str | Path) -> Path:
    """Annotated corpus CSV: the stream with instructions and verdicts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    label_by_id = {n.id: n.name for n in pipeline.corpus.network.nodes}
    rows = []
    for tp in sorted(pipeline.teams, key=lambda t: t.corpus.team):
        for ann in tp.annotated:
            action = ann.action
            subject = action.subject
            if subject is None and action.utterance is not None:
                subject = action.utterance.speaker
            record = ann.record
            rows.append([
                tp.corpus.team,
                subject,
                action.verb,
                _format_object(action, label_by_id),
                action.time,
                action.turn,
                action.attempt,
                " ".join(str(i) for i in ann.instructions),
                record.verdict if record else "-",
                str(record.instruction) if record and record.instruction else "",
                record.instruction.agent if record and record.instruction else "",
            ])
    _write_csv(path, ["team", "subject", "verb", "object", "time", "turn", "attempt",
                      "instructions", "verdict", "matched_instruction", "matched_agent"], rows)
    return path


def emit_measures(pipeline: Pipeline, path: str | Path) -> Path:
    """Task-level features CSV, one row per team."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for s in sorted(pipeline.successes, key=lambda s: s.team):
        rows.append([s.team, s.error, s.learn, s.learn_a, s.learn_b,
                     s.duration, s.n_submissions, s.n_turns])
    _write_csv(path, ["team", "error", "learn", "learn_A", "learn_B", "duration_sec",
                      "n_submissions", "n_turns"], rows)
    return path


def format_p(p: float | None) -> str:
    """Display convention for p-values: 3 decimals, flagged below .05."""
    if p is None:
        return "n/a"
    if p < 0.05:
        return "<.05"
    return f"{p:.3f}"


def summary_lines(report: HypothesisReport) -> list[str]:
    """Human-readable summary of a hypothesis report."""
    lines = [f"[{report.hypothesis}]"]
    for key in report.summary:
        value = report.summary[key]
        if key.startswith("spearman"):
            if value is None:
                lines.append(f"  {key}: n/a")
            else:
                lines.append(f"  {key}: rho={value['rho']:.2f} p={format_p(value['p'])} "
                             f"({value['magnitude']}, n={value['n']})")
        elif key.startswith("kruskal"):
            if value is None:
                lines.append(f"  {key}: n/a")
            else:
                lines.append(f"  {key}: H={value['H']:.2f} p={format_p(value['p'])}")
        elif isinstance(value, float):
            lines.append(f"  {key}: {value:.1f}")
        else:
            lines.append(f"  {key}: {value}")
    return lines
