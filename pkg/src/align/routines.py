"""Shared routine expressions: mining, priming/establishment, task filtering.

A routine is a token sequence produced by both interlocutors, at least once
not inside a longer shared expression's occurrence at the same text span.
Priming is its first production; establishment is the first production by
the other interlocutor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Network, Utterance, relative_time


@dataclass(frozen=True)
class Occurrence:
    utterance_index: int
    token_position: int  # global position of the first expression token
    speaker: str
    free: bool


@dataclass(frozen=True)
class RoutineEvent:
    """Where a routine was primed or established."""

    utterance_index: int
    token_position: int
    time: float  # end time of the containing utterance


@dataclass(frozen=True)
class Routine:
    expression: tuple[str, ...]
    initiator: str
    priming: RoutineEvent
    establishment: RoutineEvent
    all_occurrences: tuple[Occurrence, ...]

    @property
    def text(self) -> str:
        return " ".join(self.expression)


def extract_routines(utterances: list[Utterance]) -> list[Routine]:
    """Mine every routine expression from one team's utterances.

    Robot speech is skipped; mining is over the two human interlocutors.
    Occurrence enumeration allows overlapping matches, and an expression
    qualifies if any single occurrence is free. Output is sorted by
    establishment time.
    """
    speakers = {u.speaker for u in utterances if u.is_human and u.tokens}
    if len(speakers) < 2:
        return []

    # ngram -> ordered occurrences (utterance index, start within utterance)
    occurrences: dict[tuple[str, ...], list[tuple[int, int]]] = {}
    producers: dict[tuple[str, ...], set[str]] = {}
    for ui, utt in enumerate(utterances):
        if not utt.is_human:
            continue
        tokens = utt.tokens
        length = len(tokens)
        for start in range(length):
            for stop in range(start + 1, length + 1):
                gram = tokens[start:stop]
                occurrences.setdefault(gram, []).append((ui, start))
                producers.setdefault(gram, set()).add(utt.speaker)

    shared = {gram for gram, who in producers.items() if len(who) >= 2}

    routines = []
    for gram in shared:
        size = len(gram)
        occs = []
        any_free = False
        for ui, start in occurrences[gram]:
            tokens = utterances[ui].tokens
            # contained in a longer shared occurrence iff a one-token
            # extension is itself shared (sharedness is closed under
            # taking contiguous subsequences)
            blocked = (
                (start > 0 and tokens[start - 1:start + size] in shared)
                or (start + size < len(tokens) and tokens[start:start + size + 1] in shared)
            )
            free = not blocked
            any_free = any_free or free
            occs.append(Occurrence(
                utterance_index=ui,
                token_position=utterances[ui].global_token_offset + start,
                speaker=utterances[ui].speaker,
                free=free,
            ))
        if not any_free:
            continue

        first = occs[0]
        initiator = first.speaker
        established = next(o for o in occs if o.speaker != initiator)
        routines.append(Routine(
            expression=gram,
            initiator=initiator,
            priming=RoutineEvent(first.utterance_index, first.token_position,
                                 utterances[first.utterance_index].end),
            establishment=RoutineEvent(established.utterance_index, established.token_position,
                                       utterances[established.utterance_index].end),
            all_occurrences=tuple(occs),
        ))

    routines.sort(key=lambda r: (r.establishment.time, r.establishment.utterance_index,
                                 r.establishment.token_position, r.expression))
    return routines


def filter_task_routines(routines: list[Routine], network: Network) -> list[Routine]:
    """Keep routines whose expression contains at least one node-name token."""
    names = network.node_names
    return [r for r in routines if any(tok in names for tok in r.expression)]


def establishment_times(
    routines: list[Routine],
    mode: str = "absolute",
    *,
    window: float | None = None,
    duration: float | None = None,
) -> list[float]:
    """Establishment-time series for one team's routines.

    mode="absolute" gives utterance end times; "common_window" keeps times
    up to `window` seconds; "normalized" rescales by `duration` to percent.
    """
    absolute = [r.establishment.time for r in routines]
    if mode == "absolute":
        return absolute
    if mode == "common_window":
        if window is None:
            raise ValueError("common_window mode needs window=")
        return [t for t in absolute if t <= window]
    if mode == "normalized":
        if duration is None:
            raise ValueError("normalized mode needs duration=")
        return [relative_time(t, duration) for t in absolute]
    raise ValueError(f"unknown mode {mode!r}")


def collaborative_period(times: list[float]) -> tuple[float, float]:
    """(Q1, Q3) of establishment times by linear interpolation."""
    if not times:
        raise ValueError("no establishments")
    q1, q3 = np.percentile(np.asarray(times, dtype=float), [25, 75])
    return float(q1), float(q3)


@dataclass(frozen=True)
class TokenEvents:
    """Global token positions of routine events and marker tokens."""

    priming_positions: tuple[int, ...]
    establishment_positions: tuple[int, ...]
    marker_positions: tuple[int, ...]


def token_events(
    utterances: list[Utterance],
    routines: list[Routine],
    markers: frozenset[str] | set[str],
) -> TokenEvents:
    """Locate priming/establishment first-token positions and marker tokens.

    One priming and one establishment position per routine; one marker
    position per marker token in the two interlocutors' speech.
    """
    marker_positions = []
    for utt in utterances:
        if not utt.is_human:
            continue
        for i, tok in enumerate(utt.tokens):
            if tok in markers:
                marker_positions.append(utt.global_token_offset + i)
    return TokenEvents(
        priming_positions=tuple(sorted(r.priming.token_position for r in routines)),
        establishment_positions=tuple(sorted(r.establishment.token_position for r in routines)),
        marker_positions=tuple(sorted(marker_positions)),
    )
