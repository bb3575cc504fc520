"""Routine mining: examples, brute-force oracle equivalence, invariants."""

from __future__ import annotations

import random

import pytest

from align.routines import (
    collaborative_period,
    establishment_times,
    extract_routines,
    filter_task_routines,
    token_events,
)
from _builders import make_utterances, network, random_micro_dialogue
from _oracles import oracle_routines


def _dialogue(rows):
    return make_utterances(1, rows)


# --- examples -----------------------------------------------------------------

def test_full_repeat_yields_only_the_maximal_routine():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount zurich to mount bern"),
        ("B", 2.0, 3.0, "mount zurich to mount bern"),
    ])
    routines = extract_routines(utterances)
    assert [r.expression for r in routines] == [("mount", "zurich", "to", "mount", "bern")]
    routine = routines[0]
    assert routine.initiator == "A"
    assert routine.priming.utterance_index == 0
    assert routine.establishment.utterance_index == 1
    assert routine.establishment.time == 3.0


def test_shared_single_token_is_a_routine():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount bern"),
        ("B", 2.0, 3.0, "mount davos"),
    ])
    routines = extract_routines(utterances)
    assert [r.expression for r in routines] == [("mount",)]
    assert routines[0].initiator == "A"


def test_single_speaker_yields_nothing():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount bern"),
        ("A", 2.0, 3.0, "mount bern again"),
    ])
    assert extract_routines(utterances) == []


def test_robot_speech_is_ignored():
    utterances = _dialogue([
        ("I", 0.0, 1.0, "mount bern"),
        ("A", 2.0, 3.0, "mount bern"),
        ("B", 4.0, 5.0, "mount bern"),
    ])
    routines = extract_routines(utterances)
    assert [r.expression for r in routines] == [("mount", "bern")]
    assert routines[0].priming.utterance_index == 1  # robot priming doesn't count


def test_occurrences_carry_free_flags():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount zurich to mount bern"),
        ("B", 2.0, 3.0, "mount zurich to mount bern"),
        ("B", 4.0, 5.0, "zurich"),
        ("A", 6.0, 7.0, "zurich"),
    ])
    routines = {r.expression: r for r in extract_routines(utterances)}
    zurich = routines[("zurich",)]
    # inside the long routine: bound; standalone: free
    flags = {o.utterance_index: o.free for o in zurich.all_occurrences}
    assert flags[0] is False and flags[2] is True


# --- oracle equivalence ---------------------------------------------------------

def _as_comparable(utterances, routines):
    return {
        r.expression: (
            r.initiator,
            (r.priming.utterance_index,
             r.priming.token_position - utterances[r.priming.utterance_index].global_token_offset),
            (r.establishment.utterance_index,
             r.establishment.token_position
             - utterances[r.establishment.utterance_index].global_token_offset),
            tuple((o.utterance_index,
                   o.token_position - utterances[o.utterance_index].global_token_offset,
                   o.speaker, o.free) for o in r.all_occurrences),
        )
        for r in routines
    }


def test_matches_brute_force_oracle_on_random_micro_dialogues():
    rng = random.Random(101)
    for _ in range(200):
        utterances = random_micro_dialogue(rng)
        got = _as_comparable(utterances, extract_routines(utterances))
        expected = {
            gram: (initiator, priming, establishment, tuple(occs))
            for gram, (initiator, priming, establishment, occs) in
            oracle_routines(utterances).items()
        }
        assert got == expected


# --- invariants ------------------------------------------------------------------

def test_priming_precedes_establishment():
    rng = random.Random(202)
    for _ in range(100):
        utterances = random_micro_dialogue(rng)
        for r in extract_routines(utterances):
            assert r.priming.utterance_index < r.establishment.utterance_index
            assert r.priming.time < r.establishment.time
            assert r.priming.token_position < r.establishment.token_position


def test_appending_keeps_surviving_event_locations_and_sharedness():
    # Appending can remove a routine outright: new utterances may complete a
    # longer shared expression that covers every previously free occurrence
    # (A:"x y" B:"y x" make [x] routine; adding A:"y x" B:"x y" kills it).
    # What does hold: a surviving routine keeps its priming/establishment,
    # and a removed one lost freeness, never sharedness.
    rng = random.Random(303)
    for _ in range(100):
        utterances = random_micro_dialogue(rng, max_utterances=6)
        before = {r.expression: r for r in extract_routines(utterances)}
        extra = random_micro_dialogue(rng, max_utterances=2)
        offset = (utterances[-1].global_token_offset + len(utterances[-1].tokens)
                  if utterances else 0)
        shift = utterances[-1].end if utterances else 0.0
        appended = utterances + [
            type(u)(team=u.team, speaker=u.speaker, start=u.start + shift + 1,
                    end=u.end + shift + 1, text=u.text, tokens=u.tokens,
                    global_token_offset=u.global_token_offset + offset)
            for u in extra
        ]
        after = {r.expression: r for r in extract_routines(appended)}
        produced_after = {}
        for u in appended:
            if u.is_human:
                for a in range(len(u.tokens)):
                    for b in range(a + 1, len(u.tokens) + 1):
                        produced_after.setdefault(u.tokens[a:b], set()).add(u.speaker)
        for expression, old in before.items():
            if expression in after:
                new = after[expression]
                assert new.priming == old.priming
                assert new.establishment == old.establishment
            else:
                # removal can only happen through lost freeness
                assert len(produced_after[expression]) == 2


def test_refiltering_is_idempotent():
    net = network()
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount zurich to mount bern"),
        ("B", 2.0, 3.0, "mount zurich to mount bern"),
        ("A", 4.0, 5.0, "what about"),
        ("B", 6.0, 7.0, "what about"),
    ])
    routines = extract_routines(utterances)
    once = filter_task_routines(routines, net)
    assert filter_task_routines(once, net) == once


# --- task filtering -----------------------------------------------------------

def test_filter_keeps_referent_expressions():
    net = network()
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount zurich to mount bern"),
        ("B", 2.0, 3.0, "mount zurich to mount bern"),
        ("A", 4.0, 5.0, "what about"),
        ("B", 6.0, 7.0, "what about"),
    ])
    routines = extract_routines(utterances)
    expressions = {r.expression for r in routines}
    assert ("mount", "zurich", "to", "mount", "bern") in expressions
    assert ("what", "about") in expressions
    kept = {r.expression for r in filter_task_routines(routines, net)}
    assert ("mount", "zurich", "to", "mount", "bern") in kept
    assert ("what", "about") not in kept


def test_filter_empty_input():
    assert filter_task_routines([], network()) == []


# --- establishment times --------------------------------------------------------

def _route_with_end(end):
    utterances = _dialogue([
        ("A", 0.0, end / 2, "mount bern"),
        ("B", end - 1, end, "mount bern"),
    ])
    return extract_routines(utterances)


def test_establishment_time_modes():
    routines = _route_with_end(660.0)
    assert establishment_times(routines, "absolute") == [660.0]
    assert establishment_times(routines, "normalized", duration=1320.0) == [50.0]
    assert establishment_times(routines, "common_window", window=660.0) == [660.0]
    assert establishment_times(routines, "common_window", window=659.0) == []


def test_establishment_times_empty():
    assert establishment_times([], "absolute") == []


# --- collaborative period -------------------------------------------------------

def test_collaborative_period_linear_interpolation():
    assert collaborative_period([10, 20, 30, 40, 50]) == (20.0, 40.0)


def test_collaborative_period_singleton_and_constant():
    assert collaborative_period([42.0]) == (42.0, 42.0)
    assert collaborative_period([7.0, 7.0, 7.0]) == (7.0, 7.0)


def test_collaborative_period_empty_errors():
    with pytest.raises(ValueError, match="no establishments"):
        collaborative_period([])


# --- token events ---------------------------------------------------------------

def test_token_events_positions():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "uh mount bern"),
        ("B", 2.0, 3.0, "mount bern"),
    ])
    routines = extract_routines(utterances)
    assert [r.expression for r in routines] == [("mount", "bern")]
    events = token_events(utterances, routines, {"uh", "um"})
    assert events.marker_positions == (0,)
    assert events.priming_positions == (1,)
    assert events.establishment_positions == (3,)


def test_token_events_no_markers():
    utterances = _dialogue([
        ("A", 0.0, 1.0, "mount bern"),
        ("B", 2.0, 3.0, "mount bern"),
    ])
    events = token_events(utterances, extract_routines(utterances), {"uh", "um"})
    assert events.marker_positions == ()


def test_token_events_skip_robot_markers():
    utterances = _dialogue([
        ("I", 0.0, 1.0, "uh hello"),
        ("A", 2.0, 3.0, "uh mount bern"),
        ("B", 4.0, 5.0, "mount bern"),
    ])
    events = token_events(utterances, [], {"uh"})
    assert events.marker_positions == (2,)  # robot "uh" at position 0 skipped
