"""Shared construction helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

from align.corpus import (
    EditEvent,
    Network,
    SubmitEvent,
    TeamCorpus,
    Utterance,
    build_action_stream,
    load_network,
    tokenize,
)

DATA = Path(__file__).parent / "data"


def network() -> Network:
    return load_network(DATA / "network.json")


def make_utterances(team: int, rows: list[tuple[str, float, float, str]]) -> list[Utterance]:
    """Build utterances with cumulative global token offsets.

    rows: (speaker, start, end, text), already in start-time order.
    """
    utterances = []
    offset = 0
    for speaker, start, end, text in rows:
        tokens = tuple(tokenize(text))
        utterances.append(Utterance(team=team, speaker=speaker, start=start, end=end,
                                    text=text, tokens=tokens, global_token_offset=offset))
        offset += len(tokens)
    return utterances


def make_edits(team: int, net: Network, rows: list[tuple[float, str, str, str]]) -> list[EditEvent]:
    """rows: (time, kind, node_name_u, node_name_v)."""
    edits = []
    for time, kind, u, v in rows:
        edge = net.canonical_edge(net.resolve_node(u), net.resolve_node(v))
        edits.append(EditEvent(team=team, time=time, kind=kind, edge=edge))
    return edits


def make_submits(team: int, rows: list[tuple[float, int]]) -> list[SubmitEvent]:
    return [SubmitEvent(team=team, time=t, cost=c) for t, c in rows]


def make_team(
    team: int,
    net: Network,
    utterance_rows: list[tuple[str, float, float, str]],
    edit_rows: list[tuple[float, str, str, str]] = (),
    submit_rows: list[tuple[float, int]] = (),
    stops: tuple[float, ...] = (),
    scores: tuple[tuple[str, int, int], ...] = (("A", 5, 5), ("B", 5, 5)),
    first_visual: str = "B",
) -> TeamCorpus:
    from align.corpus import TestScores

    return TeamCorpus(
        team=team,
        utterances=tuple(make_utterances(team, list(utterance_rows))),
        edits=tuple(make_edits(team, net, list(edit_rows))),
        submits=tuple(make_submits(team, list(submit_rows))),
        stops=tuple(stops),
        scores=tuple(TestScores(team=team, speaker=s, pre=pre, post=post)
                     for s, pre, post in scores),
        first_visual=first_visual,
    )


def stream_for(team_corpus: TeamCorpus):
    return build_action_stream(list(team_corpus.utterances), list(team_corpus.edits),
                               list(team_corpus.submits), team_corpus.first_visual)


def tiny_network(path: Path | None = None) -> Network:
    """The shared 10-node, 20-edge fixture network."""
    return network()


MICRO_VOCAB = ("bern", "zurich", "mount", "to", "uh", "oh")


def random_micro_dialogue(rng, team: int = 1, max_utterances: int = 8,
                          max_tokens: int = 6, vocab=MICRO_VOCAB):
    """Random two-speaker dialogue within the oracle-tractable size bounds."""
    n = rng.randrange(1, max_utterances + 1)
    rows = []
    for i in range(n):
        speaker = rng.choice("AB")
        k = rng.randrange(1, max_tokens + 1)
        text = " ".join(rng.choice(vocab) for _ in range(k))
        rows.append((speaker, float(i), i + 0.5, text))
    return make_utterances(team, rows)


def write_fixture_inputs(tmp: Path) -> dict[str, Path]:
    """Copy the CSV/JSON fixtures into tmp and return their paths."""
    paths = {}
    for name in ("network.json", "transcripts.csv", "events.csv", "tests.csv"):
        target = tmp / name
        target.write_bytes((DATA / name).read_bytes())
        paths[name.split(".")[0]] = target
    return paths
