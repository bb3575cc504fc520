"""Corpus ingestion: transcripts, event logs, network, test scores.

Builds the per-team chronological action stream (says/adds/removes) with
turn and attempt bookkeeping. A turn lasts for two edit actions; a new
attempt starts after each submitted solution.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

HUMAN_SPEAKERS = ("A", "B")
ROBOT_SPEAKER = "I"

ADD = "add"
REMOVE = "remove"

# stripped from both ends of every whitespace-delimited token
_PUNCT = ",.!?"


class InputError(ValueError):
    """Raised when an input file fails validation."""


def tokenize(text: str) -> list[str]:
    """Split an utterance into lowercase tokens.

    Terminal punctuation (.,!?) is stripped; word-internal apostrophes and
    trailing-hyphen fragments ("neuchat-") are kept. Standalone punctuation
    tokens disappear.
    """
    tokens = []
    for raw in text.split():
        word = raw.lower().strip(_PUNCT)
        if word:
            tokens.append(word)
    return tokens


@dataclass(frozen=True)
class NetworkNode:
    id: int
    name: str  # single distinctive token, case-folded for matching
    label: str
    x: float
    y: float


@dataclass(frozen=True)
class Network:
    """Activity network: nodes with display info, edges with build costs.

    Edges are stored canonically with u < v (node ids).
    """

    nodes: tuple[NetworkNode, ...]
    edges: tuple[tuple[int, int, int], ...]  # (u, v, cost)

    def __post_init__(self) -> None:
        names = [n.name.lower() for n in self.nodes]
        if len(set(names)) != len(names):
            raise InputError("duplicate node names after case-folding")
        ids = {n.id for n in self.nodes}
        seen = set()
        for u, v, cost in self.edges:
            if u not in ids or v not in ids:
                raise InputError(f"edge ({u},{v}) references undeclared node")
            if not u < v:
                raise InputError(f"edge ({u},{v}) not in canonical u < v order")
            if (u, v) in seen:
                raise InputError(f"duplicate edge ({u},{v})")
            if cost <= 0:
                raise InputError(f"edge ({u},{v}) has non-positive cost")
            seen.add((u, v))

    @cached_property
    def name_to_id(self) -> dict[str, int]:
        return {n.name.lower(): n.id for n in self.nodes}

    @cached_property
    def node_names(self) -> frozenset[str]:
        """Case-folded node-name lexicon (the task-specific referents)."""
        return frozenset(self.name_to_id)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for u, v, _ in self.edges)

    def canonical_edge(self, u: int, v: int) -> tuple[int, int]:
        return (u, v) if u < v else (v, u)

    def resolve_node(self, name: str) -> int:
        node_id = self.name_to_id.get(name.lower())
        if node_id is None:
            raise InputError(f"unknown node name: {name!r}")
        return node_id

    @cached_property
    def optimal_cost(self) -> int:
        """Cost of a minimum spanning tree (Kruskal)."""
        parent = {n.id: n.id for n in self.nodes}

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        total = 0
        joined = 0
        for u, v, cost in sorted(self.edges, key=lambda e: (e[2], e[0], e[1])):
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                total += cost
                joined += 1
        if joined != len(self.nodes) - 1:
            raise InputError("network is not connected; no spanning solution exists")
        return total


@dataclass(frozen=True)
class Utterance:
    """One speaker's IPU with timing, raw text, and token bookkeeping."""

    team: int
    speaker: str  # "A", "B", or "I" for the robot
    start: float
    end: float
    text: str
    tokens: tuple[str, ...]
    global_token_offset: int

    @property
    def is_human(self) -> bool:
        return self.speaker in HUMAN_SPEAKERS


@dataclass(frozen=True)
class EditEvent:
    team: int
    time: float
    kind: str  # ADD or REMOVE
    edge: tuple[int, int]  # canonical u < v


@dataclass(frozen=True)
class SubmitEvent:
    team: int
    time: float
    cost: int


@dataclass(frozen=True)
class TestScores:
    team: int
    speaker: str
    pre: int
    post: int


@dataclass(frozen=True)
class ActionEvent:
    """Unified says/adds/removes record with turn and attempt counters.

    `subject` is None for robot speech; edit subjects are derived from the
    view-swap parity (the visual-view interlocutor performs the edits).
    """

    subject: str | None
    verb: str  # "says", "adds", or "removes"
    time: float
    turn: int
    attempt: int
    utterance: Utterance | None = None
    edge: tuple[int, int] | None = None


def _parse_float(value: str, line_no: int, column: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise InputError(f"line {line_no}: bad {column} value {value!r}") from None


def _parse_int(value: str, line_no: int, column: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise InputError(f"line {line_no}: bad {column} value {value!r}") from None


def _open_csv(path: str | Path, required: list[str]) -> tuple[csv.DictReader, object]:
    handle = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(handle)
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != required:
        handle.close()
        raise InputError(
            f"{path}: expected header {','.join(required)}, "
            f"got {','.join(reader.fieldnames or [])}"
        )
    return reader, handle


def load_transcript(path: str | Path) -> list[Utterance]:
    """Load a transcripts CSV (team,speaker,start_sec,end_sec,utterance).

    Utterances are sorted by start time within each team and numbered with
    cumulative global token offsets (unique token numbering per team).
    """
    reader, handle = _open_csv(path, ["team", "speaker", "start_sec", "end_sec", "utterance"])
    rows = []
    with handle:
        for line_no, row in enumerate(reader, start=2):
            if any(row.get(k) is None for k in ("team", "speaker", "start_sec", "end_sec", "utterance")):
                raise InputError(f"line {line_no}: malformed row")
            speaker = row["speaker"].strip()
            if speaker not in HUMAN_SPEAKERS and speaker != ROBOT_SPEAKER:
                raise InputError(f"line {line_no}: speaker must be A, B, or I, got {speaker!r}")
            start = _parse_float(row["start_sec"], line_no, "start_sec")
            end = _parse_float(row["end_sec"], line_no, "end_sec")
            if start > end:
                raise InputError(f"line {line_no}: start {start} after end {end}")
            rows.append((_parse_int(row["team"], line_no, "team"), speaker, start, end, row["utterance"]))

    rows.sort(key=lambda r: (r[0], r[2], r[3]))
    utterances = []
    offsets: dict[int, int] = {}
    for team, speaker, start, end, text in rows:
        tokens = tuple(tokenize(text))
        offset = offsets.get(team, 0)
        utterances.append(
            Utterance(team=team, speaker=speaker, start=start, end=end, text=text,
                      tokens=tokens, global_token_offset=offset)
        )
        offsets[team] = offset + len(tokens)
    return utterances


@dataclass(frozen=True)
class EventLog:
    """Parsed event log; unpacks as (edits, submits) for convenience."""

    edits: tuple[EditEvent, ...]
    submits: tuple[SubmitEvent, ...]
    stops: tuple[tuple[int, float], ...] = ()  # (team, time) experimenter stop records

    def __iter__(self):
        return iter((list(self.edits), list(self.submits)))


def load_event_log(path: str | Path, network: Network) -> EventLog:
    """Load an events CSV (team,time_sec,event,u,v,cost), chronologically sorted.

    Edges are resolved against the network's node names and canonicalized
    u < v. An optional `stop` event marks the experimenter ending the task.
    """
    reader, handle = _open_csv(path, ["team", "time_sec", "event", "u", "v", "cost"])
    edits, submits, stops = [], [], []
    with handle:
        for line_no, row in enumerate(reader, start=2):
            team = _parse_int(row["team"], line_no, "team")
            time = _parse_float(row["time_sec"], line_no, "time_sec")
            kind = row["event"].strip().lower()
            if kind in (ADD, REMOVE):
                u = network.resolve_node(row["u"].strip())
                v = network.resolve_node(row["v"].strip())
                edge = network.canonical_edge(u, v)
                if edge not in network.edge_set:
                    raise InputError(f"line {line_no}: ({row['u']},{row['v']}) is not a network edge")
                edits.append(EditEvent(team=team, time=time, kind=kind, edge=edge))
            elif kind == "submit":
                if not row["cost"].strip():
                    raise InputError(f"line {line_no}: submit without cost")
                cost = _parse_int(row["cost"].strip(), line_no, "cost")
                if cost < network.optimal_cost:
                    raise InputError(
                        f"line {line_no}: submitted cost {cost} below optimal "
                        f"{network.optimal_cost} (a solution spans all nodes)"
                    )
                submits.append(SubmitEvent(team=team, time=time, cost=cost))
            elif kind == "stop":
                stops.append((team, time))
            else:
                raise InputError(f"line {line_no}: unknown event kind {kind!r}")

    edits.sort(key=lambda e: (e.team, e.time))
    submits.sort(key=lambda s: (s.team, s.time))
    stops.sort()
    return EventLog(edits=tuple(edits), submits=tuple(submits), stops=tuple(stops))


def load_network(path: str | Path) -> Network:
    """Load the network JSON: {nodes:[{id,name,label,x,y}], edges:[{u,v,cost}]}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    try:
        nodes = tuple(
            NetworkNode(id=int(n["id"]), name=str(n["name"]), label=str(n["label"]),
                        x=float(n["x"]), y=float(n["y"]))
            for n in data["nodes"]
        )
        edges = []
        ids = {n.id for n in nodes}
        for e in data["edges"]:
            u, v, cost = int(e["u"]), int(e["v"]), int(e["cost"])
            if u not in ids or v not in ids:
                raise InputError(f"{path}: edge ({u},{v}) references undeclared node")
            edges.append((min(u, v), max(u, v), cost))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{path}: malformed network description ({exc})") from None
    return Network(nodes=nodes, edges=tuple(sorted(edges)))


def load_test_scores(path: str | Path, max_score: int = 10) -> list[TestScores]:
    """Load the tests CSV (team,speaker,pre,post) with 0..max_score validation."""
    reader, handle = _open_csv(path, ["team", "speaker", "pre", "post"])
    scores = []
    with handle:
        for line_no, row in enumerate(reader, start=2):
            speaker = row["speaker"].strip()
            if speaker not in HUMAN_SPEAKERS:
                raise InputError(f"line {line_no}: speaker must be A or B, got {speaker!r}")
            pre = _parse_int(row["pre"], line_no, "pre")
            post = _parse_int(row["post"], line_no, "post")
            for name, value in (("pre", pre), ("post", post)):
                if not 0 <= value <= max_score:
                    raise InputError(f"line {line_no}: {name} score {value} outside 0..{max_score}")
            scores.append(TestScores(team=_parse_int(row["team"], line_no, "team"),
                                     speaker=speaker, pre=pre, post=post))
    scores.sort(key=lambda s: (s.team, s.speaker))
    return scores


def build_action_stream(
    utterances: list[Utterance],
    edits: list[EditEvent],
    submits: list[SubmitEvent],
    first_visual: str = "B",
) -> list[ActionEvent]:
    """Merge one team's utterances and events into a chronological stream.

    The turn counter increments after every second edit action; the attempt
    counter increments after each submission. Says events carry the counters
    in force at their start time. Simultaneous events are ordered
    says < edit < submit.

    `first_visual` names the interlocutor in the visual view during turn 1;
    that interlocutor performs the turn's edits, alternating each swap.
    """
    if first_visual not in HUMAN_SPEAKERS:
        raise ValueError(f"first_visual must be A or B, got {first_visual!r}")
    teams = {u.team for u in utterances} | {e.team for e in edits} | {s.team for s in submits}
    if len(teams) > 1:
        raise ValueError(f"events from more than one team: {sorted(teams)}")

    SAYS, EDIT, SUBMIT = 0, 1, 2
    merged: list[tuple[float, int, int, object]] = []
    merged += [(u.start, SAYS, i, u) for i, u in enumerate(utterances)]
    merged += [(e.time, EDIT, i, e) for i, e in enumerate(edits)]
    merged += [(s.time, SUBMIT, i, s) for i, s in enumerate(submits)]
    merged.sort(key=lambda item: (item[0], item[1], item[2]))

    other = "A" if first_visual == "B" else "B"
    stream: list[ActionEvent] = []
    turn = 1
    attempt = 1
    edits_in_turn = 0
    for time, kind, _, payload in merged:
        if kind == SAYS:
            utterance = payload
            subject = utterance.speaker if utterance.is_human else None
            stream.append(ActionEvent(subject=subject, verb="says", time=time,
                                      turn=turn, attempt=attempt, utterance=utterance))
        elif kind == EDIT:
            actor = first_visual if turn % 2 == 1 else other
            verb = "adds" if payload.kind == ADD else "removes"
            stream.append(ActionEvent(subject=actor, verb=verb, time=time,
                                      turn=turn, attempt=attempt, edge=payload.edge))
            edits_in_turn += 1
            if edits_in_turn == 2:
                turn += 1
                edits_in_turn = 0
        else:
            attempt += 1
    return stream


def relative_time(time: float, team_duration: float) -> float:
    """Map an absolute time to percent progress through the team's activity."""
    if team_duration == 0:
        raise ValueError("team_duration must be positive")
    return 100.0 * time / team_duration


@dataclass(frozen=True)
class TeamCorpus:
    """All ingested data for one team, with derived stream and duration."""

    team: int
    utterances: tuple[Utterance, ...]
    edits: tuple[EditEvent, ...]
    submits: tuple[SubmitEvent, ...]
    stops: tuple[float, ...] = ()
    scores: tuple[TestScores, ...] = ()
    first_visual: str = "B"

    @cached_property
    def stream(self) -> tuple[ActionEvent, ...]:
        return tuple(build_action_stream(list(self.utterances), list(self.edits),
                                         list(self.submits), self.first_visual))

    @cached_property
    def duration(self) -> float:
        """Time of the last logged event (final submit or stop record).

        Falls back to the last utterance end for event-less corpora.
        """
        event_times = [e.time for e in self.edits] + [s.time for s in self.submits] + list(self.stops)
        if event_times:
            return max(event_times)
        if self.utterances:
            return max(u.end for u in self.utterances)
        return 0.0

    @property
    def human_utterances(self) -> tuple[Utterance, ...]:
        return tuple(u for u in self.utterances if u.is_human)

    @property
    def n_turns(self) -> int:
        return 1 + len(self.edits) // 2

    def score_for(self, speaker: str) -> TestScores | None:
        for s in self.scores:
            if s.speaker == speaker:
                return s
        return None


@dataclass(frozen=True)
class Corpus:
    """A network plus per-team corpora, keyed by team id."""

    network: Network
    teams: tuple[TeamCorpus, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.teams)

    def team(self, team_id: int) -> TeamCorpus:
        for tc in self.teams:
            if tc.team == team_id:
                return tc
        raise KeyError(f"no team {team_id} in corpus")


def assemble_corpus(
    network: Network,
    utterances: list[Utterance],
    event_log: EventLog,
    scores: list[TestScores],
    first_visual: str = "B",
) -> Corpus:
    """Group loaded rows by team into a Corpus."""
    team_ids = sorted(
        {u.team for u in utterances}
        | {e.team for e in event_log.edits}
        | {s.team for s in event_log.submits}
        | {t for t, _ in event_log.stops}
        | {s.team for s in scores}
    )
    teams = []
    for team_id in team_ids:
        teams.append(TeamCorpus(
            team=team_id,
            utterances=tuple(u for u in utterances if u.team == team_id),
            edits=tuple(e for e in event_log.edits if e.team == team_id),
            submits=tuple(s for s in event_log.submits if s.team == team_id),
            stops=tuple(t for tid, t in event_log.stops if tid == team_id),
            scores=tuple(s for s in scores if s.team == team_id),
            first_visual=first_visual,
        ))
    return Corpus(network=network, teams=tuple(teams))


# ---------------------------------------------------------------------------
# Corpus (de)serialization. Tokens, offsets, and counters are recomputed on
# load from the stored raw rows; both derivations are deterministic, so a
# round-trip reproduces them exactly.

def save_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "network": {
            "nodes": [{"id": n.id, "name": n.name, "label": n.label, "x": n.x, "y": n.y}
                      for n in corpus.network.nodes],
            "edges": [{"u": u, "v": v, "cost": c} for u, v, c in corpus.network.edges],
        },
        "teams": [
            {
                "team": tc.team,
                "first_visual": tc.first_visual,
                "utterances": [
                    {"speaker": u.speaker, "start": u.start, "end": u.end, "text": u.text}
                    for u in tc.utterances
                ],
                "edits": [{"time": e.time, "kind": e.kind, "u": e.edge[0], "v": e.edge[1]}
                          for e in tc.edits],
                "submits": [{"time": s.time, "cost": s.cost} for s in tc.submits],
                "stops": list(tc.stops),
                "scores": [{"speaker": s.speaker, "pre": s.pre, "post": s.post}
                           for s in tc.scores],
            }
            for tc in corpus.teams
        ],
    }
    path = out / "corpus.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_corpus(corpus_dir: str | Path) -> Corpus:
    path = Path(corpus_dir) / "corpus.json"
    if not path.exists():
        raise InputError(f"{path}: corpus file not found (run `align ingest` first)")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None

    network = Network(
        nodes=tuple(NetworkNode(id=n["id"], name=n["name"], label=n["label"], x=n["x"], y=n["y"])
                    for n in data["network"]["nodes"]),
        edges=tuple((e["u"], e["v"], e["cost"]) for e in data["network"]["edges"]),
    )
    teams = []
    for t in data["teams"]:
        rows = sorted(t["utterances"], key=lambda u: (u["start"], u["end"]))
        utterances = []
        offset = 0
        for u in rows:
            tokens = tuple(tokenize(u["text"]))
            utterances.append(Utterance(team=t["team"], speaker=u["speaker"], start=u["start"],
                                        end=u["end"], text=u["text"], tokens=tokens,
                                        global_token_offset=offset))
            offset += len(tokens)
        teams.append(TeamCorpus(
            team=t["team"],
            utterances=tuple(utterances),
            edits=tuple(EditEvent(team=t["team"], time=e["time"], kind=e["kind"],
                                  edge=(e["u"], e["v"])) for e in t["edits"]),
            submits=tuple(SubmitEvent(team=t["team"], time=s["time"], cost=s["cost"])
                          for s in t["submits"]),
            stops=tuple(t["stops"]),
            scores=tuple(TestScores(team=t["team"], speaker=s["speaker"], pre=s["pre"],
                                    post=s["post"]) for s in t["scores"]),
            first_visual=t.get("first_visual", "B"),
        ))
    return Corpus(network=network, teams=tuple(teams))
