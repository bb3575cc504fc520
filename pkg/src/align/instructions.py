"""Rule-based instruction recognition and instruction-to-action matching.

Utterances yield (verb, node, node) edit instructions, possibly partial
(second node unknown). A per-team state machine caches pending instructions,
clears them at every view swap or submission, and labels each edit action
Match, Mismatch, or Nonmatch against the other interlocutor's pending
instructions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .corpus import ActionEvent, Network

ADD_VERBS = frozenset({"add", "build", "connect", "do", "go", "put"})
REMOVE_VERBS = frozenset({"away", "cut", "delete", "erase", "remove", "rub"})

NODE = "Node"
ADD = "Add"
REMOVE = "Remove"

MATCH = "Match"
MISMATCH = "Mismatch"
NONMATCH = "Nonmatch"

_ACTION_VERBS = {"adds": ADD, "removes": REMOVE}


@dataclass(frozen=True)
class Entity:
    token: str
    label: str  # NODE, ADD, or REMOVE


@dataclass(frozen=True)
class Instruction:
    """An inferred edit intent; v is None when only one node was mentioned."""

    verb: str  # ADD or REMOVE
    u: str
    v: str | None = None
    agent: str | None = None
    utterance_index: int | None = None  # stream index of the says event

    @property
    def is_partial(self) -> bool:
        return self.v is None

    def __str__(self) -> str:
        return f"{self.verb}({self.u},{self.v if self.v is not None else '?'})"


def recognise_entities(tokens: list[str] | tuple[str, ...], node_names: frozenset[str]) -> list[Entity]:
    """Scan tokens for node names and add/remove verbs, in token order."""
    entities = []
    for token in tokens:
        if token in node_names:
            entities.append(Entity(token=token, label=NODE))
        elif token in ADD_VERBS:
            entities.append(Entity(token=token, label=ADD))
        elif token in REMOVE_VERBS:
            entities.append(Entity(token=token, label=REMOVE))
    return entities


def recognise_instructions(
    tokens: list[str] | tuple[str, ...], node_names: frozenset[str]
) -> list[Instruction]:
    """Infer the sequence of edit instructions in one utterance.

    A draft (verb, u, v) is built left to right over the entities. A verb
    entity flushes a draft holding a verb and first node as a partial
    instruction and starts over with the new verb; a node gathered before
    any verb survives ("gallen ... do that" still instructs on gallen). A
    node entity fills u, then v (ignoring a repeated node name), completing
    the instruction; a missing verb defaults to the previous instruction's
    verb, or Add. A draft still holding a node at the end of the utterance
    is flushed as a partial instruction.
    """
    out: list[Instruction] = []
    verb: str | None = None
    u: str | None = None

    def defaulted(current: str | None) -> str:
        if current is not None:
            return current
        return out[-1].verb if out else ADD

    for entity in recognise_entities(tokens, node_names):
        if entity.label in (ADD, REMOVE):
            if verb is not None:  # already inferring: flush and restart
                if u is not None:
                    out.append(Instruction(verb=verb, u=u))
                u = None
            verb = entity.label
        else:
            if u is None:
                u = entity.token
            elif entity.token != u:
                out.append(Instruction(verb=defaulted(verb), u=u, v=entity.token))
                verb = None
                u = None
    if u is not None:
        out.append(Instruction(verb=defaulted(verb), u=u))
    return out


def check_match(instruction: Instruction, action: ActionEvent, network: Network) -> bool:
    """True when the edit action realizes the instruction.

    Partial instructions match on their single node; full instructions need
    both nodes, in either edge orientation. Add never matches a removal and
    vice versa.
    """
    action_verb = _ACTION_VERBS.get(action.verb)
    if action_verb is None or action.edge is None:
        raise ValueError(f"check_match needs an edit action, got verb {action.verb!r}")
    if instruction.verb != action_verb:
        return False
    id_by_name = network.name_to_id
    u, v = action.edge
    if instruction.is_partial:
        return id_by_name[instruction.u] in (u, v)
    return {id_by_name[instruction.u], id_by_name[instruction.v]} <= {u, v}


@dataclass(frozen=True)
class MatchRecord:
    """Verdict binding one edit action to a pending instruction (or none)."""

    verdict: str  # MATCH, MISMATCH, or NONMATCH
    actor: str
    action: ActionEvent
    instruction: Instruction | None
    time: float


@dataclass(frozen=True)
class AnnotatedAction:
    """One stream event with its recognized instructions and verdict."""

    action: ActionEvent
    instructions: tuple[Instruction, ...]  # inferred at this says event
    record: MatchRecord | None  # set on edit events
    pending_after: tuple[Instruction, ...]


def match_instructions_to_actions(
    stream: list[ActionEvent] | tuple[ActionEvent, ...],
    network: Network,
    clear_on_verdict: bool = False,
) -> tuple[list[MatchRecord], list[AnnotatedAction]]:
    """Run the pending-cache matcher over one team's action stream.

    Pending instructions are cleared whenever the turn or attempt counter
    advances. Says events by the interlocutors append their instructions;
    robot speech is a no-op. Every edit action yields exactly one record:
    Match against the last satisfying other-agent instruction (removing all
    satisfied instructions from the cache), Mismatch against the other
    agent's most recent instruction, or Nonmatch when they have none
    pending. `clear_on_verdict` empties the whole cache after any Match or
    Mismatch instead of removing only the satisfied instructions.
    """
    records: list[MatchRecord] = []
    annotated: list[AnnotatedAction] = []
    pending: list[Instruction] = []
    turn = 1
    attempt = 1

    for index, action in enumerate(stream):
        if action.turn > turn or action.attempt > attempt:
            pending = []
            turn = action.turn
            attempt = action.attempt

        if action.verb == "says":
            inferred: tuple[Instruction, ...] = ()
            if action.subject is not None:
                inferred = tuple(
                    replace(i, agent=action.subject, utterance_index=index)
                    for i in recognise_instructions(action.utterance.tokens, network.node_names)
                )
                pending.extend(inferred)
            annotated.append(AnnotatedAction(action, inferred, None, tuple(pending)))
            continue

        actor = action.subject
        others = [p for p in pending if p.agent != actor]
        if not others:
            record = MatchRecord(NONMATCH, actor, action, None, action.time)
        else:
            matched = None
            for candidate in others:
                if check_match(candidate, action, network):
                    matched = candidate  # later matches win
            if matched is not None:
                record = MatchRecord(MATCH, actor, action, matched, action.time)
            else:
                record = MatchRecord(MISMATCH, actor, action, others[-1], action.time)
            if clear_on_verdict:
                pending = []
            else:
                pending = [p for p in pending if not check_match(p, action, network)]
        records.append(record)
        annotated.append(AnnotatedAction(action, (), record, tuple(pending)))

    return records, annotated


def match_mismatch_times(records: list[MatchRecord], verdict: str) -> list[float]:
    """Action times of the records with the requested verdict."""
    return [r.time for r in records if r.verdict == verdict]


def grouped_records(records: list[MatchRecord], verdict: str) -> list[MatchRecord]:
    """First record per distinct instructing utterance.

    Collapses repeated verdicts against instructions from the same utterance
    into one event, for utterance-level counts and time series.
    """
    seen: set[int] = set()
    grouped = []
    for record in records:
        if record.verdict != verdict or record.instruction is None:
            continue
        key = record.instruction.utterance_index
        if key in seen:
            continue
        seen.add(key)
        grouped.append(record)
    return grouped
