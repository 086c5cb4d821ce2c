"""Event structures with conflict and a finitely generated enabling relation.

An event structure is stored as a finite set of participant-tagged,
action-labelled events, a symmetric irreflexive conflict relation, and a
finite set of generator enablings ``(X, e)``.  The full enabling relation
is the saturation of the generators: ``X ⊢ e`` holds for every finite
conflict-free ``X`` that contains some generator premise for ``e``.
Saturation is never materialised; it is answered by subset queries.

Generators whose premise is not conflict-free are tolerated.  They can
never fire (a conflict-free history cannot contain them) and the parallel
composition of denotations produces such inert generators, so pruning them
would change printed artifacts without changing behaviour.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from .lts import Lts
from .syntax import ActionLabel

Generator = tuple[frozenset[str], str]


@dataclass(frozen=True)
class Event:
    """An occurrence of an action, owned by one participant."""

    id: str
    participant: str
    label: ActionLabel


_ID_RE = re.compile(r"^e(\d+)((?:@\d+)*)$")


@lru_cache(maxsize=None)
def id_sort_key(event_id: str) -> tuple:
    """Numeric-aware ordering for ids of the form ``e<n>[@<k>...]``."""
    match = _ID_RE.match(event_id)
    if match:
        suffix = tuple(int(part) for part in match.group(2).split("@")[1:]) if match.group(2) else ()
        return (0, int(match.group(1)), suffix, event_id)
    return (1, 0, (), event_id)


@dataclass(frozen=True)
class EventStructureGen:
    events: frozenset[Event]
    conflicts: frozenset[frozenset[str]]
    gens: frozenset[Generator]
    _by_id: dict = field(init=False, compare=False, repr=False, hash=False)
    _gens_by_target: dict = field(init=False, compare=False, repr=False, hash=False)
    _conflict_sets: dict = field(init=False, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        by_id = {}
        for event in self.events:
            if event.id in by_id:
                raise ValueError(f"duplicate event id {event.id}")
            by_id[event.id] = event
        for pair in self.conflicts:
            if len(pair) != 2:
                raise ValueError(f"conflict must relate two distinct events: {sorted(pair)}")
            for eid in pair:
                if eid not in by_id:
                    raise ValueError(f"conflict mentions unknown event {eid}")
        by_target: dict[str, list[frozenset[str]]] = {}
        for premise, target in self.gens:
            if target not in by_id:
                raise ValueError(f"enabling targets unknown event {target}")
            unknown = premise - by_id.keys()
            if unknown:
                raise ValueError(f"enabling premise mentions unknown events {sorted(unknown)}")
            by_target.setdefault(target, []).append(premise)
        conflict_sets: dict[str, set[str]] = {eid: set() for eid in by_id}
        for pair in self.conflicts:
            first, second = tuple(pair)
            conflict_sets[first].add(second)
            conflict_sets[second].add(first)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_gens_by_target", by_target)
        object.__setattr__(self, "_conflict_sets", conflict_sets)

    # -- lookups ------------------------------------------------------------

    @property
    def event_ids(self) -> frozenset[str]:
        return frozenset(self._by_id)

    def event(self, event_id: str) -> Event:
        try:
            return self._by_id[event_id]
        except KeyError:
            raise KeyError(f"unknown event {event_id}") from None

    def label_of(self, event_id: str) -> ActionLabel:
        return self.event(event_id).label

    def participant_of(self, event_id: str) -> str:
        return self.event(event_id).participant

    def participants(self) -> frozenset[str]:
        return frozenset(event.participant for event in self.events)

    def events_of(self, participant: str) -> frozenset[str]:
        return frozenset(e.id for e in self.events if e.participant == participant)

    def premises_of(self, event_id: str) -> tuple[frozenset[str], ...]:
        return tuple(self._gens_by_target.get(event_id, ()))

    def in_conflict(self, a: str, b: str) -> bool:
        return b in self._conflict_sets.get(a, ())

    def conflicts_of(self, event_id: str) -> frozenset[str]:
        return frozenset(self._conflict_sets.get(event_id, ()))


def make_es(events, conflicts=(), gens=()) -> EventStructureGen:
    """Normalising constructor: conflicts as id pairs, gens as (premise, target)."""
    conflict_set = frozenset(frozenset(pair) for pair in conflicts)
    gen_set = frozenset((frozenset(premise), target) for premise, target in gens)
    return EventStructureGen(frozenset(events), conflict_set, gen_set)


EMPTY_ES = make_es(())


# ---------------------------------------------------------------------------
# Core queries
# ---------------------------------------------------------------------------

def conflict_free(es: EventStructureGen, ids) -> bool:
    """True when no two members of ``ids`` are in conflict."""
    members = list(ids)
    for eid in members:
        es.event(eid)  # unknown events are an error, not "not conflict-free"
    return not any(es.in_conflict(a, b) for a, b in combinations(members, 2))


def enabled(es: EventStructureGen, history, event_id: str) -> bool:
    """Saturated enabling: some generator premise for the event sits inside
    the (conflict-free) history."""
    hist = frozenset(history)
    if not conflict_free(es, hist):
        return False
    return any(premise <= hist for premise in es.premises_of(event_id))


def playable(es: EventStructureGen, history) -> frozenset[str]:
    """Events that can extend a play with the given conflict-free past:
    enabled, not yet fired and not conflicted by anything fired."""
    hist = frozenset(history)
    out = set()
    for event in es.events:
        if event.id in hist:
            continue
        if any(other in hist for other in es.conflicts_of(event.id)):
            continue
        if any(premise <= hist for premise in es.premises_of(event.id)):
            out.add(event.id)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Remainder
# ---------------------------------------------------------------------------

def remainder(es: EventStructureGen, event_id: str) -> EventStructureGen:
    """The event structure left after executing one event.

    The event and everything in conflict with it disappear, conflicts are
    restricted to the survivors, and each surviving enabling loses the
    fired event from its premise.  An enabling is dropped when its target
    dies or when its premise cannot coexist with the fired event.
    """
    es.event(event_id)
    dead = {event_id} | set(es.conflicts_of(event_id))
    survivors = frozenset(e for e in es.events if e.id not in dead)
    survivor_ids = frozenset(e.id for e in survivors)
    conflicts = frozenset(pair for pair in es.conflicts if pair <= survivor_ids)
    conflict_sets = es._conflict_sets
    gens = set()
    for premise, target in es.gens:
        if target in dead:
            continue
        # keep only premises that can coexist with the fired event
        if any(p in conflict_sets[event_id] for p in premise):
            continue
        if any(b in conflict_sets[a] for a, b in combinations(premise, 2)):
            continue
        gens.add((premise - {event_id}, target))
    return EventStructureGen(survivors, conflicts, frozenset(gens))


def remainder_after(es: EventStructureGen, sequence) -> EventStructureGen:
    for event_id in sequence:
        es = remainder(es, event_id)
    return es


# ---------------------------------------------------------------------------
# Canonical form and the event-labelled transition system
# ---------------------------------------------------------------------------

def canonical_key(es: EventStructureGen) -> str:
    events = sorted(es.events, key=lambda e: id_sort_key(e.id))
    parts = ["E:" + ",".join(f"{e.id}:{e.participant}:{e.label}" for e in events)]
    parts.append("#:" + ",".join(sorted("|".join(sorted(pair, key=id_sort_key)) for pair in es.conflicts)))
    gen_keys = sorted(
        ("{" + ",".join(sorted(premise, key=id_sort_key)) + "}>" + target)
        for premise, target in es.gens
    )
    parts.append("G:" + ",".join(gen_keys))
    return ";".join(parts)


def ets(es: EventStructureGen, step_bound: int = 10**5, relabel: bool = False) -> Lts:
    """The transition system whose states are remainders and whose edges fire
    initially enabled events.

    Edge labels are event ids, or the events' action labels when
    ``relabel`` is set.  States are deduplicated by canonical form;
    ``step_bound`` caps the number of states, setting the truncation flag.
    """
    if step_bound <= 0:
        raise ValueError("step bound must be positive")
    start_key = canonical_key(es)
    states: dict[str, EventStructureGen] = {start_key: es}
    edges: set[tuple[str, str, str]] = set()
    truncated = False
    queue = deque([start_key])
    while queue:
        key = queue.popleft()
        current = states[key]
        for event_id in sorted(playable(current, ()), key=id_sort_key):
            nxt = remainder(current, event_id)
            nkey = canonical_key(nxt)
            if nkey not in states:
                if len(states) >= step_bound:
                    truncated = True
                    continue
                states[nkey] = nxt
                queue.append(nkey)
            label = str(current.label_of(event_id)) if relabel else event_id
            edges.add((key, label, nkey))
    display = {
        key: "{" + ",".join(sorted((e.id for e in st.events), key=id_sort_key)) + "}"
        for key, st in states.items()
    }
    return Lts(frozenset(states), start_key, frozenset(edges), truncated, display)


def event_action_map(es: EventStructureGen) -> dict[str, str]:
    return {event.id: str(event.label) for event in es.events}


# ---------------------------------------------------------------------------
# Approximation order and least upper bounds
# ---------------------------------------------------------------------------

def es_leq(small: EventStructureGen, big: EventStructureGen) -> bool:
    """The approximation order used for recursion.

    Containment of events, conflicts and (saturated) enablings with label
    agreement, plus reflection: on the small structure's events, the big
    structure may not add conflicts or enablings.  The saturated relations
    are compared through generators, which is sound because conflicts agree
    on common events.
    """
    small_ids = small.event_ids
    for event in small.events:
        if event.id not in big.event_ids:
            return False
        other = big.event(event.id)
        if other.label != event.label or other.participant != event.participant:
            return False
    # conflicts must agree exactly on common events
    small_pairs = small.conflicts
    big_restricted = frozenset(pair for pair in big.conflicts if pair <= small_ids)
    if small_pairs != big_restricted:
        return False
    # Only conflict-free premises contribute to the saturated relation, so
    # inert generators are ignored on both sides.
    # containment: every saturated enabling of small holds in big
    for premise, target in small.gens:
        if not conflict_free(small, premise):
            continue
        if not any(bp <= premise for bp in big.premises_of(target)):
            return False
    # reflection: big enablings over small events must already hold in small
    for premise, target in big.gens:
        if target in small_ids and premise <= small_ids and conflict_free(big, premise):
            if not any(sp <= premise for sp in small.premises_of(target)):
                return False
    return True


def es_lub(chain) -> EventStructureGen:
    """Componentwise union of an increasing chain; rejects non-chains."""
    items = list(chain)
    if not items:
        raise ValueError("lub of an empty chain is undefined")
    for first, second in zip(items, items[1:]):
        if not es_leq(first, second):
            raise ValueError("input is not an increasing chain")
    events: set[Event] = set()
    conflicts: set[frozenset[str]] = set()
    gens: set[Generator] = set()
    for es in items:
        events |= es.events
        conflicts |= es.conflicts
        gens |= es.gens
    return EventStructureGen(frozenset(events), frozenset(conflicts), frozenset(gens))


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def es_to_json_dict(es: EventStructureGen) -> dict:
    events = sorted(es.events, key=lambda e: id_sort_key(e.id))
    return {
        "events": [
            {"id": e.id, "participant": e.participant, "label": str(e.label)} for e in events
        ],
        "conflicts": sorted(sorted(pair, key=id_sort_key) for pair in es.conflicts),
        "enablings": sorted(
            (
                {"premise": sorted(premise, key=id_sort_key), "target": target}
                for premise, target in es.gens
            ),
            key=lambda g: (id_sort_key(g["target"]), g["premise"]),
        ),
    }


def es_to_json(es: EventStructureGen, indent: int | None = 2) -> str:
    return json.dumps(es_to_json_dict(es), indent=indent, ensure_ascii=False, sort_keys=True)


def es_from_json_dict(data: dict) -> EventStructureGen:
    events = [
        Event(entry["id"], entry["participant"], ActionLabel.from_str(entry["label"]))
        for entry in data["events"]
    ]
    conflicts = [tuple(pair) for pair in data.get("conflicts", [])]
    gens = [(tuple(entry["premise"]), entry["target"]) for entry in data.get("enablings", [])]
    return make_es(events, conflicts, gens)


def es_from_json(text: str) -> EventStructureGen:
    return es_from_json_dict(json.loads(text))


def ets_to_dot(es: EventStructureGen, step_bound: int = 10**5, name: str = "ets") -> str:
    """DOT rendering of the event-labelled system; edges show ``e / action``."""
    system = ets(es, step_bound=step_bound, relabel=False)
    actions = event_action_map(es)
    pretty_edges = {eid: f"{eid} / {action}" for eid, action in actions.items()}
    return system.to_dot(name=name, edge_label=pretty_edges)
