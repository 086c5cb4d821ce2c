"""Shared fixtures and independent oracles.

The oracles here recompute the library's answers from first principles:
the enabling relation is materialised as an explicit set, the remainder
and ordering are evaluated on those sets, and the game search is replayed
over raw play trees without memoisation.  Tests freeze expected values
computed by these oracles; the oracles never call the code paths they
check.
"""

from __future__ import annotations

import random
from itertools import chain, combinations

import pytest

from stgames.estructure import Event, EventStructureGen, make_es
from stgames.syntax import TICK, inp, out, parse

# ---------------------------------------------------------------------------
# Worked-example fixtures
# ---------------------------------------------------------------------------

EXAMPLE_CLIENT = "!a (+) !b.!a"
EXAMPLE_SERVER = "?a.?b + ?b.?a + ?c"
PAYCASH_P = "!payCash (+) !payCC"
PAYCASH_Q = "?payCash"
COUNTER_P = "!a.!c (+) !b"
COUNTER_Q = "?a + ?b"


@pytest.fixture(scope="session")
def example_types():
    return parse(EXAMPLE_CLIENT), parse(EXAMPLE_SERVER)


# ---------------------------------------------------------------------------
# Saturation oracle
# ---------------------------------------------------------------------------

def powerset(items):
    items = list(items)
    return chain.from_iterable(combinations(items, r) for r in range(len(items) + 1))


def conflict_free_raw(conflicts: frozenset[frozenset[str]], ids) -> bool:
    ids = list(ids)
    return not any(frozenset((a, b)) in conflicts for a, b in combinations(ids, 2))


def saturate(es: EventStructureGen) -> frozenset[tuple[frozenset[str], str]]:
    """Materialise the saturated enabling relation as an explicit set.

    Contains (X, e) for every conflict-free X ⊆ events such that some
    generator premise for e is inside X.  Exponential; small inputs only.
    """
    ids = sorted(e.id for e in es.events)
    out_set = set()
    for subset in powerset(ids):
        x = frozenset(subset)
        if not conflict_free_raw(es.conflicts, x):
            continue
        for premise, target in es.gens:
            if premise <= x:
                out_set.add((x, target))
    return frozenset(out_set)


def remainder_on_saturated(es: EventStructureGen, event_id: str):
    """The remainder construction applied literally to the materialised
    relation; returns (ids, conflicts, saturated enablings, labels)."""
    sat = saturate(es)
    dead = {event_id} | {other for other in es.event_ids if es.in_conflict(other, event_id)}
    ids = frozenset(es.event_ids) - dead
    conflicts = frozenset(pair for pair in es.conflicts if pair <= ids)
    kept = set()
    for x, target in sat:
        if target == event_id or es.in_conflict(target, event_id):
            continue
        if not conflict_free_raw(es.conflicts, x | {event_id}):
            continue
        kept.add((x - {event_id}, target))
    labels = {eid: es.label_of(eid) for eid in ids}
    return ids, conflicts, frozenset(kept), labels


def es_leq_oracle(small: EventStructureGen, big: EventStructureGen) -> bool:
    """The ordering evaluated literally on materialised relations."""
    small_ids = frozenset(small.event_ids)
    if not small_ids <= frozenset(big.event_ids):
        return False
    for eid in small_ids:
        a, b = small.event(eid), big.event(eid)
        if a.label != b.label or a.participant != b.participant:
            return False
    if not small.conflicts <= big.conflicts:
        return False
    for pair in big.conflicts:
        if pair <= small_ids and pair not in small.conflicts:
            return False
    sat_small, sat_big = saturate(small), saturate(big)
    if not sat_small <= sat_big:
        return False
    for x, target in sat_big:
        if target in small_ids and x <= small_ids and (x, target) not in sat_small:
            return False
    return True


# ---------------------------------------------------------------------------
# Small event-structure families
# ---------------------------------------------------------------------------

_LABEL_POOL = (out("a"), inp("a"), out("b"), inp("b"), TICK)


def exhaustive_tiny_structures():
    """Every event structure over two fixed events (all conflict and
    generator choices); the one-event and empty cases come for free."""
    events = (Event("e1", "A", out("a")), Event("e2", "B", inp("a")))
    ids = tuple(e.id for e in events)
    all_premises = [frozenset(s) for s in powerset(ids)]
    possible_gens = [(premise, target) for premise in all_premises for target in ids]
    structures = [make_es(())]
    for conflict in ((), (("e1", "e2"),)):
        for gen_subset in powerset(possible_gens):
            structures.append(make_es(events, conflict, gen_subset))
    return structures


def random_structure(rng: random.Random, max_events: int = 6) -> EventStructureGen:
    count = rng.randint(1, max_events)
    events = []
    for i in range(count):
        participant = "A" if i % 2 == 0 else "B"
        events.append(Event(f"e{i + 1}", participant, rng.choice(_LABEL_POOL)))
    ids = [e.id for e in events]
    conflicts = set()
    for a, b in combinations(ids, 2):
        if rng.random() < 0.25:
            conflicts.add((a, b))
    gens = set()
    for target in ids:
        for _ in range(rng.randint(0, 2)):
            size = rng.randint(0, min(3, count - 1))
            premise = frozenset(rng.sample([i for i in ids if i != target], size))
            gens.add((premise, target))
    return make_es(events, conflicts, gens)


@pytest.fixture(scope="session")
def small_structures():
    """The exhaustive two-event family plus a seeded sample up to six events."""
    rng = random.Random(20240)
    sampled = [random_structure(rng) for _ in range(300)]
    return exhaustive_tiny_structures() + sampled


# ---------------------------------------------------------------------------
# Game oracles
# ---------------------------------------------------------------------------

def all_plays(es: EventStructureGen, prefix=()):
    """Every play of a finite structure, by raw playability."""
    from stgames.estructure import playable

    yield tuple(prefix)
    for event_id in sorted(playable(es, prefix)):
        yield from all_plays(es, tuple(prefix) + (event_id,))


def brute_force_agreement(contract, participant) -> bool:
    """Winning-strategy existence decided on the literal play tree.

    No memoisation and no remainder states: at each play prefix the owner
    either stops (the stop must then be a winning play) or commits to one
    playable own event, and every opposing extension must stay winnable.
    """
    from stgames.estructure import playable
    from stgames.game import winning_play

    es = contract.es
    own_ids = es.events_of(participant)

    def win(prefix: tuple[str, ...]) -> bool:
        moves = playable(es, prefix)
        opponent_moves = sorted(moves - own_ids)
        if not all(win(prefix + (move,)) for move in opponent_moves):
            return False
        if winning_play(prefix, participant, contract):
            return True
        return any(win(prefix + (move,)) for move in sorted(moves & own_ids))

    return win(())
