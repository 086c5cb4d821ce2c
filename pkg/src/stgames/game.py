"""Contracts over event structures and the multi-player obligation game.

A contract pairs an event structure with a payoff assignment; the only
built-in payoff is success: a finite play pays a participant when it
contains one of their ``✓`` events (infinite plays always pay, but finite
structures only admit finite plays).  Plays are sequences of distinct
events, each one playable after its predecessors.  A strategy maps each
play to a set of the owner's playable events; the eager strategy prescribes
all of them.

A finite play is fair for a strategy exactly when the final prescription is
empty, so the game engine treats every empty-prescription point as a
possible stop, including stops where other participants still have enabled
events; whoever still has a playable event at a stop is culpable there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .denote import DEFAULT_UNROLL_DEPTH, denote, denote_par
from .estructure import (
    EventStructureGen,
    canonical_key,
    id_sort_key,
    playable,
    remainder,
)
from .syntax import SessionType, assert_valid, is_recursive

SUCCESS_PAYOFF = "success"


@dataclass(frozen=True)
class Contract:
    """An event structure plus a payoff kind per participant.

    Every participant who could ever be obliged (owns the target of some
    enabling) must have a payoff.  ``bounded_depth`` records that the
    structure is a recursion approximant, so verdicts derived from it are
    only exact up to that unrolling bound.
    """

    es: EventStructureGen
    payoffs: dict[str, str] = field(default_factory=dict)
    bounded_depth: int | None = None

    def __post_init__(self) -> None:
        for kind in self.payoffs.values():
            if kind != SUCCESS_PAYOFF:
                raise ValueError(f"unknown payoff kind {kind!r}")
        obliged = {self.es.participant_of(target) for _, target in self.es.gens}
        missing = obliged - self.payoffs.keys()
        if missing:
            raise ValueError(f"participants with obligations but no payoff: {sorted(missing)}")

    def participants(self) -> frozenset[str]:
        return self.es.participants() | frozenset(self.payoffs)


def composable(first: Contract, second: Contract) -> bool:
    """Contracts compose only when no participant gets paid by both."""
    return not (first.payoffs.keys() & second.payoffs.keys())


def compose_contracts_union(first: Contract, second: Contract) -> Contract:
    """Plain componentwise union of two composable contracts.

    This is the literal composition on contracts; it introduces no
    synchronisation between the two event structures and is exposed for
    diagnosis.  Session types are composed with
    :func:`compose_session_contracts` instead, which builds the interaction
    enablings.
    """
    if not composable(first, second):
        raise ValueError("contracts assign payoffs to a common participant")
    overlap = first.es.event_ids & second.es.event_ids
    if overlap:
        raise ValueError(f"contracts share events {sorted(overlap)}")
    es = EventStructureGen(
        first.es.events | second.es.events,
        first.es.conflicts | second.es.conflicts,
        first.es.gens | second.es.gens,
    )
    payoffs = dict(first.payoffs)
    payoffs.update(second.payoffs)
    bounded = _merge_bounds(first.bounded_depth, second.bounded_depth)
    return Contract(es, payoffs, bounded)


def _merge_bounds(a: int | None, b: int | None) -> int | None:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def compose_session_contracts(p: SessionType, a: str, q: SessionType, b: str,
                              unroll_depth: int | None = None) -> Contract:
    """The game arena for a client type ``p`` of ``a`` against server ``q`` of ``b``.

    The event structure is the parallel composition of the two denotations;
    each participant gets the success payoff.  The result carries an
    unrolling bound when either type is recursive.
    """
    if a == b:
        raise ValueError("the two endpoints must belong to distinct participants")
    assert_valid(p, "client type")
    assert_valid(q, "server type")
    depth = DEFAULT_UNROLL_DEPTH if unroll_depth is None else unroll_depth
    es = denote_par(
        denote(p, a, unroll_depth=depth, parity="odd"),
        denote(q, b, unroll_depth=depth, parity="even"),
    )
    bounded = depth if (is_recursive(p) or is_recursive(q)) else None
    return Contract(es, {a: SUCCESS_PAYOFF, b: SUCCESS_PAYOFF}, bounded)


# ---------------------------------------------------------------------------
# Plays
# ---------------------------------------------------------------------------

def is_play(es: EventStructureGen, sequence) -> bool:
    """True when each event is playable after its predecessors."""
    history: set[str] = set()
    for event_id in sequence:
        if event_id not in es.event_ids:
            return False
        if event_id not in playable(es, history):
            return False
        history.add(event_id)
    return True


def assert_play(es: EventStructureGen, sequence) -> tuple[str, ...]:
    seq = tuple(sequence)
    if not is_play(es, seq):
        raise ValueError(f"not a play: {seq}")
    return seq


def plays(es: EventStructureGen, max_count: int | None = None):
    """Enumerate plays depth-first in sorted event order (the empty play first)."""
    count = 0

    def walk(history: tuple[str, ...]):
        nonlocal count
        yield history
        count += 1
        if max_count is not None and count >= max_count:
            return
        for event_id in sorted(playable(es, history), key=id_sort_key):
            yield from walk(history + (event_id,))

    yield from walk(())


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EagerStrategy:
    """Prescribe every playable own event."""

    participant: str


@dataclass(frozen=True)
class ExplicitStrategy:
    """A finite table from play prefixes to prescribed events; empty elsewhere."""

    participant: str
    table: dict[tuple[str, ...], frozenset[str]] = field(default_factory=dict)

    def to_json(self) -> list[dict]:
        return [
            {"prefix": list(prefix), "prescribe": sorted(events, key=id_sort_key)}
            for prefix, events in sorted(self.table.items())
        ]


Strategy = EagerStrategy | ExplicitStrategy


def prescribed(strategy: Strategy, contract: Contract, play) -> frozenset[str]:
    """The events the strategy tells its owner to offer after ``play``."""
    seq = assert_play(contract.es, play)
    if isinstance(strategy, EagerStrategy):
        own = contract.es.events_of(strategy.participant)
        return frozenset(playable(contract.es, seq)) & own
    prescription = strategy.table.get(seq, frozenset())
    legal = playable(contract.es, seq) & contract.es.events_of(strategy.participant)
    illegal = prescription - legal
    if illegal:
        raise ValueError(f"strategy prescribes unplayable events {sorted(illegal)} after {seq}")
    return prescription


def conforms(play, strategy: Strategy, contract: Contract) -> bool:
    """Every event of the strategy's owner was prescribed at its prefix."""
    seq = assert_play(contract.es, play)
    own = contract.es.events_of(strategy.participant)
    for i, event_id in enumerate(seq):
        if event_id in own and event_id not in prescribed(strategy, contract, seq[:i]):
            return False
    return True


def is_fair(play, strategy: Strategy, contract: Contract) -> bool:
    """Direct evaluation of fairness on a finite play.

    An event prescribed at every point from some position to the end must
    occur at or after that position.  On finite plays this is equivalent to
    the final prescription being empty.
    """
    seq = assert_play(contract.es, play)
    prescriptions = [prescribed(strategy, contract, seq[:i]) for i in range(len(seq) + 1)]
    for i in range(len(seq) + 1):
        persistent = frozenset.intersection(*prescriptions[i:])
        for event_id in persistent:
            if event_id not in seq[i:]:
                return False
    return True


# ---------------------------------------------------------------------------
# Innocence, winning
# ---------------------------------------------------------------------------

def _pending(es: EventStructureGen, history: frozenset[str], event_id: str) -> bool:
    # an unmet obligation: some premise satisfied, event neither fired nor
    # discharged by a conflicting occurrence
    if event_id in history:
        return False
    if any(other in history for other in es.conflicts_of(event_id)):
        return False
    return any(premise <= history for premise in es.premises_of(event_id))


def innocent(play, participant: str, es: EventStructureGen) -> bool:
    """No obligation of the participant arises and stays undischarged.

    Evaluated prefix by prefix: an own event whose premise is met, which
    has not already fired or been conflicted, must occur or be conflicted
    later in the play.
    """
    seq = assert_play(es, play)
    own = sorted(es.events_of(participant), key=id_sort_key)
    for i in range(len(seq) + 1):
        history = frozenset(seq[:i])
        for event_id in own:
            if not _pending(es, history, event_id):
                continue
            rest = seq[i:]
            discharged = any(
                later == event_id or es.in_conflict(later, event_id) for later in rest
            )
            if not discharged:
                return False
    return True


def culpable_at_end(play, participant: str, es: EventStructureGen) -> bool:
    """Final-state characterisation: culpable iff some own event is playable
    at the end of the play.  Agrees with :func:`innocent` on saturated
    structures because satisfied premises stay satisfied as history grows."""
    history = frozenset(play)
    own = es.events_of(participant)
    return bool(playable(es, history) & own)


def payoff_holds(contract: Contract, participant: str, play) -> bool:
    if participant not in contract.payoffs:
        raise ValueError(f"no payoff defined for {participant}")
    history = set(play)
    return any(
        event.id in history and event.label.is_tick
        for event in contract.es.events
        if event.participant == participant
    )


def winning_play(play, participant: str, contract: Contract) -> bool:
    """Win with a payoff when everyone is innocent, or by being innocent
    while someone else is culpable."""
    seq = assert_play(contract.es, play)
    if participant not in contract.payoffs:
        raise ValueError(f"no payoff defined for {participant}")
    everyone = sorted(contract.participants())
    guilty = [p for p in everyone if not innocent(seq, p, contract.es)]
    if not guilty:
        return payoff_holds(contract, participant, seq)
    return participant not in guilty


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GameVerdict:
    participant: str
    strategy: str  # "eager" | "synthesized"
    winning: bool
    counterexample: tuple[str, ...] | None = None
    bounded_depth: int | None = None

    def to_json(self) -> dict:
        return {
            "participant": self.participant,
            "strategy": self.strategy,
            "winning": self.winning,
            "counterexample": list(self.counterexample) if self.counterexample else None,
            "bounded_depth": self.bounded_depth,
        }


@dataclass(frozen=True)
class _Arena:
    """Play-state view of a contract used by the game search."""

    contract: Contract
    participant: str

    def own_moves(self, es: EventStructureGen) -> list[str]:
        own = self.contract.es.events_of(self.participant)
        return sorted(playable(es, ()) & own, key=id_sort_key)

    def other_moves(self, es: EventStructureGen) -> list[str]:
        own = self.contract.es.events_of(self.participant)
        return sorted(playable(es, ()) - own, key=id_sort_key)

    def stop_wins(self, es: EventStructureGen, succeeded: bool) -> bool:
        """Win check at an empty-prescription stop, from the remainder alone.

        A participant is culpable at the stop exactly when they still have
        a playable event; when nobody does, the stop is maximal and the
        owner needs the payoff."""
        moves = playable(es, ())
        if any(self.contract.es.participant_of(e) == self.participant for e in moves):
            return False
        if moves:
            return True
        return succeeded


def _initial_state(contract: Contract) -> EventStructureGen:
    return contract.es


def eager_winning(contract: Contract, participant: str) -> GameVerdict:
    """Does playing every enabled own event win every fair play?

    Explores all plays (every play conforms to the eager strategy); at each
    point where the owner has nothing playable, the play may fairly stop
    and must then be winning.  Returns the first losing stopping point as a
    counterexample, found depth-first in sorted event order.
    """
    if participant not in contract.payoffs:
        raise ValueError(f"no payoff defined for {participant}")
    arena = _Arena(contract, participant)
    ticks = frozenset(
        e.id for e in contract.es.events if e.participant == participant and e.label.is_tick
    )
    safe: set[tuple[str, bool]] = set()

    def search(es: EventStructureGen, succeeded: bool, trail: tuple[str, ...]):
        key = (canonical_key(es), succeeded)
        if key in safe:
            return None
        own = arena.own_moves(es)
        if not own and not arena.stop_wins(es, succeeded):
            return trail
        for move in own + arena.other_moves(es):
            failure = search(
                remainder(es, move), succeeded or move in ticks, trail + (move,)
            )
            if failure is not None:
                return failure
        safe.add(key)
        return None

    failure = search(_initial_state(contract), False, ())
    return GameVerdict(
        participant, "eager",
        winning=failure is None,
        counterexample=failure,
        bounded_depth=contract.bounded_depth,
    )


def strategy_failures(contract: Contract, strategy: Strategy, max_failures: int = 1):
    """Fair conforming plays the strategy's owner loses.

    Walks the conforming play tree literally (prescriptions may depend on
    the whole prefix), stopping wherever the prescription is empty.
    """
    participant = strategy.participant
    failures: list[tuple[str, ...]] = []

    def walk(prefix: tuple[str, ...]) -> None:
        if len(failures) >= max_failures:
            return
        prescription = prescribed(strategy, contract, prefix)
        others = sorted(
            frozenset(playable(contract.es, prefix))
            - contract.es.events_of(participant),
            key=id_sort_key,
        )
        if not prescription and not winning_play(prefix, participant, contract):
            failures.append(prefix)
            return
        for move in sorted(prescription, key=id_sort_key) + others:
            walk(prefix + (move,))

    walk(())
    return failures


def find_winning_strategy(contract: Contract, participant: str) -> ExplicitStrategy | None:
    """Search all strategies for a winning one.

    At each state the owner either stops (legal only if the stop wins) or
    prescribes one playable event; every opposing move must stay winning
    regardless.  A single prescribed event per state suffices: prescribing
    more only adds proof obligations.  Memoisation is on the remainder
    structure plus whether the owner has already succeeded, which is all
    the win predicates depend on.
    """
    if participant not in contract.payoffs:
        raise ValueError(f"no payoff defined for {participant}")
    arena = _Arena(contract, participant)
    ticks = frozenset(
        e.id for e in contract.es.events if e.participant == participant and e.label.is_tick
    )
    memo: dict[tuple[str, bool], str | None | bool] = {}

    def win(es: EventStructureGen, succeeded: bool):
        """Returns False, or the winning move for the owner ('' = stop)."""
        key = (canonical_key(es), succeeded)
        if key in memo:
            return memo[key]
        memo[key] = False  # cycle-safe default; plays are finite so unused
        result: str | bool = False
        if all(
            win(remainder(es, move), succeeded) is not False
            for move in arena.other_moves(es)
        ):
            if arena.stop_wins(es, succeeded):
                result = ""
            else:
                for move in arena.own_moves(es):
                    if win(remainder(es, move), succeeded or move in ticks) is not False:
                        result = move
                        break
        memo[key] = result
        return result

    if win(_initial_state(contract), False) is False:
        return None

    # replay the winning policy over every conforming play to print a table
    table: dict[tuple[str, ...], frozenset[str]] = {}

    def replay(es: EventStructureGen, succeeded: bool, prefix: tuple[str, ...]) -> None:
        choice = win(es, succeeded)
        prescription = frozenset() if choice in ("", False) else frozenset({choice})
        table[prefix] = prescription
        moves = sorted(prescription, key=id_sort_key) + arena.other_moves(es)
        for move in moves:
            replay(remainder(es, move), succeeded or move in ticks, prefix + (move,))

    replay(_initial_state(contract), False, ())
    return ExplicitStrategy(participant, table)
