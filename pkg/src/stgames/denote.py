"""Compiling session types to event structures.

Sequential compilation gives every action prefix and every success position
one event.  A prefix event is enabled by nothing and takes over the
enabling of the events its continuation could start with, so each branch
compiles to a causal chain; the branches of one choice conflict pairwise on
their first events.  Recursion is compiled as a finite approximant of the
fixpoint: the body is unfolded a bounded number of times, the variable
mapping to the next (deeper) copy and finally to the empty structure.

Event ids are deterministic.  Positions of the original term are numbered
in pre-order, odd for the left participant and even for the right.  Each
unfolding copy of a recursion body is identified by the chain of variable
occurrences that reached it, and its events carry one ``@k`` suffix per
hop (``k`` numbering the occurrence).  Distinct occurrences of a variable
therefore get disjoint copies, the outermost copy keeps bare ids, and
deepening the bound only adds events, so approximants form an increasing
chain.

Parallel composition combines one side's enabling with the other side's
acknowledgements: every output (or success) event needs, for each premise
event, a complementary event of the other side, and every input event
additionally needs the output it consumes.  Candidates must complement the
label and occur at the same per-label position along their own causal
chain, which pins each handshake to one acknowledgement per repetition
while still allowing alternatives across incompatible branches.  Premises
are not filtered for conflict-freeness; combinations drawing from mutually
exclusive branches are inert.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .estructure import EMPTY_ES, Event, EventStructureGen, id_sort_key, make_es
from .syntax import (
    TICK,
    ExternalChoice,
    InternalChoice,
    Rec,
    SessionType,
    Success,
    Term0,
    Var,
    pretty,
    validate,
)

DEFAULT_UNROLL_DEPTH = 6

PARITY_START = {"odd": 1, "even": 2}


class DenoteError(ValueError):
    pass


def _positions(term: SessionType) -> tuple[dict[tuple, int], dict[tuple, int]]:
    """Pre-order ordinals for event positions and for variable occurrences."""
    events: dict[tuple, int] = {}
    variables: dict[tuple, int] = {}
    counter = 0
    var_counter = 0

    def walk(t: SessionType, path: tuple) -> None:
        nonlocal counter, var_counter
        if isinstance(t, Success):
            events[path] = counter
            counter += 1
        elif isinstance(t, (InternalChoice, ExternalChoice)):
            for i, (_, cont) in enumerate(t.branches):
                events[path + (i,)] = counter
                counter += 1
                walk(cont, path + (i, "c"))
        elif isinstance(t, Rec):
            walk(t.body, path + ("r",))
        elif isinstance(t, Var):
            variables[path] = var_counter
            var_counter += 1
        # Term0 owns no events

    walk(term, ())
    return events, variables


def _prefix(event: Event, cont: EventStructureGen) -> EventStructureGen:
    """Prefix an event onto a compiled continuation.

    The new event is initially enabled and becomes the premise of the
    continuation's formerly initial events; deeper enablings keep their own
    premises, which matches the chain-shaped structures the composition
    rules and the worked examples are stated over.
    """
    if event.id in cont.event_ids:
        raise DenoteError(f"event id {event.id} already used")
    gens = {(frozenset(), event.id)}
    for premise, target in cont.gens:
        gens.add((premise if premise else frozenset({event.id}), target))
    return EventStructureGen(cont.events | {event}, cont.conflicts, frozenset(gens))


def _initials(es: EventStructureGen) -> frozenset[str]:
    return frozenset(target for premise, target in es.gens if not premise)


def _choice(branch_structures: list[EventStructureGen]) -> EventStructureGen:
    events: set[Event] = set()
    ids: set[str] = set()
    conflicts: set[frozenset[str]] = set()
    gens = set()
    for es in branch_structures:
        overlap = ids & set(es.event_ids)
        if overlap:
            raise DenoteError(f"branches share event ids {sorted(overlap)}")
        ids |= es.event_ids
        events |= es.events
        conflicts |= es.conflicts
        gens |= es.gens
    for i, first in enumerate(branch_structures):
        for second in branch_structures[i + 1:]:
            for a in _initials(first):
                for b in _initials(second):
                    conflicts.add(frozenset({a, b}))
    return EventStructureGen(frozenset(events), frozenset(conflicts), frozenset(gens))


@dataclass
class _Compiler:
    who: str
    positions: dict[tuple, int]
    var_positions: dict[tuple, int]
    start: int
    depth: int
    step: int = 2

    def event_id(self, path: tuple, copy: tuple[int, ...]) -> str:
        base = self.start + self.step * self.positions[path]
        return f"e{base}" + "".join(f"@{k}" for k in copy)

    def compile(self, term: SessionType, path: tuple, copy: tuple[int, ...],
                env: dict) -> EventStructureGen:
        if isinstance(term, Success):
            event = Event(self.event_id(path, copy), self.who, TICK)
            return make_es([event], (), [((), event.id)])
        if isinstance(term, Term0):
            return EMPTY_ES
        if isinstance(term, Var):
            try:
                binding = env[term.name]
            except KeyError:
                raise DenoteError(f"free variable {term.name}") from None
            if isinstance(binding, EventStructureGen):
                return binding
            return binding.instantiate(self.var_positions[path], copy)
        if isinstance(term, (InternalChoice, ExternalChoice)):
            branches = []
            for i, (label, cont) in enumerate(term.branches):
                cont_es = self.compile(cont, path + (i, "c"), copy, env)
                event = Event(self.event_id(path + (i,), copy), self.who, label)
                branches.append(_prefix(event, cont_es))
            return _choice(branches)
        if isinstance(term, Rec):
            return self.fix(term.var, term.body, path + ("r",), copy, env)
        raise DenoteError(f"cannot compile {term!r}")

    def fix(self, var: str, body: SessionType, body_path: tuple, copy: tuple[int, ...],
            env: dict) -> EventStructureGen:
        if self.depth <= 0:
            return EMPTY_ES
        inner = dict(env)
        inner[var] = _RecBinding(self, var, body, body_path, dict(env), self.depth - 1)
        return self.compile(body, body_path, copy, inner)


@dataclass
class _RecBinding:
    """A recursion variable bound to the next approximant.

    Each use site instantiates its own copy of the body, one level deeper
    and tagged with the occurrence that reached it, so copies reached along
    different occurrence chains never share events.
    """

    compiler: _Compiler
    var: str
    body: SessionType
    body_path: tuple
    env: dict
    remaining: int

    def instantiate(self, occurrence: int, copy: tuple[int, ...]) -> EventStructureGen:
        if self.remaining <= 0:
            return EMPTY_ES
        inner = dict(self.env)
        inner[self.var] = _RecBinding(
            self.compiler, self.var, self.body, self.body_path, self.env, self.remaining - 1
        )
        return self.compiler.compile(self.body, self.body_path, copy + (occurrence,), inner)


def _check_env(env: dict[str, EventStructureGen] | None, who: str) -> dict[str, EventStructureGen]:
    env = dict(env or {})
    for name, es in env.items():
        foreign = es.participants() - {who}
        if foreign:
            raise DenoteError(
                f"environment for {name} owns events of {sorted(foreign)}, expected only {who}"
            )
    return env


def denote(term: SessionType, who: str, env: dict[str, EventStructureGen] | None = None,
           unroll_depth: int = DEFAULT_UNROLL_DEPTH, parity: str = "odd") -> EventStructureGen:
    """Compile one participant's session type to its event structure.

    ``parity`` picks the id stream: ``odd`` (e1, e3, ...) for the first
    participant and ``even`` (e2, e4, ...) for the second.  ``unroll_depth``
    bounds every recursion; the result at a deeper bound extends the result
    at a shallower one.
    """
    if unroll_depth < 0:
        raise DenoteError("unroll depth must be non-negative")
    env = _check_env(env, who)
    problems = [v for v in validate(term, bound=frozenset(env)) if v.rule != "runtime-only-term"]
    if problems:
        raise DenoteError(f"cannot compile invalid type {pretty(term)}: "
                          + "; ".join(str(v) for v in problems))
    positions, var_positions = _positions(term)
    compiler = _Compiler(who, positions, var_positions, PARITY_START[parity], unroll_depth)
    return compiler.compile(term, (), (), env)


def fix_approx(var: str, body: SessionType, who: str,
               env: dict[str, EventStructureGen] | None = None,
               depth: int = DEFAULT_UNROLL_DEPTH, parity: str = "odd") -> EventStructureGen:
    """The ``depth``-th approximant of the recursion operator for ``rec var . body``.

    Depth 0 is the empty structure; depth n+1 compiles the body with the
    variable bound to the depth-n approximant, placed one unrolling deeper.
    """
    if depth < 0:
        raise DenoteError("depth must be non-negative")
    env = _check_env(env, who)
    term = Rec(var, body)
    problems = [v for v in validate(term, bound=frozenset(env)) if v.rule != "runtime-only-term"]
    if problems:
        raise DenoteError(f"cannot compile invalid type {pretty(term)}: "
                          + "; ".join(str(v) for v in problems))
    positions, var_positions = _positions(term)
    compiler = _Compiler(who, positions, var_positions, PARITY_START[parity], depth)
    return compiler.fix(var, body, ("r",), (), env)


# ---------------------------------------------------------------------------
# Parallel composition
# ---------------------------------------------------------------------------

def occurrence_index(es: EventStructureGen) -> dict[str, int]:
    """Position of each event among same-labelled events on its causal chain.

    Ancestors are the transitive closure of generator premises.  Sequential
    denotations are forests, so this is the occurrence count along the
    unique path from the root; the index aligns the k-th repetition of an
    action with the k-th complementary event on the other side.
    """
    ancestors: dict[str, frozenset[str]] = {}

    def walk(eid: str, visiting: set[str]) -> frozenset[str]:
        if eid in ancestors:
            return ancestors[eid]
        if eid in visiting:
            return frozenset()
        visiting.add(eid)
        out: set[str] = set()
        for premise in es.premises_of(eid):
            for parent in premise:
                out.add(parent)
                out |= walk(parent, visiting)
        visiting.discard(eid)
        result = frozenset(out)
        ancestors[eid] = result
        return result

    occ: dict[str, int] = {}
    for event in es.events:
        chain = walk(event.id, set())
        occ[event.id] = 1 + sum(1 for p in chain if es.label_of(p) == event.label)
    return occ


def denote_par(left: EventStructureGen, right: EventStructureGen) -> EventStructureGen:
    """Compose the event structures of two interacting participants.

    Events, conflicts and labels are unions.  For a component enabling
    ``(X, e)``: when ``e`` is an output or success, one composite enabling
    ``(X ∪ Y, e)`` is emitted per choice of acknowledgement function
    mapping each member of ``X`` to a complementary same-occurrence event
    of the other side; when ``e`` is an input, a synchronising output
    (complementary label, same occurrence) is additionally added to the
    premise, one enabling per choice.  A premise event labelled ``✓`` has
    no complement and kills the enabling.  Duplicates collapse; premises
    are kept even when not conflict-free (such enablings never fire).
    """
    overlap = left.event_ids & right.event_ids
    if overlap:
        raise ValueError(f"component event sets overlap: {sorted(overlap)}")
    occ = {}
    occ.update(occurrence_index(left))
    occ.update(occurrence_index(right))

    def buckets(es: EventStructureGen) -> dict:
        table: dict[tuple, list[str]] = {}
        for event in sorted(es.events, key=lambda e: id_sort_key(e.id)):
            table.setdefault((event.label, occ[event.id]), []).append(event.id)
        return table

    complements = {id(left): buckets(right), id(right): buckets(left)}
    gens: set[tuple[frozenset[str], str]] = set()
    for side in (left, right):
        matching = complements[id(side)]
        for premise, target in side.gens:
            target_label = side.label_of(target)
            candidate_lists: list[list[str]] = []
            dead = False
            for pid in sorted(premise, key=id_sort_key):
                plabel = side.label_of(pid)
                if plabel.is_tick:
                    dead = True
                    break
                matchers = matching.get((plabel.co(), occ[pid]), [])
                if not matchers:
                    dead = True
                    break
                candidate_lists.append(matchers)
            if dead:
                continue
            if target_label.is_output:
                for assignment in product(*candidate_lists):
                    gens.add((premise | frozenset(assignment), target))
            else:
                synchronisers = matching.get((target_label.co(), occ[target]), [])
                for sync in synchronisers:
                    for assignment in product(*candidate_lists):
                        gens.add((premise | frozenset(assignment) | {sync}, target))
    return EventStructureGen(
        left.events | right.events,
        left.conflicts | right.conflicts,
        frozenset(gens),
    )
