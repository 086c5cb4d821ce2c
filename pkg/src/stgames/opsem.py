"""Two operational semantics for composed session types, and compliance.

The reduction semantics lets each side commit internal choices and unfold
recursion on its own, and synchronises a committed output with a matching
input; all composite steps are internal.  The turn-based semantics makes
every step visible as an action: an internal choice fires an output into a
one-position buffer, an external choice consumes a matching buffered
output, and a side at ``1`` fires ``✓`` once, terminating at ``0``.
Recursion unfolds tacitly inside turn-based rule application.

Compliance asks that every reachable stuck configuration leaves the client
(left) side at ``1`` (reduction semantics) or at ``0`` (turn-based).
Cycles never make a pair non-compliant: only stuck states are constrained,
so livelocks count as compliant and the verdict says so.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .lts import Lts
from .syntax import (
    TICK,
    Buffer,
    ExternalChoice,
    InternalChoice,
    Rec,
    SessionType,
    Success,
    Term0,
    assert_valid,
    pretty,
    unfold,
    unfold_top,
)

DEFAULT_STATE_LIMIT = 10**5


@dataclass(frozen=True)
class Configuration:
    """A composition ``left ∥ right``; the left side plays the client."""

    left: SessionType
    right: SessionType

    def key(self) -> str:
        return f"{pretty(self.left)} || {pretty(self.right)}"


# ---------------------------------------------------------------------------
# Reduction (commit/sync) semantics
# ---------------------------------------------------------------------------

def _component_steps(term: SessionType):
    """Internal and labelled moves of one side.

    Committing is only a move for choices with at least two branches; a
    one-branch internal choice is already committed and can only fire its
    output.  Buffers do not exist in this semantics; the dead process 0
    (which depth-truncated recursive types contain) is simply stuck.
    """
    if isinstance(term, Buffer):
        raise ValueError("buffers do not occur under the reduction semantics")
    internal: list[tuple[str, SessionType]] = []
    labelled: list[tuple[object, SessionType]] = []
    if isinstance(term, InternalChoice):
        if len(term.branches) >= 2:
            for label, cont in term.branches:
                internal.append((f"commit {label}", InternalChoice(((label, cont),))))
        else:
            label, cont = term.branches[0]
            labelled.append((label, cont))
    elif isinstance(term, ExternalChoice):
        for label, cont in term.branches:
            labelled.append((label, cont))
    elif isinstance(term, Rec):
        internal.append(("unfold", unfold(term)))
    return internal, labelled


def step_reduce(config: Configuration) -> set[tuple[str, Configuration]]:
    """Successor configurations, each tagged with a description of the step.

    All steps are internal; the tag names the rule that fired so that
    witness paths read well.  An empty result means the configuration is
    stuck.
    """
    left_internal, left_labelled = _component_steps(config.left)
    right_internal, right_labelled = _component_steps(config.right)
    steps: set[tuple[str, Configuration]] = set()
    for tag, successor in left_internal:
        steps.add((f"{tag} (left)", Configuration(successor, config.right)))
    for tag, successor in right_internal:
        steps.add((f"{tag} (right)", Configuration(config.left, successor)))
    for llabel, lcont in left_labelled:
        for rlabel, rcont in right_labelled:
            if not llabel.is_tick and not rlabel.is_tick and llabel.co() == rlabel:
                steps.add((f"sync {llabel.name}", Configuration(lcont, rcont)))
    return steps


# ---------------------------------------------------------------------------
# Turn-based semantics
# ---------------------------------------------------------------------------

def _turn_side_steps(own: SessionType, other: SessionType):
    """Moves of one side against the other side's current term.

    Returns (label, own', other') triples; recursion on either side is
    unfolded on the fly and never shows up as a step.
    """
    own = unfold_top(own)
    moves = []
    if isinstance(own, InternalChoice):
        for label, cont in own.branches:
            moves.append((label, Buffer(label, cont), other))
    elif isinstance(own, ExternalChoice):
        peer = unfold_top(other)
        if isinstance(peer, Buffer):
            for label, cont in own.branches:
                if label == peer.action.co():
                    moves.append((label, cont, peer.cont))
    elif isinstance(own, Success):
        moves.append((TICK, Term0(), other))
    return moves


def step_turn(config: Configuration) -> set[tuple[object, Configuration]]:
    """Successors under the turn-based rules, labelled with the fired action."""
    steps: set[tuple[object, Configuration]] = set()
    for label, left, right in _turn_side_steps(config.left, config.right):
        steps.add((label, Configuration(left, right)))
    for label, right, left in _turn_side_steps(config.right, config.left):
        steps.add((label, Configuration(left, right)))
    return steps


def step_turn_sided(config: Configuration) -> set[tuple[object, str, Configuration]]:
    """Like :func:`step_turn` but tagging which side fired; used by tests."""
    steps: set[tuple[object, str, Configuration]] = set()
    for label, left, right in _turn_side_steps(config.left, config.right):
        steps.add((label, "left", Configuration(left, right)))
    for label, right, left in _turn_side_steps(config.right, config.left):
        steps.add((label, "right", Configuration(left, right)))
    return steps


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

def _step_labelled(config: Configuration, semantics: str):
    if semantics == "reduction":
        return sorted(((tag, cfg) for tag, cfg in step_reduce(config)), key=lambda s: (s[0], s[1].key()))
    if semantics == "turn":
        return sorted(((str(lab), cfg) for lab, cfg in step_turn(config)), key=lambda s: (s[0], s[1].key()))
    raise ValueError(f"unknown semantics {semantics!r}")


@dataclass(frozen=True)
class _Exploration:
    lts: Lts
    stuck: frozenset[str]
    parents: dict[str, tuple[str, str]]  # state -> (parent state, edge label)
    configs: dict[str, Configuration]


def _explore(config: Configuration, semantics: str, state_limit: int) -> _Exploration:
    if state_limit <= 0:
        raise ValueError("state limit must be positive")
    start = config.key()
    seen: dict[str, Configuration] = {start: config}
    parents: dict[str, tuple[str, str]] = {}
    edges: set[tuple[str, str, str]] = set()
    stuck: set[str] = set()
    truncated = False
    queue: deque[str] = deque([start])
    while queue:
        key = queue.popleft()
        successors = _step_labelled(seen[key], semantics)
        if not successors:
            stuck.add(key)
        for label, nxt in successors:
            nkey = nxt.key()
            if nkey not in seen:
                if len(seen) >= state_limit:
                    truncated = True
                    continue
                seen[nkey] = nxt
                parents[nkey] = (key, label)
                queue.append(nkey)
            edges.add((key, label, nkey))
    lts = Lts(frozenset(seen), start, frozenset(edges), truncated, {k: k for k in seen})
    return _Exploration(lts, frozenset(stuck), parents, seen)


def explore(config: Configuration, state_limit: int = DEFAULT_STATE_LIMIT,
            semantics: str = "reduction") -> Lts:
    """Breadth-first closure of the chosen step relation from ``config``.

    States are deduplicated by their canonical printed form; hitting the
    state limit sets the truncation flag rather than failing.
    """
    return _explore(config, semantics, state_limit).lts


# ---------------------------------------------------------------------------
# Compliance
# ---------------------------------------------------------------------------

LIVELOCK_NOTE = "cycles count as compliant: only stuck states are constrained"


@dataclass(frozen=True)
class ComplianceVerdict:
    status: str  # "compliant" | "non-compliant" | "indeterminate"
    semantics: str  # "reduction" | "turn"
    witness: tuple[str, ...] | None = None
    truncated: bool = False
    note: str | None = None

    @property
    def is_compliant(self) -> bool:
        return self.status == "compliant"

    def to_json(self) -> dict:
        return {
            "verdict": self.status,
            "semantics": self.semantics,
            "witness": list(self.witness) if self.witness is not None else None,
            "truncated": self.truncated,
            "note": self.note,
        }


def _witness_path(parents: dict[str, tuple[str, str]], start: str, target: str) -> tuple[str, ...]:
    path: list[str] = []
    node = target
    while node != start:
        parent, label = parents[node]
        path.append(label)
        node = parent
    return tuple(reversed(path))


def _left_term_ok(config: Configuration, semantics: str) -> bool:
    if semantics == "reduction":
        return isinstance(config.left, Success)
    return isinstance(config.left, Term0)


def _check(p: SessionType, q: SessionType, semantics: str, state_limit: int,
           validate_inputs: bool = True) -> ComplianceVerdict:
    if validate_inputs:
        assert_valid(p, "client type")
        assert_valid(q, "server type")
    config = Configuration(p, q)
    exploration = _explore(config, semantics, state_limit)
    bad = sorted(
        key for key in exploration.stuck
        if not _left_term_ok(exploration.configs[key], semantics)
    )
    if bad:
        # stuck states were found in BFS order, so the first parent chain is
        # minimal-length; pick the lexicographically first among the shortest
        witnesses = [_witness_path(exploration.parents, config.key(), key) for key in bad]
        witness = min(witnesses, key=lambda w: (len(w), w))
        return ComplianceVerdict("non-compliant", semantics, witness, exploration.lts.truncated)
    if exploration.lts.truncated:
        return ComplianceVerdict(
            "indeterminate", semantics, None, True,
            note="state limit hit before the reachable set was exhausted",
        )
    note = LIVELOCK_NOTE if exploration.lts.has_cycle() else None
    return ComplianceVerdict("compliant", semantics, None, False, note)


def check_compliance(p: SessionType, q: SessionType,
                     state_limit: int = DEFAULT_STATE_LIMIT,
                     validate_inputs: bool = True) -> ComplianceVerdict:
    """Decide compliance of ``p`` with ``q`` under the reduction semantics."""
    return _check(p, q, "reduction", state_limit, validate_inputs)


def check_compliance_turn(p: SessionType, q: SessionType,
                          state_limit: int = DEFAULT_STATE_LIMIT,
                          validate_inputs: bool = True) -> ComplianceVerdict:
    """Decide compliance via the turn-based reformulation (stuck left side is 0)."""
    return _check(p, q, "turn", state_limit, validate_inputs)
