"""Executable checks of the compliance/winning correspondence results.

The harness relates three semantics of a composed pair: the reduction
semantics (compliance), the turn-based semantics (its reformulation and
the action-labelled system), and the event-structure game.  It checks, on
fixtures and on reproducible random corpora:

* the two compliance checkers agree;
* the turn-based system and the event-labelled system of the composed
  denotation are strongly bisimilar (n-step bisimilar for recursive pairs,
  whose denotations are finite approximants);
* compliance holds exactly when the eager strategy wins, and compliant
  pairs admit a winning strategy.

Recursive pairs are handled at a bound: the game side uses the depth-d
denotation, and the compliance side of the correspondence is taken on the
d-times unfolded types with the recursion tail replaced by the dead
process ``0``, which is the protocol the approximant denotes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .denote import DEFAULT_UNROLL_DEPTH
from .estructure import ets
from .game import (
    Contract,
    GameVerdict,
    compose_session_contracts,
    eager_winning,
    find_winning_strategy,
)
from .lts import Lts
from .opsem import (
    DEFAULT_STATE_LIMIT,
    ComplianceVerdict,
    Configuration,
    check_compliance,
    check_compliance_turn,
    explore,
)
from .syntax import (
    SUCCESS,
    TERM0,
    ExternalChoice,
    InternalChoice,
    Rec,
    SessionType,
    Success,
    Term0,
    Var,
    free_vars,
    inp,
    is_recursive,
    out,
    pretty,
)


# ---------------------------------------------------------------------------
# Bisimulation
# ---------------------------------------------------------------------------

def bisim(a: Lts, b: Lts, bound: int | None = None) -> bool:
    """Strong bisimilarity of two finite LTSs by partition refinement.

    With ``bound`` set, decides n-step bisimilarity instead (the n-th
    approximant of the bisimulation fixpoint), which is what a truncated
    system can honestly be compared at.  Completely disjoint label
    alphabets are rejected: that is the signature of comparing an
    event-labelled system that was never relabelled to actions.
    """
    if a.labels and b.labels and not (a.labels & b.labels):
        raise ValueError(
            "edge label alphabets are disjoint; relabel event-identified edges to actions first"
        )
    states = [("a", s) for s in a.states] + [("b", s) for s in b.states]
    successors: dict[tuple[str, str], list[tuple[str, tuple[str, str]]]] = {s: [] for s in states}
    for tag, lts in (("a", a), ("b", b)):
        for src, label, dst in lts.edges:
            successors[(tag, src)].append((label, (tag, dst)))
    block: dict[tuple[str, str], int] = dict.fromkeys(states, 0)
    rounds = 0
    while bound is None or rounds < bound:
        groups: dict[frozenset, int] = {}
        new_block: dict[tuple[str, str], int] = {}
        for state in states:
            signature = frozenset((label, block[dst]) for label, dst in successors[state])
            new_block[state] = groups.setdefault(signature, len(groups))
        rounds += 1
        stable = len(set(new_block.values())) == len(set(block.values()))
        block = new_block
        if stable:
            break
    return block[("a", a.initial)] == block[("b", b.initial)]


def turn_lts(p: SessionType, q: SessionType,
             state_limit: int = DEFAULT_STATE_LIMIT) -> Lts:
    """The action-labelled turn-based system of ``p ∥ q``."""
    return explore(Configuration(p, q), state_limit, semantics="turn")


def contract_ets(contract: Contract, step_bound: int = DEFAULT_STATE_LIMIT) -> Lts:
    """The event-labelled system of a contract's structure, relabelled to actions."""
    return ets(contract.es, step_bound=step_bound, relabel=True)


def min_loop_guard(term: SessionType) -> int | None:
    """Fewest action prefixes between any recursion binder and a use of its
    variable; ``None`` for non-recursive terms.  One trip around a loop
    fires at least this many of the owner's events."""
    best: int | None = None

    def walk(t: SessionType, depths: dict[str, int]) -> None:
        nonlocal best
        if isinstance(t, Var):
            if t.name in depths:
                candidate = depths[t.name]
                best = candidate if best is None else min(best, candidate)
        elif isinstance(t, (InternalChoice, ExternalChoice)):
            deeper = {name: depth + 1 for name, depth in depths.items()}
            for _, cont in t.branches:
                walk(cont, deeper)
        elif isinstance(t, Rec):
            inner = dict(depths)
            inner[t.var] = 0
            walk(t.body, inner)

    walk(term, {})
    return best


def bounded_bisim_depth(p: SessionType, q: SessionType,
                        unroll_depth: int = DEFAULT_UNROLL_DEPTH) -> int | None:
    """How many steps the truncated denotation provably tracks the real system.

    ``None`` means both types are finite and the comparison is exact.  A
    deviation needs one side to fire more events than its approximant
    holds, which takes more than ``unroll_depth * guard`` own events; since
    no side can fire more than half the steps plus one, twice that bound
    minus two is safe.
    """
    guards = [g for g in (min_loop_guard(p), min_loop_guard(q)) if g is not None]
    if not guards:
        return None
    return max(1, 2 * unroll_depth * min(guards) - 2)


# ---------------------------------------------------------------------------
# Depth truncation of recursive types
# ---------------------------------------------------------------------------

def truncate(term: SessionType, depth: int) -> SessionType:
    """Unfold every recursion ``depth`` times, ending in the dead process ``0``.

    The denotation of the result is the depth-``depth`` approximant of the
    original type's denotation, so this is the protocol that bounded game
    verdicts actually speak about.
    """

    def tr(t: SessionType, env: dict[str, SessionType]) -> SessionType:
        if isinstance(t, (Success, Term0)):
            return t
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, (InternalChoice, ExternalChoice)):
            return type(t)(tuple((label, tr(cont, env)) for label, cont in t.branches))
        if isinstance(t, Rec):
            def approximant(k: int) -> SessionType:
                if k >= depth:
                    return TERM0
                inner = dict(env)
                inner[t.var] = approximant(k + 1)
                return tr(t.body, inner)

            return approximant(0)
        raise TypeError(f"not a session type: {t!r}")

    return tr(term, {})


# ---------------------------------------------------------------------------
# Random corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusSpec:
    """Reproducible corpus parameters; generation is a pure function of these."""

    seed: int
    count: int
    max_depth: int = 3
    max_branch: int = 3
    allow_recursion: bool = False
    unroll_depth: int = DEFAULT_UNROLL_DEPTH
    actions: tuple[str, ...] = ("a", "b", "c", "d")


def _gen_type(rng: random.Random, spec: CorpusSpec, role: str, budget: int,
              scope: dict[str, bool], rec_budget: int) -> SessionType:
    guarded = sorted(name for name, ok in scope.items() if ok)
    choices: list[str] = ["success"]
    weights: list[int] = [2]
    if budget > 0:
        internal_weight, external_weight = (5, 3) if role == "client" else (3, 5)
        choices += ["internal", "external"]
        weights += [internal_weight, external_weight]
        if rec_budget > 0 and budget > 1:
            choices.append("rec")
            weights.append(2)
    if guarded:
        choices.append("var")
        weights.append(3)
    kind = rng.choices(choices, weights)[0]
    if kind == "success":
        return SUCCESS
    if kind == "var":
        return Var(rng.choice(guarded))
    if kind == "rec":
        name = f"x{len(scope)}"
        inner = dict(scope)  # a binder is not a prefix: outer guard status persists
        inner[name] = False
        body = _gen_type(rng, spec, role, budget - 1, inner, rec_budget - 1)
        return Rec(name, body) if name in free_vars(body) else body
    width = rng.randint(1, max(1, min(spec.max_branch, budget)))
    names = rng.sample(spec.actions, min(width, len(spec.actions)))
    make = out if kind == "internal" else inp
    deeper = dict.fromkeys(scope, True)
    branches = tuple(
        (make(name), _gen_type(rng, spec, role, budget - 1, deeper, rec_budget))
        for name in sorted(names)
    )
    return InternalChoice(branches) if kind == "internal" else ExternalChoice(branches)


def _ensure_recursive(term: SessionType, rng: random.Random) -> SessionType:
    """Wrap a non-recursive term in a loop by redirecting one success leaf."""
    if is_recursive(term):
        return term
    fresh = "loop"
    slots: list[tuple] = []

    def find(t: SessionType, path: tuple, depth: int) -> None:
        if isinstance(t, Success) and depth >= 1:
            slots.append(path)
        elif isinstance(t, (InternalChoice, ExternalChoice)):
            for i, (_, cont) in enumerate(t.branches):
                find(cont, path + (i,), depth + 1)

    find(term, (), 0)
    if not slots:
        return Rec(fresh, InternalChoice(((out("a"), Var(fresh)),)))

    target = rng.choice(sorted(slots))

    def rewrite(t: SessionType, path: tuple) -> SessionType:
        if path == target and isinstance(t, Success):
            return Var(fresh)
        if isinstance(t, (InternalChoice, ExternalChoice)):
            branches = tuple(
                (label, rewrite(cont, path + (i,)) if target[: len(path) + 1] == path + (i,) else cont)
                for i, (label, cont) in enumerate(t.branches)
            )
            return type(t)(branches)
        return t

    return Rec(fresh, rewrite(term, ()))


def random_session_type(spec: CorpusSpec, role: str, index: int = 0) -> SessionType:
    """Deterministic well-formed generator.

    ``role`` is ``client`` or ``server`` and only biases the mix of
    internal versus external choices.  Identical arguments always produce
    the same term; every output validates cleanly.  With recursion allowed
    the client stream is guaranteed recursive.
    """
    if role not in ("client", "server"):
        raise ValueError("role must be 'client' or 'server'")
    rng = random.Random(f"{spec.seed}/{role}/{index}/v1")
    rec_budget = 2 if spec.allow_recursion else 0
    term = _gen_type(rng, spec, role, spec.max_depth, {}, rec_budget)
    if spec.allow_recursion and role == "client":
        term = _ensure_recursive(term, rng)
    return term


def dual(term: SessionType) -> SessionType:
    """Swap choice flavours and action polarities; the canonical partner."""
    if isinstance(term, (Success, Term0, Var)):
        return term
    if isinstance(term, Rec):
        return Rec(term.var, dual(term.body))
    if isinstance(term, InternalChoice):
        return ExternalChoice(tuple((label.co(), dual(cont)) for label, cont in term.branches))
    if isinstance(term, ExternalChoice):
        return InternalChoice(tuple((label.co(), dual(cont)) for label, cont in term.branches))
    raise TypeError(f"not a session type: {term!r}")


def _perturb(term: SessionType, rng: random.Random, spec: CorpusSpec) -> SessionType:
    """A small deterministic edit; keeps the term well-formed."""
    kind = rng.choice(["none", "drop", "widen", "cut"])
    if kind == "none":
        return term

    def edit(t: SessionType) -> SessionType:
        if isinstance(t, ExternalChoice):
            branches = list(t.branches)
            if kind == "drop" and len(branches) >= 2:
                branches.pop(rng.randrange(len(branches)))
                return ExternalChoice(tuple(branches))
            if kind == "widen":
                used = {label.name for label, _ in branches}
                unused = [name for name in spec.actions if name not in used]
                if unused:
                    branches.append((inp(rng.choice(unused)), SUCCESS))
                    return ExternalChoice(tuple(branches))
            if kind == "cut":
                i = rng.randrange(len(branches))
                label, _ = branches[i]
                branches[i] = (label, SUCCESS)
                return ExternalChoice(tuple(branches))
            return t
        if isinstance(t, InternalChoice):
            if kind == "cut":
                branches = list(t.branches)
                i = rng.randrange(len(branches))
                label, _ = branches[i]
                branches[i] = (label, SUCCESS)
                return InternalChoice(tuple(branches))
            return t
        return t

    # apply the edit at one random choice node, outermost first
    nodes: list[tuple] = []

    def collect(t: SessionType, path: tuple) -> None:
        if isinstance(t, (InternalChoice, ExternalChoice)):
            nodes.append(path)
            for i, (_, cont) in enumerate(t.branches):
                collect(cont, path + (i,))
        elif isinstance(t, Rec):
            collect(t.body, path + ("r",))

    collect(term, ())
    if not nodes:
        return term
    target = rng.choice(sorted(nodes, key=str))

    def rewrite(t: SessionType, path: tuple) -> SessionType:
        if path == target:
            return edit(t)
        if isinstance(t, (InternalChoice, ExternalChoice)):
            return type(t)(tuple(
                (label, rewrite(cont, path + (i,)))
                for i, (label, cont) in enumerate(t.branches)
            ))
        if isinstance(t, Rec):
            return Rec(t.var, rewrite(t.body, path + ("r",)))
        return t

    return rewrite(term, ())


def corpus_pair(spec: CorpusSpec, index: int) -> tuple[SessionType, SessionType]:
    """The ``index``-th client/server pair of the corpus.

    Half the servers are perturbed duals of the client, so the corpus
    contains both compliant and non-compliant interactions; the rest are
    independent draws.
    """
    client = random_session_type(spec, "client", index)
    rng = random.Random(f"{spec.seed}/pair/{index}/v1")
    if rng.random() < 0.5:
        server = _perturb(dual(client), rng, spec)
    else:
        server = random_session_type(spec, "server", index)
    return client, server


# ---------------------------------------------------------------------------
# Theorem checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrespondenceReport:
    compliance: ComplianceVerdict
    eager: GameVerdict
    agree: bool
    bounded: bool
    strategy_found: bool | None = None

    def to_json(self) -> dict:
        return {
            "compliance": self.compliance.to_json(),
            "eager": self.eager.to_json(),
            "agree": self.agree,
            "bounded": self.bounded,
            "strategy_found": self.strategy_found,
        }


def correspondence_check(p: SessionType, q: SessionType,
                   unroll_depth: int = DEFAULT_UNROLL_DEPTH,
                   participants: tuple[str, str] = ("A", "B"),
                   state_limit: int = DEFAULT_STATE_LIMIT,
                   check_corollary: bool = False) -> CorrespondenceReport:
    """Compare compliance with eager winning on one pair.

    For finite pairs the comparison is exact.  For recursive pairs both
    sides are taken at the same bound: the game on the depth-``d``
    denotation, compliance on the ``d``-times unfolded types.
    """
    a, b = participants
    contract = compose_session_contracts(p, a, q, b, unroll_depth)
    eager = eager_winning(contract, a)
    bounded = contract.bounded_depth is not None
    if bounded:
        compliance = check_compliance(
            truncate(p, unroll_depth), truncate(q, unroll_depth),
            state_limit, validate_inputs=False,
        )
    else:
        compliance = check_compliance(p, q, state_limit)
    agree = (
        compliance.status != "indeterminate"
        and compliance.is_compliant == eager.winning
    )
    strategy_found: bool | None = None
    if check_corollary and compliance.is_compliant:
        strategy_found = find_winning_strategy(contract, a) is not None
    return CorrespondenceReport(compliance, eager, agree, bounded, strategy_found)


@dataclass
class CorpusSummary:
    spec: CorpusSpec
    pairs: int = 0
    correspondence_agreements: int = 0
    checker_agreements: int = 0
    bisim_agreements: int = 0
    strategy_exists_checked: int = 0
    strategy_exists_agreements: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "seed": self.spec.seed,
            "count": self.spec.count,
            "recursive": self.spec.allow_recursion,
            "unroll_depth": self.spec.unroll_depth,
            "pairs": self.pairs,
            "correspondence_agreements": self.correspondence_agreements,
            "checker_agreements": self.checker_agreements,
            "bisim_agreements": self.bisim_agreements,
            "strategy_exists_checked": self.strategy_exists_checked,
            "strategy_exists_agreements": self.strategy_exists_agreements,
            "failures": self.failures,
        }


def run_corpus(spec: CorpusSpec, state_limit: int = DEFAULT_STATE_LIMIT,
               check_corollary: bool = True) -> CorpusSummary:
    """Assert the correspondence results over every pair of one corpus.

    Every disagreement is recorded with the pair that produced it; the
    expectation everywhere is zero failures.
    """
    summary = CorpusSummary(spec)
    for index in range(spec.count):
        p, q = corpus_pair(spec, index)
        summary.pairs += 1

        def fail(check: str, detail: str) -> None:
            summary.failures.append({
                "pair": index,
                "client": pretty(p),
                "server": pretty(q),
                "check": check,
                "detail": detail,
            })

        reduction = check_compliance(p, q, state_limit)
        turn = check_compliance_turn(p, q, state_limit)
        if reduction.status == turn.status and reduction.status != "indeterminate":
            summary.checker_agreements += 1
        else:
            fail("compliance-checkers", f"reduction says {reduction.status}, turn-based says {turn.status}")

        report = correspondence_check(
            p, q, spec.unroll_depth, state_limit=state_limit,
            check_corollary=check_corollary,
        )
        if report.agree:
            summary.correspondence_agreements += 1
        else:
            fail("compliance-vs-eager",
                 f"compliance={report.compliance.status} eager_winning={report.eager.winning}")
        if report.strategy_found is not None:
            summary.strategy_exists_checked += 1
            if report.strategy_found:
                summary.strategy_exists_agreements += 1
            else:
                fail("winning-strategy-existence", "compliant pair without a winning strategy")

        contract = compose_session_contracts(p, "A", q, "B", spec.unroll_depth)
        ts = turn_lts(p, q, state_limit)
        es_lts = contract_ets(contract, state_limit)
        bound = bounded_bisim_depth(p, q, spec.unroll_depth)
        if ts.truncated or es_lts.truncated:
            fail("bisimulation", "state limit hit; systems not fully explored")
        elif bisim(ts, es_lts, bound):
            summary.bisim_agreements += 1
        else:
            kind = "strong" if bound is None else f"{bound}-step"
            fail("bisimulation", f"turn-based and event-labelled systems not {kind} bisimilar")
    return summary
