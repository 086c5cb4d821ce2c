"""Command-line front end.

Subcommands: ``check`` (compliance under both semantics), ``agree``
(eager-strategy verdict or winning-strategy search), ``export`` (event
structure JSON, event-labelled DOT, turn-based DOT) and ``corpus`` (the
randomised theorem harness).  Types are given inline or with ``@file``.

Exit codes: 0 for a positive verdict (compliant / winning / clean corpus),
1 for a negative one, 2 for errors or indeterminate results.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .denote import DEFAULT_UNROLL_DEPTH, denote, denote_par
from .estructure import es_to_json_dict, ets_to_dot
from .game import compose_session_contracts, eager_winning, find_winning_strategy
from .harness import CorpusSpec, run_corpus, turn_lts
from .opsem import DEFAULT_STATE_LIMIT, check_compliance, check_compliance_turn
from .syntax import ParseError, assert_valid, parse, pretty


class CliError(Exception):
    pass


def _load_type(text: str):
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise CliError(f"cannot read {text[1:]}: {exc}") from None
    try:
        term = parse(text)
    except ParseError as exc:
        raise CliError(f"parse error: {exc}") from None
    try:
        assert_valid(term)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return term


def _emit(data: dict, fmt: str, out) -> None:
    if fmt == "json":
        print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False), file=out)
    else:
        for key, value in data.items():
            print(f"{key}: {value}", file=out)


def _bound_line(depth: int | None) -> str | None:
    return None if depth is None else f"bounded at depth {depth}"


def cmd_check(args, out) -> int:
    p = _load_type(args.client)
    q = _load_type(args.server)
    reduction = check_compliance(p, q, args.limit)
    turn = check_compliance_turn(p, q, args.limit)
    payload = {
        "client": pretty(p),
        "server": pretty(q),
        "reduction": reduction.to_json(),
        "turn_based": turn.to_json(),
        "agree": reduction.status == turn.status,
    }
    _emit(payload, args.format, out)
    if "indeterminate" in (reduction.status, turn.status) or reduction.status != turn.status:
        return 2
    return 0 if reduction.is_compliant else 1


def cmd_agree(args, out) -> int:
    p = _load_type(args.client)
    q = _load_type(args.server)
    contract = compose_session_contracts(p, args.participants[0], q, args.participants[1], args.depth)
    who = args.participant or args.participants[0]
    if who not in args.participants:
        raise CliError(f"unknown participant {who}")
    if args.strategy == "eager":
        verdict = eager_winning(contract, who)
        payload = verdict.to_json()
        bound = _bound_line(contract.bounded_depth)
        if bound:
            payload["note"] = bound
        _emit(payload, args.format, out)
        return 0 if verdict.winning else 1
    strategy = find_winning_strategy(contract, who)
    payload = {
        "participant": who,
        "strategy": "synthesized",
        "winning": strategy is not None,
        "prescriptions": strategy.to_json() if strategy else None,
        "bounded_depth": contract.bounded_depth,
    }
    _emit(payload, args.format, out)
    return 0 if strategy is not None else 1


def cmd_export(args, out) -> int:
    p = _load_type(args.client)
    q = _load_type(args.server)
    a, b = args.participants
    left = denote(p, a, unroll_depth=args.depth, parity="odd")
    right = denote(q, b, unroll_depth=args.depth, parity="even")
    composed = denote_par(left, right)
    if args.what == "es":
        text = json.dumps(es_to_json_dict(composed), indent=2, sort_keys=True, ensure_ascii=False)
    elif args.what == "ets":
        text = ets_to_dot(composed, step_bound=args.limit)
    elif args.what == "ts":
        system = turn_lts(p, q, args.limit)
        text = system.to_dot(name="ts")
    else:
        raise CliError(f"unknown export target {args.what}")
    if args.output:
        try:
            Path(args.output).write_text(text + "\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}") from None
    else:
        print(text, file=out)
    return 0


def cmd_corpus(args, out) -> int:
    spec = CorpusSpec(
        seed=args.seed,
        count=args.count,
        max_depth=args.max_depth,
        max_branch=args.max_branch,
        allow_recursion=args.recursive,
        unroll_depth=args.unroll_depth,
    )
    summary = run_corpus(spec, state_limit=args.limit)
    _emit(summary.to_json(), args.format, out)
    return 0 if summary.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stgames",
        description="Session-type compliance and game-based contract checking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_types: bool = True) -> None:
        if with_types:
            p.add_argument("client", help="client session type (inline text or @file)")
            p.add_argument("server", help="server session type (inline text or @file)")
            p.add_argument("--participants", nargs=2, default=("A", "B"), metavar=("A", "B"),
                           help="participant names (default: A B)")
        p.add_argument("--depth", type=int, default=DEFAULT_UNROLL_DEPTH,
                       help="recursion unroll depth (default: %(default)s)")
        p.add_argument("--limit", type=int, default=DEFAULT_STATE_LIMIT,
                       help="state limit for explorations (default: %(default)s)")
        p.add_argument("--format", choices=("json", "text"), default="json")

    check = sub.add_parser("check", help="decide compliance under both semantics")
    common(check)
    check.set_defaults(run=cmd_check)

    agree = sub.add_parser("agree", help="eager verdict or winning-strategy search")
    common(agree)
    agree.add_argument("--strategy", choices=("eager", "search"), default="eager")
    agree.add_argument("--participant", help="whose side to check (default: the client's owner)")
    agree.set_defaults(run=cmd_agree)

    export = sub.add_parser("export", help="write the ES as JSON or a system as DOT")
    common(export)
    export.add_argument("--what", choices=("es", "ets", "ts"), default="es")
    export.add_argument("-o", "--output", help="output file (default: stdout)")
    export.set_defaults(run=cmd_export)

    corpus = sub.add_parser("corpus", help="run the randomised theorem harness")
    common(corpus, with_types=False)
    corpus.add_argument("--seed", type=int, default=42)
    corpus.add_argument("--count", type=int, default=500)
    corpus.add_argument("--recursive", action="store_true")
    corpus.add_argument("--unroll-depth", type=int, default=4)
    corpus.add_argument("--max-depth", type=int, default=3)
    corpus.add_argument("--max-branch", type=int, default=3)
    corpus.set_defaults(run=cmd_corpus)
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
