"""Command-line front end.

Exit codes: 0 affirmative, 1 negative verdict, 2 input error, 3 internal
cross-check disagreement.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from .canonical import iterate, operator_table, trace_lines
from .deciders import CrossCheckError, Verdict, decide_generic
from .game import GameFormatError, game_to_dict, load_game, save_game, StateSpaceTooLargeError
from .instances import BUILTIN, random_environment
from .model import Environment, StateSet, format_rational, load_environment, validate_environment
from .notions import MissingPriorError, NotionContext, NotionId, eval_notion
from .oracle import cross_check, protocol_search, protocol_to_game, verify_game
from .synthesis import (
    InequalitiesFailError,
    NotAchievableError,
    NonRectangularCellError,
    synthesize_direct_mechanism,
    synthesize_disclosure_game,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2, 3

_NOTION_NAMES = {"sp": NotionId.WD, "pbe": NotionId.PBE, "mm": NotionId.MM,
                 "osp": NotionId.OD, "sosp": NotionId.SOD}
_DISPLAY = {v: k.upper() for k, v in _NOTION_NAMES.items()}


class InputError(Exception):
    pass


def _load_env(spec: str, seed: int | None) -> Environment:
    if spec in BUILTIN:
        env = BUILTIN[spec]()
    elif spec == "random":
        env = random_environment(random.Random(0 if seed is None else seed))
    else:
        path = Path(spec)
        if not path.exists():
            raise InputError(f"{spec}: no such file or built-in environment")
        try:
            env = load_environment(path)
        except json.JSONDecodeError as exc:
            raise InputError(f"{spec}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        except ValueError as exc:
            raise InputError(f"{spec}: {exc}") from None
    problems = validate_environment(env)
    if problems:
        raise InputError(f"{spec}: " + "; ".join(problems))
    return env


def _notions(text: str) -> list:
    if text == "all":
        return [NotionId.WD, NotionId.PBE, NotionId.MM, NotionId.OD, NotionId.SOD]
    out = []
    for part in text.split(","):
        key = part.strip().lower()
        if key not in _NOTION_NAMES:
            raise InputError(f"unknown notion {part!r}; use sp, pbe, mm, osp, sosp or all")
        out.append(_NOTION_NAMES[key])
    return out


def _single_notion(text: str) -> NotionId:
    ids = _notions(text)
    if len(ids) != 1:
        raise InputError("exactly one notion is required here")
    return ids[0]


def _route_text(v: Verdict) -> str:
    if v.route == "additive":
        if v.implementable:
            return "additive route: inequality system holds on the full type space; direct mechanism verified"
        r = v.refutation
        return f"additive route: type {r['type']} of {r['player']} gains by reporting {r['report']}"
    if v.implementable:
        return (f"monotonic route: canonical {v.notion.value} operator achievable, "
                f"N={v.certificate['N']}; disclosure game verified")
    r = v.refutation
    text = f"monotonic route: fixed point {r['fixed_point']} at {r['state']}"
    if r.get("merge"):
        text += f"; first merge: {r['merge'][0]} at {r['merge'][1]} tempted to report as in {r['merge'][2]}"
    return text


def _verdict_json(env: Environment, v: Verdict) -> dict:
    doc = {
        "notion": _DISPLAY[v.notion],
        "implementable": v.implementable,
        "route": v.route,
        "notes": v.notes,
    }
    if v.implementable and v.route == "monotonic":
        sched = v.certificate["schedule"]
        doc["N"] = v.certificate["N"]
        doc["rounds"] = {
            env.state_label(s): [[env.players[i] for i in act] for act in sched.order(s)]
            for s in env.states
        }
    if v.refutation is not None:
        doc["refutation"] = v.refutation
    return doc


def cmd_check(args) -> int:
    env = _load_env(args.env, args.seed)
    verdicts = []
    for nid in _notions(args.notion):
        if nid is NotionId.PBE and not env.has_prior:
            raise InputError("PBE needs a prior in the environment file")
        verdicts.append(decide_generic(env, nid))
    if args.json:
        print(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "command": "check",
            "environment": env.name or args.env,
            "verdicts": [_verdict_json(env, v) for v in verdicts],
        }, indent=2, sort_keys=True))
    else:
        for v in verdicts:
            mark = "implementable" if v.implementable else "not implementable"
            note = f" ({'; '.join(v.notes)})" if v.notes else ""
            print(f"{_DISPLAY[v.notion]}: {mark}{note} -- {_route_text(v)}")
    return EXIT_OK if all(v.implementable for v in verdicts) else EXIT_NEGATIVE


def cmd_synthesize(args) -> int:
    env = _load_env(args.env, args.seed)
    nid = _single_notion(args.notion)
    try:
        if nid in (NotionId.OD, NotionId.SOD):
            G, S = synthesize_disclosure_game(nid, env)
        else:
            if nid is NotionId.PBE and not env.has_prior:
                raise InputError("PBE needs a prior in the environment file")
            G, S = synthesize_direct_mechanism(nid, env)
    except (NotAchievableError, InequalitiesFailError) as exc:
        print(f"{_DISPLAY[nid]}: cannot synthesize: {exc}")
        return EXIT_NEGATIVE
    doc = game_to_dict(env, G, S)
    if args.out:
        save_game(args.out, env, G, S)
        print(f"{_DISPLAY[nid]}: wrote game with {len(G.nodes)} nodes to {args.out}")
    else:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    if not args.game:
        raise InputError("verify needs --game")
    try:
        env, G, S = load_game(args.game)
    except (OSError, json.JSONDecodeError, GameFormatError, ValueError) as exc:
        raise InputError(f"{args.game}: {exc}") from None
    if args.env:
        env = _load_env(args.env, args.seed)
    problems = validate_environment(env)
    if problems:
        raise InputError("; ".join(problems))
    code = EXIT_OK
    results = []
    for nid in _notions(args.notion):
        res = verify_game(env, nid, G, S)
        results.append((nid, res))
        if not res.holds:
            code = EXIT_NEGATIVE
    if args.json:
        print(json.dumps({
            "schema_version": SCHEMA_VERSION,
            "command": "verify",
            "results": [{"notion": _DISPLAY[n], "holds": r.holds, "implements": r.implements,
                         "counterexample": _jsonable(r.counterexample)} for n, r in results],
        }, indent=2, sort_keys=True))
    else:
        for nid, r in results:
            state = "holds" if r.holds else "fails"
            extra = "" if r.implements else " (does not implement the SCF)"
            cx = f" counterexample: {_jsonable(r.counterexample)}" if r.counterexample else ""
            print(f"{_DISPLAY[nid]}: {state}{extra}{cx}")
    return code


def cmd_oracle(args) -> int:
    env = _load_env(args.env, args.seed)
    nid = _single_notion(args.notion)
    if nid not in (NotionId.OD, NotionId.SOD):
        raise InputError("oracle covers osp and sosp only")
    limit = args.limit if args.limit is not None else 12
    result = protocol_search(env, nid, limit)
    doc = {"schema_version": SCHEMA_VERSION, "command": "oracle",
           "notion": _DISPLAY[nid], "status": result.status}
    code = {"found": EXIT_OK, "not-found": EXIT_NEGATIVE}.get(result.status, EXIT_INPUT)
    if result.exhausted:
        cc = cross_check(env, nid, limit)
        doc["decider_agrees"] = cc.agree
        if not cc.agree:
            doc["disagreement"] = cc.details
            code = EXIT_DISAGREE
    if result.found:
        G, S = protocol_to_game(env, result.witness)
        doc["witness"] = game_to_dict(env, G, S)
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"{_DISPLAY[nid]} protocol search: {result.status}")
        if "disagreement" in doc:
            print(f"cross-check disagreement: {doc['disagreement']}")
        if "witness" in doc:
            print(json.dumps(doc["witness"], indent=2))
    return code


def cmd_explain(args) -> int:
    env = _load_env(args.env, args.seed)
    nid = _single_notion(args.notion)
    if nid is NotionId.PBE and not env.has_prior:
        raise InputError("PBE needs a prior in the environment file")
    theta = env.theta
    lines = []
    if args.trace:
        table = operator_table(nid, env)
        for s in env.states:
            lines.extend(trace_lines(env, iterate(nid, env, s, table=table)))
    else:
        lines.append("player,type,report,value")
        for i in range(env.n_players):
            base = env.states[0]
            for own in range(len(env.types[i])):
                for rep in range(len(env.types[i])):
                    if rep == own:
                        continue
                    a = base[:i] + (own,) + base[i + 1:]
                    b = base[:i] + (rep,) + base[i + 1:]
                    ctx = NotionContext(env, theta, theta, StateSet.of([a]))
                    bit = eval_notion(nid, ctx, a, b, i)
                    lines.append(f"{env.players[i]},{env.types[i][own]},{env.types[i][rep]},{bit}")
    print("\n".join(lines))
    return EXIT_OK


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqmech",
        description="Implementability of social choice functions by sequential mechanisms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, env_required=True):
        if env_required:
            p.add_argument("env", help="environment file, env-const, env-spa, env-xor or random")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--seed", type=int, default=None, help="seed for the 'random' environment")

    p = sub.add_parser("check", help="decide implementability")
    common(p)
    p.add_argument("--notion", default="all", help="all or a comma list of sp,pbe,mm,osp,sosp")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synthesize", help="build an implementing game")
    common(p)
    p.add_argument("--notion", required=True)
    p.add_argument("--out", help="write the game document here")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="check a game file against a notion")
    p.add_argument("env", nargs="?", help="override the embedded environment")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--game", help="game document")
    p.add_argument("--notion", default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force protocol search")
    common(p)
    p.add_argument("--notion", required=True)
    p.add_argument("--limit", type=int, default=None, help="largest type space searched")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("explain", help="notion table or canonical traces")
    common(p)
    p.add_argument("--notion", required=True)
    p.add_argument("--trace", action="store_true", help="dump canonical iteration traces")
    p.set_defaults(func=cmd_explain)
    return parser


def run(argv: list | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, MissingPriorError, NonRectangularCellError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StateSpaceTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CrossCheckError as exc:
        print(f"cross-check failure: {exc}", file=sys.stderr)
        return EXIT_DISAGREE


def main() -> None:
    sys.exit(run())
