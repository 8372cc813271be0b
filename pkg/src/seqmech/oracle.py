"""Brute-force referees.

``protocol_search`` enumerates perfect-information disclosure protocols: at
each cell some player splits her projection into two or more blocks and the
protocol continues on each block.  A split is acceptable when every pair of
states it separates passes the notion with belief equal to the cell.  The
search succeeds when some protocol ends in cells on which ``f`` is constant.
Acceptance depends only on the cell, so results are memoized by cell.
"""
from __future__ import annotations

from dataclasses import dataclass

from .deciders import decide_generic
from .game import GameTree, StrategyProfile, check_definitional, check_implements
from .model import Environment, StateSet
from .notions import NotionContext, NotionId, eval_notion, set_partitions


@dataclass
class Protocol:
    """A witness node: ``chooser`` splits ``cell`` into ``children`` blocks."""

    cell: StateSet
    chooser: int | None = None
    blocks: tuple = ()
    children: tuple = ()

    @property
    def leaf(self) -> bool:
        return self.chooser is None


@dataclass
class SearchResult:
    status: str  # "found", "not-found" or "limit-exceeded"
    witness: Protocol | None = None
    cells_explored: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"

    @property
    def exhausted(self) -> bool:
        return self.status != "limit-exceeded"


def _split_ok(nid: NotionId, env: Environment, E: StateSet, i: int, blocks: list) -> bool:
    where = {t: k for k, b in enumerate(blocks) for t in b}
    sub = {k: E.restrict(i, b) for k, b in enumerate(blocks)}
    for a in E.sorted:
        for b in E.sorted:
            if where[a[i]] == where[b[i]]:
                continue
            ctx = NotionContext(env, E, E, sub[where[a[i]]])
            if eval_notion(nid, ctx, a, b, i) == 0:
                return False
    return True


def protocol_search(env: Environment, nid: NotionId, limit: int = 12) -> SearchResult:
    if nid not in (NotionId.OD, NotionId.SOD):
        raise ValueError("protocol search covers OD and SOD only")
    if len(env.states) > limit:
        return SearchResult("limit-exceeded")
    memo: dict = {}

    def solve(E: StateSet) -> Protocol | None:
        if E in memo:
            return memo[E]
        memo[E] = None  # cells only shrink, so this never short-circuits a real answer
        if env.f_constant_on(E):
            memo[E] = Protocol(E)
            return memo[E]
        for i in range(env.n_players):
            proj = list(E.projection(i))
            if len(proj) < 2:
                continue
            for part in set_partitions(proj):
                if len(part) < 2:
                    continue
                blocks = [tuple(sorted(b)) for b in part]
                if not _split_ok(nid, env, E, i, blocks):
                    continue
                kids = []
                for b in blocks:
                    child = solve(E.restrict(i, b))
                    if child is None:
                        break
                    kids.append(child)
                else:
                    memo[E] = Protocol(E, i, tuple(blocks), tuple(kids))
                    return memo[E]
        return None

    root = solve(env.theta)
    return SearchResult("found" if root else "not-found", root, len(memo))


def protocol_to_game(env: Environment, witness: Protocol) -> tuple:
    """Perfect-information game in which each type announces its block."""
    label_actions: dict = {}

    def name(i: int, block: tuple) -> str:
        return "{" + ",".join(env.types[i][t] for t in block) + "}"

    def build(p: Protocol, path: str) -> dict:
        if p.leaf:
            return {"outcome": env.outcomes[env.f(p.cell.sorted[0])]}
        lab = f"n{path}"
        label_actions[(p.chooser, lab)] = {t: name(p.chooser, b) for b in p.blocks for t in b}
        return {
            "mover": p.chooser,
            "label": lab,
            "moves": [(name(p.chooser, b), build(c, f"{path}.{k}"))
                      for k, (b, c) in enumerate(zip(p.blocks, p.children))],
        }

    if witness.leaf:
        spec = {"mover": 0, "label": "n", "moves": [("go", build(witness, "0"))]}
        label_actions[(0, "n")] = {t: "go" for t in range(len(env.types[0]))}
    else:
        spec = build(witness, "")
    G = GameTree.from_nested(spec, env.n_players)
    moves = {}
    for i in range(env.n_players):
        for t in range(len(env.types[i])):
            moves[(i, t)] = {
                lab: label_actions[(i, lab)].get(t, G.actions_at(i, lab)[0])
                for lab in G.labels_of(i)
            }
    return G, StrategyProfile(moves)


@dataclass
class CrossCheck:
    agree: bool
    decided: bool
    searched: bool | None
    status: str
    details: str = ""


def cross_check(env: Environment, nid: NotionId, limit: int = 12) -> CrossCheck:
    search = protocol_search(env, nid, limit)
    verdict = decide_generic(env, nid)
    if not search.exhausted:
        return CrossCheck(True, verdict.implementable, None, search.status,
                          "search limit exceeded; nothing compared")
    agree = verdict.implementable == search.found
    details = ""
    if not agree:
        details = (
            f"decider says {verdict.implementable}, search says {search.found}; "
            f"refutation={verdict.refutation} witness={search.witness}"
        )
    return CrossCheck(agree, verdict.implementable, search.found, search.status, details)


@dataclass
class GameCheck:
    holds: bool
    implements: bool
    counterexample: dict | None = None


def verify_game(env: Environment, nid: NotionId, G: GameTree, S: StrategyProfile) -> GameCheck:
    d = check_definitional(nid, env, G, S)
    imp = check_implements(env, G, S)
    return GameCheck(d.holds and imp, imp, d.counterexample)
