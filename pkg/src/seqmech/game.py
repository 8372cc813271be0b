"""Extensive-form mechanisms: trees with information labels, per-type
strategies, reach sets, structure checks, the operator a game induces, and
definitional checkers for the five solution concepts.

A history is identified with the node it leads to.  Node ids follow
depth-first preorder, so the root is 0.  An information class is the pair
``(mover, label)``.

The definitional checkers work on terminals rather than on strategy
profiles.  A terminal is reached by some profile exactly when, for every
player, the histories on its path that carry the same label take the same
action; every inequality in the definitions compares outcomes of such
terminals, so quantifying over consistent terminals is exact.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from .model import Environment, StateSet, with_component
from .notions import NotionContext, NotionId, eval_notion, MissingPriorError

SCHEMA_VERSION = 1


class ActionUnavailableError(ValueError):
    pass


class StateSpaceTooLargeError(RuntimeError):
    pass


class GameFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    parent: int | None
    via: str | None  # action taken at the parent to get here
    mover: int | None = None  # None at terminals
    info_label: str | None = None
    actions: tuple = ()
    children: tuple = ()  # child ids aligned with actions
    outcome: str | None = None  # terminals only

    @property
    def terminal(self) -> bool:
        return self.mover is None

    def child(self, action: str) -> int:
        try:
            return self.children[self.actions.index(action)]
        except ValueError:
            raise ActionUnavailableError(
                f"action {action!r} not available at node {self.id}"
            ) from None


class GameTree:
    """A finite game tree.  Build with :meth:`from_nested`."""

    def __init__(self, nodes: list, n_players: int) -> None:
        self.nodes = tuple(nodes)
        self.n_players = n_players
        self._validate()

    @classmethod
    def from_nested(cls, spec: Mapping, n_players: int) -> "GameTree":
        """``spec`` is ``{"outcome": x}`` or
        ``{"mover": i, "label": s, "moves": [(action, spec), ...]}``."""
        nodes: list = []

        def visit(sub: Mapping, parent: int | None, via: str | None) -> int:
            nid = len(nodes)
            nodes.append(None)
            if "outcome" in sub:
                nodes[nid] = Node(nid, parent, via, outcome=str(sub["outcome"]))
                return nid
            acts, kids = [], []
            for action, child in sub["moves"]:
                acts.append(str(action))
                kids.append(visit(child, nid, str(action)))
            nodes[nid] = Node(nid, parent, via, int(sub["mover"]), str(sub["label"]),
                              tuple(acts), tuple(kids))
            return nid

        visit(spec, None, None)
        return cls(nodes, n_players)

    def _validate(self) -> None:
        if not self.nodes or self.nodes[0].terminal:
            raise GameFormatError("the root must be a decision node")
        for node in self.nodes:
            if node.terminal:
                continue
            if not node.actions:
                raise GameFormatError(f"node {node.id} has no actions")
            if len(set(node.actions)) != len(node.actions):
                raise GameFormatError(f"node {node.id} repeats an action")
            if not 0 <= node.mover < self.n_players:
                raise GameFormatError(f"node {node.id} has an unknown mover")
        for key, members in self.classes.items():
            acts = {self.nodes[h].actions for h in members}
            if len(acts) != 1:
                raise GameFormatError(f"information class {key} offers different actions")

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def __getitem__(self, nid: int) -> Node:
        return self.nodes[nid]

    @cached_property
    def classes(self) -> dict:
        out: dict = {}
        for node in self.nodes:
            if not node.terminal:
                out.setdefault((node.mover, node.info_label), []).append(node.id)
        return out

    def class_of(self, nid: int) -> tuple:
        node = self.nodes[nid]
        return (node.mover, node.info_label)

    @cached_property
    def terminals(self) -> tuple:
        return tuple(n.id for n in self.nodes if n.terminal)

    @cached_property
    def paths(self) -> dict:
        """node -> tuple of (ancestor id, action taken there), root first."""
        out = {0: ()}
        for node in self.nodes[1:]:
            out[node.id] = out[node.parent] + ((node.parent, node.via),)
        return out

    @cached_property
    def depth(self) -> int:
        return max(len(p) for p in self.paths.values())

    def size(self) -> int:
        return sum(len(n.actions) for n in self.nodes)

    def labels_of(self, i: int) -> list:
        return sorted({lab for (p, lab) in self.classes if p == i})

    def actions_at(self, i: int, label: str) -> tuple:
        return self.nodes[self.classes[(i, label)][0]].actions


@dataclass(frozen=True)
class StrategyProfile:
    """``moves[(i, t)]`` maps player ``i``'s labels to actions for type index ``t``."""

    moves: Mapping

    def behavior(self, i: int, t: int) -> Mapping:
        return self.moves[(i, t)]

    def profile(self, theta: tuple) -> tuple:
        return tuple(self.moves[(i, t)] for i, t in enumerate(theta))


def terminal_of(G: GameTree, B: tuple) -> int:
    """Follow the behavior profile ``B`` (one label->action map per player)."""
    node = G.root
    while not node.terminal:
        try:
            action = B[node.mover][node.info_label]
        except KeyError:
            raise ActionUnavailableError(
                f"no action for player {node.mover} at label {node.info_label!r}"
            ) from None
        node = G[node.child(action)]
    return node.id


def play(G: GameTree, S: StrategyProfile, theta: tuple) -> int:
    return terminal_of(G, S.profile(theta))


class ReachMap:
    """For each history, the states whose truthful play passes through it."""

    def __init__(self, env: Environment, G: GameTree, S: StrategyProfile) -> None:
        self.env = env
        self.G = G
        self.outcome_terminal = {}
        sets: dict = {n.id: set() for n in G.nodes}
        for theta in env.states:
            z = play(G, S, theta)
            self.outcome_terminal[theta] = z
            sets[z].add(theta)
            for anc, _ in G.paths[z]:
                sets[anc].add(theta)
        self.raw = {k: frozenset(v) for k, v in sets.items()}

    def __getitem__(self, nid: int) -> StateSet | None:
        states = self.raw[nid]
        return StateSet(states) if states else None

    def projection(self, nid: int, i: int) -> tuple:
        s = self[nid]
        return s.projection(i) if s is not None else ()


def reach_map(env: Environment, G: GameTree, S: StrategyProfile) -> ReachMap:
    return ReachMap(env, G, S)


@dataclass
class GspcVerdict:
    perfect_recall: bool
    all_terminals_reached: bool
    distinct_reach_sets: bool
    detail: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.perfect_recall and self.all_terminals_reached and self.distinct_reach_sets


def check_perfect_recall(G: GameTree) -> tuple | None:
    """First ``(h, a, h', h'')`` violating perfect recall, or None."""
    for members in G.classes.values():
        for h1 in members:
            for h, a in G.paths[h1]:
                if G[h].mover != G[h1].mover:
                    continue
                key = G.class_of(h)
                for h2 in members:
                    if not any(G.class_of(x) == key and b == a for x, b in G.paths[h2]):
                        return (h, a, h1, h2)
    return None


def check_gspc(env: Environment, G: GameTree, S: StrategyProfile) -> GspcVerdict:
    detail = []
    pr = check_perfect_recall(G)
    if pr is not None:
        detail.append(f"perfect recall fails at {pr}")
    reach = reach_map(env, G, S)
    unreached = [z for z in G.terminals if not reach.raw[z]]
    if unreached:
        detail.append(f"terminals never reached: {unreached}")
    seen: dict = {}
    clash = None
    for node in G.nodes:
        key = reach.raw[node.id]
        if key in seen:
            clash = (seen[key], node.id)
            break
        seen[key] = node.id
    if clash is not None:
        detail.append(f"histories {clash[0]} and {clash[1]} share a reach set")
    return GspcVerdict(pr is None, not unreached, clash is None, detail)


def check_implements(env: Environment, G: GameTree, S: StrategyProfile) -> bool:
    for theta in env.states:
        z = play(G, S, theta)
        if G[z].outcome != env.outcomes[env.f(theta)]:
            return False
    return True


class InducedOperator:
    """The operator and belief map a game-strategy pair induces on reach sets."""

    def __init__(self, env: Environment, G: GameTree, S: StrategyProfile) -> None:
        self.env, self.G, self.S = env, G, S
        self.reach = reach_map(env, G, S)
        self.history_of: dict = {}
        for node in G.nodes:
            states = self.reach.raw[node.id]
            if states:
                self.history_of.setdefault(StateSet(states), node.id)

    @property
    def domain(self) -> list:
        """Reach sets of decision nodes (where the operator is non-trivial)."""
        return [E for E, h in self.history_of.items() if not self.G[h].terminal]

    def cell(self, E: StateSet, theta: tuple) -> StateSet:
        h = self.history_of.get(E)
        if h is None or theta not in E or self.G[h].terminal:
            return E
        node = self.G[h]
        action = self.S.behavior(node.mover, theta[node.mover])[node.info_label]
        return self.reach[node.child(action)]

    def belief(self, E: StateSet) -> StateSet:
        h = self.history_of.get(E)
        if h is None or self.G[h].terminal:
            return E
        union: set = set()
        for h2 in self.G.classes[self.G.class_of(h)]:
            union |= self.reach.raw[h2]
        return StateSet(frozenset(union))


def induced_operator(env: Environment, G: GameTree, S: StrategyProfile) -> InducedOperator:
    return InducedOperator(env, G, S)


def check_perfect_recall_projection(env: Environment, G: GameTree, S: StrategyProfile) -> tuple | None:
    """Histories in one class with nonempty reach sets share the mover's
    projection.  Returns the first offending pair."""
    reach = reach_map(env, G, S)
    for (i, _), members in G.classes.items():
        projs = {}
        for h in members:
            if reach.raw[h]:
                projs[h] = reach.projection(h, i)
        if len(set(projs.values())) > 1:
            hs = sorted(projs)
            return (hs[0], hs[-1])
    return None


# -- definitional checkers ---------------------------------------------------


@dataclass
class Definitional:
    holds: bool
    counterexample: dict | None = None


class _Terminals:
    """Per-terminal facts shared by the checkers."""

    def __init__(self, G: GameTree) -> None:
        self.G = G
        self.moves: dict = {}  # z -> per player {label: action}
        self.consistent: list = []
        self.through: dict = {}  # z -> {node: action taken there}
        for z in G.terminals:
            per = [dict() for _ in range(G.n_players)]
            ok = True
            taken = {}
            for h, a in G.paths[z]:
                node = G[h]
                taken[h] = a
                prev = per[node.mover].setdefault(node.info_label, a)
                if prev != a:
                    ok = False
            self.moves[z] = per
            self.through[z] = taken
            if ok:
                self.consistent.append(z)

    def follows(self, z: int, i: int, behavior: Mapping) -> bool:
        return all(behavior.get(lab) == a for lab, a in self.moves[z][i].items())

    def compatible(self, z1: int, z2: int, players: Iterable[int]) -> bool:
        for j in players:
            m1, m2 = self.moves[z1][j], self.moves[z2][j]
            for lab, a in m1.items():
                if m2.get(lab, a) != a:
                    return False
        return True

    def at_class(self, z: int, members: set) -> list:
        """(history, action) pairs on z's path that lie in the class."""
        return [(h, a) for h, a in self.through[z].items() if h in members]


def _guard(G: GameTree, max_size: int) -> None:
    if G.size() > max_size:
        raise StateSpaceTooLargeError(
            f"game has {G.size()} history-action pairs, above the bound {max_size}"
        )


def check_definitional(
    nid: NotionId,
    env: Environment,
    G: GameTree,
    S: StrategyProfile,
    max_size: int = 20000,
    max_deviations: int = 200000,
) -> Definitional:
    """Check the solution concept directly on the game, quantifying over
    every profile through the terminals it can reach."""
    _guard(G, max_size)
    T = _Terminals(G)
    if nid is NotionId.PBE:
        return _check_pbe(env, G, S, max_deviations)
    for (i, label), members_list in G.classes.items():
        members = set(members_list)
        through = [z for z in T.consistent if T.at_class(z, members)]
        for t in range(len(env.types[i])):
            behavior = S.behavior(i, t)
            a = behavior[label]
            u = lambda z: env.u(i, t, env.outcomes.index(G[z].outcome))
            honest = [z for z in through if T.follows(z, i, behavior)]
            if not honest:
                continue  # this type never reaches the class
            deviating = [z for z in through if any(b != a for _, b in T.at_class(z, members))]
            where = {"player": env.players[i], "type": env.types[i][t], "label": label}

            if nid is NotionId.OD:
                if deviating:
                    lo = min(honest, key=u)
                    hi = max(deviating, key=u)
                    if u(lo) < u(hi):
                        return Definitional(False, {**where, "honest": lo, "deviation": hi})
            elif nid is NotionId.SOD:
                bundled = [z for z in through if any(b == a for _, b in T.at_class(z, members))]
                if deviating:
                    lo = min(bundled, key=u)
                    hi = max(deviating, key=u)
                    if u(lo) < u(hi):
                        return Definitional(False, {**where, "honest": lo, "deviation": hi})
            elif nid is NotionId.WD:
                others = [j for j in range(G.n_players) if j != i]
                for z in honest:
                    for z2 in through:
                        if u(z) < u(z2) and T.compatible(z, z2, others):
                            return Definitional(False, {**where, "honest": z, "deviation": z2})
            elif nid is NotionId.MM:
                bad = _maxmin_violation(G, T, i, label, a, through, honest, u, max_deviations)
                if bad is not None:
                    return Definitional(False, {**where, **bad})
            else:
                raise ValueError(f"unknown notion {nid!r}")
    return Definitional(True)


def _maxmin_violation(G, T, i, label, a, through, honest, u, budget):
    """Some deviation differing at the class, reaching it, whose worst
    outcome beats the honest worst case."""
    labels = sorted({lab for z in through for lab in T.moves[z][i]})
    choices = []
    for lab in labels:
        acts = G.actions_at(i, lab)
        if lab == label:
            acts = tuple(x for x in acts if x != a)
        choices.append(acts)
    count = 1
    for c in choices:
        count *= len(c)
    if count > budget:
        raise StateSpaceTooLargeError(f"{count} deviations at class {label!r} exceed the budget")
    floor = min(u(z) for z in honest)
    for combo in itertools.product(*choices):
        dev = dict(zip(labels, combo))
        reach = [z for z in through if T.follows(z, i, dev)]
        if not reach:
            continue
        worst = min(reach, key=u)
        if u(worst) > floor:
            return {"honest": min(honest, key=u), "deviation": worst, "behavior": dev}
    return None


def _check_pbe(env: Environment, G: GameTree, S: StrategyProfile, budget: int) -> Definitional:
    if not env.has_prior:
        raise MissingPriorError("PBE needs a prior")
    reach = reach_map(env, G, S)
    for (i, label), members in G.classes.items():
        rests: set = set()
        for h in members:
            rests |= {s[:i] + s[i + 1:] for s in reach.raw[h]}
        rests_sorted = sorted(rests)
        for t in range(len(env.types[i])):
            marginal = sum((env.mu(with_component(r, i, t)) for r in env.theta.others(i)),
                           Fraction(0))
            if marginal == 0:
                continue  # conditional belief undefined; nothing to check
            weight = {r: env.mu(with_component(r, i, t)) / marginal for r in rests_sorted}
            u = lambda z: env.u(i, t, env.outcomes.index(G[z].outcome))
            honest = sum(
                (u(play(G, S, with_component(r, i, t))) * weight[r] for r in rests_sorted),
                Fraction(0),
            )
            a = S.behavior(i, t)[label]
            opp = {r: S.profile(with_component(r, i, 0)) for r in rests_sorted}
            best = _best_deviation(G, i, label, a, rests_sorted, opp, weight, u, budget)
            if best is not None and best[0] > honest:
                return Definitional(False, {
                    "player": env.players[i], "type": env.types[i][t], "label": label,
                    "honest_value": honest, "deviation_value": best[0], "behavior": best[1],
                })
    return Definitional(True)


def _best_deviation(G, i, label, a, rests, opp, weight, u, budget):
    """Highest expected payoff over behavior strategies of ``i`` that do not
    play ``a`` at ``label``, enumerating only labels that play actually meets."""
    best = None
    visited = 0

    def run(assign: dict):
        nonlocal best, visited
        visited += 1
        if visited > budget:
            raise StateSpaceTooLargeError(f"deviation search at {label!r} exceeds the budget")
        total = Fraction(0)
        for r in rests:
            node = G.root
            B = opp[r]
            while not node.terminal:
                if node.mover == i:
                    lab = node.info_label
                    if lab not in assign:
                        acts = [x for x in node.actions if not (lab == label and x == a)]
                        for x in acts:
                            run({**assign, lab: x})
                        return
                    node = G[node.child(assign[lab])]
                else:
                    node = G[node.child(B[node.mover][node.info_label])]
            total += u(node.id) * weight[r]
        if best is None or total > best[0]:
            best = (total, dict(assign))

    run({})
    return best


def check_simplified(
    nid: NotionId, env: Environment, G: GameTree, S: StrategyProfile
) -> Definitional:
    """The notion evaluated on primitives at every decision history, with the
    belief read off the history's information class."""
    op = induced_operator(env, G, S)
    for node in G.nodes:
        if node.terminal:
            continue
        E = op.reach[node.id]
        if E is None:
            continue
        i = node.mover
        belief = op.belief(E)
        for theta in E.sorted:
            a = S.behavior(i, theta[i])[node.info_label]
            cell = op.reach[node.child(a)]
            for theta_p in E.sorted:
                if S.behavior(i, theta_p[i])[node.info_label] == a:
                    continue
                ctx = NotionContext(env, E, belief, cell)
                if eval_notion(nid, ctx, theta, theta_p, i) == 0:
                    return Definitional(False, {
                        "history": node.id, "player": env.players[i],
                        "state": env.state_label(theta), "report": env.state_label(theta_p),
                    })
    return Definitional(True)


def erase_information(G: GameTree, S: StrategyProfile) -> tuple:
    """Perfect-information copy: every decision node gets its own label."""
    nodes = []
    for n in G.nodes:
        if n.terminal:
            nodes.append(n)
        else:
            nodes.append(Node(n.id, n.parent, n.via, n.mover, f"h{n.id}", n.actions, n.children))
    H = GameTree(nodes, G.n_players)
    moves = {}
    for (i, t), beh in S.moves.items():
        moves[(i, t)] = {
            f"h{n.id}": beh[n.info_label]
            for n in G.nodes
            if not n.terminal and n.mover == i and n.info_label in beh
        }
    return H, StrategyProfile(moves)


# -- serialization -----------------------------------------------------------


def game_to_dict(env: Environment, G: GameTree, S: StrategyProfile) -> dict:
    nodes, leaves = [], {}
    for n in G.nodes:
        if n.terminal:
            leaves[str(n.id)] = n.outcome
        else:
            nodes.append({
                "id": n.id,
                "mover": env.players[n.mover],
                "info_label": n.info_label,
                "actions": {a: c for a, c in zip(n.actions, n.children)},
            })
    strategy = []
    for i, p in enumerate(env.players):
        for t, tl in enumerate(env.types[i]):
            for lab, act in sorted(S.behavior(i, t).items()):
                strategy.append({"player": p, "type": tl, "info_label": lab, "action": act})
    return {
        "schema_version": SCHEMA_VERSION,
        "environment": env.to_dict(),
        "nodes": nodes,
        "leaves": leaves,
        "strategy": strategy,
    }


def game_from_dict(doc: Mapping, env: Environment | None = None) -> tuple:
    """Returns ``(env, G, S)``; ``env`` defaults to the embedded environment."""
    try:
        if env is None:
            env = Environment.from_dict(doc["environment"])
        players = list(env.players)
        decisions = {int(n["id"]): n for n in doc["nodes"]}
        leaves = {int(k): str(v) for k, v in doc["leaves"].items()}
        parent: dict = {0: (None, None)}
        for nid, n in decisions.items():
            for a, c in n["actions"].items():
                parent[int(c)] = (nid, str(a))
        ids = sorted(set(decisions) | set(leaves))
        if ids != list(range(len(ids))):
            raise GameFormatError("node ids must be 0..n-1")
        nodes = []
        for nid in ids:
            par, via = parent.get(nid, (None, None))
            if nid != 0 and par is None:
                raise GameFormatError(f"node {nid} is unreachable")
            if nid in decisions:
                n = decisions[nid]
                acts = tuple(str(a) for a in n["actions"])
                kids = tuple(int(c) for c in n["actions"].values())
                nodes.append(Node(nid, par, via, players.index(n["mover"]),
                                  str(n["info_label"]), acts, kids))
            else:
                nodes.append(Node(nid, par, via, outcome=leaves[nid]))
        G = GameTree(nodes, len(players))
        moves: dict = {(i, t): {} for i in range(len(players)) for t in range(len(env.types[i]))}
        for row in doc["strategy"]:
            i = players.index(row["player"])
            t = env.types[i].index(str(row["type"]))
            moves[(i, t)][str(row["info_label"])] = str(row["action"])
    except (KeyError, IndexError, TypeError, AttributeError) as exc:
        raise GameFormatError(f"malformed game document: {exc!r}") from None
    for z in G.terminals:
        if G[z].outcome not in env.outcomes:
            raise GameFormatError(f"leaf {z} names unknown outcome {G[z].outcome!r}")
    return env, G, StrategyProfile(moves)


def save_game(path: str | Path, env: Environment, G: GameTree, S: StrategyProfile) -> None:
    Path(path).write_text(json.dumps(game_to_dict(env, G, S), indent=2) + "\n", encoding="utf-8")


def load_game(path: str | Path) -> tuple:
    return game_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
