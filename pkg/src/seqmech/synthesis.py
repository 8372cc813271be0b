"""Mechanism construction.

``synthesize_disclosure_game`` turns an achievable canonical operator into a
round-based game: in each round the players whose canonical partition of
the current cell is non-trivial announce the block holding their type, in
input player order, without seeing each other's announcements that round.
The next cell is the set of states compatible with the announcements.

``synthesize_direct_mechanism`` builds the one-round game where everyone
announces a full type at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .canonical import check_achievable, operator_table
from .game import GameTree, StrategyProfile
from .model import Environment, StateSet
from .notions import NotionContext, NotionId, eval_notion, properties_of


class NotAchievableError(ValueError):
    pass


class NonRectangularCellError(ValueError):
    pass


class InequalitiesFailError(ValueError):
    pass


@dataclass
class Round:
    cell: StateSet  # the cell at the start of the round
    active: tuple  # player indices, in move order
    blocks: dict  # player -> tuple of blocks (tuples of type indices)


@dataclass
class DisclosureSchedule:
    """Per state, the rounds it passes through until its cell is a singleton."""

    rounds: dict = field(default_factory=dict)  # state -> list[Round]

    def n_rounds(self, theta: tuple) -> int:
        return sum(1 for r in self.rounds[theta] if r.active)

    def order(self, theta: tuple) -> list:
        return [r.active for r in self.rounds[theta] if r.active]


def block_partition(nid: NotionId, env: Environment, E: StateSet) -> dict:
    """Each player's partition of ``E_i`` into canonical cell projections.

    Raises when a cell is not a product set or the projections overlap, as
    an announcement could then not describe the cell.
    """
    table = operator_table(nid, env)
    blocks = {i: set() for i in range(env.n_players)}
    for theta in E.sorted:
        cell = table.cell(E, theta)
        if not cell.is_rectangle():
            raise NonRectangularCellError(
                f"cell of {env.state_label(theta)} in {env.set_label(E)} is not a product set"
            )
        for i in range(env.n_players):
            blocks[i].add(cell.projection(i))
    out = {}
    for i, found in blocks.items():
        seen: set = set()
        for b in found:
            if seen & set(b):
                raise NonRectangularCellError(
                    f"overlapping announcements for player {env.players[i]} in {env.set_label(E)}"
                )
            seen |= set(b)
        out[i] = tuple(sorted(found))
    return out


def active_players(nid: NotionId, env: Environment) -> DisclosureSchedule:
    ach = check_achievable(nid, env)
    if not ach.achievable:
        raise NotAchievableError(
            f"canonical {nid.value} operator is not achievable "
            f"(fixed point at {env.state_label(ach.counterexample)})"
        )
    schedule = DisclosureSchedule()
    for theta, trace in ach.traces.items():
        rounds = []
        for E in trace.chain:
            if len(E) == 1:
                break
            blocks = block_partition(nid, env, E)
            active = tuple(i for i in range(env.n_players) if len(blocks[i]) >= 2)
            rounds.append(Round(E, active, blocks))
        if not rounds:
            # a singleton type space: nothing to disclose
            rounds.append(Round(trace.chain[0], (), {}))
        schedule.rounds[theta] = rounds
    return schedule


def _block_label(env: Environment, i: int, block: tuple) -> str:
    return "{" + ",".join(env.types[i][t] for t in block) + "}"


def synthesize_disclosure_game(nid: NotionId, env: Environment) -> tuple:
    """``(G, S)`` implementing ``f`` by canonical disclosure rounds."""
    ach = check_achievable(nid, env)
    if not ach.achievable:
        raise NotAchievableError(
            f"canonical {nid.value} operator is not achievable "
            f"(fixed point at {env.state_label(ach.counterexample)})"
        )
    table = operator_table(nid, env)
    label_info: dict = {}  # (player, label) -> {type index: action}

    def leaf(E: StateSet) -> dict:
        return {"outcome": env.outcomes[env.f(E.sorted[0])]}

    def build(E: StateSet, prefix: str) -> dict:
        if len(E) == 1:
            return leaf(E)
        blocks = block_partition(nid, env, E)
        active = [i for i in range(env.n_players) if len(blocks[i]) >= 2]
        if not active:
            raise NotAchievableError(f"no player can split {env.set_label(E)}")
        labels = {}
        for i in active:
            lab = f"{prefix or 'start'}>{env.players[i]}"
            labels[i] = lab
            label_info[(i, lab)] = {
                t: _block_label(env, i, b) for b in blocks[i] for t in b
            }

        def announce(k: int, chosen: dict) -> dict:
            if k == len(active):
                nxt = StateSet(frozenset(
                    s for s in E.states if all(s[i] in chosen[i] for i in active)
                ))
                for s in nxt.sorted:
                    if table.cell(E, s) != nxt:
                        raise NonRectangularCellError(
                            f"announcements in {env.set_label(E)} do not match the canonical cell"
                        )
                tail = ";".join(
                    f"{env.players[i]}={_block_label(env, i, chosen[i])}" for i in active
                )
                return build(nxt, f"{prefix};{tail}" if prefix else tail)
            i = active[k]
            return {
                "mover": i,
                "label": labels[i],
                "moves": [
                    (_block_label(env, i, b), announce(k + 1, {**chosen, i: b}))
                    for b in blocks[i]
                ],
            }

        return announce(0, {})

    root = env.theta
    if len(root) == 1:
        spec = {"mover": 0, "label": "start>" + env.players[0], "moves": [("go", leaf(root))]}
        label_info[(0, spec["label"])] = {0: "go"}
    else:
        spec = build(root, "")
    G = GameTree.from_nested(spec, env.n_players)
    return G, _strategy_from(env, G, label_info)


def _strategy_from(env: Environment, G: GameTree, label_info: dict) -> StrategyProfile:
    moves = {}
    for i in range(env.n_players):
        for t in range(len(env.types[i])):
            beh = {}
            for lab in G.labels_of(i):
                known = label_info[(i, lab)]
                beh[lab] = known.get(t, G.actions_at(i, lab)[0])
            moves[(i, t)] = beh
    return StrategyProfile(moves)


def direct_mechanism(env: Environment) -> tuple:
    """Everyone announces a type in one round; nobody sees the others' reports."""
    movers = [i for i in range(env.n_players) if len(env.types[i]) >= 2]

    def announce(k: int, report: dict) -> dict:
        if k == len(movers):
            theta = tuple(report.get(i, 0) for i in range(env.n_players))
            return {"outcome": env.outcomes[env.f(theta)]}
        i = movers[k]
        return {
            "mover": i,
            "label": f"direct>{env.players[i]}",
            "moves": [(tl, announce(k + 1, {**report, i: t})) for t, tl in enumerate(env.types[i])],
        }

    if movers:
        spec = announce(0, {})
    else:
        spec = {"mover": 0, "label": f"direct>{env.players[0]}",
                "moves": [("go", announce(0, {}))]}
    G = GameTree.from_nested(spec, env.n_players)
    moves = {}
    for i in range(env.n_players):
        for t, tl in enumerate(env.types[i]):
            lab = f"direct>{env.players[i]}"
            if i in movers:
                moves[(i, t)] = {lab: tl}
            elif not movers and i == 0:
                moves[(i, t)] = {lab: "go"}
            else:
                moves[(i, t)] = {}
    return G, StrategyProfile(moves)


@dataclass(frozen=True)
class Inequality:
    player: int
    own: int
    report: int
    holds: bool


def inequality_table(nid: NotionId, env: Environment) -> list:
    """The notion at ambient and belief equal to the full type space, for
    every player, true type and misreport."""
    theta = env.theta
    rows = []
    for i in range(env.n_players):
        base = env.states[0]
        for own in range(len(env.types[i])):
            for rep in range(len(env.types[i])):
                if own == rep:
                    continue
                a = base[:i] + (own,) + base[i + 1:]
                b = base[:i] + (rep,) + base[i + 1:]
                ctx = NotionContext(env, theta, theta, StateSet.of([a]))
                rows.append(Inequality(i, own, rep, eval_notion(nid, ctx, a, b, i) == 1))
    return rows


def synthesize_direct_mechanism(nid: NotionId, env: Environment) -> tuple:
    if not properties_of(nid).additive:
        raise ValueError(f"{nid.value} is not additive; use the disclosure construction")
    failing = [r for r in inequality_table(nid, env) if not r.holds]
    if failing:
        r = failing[0]
        raise InequalitiesFailError(
            f"player {env.players[r.player]} of type {env.types[r.player][r.own]} "
            f"gains by reporting {env.types[r.player][r.report]}"
        )
    return direct_mechanism(env)
