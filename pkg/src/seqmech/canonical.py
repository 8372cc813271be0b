"""Canonical bundling operator built from the temptation relation, its
iteration from the full type space, achievability, and consistency checks.

For a set ``E`` every state starts in its own stage-1 class.  A stage grows
by adding every ``theta'`` that some current member is similar to for all
players at once, where two states are similar for ``i`` when they agree on
``i``'s type or one of them is tempted to report the other's type.  The cell
is the limit of this growth.  For SOD the temptation test at stage ``n``
reads the honest state's stage-``n`` class, so all classes of ``E`` are
grown together and each round reads a snapshot of the previous one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .model import Environment, StateSet
from .notions import NotionContext, NotionId, eval_notion


class IterationLimitError(RuntimeError):
    """The iteration failed to stabilize within the declared bound."""


def tempted(
    nid: NotionId,
    env: Environment,
    E: StateSet,
    stage_cell: StateSet | None,
    theta: tuple,
    theta_p: tuple,
    i: int,
) -> bool:
    """True iff ``theta`` prefers to report ``theta_p[i]`` at ``E`` with belief ``E``.

    ``stage_cell`` is the current class of ``theta`` (read only by SOD).
    """
    ctx = NotionContext(env, E, E, stage_cell)
    return eval_notion(nid, ctx, theta, theta_p, i) == 0


def similar(
    nid: NotionId,
    env: Environment,
    E: StateSet,
    stages: dict | None,
    theta: tuple,
    theta_p: tuple,
    i: int,
) -> bool:
    if theta[i] == theta_p[i]:
        return True
    a = stages.get(theta) if stages else None
    b = stages.get(theta_p) if stages else None
    return tempted(nid, env, E, a, theta, theta_p, i) or tempted(
        nid, env, E, b, theta_p, theta, i
    )


@dataclass
class CellComputation:
    """Stage history of every class in one ambient set."""

    E: StateSet
    stages: list  # list of dict state -> StateSet, stages[0] is stage 1

    @property
    def cells(self) -> dict:
        return self.stages[-1]


def _grow(nid: NotionId, env: Environment, E: StateSet) -> CellComputation:
    members = E.sorted
    current = {s: StateSet.of([s]) for s in members}
    history = [current]
    n_players = env.n_players
    sod = nid is NotionId.SOD
    # for the stage-free notions the relation is fixed: cache it once
    cache: dict = {}

    def sim(a: tuple, b: tuple, i: int, snap: dict) -> bool:
        if a[i] == b[i]:
            return True
        if not sod:
            key = (a[i], b[i], i) if a[i] < b[i] else (b[i], a[i], i)
            hit = cache.get(key)
            if hit is None:
                hit = similar(nid, env, E, None, a, b, i)
                cache[key] = hit
            return hit
        return similar(nid, env, E, snap, a, b, i)

    for _ in range(len(members) + 2):
        snap = current
        nxt = {}
        for s in members:
            grown = set(snap[s].states)
            for t in snap[s].states:
                for c in members:
                    if c in grown:
                        continue
                    if all(sim(t, c, i, snap) for i in range(n_players)):
                        grown.add(c)
            nxt[s] = StateSet(frozenset(grown))
        if nxt == snap:
            return CellComputation(E, history)
        history.append(nxt)
        current = nxt
    raise IterationLimitError("stage growth did not stabilize")


class OperatorTable:
    """Memoized canonical operator for one (notion, environment) pair."""

    def __init__(self, nid: NotionId, env: Environment) -> None:
        self.notion = nid
        self.env = env
        self._by_set: dict = {}

    def computation(self, E: StateSet) -> CellComputation:
        comp = self._by_set.get(E)
        if comp is None:
            comp = _grow(self.notion, self.env, E)
            self._by_set[E] = comp
        return comp

    def cell(self, E: StateSet, theta: tuple) -> StateSet:
        if theta not in E:
            return E
        return self.computation(E).cells[theta]

    def stage(self, E: StateSet, theta: tuple, n: int) -> StateSet:
        """Stage ``n`` (1-based) class of ``theta``; constant past stabilization."""
        if theta not in E:
            return E
        stages = self.computation(E).stages
        return stages[min(n, len(stages)) - 1][theta]

    def n_stages(self, E: StateSet) -> int:
        return len(self.computation(E).stages)

    def touched(self) -> list:
        return list(self._by_set)

    def non_rectangular_cells(self) -> list:
        """``(E, cell)`` pairs whose cell is not a product set."""
        out = []
        for E, comp in self._by_set.items():
            for c in set(comp.cells.values()):
                if not c.is_rectangle():
                    out.append((E, c))
        return out


_TABLES: dict = {}


def operator_table(nid: NotionId, env: Environment) -> OperatorTable:
    key = (nid, id(env))
    tab = _TABLES.get(key)
    if tab is None or tab.env is not env:
        tab = OperatorTable(nid, env)
        _TABLES[key] = tab
        if len(_TABLES) > 256:
            _TABLES.pop(next(iter(_TABLES)))
    return tab


def canonical_cell(nid: NotionId, env: Environment, E: StateSet, theta: tuple) -> StateSet:
    return operator_table(nid, env).cell(E, theta)


@dataclass
class IterationTrace:
    theta: tuple
    chain: list  # E_0 = Theta, E_1, ..., ending at the first repeat
    fixed_point_round: int

    @property
    def fixed_point(self) -> StateSet:
        return self.chain[self.fixed_point_round]


def iterate(
    nid: NotionId,
    env: Environment,
    theta: tuple,
    max_rounds: int | None = None,
    table: OperatorTable | None = None,
    start: StateSet | None = None,
) -> IterationTrace:
    table = table or operator_table(nid, env)
    E = start or env.theta
    limit = max_rounds if max_rounds is not None else len(env.states) + 1
    if limit < 1:
        raise ValueError("max_rounds must be at least 1")
    chain = [E]
    for n in range(1, limit + 1):
        nxt = table.cell(chain[-1], theta)
        chain.append(nxt)
        if n >= 2 and chain[-1] == chain[-2]:
            chain.pop()
            return IterationTrace(theta, chain, n - 1)
    # one more application decides whether the last set is fixed
    if table.cell(chain[-1], theta) == chain[-1]:
        return IterationTrace(theta, chain, len(chain) - 1)
    raise IterationLimitError(f"iteration for {theta} exceeded {limit} rounds")


@dataclass
class Achievability:
    achievable: bool
    N: int | None
    traces: dict = field(default_factory=dict)
    counterexample: tuple | None = None  # a state whose fixed point is not a singleton


def check_achievable(nid: NotionId, env: Environment) -> Achievability:
    table = operator_table(nid, env)
    traces = {s: iterate(nid, env, s, table=table) for s in env.states}
    bad = [s for s, tr in traces.items() if len(tr.fixed_point) != 1]
    if bad:
        return Achievability(False, None, traces, bad[0])
    return Achievability(True, max(tr.fixed_point_round for tr in traces.values()), traces)


def check_f_achievable(nid: NotionId, env: Environment) -> bool:
    table = operator_table(nid, env)
    for s in env.states:
        tr = iterate(nid, env, s, table=table)
        if env.outcomes_on(tr.fixed_point) != {env.f(s)}:
            return False
    return True


@dataclass
class ConsistencyVerdict:
    consistent: bool
    violation: tuple | None = None  # (E, theta, theta', i)


def check_consistency(
    nid: NotionId,
    env: Environment,
    cell_of: Callable[[StateSet, tuple], StateSet],
    belief_of: Callable[[StateSet], StateSet],
    domain: Iterable[StateSet],
) -> ConsistencyVerdict:
    """Whenever separating ``theta'`` from ``theta`` fails the notion at
    belief ``belief_of(E)``, the operator must keep ``theta'[i]`` in the
    ``i``-projection of ``theta``'s cell."""
    for E in domain:
        belief = belief_of(E)
        for theta in E.sorted:
            cell = cell_of(E, theta)
            for theta_p in E.sorted:
                for i in range(env.n_players):
                    if theta_p[i] in cell.projection(i):
                        continue
                    ctx = NotionContext(env, E, belief, cell)
                    if eval_notion(nid, ctx, theta, theta_p, i) == 0:
                        return ConsistencyVerdict(False, (E, theta, theta_p, i))
    return ConsistencyVerdict(True)


def trace_lines(env: Environment, trace: IterationTrace) -> list:
    """``theta | n | E_n`` lines for a trace dump."""
    return [
        f"{env.state_label(trace.theta)} | {n} | {env.set_label(E)}"
        for n, E in enumerate(trace.chain)
    ]
