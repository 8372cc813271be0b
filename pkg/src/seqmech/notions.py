"""The five solution notions as executable predicates over
``(f, (gamma, E), theta, theta', i, belief)``, plus declared property flags
and sampled checks of those flags.

Each predicate answers: does player ``i`` of type ``theta_i`` weakly prefer
revealing ``theta_i`` to reporting ``theta'_i`` when she believes the
opponents' profile lies in the belief set?  Only ``theta_i``, ``theta'_i``,
the belief's opponent projection and, for SOD, the ``i``-projection of the
operator cell are read.
"""
from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .model import Environment, StateSet, with_component


class NotionId(enum.Enum):
    PBE = "PBE"
    WD = "WD"
    MM = "MM"
    OD = "OD"
    SOD = "SOD"

    @classmethod
    def parse(cls, text: str) -> "NotionId":
        key = text.strip().upper()
        aliases = {"SP": "WD", "OSP": "OD", "SOSP": "SOD", "MAXMIN": "MM"}
        return cls(aliases.get(key, key))


class MissingPriorError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class UnsupportedPropertyError(ValueError):
    pass


@dataclass(frozen=True)
class NotionContext:
    """Arguments of a notion besides the SCF and the compared states.

    ``gamma_cell`` is the operator cell of the honest state; only SOD reads it.
    """

    env: Environment
    ambient: StateSet
    belief: StateSet
    gamma_cell: StateSet | None = None


@dataclass(frozen=True)
class NotionProperties:
    regular: bool
    dissectible: bool
    normal: bool
    additive: bool
    monotonic: bool | None  # None: not declared either way


_PROPERTIES = {
    NotionId.PBE: NotionProperties(True, True, True, True, None),
    NotionId.WD: NotionProperties(True, True, True, True, None),
    NotionId.MM: NotionProperties(True, True, True, True, None),
    NotionId.OD: NotionProperties(True, True, True, False, True),
    NotionId.SOD: NotionProperties(False, True, True, False, True),
}


def properties_of(nid: NotionId) -> NotionProperties:
    return _PROPERTIES[nid]


def _column(env: Environment, i: int, own: int, report: int, rests: Iterable[tuple]) -> list:
    return [env.value(i, own, with_component(r, i, report)) for r in rests]


def _pbe_weight(env: Environment, i: int, own: int, rest: tuple, marginal: Fraction) -> Fraction:
    return env.mu(with_component(rest, i, own)) / marginal


def eval_notion(nid: NotionId, ctx: NotionContext, theta: tuple, theta_p: tuple, i: int) -> int:
    """1 when revealing ``theta[i]`` is weakly preferred to reporting
    ``theta_p[i]`` under the notion, else 0.  Exact arithmetic throughout."""
    if theta not in ctx.ambient or theta_p not in ctx.ambient:
        raise PreconditionError("compared states must lie in the ambient set")
    env = ctx.env
    own, mis = theta[i], theta_p[i]
    rests = ctx.belief.others(i)

    if nid is NotionId.PBE:
        if not env.has_prior:
            raise MissingPriorError("PBE needs a prior")
        marginal = sum(
            (env.mu(with_component(r, i, own)) for r in env.theta.others(i)), Fraction(0)
        )
        if marginal == 0:
            # conditional belief undefined; no incentive constraint binds
            return 1
        total = Fraction(0)
        for r in rests:
            gap = env.value(i, own, with_component(r, i, own)) - env.value(
                i, own, with_component(r, i, mis)
            )
            total += gap * _pbe_weight(env, i, own, r, marginal)
        return int(total >= 0)

    honest = _column(env, i, own, own, rests)
    lie = _column(env, i, own, mis, rests)
    if nid is NotionId.WD:
        return int(all(h >= d for h, d in zip(honest, lie)))
    if nid is NotionId.MM:
        return int(min(honest) >= min(lie))
    if nid is NotionId.OD:
        return int(min(honest) >= max(lie))
    if nid is NotionId.SOD:
        cell = ctx.gamma_cell
        if cell is None or theta not in cell:
            raise PreconditionError("SOD needs a gamma cell containing the honest state")
        worst = min(
            v
            for t in cell.projection(i)
            for v in _column(env, i, own, t, rests)
        )
        return int(worst >= max(lie))
    raise ValueError(f"unknown notion {nid!r}")


# -- sampled property checks -------------------------------------------------


@dataclass(frozen=True)
class PropertyCheck:
    consistent: bool
    counterexample: tuple | None = None
    cases: int = 0


def _nonempty_subsets(states: tuple) -> list:
    out = []
    for r in range(1, len(states) + 1):
        out.extend(StateSet.of(c) for c in itertools.combinations(states, r))
    return out


def _rectangles(env: Environment) -> list:
    per_player = [
        [c for r in range(1, len(ts) + 1) for c in itertools.combinations(range(len(ts)), r)]
        for ts in env.types
    ]
    return [StateSet.product(combo) for combo in itertools.product(*per_player)]


def set_partitions(items: list) -> Iterable[list]:
    """All partitions of ``items`` into nonempty blocks, blocks in first-seen order."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def _random_cell(rng: random.Random, E: StateSet, theta: tuple) -> StateSet:
    others = [s for s in E.sorted if s != theta]
    picked = [s for s in others if rng.random() < 0.5]
    return StateSet.of([theta] + picked)


def check_property_sampled(
    nid: NotionId,
    env: Environment,
    prop: str,
    samples: int = 200,
    seed: int = 0,
) -> PropertyCheck:
    """Test a declared property's defining implication on ``env``.

    Exhaustive when the domain is small, seeded random sampling otherwise.
    Dissectibility quantifies over every semi-operator and is refused.
    """
    if prop == "dissectible":
        raise UnsupportedPropertyError("dissectibility is taken as declared, not sampled")
    rng = random.Random(seed)
    players = range(env.n_players)
    cases = 0

    def ctx(E: StateSet, belief: StateSet, cell: StateSet) -> NotionContext:
        return NotionContext(env, E, belief, cell)

    if prop == "normal":
        for E in _rectangles(env):
            if not env.f_constant_on(E):
                continue
            for a, b in itertools.product(E.sorted, repeat=2):
                for i in players:
                    cases += 1
                    if eval_notion(nid, ctx(E, E, StateSet.of([a])), a, b, i) != 1:
                        return PropertyCheck(False, (E, a, b, i), cases)
        return PropertyCheck(True, None, cases)

    if prop == "monotonic":
        subsets = _nonempty_subsets(env.states)
        pairs = [(s, t) for s in subsets for t in subsets if s <= t]
        if len(pairs) > samples * 10:
            pairs = rng.sample(pairs, samples * 10)
        theta_set = env.theta
        for small, big in pairs:
            for a, b in itertools.product(env.states, repeat=2):
                for i in players:
                    cell = StateSet.of([a])
                    cases += 1
                    lo = eval_notion(nid, ctx(theta_set, small, cell), a, b, i)
                    hi = eval_notion(nid, ctx(theta_set, big, cell), a, b, i)
                    if lo == 0 and hi != 0:
                        return PropertyCheck(False, (small, big, a, b, i), cases)
        return PropertyCheck(True, None, cases)

    if prop == "additive":
        states = list(env.states)
        if len(states) <= 6:
            partitions: Iterable = set_partitions(states)
        else:
            partitions = (_random_partition(rng, states) for _ in range(samples))
        theta_set = env.theta
        for part in partitions:
            blocks = [StateSet.of(b) for b in part]
            for a, b in itertools.product(states, repeat=2):
                for i in players:
                    cell = StateSet.of([a])
                    cases += 1
                    if all(eval_notion(nid, ctx(theta_set, blk, cell), a, b, i) for blk in blocks):
                        if eval_notion(nid, ctx(theta_set, theta_set, cell), a, b, i) != 1:
                            return PropertyCheck(False, (tuple(part), a, b, i), cases)
        return PropertyCheck(True, None, cases)

    if prop == "regular":
        rects = _rectangles(env)
        for _ in range(samples):
            a, b = rng.choice(env.states), rng.choice(env.states)
            i = rng.randrange(env.n_players)
            belief = rng.choice(_nonempty_subsets(env.states))
            values = set()
            for E in rng.sample(rects, min(len(rects), 4)) + [env.theta]:
                if a not in E or b not in E:
                    continue
                cases += 1
                values.add(eval_notion(nid, ctx(E, belief, _random_cell(rng, E, a)), a, b, i))
            if len(values) > 1:
                return PropertyCheck(False, (belief, a, b, i), cases)
        return PropertyCheck(True, None, cases)

    raise UnsupportedPropertyError(f"unknown property {prop!r}")


def _random_partition(rng: random.Random, items: list) -> list:
    k = rng.randint(1, len(items))
    blocks: list = [[] for _ in range(k)]
    for x in items:
        blocks[rng.randrange(k)].append(x)
    return [b for b in blocks if b]
