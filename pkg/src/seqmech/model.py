"""Environment model: players, private types, outcomes, utilities, the SCF
and an optional prior, plus the ``StateSet`` algebra used everywhere else.

Types and outcomes are addressed by their position in the input lists, so a
state is a tuple of type indices and the natural tuple order is the input
order.  Labels only matter at the I/O boundary.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

State = tuple  # tuple[int, ...], one type index per player

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


class EnvironmentError_(ValueError):
    """Raised when an environment is used before it is valid."""


class ZeroMarginalError(ValueError):
    """Conditioning on a type that has prior probability zero."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"`` (optionally signed integer over a positive integer)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"not a rational: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class StateSet:
    """An immutable, nonempty set of states with componentwise projections."""

    states: frozenset

    def __post_init__(self) -> None:
        if not isinstance(self.states, frozenset):
            object.__setattr__(self, "states", frozenset(self.states))
        if not self.states:
            raise ValueError("StateSet must be nonempty")
        widths = {len(s) for s in self.states}
        if len(widths) != 1:
            raise ValueError("states of mixed length")

    @classmethod
    def of(cls, states: Iterable[State]) -> "StateSet":
        return cls(frozenset(tuple(s) for s in states))

    @classmethod
    def product(cls, components: Iterable[Iterable[int]]) -> "StateSet":
        return cls(frozenset(itertools.product(*[sorted(c) for c in components])))

    @property
    def n_players(self) -> int:
        return len(next(iter(self.states)))

    def __contains__(self, state: object) -> bool:
        return state in self.states

    def __iter__(self) -> Iterator[State]:
        return iter(self.sorted)

    def __len__(self) -> int:
        return len(self.states)

    def __le__(self, other: "StateSet") -> bool:
        return self.states <= other.states

    def __lt__(self, other: "StateSet") -> bool:
        return self.states < other.states

    @cached_property
    def sorted(self) -> tuple:
        return tuple(sorted(self.states))

    @cached_property
    def _projections(self) -> tuple:
        return tuple(
            tuple(sorted({s[i] for s in self.states})) for i in range(self.n_players)
        )

    def projection(self, i: int) -> tuple:
        """The i-components appearing in the set, in type order."""
        return self._projections[i]

    def others(self, i: int) -> tuple:
        """Distinct profiles of the players other than ``i``, in order."""
        return tuple(sorted({s[:i] + s[i + 1:] for s in self.states}))

    def is_rectangle(self) -> bool:
        size = 1
        for comp in self._projections:
            size *= len(comp)
        return size == len(self.states)

    def rectangle_hull(self) -> "StateSet":
        return StateSet.product(self._projections)

    def restrict(self, i: int, types: Iterable[int]) -> "StateSet":
        keep = set(types)
        return StateSet(frozenset(s for s in self.states if s[i] in keep))


def with_component(rest: tuple, i: int, t: int) -> State:
    """Insert player ``i``'s type ``t`` into an opponents' profile."""
    return rest[:i] + (t,) + rest[i:]


@dataclass(frozen=True)
class Environment:
    """Players, type sets, outcomes, exact utilities, SCF and optional prior.

    ``utilities`` is keyed by ``(player, type, outcome)`` labels, ``scf`` and
    ``prior`` by tuples of type labels.  Use :func:`validate_environment` for
    diagnostics; the index-based accessors raise on an invalid environment.
    """

    players: tuple
    types: tuple  # per player, tuple of type labels
    outcomes: tuple
    utilities: Mapping = field(hash=False)
    scf: Mapping = field(hash=False)
    prior: Mapping | None = field(default=None, hash=False)
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "types", tuple(tuple(t) for t in self.types))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))

    # -- shape ---------------------------------------------------------------

    @property
    def n_players(self) -> int:
        return len(self.players)

    @cached_property
    def states(self) -> tuple:
        return tuple(itertools.product(*[range(len(t)) for t in self.types]))

    @cached_property
    def theta(self) -> StateSet:
        return StateSet(frozenset(self.states))

    def player_index(self, player: str | int) -> int:
        if isinstance(player, int):
            return player
        return self.players.index(player)

    def type_index(self, i: int, label: str) -> int:
        return self.types[i].index(label)

    def state(self, *labels: str) -> State:
        """State tuple from type labels, e.g. ``env.state("3", "1")``."""
        return tuple(self.types[i].index(str(t)) for i, t in enumerate(labels))

    def stateset(self, states: Iterable[Iterable[str]]) -> StateSet:
        return StateSet.of(self.state(*s) for s in states)

    def state_label(self, state: State) -> str:
        return "(" + ",".join(self.types[i][t] for i, t in enumerate(state)) + ")"

    def set_label(self, states: StateSet | Iterable[State]) -> str:
        ordered = states.sorted if isinstance(states, StateSet) else sorted(states)
        return "{" + " ".join(self.state_label(s) for s in ordered) + "}"

    # -- fast lookups (valid environments only) ------------------------------

    @cached_property
    def _utility_table(self) -> tuple:
        self._require_valid()
        return tuple(
            tuple(
                tuple(self.utilities[(p, t, x)] for x in self.outcomes)
                for t in self.types[i]
            )
            for i, p in enumerate(self.players)
        )

    @cached_property
    def _outcome_table(self) -> dict:
        self._require_valid()
        return {
            s: self.outcomes.index(self.scf[tuple(self.types[i][t] for i, t in enumerate(s))])
            for s in self.states
        }

    @cached_property
    def _prior_table(self) -> dict | None:
        self._require_valid()
        if self.prior is None:
            return None
        return {
            s: self.prior[tuple(self.types[i][t] for i, t in enumerate(s))]
            for s in self.states
        }

    def _require_valid(self) -> None:
        problems = validate_environment(self)
        if problems:
            raise EnvironmentError_("; ".join(problems))

    def u(self, i: int, t: int, x: int) -> Fraction:
        """Utility of player ``i`` with type index ``t`` for outcome index ``x``."""
        return self._utility_table[i][t][x]

    def f(self, state: State) -> int:
        """Outcome index chosen by the SCF at ``state``."""
        return self._outcome_table[state]

    def value(self, i: int, t: int, state: State) -> Fraction:
        """u_i^{t}[f(state)]."""
        return self._utility_table[i][t][self._outcome_table[state]]

    def mu(self, state: State) -> Fraction:
        table = self._prior_table
        if table is None:
            raise EnvironmentError_("environment has no prior")
        return table[state]

    @property
    def has_prior(self) -> bool:
        return self.prior is not None

    def outcomes_on(self, states: Iterable[State]) -> set:
        return {self.f(s) for s in states}

    def f_constant_on(self, states: Iterable[State]) -> bool:
        return len(self.outcomes_on(states)) == 1

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "players": list(self.players),
            "types": {p: list(self.types[i]) for i, p in enumerate(self.players)},
            "outcomes": list(self.outcomes),
            "utilities": {
                f"{p}|{t}|{x}": format_rational(self.utilities[(p, t, x)])
                for i, p in enumerate(self.players)
                for t in self.types[i]
                for x in self.outcomes
                if (p, t, x) in self.utilities
            },
            "scf": {",".join(k): v for k, v in self.scf.items()},
        }
        if self.prior is not None:
            doc["prior"] = {",".join(k): format_rational(v) for k, v in self.prior.items()}
        if self.name:
            doc["name"] = self.name
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Environment":
        try:
            players = [str(p) for p in doc["players"]]
            types = [[str(t) for t in doc["types"][p]] for p in players]
            outcomes = [str(x) for x in doc["outcomes"]]
            utilities = {}
            for key, val in doc["utilities"].items():
                parts = key.split("|")
                if len(parts) != 3:
                    raise ValueError(f"utilities key {key!r}: expected 'player|type|outcome'")
                utilities[tuple(parts)] = _field_rational(val, f"utilities[{key!r}]")
            scf = {tuple(k.split(",")): str(v) for k, v in doc["scf"].items()}
            prior = None
            if doc.get("prior") is not None:
                prior = {
                    tuple(k.split(",")): _field_rational(v, f"prior[{k!r}]")
                    for k, v in doc["prior"].items()
                }
        except KeyError as exc:
            raise ValueError(f"missing field {exc.args[0]!r}") from None
        return cls(players, types, outcomes, utilities, scf, prior, str(doc.get("name", "")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Environment":
        return cls.from_dict(json.loads(text))

    def with_prior(self, prior: Mapping | None) -> "Environment":
        return Environment(self.players, self.types, self.outcomes, self.utilities,
                           self.scf, prior, self.name)


def _field_rational(val, where: str) -> Fraction:
    try:
        return parse_rational(val)
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None


def load_environment(path: str | Path) -> Environment:
    return Environment.from_json(Path(path).read_text(encoding="utf-8"))


def validate_environment(env: Environment) -> list[str]:
    """One diagnostic string per violated invariant; empty when valid."""
    problems: list[str] = []
    if not env.players:
        problems.append("no players")
    if len(set(env.players)) != len(env.players):
        problems.append("duplicate player ids")
    if len(env.types) != len(env.players):
        problems.append("type sets do not match players")
        return problems
    for p, ts in zip(env.players, env.types):
        if not ts:
            problems.append(f"empty type set for player {p}")
        if len(set(ts)) != len(ts):
            problems.append(f"duplicate type labels for player {p}")
    if not env.outcomes:
        problems.append("no outcomes")
    if len(set(env.outcomes)) != len(env.outcomes):
        problems.append("duplicate outcome labels")
    if problems:
        return problems

    for p, ts in zip(env.players, env.types):
        for t in ts:
            for x in env.outcomes:
                if (p, t, x) not in env.utilities:
                    problems.append(f"missing utility for {p}|{t}|{x}")
    profiles = list(itertools.product(*env.types))
    outcome_set = set(env.outcomes)
    for prof in profiles:
        if prof not in env.scf:
            problems.append(f"scf undefined at {','.join(prof)}")
        elif env.scf[prof] not in outcome_set:
            problems.append(f"scf at {','.join(prof)} names unknown outcome {env.scf[prof]!r}")
    if env.prior is not None:
        total = Fraction(0)
        for prof in profiles:
            if prof not in env.prior:
                problems.append(f"prior undefined at {','.join(prof)}")
                continue
            w = env.prior[prof]
            if w < 0:
                problems.append(f"negative prior at {','.join(prof)}")
            total += w
        if total != 1:
            problems.append(f"prior sums to {total}, not 1")
    return problems


@dataclass(frozen=True)
class ConditionalBelief:
    player: int
    own_type: int
    weights: Mapping  # opponents' profile -> Fraction


def conditional_belief(env: Environment, i: int, t: int) -> ConditionalBelief:
    """mu conditioned on player i having type t, over opponents' profiles."""
    rests = env.theta.others(i)
    joint = {r: env.mu(with_component(r, i, t)) for r in rests}
    marginal = sum(joint.values(), Fraction(0))
    if marginal == 0:
        raise ZeroMarginalError(
            f"player {env.players[i]} type {env.types[i][t]} has zero prior marginal"
        )
    return ConditionalBelief(i, t, {r: w / marginal for r, w in joint.items()})


def projections(E: StateSet, i: int) -> tuple:
    return E.projection(i)


def is_rectangle(E: StateSet) -> bool:
    return E.is_rectangle()
