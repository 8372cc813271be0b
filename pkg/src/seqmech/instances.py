"""Named example environments and a seeded random generator."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .model import Environment


def env_const() -> Environment:
    """Two players, two types each, a single outcome, all utilities zero."""
    players = ["p1", "p2"]
    types = [["a1", "b1"], ["a2", "b2"]]
    utilities = {(p, t, "x0"): Fraction(0) for p, ts in zip(players, types) for t in ts}
    scf = {prof: "x0" for prof in itertools.product(*types)}
    prior = {prof: Fraction(1, 4) for prof in itertools.product(*types)}
    return Environment(players, types, ["x0"], utilities, scf, prior, "env-const")


def env_spa() -> Environment:
    """Two-bidder second-price auction with values {1, 3}; ties go to p1.

    Outcome ``wJ@P`` means bidder J wins and pays P.
    """
    players = ["p1", "p2"]
    types = [["1", "3"], ["1", "3"]]
    outcomes = ["w1@1", "w1@3", "w2@1"]
    scf = {
        ("1", "1"): "w1@1",
        ("3", "1"): "w1@1",
        ("3", "3"): "w1@3",
        ("1", "3"): "w2@1",
    }
    utilities = {}
    for idx, p in enumerate(players, start=1):
        for t in types[idx - 1]:
            for x in outcomes:
                winner, price = x[1], int(x.split("@")[1])
                gain = int(t) - price if winner == str(idx) else 0
                utilities[(p, t, x)] = Fraction(gain)
    prior = {prof: Fraction(1, 4) for prof in itertools.product(*types)}
    return Environment(players, types, outcomes, utilities, scf, prior, "env-spa")


def env_xor() -> Environment:
    """Strategyproof and max-min implementable, but every player is tempted
    to pool at the full type space, so no sequential disclosure is obvious."""
    players = ["p1", "p2"]
    types = [["0", "1"], ["0", "1"]]
    outcomes = ["x00", "x01", "x10", "x11"]
    h = Fraction(-1, 2)
    table = {
        ("p1", "0"): {"x00": 1, "x01": 0, "x10": 1, "x11": -1},
        ("p1", "1"): {"x00": h, "x01": 1, "x10": 0, "x11": 1},
        ("p2", "0"): {"x00": 1, "x01": 1, "x10": 0, "x11": -1},
        ("p2", "1"): {"x00": h, "x01": 0, "x10": 1, "x11": 1},
    }
    utilities = {(p, t, x): Fraction(v) for (p, t), row in table.items() for x, v in row.items()}
    scf = {(a, b): f"x{a}{b}" for a in "01" for b in "01"}
    prior = {prof: Fraction(1, 4) for prof in itertools.product(*types)}
    return Environment(players, types, outcomes, utilities, scf, prior, "env-xor")


BUILTIN = {"env-const": env_const, "env-spa": env_spa, "env-xor": env_xor}


def _best(utilities: dict, player: str, t: str, menu: list) -> str:
    """Top outcome of the menu for the type; ties go to the earlier outcome."""
    return max(menu, key=lambda x: (utilities[(player, t, x)], -menu.index(x)))


def random_environment(
    rng: random.Random,
    n_players: int = 2,
    type_counts: tuple | None = None,
    n_outcomes: int | None = None,
    with_prior: bool = True,
    kind: str | None = None,
) -> Environment:
    """Small random environment with rational utilities in [-2, 2].

    Utilities have denominators 1 or 2 so that ties, which matter for weak
    inequalities, occur often.  ``kind`` picks how the SCF is drawn:

    ``free``       every profile gets an arbitrary outcome
    ``dictator``   one player's favourite outcome
    ``perturbed``  a dictator rule with one profile changed
    ``menu``       one player's type selects a menu, another picks from it
    """
    players = [f"p{k + 1}" for k in range(n_players)]
    if type_counts is None:
        type_counts = tuple(rng.randint(2, 3) for _ in players)
    types = [[f"t{k}" for k in range(c)] for c in type_counts]
    profiles = list(itertools.product(*types))
    if n_outcomes is None:
        n_outcomes = rng.randint(2, min(4, len(profiles)))
    outcomes = [f"x{k}" for k in range(n_outcomes)]
    utilities = {
        (p, t, x): Fraction(rng.randint(-4, 4), 2)
        for p, ts in zip(players, types)
        for t in ts
        for x in outcomes
    }
    if kind is None:
        kind = rng.choice(["free", "free", "dictator", "perturbed", "menu", "menu"])
    order = list(range(n_players))
    rng.shuffle(order)
    lead, last = order[0], order[-1]
    if kind == "free":
        scf = {prof: rng.choice(outcomes) for prof in profiles}
    elif kind in ("dictator", "perturbed"):
        scf = {prof: _best(utilities, players[lead], prof[lead], outcomes) for prof in profiles}
        if kind == "perturbed":
            scf[rng.choice(profiles)] = rng.choice(outcomes)
    elif kind == "menu":
        menus = {t: rng.sample(outcomes, rng.randint(1, n_outcomes)) for t in types[lead]}
        scf = {
            prof: _best(utilities, players[last], prof[last], menus[prof[lead]])
            for prof in profiles
        }
    else:
        raise ValueError(f"unknown kind {kind!r}")
    prior = None
    if with_prior:
        weights = [rng.randint(0, 3) for _ in profiles]
        if sum(weights) == 0:
            weights[0] = 1
        total = sum(weights)
        prior = {prof: Fraction(w, total) for prof, w in zip(profiles, weights)}
    return Environment(players, types, outcomes, utilities, scf, prior, f"random-{kind}")
