"""Implementability verdicts with re-verified certificates.

Additive notions (PBE, WD, MM) are decided by the notion's inequality
system on the full type space and certified by the direct mechanism.
Monotonic notions (OD, SOD) are decided by achievability of the canonical
operator and certified by the synthesized disclosure game.  Every positive
certificate is run through the game checkers before it is returned.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .canonical import check_achievable, tempted, operator_table
from .game import check_definitional, check_gspc, check_implements
from .model import Environment
from .notions import MissingPriorError, NotionId, properties_of
from .synthesis import (
    active_players,
    direct_mechanism,
    inequality_table,
    synthesize_disclosure_game,
)


class CrossCheckError(RuntimeError):
    """A certificate failed independent re-verification."""


class NoRouteError(ValueError):
    pass


@dataclass
class Verdict:
    notion: NotionId
    implementable: bool
    route: str  # "additive" or "monotonic"
    certificate: dict | None = None
    refutation: dict | None = None
    notes: list = field(default_factory=list)


def _additive(env: Environment, nid: NotionId) -> Verdict:
    rows = inequality_table(nid, env)
    failing = [r for r in rows if not r.holds]
    if failing:
        r = failing[0]
        return Verdict(nid, False, "additive", refutation={
            "player": env.players[r.player],
            "type": env.types[r.player][r.own],
            "report": env.types[r.player][r.report],
        })
    G, S = direct_mechanism(env)
    check = check_definitional(nid, env, G, S)
    if not (check.holds and check_implements(env, G, S)):
        raise CrossCheckError(
            f"{nid.value} inequalities hold but the direct mechanism fails: {check.counterexample}"
        )
    return Verdict(nid, True, "additive", certificate={
        "inequalities": rows, "game": (G, S),
    })


def _monotonic(env: Environment, nid: NotionId) -> Verdict:
    ach = check_achievable(nid, env)
    if not ach.achievable:
        theta = ach.counterexample
        fixed = ach.traces[theta].fixed_point
        merge = None
        for a in fixed.sorted:
            for b in fixed.sorted:
                for i in range(env.n_players):
                    if a[i] != b[i] and tempted(nid, env, fixed, operator_table(nid, env).cell(fixed, a), a, b, i):
                        merge = (env.players[i], env.state_label(a), env.state_label(b))
                        break
                if merge:
                    break
            if merge:
                break
        return Verdict(nid, False, "monotonic", refutation={
            "state": env.state_label(theta),
            "fixed_point": env.set_label(fixed),
            "merge": merge,
        })
    schedule = active_players(nid, env)
    G, S = synthesize_disclosure_game(nid, env)
    gspc = check_gspc(env, G, S)
    check = check_definitional(nid, env, G, S)
    if not (gspc.ok and check_implements(env, G, S) and check.holds):
        raise CrossCheckError(
            f"canonical {nid.value} operator is achievable but its game fails: "
            f"{gspc.detail} {check.counterexample}"
        )
    return Verdict(nid, True, "monotonic", certificate={
        "N": ach.N, "schedule": schedule, "game": (G, S), "traces": ach.traces,
    })


def decide_generic(env: Environment, nid: NotionId) -> Verdict:
    if nid is NotionId.PBE and not env.has_prior:
        raise MissingPriorError("PBE needs a prior")
    props = properties_of(nid)
    if props.additive:
        v = _additive(env, nid)
    elif props.monotonic:
        v = _monotonic(env, nid)
    else:
        raise NoRouteError(f"{nid.value} is neither additive nor monotonic")
    if nid in (NotionId.PBE, NotionId.MM):
        v.notes.append("within games with perfect recall")
    return v


def decide_sp(env: Environment) -> Verdict:
    return decide_generic(env, NotionId.WD)


def decide_pbe(env: Environment) -> Verdict:
    return decide_generic(env, NotionId.PBE)


def decide_maxmin(env: Environment) -> Verdict:
    return decide_generic(env, NotionId.MM)


def decide_osp(env: Environment) -> Verdict:
    return decide_generic(env, NotionId.OD)


def decide_sosp(env: Environment) -> Verdict:
    return decide_generic(env, NotionId.SOD)
