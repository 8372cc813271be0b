import pytest

from harness import all_envs
from seqmech.canonical import check_achievable, check_consistency, iterate, operator_table
from seqmech.game import (
    check_definitional,
    check_gspc,
    check_implements,
    induced_operator,
    reach_map,
)
from seqmech.instances import env_const, env_spa, env_xor
from seqmech.model import StateSet
from seqmech.notions import NotionId
from seqmech.synthesis import (
    InequalitiesFailError,
    NotAchievableError,
    active_players,
    block_partition,
    direct_mechanism,
    inequality_table,
    synthesize_direct_mechanism,
    synthesize_disclosure_game,
)

OD, SOD = NotionId.OD, NotionId.SOD


def round_start_nodes(G):
    """Decision nodes that open a round, i.e. whose announcement prefix
    differs from the parent's."""
    out = []
    for node in G.nodes:
        if node.terminal:
            continue
        prefix = node.info_label.rsplit(">", 1)[0]
        if node.parent is None or G[node.parent].info_label.rsplit(">", 1)[0] != prefix:
            out.append(node.id)
    return out


def test_schedule_const():
    env = env_const()
    sched = active_players(OD, env)
    for s in env.states:
        assert sched.order(s) == [(0, 1)]
        assert sched.n_rounds(s) == 1


def test_schedule_spa():
    env = env_spa()
    sched = active_players(OD, env)
    assert sched.order(env.state("3", "3")) == [(1,), (0,)]
    assert {tuple(sched.order(s)) for s in env.states} == {((1,), (0,))}


def test_schedule_xor_refuses():
    with pytest.raises(NotAchievableError):
        active_players(OD, env_xor())
    with pytest.raises(NotAchievableError):
        synthesize_disclosure_game(OD, env_xor())


def test_block_partition_spa():
    env = env_spa()
    blocks = block_partition(OD, env, env.theta)
    assert blocks == {0: ((0, 1),), 1: ((0,), (1,))}


def test_const_game_is_one_round():
    env = env_const()
    G, S = synthesize_disclosure_game(OD, env)
    movers = [n.mover for n in G.nodes if not n.terminal]
    assert set(movers) == {0, 1}
    assert G.depth == 2
    assert {G[z].outcome for z in G.terminals} == {"x0"}
    assert len(G.classes) == 2  # p2 does not see p1's announcement


def test_spa_game_shape():
    env = env_spa()
    G, S = synthesize_disclosure_game(OD, env)
    assert G.root.mover == 1 and G.root.actions == ("{1}", "{3}")
    for c in G.root.children:
        assert G[c].mover == 0 and G[c].actions == ("{1}", "{3}")
    assert len(G.terminals) == 4
    assert check_definitional(OD, env, G, S).holds


def test_direct_mechanism_examples():
    spa = env_spa()
    G, S = synthesize_direct_mechanism(NotionId.WD, spa)
    assert G.depth == 2 and len(G.classes) == 2
    assert check_definitional(NotionId.WD, spa, G, S).holds
    G, S = synthesize_direct_mechanism(NotionId.PBE, spa)
    assert check_definitional(NotionId.PBE, spa, G, S).holds
    xor = env_xor()
    G, S = synthesize_direct_mechanism(NotionId.MM, xor)
    assert check_definitional(NotionId.MM, xor, G, S).holds


def test_direct_mechanism_refuses_failing_inequalities():
    with pytest.raises(InequalitiesFailError):
        synthesize_direct_mechanism(NotionId.MM, _bad_bic())
    with pytest.raises(ValueError):
        synthesize_direct_mechanism(OD, env_spa())


def _bad_bic():
    env = env_spa()
    doc = env.to_dict()
    doc["utilities"]["p1|3|w1@3"] = "-5"
    from seqmech.model import Environment
    return Environment.from_dict(doc)


def test_inequality_table_counts():
    rows = inequality_table(NotionId.WD, env_spa())
    assert len(rows) == 4 and all(r.holds for r in rows)


def test_single_type_players_are_skipped_in_direct_game():
    from seqmech.model import Environment
    from fractions import Fraction
    env = Environment(["a", "b"], [["only"], ["l", "h"]], ["x", "y"],
                      {(p, t, x): Fraction(0) for p, ts in (("a", ["only"]), ("b", ["l", "h"]))
                       for t in ts for x in ("x", "y")},
                      {("only", "l"): "x", ("only", "h"): "y"})
    G, S = direct_mechanism(env)
    assert {n.mover for n in G.nodes if not n.terminal} == {1}
    assert check_implements(env, G, S)


def _positive(nid):
    for env in all_envs():
        if check_achievable(nid, env).achievable:
            yield env


@pytest.mark.parametrize("nid", list(NotionId))
def test_synthesized_games_pass_every_check(nid):
    for env in _positive(nid):
        G, S = synthesize_disclosure_game(nid, env)
        assert check_gspc(env, G, S).ok, env.name
        assert check_implements(env, G, S), env.name
        assert check_definitional(nid, env, G, S).holds, env.name


@pytest.mark.parametrize("nid", [OD, SOD])
def test_round_reach_sets_equal_iteration_sets(nid):
    for env in _positive(nid):
        G, S = synthesize_disclosure_game(nid, env)
        reach = reach_map(env, G, S)
        table = operator_table(nid, env)
        starts = set(round_start_nodes(G))
        for theta in env.states:
            chain = iterate(nid, env, theta, table=table).chain
            z = reach.outcome_terminal[theta]
            on_path = [h for h, _ in G.paths[z] if h in starts]
            got = [reach[h] for h in on_path] + [reach[z]]
            want = [E for k, E in enumerate(chain) if k == 0 or E != chain[k - 1]]
            assert got == want, (env.name, theta)


@pytest.mark.parametrize("nid", [OD, SOD])
def test_induced_operator_is_consistent_and_achievable(nid):
    for env in _positive(nid):
        G, S = synthesize_disclosure_game(nid, env)
        op = induced_operator(env, G, S)
        assert check_consistency(nid, env, op.cell, op.belief, op.domain).consistent, env.name
        bound = check_achievable(nid, env).N * env.n_players
        for theta in env.states:
            E = env.theta
            for _ in range(bound):
                E = op.cell(E, theta)
            assert E == StateSet.of([theta]), env.name
