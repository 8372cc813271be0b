import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from seqmech.instances import env_const, env_spa, random_environment
from seqmech.model import StateSet
from seqmech.notions import (
    MissingPriorError,
    NotionContext,
    NotionId,
    NotionProperties,
    PreconditionError,
    UnsupportedPropertyError,
    check_property_sampled,
    eval_notion,
    properties_of,
)

ALL = list(NotionId)


def ctx(env, E, belief=None, cell=None):
    return NotionContext(env, E, belief or E, cell)


@pytest.mark.parametrize("nid", ALL)
def test_constant_scf_never_tempts(nid):
    env = env_const()
    for a, b in itertools.product(env.states, repeat=2):
        for i in range(2):
            assert eval_notion(nid, ctx(env, env.theta, cell=StateSet.of([a])), a, b, i) == 1


def test_spa_obvious_dominance_at_full_space():
    env = env_spa()
    a, b = env.state("3", "3"), env.state("1", "3")
    assert eval_notion(NotionId.OD, ctx(env, env.theta), a, b, 0) == 0


def test_spa_obvious_dominance_after_p2_reveals():
    env = env_spa()
    E = env.stateset([("1", "3"), ("3", "3")])
    a, b = env.state("3", "3"), env.state("1", "3")
    assert eval_notion(NotionId.OD, ctx(env, E), a, b, 0) == 1


def test_pbe_needs_prior():
    env = env_spa().with_prior(None)
    with pytest.raises(MissingPriorError):
        eval_notion(NotionId.PBE, ctx(env, env.theta), env.states[0], env.states[1], 0)


def test_preconditions():
    env = env_spa()
    E = env.stateset([("1", "3"), ("3", "3")])
    outside = env.state("1", "1")
    with pytest.raises(PreconditionError):
        eval_notion(NotionId.OD, ctx(env, E), outside, env.state("3", "3"), 0)
    with pytest.raises(PreconditionError):
        eval_notion(NotionId.SOD, ctx(env, E), env.state("3", "3"), env.state("1", "3"), 0)


def test_declared_properties():
    assert properties_of(NotionId.OD) == NotionProperties(True, True, True, False, True)
    assert properties_of(NotionId.SOD) == NotionProperties(False, True, True, False, True)
    for nid in (NotionId.WD, NotionId.PBE, NotionId.MM):
        p = properties_of(nid)
        assert (p.regular, p.dissectible, p.normal, p.additive) == (True, True, True, True)
        assert p.monotonic is None


def test_sampled_od_monotonic_on_spa():
    assert check_property_sampled(NotionId.OD, env_spa(), "monotonic").consistent


def test_sampled_wd_additive_on_spa():
    res = check_property_sampled(NotionId.WD, env_spa(), "additive")
    assert res.consistent and res.cases > 0


@pytest.mark.parametrize("nid", ALL)
def test_sampled_normal_on_const(nid):
    assert check_property_sampled(nid, env_const(), "normal").consistent


def test_dissectible_is_not_sampled():
    with pytest.raises(UnsupportedPropertyError):
        check_property_sampled(NotionId.OD, env_spa(), "dissectible")


@pytest.mark.parametrize("seed", range(6))
def test_declared_flags_survive_sampling(seed):
    env = random_environment(random.Random(seed), type_counts=(2, 2))
    for nid in ALL:
        props = properties_of(nid)
        for name in ("normal", "additive", "monotonic", "regular"):
            if getattr(props, name):
                assert check_property_sampled(nid, env, name, samples=40, seed=seed).consistent, (nid, name)


def test_sod_at_a_singleton_cell_is_od_plus_own_column():
    env = env_spa()
    a, b = env.state("3", "3"), env.state("1", "3")
    E = env.stateset([("1", "3"), ("3", "3")])
    c = NotionContext(env, E, E, StateSet.of([a]))
    assert eval_notion(NotionId.SOD, c, a, b, 0) == eval_notion(NotionId.OD, c, a, b, 0) == 1


@st.composite
def contexts(draw):
    env = random_environment(random.Random(draw(st.integers(0, 5000))))
    states = list(env.states)
    E = StateSet.of(draw(st.lists(st.sampled_from(states), min_size=1, unique=True)))
    extra = draw(st.lists(st.sampled_from(states), unique=True))
    belief = StateSet.of(list(E.states) + extra)
    a = draw(st.sampled_from(E.sorted))
    b = draw(st.sampled_from(E.sorted))
    cell = StateSet.of([a] + draw(st.lists(st.sampled_from(E.sorted), unique=True)))
    i = draw(st.integers(0, env.n_players - 1))
    return env, NotionContext(env, E, belief, cell), a, b, i


@settings(max_examples=300)
@given(contexts())
def test_strength_chain_pointwise(case):
    env, c, a, b, i = case
    sod, od, wd, mm = (eval_notion(n, c, a, b, i) for n in
                       (NotionId.SOD, NotionId.OD, NotionId.WD, NotionId.MM))
    assert sod <= od <= wd <= mm


@settings(max_examples=200)
@given(contexts(), st.randoms())
def test_value_ignores_other_players_components(case, rnd):
    env, c, a, b, i = case
    # move the other players' components and widen belief and cell along player i
    same_a = [s for s in c.ambient.sorted if s[i] == a[i]]
    same_b = [s for s in c.ambient.sorted if s[i] == b[i]]
    a2, b2 = rnd.choice(same_a), rnd.choice(same_b)
    col = [s[:i] + (t,) + s[i + 1:] for s in c.belief.sorted for t in range(len(env.types[i]))]
    belief2 = StateSet.of(col)
    cell2 = StateSet.of([s for s in env.states if s[i] in c.gamma_cell.projection(i)])
    c2 = NotionContext(env, c.ambient, belief2, cell2)
    for nid in NotionId:
        assert eval_notion(nid, c, a, b, i) == eval_notion(nid, c2, a2, b2, i)


@settings(max_examples=200)
@given(contexts())
def test_sod_weakens_as_the_cell_grows(case):
    env, c, a, b, i = case
    wide = NotionContext(env, c.ambient, c.belief, c.ambient)
    assert eval_notion(NotionId.SOD, wide, a, b, i) <= eval_notion(NotionId.SOD, c, a, b, i)


def _constant_on(env, rect, x):
    doc = env.to_dict()
    for s in rect.sorted:
        doc["scf"][",".join(env.types[k][t] for k, t in enumerate(s))] = env.outcomes[x]
    return type(env).from_dict(doc)


@settings(max_examples=200)
@given(st.integers(0, 5000), st.data())
def test_normality_on_rectangles(seed, data):
    env = random_environment(random.Random(seed))
    sides = [data.draw(st.lists(st.sampled_from(range(len(ts))), min_size=1, unique=True))
             for ts in env.types]
    E = StateSet.product(sides)
    env = _constant_on(env, E, data.draw(st.sampled_from(range(len(env.outcomes)))))
    a = data.draw(st.sampled_from(E.sorted))
    b = data.draw(st.sampled_from(E.sorted))
    for i in range(env.n_players):
        for nid in NotionId:
            assert eval_notion(nid, NotionContext(env, E, E, StateSet.of([a])), a, b, i) == 1
