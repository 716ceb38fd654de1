import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_ta
from tacodiag.automata import OPS, Atom, make_ta
from tacodiag.errors import StateBudgetExceeded
from tacodiag.fixtures import gen_fixture
from tacodiag.regions import DELAY, ClockSpace, Region, region_graph

CLOCKS = ("x", "y", "z")
MAXC = {"x": 2, "y": 1, "z": 3}
CS = ClockSpace(CLOCKS, MAXC)

values = st.fractions(min_value=0, max_value=5, max_denominator=6)
valuations = st.fixed_dictionaries({x: values for x in CLOCKS})


def shift(v, d):
    return {x: c + d for x, c in v.items()}


@given(valuations, st.sampled_from(CLOCKS), st.sampled_from(OPS), st.integers(0, 3))
def test_region_decides_atoms(v, x, op, c):
    if c > MAXC[x]:
        return
    a = Atom(x, op, Fraction(c))
    assert CS.atom_holds(CS.region_of(v), a) == a.holds(v[x])


@given(valuations)
def test_delay_into_successor_lands_in_successor(v):
    r = CS.region_of(v)
    if r.is_unbounded():
        assert CS.time_successor(r) == r
        return
    d = CS.delay_into_successor(v, r)
    assert d > 0
    assert CS.region_of(shift(v, d)) == CS.time_successor(r)


@given(valuations, st.fractions(min_value=0, max_value=4, max_denominator=8))
def test_every_delay_passes_through_successors(v, d):
    r = CS.region_of(v)
    target = CS.region_of(shift(v, d))
    for _ in range(40):
        if r == target:
            break
        r = CS.time_successor(r)
    assert r == target


@given(valuations, st.sets(st.sampled_from(CLOCKS)))
def test_reset_commutes_with_region_of(v, reset):
    after = {x: (Fraction(0) if x in reset else c) for x, c in v.items()}
    assert CS.reset(CS.region_of(v), reset) == CS.region_of(after)


def test_describe():
    r = CS.region_of({"x": Fraction(1, 2), "y": Fraction(1), "z": Fraction(17, 4)})
    assert r.describe(CLOCKS, CS.maxc) == "0<x<1, y=1, z>3"
    r = CS.region_of({"x": Fraction(1, 3), "y": Fraction(2, 3), "z": Fraction(0)})
    assert r.describe(CLOCKS, CS.maxc) == "0<x<1, 0<y<1, z=0, {x}<{y}"


def test_zero_region():
    assert CS.zero() == Region((0, 0, 0), (frozenset({0, 1, 2}),))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_region_graph_within_bound(seed):
    model = random_ta(random.Random(seed))
    rg = region_graph(model)
    assert len(rg.states) <= rg.clock_space.size_bound(len(model.locations))
    for s, lab, t in rg.edges:
        if lab != DELAY:
            assert rg.clock_space.satisfies(rg.states[s][1], lab.guard)


def test_remark_region_graph():
    rg = region_graph(gen_fixture("REMARK").model)
    fa = rg.to_automaton()
    assert fa.kind == "FA"
    assert len(fa.locations) == len(rg.states)
    assert {lab.action for _, lab, _ in rg.edges if lab != DELAY} >= {"a", "fault"}


def test_region_graph_budget():
    m = make_ta([(0, "x<=5", "a", [], 0)], clocks=["x", "y"])
    with pytest.raises(StateBudgetExceeded) as info:
        region_graph(m, budget=3)
    assert info.value.limit == 3
