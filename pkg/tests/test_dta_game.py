from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import timed_compliance_violation
from tacodiag.automata import FAULT, TimedWord, validate
from tacodiag.dta_game import (
    GameGraph, Resource, codiag_dta_synthesis, default_strategy, dta_output, fold, is_deterministic,
    minimal_guards, site_game, solve_safety, three_copy, tuple_fails, universal_automaton,
)
from tacodiag.errors import ResourceTooLarge
from tacodiag.fixtures import gen_fixture

REMARK_MU = Resource({"a"}, ("y",), 2, 1)


def test_resource_validation():
    with pytest.raises(ValueError):
        Resource({"a"}, ("y", "y"), 1, 1)
    with pytest.raises(ValueError):
        Resource({"a"}, ("y",), 1, 0)


def test_minimal_guard_count():
    res = Resource({"a"}, ("y", "u"), 2, 2)
    assert len(minimal_guards(res)) == (2 * 2 * 2 + 2) ** 2


@given(st.fractions(min_value=0, max_value=4, max_denominator=12),
       st.fractions(min_value=0, max_value=4, max_denominator=12))
def test_minimal_guards_partition(y, u):
    guards = minimal_guards(Resource({"a"}, ("y", "u"), 2, 2))
    assert sum(g.holds({"y": y, "u": u}) for g in guards) == 1


def test_universal_automaton_budget():
    with pytest.raises(ResourceTooLarge):
        universal_automaton(Resource({"a"}, ("y", "u"), 50, 4), budget=1000)


def test_three_copy_structure():
    model = gen_fixture("REMARK").model
    a3 = three_copy(model, 1, "_z")
    assert "_z" in a3.clocks
    assert [d for d in validate(a3) if not d.startswith("warning")] == []
    first = [t for t in a3.transitions if t.action == FAULT and t.source[1] == 1]
    assert first and all("_z" in t.resets and t.target[1] == 2 for t in first)
    with pytest.raises(ValueError):
        three_copy(gen_fixture("CONF").model, 1)


def test_safety_attractor_on_small_game():
    # round 0 -> square 0 with options to round 1 (safe) or round 2 (bad);
    # round 1 -> square 1 whose only option is round 2
    game = GameGraph(3, [None, None], [[(0, 2), (1, 1)], [(2, 2)]], [[0], [1], []], {2})
    assert solve_safety(game) is None
    game = GameGraph(3, [None, None], [[(0, 2), (1, 1)], [(2, 1)]], [[0], [1], []], {2})
    assert solve_safety(game) == {0: 1, 1: 0}


def test_remark_dta():
    (dta,) = codiag_dta_synthesis(gen_fixture("REMARK").model, 1, [REMARK_MU])
    assert is_deterministic(dta)
    assert dta_output(dta, TimedWord.parse("2 a")) == 1
    assert dta_output(dta, TimedWord.parse("3 a")) == 0
    assert dta_output(dta, TimedWord.parse("1")) == 0


def test_remark_needs_enough_clock_range():
    model = gen_fixture("REMARK").model
    assert codiag_dta_synthesis(model, 1, [Resource({"a"}, (), 0, 1)]) is None
    assert codiag_dta_synthesis(model, 1, [Resource({"a"}, ("y",), 1, 1)]) is None
    sg = site_game(model, 1, Resource({"a"}, ("y",), 1, 1))
    assert solve_safety(sg.game) is None


def test_conf_timed_tuple():
    conf = gen_fixture("CONF-TA").model
    resources = [Resource({"a"}, ("y1",), 3, 1), Resource({"b"}, ("y2",), 3, 1)]
    dtas = codiag_dta_synthesis(conf, 2, resources)
    assert dtas is not None and all(is_deterministic(d) for d in dtas)
    outputs = [lambda w, d=d: dta_output(d, w) for d in dtas]
    assert timed_compliance_violation(conf, 2, [{"a"}, {"b"}], outputs, depth=4, grid=Fraction(1, 2)) is None
    assert codiag_dta_synthesis(conf, 2, resources[:1]) is None


def test_tuple_fails_separates_winning_and_losing():
    conf = gen_fixture("CONF-TA").model
    sg = site_game(conf, 2, Resource({"b"}, ("y2",), 3, 1))
    assert not tuple_fails(conf, 2, [fold(sg, solve_safety(sg.game), "q1_")])
    remark = gen_fixture("REMARK").model
    sg = site_game(remark, 1, Resource({"a"}, ("y",), 1, 1))
    assert tuple_fails(remark, 1, [fold(sg, default_strategy(sg.game), "q1_")])


def test_resource_clocks_must_be_fresh():
    model = gen_fixture("REMARK").model
    with pytest.raises(ValueError):
        codiag_dta_synthesis(model, 1, [Resource({"a"}, ("x",), 2, 1)])
    with pytest.raises(ValueError):
        codiag_dta_synthesis(model, 1, [REMARK_MU] * 3)
