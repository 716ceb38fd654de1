import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import nfa_accepts, random_graph, scc_has_accepting_cycle, words
from tacodiag.automata import make_fa
from tacodiag.emptiness import (
    DiscreteSpace, ExplicitSpace, buchi_check, intersection_word, reach_check, reachable_states,
)
from tacodiag.errors import BudgetExceeded
from tacodiag.fixtures import random_dfa


def test_reach_check_shortest_path():
    succ = {0: [1, 2], 1: [3], 2: [3], 3: []}
    w = reach_check(ExplicitSpace(succ, [0], {3}))
    assert w.stem[0] == 0 and w.stem[-1] == 3 and len(w.stem) == 3
    assert not w.is_lasso
    assert reach_check(ExplicitSpace(succ, [0], {7})) is None


def test_buchi_self_loop_and_dead_end():
    assert buchi_check(ExplicitSpace({0: [0]}, [0], {0})) is not None
    assert buchi_check(ExplicitSpace({0: [1], 1: []}, [0], {0, 1})) is None
    # accepting state off the cycle
    assert buchi_check(ExplicitSpace({0: [1], 1: [2], 2: [1]}, [0], {0})) is None


def test_budget_is_an_error_not_a_verdict():
    succ = {k: [k + 1] for k in range(100)}
    succ[100] = []
    with pytest.raises(BudgetExceeded):
        reach_check(ExplicitSpace(succ, [0], {100}), budget=10)
    with pytest.raises(BudgetExceeded):
        buchi_check(ExplicitSpace(succ, [0], set()), budget=10)


def test_reachable_states_order():
    succ = {0: [2, 1], 1: [], 2: [3], 3: []}
    assert reachable_states(ExplicitSpace(succ, [0])) == [0, 2, 1, 3]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 100_000))
def test_buchi_matches_scc_oracle(seed):
    succ, init, accept = random_graph(random.Random(seed), max_states=60)
    assert (buchi_check(ExplicitSpace(succ, init, accept)) is not None) == \
        scc_has_accepting_cycle(succ, init, accept)


def test_discrete_space_over_automaton():
    fa = make_fa([(0, "a", 1), (1, "b", 0)], final=[1])
    w = reach_check(DiscreteSpace(fa, lambda loc: loc in fa.final))
    assert [st.action for st in w.stem_labels] == ["a"]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_intersection_word_is_accepted_by_both(seed):
    rng = random.Random(seed)
    dfas = [random_dfa(rng, rng.randint(1, 4), ["a", "b"]) for _ in range(2)]
    w = intersection_word(dfas)
    if w is not None:
        assert all(nfa_accepts(d, w) for d in dfas)
    else:
        assert not any(all(nfa_accepts(d, u) for d in dfas) for u in words(["a", "b"], 6))
