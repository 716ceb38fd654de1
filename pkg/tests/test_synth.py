import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from helpers import fa_compliance_violation, random_fa, random_family, random_ta
from tacodiag.automata import NON_FAULTY, classify_run, enumerate_runs, project, trace_of
from tacodiag.codiag import check_delta_codiag
from tacodiag.errors import InconsistentObservation, NotCodiagnosable
from tacodiag.fixtures import gen_fixture
from tacodiag.synth import (
    determinize_site, estimate, estimator_start, estimator_step, evaluate_diagnoser,
    lcm_of_denominators, synthesize_fa_codiagnoser,
)


def test_codiag_ok_diagnosers():
    model = gen_fixture("CODIAG-OK").model
    d1, d2 = synthesize_fa_codiagnoser(model, 1, [{"a"}, {"b"}])
    assert evaluate_diagnoser(d1, ["a"]) == 1
    assert evaluate_diagnoser(d2, []) == 0


def test_single_site_conf_announces_on_ab():
    model = gen_fixture("CONF").model
    (d,) = synthesize_fa_codiagnoser(model, 2, [{"a", "b"}])
    assert evaluate_diagnoser(d, ["a", "b"]) == 1
    assert evaluate_diagnoser(d, ["a"]) == 0


def test_refuses_when_not_codiagnosable():
    with pytest.raises(NotCodiagnosable):
        synthesize_fa_codiagnoser(gen_fixture("CONF").model, 5, [{"a"}, {"b"}])


def test_diagnoser_is_deterministic_and_complete():
    model = gen_fixture("CONF").model
    d = determinize_site(model, {"a", "b"})
    for q in d.machine.locations:
        for a in d.machine.alphabet:
            assert len(d.machine.out_action(q, a)) == 1
    with pytest.raises(ValueError):
        d.step(d.machine.initial, "zz")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 3))
def test_synthesized_diagnosers_comply(seed, delta):
    rng = random.Random(seed)
    model = random_fa(rng, max_states=4)
    fam = random_family(rng, model.alphabet)
    if not check_delta_codiag(model, delta, fam).codiagnosable:
        return
    ds = synthesize_fa_codiagnoser(model, delta, fam)
    assert fa_compliance_violation(model, delta, fam, ds, depth=2 * len(model.locations) ** len(fam)) is None


def test_remark_estimator():
    model = gen_fixture("REMARK").model
    assert estimate(model, {"a"}, 1, [(2, "a")]) == 1
    assert estimate(model, {"a"}, 1, [(3, "a")]) == 0
    with pytest.raises(InconsistentObservation):
        estimate(model, {"a"}, 1, [(Fraction(5, 2), "a")])


def test_estimator_latches_and_logs():
    model = gen_fixture("REMARK").model
    st0 = estimator_start(model, {"a"}, 1)
    st1, v = estimator_step(st0, (2, "a"))
    assert v == 1 and st1.elapsed == 2
    st2, v = estimator_step(st1, (1, None))
    assert v == 1 and st2.history == [(2, "a"), (1, None)]


def test_estimator_input_errors():
    model = gen_fixture("REMARK").model
    st0 = estimator_start(model, {"a"}, 1)
    with pytest.raises(ValueError):
        estimator_step(st0, (Fraction(1, 3), "a"))
    with pytest.raises(ValueError):
        estimator_step(st0, (1, "b"))
    with pytest.raises(ValueError):
        estimator_start(gen_fixture("CONF").model, {"a"}, 1)


def test_lcm_of_denominators():
    assert lcm_of_denominators([Fraction(1, 2), Fraction(2, 3), 4]) == 6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_estimator_is_sound_on_real_traces(seed):
    rng = random.Random(seed)
    model = random_ta(rng, max_states=3, n_clocks=1)
    obs = set(random_family(rng, model.alphabet, n_sites=1)[0])
    runs = enumerate_runs(model, 3, cap=1_000_000)
    for run in rng.sample(runs, min(15, len(runs))):
        word = project(trace_of(run), obs)
        events = list(word.letters) + [(word.tail, None)]
        # an actual observation is never inconsistent
        verdict = estimate(model, obs, 0, events, scale=2)
        if classify_run(run, 0).status == NON_FAULTY:
            assert verdict == 0
