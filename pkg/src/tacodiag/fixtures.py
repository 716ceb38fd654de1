"""Named test instances and instance generators."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .automata import FAULT, TAU, Automaton, make_fa, make_ta

LAMBDA = "lam"


@dataclass
class Fixture:
    name: str
    model: Automaton | None
    family: list = field(default_factory=list)
    expected: dict = field(default_factory=dict)
    note: str = ""
    parts: list = field(default_factory=list)


def remark() -> Automaton:
    """One clock; the faulty branch reads ``a`` one time unit after the fault
    (at time 2) and the non-faulty branch reads it at time 3."""
    tick = "x==1"
    return make_ta(
        [
            ("l0", tick, FAULT, ["x"], "l1"),
            ("l1", tick, "a", ["x"], "l2"),
            ("l0", tick, TAU, ["x"], "l3"),
            ("l3", tick, TAU, ["x"], "l4"),
            ("l4", tick, "a", ["x"], "l5"),
            ("l2", "", TAU, [], "l2"),
            ("l5", "", TAU, [], "l5"),
        ],
        clocks=["x"], initial="l0",
        invariants={l: "x<=1" for l in ("l0", "l1", "l3", "l4")},
        alphabet=["a"],
    )


def remark_untimed() -> Automaton:
    return make_fa(
        [
            ("l0", FAULT, "l1"), ("l1", "a", "l2"),
            ("l0", TAU, "l3"), ("l3", TAU, "l4"), ("l4", "a", "l5"),
            ("l2", TAU, "l2"), ("l5", TAU, "l5"),
        ],
        initial="l0", alphabet=["a"],
    )


def conf() -> Automaton:
    return make_fa(
        [
            ("q0", FAULT, "f1"), ("f1", "a", "f2"), ("f2", "b", "f3"), ("f3", TAU, "f3"),
            ("q0", TAU, "p1"), ("p1", "a", "p2"), ("p2", TAU, "p2"),
            ("q0", TAU, "r1"), ("r1", "b", "r2"), ("r2", TAU, "r2"),
        ],
        initial="q0", alphabet=["a", "b"],
    )


def conf_timed() -> Automaton:
    """``conf`` with one unit of time per move, forced by an invariant."""
    fa = conf()
    return make_ta(
        [(t.source, "x==1", t.action, ["x"], t.target) for t in fa.transitions],
        clocks=["x"], initial=fa.initial,
        invariants={l: "x<=1" for l in fa.locations}, alphabet=fa.alphabet,
    )


def codiag_ok() -> Automaton:
    return make_fa(
        [
            ("q0", FAULT, "f1"), ("f1", "a", "f2"), ("f2", TAU, "f2"),
            ("q0", TAU, "p1"), ("p1", "b", "p2"), ("p2", TAU, "p2"),
        ],
        initial="q0", alphabet=["a", "b"],
    )


def random_dfa(rng: random.Random, n_states: int, alphabet, p_final: float = 0.4) -> Automaton:
    """A complete DFA over ``alphabet`` with states ``0..n_states-1``."""
    trans = [(q, a, rng.randrange(n_states)) for q in range(n_states) for a in alphabet]
    final = [q for q in range(n_states) if rng.random() < p_final]
    return make_fa(trans, initial=0, alphabet=list(alphabet), final=final,
                   locations=range(n_states))


def complete(dfa: Automaton, sink="sink") -> Automaton:
    """Add a rejecting sink so that every letter is enabled everywhere."""
    missing = [(q, a) for q in dfa.locations for a in dfa.alphabet if not dfa.out_action(q, a)]
    if not missing:
        return dfa
    trans = [(t.source, t.action, t.target) for t in dfa.transitions]
    trans += [(q, a, sink) for q, a in missing] + [(sink, a, sink) for a in dfa.alphabet]
    return make_fa(trans, initial=dfa.initial, alphabet=dfa.alphabet, final=dfa.final,
                   locations=tuple(dfa.locations) + (sink,))


def kozen_chain(dfas) -> list[Automaton]:
    """Append a fresh letter after accepting states into a new sink ``bot``.

    Only the first result keeps a proper final set (``{bot}``); all states of
    the others are final. The intersection is nonempty exactly when the
    intersection of the inputs is, and every common word ends with the new
    letter.
    """
    out = []
    for k, d in enumerate(dfas):
        trans = [(t.source, t.action, t.target) for t in d.transitions]
        trans += [(q, LAMBDA, "bot") for q in sorted(d.final, key=repr)]
        locs = tuple(d.locations) + ("bot",)
        out.append(make_fa(
            trans, initial=d.initial, alphabet=tuple(d.alphabet) + (LAMBDA,),
            final=["bot"] if k == 0 else locs, locations=locs,
        ))
    return out


def reduction_b(dfas) -> tuple[Automaton, list]:
    """Automaton whose (1, family)-codiagnosability is equivalent to the
    emptiness of the intersection of ``dfas`` (at least two, same alphabet).

    From a fresh initial location a silent move enters a copy of the first
    DFA, whose accepting states may take a fault followed by a fresh letter.
    For every other DFA a fresh letter ``a{i}`` enters a copy extended as in
    :func:`kozen_chain`. Site 1 observes the DFA letters; site ``i`` observes
    everything except ``a{i}``.
    """
    if len(dfas) < 2:
        raise ValueError("the reduction needs at least two automata")
    dfas = [complete(d) for d in dfas]
    sigma = list(dfas[0].alphabet)
    if any(set(d.alphabet) != set(sigma) for d in dfas):
        raise ValueError("all automata must share one alphabet")
    tags = [f"a{i}" for i in range(2, len(dfas) + 1)]
    trans = [("init", TAU, ("A1", dfas[0].initial))]
    for t in dfas[0].transitions:
        trans.append((("A1", t.source), t.action, ("A1", t.target)))
    for q in sorted(dfas[0].final, key=repr):
        trans.append((("A1", q), FAULT, "e1"))
    trans += [("e1", LAMBDA, "e"), ("e", TAU, "e")]
    for i, d in enumerate(dfas[1:], start=2):
        name = f"A{i}"
        trans.append(("init", f"a{i}", (name, d.initial)))
        for t in d.transitions:
            trans.append(((name, t.source), t.action, (name, t.target)))
        for q in sorted(d.final, key=repr):
            trans.append(((name, q), LAMBDA, (name, "bot")))
    alphabet = sigma + [LAMBDA] + tags
    model = make_fa(trans, initial="init", alphabet=alphabet)
    family = [set(sigma)] + [set(alphabet) - {f"a{i}"} for i in range(2, len(dfas) + 1)]
    return model, family


def parse_name(name: str):
    """Split ``"KOZEN-CHAIN(3)"`` into ``("KOZEN-CHAIN", 3)``."""
    name = name.strip().upper()
    if "(" in name and name.endswith(")"):
        base, arg = name[:-1].split("(", 1)
        return base, int(arg)
    return name, None


def gen_fixture(name: str, dfas=None, seed: int = 0) -> Fixture:
    base, arg = parse_name(name)
    if base == "REMARK":
        return Fixture("REMARK", remark(), [{"a"}], {"delta": 1, "check-delta": "Codiagnosable"},
                       "announces on 2 a, silent on 3 a")
    if base == "REMARK-U":
        return Fixture("REMARK-U", remark_untimed(), [{"a"}], {"check": "NotCodiagnosable"},
                       "f.a and tau.tau.a look alike")
    if base == "CONF":
        return Fixture("CONF", conf(), [{"a"}, {"b"}], {"check": "NotCodiagnosable"},
                       "one site alone (a,b) is codiagnosable with delay 2")
    if base == "CONF-TA":
        return Fixture("CONF-TA", conf_timed(), [{"a"}, {"b"}], {"delta": 2},
                       "unit-time version of CONF")
    if base == "CODIAG-OK":
        return Fixture("CODIAG-OK", codiag_ok(), [{"a"}, {"b"}],
                       {"check": "Codiagnosable", "optimal-delay": 1})
    if base in ("KOZEN-CHAIN", "REDUCTION-B"):
        k = arg if arg is not None else (len(dfas) if dfas else 2)
        if dfas is None:
            rng = random.Random(seed)
            dfas = [random_dfa(rng, rng.randint(1, 4), ["a", "b"]) for _ in range(k)]
        if base == "KOZEN-CHAIN":
            return Fixture(f"KOZEN-CHAIN({len(dfas)})", None, parts=kozen_chain(dfas))
        model, family = reduction_b(dfas)
        return Fixture(f"REDUCTION-B({len(dfas)})", model, family, {"delta": 1}, parts=list(dfas))
    raise ValueError(f"unknown fixture {name!r}")


FIXTURE_NAMES = ("REMARK", "REMARK-U", "CONF", "CONF-TA", "CODIAG-OK", "KOZEN-CHAIN", "REDUCTION-B")
