"""Codiagnoser synthesis: subset-construction diagnosers for finite automata
and an online region-based state estimator for timed automata."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .automata import TAU, Automaton, Guard, as_fraction, make_fa, scale_model
from .codiag import check_delta_codiag
from .compose import fault_tagger, fresh_clock
from .errors import InconsistentObservation, NotCodiagnosable
from .regions import ClockSpace, RegionSpace


@dataclass
class SiteDiagnoser:
    """Deterministic machine over one site's letters; ``machine.final`` holds the
    announcing states and ``subsets[q]`` the tagger locations behind state ``q``."""

    site: int
    observable: frozenset
    machine: Automaton
    subsets: list

    def step(self, q, a):
        if a not in self.observable:
            raise ValueError(f"letter {a!r} is not observable at site {self.site}")
        return self.machine.out_action(q, a)[0][1].target


def _closure(tagger: Automaton, hidden, locs):
    seen = set(locs)
    stack = list(locs)
    while stack:
        l = stack.pop()
        for _, t in tagger.out(l):
            if (t.action == TAU or t.action in hidden) and t.target not in seen:
                seen.add(t.target)
                stack.append(t.target)
    return frozenset(seen)


def _all_faulty(subset) -> bool:
    return bool(subset) and all(l[1] == 1 for l in subset)


def determinize_site(model: Automaton, observable, site: int = 1) -> SiteDiagnoser:
    """Subset construction on the fault tagger with unobservable letters
    treated as silent. A subset announces when all of its members are faulty;
    the empty subset is a rejecting sink."""
    if not model.is_fa:
        raise ValueError("subset diagnosers are built for finite automata only")
    obs = frozenset(observable)
    letters = [a for a in model.alphabet if a in obs]
    hidden = set(model.alphabet) - obs
    tagger = fault_tagger(model)
    start = _closure(tagger, hidden, [tagger.initial])
    index = {start: 0}
    order = [start]
    queue = deque([start])
    trans = []
    while queue:
        s = queue.popleft()
        for a in letters:
            post = [t.target for l in sorted(s, key=repr) for _, t in tagger.out_action(l, a)]
            nxt = _closure(tagger, hidden, post)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            trans.append((index[s], a, index[nxt]))
    final = [i for i, s in enumerate(order) if _all_faulty(s)]
    machine = make_fa(trans, initial=0, alphabet=letters, final=final, locations=range(len(order)))
    return SiteDiagnoser(site, obs, machine, order)


def synthesize_fa_codiagnoser(model: Automaton, delta, sites: Sequence) -> list[SiteDiagnoser]:
    """One diagnoser per site; refuses when the model is not codiagnosable at ``delta``."""
    verdict = check_delta_codiag(model, delta, sites)
    if not verdict.codiagnosable:
        raise NotCodiagnosable(f"not ({delta}, family)-codiagnosable; witness:\n{verdict.witness}")
    return [determinize_site(model, s, i + 1) for i, s in enumerate(sites)]


def evaluate_diagnoser(d: SiteDiagnoser, obs) -> int:
    """1 once some prefix of ``obs`` reaches an announcing state (the output is latched)."""
    q = d.machine.initial
    if q in d.machine.final:
        return 1
    for a in obs:
        q = d.step(q, a)
        if q in d.machine.final:
            return 1
    return 0


# -- timed estimator ------------------------------------------------------------

class _Window:
    """Tagger restricted to silent moves, with an extra clock bounded by ``bound``."""

    def __init__(self, tagger, hidden, wclock, bound):
        self.tagger = tagger
        self.hidden = hidden
        self.w = wclock
        self.bound = Guard.of((wclock, "<=", bound))
        self.clocks = tagger.clocks + (wclock,)
        self.initial = tagger.initial

    def invariant(self, loc):
        return self.tagger.invariant(loc) & self.bound

    def edges(self, loc):
        return [st for st in self.tagger.edges(loc) if st.action == TAU or st.action in self.hidden]


@dataclass
class EstimatorState:
    """Set of (tagger location, region) pairs consistent with the observation.

    Constants are multiplied by ``scale`` so that observed durations are integers.
    ``verdict`` is latched at 1 once every member is faulty.
    """

    tagger: Automaton
    observable: frozenset
    delta: Fraction
    scale: int
    wclock: str
    maxc: dict
    members: frozenset
    verdict: int = 0
    elapsed: Fraction = Fraction(0)
    history: list = field(default_factory=list)

    def locations(self) -> set:
        return {l for l, _ in self.members}


def estimator_start(model: Automaton, observable, delta, scale: int = 1) -> EstimatorState:
    if model.is_fa:
        raise ValueError("the estimator is for timed automata; use the subset diagnoser for FA")
    scale = int(scale)
    tagger = fault_tagger(scale_model(model, scale))
    w = fresh_clock("_w", tagger.clocks)
    maxc = tagger.max_constants()
    cs = ClockSpace(tagger.clocks + (w,), {**maxc, w: 0})
    r0 = cs.zero()
    members = frozenset({(tagger.initial, r0)}) if cs.satisfies(r0, tagger.invariant(tagger.initial)) else frozenset()
    if not members:
        raise InconsistentObservation("initial state violates its invariant")
    return EstimatorState(tagger, frozenset(observable), as_fraction(delta), scale, w, maxc, members)


def estimator_step(state: EstimatorState, event) -> tuple[EstimatorState, int]:
    """Advance by ``(duration, action)``; ``action`` may be None for a pure time tick."""
    duration, action = event
    duration = as_fraction(duration)
    if duration < 0:
        raise ValueError("durations must be non-negative")
    scaled = duration * state.scale
    if scaled.denominator != 1:
        raise ValueError(f"duration {duration} is not a multiple of 1/{state.scale}; raise the scale")
    if action is not None and action not in state.observable:
        raise ValueError(f"action {action!r} is not observable here")
    D = int(scaled)
    hidden = set(state.tagger.alphabet) - state.observable
    w = state.wclock
    window = _Window(state.tagger, hidden, w, D)
    cs = ClockSpace(window.clocks, {**state.maxc, w: D})
    space = RegionSpace(window, clock_space=cs)
    wi = cs.index[w]
    seen = set(state.members)
    queue = deque(state.members)
    while queue:
        s = queue.popleft()
        for _, t in space.successors(s):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    ready = [(l, r) for l, r in seen if r.ints[wi] == D and wi in r.classes[0]]
    nxt = set()
    for loc, r in ready:
        if action is None:
            nxt.add((loc, cs.reset(r, [w])))
            continue
        for st in state.tagger.edges(loc):
            if st.action != action or not cs.satisfies(r, st.guard):
                continue
            r2 = cs.reset(r, set(st.resets) | {w})
            if cs.satisfies(r2, state.tagger.invariant(st.target)):
                nxt.add((st.target, r2))
    if not nxt:
        raise InconsistentObservation(
            f"no run produces {action or 'silence'} after {duration} more time units"
        )
    verdict = state.verdict or int(all(l[1] == 1 for l, _ in nxt))
    new = replace(state, members=frozenset(nxt), verdict=verdict, elapsed=state.elapsed + duration,
                  history=state.history + [(duration, action)])
    return new, verdict


def estimate(model: Automaton, observable, delta, events, scale: int | None = None) -> int:
    """Run the estimator over a whole observation and return the final verdict."""
    events = [(as_fraction(d), a) for d, a in events]
    if scale is None:
        scale = lcm_of_denominators(d for d, _ in events)
    st = estimator_start(model, observable, delta, scale)
    for ev in events:
        st, _ = estimator_step(st, ev)
    return st.verdict


def lcm_of_denominators(values) -> int:
    from math import lcm

    m = 1
    for v in values:
        m = lcm(m, as_fraction(v).denominator)
    return m
