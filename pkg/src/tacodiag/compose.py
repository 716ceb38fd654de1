"""Automaton constructions: synchronized products, the Büchi counter product,
fault monitors and taggers, per-site observers, the divergence gadget and the
flagged twin-plant product used by the codiagnosability checks."""
from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

from .automata import (
    FAULT, RESERVED, TAU, TRUE, Automaton, Guard, Step, Transition, validate,
)
from .errors import AlphabetClash

BAD = "Bad"


def fresh_clock(base: str, taken) -> str:
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    return name


def rename_clocks(model: Automaton, mapping: dict) -> Automaton:
    if not mapping:
        return model
    trans = tuple(
        Transition(t.source, t.guard.rename(mapping), t.action,
                   frozenset(mapping.get(x, x) for x in t.resets), t.target)
        for t in model.transitions
    )
    invs = {loc: g.rename(mapping) for loc, g in model.invariants.items()}
    clocks = tuple(mapping.get(x, x) for x in model.clocks)
    return model.replace(transitions=trans, invariants=invs, clocks=clocks)


class LazyProduct:
    """Synchronized product computed on demand.

    Joint locations are tuples. A letter synchronizes every component whose
    alphabet contains it; ``tau``, ``fault`` and letters outside a component's
    alphabet interleave. Each joint step carries ``info``: a tuple of
    ``(component index, component step info)`` pairs for the components that
    moved. Clock sets are renamed ``x -> x@k`` when they are not disjoint.
    """

    def __init__(self, components: Sequence):
        comps = list(components)
        for c in comps:
            bad = [a for a in c.alphabet if a in RESERVED]
            if bad:
                raise AlphabetClash(f"reserved symbol {bad[0]!r} in a component alphabet")
        all_clocks = [x for c in comps for x in c.clocks]
        if len(set(all_clocks)) != len(all_clocks):
            comps = [
                rename_clocks(c, {x: f"{x}@{k}" for x in c.clocks}) if isinstance(c, Automaton) else c
                for k, c in enumerate(comps)
            ]
        self.components = comps
        self.clocks = tuple(x for c in comps for x in c.clocks)
        self.initial = tuple(c.initial for c in comps)
        alph = {}
        for c in comps:
            for a in c.alphabet:
                alph.setdefault(a)
        self.alphabet = tuple(alph)
        self._alph_sets = [set(c.alphabet) for c in comps]
        self._sync = {a: [k for k, s in enumerate(self._alph_sets) if a in s] for a in self.alphabet}
        self._cache: dict = {}
        self._inv_cache: dict = {}

    def invariant(self, loc) -> Guard:
        g = self._inv_cache.get(loc)
        if g is None:
            g = TRUE
            for c, l in zip(self.components, loc):
                g = g & c.invariant(l)
            self._inv_cache[loc] = g
        return g

    def max_constants(self) -> dict:
        m = {}
        for c in self.components:
            for x, k in c.max_constants().items():
                m[x] = max(m.get(x, 0), k)
        return m

    def edges(self, loc) -> list[Step]:
        cached = self._cache.get(loc)
        if cached is not None:
            return cached
        steps = []
        per_comp = [c.edges(l) for c, l in zip(self.components, loc)]
        for k, comp_steps in enumerate(per_comp):
            for st in comp_steps:
                if st.action in self._alph_sets[k]:
                    continue
                target = loc[:k] + (st.target,) + loc[k + 1:]
                steps.append(Step(st.guard, st.action, st.resets, target, ((k, st.info),)))
        for a in self.alphabet:
            ks = self._sync[a]
            options = [[st for st in per_comp[k] if st.action == a] for k in ks]
            if any(not o for o in options):
                continue
            for combo in _cartesian(options):
                g = TRUE
                resets = frozenset()
                target = list(loc)
                for k, st in zip(ks, combo):
                    g = g & st.guard
                    resets |= st.resets
                    target[k] = st.target
                info = tuple((k, st.info) for k, st in zip(ks, combo))
                steps.append(Step(g, a, resets, tuple(target), info))
        self._cache[loc] = steps
        return steps


def _cartesian(options):
    if not options:
        yield ()
        return
    for head in options[0]:
        for rest in _cartesian(options[1:]):
            yield (head,) + rest


def materialize(system, kind: str, final_fn=None, repeated_fn=None, alphabet=None) -> Automaton:
    """Explore the discrete location graph of a lazy system into an Automaton.

    Only locations reachable by ignoring guards are kept.
    """
    seen = {system.initial: None}
    queue = deque([system.initial])
    trans = []
    while queue:
        loc = queue.popleft()
        for st in system.edges(loc):
            trans.append(Transition(loc, st.guard, st.action, st.resets, st.target))
            if st.target not in seen:
                seen[st.target] = None
                queue.append(st.target)
    locs = tuple(seen)
    invs = {}
    for loc in locs:
        g = system.invariant(loc)
        if not g.is_true():
            invs[loc] = g
    return Automaton(
        kind=kind, locations=locs, initial=system.initial, clocks=tuple(system.clocks),
        alphabet=tuple(system.alphabet if alphabet is None else alphabet), transitions=tuple(trans),
        invariants=invs,
        final=frozenset(l for l in locs if final_fn and final_fn(l)),
        repeated=frozenset(l for l in locs if repeated_fn and repeated_fn(l)),
    )


def product(components: Sequence[Automaton]) -> Automaton:
    """Synchronized product; final locations are the tuples of final locations."""
    lp = LazyProduct(components)
    kind = "FA" if all(c.kind == "FA" for c in components) else "TA"
    return materialize(
        lp, kind,
        final_fn=lambda l: all(x in c.final for c, x in zip(lp.components, l)),
        repeated_fn=lambda l: all(x in c.repeated for c, x in zip(lp.components, l)),
    )


class CounterSystem:
    """Product with a degeneralization counter ``c`` in ``0..n``.

    From counter ``c < n`` (or ``0`` after ``n``) the counter advances when the
    target of a discrete move is repeated in the watched component; repeated
    locations are exactly those carrying ``c == n``.
    """

    def __init__(self, components: Sequence[Automaton]):
        self.inner = LazyProduct(components)
        self.n = len(components)
        self.clocks = self.inner.clocks
        self.alphabet = self.inner.alphabet
        self.initial = (self.inner.initial, 0)
        self._rep = [c.repeated for c in self.inner.components]

    def invariant(self, loc):
        return self.inner.invariant(loc[0])

    def max_constants(self):
        return self.inner.max_constants()

    def edges(self, loc):
        joint, c = loc
        base = 0 if c == self.n else c
        out = []
        for st in self.inner.edges(joint):
            nc = base + 1 if st.target[base] in self._rep[base] else base
            out.append(st._replace(target=(st.target, nc)))
        return out

    def is_repeated(self, loc) -> bool:
        return loc[1] == self.n


def buchi_counter_product(components: Sequence[Automaton]) -> Automaton:
    cs = CounterSystem(components)
    kind = "FA" if all(c.kind == "FA" for c in components) else "TA"
    return materialize(cs, kind, repeated_fn=cs.is_repeated)


def _fault_copy_flag(loc):
    return loc != BAD and loc[1] == 1


is_faulty_location = _fault_copy_flag


def fault_monitor(model: Automaton, delta) -> Automaton:
    """Monitor whose finite-word language is the set of traces of
    delta-faulty runs; its only final location is ``Bad``.

    TA: a fresh clock is reset by the first fault and ``Bad`` is entered once it
    strictly exceeds ``delta``. FA: a step counter saturating at ``delta``
    replaces the clock and ``Bad`` is entered once it reaches ``delta``.
    """
    trans, origin = [], []

    def add(s, g, a, r, t, o):
        trans.append(Transition(s, g, a, frozenset(r), t))
        origin.append(o)

    if model.is_fa:
        delta = int(delta)
        for i, t in enumerate(model.transitions):
            if t.action == FAULT:
                add((t.source, 0), TRUE, TAU, (), (t.target, 1, 0), i)
            else:
                add((t.source, 0), TRUE, t.action, (), (t.target, 0), i)
        for c in range(delta + 1):
            nc = min(c + 1, delta)
            for i, t in enumerate(model.transitions):
                a = TAU if t.action == FAULT else t.action
                add((t.source, 1, c), TRUE, a, (), (t.target, 1, nc), i)
        for loc in model.locations:
            add((loc, 1, delta), TRUE, TAU, (), BAD, None)
        locs = tuple((l, 0) for l in model.locations)
        locs += tuple((l, 1, c) for c in range(delta + 1) for l in model.locations)
        return Automaton(
            kind="FA", locations=locs + (BAD,), initial=(model.initial, 0),
            alphabet=model.alphabet, transitions=tuple(trans), final=frozenset({BAD}),
            origin=tuple(origin),
        )

    tclock = fresh_clock("_t", model.clocks)
    for i, t in enumerate(model.transitions):
        if t.action == FAULT:
            add((t.source, 0), t.guard, TAU, t.resets | {tclock}, (t.target, 1), i)
            add((t.source, 1), t.guard, TAU, t.resets, (t.target, 1), i)
        else:
            for n in (0, 1):
                add((t.source, n), t.guard, t.action, t.resets, (t.target, n), i)
    for loc in model.locations:
        add((loc, 1), Guard.of((tclock, ">", delta)), TAU, (), BAD, None)
    locs = tuple((l, n) for n in (0, 1) for l in model.locations)
    invs = {(l, n): g for l, g in model.invariants.items() for n in (0, 1)}
    return Automaton(
        kind="TA", locations=locs + (BAD,), initial=(model.initial, 0),
        clocks=model.clocks + (tclock,), alphabet=model.alphabet, transitions=tuple(trans),
        invariants=invs, final=frozenset({BAD}), origin=tuple(origin),
    )


def fault_tagger(model: Automaton, fault_clock: str | None = None) -> Automaton:
    """Two copies of ``model``; faults become ``tau`` moves into (or inside) copy 1.

    With ``fault_clock`` a fresh clock is added and reset by the first fault.
    """
    trans, origin = [], []
    extra = (fault_clock,) if fault_clock else ()
    for i, t in enumerate(model.transitions):
        if t.action == FAULT:
            trans.append(Transition((t.source, 0), t.guard, TAU, t.resets | set(extra), (t.target, 1)))
            trans.append(Transition((t.source, 1), t.guard, TAU, t.resets, (t.target, 1)))
            origin += [i, i]
        else:
            for n in (0, 1):
                trans.append(Transition((t.source, n), t.guard, t.action, t.resets, (t.target, n)))
                origin.append(i)
    locs = tuple((l, n) for n in (0, 1) for l in model.locations)
    invs = {(l, n): g for l, g in model.invariants.items() for n in (0, 1)}
    return Automaton(
        kind=model.kind, locations=locs, initial=(model.initial, 0),
        clocks=model.clocks + extra, alphabet=model.alphabet, transitions=tuple(trans),
        invariants=invs, final=frozenset(locs), origin=tuple(origin),
    )


def site_observer(model: Automaton, observable, site: int = 1) -> Automaton:
    """Observer accepting every word whose projection on ``observable`` equals the
    projection of some non-faulty trace; clocks are renamed ``x -> x@site``."""
    obs = set(observable)
    hidden = [a for a in model.alphabet if a not in obs]
    mapping = {x: f"{x}@{site}" for x in model.clocks}
    renamed = rename_clocks(model, mapping)
    trans, origin = [], []
    for i, t in enumerate(renamed.transitions):
        if t.action == FAULT:
            continue
        a = t.action if (t.action == TAU or t.action in obs) else TAU
        trans.append(Transition(t.source, t.guard, a, t.resets, t.target))
        origin.append(i)
    for loc in model.locations:
        for lam in hidden:
            trans.append(Transition(loc, TRUE, lam, frozenset(), loc))
            origin.append(None)
    return renamed.replace(
        transitions=tuple(trans), final=frozenset(model.locations), repeated=frozenset(),
        origin=tuple(origin),
    )


def divergence_automaton(clock: str = "x") -> Automaton:
    inv = Guard.of((clock, "<=", 1))
    g = Guard.of((clock, "==", 1))
    return Automaton(
        kind="TA", locations=(0, 1), initial=0, clocks=(clock,), alphabet=(),
        transitions=(
            Transition(0, g, TAU, frozenset({clock}), 1),
            Transition(1, g, TAU, frozenset({clock}), 0),
        ),
        invariants={0: inv, 1: inv}, final=frozenset(), repeated=frozenset({1}),
    )


class FlagSystem:
    """Wraps a system, pairing each location with a bit set by ``flag(step)`` on
    every discrete move (and kept by delays)."""

    def __init__(self, inner, flag: Callable[[Step], bool]):
        self.inner = inner
        self.flag = flag
        self.clocks = inner.clocks
        self.alphabet = inner.alphabet
        self.initial = (inner.initial, 0)

    def invariant(self, loc):
        return self.inner.invariant(loc[0])

    def max_constants(self):
        return self.inner.max_constants()

    def edges(self, loc):
        return [
            st._replace(target=(st.target, 1 if self.flag(st) else 0))
            for st in self.inner.edges(loc[0])
        ]


class TwinPlant(FlagSystem):
    """Tagger (component 0), optional divergence gadget (component 1), then the
    site observers, with the participation flag.

    Without the gadget the flag records that the tagger took part in the last
    move; with it, that the gadget just entered its location 1. A location is
    repeated when the tagger is faulty and the flag is set.
    """

    def __init__(self, tagger: Automaton, observers: Sequence[Automaton], div: Automaton | None = None):
        comps = [tagger] + ([div] if div is not None else []) + list(observers)
        self.product = LazyProduct(comps)
        self.has_div = div is not None
        if div is None:
            flag = lambda st: any(k == 0 for k, _ in st.info)
        else:
            flag = lambda st: any(k == 1 for k, _ in st.info) and st.target[1] == 1
        super().__init__(self.product, flag)

    def is_repeated(self, loc) -> bool:
        joint, flag = loc
        return bool(flag) and joint[0][1] == 1


def z_flag_product(tagger: Automaton, observers: Sequence[Automaton], div: Automaton | None = None) -> TwinPlant:
    return TwinPlant(tagger, observers, div)


def check_components(components) -> list[str]:
    diags = []
    for k, c in enumerate(components):
        diags += [f"component {k}: {d}" for d in validate(c) if not d.startswith("warning")]
    return diags
