"""Finite and timed automata: model records, step semantics, runs and traces.

A finite automaton is a timed automaton without clocks. Every delay,
valuation and constant is an exact :class:`fractions.Fraction`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Iterable, Mapping, NamedTuple

from .errors import BudgetExceeded, InvariantViolation

TAU = "tau"
FAULT = "fault"
RESERVED = frozenset({TAU, FAULT})

OPS = ("<", "<=", "==", ">=", ">")
_OP_ALIASES = {"=": "==", "≤": "<=", "≥": ">="}


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True, order=True)
class Atom:
    clock: str
    op: str
    const: Fraction

    def holds(self, value: Fraction) -> bool:
        c = self.const
        if self.op == "<":
            return value < c
        if self.op == "<=":
            return value <= c
        if self.op == "==":
            return value == c
        if self.op == ">=":
            return value >= c
        return value > c

    def __str__(self):
        return f"{self.clock}{self.op}{self.const}"


_ATOM_RE = re.compile(r"^\s*([A-Za-z_][\w@.']*)\s*(<=|>=|==|=|<|>|≤|≥)\s*(-?\d+(?:\.\d+)?(?:/\d+)?)\s*$")


@dataclass(frozen=True)
class Guard:
    """A conjunction of atomic clock constraints; the empty conjunction is true."""

    atoms: tuple[Atom, ...] = ()

    def __hash__(self):
        # guards are dictionary keys in hot region loops; Fraction hashing is slow
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.atoms)
            object.__setattr__(self, "_hash", h)
        return h

    @classmethod
    def of(cls, *atoms: tuple[str, str, object]) -> "Guard":
        return cls(tuple(Atom(c, _OP_ALIASES.get(op, op), as_fraction(k)) for c, op, k in atoms))

    @classmethod
    def parse(cls, text: str) -> "Guard":
        """Parse ``"x<=1 && y>0"`` (``and`` also accepted); ``true`` or ``""`` is true."""
        text = text.strip()
        if text in ("", "true"):
            return TRUE
        atoms = []
        for part in re.split(r"&&|\band\b|∧", text):
            m = _ATOM_RE.match(part)
            if not m:
                raise ValueError(f"bad clock constraint {part.strip()!r}")
            clock, op, const = m.groups()
            atoms.append(Atom(clock, _OP_ALIASES.get(op, op), Fraction(const)))
        return cls(tuple(atoms))

    def holds(self, valuation: Mapping[str, Fraction]) -> bool:
        return all(a.holds(valuation[a.clock]) for a in self.atoms)

    def __and__(self, other: "Guard") -> "Guard":
        if not other.atoms:
            return self
        if not self.atoms:
            return other
        return Guard(self.atoms + other.atoms)

    def rename(self, mapping: Mapping[str, str]) -> "Guard":
        return Guard(tuple(Atom(mapping.get(a.clock, a.clock), a.op, a.const) for a in self.atoms))

    def scale(self, factor) -> "Guard":
        return Guard(tuple(Atom(a.clock, a.op, a.const * factor) for a in self.atoms))

    def clocks(self) -> set[str]:
        return {a.clock for a in self.atoms}

    def is_true(self) -> bool:
        return not self.atoms

    def __str__(self):
        return " && ".join(map(str, self.atoms)) if self.atoms else "true"


TRUE = Guard()


@dataclass(frozen=True)
class Transition:
    source: Hashable
    guard: Guard
    action: str
    resets: frozenset
    target: Hashable


class Step(NamedTuple):
    """One outgoing move of a (possibly composite) timed system."""

    guard: Guard
    action: str
    resets: frozenset
    target: Hashable
    info: object


@dataclass(frozen=True, eq=True)
class Automaton:
    """Finite (``kind="FA"``) or timed (``kind="TA"``) automaton.

    ``origin`` optionally maps each transition to the index of the transition
    of some base automaton it was derived from; constructions use it to turn
    product witnesses back into runs of the base model.
    """

    kind: str
    locations: tuple
    initial: Hashable
    clocks: tuple = ()
    alphabet: tuple = ()
    transitions: tuple = ()
    invariants: Mapping = field(default_factory=dict)
    final: frozenset = frozenset()
    repeated: frozenset = frozenset()
    origin: tuple | None = field(default=None, compare=False)

    __hash__ = None

    @cached_property
    def _out(self):
        out = {loc: [] for loc in self.locations}
        for i, t in enumerate(self.transitions):
            out.setdefault(t.source, []).append((i, t))
        return out

    @cached_property
    def _out_by_action(self):
        idx = {}
        for i, t in enumerate(self.transitions):
            idx.setdefault((t.source, t.action), []).append((i, t))
        return idx

    def out(self, loc) -> list[tuple[int, Transition]]:
        return self._out.get(loc, [])

    def out_action(self, loc, action) -> list[tuple[int, Transition]]:
        return self._out_by_action.get((loc, action), [])

    def invariant(self, loc) -> Guard:
        return self.invariants.get(loc, TRUE)

    def edges(self, loc) -> list[Step]:
        return [Step(t.guard, t.action, t.resets, t.target, i) for i, t in self.out(loc)]

    def max_constants(self) -> dict[str, int]:
        """Largest constant compared against each clock (ceiling, at least 0)."""
        consts = {x: 0 for x in self.clocks}
        guards = [t.guard for t in self.transitions] + list(self.invariants.values())
        for g in guards:
            for a in g.atoms:
                consts[a.clock] = max(consts.get(a.clock, 0), math.ceil(a.const))
        return consts

    @property
    def is_fa(self) -> bool:
        return self.kind == "FA"

    def replace(self, **changes) -> "Automaton":
        fields = dict(
            kind=self.kind, locations=self.locations, initial=self.initial, clocks=self.clocks,
            alphabet=self.alphabet, transitions=self.transitions, invariants=self.invariants,
            final=self.final, repeated=self.repeated, origin=self.origin,
        )
        fields.update(changes)
        return Automaton(**fields)


def make_fa(transitions, initial=None, alphabet=None, final=None, repeated=(), locations=None):
    """Build an FA from ``(source, action, target)`` triples."""
    trans = tuple(Transition(s, TRUE, a, frozenset(), t) for s, a, t in transitions)
    locs = _collect_locations(locations, initial, trans)
    if alphabet is None:
        alphabet = _collect_alphabet(trans)
    return Automaton(
        kind="FA", locations=locs, initial=locs[0] if initial is None else initial,
        alphabet=tuple(alphabet), transitions=trans,
        final=frozenset(locs if final is None else final), repeated=frozenset(repeated),
    )


def make_ta(transitions, clocks, initial=None, invariants=None, alphabet=None, final=None,
            repeated=(), locations=None):
    """Build a TA from ``(source, guard, action, resets, target)`` tuples.

    Guards and invariants may be given as strings such as ``"x<=1 && y>0"``.
    """
    trans = []
    for s, g, a, r, t in transitions:
        g = Guard.parse(g) if isinstance(g, str) else g
        trans.append(Transition(s, g, a, frozenset([r] if isinstance(r, str) else r), t))
    trans = tuple(trans)
    locs = _collect_locations(locations, initial, trans)
    invs = {}
    for loc, g in (invariants or {}).items():
        invs[loc] = Guard.parse(g) if isinstance(g, str) else g
    if alphabet is None:
        alphabet = _collect_alphabet(trans)
    return Automaton(
        kind="TA", locations=locs, initial=locs[0] if initial is None else initial,
        clocks=tuple(clocks), alphabet=tuple(alphabet), transitions=trans, invariants=invs,
        final=frozenset(locs if final is None else final), repeated=frozenset(repeated),
    )


def _collect_locations(locations, initial, trans):
    if locations is not None:
        return tuple(locations)
    seen = {} if initial is None else {initial: None}
    for t in trans:
        seen.setdefault(t.source)
        seen.setdefault(t.target)
    return tuple(seen)


def _collect_alphabet(trans):
    seen = {}
    for t in trans:
        if t.action not in RESERVED:
            seen.setdefault(t.action)
    return tuple(seen)


def validate(model: Automaton) -> list[str]:
    """Return diagnostics for every violated model invariant (empty when well formed).

    Warnings about time-blocking states are prefixed ``"warning:"``.
    """
    diags = []
    locs = set(model.locations)
    clocks = set(model.clocks)
    if model.kind not in ("FA", "TA"):
        diags.append(f"unknown kind {model.kind!r}")
    if len(locs) != len(model.locations):
        diags.append("duplicate location")
    if model.initial not in locs:
        diags.append(f"initial location {model.initial!r} undeclared")
    for a in model.alphabet:
        if a in RESERVED:
            diags.append(f"reserved action in alphabet: {a}")
    if model.kind == "FA" and model.clocks:
        diags.append("FA must have no clocks")
    for i, t in enumerate(model.transitions):
        for end in (t.source, t.target):
            if end not in locs:
                diags.append(f"transition {i}: undeclared location {end!r}")
        if t.action not in RESERVED and t.action not in model.alphabet:
            diags.append(f"transition {i}: action {t.action!r} not in alphabet")
        if model.kind == "FA":
            if t.resets:
                diags.append(f"transition {i}: FA must have no resets")
            if not t.guard.is_true():
                diags.append(f"transition {i}: FA must have no guards")
        for c in t.guard.clocks() | set(t.resets):
            if c not in clocks:
                diags.append(f"transition {i}: undeclared clock {c!r}")
        for a in t.guard.atoms:
            if a.op not in OPS:
                diags.append(f"transition {i}: bad comparison {a.op!r}")
    for loc, inv in model.invariants.items():
        if loc not in locs:
            diags.append(f"invariant on undeclared location {loc!r}")
        if model.kind == "FA" and not inv.is_true():
            diags.append(f"location {loc!r}: FA must have no invariants")
        for a in inv.atoms:
            if a.op not in ("<", "<="):
                diags.append(f"location {loc!r}: invariant must use < or <= (got {a.op})")
            if a.clock not in clocks:
                diags.append(f"location {loc!r}: undeclared clock {a.clock!r}")
    for s in (model.final, model.repeated):
        for loc in s:
            if loc not in locs:
                diags.append(f"undeclared accepting location {loc!r}")
    for loc in model.locations:
        if not model.out(loc):
            if model.kind == "FA" or not model.invariant(loc).is_true():
                diags.append(f"warning: location {loc!r} can block time")
    return diags


def add_time_loops(model: Automaton) -> Automaton:
    """Add ``tau`` self-loops on time-blocking locations (the opt-in repair pass)."""
    extra = []
    for loc in model.locations:
        if not model.out(loc) and (model.kind == "FA" or not model.invariant(loc).is_true()):
            extra.append(Transition(loc, TRUE, TAU, frozenset(), loc))
    if not extra:
        return model
    origin = None if model.origin is None else model.origin + (None,) * len(extra)
    return model.replace(transitions=model.transitions + tuple(extra), origin=origin)


# -- semantics -------------------------------------------------------------

def zero_valuation(model) -> dict[str, Fraction]:
    return {x: Fraction(0) for x in model.clocks}


def max_admissible_delay(inv: Guard, valuation) -> Fraction | None:
    """Supremum of delays keeping an upper-bound invariant true (None if unbounded)."""
    bound = None
    for a in inv.atoms:
        room = a.const - valuation[a.clock]
        bound = room if bound is None else min(bound, room)
    return None if bound is None else max(bound, Fraction(0))


def delay_successor(model, state, d):
    loc, val = state
    d = as_fraction(d)
    if d < 0:
        raise ValueError("negative delay")
    if d == 0:
        return loc, dict(val)
    moved = {x: v + d for x, v in val.items()}
    inv = model.invariant(loc)
    if not inv.holds(moved):
        raise InvariantViolation(max_admissible_delay(inv, val))
    return loc, moved


def fire(model, state, index):
    """Fire transition ``index`` from ``state``; None when it is not enabled."""
    loc, val = state
    t = model.transitions[index]
    if t.source != loc or not t.guard.holds(val):
        return None
    nval = {x: (Fraction(0) if x in t.resets else v) for x, v in val.items()}
    if not model.invariant(t.target).holds(nval):
        return None
    return t.target, nval


def discrete_successors(model, state, action):
    loc, _ = state
    result = []
    for i, _t in model.out_action(loc, action):
        nxt = fire(model, state, i)
        if nxt is not None:
            result.append((nxt, i))
    return result


# -- runs and timed words --------------------------------------------------

@dataclass(frozen=True)
class Run:
    """A run from the initial state: ``moves`` holds ``(delay, transition index)``
    pairs and ``tail`` is the final delay. FA runs have all delays zero."""

    model: Automaton = field(compare=False, hash=False, repr=False)
    moves: tuple = ()
    tail: Fraction = Fraction(0)

    def labels(self) -> list[str]:
        return [self.model.transitions[i].action for _, i in self.moves]

    def __str__(self):
        if self.model.is_fa:
            return ".".join(self.labels()) or "ε"
        parts = []
        for d, i in self.moves:
            parts += [_fmt(d), self.model.transitions[i].action]
        parts.append(_fmt(self.tail))
        return " ".join(parts)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else str(q)


@dataclass(frozen=True)
class TimedWord:
    """``letters`` holds ``(duration before letter, letter)`` pairs; ``tail`` the
    trailing duration."""

    letters: tuple = ()
    tail: Fraction = Fraction(0)

    @classmethod
    def untimed(cls, letters: Iterable[str]) -> "TimedWord":
        return cls(tuple((Fraction(0), a) for a in letters), Fraction(0))

    @classmethod
    def parse(cls, text: str) -> "TimedWord":
        """Parse ``"0.4 a 1.0 b 2.7"``; a bare letter sequence ``"a b"`` is untimed."""
        letters, pending, tail = [], Fraction(0), Fraction(0)
        for tok in text.split():
            try:
                pending += Fraction(tok)
            except ValueError:
                letters.append((pending, tok))
                pending = Fraction(0)
        tail = pending
        return cls(tuple(letters), tail)

    def duration(self) -> Fraction:
        return sum((d for d, _ in self.letters), Fraction(0)) + self.tail

    def __str__(self):
        parts = []
        for d, a in self.letters:
            parts += [_fmt(d), a]
        parts.append(_fmt(self.tail))
        return " ".join(parts)


def replay(run: Run):
    """Replay ``run`` from the initial state; return the final state or raise ValueError."""
    model = run.model
    state = (model.initial, zero_valuation(model))
    if not model.invariant(model.initial).holds(state[1]):
        raise ValueError("initial state violates invariant")
    for k, (d, i) in enumerate(run.moves):
        try:
            state = delay_successor(model, state, d)
        except InvariantViolation as exc:
            raise ValueError(f"move {k}: {exc}") from None
        nxt = fire(model, state, i)
        if nxt is None:
            raise ValueError(f"move {k}: transition {i} not enabled")
        state = nxt
    try:
        return delay_successor(model, state, run.tail)
    except InvariantViolation as exc:
        raise ValueError(f"tail: {exc}") from None


def is_valid_run(run: Run) -> bool:
    try:
        replay(run)
    except ValueError:
        return False
    return True


def trace_of(run: Run) -> TimedWord:
    letters, pending = [], Fraction(0)
    for d, i in run.moves:
        pending += d
        a = run.model.transitions[i].action
        if a not in RESERVED:
            letters.append((pending, a))
            pending = Fraction(0)
    return TimedWord(tuple(letters), pending + run.tail)


def project(word: TimedWord, sub) -> TimedWord:
    sub = set(sub)
    letters, pending = [], Fraction(0)
    for d, a in word.letters:
        pending += d
        if a in sub:
            letters.append((pending, a))
            pending = Fraction(0)
    return TimedWord(tuple(letters), pending + word.tail)


def untime(word: TimedWord) -> tuple[str, ...]:
    return tuple(a for _, a in word.letters)


def duration_of(run: Run) -> Fraction:
    if run.model.is_fa:
        return Fraction(len(run.moves))
    return sum((d for d, _ in run.moves), Fraction(0)) + run.tail


NON_FAULTY = "nonfaulty"
FAULTY = "faulty"
DELTA_FAULTY = "delta-faulty"


@dataclass(frozen=True)
class RunClass:
    status: str
    after: Fraction | None = None


def time_after_fault(run: Run) -> Fraction | None:
    """Duration of the suffix that starts at the first fault (None if no fault).

    FA: number of discrete steps after the fault step. TA: time elapsed after it.
    """
    labels = run.labels()
    try:
        k = labels.index(FAULT)
    except ValueError:
        return None
    if run.model.is_fa:
        return Fraction(len(run.moves) - k - 1)
    return sum((d for d, _ in run.moves[k + 1:]), Fraction(0)) + run.tail


def is_delta_faulty(after: Fraction | None, delta, timed: bool) -> bool:
    """FA: at least ``delta`` steps after the fault. TA: strictly more than ``delta``
    time units after the fault."""
    if after is None:
        return False
    return after > delta if timed else after >= delta


def classify_run(run: Run, delta) -> RunClass:
    after = time_after_fault(run)
    if after is None:
        return RunClass(NON_FAULTY)
    if is_delta_faulty(after, as_fraction(delta), not run.model.is_fa):
        return RunClass(DELTA_FAULTY, after)
    return RunClass(FAULTY, after)


def enumerate_runs(model: Automaton, depth: int, delay_grid=Fraction(1, 2), cap: int = 200_000,
                   max_delay=None) -> list[Run]:
    """All runs with at most ``depth`` discrete moves whose delays are multiples of
    ``delay_grid`` no larger than ``max_delay`` (default: largest constant + 1).

    Output order is deterministic; the result is closed under prefixes.
    """
    grid = as_fraction(delay_grid)
    if model.is_fa:
        delays = [Fraction(0)]
    else:
        top = as_fraction(max_delay) if max_delay is not None else max(model.max_constants().values(), default=0) + 1
        delays = [grid * k for k in range(int(top / grid) + 1)]
    runs: list[Run] = []
    init = (model.initial, zero_valuation(model))
    if not model.invariant(model.initial).holds(init[1]):
        return runs

    def admissible(state):
        for d in delays:
            try:
                yield d, delay_successor(model, state, d)
            except InvariantViolation:
                break

    def walk(state, moves):
        for d, _ in admissible(state):
            runs.append(Run(model, moves, d))
            if len(runs) > cap:
                raise BudgetExceeded("run enumeration", cap)
        if len(moves) >= depth:
            return
        for d, waited in admissible(state):
            for i, _t in model.out(state[0]):
                nxt = fire(model, waited, i)
                if nxt is not None:
                    walk(nxt, moves + ((d, i),))

    walk(init, ())
    return runs


def scale_model(model: Automaton, factor) -> Automaton:
    """Multiply every clock constant by ``factor`` (time unit change)."""
    if factor == 1:
        return model
    trans = tuple(
        Transition(t.source, t.guard.scale(factor), t.action, t.resets, t.target) for t in model.transitions
    )
    invs = {l: g.scale(factor) for l, g in model.invariants.items()}
    return model.replace(transitions=trans, invariants=invs)
