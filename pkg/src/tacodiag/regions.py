"""Clock regions and reachable region-graph construction.

A region is stored canonically as the integer part of every clock (``None``
once the clock exceeds its maximal constant) plus an ordered partition of the
bounded clocks by fractional part. ``classes[0]`` holds the clocks whose
fractional part is zero (it may be empty); the remaining classes are nonempty
and sorted by increasing fractional part.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

from .automata import Atom, Automaton, Guard, TAU
from .errors import StateBudgetExceeded

DELAY = "delay"


@dataclass(frozen=True)
class Region:
    ints: tuple
    classes: tuple

    def is_unbounded(self) -> bool:
        return all(k is None for k in self.ints)

    def describe(self, clocks: Sequence[str], maxc: Sequence[int]) -> str:
        """Canonical text form, e.g. ``"0<x<1, y>1, {x}<{y}"``."""
        parts = []
        for i, x in enumerate(clocks):
            k = self.ints[i]
            if k is None:
                parts.append(f"{x}>{maxc[i]}")
            elif i in self.classes[0]:
                parts.append(f"{x}={k}")
            else:
                parts.append(f"{k}<{x}<{k + 1}")
        order = [
            "{" + ",".join(clocks[i] for i in sorted(c)) + "}"
            for c in self.classes[1:]
        ]
        if len(order) > 1:
            parts.append("<".join(order))
        return ", ".join(parts) if parts else "true"


class ClockSpace:
    """Region operations for a fixed ordered clock set with per-clock maxima."""

    def __init__(self, clocks: Sequence[str], maxc: Mapping[str, int]):
        self.clocks = tuple(clocks)
        self.index = {x: i for i, x in enumerate(self.clocks)}
        self.maxc = tuple(int(maxc.get(x, 0)) for x in self.clocks)
        self._compiled: dict = {}

    def with_max(self, clock: str, value: int) -> "ClockSpace":
        m = dict(zip(self.clocks, self.maxc))
        m[clock] = value
        return ClockSpace(self.clocks, m)

    def zero(self) -> Region:
        return Region(tuple(0 for _ in self.clocks), (frozenset(range(len(self.clocks))),))

    def region_of(self, valuation: Mapping[str, Fraction]) -> Region:
        ints, fracs = [], {}
        for i, x in enumerate(self.clocks):
            v = Fraction(valuation[x])
            if v > self.maxc[i]:
                ints.append(None)
                continue
            k = math.floor(v)
            ints.append(k)
            fracs.setdefault(v - k, set()).add(i)
        zero = frozenset(fracs.pop(Fraction(0), ()))
        rest = tuple(frozenset(fracs[f]) for f in sorted(fracs))
        return Region(tuple(ints), (zero,) + rest)

    def time_successor(self, r: Region) -> Region:
        if r.is_unbounded():
            return r
        ints = list(r.ints)
        zero = r.classes[0]
        if zero:
            moved = set()
            for i in zero:
                if ints[i] == self.maxc[i]:
                    ints[i] = None
                else:
                    moved.add(i)
            classes = (frozenset(),) + ((frozenset(moved),) if moved else ()) + r.classes[1:]
            return Region(tuple(ints), classes)
        last = r.classes[-1]
        for i in last:
            ints[i] += 1
        return Region(tuple(ints), (last,) + r.classes[1:-1])

    def reset(self, r: Region, clocks) -> Region:
        idx = {self.index[x] for x in clocks}
        if not idx:
            return r
        ints = list(r.ints)
        for i in idx:
            ints[i] = 0
        zero = frozenset(r.classes[0] | idx)
        rest = tuple(c - idx for c in r.classes[1:])
        return Region(tuple(ints), (zero,) + tuple(c for c in rest if c))

    def atom_holds(self, r: Region, a: Atom) -> bool:
        i = self.index[a.clock]
        c = a.const
        if c.denominator != 1:
            raise ValueError(f"non-integer constant in {a}; scale the model first")
        k = r.ints[i]
        if k is None:
            if c > self.maxc[i]:
                raise ValueError(f"constant in {a} exceeds maximal constant {self.maxc[i]}")
            return a.op in (">", ">=")
        if i in r.classes[0]:
            return a.holds(Fraction(k))
        # k < value < k + 1
        if a.op in ("<", "<="):
            return k < c
        if a.op == "==":
            return False
        return k >= c

    def _compile(self, g: Guard):
        """Atoms as ``(clock index, op, int constant, atom)``."""
        out = []
        for a in g.atoms:
            if a.const.denominator != 1:
                raise ValueError(f"non-integer constant in {a}; scale the model first")
            out.append((self.index[a.clock], a.op, int(a.const), a))
        return tuple(out)

    def satisfies(self, r: Region, g: Guard) -> bool:
        atoms = self._compiled.get(g)
        if atoms is None:
            atoms = self._compiled[g] = self._compile(g)
        zero = r.classes[0]
        for i, op, c, a in atoms:
            k = r.ints[i]
            if k is None:
                if c > self.maxc[i]:
                    raise ValueError(f"constant in {a} exceeds maximal constant {self.maxc[i]}")
                ok = op in (">", ">=")
            elif i in zero:
                ok = (k < c if op == "<" else k <= c if op == "<=" else k == c if op == "==" else
                      k >= c if op == ">=" else k > c)
            elif op in ("<", "<="):
                ok = k < c
            else:
                ok = op != "==" and k >= c
            if not ok:
                return False
        return True

    def interval_guard(self, r: Region, clocks: Sequence[str]) -> Guard:
        """The per-clock interval constraint containing ``r`` over ``clocks``."""
        atoms = []
        for x in clocks:
            i = self.index[x]
            k = r.ints[i]
            if k is None:
                atoms.append(Atom(x, ">", Fraction(self.maxc[i])))
            elif i in r.classes[0]:
                atoms.append(Atom(x, "==", Fraction(k)))
            else:
                atoms += [Atom(x, ">", Fraction(k)), Atom(x, "<", Fraction(k + 1))]
        return Guard(tuple(atoms))

    def delay_into_successor(self, valuation: Mapping[str, Fraction], r: Region) -> Fraction:
        """A delay taking ``valuation`` (inside ``r``) into ``time_successor(r)``."""
        bounded_pos = [
            valuation[self.clocks[i]] - r.ints[i]
            for c in r.classes[1:] for i in c
        ]
        top = max(bounded_pos, default=Fraction(0))
        if r.classes[0]:
            return (1 - top) / 2
        return 1 - top

    def size_bound(self, n_locations: int) -> int:
        """``|L| * |X|! * 2^|X| * prod(2 K_x + 2)``, a safe bound on region states."""
        n = len(self.clocks)
        prod = 1
        for k in self.maxc:
            prod *= 2 * k + 2
        return n_locations * math.factorial(n) * 2 ** n * prod


class RegionSpace:
    """On-the-fly region graph of a timed system.

    ``system`` must provide ``clocks``, ``initial``, ``invariant(loc)`` and
    ``edges(loc)`` returning :class:`~tacodiag.automata.Step` tuples; both
    :class:`Automaton` and lazy products qualify. Successors are
    ``(label, state)`` pairs where ``label`` is ``DELAY`` for a time-successor
    move and the originating step otherwise.
    """

    def __init__(self, system, maxc: Mapping[str, int] | None = None,
                 accepting: Callable[[Hashable, Region], bool] | None = None,
                 clock_space: ClockSpace | None = None):
        self.system = system
        if clock_space is None:
            if maxc is None:
                maxc = system.max_constants()
            clock_space = ClockSpace(system.clocks, maxc)
        self.cs = clock_space
        self._accepting = accepting or (lambda loc, r: False)

    def initial(self):
        r = self.cs.zero()
        loc = self.system.initial
        if self.cs.satisfies(r, self.system.invariant(loc)):
            return [(loc, r)]
        return []

    def successors(self, state):
        loc, r = state
        out = []
        cs = self.cs
        if not r.is_unbounded():
            r2 = cs.time_successor(r)
            if cs.satisfies(r2, self.system.invariant(loc)):
                out.append((DELAY, (loc, r2)))
        for step in self.system.edges(loc):
            if not cs.satisfies(r, step.guard):
                continue
            r2 = cs.reset(r, step.resets)
            if cs.satisfies(r2, self.system.invariant(step.target)):
                out.append((step, (step.target, r2)))
        return out

    def accepting(self, state) -> bool:
        return self._accepting(*state)


@dataclass
class RegionGraph:
    """Explicit reachable region graph: states ``(location, Region)``."""

    clock_space: ClockSpace
    states: list
    edges: list  # (source index, label, target index)
    initial: int | None
    final: set
    repeated: set

    def action_of(self, label) -> str:
        """Edge label as an action: delays and genuine ``tau`` moves become ``tau``."""
        if label == DELAY:
            return TAU
        return label.action

    def to_automaton(self, with_actions: bool = True) -> Automaton:
        """View as an FA over state indices; edges relabelled by their action."""
        from .automata import make_fa

        trans = [(s, self.action_of(lab) if with_actions else str(lab), t) for s, lab, t in self.edges]
        return make_fa(
            trans, initial=self.initial, locations=range(len(self.states)),
            final=self.final, repeated=self.repeated,
        ).replace(locations=tuple(range(len(self.states))))


def region_graph(model: Automaton, budget: int = 1_000_000, maxc=None) -> RegionGraph:
    """Forward reachable region graph of ``model``."""
    space = RegionSpace(model, maxc)
    index, states, edges = {}, [], []
    queue = deque()
    for s in space.initial():
        index[s] = 0
        states.append(s)
        queue.append(s)
    while queue:
        s = queue.popleft()
        si = index[s]
        for label, t in space.successors(s):
            if t not in index:
                if len(states) >= budget:
                    raise StateBudgetExceeded("region graph", budget)
                index[t] = len(states)
                states.append(t)
                queue.append(t)
            edges.append((si, label, index[t]))
    final = {i for i, (loc, _) in enumerate(states) if loc in model.final}
    repeated = {i for i, (loc, _) in enumerate(states) if loc in model.repeated}
    return RegionGraph(space.cs, states, edges, 0 if states else None, final, repeated)


def region_of(valuation: Mapping[str, Fraction], max_consts: Mapping[str, int]) -> Region:
    return ClockSpace(tuple(valuation), max_consts).region_of(valuation)


def time_successor(region: Region, max_consts: Mapping[str, int], clocks: Sequence[str]) -> Region:
    return ClockSpace(clocks, max_consts).time_successor(region)
