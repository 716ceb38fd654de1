"""Reachability and Büchi emptiness over on-the-fly search spaces.

A search space is any object with ``initial()`` (iterable of states),
``successors(state)`` (iterable of ``(label, state)`` pairs, in a fixed
order) and ``accepting(state)``. States must be hashable and canonical.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Protocol

from .errors import BudgetExceeded

DEFAULT_NODE_BUDGET = 10_000_000


class SearchSpace(Protocol):
    def initial(self): ...
    def successors(self, state): ...
    def accepting(self, state) -> bool: ...


@dataclass
class Witness:
    """A path from an initial state. ``stem[0]`` is initial and
    ``stem_labels[k]`` leads from ``stem[k]`` to ``stem[k + 1]``. For Büchi
    witnesses ``cycle`` starts and ends at ``stem[-1]``."""

    stem: list
    stem_labels: list
    cycle: list | None = None
    cycle_labels: list | None = None
    explored: int = 0

    @property
    def is_lasso(self) -> bool:
        return self.cycle is not None


@dataclass
class ExplicitSpace:
    """An explicit graph given as adjacency lists; labels are edge positions."""

    succ: dict
    init: list
    accept: set = field(default_factory=set)

    def initial(self):
        return list(self.init)

    def successors(self, state):
        return [(k, t) for k, t in enumerate(self.succ.get(state, ()))]

    def accepting(self, state):
        return state in self.accept


class _Budget:
    def __init__(self, nodes, seconds, stats=None):
        self.nodes = nodes
        self.seconds = seconds
        self.stats = stats if stats is not None else {}
        self.count = 0
        self.start = time.monotonic()

    def tick(self):
        self.count += 1
        self.stats["explored"] = self.count
        if self.count > self.nodes:
            raise BudgetExceeded("node", self.nodes)
        if self.seconds is not None and self.count % 4096 == 0:
            if time.monotonic() - self.start > self.seconds:
                raise BudgetExceeded("wall-clock seconds", self.seconds)


def reach_check(space, budget: int = DEFAULT_NODE_BUDGET, seconds: float | None = None,
                stats: dict | None = None) -> Witness | None:
    """Breadth-first search for an accepting state; returns a shortest path or None.

    When given, ``stats["explored"]`` receives the number of states visited.
    """
    b = _Budget(budget, seconds, stats)
    parent: dict[Hashable, tuple] = {}
    queue = deque()
    for s in space.initial():
        if s not in parent:
            parent[s] = (None, None)
            b.tick()
            queue.append(s)
    while queue:
        s = queue.popleft()
        if space.accepting(s):
            return _path_to(parent, s, b.count)
        for label, t in space.successors(s):
            if t not in parent:
                parent[t] = (s, label)
                b.tick()
                queue.append(t)
    return None


def reachable_states(space, budget: int = DEFAULT_NODE_BUDGET) -> list:
    """All reachable states in breadth-first order."""
    b = _Budget(budget, None)
    seen, order = set(), []
    queue = deque()
    for s in space.initial():
        if s not in seen:
            seen.add(s)
            b.tick()
            queue.append(s)
    while queue:
        s = queue.popleft()
        order.append(s)
        for _, t in space.successors(s):
            if t not in seen:
                seen.add(t)
                b.tick()
                queue.append(t)
    return order


def _path_to(parent, s, explored):
    states, labels = [s], []
    while True:
        p, lab = parent[s]
        if p is None:
            break
        states.append(p)
        labels.append(lab)
        s = p
    states.reverse()
    labels.reverse()
    return Witness(states, labels, explored=explored)


def buchi_check(space, budget: int = DEFAULT_NODE_BUDGET, seconds: float | None = None,
                stats: dict | None = None) -> Witness | None:
    """Nested depth-first search for a reachable accepting cycle (``stats`` as in
    :func:`reach_check`)."""
    b = _Budget(budget, seconds, stats)
    visited: set = set()
    flagged: set = set()

    def inner(seed):
        # stack entries: (state, label into it, successor iterator)
        flagged.add(seed)
        stack = [(seed, None, iter(space.successors(seed)))]
        while stack:
            s, _, it = stack[-1]
            for label, t in it:
                if t == seed:
                    states = [e[0] for e in stack] + [seed]
                    labels = [e[1] for e in stack[1:]] + [label]
                    return states, labels
                if t not in flagged:
                    flagged.add(t)
                    b.tick()
                    stack.append((t, label, iter(space.successors(t))))
                    break
            else:
                stack.pop()
        return None

    for s0 in space.initial():
        if s0 in visited:
            continue
        visited.add(s0)
        b.tick()
        stack = [(s0, None, iter(space.successors(s0)))]
        while stack:
            s, _, it = stack[-1]
            for label, t in it:
                if t not in visited:
                    visited.add(t)
                    b.tick()
                    stack.append((t, label, iter(space.successors(t))))
                    break
            else:
                if space.accepting(s) and s not in flagged:
                    found = inner(s)
                    if found is not None:
                        stem = [e[0] for e in stack]
                        stem_labels = [e[1] for e in stack[1:]]
                        cycle, cycle_labels = found
                        return Witness(stem, stem_labels, cycle, cycle_labels, explored=b.count)
                stack.pop()
    return None


class DiscreteSpace:
    """Search space over the locations of an untimed system (an Automaton or a
    lazy product); labels are the steps taken."""

    def __init__(self, system, accepting):
        self.system = system
        self._accepting = accepting

    def initial(self):
        return [self.system.initial]

    def successors(self, loc):
        return [(st, st.target) for st in self.system.edges(loc)]

    def accepting(self, loc):
        return self._accepting(loc)


def intersection_word(automata, budget: int = DEFAULT_NODE_BUDGET):
    """A shortest word accepted by every FA in ``automata`` (letters are
    synchronized on the union alphabet), or None when the intersection is empty."""
    from .compose import LazyProduct

    prod = LazyProduct(automata)
    finals = [a.final for a in prod.components]
    space = DiscreteSpace(prod, lambda loc: all(l in f for l, f in zip(loc, finals)))
    w = reach_check(space, budget)
    if w is None:
        return None
    return [st.action for st in w.stem_labels if st.action != "tau"]
