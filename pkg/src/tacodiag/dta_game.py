"""Synthesis of deterministic timed codiagnosers with bounded resources.

Pipeline per site: the three-copy plant ``A(delta)``, the universal automaton
of the site's resource, the region graph of their product projected onto the
observable (guard, letter, reset) labels and determinized into ``H``, the
safety game on ``H``, and the folding of a positional strategy into a DTA.
Several sites are combined by searching for strategies such that no trace
drives every site into a bad state at once.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

from .automata import (
    FAULT, TAU, Atom, Automaton, Guard, TimedWord, Transition, as_fraction, scale_model,
)
from .compose import LazyProduct, fresh_clock
from .emptiness import reach_check
from .errors import BudgetExceeded, ResourceTooLarge, StateBudgetExceeded
from .regions import DELAY, ClockSpace, RegionSpace

DEFAULT_TUPLE_CAP = 10_000
DEFAULT_GUARD_BUDGET = 100_000


@dataclass(frozen=True)
class Resource:
    """Observable letters, private clocks, largest constant and granularity ``1/m``."""

    alphabet: frozenset
    clocks: tuple = ()
    max: int = 0
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "clocks", tuple(self.clocks))
        if self.m < 1 or self.max < 0:
            raise ValueError("granularity denominator must be >= 1 and max >= 0")
        if len(set(self.clocks)) != len(self.clocks):
            raise ValueError("duplicate resource clocks")


# -- constructions ------------------------------------------------------------

def three_copy(model: Automaton, delta, zclock: str | None = None) -> Automaton:
    """Copies 1 (no fault), 2 (fault less than ``delta`` ago) and 3.

    A fresh clock ``z`` is reset by the first fault; copy 2 carries the extra
    invariant ``z <= delta`` and a silent move at ``z == delta`` leads to copy 3.
    Copy 3 keeps the plant invariants.
    """
    if model.is_fa:
        raise ValueError("the game construction needs a timed automaton")
    delta = as_fraction(delta)
    z = zclock or fresh_clock("_z", model.clocks)
    trans = []
    for t in model.transitions:
        if t.action == FAULT:
            trans.append(Transition((t.source, 1), t.guard, FAULT, t.resets | {z}, (t.target, 2)))
            for k in (2, 3):
                trans.append(Transition((t.source, k), t.guard, FAULT, t.resets, (t.target, k)))
        else:
            for k in (1, 2, 3):
                trans.append(Transition((t.source, k), t.guard, t.action, t.resets, (t.target, k)))
    at_delta = Guard.of((z, "==", delta))
    for loc in model.locations:
        trans.append(Transition((loc, 2), at_delta, TAU, frozenset(), (loc, 3)))
    bound = Guard.of((z, "<=", delta))
    invs = {}
    for loc in model.locations:
        inv = model.invariant(loc)
        for k, g in ((1, inv), (2, inv & bound), (3, inv)):
            if not g.is_true():
                invs[(loc, k)] = g
    locs = tuple((l, k) for k in (1, 2, 3) for l in model.locations)
    return Automaton(
        kind="TA", locations=locs, initial=(model.initial, 1), clocks=model.clocks + (z,),
        alphabet=model.alphabet, transitions=tuple(trans), invariants=invs, final=frozenset(locs),
    )


def minimal_guards(res: Resource) -> list[Guard]:
    """Every region of granularity ``1/m`` over the resource clocks, as a
    conjunction of per-clock intervals."""
    step = Fraction(1, res.m)
    top = res.max * res.m
    per_clock = []
    for y in res.clocks:
        opts = []
        for k in range(top + 1):
            opts.append((Atom(y, "==", k * step),))
            if k < top:
                opts.append((Atom(y, ">", k * step), Atom(y, "<", (k + 1) * step)))
        opts.append((Atom(y, ">", top * step),))
        per_clock.append(opts)
    return [Guard(tuple(a for part in combo for a in part)) for combo in itertools.product(*per_clock)]


def reset_sets(clocks) -> list[frozenset]:
    return [frozenset(c) for k in range(len(clocks) + 1) for c in itertools.combinations(clocks, k)]


def universal_automaton(res: Resource, budget: int = DEFAULT_GUARD_BUDGET) -> Automaton:
    count = (2 * res.max * res.m + 2) ** len(res.clocks)
    if count > budget:
        raise ResourceTooLarge("minimal guards", budget)
    guards = minimal_guards(res)
    resets = reset_sets(res.clocks)
    trans = tuple(
        Transition(0, g, a, r, 0) for a in sorted(res.alphabet) for g in guards for r in resets
    )
    return Automaton(
        kind="TA", locations=(0,), initial=0, clocks=res.clocks, alphabet=tuple(sorted(res.alphabet)),
        transitions=trans, final=frozenset({0}),
    )


@dataclass
class SubsetGraph:
    """Determinized projection of the region graph of ``A(delta) x U``.

    States are frozensets of ``((plant location, 0), Region)`` pairs. ``trans``
    holds ``(source, U transition index, target)`` triples; the U transition
    gives the observed ``(minimal guard, letter, reset set)`` label.
    """

    resource: Resource
    plant: Automaton
    universal: Automaton
    clock_space: ClockSpace
    states: list
    trans: list
    zclock: str
    bad: set = field(default_factory=set)
    accepting: set = field(default_factory=set)

    def label(self, uidx):
        t = self.universal.transitions[uidx]
        return t.guard, t.action, t.resets


def _member_info(cs: ClockSpace, zi: int, member):
    (loc, _), r = member
    copy = loc[1]
    return copy == 1, copy == 3 and r.ints[zi] is None


def project_determinize(plant3: Automaton, universal: Automaton, res: Resource, zclock: str,
                        budget: int = 1_000_000) -> SubsetGraph:
    clash = set(plant3.clocks) & set(universal.clocks)
    if clash:
        raise ValueError(f"resource clocks clash with plant clocks: {sorted(clash)}")
    prod = LazyProduct([scale_model(plant3, res.m), scale_model(universal, res.m)])
    space = RegionSpace(prod)
    cs = space.cs
    zi = cs.index[zclock]
    observable = res.alphabet
    expanded: dict = {}
    count = [0]

    def succ(s):
        got = expanded.get(s)
        if got is None:
            got = space.successors(s)
            expanded[s] = got
            count[0] += 1
            if count[0] > budget:
                raise StateBudgetExceeded("region states", budget)
        return got

    def closure(states):
        seen = set(states)
        stack = list(states)
        while stack:
            s = stack.pop()
            for lab, t in succ(s):
                if (lab == DELAY or lab.action not in observable) and t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    start = closure(space.initial())
    index = {start: 0}
    order = [start]
    trans = []
    queue = deque([start])
    while queue:
        S = queue.popleft()
        moves: dict = {}
        for s in S:
            for lab, t in succ(s):
                if lab == DELAY or lab.action not in observable:
                    continue
                uidx = next(i for k, i in lab.info if k == 1)
                moves.setdefault(uidx, set()).add(t)
        for uidx in sorted(moves):
            T = closure(moves[uidx])
            if T not in index:
                if len(order) >= budget:
                    raise StateBudgetExceeded("subset states", budget)
                index[T] = len(order)
                order.append(T)
                queue.append(T)
            trans.append((index[S], uidx, index[T]))
    g = SubsetGraph(res, plant3, universal, cs, order, trans, zclock)
    for i, S in enumerate(order):
        info = [_member_info(cs, zi, m) for m in S]
        clean = any(c for c, _ in info)
        late = any(d for _, d in info)
        if clean and late:
            g.bad.add(i)
        if not clean:
            g.accepting.add(i)
    return g


# -- the game --------------------------------------------------------------------

@dataclass
class GameGraph:
    """Round states are subset indices (Player 1 picks guard and letter); square
    states ``(s, guard index, letter)`` belong to Player 0, who picks the resets.
    ``options[p]`` lists ``(U transition index, target)`` in declaration order."""

    n_round: int
    square: list
    options: list
    round_moves: list
    bad: set
    initial: int = 0

    @property
    def edge_count(self) -> int:
        return sum(len(m) for m in self.round_moves) + sum(len(o) for o in self.options)


def build_game(h: SubsetGraph, bad=None) -> GameGraph:
    square_index: dict = {}
    square, options = [], []
    round_moves = [[] for _ in h.states]
    for s, uidx, t in h.trans:
        g, a, _ = h.label(uidx)
        key = (s, g, a)
        p = square_index.get(key)
        if p is None:
            p = square_index[key] = len(square)
            square.append(key)
            options.append([])
            round_moves[s].append(p)
        options[p].append((uidx, t))
    return GameGraph(len(h.states), square, options, round_moves, set(h.bad if bad is None else bad))


def solve_safety(game: GameGraph) -> dict | None:
    """Positional winning strategy for Player 0 (square state -> option index),
    or None when the initial state is losing."""
    lose_r, _ = _attractor(game)
    if game.initial in lose_r:
        return None
    return default_strategy(game, lose_r)


def _attractor(game: GameGraph):
    lose_r = set(game.bad)
    lose_s: set = set()
    changed = True
    while changed:
        changed = False
        for p, opts in enumerate(game.options):
            if p not in lose_s and opts and all(t in lose_r for _, t in opts):
                lose_s.add(p)
                changed = True
        for s, moves in enumerate(game.round_moves):
            if s not in lose_r and any(p in lose_s for p in moves):
                lose_r.add(s)
                changed = True
    return lose_r, lose_s


def default_strategy(game: GameGraph, lose_r=None) -> dict:
    """Lowest-index option avoiding ``lose_r`` where possible."""
    lose_r = lose_r or set()
    strat = {}
    for p, opts in enumerate(game.options):
        pick = next((k for k, (_, t) in enumerate(opts) if t not in lose_r), 0)
        strat[p] = pick
    return strat


def strategy_to_dta(h: SubsetGraph, game: GameGraph, strategy: dict, name: str = "q"):
    """Fold the strategy into a deterministic TA over the resource clocks.

    Returns ``(dta, states)`` where ``states[q]`` is the subset index behind
    DTA location ``q``. Guards are in real time units.
    """
    reach = {game.initial: None}
    queue = deque([game.initial])
    trans = []
    while queue:
        s = queue.popleft()
        for p in game.round_moves[s]:
            uidx, t = game.options[p][strategy[p]]
            g, a, r = h.label(uidx)
            trans.append((s, g, a, r, t))
            if t not in reach:
                reach[t] = None
                queue.append(t)
    states = {f"{name}{s}": s for s in reach}
    dta = Automaton(
        kind="TA", locations=tuple(states), initial=f"{name}{game.initial}",
        clocks=h.resource.clocks, alphabet=tuple(sorted(h.resource.alphabet)),
        transitions=tuple(Transition(f"{name}{s}", g, a, r, f"{name}{t}") for s, g, a, r, t in trans),
        final=frozenset(q for q, s in states.items() if s in h.accepting),
    )
    return dta, states


def is_deterministic(dta: Automaton) -> bool:
    """Pairwise disjoint guards for equal letters out of each location
    (checked on the per-clock interval guards produced here)."""
    for loc in dta.locations:
        outs = [t for _, t in dta.out(loc)]
        for t1, t2 in itertools.combinations(outs, 2):
            if t1.action == t2.action and _intervals_meet(t1.guard, t2.guard):
                return False
    return True


def _intervals_meet(g1: Guard, g2: Guard) -> bool:
    clocks = g1.clocks() | g2.clocks()
    for x in clocks:
        lo, lo_strict, hi, hi_strict = Fraction(0), False, None, False
        for a in g1.atoms + g2.atoms:
            if a.clock != x:
                continue
            if a.op in (">", ">=", "=="):
                if a.const > lo or (a.const == lo and a.op == ">"):
                    lo, lo_strict = a.const, a.op == ">"
            if a.op in ("<", "<=", "=="):
                if hi is None or a.const < hi or (a.const == hi and a.op == "<"):
                    hi, hi_strict = a.const, a.op == "<"
        if hi is not None and (lo > hi or (lo == hi and (lo_strict or hi_strict))):
            return False
    return True


def dta_output(dta: Automaton, word: TimedWord) -> int:
    """1 when the DTA reads ``word`` and ends in an accepting location."""
    val = {y: Fraction(0) for y in dta.clocks}
    loc = dta.initial
    for d, a in word.letters:
        for y in val:
            val[y] += d
        nxt = [t for _, t in dta.out_action(loc, a) if t.guard.holds(val)]
        if not nxt:
            return 0
        t = nxt[0]
        for y in t.resets:
            val[y] = Fraction(0)
        loc = t.target
    return int(loc in dta.final)


# -- several sites -----------------------------------------------------------------

@dataclass
class SiteGame:
    resource: Resource
    subsets: SubsetGraph
    game: GameGraph


@dataclass
class SiteDTA:
    dta: Automaton
    bad_locations: frozenset
    strategy: dict


def site_game(model: Automaton, delta, res: Resource, budget: int = 1_000_000) -> SiteGame:
    z = fresh_clock("_z", set(model.clocks) | set(res.clocks))
    a3 = three_copy(model, delta, z)
    U = universal_automaton(res)
    h = project_determinize(a3, U, res, z, budget)
    return SiteGame(res, h, build_game(h))


def fold(sg: SiteGame, strategy: dict, name: str) -> SiteDTA:
    dta, states = strategy_to_dta(sg.subsets, sg.game, strategy, name)
    bad = frozenset(q for q, s in states.items() if s in sg.subsets.bad)
    return SiteDTA(dta, bad, strategy)


def _joint_space(model, delta, parts, accept_parts):
    """Region space of ``A(delta)`` with the given timed components, all in a
    common integral time unit. ``accept_parts[k]`` is the set of locations of
    component ``k`` required for acceptance (None: any)."""
    M = 1
    consts = [as_fraction(delta)]
    for p in parts:
        for t in p.transitions:
            consts += [a.const for a in t.guard.atoms]
    for t in model.transitions:
        consts += [a.const for a in t.guard.atoms]
    for g in model.invariants.values():
        consts += [a.const for a in g.atoms]
    for c in consts:
        M = lcm(M, c.denominator)
    z = fresh_clock("_z", set(model.clocks) | {y for p in parts for y in p.clocks})
    a3 = scale_model(three_copy(model, delta, z), M)
    comps = [a3] + [scale_model(p, M) for p in parts]
    prod = LazyProduct(comps)
    cs_holder = {}

    def accepting(loc, r):
        if loc[0][1] != 3:
            return False
        if r.ints[cs_holder["z"]] is not None:
            return False
        return all(acc is None or l in acc for l, acc in zip(loc[1:], accept_parts))

    space = RegionSpace(prod, accepting=accepting)
    cs_holder["z"] = space.cs.index[z]
    return space


def tuple_fails(model: Automaton, delta, sites: Sequence[SiteDTA], budget: int = 1_000_000) -> bool:
    """True when some trace reaches a delta-faulty state while every site sits
    in a bad location."""
    space = _joint_space(model, delta, [s.dta for s in sites], [s.bad_locations for s in sites])
    return reach_check(space, budget) is not None


def subsets_as_ta(sg: SiteGame, name: str) -> Automaton:
    """The subset graph with every reset choice kept (Player 0 unconstrained)."""
    h = sg.subsets
    trans = []
    for s, uidx, t in h.trans:
        g, a, r = h.label(uidx)
        trans.append(Transition(f"{name}{s}", g, a, r, f"{name}{t}"))
    locs = tuple(f"{name}{i}" for i in range(len(h.states)))
    return Automaton(
        kind="TA", locations=locs, initial=f"{name}0", clocks=h.resource.clocks,
        alphabet=tuple(sorted(h.resource.alphabet)), transitions=tuple(trans), final=frozenset(),
    )


def _restricted_bad(model, delta, fixed: list[SiteDTA], sg: SiteGame, name: str, budget: int) -> set:
    """Bad subsets of ``sg`` reachable together with a delta-faulty plant state
    while every fixed site is in a bad location."""
    free = subsets_as_ta(sg, name)
    space = _joint_space(model, delta, [f.dta for f in fixed] + [free],
                         [f.bad_locations for f in fixed] + [None])
    hits = set()
    seen = set(space.initial())
    queue = deque(seen)
    while queue:
        s = queue.popleft()
        if space.accepting(s):
            idx = int(s[0][-1][len(name):])
            if idx in sg.subsets.bad:
                hits.add(idx)
        for _, t in space.successors(s):
            if t not in seen:
                if len(seen) >= budget:
                    raise StateBudgetExceeded("restriction product", budget)
                seen.add(t)
                queue.append(t)
    return hits


def _sequential(model, delta, games: list[SiteGame], order, budget):
    fixed: dict[int, SiteDTA] = {}
    for pos, i in enumerate(order):
        sg = games[i]
        if pos == 0:
            bad = sg.game.bad
        else:
            bad = _restricted_bad(model, delta, [fixed[j] for j in order[:pos]], sg, f"h{i}_", budget)
        g = GameGraph(sg.game.n_round, sg.game.square, sg.game.options, sg.game.round_moves, bad)
        lose_r, _ = _attractor(g)
        if g.initial not in lose_r:
            strat = default_strategy(g, lose_r)
            fixed[i] = fold(sg, strat, f"q{i + 1}_")
            for j in range(len(games)):
                if j not in fixed:
                    fixed[j] = fold(games[j], default_strategy(games[j].game, _attractor(games[j].game)[0]), f"q{j + 1}_")
            return [fixed[j] for j in range(len(games))]
        fixed[i] = fold(sg, default_strategy(g, lose_r), f"q{i + 1}_")
    return None


def codiag_dta_synthesis(model: Automaton, delta, resources: Sequence[Resource], budget: int = 1_000_000,
                         tuple_cap: int = DEFAULT_TUPLE_CAP, max_sites: int = 2):
    """A tuple of deterministic TAs codiagnosing ``model`` at ``delta``, or None.

    Raises BudgetExceeded when the bounded exhaustive search is cut short.
    """
    n = len(resources)
    if n == 0 or n > max_sites:
        raise ValueError(f"between 1 and {max_sites} resources are supported")
    taken = set(model.clocks)
    for r in resources:
        if taken & set(r.clocks):
            raise ValueError(f"resource clocks {sorted(taken & set(r.clocks))} are not fresh")
        taken |= set(r.clocks)
    games = [site_game(model, delta, r, budget) for r in resources]

    # a single winning site suffices
    for i, sg in enumerate(games):
        strat = solve_safety(sg.game)
        if strat is not None:
            sites = [fold(sg, strat, f"q{i + 1}_") if j == i else
                     fold(games[j], default_strategy(games[j].game, _attractor(games[j].game)[0]), f"q{j + 1}_")
                     for j in range(n)]
            return [s.dta for s in sites]
    if n == 1:
        return None

    for order in itertools.permutations(range(n)):
        sites = _sequential(model, delta, games, list(order), budget)
        if sites is not None and not tuple_fails(model, delta, sites, budget):
            return [s.dta for s in sites]

    # bounded exhaustive search over positional strategies
    choices = []
    for sg in games:
        per = [range(len(o)) for o in sg.game.options]
        choices.append(per)
    for k, combo in enumerate(itertools.product(*[itertools.product(*per) for per in choices])):
        if k >= tuple_cap:
            raise BudgetExceeded("strategy tuples", tuple_cap)
        sites = [fold(sg, dict(enumerate(c)), f"q{i + 1}_") for i, (sg, c) in enumerate(zip(games, combo))]
        if not tuple_fails(model, delta, sites, budget):
            return [s.dta for s in sites]
    return None
