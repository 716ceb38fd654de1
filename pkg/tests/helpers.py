"""Random instance generators and independent oracles shared by the tests.

The oracles deliberately avoid the toolkit's product constructions: they work
directly on the input automata with plain subset simulation, networkx SCCs
or brute-force run enumeration.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from fractions import Fraction

import networkx as nx

from tacodiag.automata import (
    DELTA_FAULTY, FAULT, NON_FAULTY, TAU, Run, classify_run, enumerate_runs, make_fa, make_ta,
    project, trace_of,
)


# -- generators ----------------------------------------------------------------

def random_fa(rng: random.Random, max_states=6, max_letters=3, p_fault=0.15, p_tau=0.2):
    n = rng.randint(2, max_states)
    sigma = ["a", "b", "c"][: rng.randint(1, max_letters)]
    trans = []
    for q in range(n):
        for _ in range(rng.randint(1, 3)):
            r = rng.random()
            a = FAULT if r < p_fault else TAU if r < p_fault + p_tau else rng.choice(sigma)
            trans.append((q, a, rng.randrange(n)))
    return make_fa(trans, initial=0, alphabet=sigma, locations=range(n))


def random_family(rng: random.Random, sigma, n_sites=None):
    n = n_sites or rng.randint(1, 2)
    return [{a for a in sigma if rng.random() < 0.6} for _ in range(n)]


def random_ta(rng: random.Random, max_states=4, max_const=2, n_clocks=None, p_fault=0.15):
    """Small TA with integer constants, upper-bound invariants and no Zeno traps
    at the locations that carry an invariant (each gets a resetting exit)."""
    n = rng.randint(2, max_states)
    clocks = ["x", "y"][: n_clocks or rng.randint(1, 2)]
    sigma = ["a", "b"][: rng.randint(1, 2)]
    ops = ["<", "<=", "==", ">=", ">"]
    trans, invs = [], {}
    for q in range(n):
        for _ in range(rng.randint(1, 2)):
            x = rng.choice(clocks)
            guard = "" if rng.random() < 0.3 else f"{x}{rng.choice(ops)}{rng.randint(0, max_const)}"
            r = rng.random()
            a = FAULT if r < p_fault else TAU if r < p_fault + 0.2 else rng.choice(sigma)
            resets = [c for c in clocks if rng.random() < 0.4]
            trans.append((q, guard, a, resets, rng.randrange(n)))
        if rng.random() < 0.4:
            x = rng.choice(clocks)
            k = rng.randint(1, max_const)
            invs[q] = f"{x}<={k}"
            trans.append((q, f"{x}<={k}", rng.choice(sigma + [TAU]), [x], rng.randrange(n)))
    return make_ta(trans, clocks=clocks, initial=0, invariants=invs, alphabet=sigma, locations=range(n))


def random_graph(rng: random.Random, max_states=1000):
    n = rng.randint(1, max_states)
    density = rng.choice([0.5, 1.0, 1.5, 2.5])
    succ = {q: [] for q in range(n)}
    for _ in range(int(n * density)):
        succ[rng.randrange(n)].append(rng.randrange(n))
    accept = {q for q in range(n) if rng.random() < rng.choice([0.001, 0.01, 0.05, 0.3])}
    return succ, [0], accept


# -- Büchi oracle ------------------------------------------------------------------

def scc_has_accepting_cycle(succ, init, accept) -> bool:
    g = nx.DiGraph()
    g.add_nodes_from(succ)
    for q, ts in succ.items():
        for t in ts:
            g.add_edge(q, t)
    reach = set()
    for s in init:
        reach |= {s} | nx.descendants(g, s)
    sub = g.subgraph(reach)
    for comp in nx.strongly_connected_components(sub):
        nontrivial = len(comp) > 1 or any(sub.has_edge(q, q) for q in comp)
        if nontrivial and comp & accept:
            return True
    return False


# -- word-level simulation -------------------------------------------------------------

def nfa_accepts(fa, word) -> bool:
    """Finite-word acceptance with silent moves (``tau`` and ``fault``)."""
    def close(states):
        seen, stack = set(states), list(states)
        while stack:
            q = stack.pop()
            for t in fa.transitions:
                if t.source == q and t.action in (TAU, FAULT) and t.target not in seen:
                    seen.add(t.target)
                    stack.append(t.target)
        return seen

    cur = close({fa.initial})
    for a in word:
        cur = close({t.target for t in fa.transitions if t.source in cur and t.action == a})
    return bool(cur & fa.final)


def words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


# -- delta-codiagnosability oracle for finite automata -----------------------------

def lemma1_ambiguous(model, delta: int, family) -> bool:
    """True iff some delta-faulty run has, for every site, a non-faulty run with
    the same observation. Exact: explores (location, fault counter, per-site sets
    of non-faulty locations consistent with the observation)."""
    sigma = set(model.alphabet)

    def nf_close(states, hidden):
        seen, stack = set(states), list(states)
        while stack:
            q = stack.pop()
            for t in model.transitions:
                if t.source == q and (t.action == TAU or t.action in hidden) and t.target not in seen:
                    seen.add(t.target)
                    stack.append(t.target)
        return frozenset(seen)

    hidden = [sigma - set(s) for s in family]
    start = (model.initial, -1, tuple(nf_close({model.initial}, h) for h in hidden))
    seen = {start}
    queue = deque([start])
    while queue:
        loc, cnt, sets = queue.popleft()
        if cnt >= delta and all(sets):
            return True
        for t in model.transitions:
            if t.source != loc:
                continue
            if cnt < 0:
                ncnt = 0 if t.action == FAULT else -1
            else:
                ncnt = min(cnt + 1, delta)
            nsets = []
            for s, h, obs in zip(sets, hidden, family):
                if t.action in obs:
                    post = {u.target for u in model.transitions
                            if u.source in s and u.action == t.action}
                    nsets.append(nf_close(post, h))
                else:
                    nsets.append(s)
            nxt = (t.target, ncnt, tuple(nsets))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def brute_force_ambiguous(model, delta, family, depth: int):
    """Literal check of the ambiguity condition among runs up to ``depth``; a
    returned tuple proves non-codiagnosability (the search is bounded)."""
    runs = enumerate_runs(model, depth)
    nonfaulty = [r for r in runs if classify_run(r, delta).status == NON_FAULTY]
    proj = [{project(trace_of(r), s): r for r in nonfaulty} for s in family]
    for r in runs:
        if classify_run(r, delta).status != DELTA_FAULTY:
            continue
        tr = trace_of(r)
        picks = [p.get(project(tr, s)) for p, s in zip(proj, family)]
        if all(p is not None for p in picks):
            return r, picks
    return None


# -- compliance of synthesized diagnosers ---------------------------------------------

def fa_compliance_violation(model, delta: int, family, diagnosers, depth: int):
    """Exhaustive search over every run of at most ``depth`` moves for a
    violation of the codiagnoser contract: a non-faulty run with some site
    announcing, or a delta-faulty run with no site announcing. Configurations
    (location, fault counter, diagnoser states, latches) are explored once."""
    machines = [d.machine for d in diagnosers]

    def step(m, q, a):
        return next(t.target for t in m.transitions if t.source == q and t.action == a)

    start = (model.initial, -1, tuple(m.initial for m in machines),
             tuple(m.initial in m.final for m in machines))
    frontier = {start}
    seen = {start}
    for k in range(depth + 1):
        for loc, cnt, qs, latch in frontier:
            if cnt < 0 and any(latch):
                return ("non-faulty run announced", loc, qs)
            if cnt >= delta and not any(latch):
                return ("delta-faulty run missed", loc, qs)
        if k == depth:
            break
        nxt_frontier = set()
        for loc, cnt, qs, latch in frontier:
            for t in model.transitions:
                if t.source != loc:
                    continue
                ncnt = (0 if t.action == FAULT else -1) if cnt < 0 else min(cnt + 1, delta)
                nqs, nl = list(qs), list(latch)
                for i, (m, obs) in enumerate(zip(machines, family)):
                    if t.action in obs:
                        nqs[i] = step(m, qs[i], t.action)
                        nl[i] = nl[i] or nqs[i] in m.final
                c = (t.target, ncnt, tuple(nqs), tuple(nl))
                if c not in seen:
                    seen.add(c)
                    nxt_frontier.add(c)
        frontier = nxt_frontier
        if not frontier:
            break
    return None


def timed_compliance_violation(model, delta, family, outputs, depth: int, grid=Fraction(1, 2)):
    """Same contract for timed models, checked on grid-sampled runs;
    ``outputs[i](word)`` gives site i's verdict on its observation."""
    for run in enumerate_runs(model, depth, delay_grid=grid):
        status = classify_run(run, delta).status
        tr = trace_of(run)
        votes = [f(project(tr, s)) for f, s in zip(outputs, family)]
        if status == NON_FAULTY and any(votes):
            return ("non-faulty run announced", run)
        if status == DELTA_FAULTY and not any(votes):
            return ("delta-faulty run missed", run)
    return None


def label_sequences_of_runs(model, depth, grid=Fraction(1, 4)):
    out = set()
    for run in enumerate_runs(model, depth, delay_grid=grid, cap=2_000_000):
        out.add(tuple(run.labels()))
    return out


def run_moves(run: Run):
    return [(d, run.model.transitions[i].action) for d, i in run.moves]
