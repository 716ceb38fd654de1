"""Codiagnosability decisions, optimal delay and witness checking."""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .automata import (
    DELTA_FAULTY, NON_FAULTY, Automaton, Run, as_fraction, classify_run,
    is_valid_run, project, scale_model, trace_of, validate,
)
from .compose import (
    BAD, LazyProduct, TwinPlant, divergence_automaton, fault_monitor, fault_tagger,
    fresh_clock, site_observer,
)
from .emptiness import DEFAULT_NODE_BUDGET, DiscreteSpace, buchi_check, reach_check, reachable_states
from .errors import CodiagError
from .regions import DELAY, RegionSpace

CODIAGNOSABLE = "Codiagnosable"
NOT_CODIAGNOSABLE = "NotCodiagnosable"


@dataclass
class AmbiguousTuple:
    """A faulty run together with one non-faulty run per site whose traces
    project identically onto that site's observable letters."""

    faulty: Run
    per_site: list

    def __str__(self):
        lines = [f"faulty: {self.faulty}"]
        lines += [f"site {i + 1}: {r}" for i, r in enumerate(self.per_site)]
        return "\n".join(lines)


@dataclass
class Lasso:
    """An infinite ambiguity witness in the product: stem then cycle, kept as
    product-level paths so that it can be unrolled any number of times."""

    base: Automaton
    system: object
    components: list
    stem_labels: list
    cycle_labels: list
    clock_space: object = None

    def unroll(self, k: int) -> AmbiguousTuple:
        labels = list(self.stem_labels) + list(self.cycle_labels) * k
        return _decompose(self.base, self.system, self.components, labels, self.clock_space)

    def tuple_for(self, delta, limit: int = 10_000) -> AmbiguousTuple:
        """Unroll until the faulty run is ``delta``-faulty."""
        for k in range(limit):
            t = self.unroll(k)
            if classify_run(t.faulty, delta).status == DELTA_FAULTY:
                return t
        raise CodiagError(f"lasso did not reach delay {delta} after {limit} unrollings")


@dataclass
class CodiagVerdict:
    answer: str
    witness: AmbiguousTuple | None = None
    lasso: Lasso | None = None
    states: int = 0
    seconds: float = 0.0
    delta: Fraction | None = None
    path: list | None = None

    @property
    def codiagnosable(self) -> bool:
        return self.answer == CODIAGNOSABLE

    def __post_init__(self):
        if (self.witness is None) != (self.answer == CODIAGNOSABLE):
            raise ValueError("witness must be present exactly for a negative verdict")


def _check_inputs(model: Automaton, sites):
    errs = [d for d in validate(model) if not d.startswith("warning")]
    if errs:
        raise CodiagError("invalid model: " + "; ".join(errs))
    if not sites:
        raise CodiagError("at least one site is required")
    alph = set(model.alphabet)
    for i, s in enumerate(sites):
        extra = set(s) - alph
        if extra:
            raise CodiagError(f"site {i + 1} observes letters outside the alphabet: {sorted(extra)}")


def _unscale_run(run: Run, model: Automaton, m: int) -> Run:
    if m == 1:
        return Run(model, run.moves, run.tail)
    return Run(model, tuple((d / m, i) for d, i in run.moves), run.tail / m)


def _concretize(labels, clock_space, clocks):
    """Delays taken along a region path: one per label (zero for discrete steps)."""
    val = {x: Fraction(0) for x in clocks}
    delays = []
    for lab in labels:
        if lab == DELAY:
            r = clock_space.region_of(val)
            d = clock_space.delay_into_successor(val, r)
            for x in val:
                val[x] += d
            delays.append(d)
        else:
            for x in lab.resets:
                val[x] = Fraction(0)
            delays.append(None)
    return delays


def _decompose(base, system, components, labels, clock_space=None) -> AmbiguousTuple:
    """Split a product path into the base runs of every component.

    ``components[k]`` is the constructed automaton of product component ``k``
    (or None to skip it); its ``origin`` maps transitions back to the base model.
    Component 0 yields the faulty run, the rest the per-site runs.
    """
    if clock_space is not None:
        delays = _concretize(labels, clock_space, system.clocks)
    else:
        delays = [None] * len(labels)
    runs = []
    for k, comp in components:
        moves, pending = [], Fraction(0)
        for lab, d in zip(labels, delays):
            if lab == DELAY:
                pending += d
                continue
            for ck, info in lab.info:
                if ck != k:
                    continue
                o = comp.origin[info] if comp.origin is not None else info
                if o is None:
                    continue
                moves.append((pending, o))
                pending = Fraction(0)
        runs.append(Run(base, tuple(moves), pending))
    return AmbiguousTuple(runs[0], runs[1:])


def check_delta_codiag(model: Automaton, delta, sites: Sequence, budget: int = DEFAULT_NODE_BUDGET,
                       seconds: float | None = None) -> CodiagVerdict:
    """Decide whether every ``delta``-faulty run is detected by some site."""
    _check_inputs(model, sites)
    delta = as_fraction(delta)
    if delta < 0:
        raise CodiagError("delta must be non-negative")
    start = time.monotonic()
    stats = {"explored": 0}
    if model.is_fa:
        if delta.denominator != 1:
            raise CodiagError("FA delays are step counts and must be integers")
        mon = fault_monitor(model, int(delta))
        obs = [site_observer(model, s, i + 1) for i, s in enumerate(sites)]
        prod = LazyProduct([mon] + obs)
        space = DiscreteSpace(prod, lambda loc: loc[0] == BAD)
        w = reach_check(space, budget, seconds, stats)
        cs, m, scaled = None, 1, model
    else:
        m = delta.denominator
        scaled = scale_model(model, m)
        mon = fault_monitor(scaled, delta * m)
        obs = [site_observer(scaled, s, i + 1) for i, s in enumerate(sites)]
        prod = LazyProduct([mon] + obs)
        space = RegionSpace(prod, accepting=lambda loc, r: loc[0] == BAD)
        w = reach_check(space, budget, seconds, stats)
        cs = space.cs
    elapsed = time.monotonic() - start
    if w is None:
        return CodiagVerdict(CODIAGNOSABLE, states=stats["explored"], seconds=elapsed, delta=delta)
    comps = list(enumerate(prod.components))
    t = _decompose(scaled, prod, comps, w.stem_labels, cs)
    t = AmbiguousTuple(_unscale_run(t.faulty, model, m), [_unscale_run(r, model, m) for r in t.per_site])
    return CodiagVerdict(NOT_CODIAGNOSABLE, t, states=w.explored, seconds=elapsed, delta=delta,
                         path=describe_path(w.stem_labels))


def describe_path(labels) -> list[str]:
    """Product-level labels as text: ``delay`` or ``action [(component, transition), ...]``."""
    out = []
    for lab in labels:
        out.append(DELAY if lab == DELAY else f"{lab.action} {list(lab.info)}")
    return out


def _twin_plant(model: Automaton, sites):
    tagger = fault_tagger(model)
    obs = [site_observer(model, s, i + 1) for i, s in enumerate(sites)]
    if model.is_fa:
        plant = TwinPlant(tagger, obs)
        space = DiscreteSpace(plant, plant.is_repeated)
    else:
        taken = set(model.clocks) | {x for o in obs for x in o.clocks}
        div = divergence_automaton(fresh_clock("_div", taken))
        plant = TwinPlant(tagger, obs, div)
        space = RegionSpace(plant, accepting=lambda loc, r: plant.is_repeated(loc))
    return plant, space


def check_codiag(model: Automaton, sites: Sequence, budget: int = DEFAULT_NODE_BUDGET,
                 seconds: float | None = None) -> CodiagVerdict:
    """Decide whether some finite delay makes ``model`` codiagnosable."""
    _check_inputs(model, sites)
    start = time.monotonic()
    plant, space = _twin_plant(model, sites)
    stats = {"explored": 0}
    w = buchi_check(space, budget, seconds, stats)
    elapsed = time.monotonic() - start
    if w is None:
        return CodiagVerdict(CODIAGNOSABLE, states=stats["explored"], seconds=elapsed)
    comps = [(0, plant.product.components[0])]
    first_obs = 2 if plant.has_div else 1
    comps += [(k, plant.product.components[k]) for k in range(first_obs, len(plant.product.components))]
    cs = space.cs if isinstance(space, RegionSpace) else None
    lasso = Lasso(model, plant, comps, w.stem_labels, w.cycle_labels, cs)
    path = describe_path(w.stem_labels) + ["-- cycle --"] + describe_path(w.cycle_labels)
    return CodiagVerdict(NOT_CODIAGNOSABLE, lasso.unroll(1), lasso=lasso, states=w.explored,
                         seconds=elapsed, path=path)


def delay_upper_bound(model: Automaton, sites: Sequence, budget: int = DEFAULT_NODE_BUDGET) -> int:
    """A delay that suffices whenever the model is codiagnosable at all.

    FA: ``|L|^(n+1)``, the number of tagger-observer location tuples. TA: the
    number of reachable states of the region twin plant.
    """
    if model.is_fa:
        return len(model.locations) ** (len(sites) + 1)
    _, space = _twin_plant(model, sites)
    return len(reachable_states(space, budget))


def optimal_delay(model: Automaton, sites: Sequence, budget: int = DEFAULT_NODE_BUDGET):
    """Least integer delay for which the model is codiagnosable, or None."""
    if not check_codiag(model, sites, budget).codiagnosable:
        return None
    if check_delta_codiag(model, 0, sites, budget).codiagnosable:
        return 0
    hi = delay_upper_bound(model, sites, budget)
    if not check_delta_codiag(model, hi, sites, budget).codiagnosable:
        raise CodiagError(f"model not codiagnosable at the upper bound {hi}")
    lo = 0  # known negative
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if check_delta_codiag(model, mid, sites, budget).codiagnosable:
            hi = mid
        else:
            lo = mid
    return hi


def verify_ambiguous_tuple(t: AmbiguousTuple, model: Automaton, delta, sites: Sequence) -> bool:
    """Independent check of a negative witness against the model."""
    if len(t.per_site) != len(sites):
        return False
    runs = [t.faulty] + list(t.per_site)
    if any(r.model is not model for r in runs):
        return False
    if not all(is_valid_run(r) for r in runs):
        return False
    if classify_run(t.faulty, delta).status != DELTA_FAULTY:
        return False
    ftrace = trace_of(t.faulty)
    for r, s in zip(t.per_site, sites):
        if classify_run(r, 0).status != NON_FAULTY:
            return False
        if project(ftrace, s) != project(trace_of(r), s):
            return False
    return True
