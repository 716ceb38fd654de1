"""Text formats for models, observation families, resources, traces and reports.

Model document::

    tacodiag-model 1
    kind TA
    alphabet a
    clocks x
    locations l0 l1 l2
    initial l0
    invariant l0 x<=1
    edge l0 -> l1 on fault when x==1 reset x
    edge l1 -> l2 on a when x==1
    final l2
    repeated l2

Lines starting with ``#`` are comments. Constants are decimals or ``p/q``.
Location names made only of digits are read back as integers.
"""
from __future__ import annotations

import json
import re
from fractions import Fraction

from .automata import (
    OPS, RESERVED, Atom, Automaton, Guard, Run, TimedWord, Transition, as_fraction, trace_of,
)
from .errors import ModelSyntaxError

MODEL_HEADER = "tacodiag-model"
FAMILY_HEADER = "tacodiag-family"
RESOURCES_HEADER = "tacodiag-resources"
FORMAT_VERSION = 1

_NAME = re.compile(r"^[A-Za-z_0-9][\w@.'\-]*$")
_ATOM = re.compile(r"^([A-Za-z_][\w@.']*)(<=|>=|==|<|>)(-?\d+(?:\.\d+)?(?:/\d+)?)$")
_OPERATOR_CHARS = set("<>=!≤≥")


def _tokens(line: str):
    """Split on whitespace keeping 1-based columns."""
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]


def _loc(name: str):
    return int(name) if re.fullmatch(r"-?\d+", name) else name


def _loc_name(loc) -> str:
    if isinstance(loc, (int, str)):
        return str(loc)
    if isinstance(loc, tuple):
        return "_".join(_loc_name(x) for x in loc)
    return str(loc)


def _parse_const(text: str, line: int, col: int) -> Fraction:
    try:
        return as_fraction(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ModelSyntaxError(f"bad constant {text!r}", line, col) from None


def _parse_guard(toks, line: int) -> Guard:
    atoms = []
    for text, col in toks:
        if text in ("&&", "and", "∧"):
            continue
        for part in text.split("&&"):
            if not part:
                continue
            m = _ATOM.match(part)
            if not m:
                op_at = next((i for i, ch in enumerate(part) if ch in _OPERATOR_CHARS), None)
                where = col + (op_at or 0)
                raise ModelSyntaxError(f"bad clock constraint {part!r}", line, where)
            clock, op, const = m.groups()
            if op not in OPS:
                raise ModelSyntaxError(f"unknown comparison {op!r}", line, col + len(clock))
            atoms.append(Atom(clock, op, _parse_const(const, line, col)))
    return Guard(tuple(atoms))


def _header(lines, expected):
    for lineno, raw in lines:
        toks = _tokens(raw)
        if toks[0][0] != expected:
            raise ModelSyntaxError(f"expected header {expected!r}", lineno, toks[0][1])
        if len(toks) != 2 or toks[1][0] != str(FORMAT_VERSION):
            col = toks[1][1] if len(toks) > 1 else len(raw) + 1
            raise ModelSyntaxError(f"unsupported format version (expected {FORMAT_VERSION})", lineno, col)
        return
    raise ModelSyntaxError("empty document", 1)


def _content_lines(text: str):
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if stripped.strip():
            out.append((lineno, stripped))
    return out


def parse_model(text: str) -> Automaton:
    lines = _content_lines(text)
    _header(lines, MODEL_HEADER)
    kind = None
    alphabet, clocks, locations, final, repeated = [], [], [], None, []
    initial = None
    invariants: dict = {}
    trans = []
    for lineno, raw in lines[1:]:
        toks = _tokens(raw)
        key, kcol = toks[0]
        args = toks[1:]
        if key == "kind":
            if len(args) != 1 or args[0][0] not in ("FA", "TA"):
                raise ModelSyntaxError("kind must be FA or TA", lineno, args[0][1] if args else kcol)
            kind = args[0][0]
        elif key == "alphabet":
            for a, col in args:
                if a in RESERVED:
                    raise ModelSyntaxError(f"reserved action {a!r} cannot be declared", lineno, col)
                alphabet.append(a)
        elif key == "clocks":
            clocks += [a for a, _ in args]
        elif key == "locations":
            locations += [_loc(a) for a, _ in args]
        elif key == "initial":
            if len(args) != 1:
                raise ModelSyntaxError("initial takes one location", lineno, kcol)
            initial = _loc(args[0][0])
        elif key == "final":
            final = (final or []) + [_loc(a) for a, _ in args]
        elif key == "repeated":
            repeated += [_loc(a) for a, _ in args]
        elif key == "invariant":
            if not args:
                raise ModelSyntaxError("invariant needs a location", lineno, kcol)
            invariants[_loc(args[0][0])] = _parse_guard(args[1:], lineno)
        elif key == "edge":
            trans.append((lineno, _parse_edge(args, lineno, kcol)))
        else:
            raise ModelSyntaxError(f"unknown field {key!r}", lineno, kcol)
    if kind is None:
        raise ModelSyntaxError("missing 'kind' line", lines[0][0])
    if not locations:
        seen = {} if initial is None else {initial: None}
        for _, t in trans:
            seen.setdefault(t.source)
            seen.setdefault(t.target)
        locations = list(seen)
    if initial is None:
        initial = locations[0]
    declared = set(locations)
    for lineno, t in trans:
        for loc in (t.source, t.target):
            if loc not in declared:
                raise ModelSyntaxError(f"undeclared location {loc!r}", lineno, 1)
    return Automaton(
        kind=kind, locations=tuple(locations), initial=initial, clocks=tuple(clocks),
        alphabet=tuple(alphabet), transitions=tuple(t for _, t in trans), invariants=invariants,
        final=frozenset(locations if final is None else final), repeated=frozenset(repeated),
    )


def _parse_edge(args, lineno, kcol) -> Transition:
    words = [a for a, _ in args]
    if len(words) < 5 or words[1] != "->" or words[3] != "on":
        col = args[0][1] if args else kcol
        raise ModelSyntaxError("edge syntax: edge SRC -> TGT on ACTION [when GUARD] [reset CLOCKS]", lineno, col)
    src, tgt, action = _loc(words[0]), _loc(words[2]), words[4]
    rest = args[5:]
    guard_toks, reset_toks, mode = [], [], None
    for text, col in rest:
        if text == "when" and mode is None:
            mode = "when"
        elif text == "reset" and mode in (None, "when"):
            mode = "reset"
        elif mode == "when":
            guard_toks.append((text, col))
        elif mode == "reset":
            reset_toks.append(text)
        else:
            raise ModelSyntaxError(f"unexpected token {text!r}", lineno, col)
    return Transition(src, _parse_guard(guard_toks, lineno), action, frozenset(reset_toks), tgt)


def _guard_text(g: Guard) -> str:
    return " && ".join(f"{a.clock}{a.op}{_num(a.const)}" for a in g.atoms)


def _num(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def write_model(model: Automaton, comment: str | None = None) -> str:
    n = _loc_name
    lines = [f"{MODEL_HEADER} {FORMAT_VERSION}"]
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"kind {model.kind}")
    if model.alphabet:
        lines.append("alphabet " + " ".join(model.alphabet))
    if model.clocks:
        lines.append("clocks " + " ".join(model.clocks))
    lines.append("locations " + " ".join(n(l) for l in model.locations))
    lines.append(f"initial {n(model.initial)}")
    for loc in model.locations:
        g = model.invariants.get(loc)
        if g is not None and not g.is_true():
            lines.append(f"invariant {n(loc)} {_guard_text(g)}")
    for t in model.transitions:
        s = f"edge {n(t.source)} -> {n(t.target)} on {t.action}"
        if not t.guard.is_true():
            s += f" when {_guard_text(t.guard)}"
        if t.resets:
            s += " reset " + " ".join(sorted(t.resets))
        lines.append(s)
    lines.append("final " + " ".join(n(l) for l in model.locations if l in model.final))
    if model.repeated:
        lines.append("repeated " + " ".join(n(l) for l in model.locations if l in model.repeated))
    return "\n".join(lines) + "\n"


# -- families and resources -------------------------------------------------------

def parse_family(text: str) -> list[set]:
    """``site a b`` lines, one per site. An inline form ``a,b|c`` is also accepted."""
    if not text.lstrip().startswith(FAMILY_HEADER):
        return [set(filter(None, part.replace(",", " ").split())) for part in text.split("|")]
    lines = _content_lines(text)
    _header(lines, FAMILY_HEADER)
    sites = []
    for lineno, raw in lines[1:]:
        toks = _tokens(raw)
        if toks[0][0] != "site":
            raise ModelSyntaxError(f"unknown field {toks[0][0]!r}", lineno, toks[0][1])
        sites.append({a for a, _ in toks[1:]})
    if not sites:
        raise ModelSyntaxError("a family needs at least one site", lines[0][0])
    return sites


def write_family(family) -> str:
    lines = [f"{FAMILY_HEADER} {FORMAT_VERSION}"]
    lines += ["site " + " ".join(sorted(s)) for s in family]
    return "\n".join(lines) + "\n"


def parse_resources(text: str):
    """``resource alphabet=a,b clocks=y1 max=3 granularity=1/2`` lines."""
    from .dta_game import Resource

    lines = _content_lines(text)
    _header(lines, RESOURCES_HEADER)
    out = []
    for lineno, raw in lines[1:]:
        toks = _tokens(raw)
        if toks[0][0] != "resource":
            raise ModelSyntaxError(f"unknown field {toks[0][0]!r}", lineno, toks[0][1])
        fields = {"alphabet": "", "clocks": "", "max": "0", "granularity": "1"}
        for text_, col in toks[1:]:
            if "=" not in text_:
                raise ModelSyntaxError(f"expected key=value, got {text_!r}", lineno, col)
            k, v = text_.split("=", 1)
            if k not in fields:
                raise ModelSyntaxError(f"unknown field {k!r}", lineno, col)
            fields[k] = v
        gran = _parse_const(fields["granularity"], lineno, 1)
        if gran <= 0 or gran.numerator != 1:
            raise ModelSyntaxError("granularity must be a unit fraction 1/m", lineno, 1)
        out.append(Resource(
            frozenset(filter(None, fields["alphabet"].split(","))),
            tuple(filter(None, fields["clocks"].split(","))),
            int(fields["max"]), gran.denominator,
        ))
    return out


def write_resources(resources) -> str:
    lines = [f"{RESOURCES_HEADER} {FORMAT_VERSION}"]
    for r in resources:
        lines.append(
            f"resource alphabet={','.join(sorted(r.alphabet))} clocks={','.join(r.clocks)} "
            f"max={r.max} granularity=1/{r.m}"
        )
    return "\n".join(lines) + "\n"


# -- traces -----------------------------------------------------------------------

def parse_trace(text: str) -> TimedWord:
    """Alternating durations and letters, e.g. ``0.4 a 1.0 b 2.7``."""
    body = " ".join(l.split("#", 1)[0] for l in text.splitlines())
    for tok in body.split():
        if not _NAME.match(tok) and not re.fullmatch(r"\d+(\.\d+)?(/\d+)?", tok):
            raise ModelSyntaxError(f"bad trace token {tok!r}", 1, body.index(tok) + 1)
    return TimedWord.parse(body)


def write_trace(word: TimedWord, timed: bool = True) -> str:
    if not timed:
        return " ".join(a for _, a in word.letters) + "\n"
    return str(word) + "\n"


# -- reports ----------------------------------------------------------------------

def run_to_json(run: Run) -> dict:
    return {
        "moves": [[_num(d), i, run.model.transitions[i].action] for d, i in run.moves],
        "tail": _num(run.tail),
        "text": str(run),
        "trace": str(trace_of(run)),
    }


def run_from_json(model: Automaton, data: dict) -> Run:
    moves = tuple((Fraction(d), int(i)) for d, i, *_ in data["moves"])
    return Run(model, moves, Fraction(data.get("tail", "0")))


def verdict_report(verdict, command: str, extra: dict | None = None) -> dict:
    rep = {
        "command": command,
        "verdict": verdict.answer,
        "stats": {"states": verdict.states, "seconds": round(verdict.seconds, 6)},
    }
    if verdict.delta is not None:
        rep["delta"] = _num(verdict.delta)
    if verdict.witness is not None:
        rep["witness"] = {
            "faulty": run_to_json(verdict.witness.faulty),
            "per_site": [run_to_json(r) for r in verdict.witness.per_site],
            "product_path": list(verdict.path or []),
        }
    if extra:
        rep.update(extra)
    return rep


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def witness_from_report(model: Automaton, report: dict):
    from .codiag import AmbiguousTuple

    w = report["witness"]
    return AmbiguousTuple(
        run_from_json(model, w["faulty"]), [run_from_json(model, r) for r in w["per_site"]]
    )
