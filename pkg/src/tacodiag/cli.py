"""Command-line interface.

Exit codes: 0 codiagnosable or success, 1 not codiagnosable (witness written),
2 input error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import modelio
from .automata import FAULT, TAU, Automaton, Transition, validate
from .codiag import check_codiag, check_delta_codiag, optimal_delay, verify_ambiguous_tuple
from .emptiness import DEFAULT_NODE_BUDGET
from .errors import BudgetExceeded, CodiagError, InconsistentObservation, ModelSyntaxError
from .fixtures import gen_fixture
from .regions import region_graph

EXIT_OK, EXIT_NOT_CODIAG, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_model(path: str) -> Automaton:
    text = _read(path)
    try:
        model = modelio.parse_model(text)
    except ModelSyntaxError as exc:
        raise InputError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from None
    errors = [d for d in validate(model) if not d.startswith("warning")]
    if errors:
        raise InputError(f"{path}: " + "; ".join(errors))
    return model


def _load_family(arg: str) -> list:
    text = _read(arg) if Path(arg).exists() else arg
    try:
        return modelio.parse_family(text)
    except ModelSyntaxError as exc:
        raise InputError(f"family: {exc}") from None


def _fault_views(model: Automaton, types: str | None):
    """One model per fault label; the other labels become silent."""
    if not types:
        return [(None, model)]
    labels = [t for t in types.split(",") if t]
    views = []
    for lab in labels:
        if lab not in model.alphabet:
            raise InputError(f"fault type {lab!r} is not in the alphabet")
        trans = tuple(
            Transition(t.source, t.guard, FAULT if t.action == lab else (TAU if t.action in labels else t.action),
                       t.resets, t.target)
            for t in model.transitions
        )
        alph = tuple(a for a in model.alphabet if a not in labels)
        views.append((lab, model.replace(transitions=trans, alphabet=alph)))
    return views


def _verdict_text(v) -> str:
    lines = [v.answer]
    if v.witness is not None:
        lines.append(str(v.witness))
    return "\n".join(lines)


def cmd_validate(args) -> int:
    try:
        model = modelio.parse_model(_read(args.model))
    except ModelSyntaxError as exc:
        print(f"{args.model}:{exc.line}:{exc.column}: {exc.message}", file=sys.stderr)
        return EXIT_INPUT
    diags = validate(model)
    for d in diags:
        print(d)
    if any(not d.startswith("warning") for d in diags):
        return EXIT_INPUT
    print(f"ok: {model.kind} with {len(model.locations)} locations, {len(model.transitions)} transitions")
    return EXIT_OK


def cmd_check_delta(args) -> int:
    model = _load_model(args.model)
    family = _load_family(args.family)
    worst = EXIT_OK
    reports = []
    for label, view in _fault_views(model, args.fault_types):
        v = check_delta_codiag(view, args.delta, family, budget=args.budget, seconds=args.seconds)
        rep = modelio.verdict_report(v, "check-delta", {"fault_type": label} if label else None)
        reports.append(rep)
        prefix = f"[{label}] " if label else ""
        print(prefix + _verdict_text(v))
        if not v.codiagnosable:
            worst = EXIT_NOT_CODIAG
    _write_reports(args, reports)
    return worst


def _write_reports(args, reports):
    if args.report:
        data = reports[0] if len(reports) == 1 else {"analyses": reports}
        Path(args.report).write_text(modelio.dump_report(data))


def cmd_check(args) -> int:
    model = _load_model(args.model)
    family = _load_family(args.family)
    worst = EXIT_OK
    reports = []
    for label, view in _fault_views(model, args.fault_types):
        v = check_codiag(view, family, budget=args.budget, seconds=args.seconds)
        reports.append(modelio.verdict_report(v, "check", {"fault_type": label} if label else None))
        print((f"[{label}] " if label else "") + _verdict_text(v))
        if not v.codiagnosable:
            worst = EXIT_NOT_CODIAG
    _write_reports(args, reports)
    return worst


def cmd_optimal_delay(args) -> int:
    model = _load_model(args.model)
    family = _load_family(args.family)
    d = optimal_delay(model, family, budget=args.budget)
    if d is None:
        print("NotCodiagnosable")
        v = check_codiag(model, family, budget=args.budget)
        _write_reports(args, [modelio.verdict_report(v, "optimal-delay")])
        return EXIT_NOT_CODIAG
    print(f"optimal delay: {d}")
    _write_reports(args, [{"command": "optimal-delay", "verdict": "Codiagnosable", "delta": d}])
    return EXIT_OK


def cmd_synthesize(args) -> int:
    from .synth import synthesize_fa_codiagnoser

    model = _load_model(args.model)
    if not model.is_fa:
        raise InputError("synthesize builds subset diagnosers for FA models; use estimate or dta-synth for TA")
    family = _load_family(args.family)
    v = check_delta_codiag(model, args.delta, family, budget=args.budget)
    if not v.codiagnosable:
        print(_verdict_text(v))
        _write_reports(args, [modelio.verdict_report(v, "synthesize")])
        return EXIT_NOT_CODIAG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for d in synthesize_fa_codiagnoser(model, args.delta, family):
        path = out / f"site{d.site}.model"
        path.write_text(modelio.write_model(
            d.machine, comment=f"diagnoser for site {d.site}; final locations announce a fault"
        ))
        print(f"site {d.site}: {len(d.machine.locations)} states -> {path}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    from .synth import estimator_start, estimator_step, lcm_of_denominators

    model = _load_model(args.model)
    family = _load_family(args.family) if args.family else [set(model.alphabet)]
    if not 1 <= args.site <= len(family):
        raise InputError(f"site {args.site} is not in the family (1..{len(family)})")
    observable = family[args.site - 1]
    try:
        word = modelio.parse_trace(_read(args.trace))
    except ModelSyntaxError as exc:
        raise InputError(f"trace: {exc}") from None
    if model.is_fa:
        from .synth import determinize_site, evaluate_diagnoser

        d = determinize_site(model, observable, args.site)
        letters = [a for _, a in word.letters]
        for k in range(len(letters) + 1):
            print(f"{' '.join(letters[:k]) or 'ε'}: {evaluate_diagnoser(d, letters[:k])}")
        return EXIT_OK
    events = [(d, a) for d, a in word.letters]
    if word.tail:
        events.append((word.tail, None))
    scale = lcm_of_denominators([d for d, _ in events])
    st = estimator_start(model, observable, args.delta, scale)
    verdict = 0
    for ev in events:
        st, verdict = estimator_step(st, ev)
        print(f"{ev[0]} {ev[1] or '(silence)'}: {verdict}")
    print(f"verdict: {verdict}")
    return EXIT_OK


def cmd_region_graph(args) -> int:
    model = _load_model(args.model)
    if model.is_fa:
        raise InputError("region graphs are defined for TA models")
    rg = region_graph(model, budget=args.budget)
    cs = rg.clock_space
    notes = "\n".join(
        f"state {i}: {loc} | {r.describe(cs.clocks, cs.maxc)}" for i, (loc, r) in enumerate(rg.states)
    )
    text = modelio.write_model(rg.to_automaton(), comment=notes)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(rg.states)} states, {len(rg.edges)} edges -> {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_dta_synth(args) -> int:
    from .dta_game import codiag_dta_synthesis

    model = _load_model(args.model)
    try:
        resources = modelio.parse_resources(_read(args.resources))
    except ModelSyntaxError as exc:
        raise InputError(f"resources: {exc}") from None
    try:
        dtas = codiag_dta_synthesis(model, args.delta, resources, budget=args.budget,
                                    tuple_cap=args.tuple_cap)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if dtas is None:
        print("no codiagnoser within the given resources")
        return EXIT_NOT_CODIAG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (d, r) in enumerate(zip(dtas, resources), start=1):
        path = out / f"site{i}.dta.model"
        path.write_text(modelio.write_model(
            d, comment=f"deterministic diagnoser, granularity 1/{r.m}, max {r.max}; final locations announce"
        ))
        print(f"site {i}: {len(d.locations)} locations -> {path}")
    return EXIT_OK


def cmd_gen_fixture(args) -> int:
    try:
        fx = gen_fixture(args.name, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    docs = {}
    if fx.model is not None:
        docs[f"{_slug(fx.name)}.model"] = modelio.write_model(fx.model, comment=fx.note or None)
    for k, part in enumerate(fx.parts, start=1):
        docs[f"{_slug(fx.name)}.part{k}.model"] = modelio.write_model(part)
    if fx.family:
        docs[f"{_slug(fx.name)}.family"] = modelio.write_family(fx.family)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in docs.items():
            (out / name).write_text(text)
            print(out / name)
    else:
        for name, text in docs.items():
            print(f"# --- {name}")
            print(text, end="")
    if fx.expected:
        print(f"# expected: {json.dumps(fx.expected)}")
    return EXIT_OK


def _slug(name: str) -> str:
    return name.lower().replace("(", "-").replace(")", "")


def cmd_verify_witness(args) -> int:
    model = _load_model(args.model)
    family = _load_family(args.family)
    try:
        report = json.loads(_read(args.witness))
        t = modelio.witness_from_report(model, report)
        delta = args.delta if args.delta is not None else report.get("delta")
    except (ValueError, KeyError, IndexError) as exc:
        raise InputError(f"bad report: {exc}") from None
    if delta is None:
        raise InputError("the report has no delay; pass --delta")
    ok = verify_ambiguous_tuple(t, model, delta, family)
    print("witness verified" if ok else "witness rejected")
    return EXIT_OK if ok else EXIT_NOT_CODIAG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tacodiag", description="Codiagnosability analysis for finite and timed automata")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, family=True, report=True):
        sp.add_argument("model")
        if family:
            sp.add_argument("--family", required=True, help="family file or inline 'a,b|c'")
        sp.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET, help="state budget")
        if report:
            sp.add_argument("--report", help="write a JSON report here")

    sp = sub.add_parser("validate", help="parse and validate a model")
    sp.add_argument("model")
    sp.set_defaults(func=cmd_validate)

    for name, func, needs_delta in (("check-delta", cmd_check_delta, True), ("check", cmd_check, False)):
        sp = sub.add_parser(name)
        common(sp)
        if needs_delta:
            sp.add_argument("--delta", required=True, type=str)
        sp.add_argument("--seconds", type=float, default=None, help="wall-clock budget")
        sp.add_argument("--fault-types", help="comma-separated letters analysed as separate fault types")
        sp.set_defaults(func=func)

    sp = sub.add_parser("optimal-delay")
    common(sp)
    sp.set_defaults(func=cmd_optimal_delay)

    sp = sub.add_parser("synthesize")
    common(sp)
    sp.add_argument("--delta", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("estimate")
    sp.add_argument("model")
    sp.add_argument("--site", type=int, default=1)
    sp.add_argument("--delta", default="0")
    sp.add_argument("--trace", required=True)
    sp.add_argument("--family")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("region-graph")
    common(sp, family=False, report=False)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_region_graph)

    sp = sub.add_parser("dta-synth")
    common(sp, family=False, report=False)
    sp.add_argument("--delta", required=True)
    sp.add_argument("--resources", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--tuple-cap", type=int, default=10_000)
    sp.set_defaults(func=cmd_dta_synth)

    sp = sub.add_parser("gen-fixture")
    sp.add_argument("name", help="REMARK, REMARK-U, CONF, CONF-TA, CODIAG-OK, KOZEN-CHAIN(k), REDUCTION-B(k)")
    sp.add_argument("--out")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gen_fixture)

    sp = sub.add_parser("verify-witness")
    sp.add_argument("model")
    sp.add_argument("--family", required=True)
    sp.add_argument("--witness", required=True, help="JSON report holding a witness")
    sp.add_argument("--delta")
    sp.set_defaults(func=cmd_verify_witness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InconsistentObservation, CodiagError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
