"""Command-line front end: validate, abstract, check, compare.

Exit codes: 0 success, 1 an ``--assert``-ed property does not hold,
2 bad input or usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import engine, pctl
from .abstraction import (
    build_imdpa,
    build_standard_abstraction,
    imdpa_to_mdpa,
    mdpa_from_dict,
)
from .errors import ModelError, PctlSyntaxError, ThresholdOutOfRange, VacuousBoundWarning
from .model import partition_by_labels, validate_model
from .serialization import dumps

log = logging.getLogger("lmc_abstraction")


class InputError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _parse_k_range(text: str) -> range:
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return range(int(a), int(b) + 1)
        return range(int(text), int(text) + 1)
    except ValueError:
        raise InputError(f"bad --k range {text!r}; use a..b") from None


def cmd_validate(args) -> int:
    chain = validate_model(_read_json(args.model))
    part = partition_by_labels(chain)
    print(f"valid: {chain.n} states, {part.m} label blocks, initial {chain.initial_state}")
    return 0


def cmd_abstract(args) -> int:
    chain = validate_model(_read_json(args.model))
    part = partition_by_labels(chain)
    if args.method == "standard":
        reps = args.representatives.split(",") if args.representatives else None
        result = build_standard_abstraction(chain, part, reps)
        log.info("standard abstraction, epsilon = %s", _fmt(result.epsilon))
    else:
        result = build_imdpa(chain, part)
        log.info("interval abstraction, xi = %s", [_fmt(x) for x in result.xi])
        if args.method == "mdpa":
            result = imdpa_to_mdpa(result)
    _emit(dumps(result), args.output)
    return 0


def _load_for_check(args):
    doc = _read_json(args.model)
    if "actions" in doc:
        return "mdpa", mdpa_from_dict(doc), None
    chain = validate_model(doc)
    if args.model_kind == "mdpa":
        return "mdpa", imdpa_to_mdpa(build_imdpa(chain)), chain
    return "lmc", chain, chain


def _resolve_state(model, kind, chain, state):
    if state is None:
        return model.initial_state if kind == "lmc" else model.names[model.initial]
    if kind == "lmc":
        model.index(state)
        return state
    if state in model.names:
        return state
    for name, block in zip(model.names, model.blocks):
        if state in block:
            return name
    raise InputError(f"unknown state or block {state!r}")


def cmd_check(args) -> int:
    kind, model, chain = _load_for_check(args)
    formula = pctl.parse_formula(args.formula)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", VacuousBoundWarning)
        if kind == "lmc":
            result = engine.check_lmc(model, formula)
        else:
            result = engine.check_imdpa(model, formula)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    names = result.states
    targets = [_resolve_state(model, kind, chain, args.state)] if args.state else list(names)
    if result.sat_set is None:
        for s in targets:
            line = _fmt(result.value(s))
            print(line if args.state else f"{s} {line}")
        if args.assert_:
            raise InputError("--assert needs a formula with a threshold, not a query")
        return 0
    for s in targets:
        verdict = "true" if result.holds(s) else "false"
        print(verdict if args.state else f"{s} {verdict}")
    if args.assert_:
        where = _resolve_state(model, kind, chain, args.state)
        return 0 if result.holds(where) else 1
    return 0


def cmd_compare(args) -> int:
    chain = validate_model(_read_json(args.model))
    template = args.formula_template
    if "K" not in template:
        raise InputError("--formula-template needs a literal K placeholder")
    table = engine.compare_abstractions(chain, template, _parse_k_range(args.k))
    _emit(table.to_csv(), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lmc-abstraction", description=__doc__)
    p.add_argument("--quiet", action="store_true", help="suppress log messages")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a model file")
    v.add_argument("model")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("abstract", help="build an abstraction")
    a.add_argument("model")
    a.add_argument("--method", choices=("standard", "imdp", "mdpa"), default="imdp")
    a.add_argument("--representatives", help="comma-separated states, one per block")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_abstract)

    c = sub.add_parser("check", help="model-check a PCTL formula")
    c.add_argument("model")
    c.add_argument("--formula", required=True)
    c.add_argument("--state")
    c.add_argument("--model-kind", choices=("lmc", "mdpa"), default="lmc")
    c.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 1 when the formula fails at the state")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("compare", help="tabulate concrete vs abstract probabilities")
    k.add_argument("model")
    k.add_argument("--formula-template", required=True)
    k.add_argument("--k", default="1..20")
    k.add_argument("-o", "--output")
    k.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except (InputError, ModelError, PctlSyntaxError, ThresholdOutOfRange, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
