"""Command-line entry point.

Exit codes: 0 success, 1 validation or diff failure, 2 parse/type error,
3 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import replace
from pathlib import Path

from .core import Apply, count_rules, delta_percent, is_literal, is_normal_form, literal_value
from .flatten import PassStats, SelectionError, flatten_pipeline, parse_passes
from .flatten.passes import FlattenError
from .interp import FirstInOrder, SeededRandom, member, random_inputs, run
from .parser import ParseErrors, parse, parse_term
from .printer import print_model
from .typecheck import TypeCheckError, check

OK, FAILED, BAD_INPUT, USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


class _Diagnostics(Exception):
    def __init__(self, path, items):
        self.path, self.items = path, items


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("ASMF_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ASMF_SEED must be an integer, got {env!r}") from None


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        model = parse(text, allow_reserved=True)
    except ParseErrors as e:
        raise _Diagnostics(path, [{"code": "E_PARSE", "line": d.span.line, "column": d.span.column,
                                   "message": d.message} for d in e.errors]) from None
    try:
        check(model)
    except TypeCheckError as e:
        raise _Diagnostics(path, [
            {"code": d.code, "line": d.span.line if d.span else None,
             "column": d.span.column if d.span else None, "message": d.message}
            for d in e.errors]) from None
    return model


def _report_diagnostics(exc: _Diagnostics, as_json: bool):
    if as_json:
        print(json.dumps({"file": exc.path, "diagnostics": exc.items}, indent=2), file=sys.stderr)
        return
    for d in exc.items:
        where = f"{d['line']}:{d['column']}" if d["line"] is not None else "-"
        print(f"{exc.path}:{where}: {d['code']}: {d['message']}", file=sys.stderr)


def _passes(text):
    try:
        return parse_passes(text)
    except SelectionError as e:
        raise UsageError(str(e)) from None


def _pipeline(model, selected):
    try:
        return flatten_pipeline(model, selected)
    except SelectionError as e:
        raise UsageError(str(e)) from None


def _emit_stats(stats: PassStats, name: str, fmt: str, csv_path):
    if csv_path:
        Path(csv_path).write_text(stats.csv(name), encoding="utf-8")
    if fmt == "table":
        sys.stdout.write(stats.table(name))
    elif fmt == "csv":
        sys.stdout.write(stats.csv(name))


def cmd_flatten(args) -> int:
    model = _load(args.input)
    out = Path(args.output) if args.output else None
    if out is not None and out.resolve() == Path(args.input).resolve():
        raise UsageError("refusing to overwrite the input file")
    flat, stats = _pipeline(model, _passes(args.passes))
    text = print_model(flat)
    try:
        again = parse(text, allow_reserved=True)
    except ParseErrors as e:
        print(f"flattened output does not reparse: {e}", file=sys.stderr)
        return FAILED
    if again != flat:
        print("flattened output reparses to a different model", file=sys.stderr)
        return FAILED
    if out is None:
        sys.stdout.write(text)
        if args.stats != "none":
            sys.stderr.write(stats.table(model.name) if args.stats == "table" else stats.csv(model.name))
        if args.csv:
            Path(args.csv).write_text(stats.csv(model.name), encoding="utf-8")
    else:
        out.write_text(text, encoding="utf-8")
        _emit_stats(stats, model.name, args.stats, args.csv)
    return OK


def _read_inputs(path: str, model, steps: int) -> list[dict]:
    """JSON list of ``{"f(1)": "true", ...}`` maps, one per step."""
    sig = check(model).sig
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read inputs from {path}: {e}") from None
    if not isinstance(data, list):
        raise UsageError("inputs file must hold a JSON list of objects")
    out = []
    for i, m in enumerate(data):
        row = {}
        for k, v in m.items():
            try:
                loc = parse_term(k)
                val = parse_term(v if isinstance(v, str) else json.dumps(v))
            except ParseErrors:
                raise UsageError(f"bad input entry {k!r}: {v!r}") from None
            if not is_literal(val) or not isinstance(loc, Apply) or not all(is_literal(a) for a in loc.args):
                raise UsageError(f"bad input entry {k!r}: {v!r}")
            f = sig.functions.get(loc.func) if isinstance(loc, Apply) else None
            if f is None or f.kind != "monitored" or len(loc.args) != f.arity:
                raise UsageError(f"unknown monitored location {k!r}")
            args = tuple(literal_value(a) for a in loc.args)
            value = literal_value(val)
            if not (all(member(a, sig.resolve(d)) for a, d in zip(args, f.params))
                    and member(value, sig.resolve(f.result))):
                raise UsageError(f"input {k}={v} outside the declared domains (entry {i})")
            row[(loc.func, args)] = value
        out.append(row)
    if len(out) < steps:
        raise UsageError(f"inputs file has {len(out)} entries, need {steps}")
    return out


def cmd_simulate(args) -> int:
    model = _load(args.input)
    seed = _seed(args)
    policy = FirstInOrder() if args.deterministic else SeededRandom(seed)
    if args.inputs:
        inputs = _read_inputs(args.inputs, model, args.steps)
    else:
        inputs = random_inputs(check(model), args.steps, random.Random(seed))
    sys.stdout.write(run(model, inputs, args.steps, policy).serialize())
    return OK


def cmd_scenario(args) -> int:
    from .validate import ScenarioError, parse_scenario, run_scenario

    model = _load(args.input)
    try:
        scen = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"), args.scenario)
    except OSError as e:
        raise UsageError(f"cannot read {args.scenario}: {e.strerror}") from None
    except ScenarioError as e:
        print(f"{args.scenario}: {e}", file=sys.stderr)
        return BAD_INPUT
    if args.flatten:
        model, _ = _pipeline(model, None)
    policy = SeededRandom(args.seed) if args.seed is not None else FirstInOrder()
    report = run_scenario(model, scen, policy)
    print(report.summary())
    return OK if report.passed else FAILED


def cmd_diff(args) -> int:
    from .validate import diff_trace

    model = _load(args.input)
    seed = _seed(args)
    flat, _ = _pipeline(model, _passes(args.passes))
    t_orig, t_flat = check(model), check(flat)
    rng = random.Random(seed)
    pols = [FirstInOrder(), SeededRandom(seed)]
    ok = 0
    failures = []
    for _ in range(args.runs):
        inputs = random_inputs(t_orig, args.steps, rng)
        reps = [diff_trace(t_orig, t_flat, inputs, args.steps, p, seed) for p in pols]
        bad = [r for r in reps if not r.equivalent]
        if bad:
            failures.append(bad[0])
        else:
            ok += 1
    print(f"{ok}/{args.runs} equivalent")
    if args.json:
        Path(args.json).write_text(json.dumps([r.as_json() for r in failures], indent=2, sort_keys=True),
                                   encoding="utf-8")
    for r in failures[:3]:
        print(f"diverged: step {r.step} {r.location}: {r.original} vs {r.flattened} "
              f"[{r.policy}; {r.status_original} / {r.status_flattened}]", file=sys.stderr)
    return OK if not failures else FAILED


def cmd_fuzz(args) -> int:
    from .validate import GenConfig, fuzz

    cfg = GenConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
            cfg = replace(cfg, **data)
        except (OSError, json.JSONDecodeError, TypeError, ValueError) as e:
            raise UsageError(f"bad fuzz config: {e}") from None
    overrides = {k: getattr(args, k) for k in ("max_depth", "max_macros", "max_card")
                 if getattr(args, k) is not None}
    if args.seed is not None or "ASMF_SEED" in os.environ:
        overrides["seed"] = _seed(args)
    cfg = replace(cfg, **overrides)
    report = fuzz(cfg, args.runs, args.steps, args.workers)
    print(report.summary())
    for c in report.failures[:5]:
        print(f"seed {c.seed}: {c.detail or 'structural check failed'}", file=sys.stderr)
        if c.shrunk:
            print(c.shrunk, file=sys.stderr)
    return OK if not report.failures else FAILED


def cmd_stats(args) -> int:
    model = _load(args.input)
    flat, stats = _pipeline(model, None)
    before, after = count_rules(model), count_rules(flat)
    nf, _ = is_normal_form(flat)
    keys = list(before.as_dict())
    width = max(len(k) for k in keys)
    print(f"{'':{width}}  {'original':>8}  {'flattened':>9}")
    for k in keys:
        print(f"{k:{width}}  {before.as_dict()[k]:>8}  {after.as_dict()[k]:>9}")
    print(f"delta%: {delta_percent(after.total, before.total)}")
    print(f"normal form: {'yes' if nf else 'no'}")
    sys.stdout.write(stats.table(model.name))
    if args.csv:
        Path(args.csv).write_text(stats.csv(model.name), encoding="utf-8")
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asmflat", description="Flatten, simulate and validate ASM models.")
    p.add_argument("--json-diagnostics", action="store_true",
                   help="print parse/type errors as JSON on stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    f = sub.add_parser("flatten", help="lower a model to normal form")
    f.add_argument("input")
    f.add_argument("-o", "--output")
    f.add_argument("--passes", default="all", help="comma list of MCR,FR,ChR,AR,LR,CaR,NR,TS,RS")
    f.add_argument("--stats", choices=("table", "csv", "none"), default="table")
    f.add_argument("--csv", metavar="FILE", help="also write pass statistics as CSV")
    f.set_defaults(func=cmd_flatten)

    s = sub.add_parser("simulate", help="run a model and print its trace")
    s.add_argument("input")
    s.add_argument("--steps", type=int, default=10)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--seed", type=int)
    g.add_argument("--deterministic", action="store_true", help="first-in-order choice")
    s.add_argument("--inputs", metavar="FILE", help="JSON list of monitored input maps")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("scenario", help="run a .scen script")
    c.add_argument("input")
    c.add_argument("scenario")
    c.add_argument("--flatten", action="store_true", help="run on the flattened model")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_scenario)

    d = sub.add_parser("diff", help="differential test against the flattened model")
    d.add_argument("input")
    d.add_argument("--runs", type=int, default=100)
    d.add_argument("--steps", type=int, default=20)
    d.add_argument("--seed", type=int)
    d.add_argument("--passes", default="all")
    d.add_argument("--json", metavar="FILE", help="write diverged reports as JSON")
    d.set_defaults(func=cmd_diff)

    z = sub.add_parser("fuzz", help="random models, flattened and diff-tested")
    z.add_argument("--config", metavar="FILE", help="JSON object of generator settings")
    z.add_argument("--runs", type=int, default=100)
    z.add_argument("--steps", type=int, default=10)
    z.add_argument("--seed", type=int)
    z.add_argument("--max-depth", type=int)
    z.add_argument("--max-macros", type=int)
    z.add_argument("--max-card", type=int)
    z.add_argument("--workers", type=int)
    z.set_defaults(func=cmd_fuzz)

    t = sub.add_parser("stats", help="rule histograms and pass statistics")
    t.add_argument("input")
    t.add_argument("--csv", metavar="FILE")
    t.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE
    for name in ("steps", "runs"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            print(f"asmflat: error: --{name} must be non-negative", file=sys.stderr)
            return USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"asmflat: error: {e}", file=sys.stderr)
        return USAGE
    except _Diagnostics as e:
        _report_diagnostics(e, args.json_diagnostics)
        return BAD_INPUT
    except FlattenError as e:
        print(f"asmflat: flattening failed: {e}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
