"""Fuzzing campaign: generate, flatten, diff-test, shrink on divergence."""

from __future__ import annotations

import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from ..core import count_rules, is_normal_form
from ..flatten import PassId, flatten_pipeline
from ..interp import FirstInOrder, SeededRandom, random_inputs
from ..parser import parse
from ..printer import print_model
from ..typecheck import check
from .diff import diff_trace
from .gen import GenConfig, gen_model, shrink


@dataclass
class CaseResult:
    seed: int
    equivalent: bool
    normal_form: bool
    reparsed: bool
    mcr_law: bool
    detail: str = ""
    shrunk: str = ""
    rules_before: int = 0
    rules_after: int = 0

    @property
    def ok(self) -> bool:
        return self.equivalent and self.normal_form and self.reparsed and self.mcr_law


@dataclass
class FuzzReport:
    cases: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def failures(self) -> list:
        return [c for c in self.cases if not c.ok]

    @property
    def divergences(self) -> int:
        return sum(not c.equivalent for c in self.cases)

    def summary(self) -> str:
        n = len(self.cases)
        return (f"{n - len(self.failures)}/{n} cases ok, {self.divergences} divergences, "
                f"{self.elapsed:.1f}s")


def _diverges(model, steps, seed) -> str:
    """Empty string when equivalent, otherwise a short description."""
    flat, _ = flatten_pipeline(model)
    typed, tflat = check(model), check(flat)
    inputs = random_inputs(typed, steps, random.Random(seed))
    for pol in (FirstInOrder(), SeededRandom(seed)):
        rep = diff_trace(typed, tflat, inputs, steps, pol, seed)
        if not rep.equivalent:
            return (f"{rep.policy}: step {rep.step} {rep.location} "
                    f"{rep.original} vs {rep.flattened} ({rep.status_original} / {rep.status_flattened})")
    return ""


def run_case(config: GenConfig, steps: int = 10, do_shrink: bool = True) -> CaseResult:
    model = gen_model(config)
    seed = config.seed
    before = count_rules(model)
    flat, stats = flatten_pipeline(model)
    nf, _ = is_normal_form(flat)
    reparsed = parse(print_model(flat), allow_reserved=True) == flat
    mcr_law = stats.counts[PassId.MCR] == before.macro_call
    detail = _diverges(model, steps, seed)
    res = CaseResult(seed, not detail, nf, reparsed, mcr_law, detail,
                     rules_before=before.total, rules_after=count_rules(flat).total)
    if detail and do_shrink:
        small = shrink(model, lambda m: bool(_diverges(m, steps, seed)))
        res.shrunk = print_model(small)
    return res


def _batch(args):
    config, seeds, steps = args
    return [run_case(replace(config, seed=s), steps) for s in seeds]


def fuzz(config: GenConfig | None = None, runs: int = 1000, steps: int = 10,
         workers: int | None = None) -> FuzzReport:
    """Run ``runs`` generated cases with seeds ``config.seed .. config.seed + runs - 1``."""
    config = config or GenConfig()
    seeds = list(range(config.seed, config.seed + runs))
    workers = workers or os.cpu_count() or 1
    start = time.monotonic()
    report = FuzzReport()
    if workers <= 1 or runs < 20:
        report.cases = _batch((config, seeds, steps))
    else:
        chunk = max(1, len(seeds) // (workers * 4))
        jobs = [(config, seeds[i:i + chunk], steps) for i in range(0, len(seeds), chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_batch, jobs):
                report.cases.extend(part)
    report.elapsed = time.monotonic() - start
    return report
