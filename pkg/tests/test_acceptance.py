"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line; the lines are printed in the
terminal summary (see ``conftest.py``) and when the file is run directly.
"""

import os
import random
import time

import pytest

from asmflat import (
    FirstInOrder, PassId, check, corpus, count_rules, delta_percent, eval_term, flatten, flatten_pipeline,
    is_normal_form, parse, parse_term, print_model,
)
from asmflat.core import Cond, walk_rules
from asmflat.flatten import fr, lr, mcr, simplify_term
from asmflat.interp import random_inputs, values_equal
from asmflat.validate import GenConfig, diff_models, diff_trace, fuzz, policies

from tests.helpers import make
from tests.mutate import first_fire, n_int_updates, perturb
from tests.oracles import product_size
from tests.termgen import MODEL, all_states, bool_term, int_term

RESULTS: dict[int, str] = {}
NAMES = corpus.names()
TRANSFORMS = (PassId.MCR, PassId.FR, PassId.ChR, PassId.AR, PassId.LR, PassId.CaR)


def record(n: int, ok: bool, detail: str):
    RESULTS[n] = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


@pytest.fixture(scope="module")
def models():
    return {n: corpus.load(n) for n in NAMES}


@pytest.fixture(scope="module")
def campaign():
    cfg = GenConfig(seed=0, max_depth=4, max_macros=3, max_card=4)
    return fuzz(cfg, runs=1000, steps=10, workers=os.cpu_count())


def test_c01_normal_form_guarantee(models):
    slow, bad = [], []
    worst = 0.0
    for name, m in models.items():
        t0 = time.monotonic()
        flat, _ = flatten_pipeline(m)
        dt = time.monotonic() - t0
        worst = max(worst, dt)
        if not is_normal_form(flat)[0]:
            bad.append(name)
        if dt >= 1.0:
            slow.append(f"{name} {dt:.2f}s")
    record(1, not bad and not slow,
           f"{len(models) - len(bad)}/{len(models)} corpus models in normal form, slowest {worst:.2f}s (< 1 s)"
           + (f"; not normal: {bad}" if bad else "") + (f"; slow: {slow}" if slow else ""))


def test_c02_blowup_stress():
    sig = ("  domain Ten = [0..9]\n  monitored m1 : Ten\n  monitored m2 : Ten\n  monitored m3 : Ten\n"
           "  controlled r : [0..27]")
    main = ("    let ($a = m1) in\n      let ($b = m2) in\n        let ($c = m3) in\n"
            "          r := $a + $b + $c\n        endlet\n      endlet\n    endlet")
    m = make(sig, main, "  r := 0")
    t0 = time.monotonic()
    flat, _ = flatten_pipeline(m)
    dt = time.monotonic() - t0
    h = count_rules(flat)
    ok = dt < 10 and is_normal_form(flat)[0] and h.conditional == 1000 and h.update == 1000
    # spot-check semantics on a few random inputs
    t_m, t_f = check(m), check(flat)
    rng = random.Random(2)
    reps = [diff_trace(t_m, t_f, random_inputs(t_m, 5, rng), 5) for _ in range(20)]
    ok = ok and all(r.equivalent for r in reps)
    record(2, ok, f"3 nested lets over |D|=10 -> {h.conditional} branches in {dt:.2f}s (< 10 s)")


def test_c03_delta_percent():
    table = {(13, 9): 44, (65, 7): 829, (17, 4): 325, (422, 645): -35}
    got = {k: delta_percent(*k) for k in table}
    record(3, got == table, "delta% " + ", ".join(f"{a},{b}->{v}" for (a, b), v in got.items()))


def test_c04_mcr_count_law(models, campaign):
    corpus_bad = [n for n, m in models.items() if mcr(m)[1] != count_rules(m).macro_call]
    fuzz_bad = [c.seed for c in campaign.cases if not c.mcr_law]
    record(4, not corpus_bad and not fuzz_bad,
           f"MCR applications == macro-call count on {len(models) - len(corpus_bad)}/{len(models)} corpus and "
           f"{len(campaign.cases) - len(fuzz_bad)}/{len(campaign.cases)} fuzzed models")


def test_c05_fr_lr_cardinality():
    checked, bad = 0, []
    for n in (1, 2, 3):
        for size in (2, 3, 10):
            dom = f"  domain D = [0..{size - 1}]"
            binders = ", ".join(f"$x{i} in D" for i in range(n))
            m = make(dom + "\n  controlled c : [0..1]", f"    forall {binders} with true do c := 1", "  c := 0")
            out, _ = fr(m)
            got_fr = sum(isinstance(r, Cond) for r in walk_rules(out.main.body))
            sig = dom + "".join(f"\n  monitored m{i} : D" for i in range(n)) + "\n  controlled c : [0..1]"
            binds = ", ".join(f"$v{i} = m{i}" for i in range(n))
            out, _ = lr(make(sig, f"    let ({binds}) in c := 1 endlet", "  c := 0"))
            got_lr = sum(isinstance(r, Cond) for r in walk_rules(out.main.body))
            want = product_size(*[size] * n)
            checked += 2
            if got_fr != want or got_lr != want:
                bad.append((n, size, got_fr, got_lr, want))
    record(5, not bad, f"{checked - 2 * len(bad)}/{checked} FR/LR expansions produced exactly prod|Dj| conditionals"
           + (f"; mismatches {bad}" if bad else ""))


def _agrees(t, s) -> bool:
    for state, inputs in all_states():
        a = eval_term(t, MODEL, state, inputs)
        b = eval_term(s, MODEL, state, inputs)
        if not (a is b or values_equal(a, b)):
            return False
    return True


def test_c06_term_simplifier():
    reference = [("a and true", "a"), ("3 < 4", "true"), ("2 + 1", "3")]
    pub_ok = all(simplify_term(parse_term(a), MODEL.model)[0] == parse_term(b) for a, b in reference)
    rng = random.Random(6)
    cases = mismatches = 0
    while cases < 50:
        t = bool_term(rng, 4) if rng.random() < 0.6 else int_term(rng, 4)
        s, k = simplify_term(t, MODEL.model)
        if k == 0:
            continue
        cases += 1
        mismatches += not _agrees(t, s)
    record(6, pub_ok and mismatches == 0,
           f"reference rewrites {'ok' if pub_ok else 'WRONG'}; {cases} random folds, {mismatches} mismatches "
           f"over 36 states each")


def test_c07_differential_preservation(models):
    total = bad = 0
    for name, m in models.items():
        flat = flatten(m)
        reps = diff_models(m, flat, runs=100, steps=20, seed=7, policy_list=policies((1, 2, 3, 4, 5)))
        total += len(reps)
        bad += sum(not r.equivalent for r in reps)
    # mutation smoke test: perturbed flattened models must be caught at the first firing step
    caught = tried = 0
    for name in ("coffee_vending", "counter3", "ring_buffer", "traffic_light"):
        m = models[name]
        flat = flatten(m)
        t_m = check(m)
        for which in range(min(2, n_int_updates(flat))):
            mutant, idx = perturb(flat, which)
            inputs = random_inputs(t_m, 20, random.Random(which))
            expected = first_fire(flat, idx, inputs, 20)
            if expected is None:
                continue
            tried += 1
            rep = diff_trace(t_m, check(mutant), inputs, 20)
            caught += (not rep.equivalent) and rep.step == expected
    ok = bad == 0 and tried > 0 and caught == tried
    record(7, ok, f"{total - bad}/{total} corpus traces equivalent (13 models x 100 runs x 20 steps x 6 policies); "
                  f"mutants caught at first fire {caught}/{tried}")


def test_c08_fuzzing_campaign(campaign):
    div = campaign.divergences
    ok = len(campaign.cases) == 1000 and div == 0 and not campaign.failures and campaign.elapsed < 300
    record(8, ok, f"{len(campaign.cases)} generated models, {div} divergences, "
                  f"{len(campaign.failures)} failed checks, {campaign.elapsed:.1f}s (< 300 s)")


def test_c09_reparse(models, campaign):
    corpus_ok = sum(parse(print_model(f := flatten(m)), allow_reserved=True) == f for m in models.values())
    fuzz_ok = sum(c.reparsed for c in campaign.cases)
    ok = corpus_ok == len(models) and fuzz_ok == len(campaign.cases)
    record(9, ok, f"reparse equal: corpus {corpus_ok}/{len(models)}, fuzz {fuzz_ok}/{len(campaign.cases)}")


def test_c10_idempotence(models):
    good = 0
    for m in models.values():
        once = flatten(m)
        twice, stats = flatten_pipeline(once)
        good += twice == once and all(stats.counts[p] == 0 for p in TRANSFORMS) and stats.nr_levels == 0
    record(10, good == len(models), f"second pipeline run is a no-op on {good}/{len(models)} corpus models")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
