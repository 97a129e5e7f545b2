"""
Simulating before and after
===========================

The flattened philosophers model must produce the same controlled-state trace
as the original under the same choice policy and inputs.
"""

import random

from asmflat import FirstInOrder, SeededRandom, check, corpus, flatten, run
from asmflat.interp import random_inputs
from asmflat.validate import diff_trace

orig = check(corpus.load("philosophers"))
flat = check(flatten(orig.model))
inputs = random_inputs(orig, 8, random.Random(1))

trace = run(orig, inputs, 8, SeededRandom(3))
print(trace.serialize())

for policy in (FirstInOrder(), SeededRandom(3)):
    rep = diff_trace(orig, flat, inputs, 8, policy)
    print(policy, rep.verdict)

# breaking one update in a flattened model is caught at the first step it fires
import dataclasses
from asmflat.core import Builtin, Cond, IntLit

counter = check(corpus.load("counter3"))
flat_counter = flatten(counter.model)


def bump(rule):
    """Add one to the right-hand side of every update of ``c``."""
    if hasattr(rule, "loc") and rule.loc.func == "c":
        return dataclasses.replace(rule, value=Builtin("+", (rule.value, IntLit(1))))
    if isinstance(rule, Cond):
        return dataclasses.replace(rule, then=bump(rule.then))
    if hasattr(rule, "rules"):
        return dataclasses.replace(rule, rules=tuple(bump(r) for r in rule.rules))
    return rule


broken = dataclasses.replace(flat_counter, main=dataclasses.replace(
    flat_counter.main, body=bump(flat_counter.main.body)))
steps = [{("inc", ()): True}] * 6
print(diff_trace(counter, check(broken), steps, 6).to_json())
