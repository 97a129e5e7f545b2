"""
Fuzzing the flattener
=====================

Random well-typed models are flattened and diff-tested. The shrinker cuts a
model down while a property keeps holding, which is how divergences get
reported.
"""

from asmflat import count_rules, print_model
from asmflat.core import Choose, walk_rules
from asmflat.validate import GenConfig, fuzz, gen_model, shrink

report = fuzz(GenConfig(seed=0, max_depth=3), runs=60, steps=10, workers=1)
print(report.summary())

# one generated model
model = gen_model(GenConfig(seed=11))
print(print_model(model))
print(count_rules(model).as_dict())


# shrink it while it still contains a choose rule
def has_choose(m):
    return any(isinstance(r, Choose) for d in m.rule_decls() for r in walk_rules(d.body))


seed = next(s for s in range(100) if has_choose(gen_model(GenConfig(seed=s))))
big = gen_model(GenConfig(seed=seed))
small = shrink(big, has_choose)
print(f"seed {seed}: {count_rules(big).total} rules shrunk to {count_rules(small).total}")
print(print_model(small))
