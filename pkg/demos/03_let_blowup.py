"""
How fast normal form grows
==========================

Each let over a monitored value becomes one branch per possible value, so
nested lets multiply.
"""

import time

from asmflat import count_rules, flatten_pipeline, parse

TEMPLATE = """asm blowup
signature:
  domain D = [0..{hi}]
  monitored m1 : D
  monitored m2 : D
  monitored m3 : D
  controlled r : [0..{top}]
definitions:
  main rule r_main =
    let ($a = m1) in let ($b = m2) in let ($c = m3) in
      r := $a + $b + $c
    endlet endlet endlet
init:
  r := 0
"""

for size in (2, 4, 6, 8, 10):
    model = parse(TEMPLATE.format(hi=size - 1, top=3 * (size - 1)))
    t0 = time.monotonic()
    flat, stats = flatten_pipeline(model)
    took = time.monotonic() - t0
    print(f"|D|={size:2}  rules {count_rules(model).total} -> {count_rules(flat).total:5}  "
          f"LR visits {stats.counts['LR']:4}  {took:.2f}s")
