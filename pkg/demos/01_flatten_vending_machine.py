"""
Flattening a vending machine
============================

Parse a bundled model, lower it to normal form and compare the rule counts.
"""

from asmflat import corpus, count_rules, delta_percent, flatten_pipeline, is_normal_form, print_model

model = corpus.load("coffee_vending")
print(corpus.source("coffee_vending"))

# every pass runs in order, with the simplifiers after each one
flat, stats = flatten_pipeline(model)
print(print_model(flat))

before, after = count_rules(model), count_rules(flat)
print("rules before:", before.as_dict())
print("rules after: ", after.as_dict())
print("delta%:", delta_percent(after.total, before.total))
print("normal form:", is_normal_form(flat)[0])

# per-pass application counts, the same columns as the CLI prints
print(stats.table(model.name))
