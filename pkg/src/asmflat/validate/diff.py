"""Differential trace testing of an original model against its flattened form."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field

from ..interp import (
    FirstInOrder, SeededRandom, format_location, format_value, random_inputs, run,
)
from ..typecheck import check

EQUIVALENT = "equivalent"
DIVERGED = "diverged"


@dataclass
class DiffReport:
    verdict: str
    step: int | None = None
    location: str | None = None
    original: str | None = None
    flattened: str | None = None
    status_original: str = ""
    status_flattened: str = ""
    policy: str = ""
    seed: int | None = None
    steps: int = 0
    inputs: list = field(default_factory=list)

    @property
    def equivalent(self) -> bool:
        return self.verdict == EQUIVALENT

    def as_json(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_json(), sort_keys=True)


def _inputs_json(inputs) -> list:
    return [{format_location(k): format_value(v) for k, v in sorted(m.items(), key=lambda kv: format_location(kv[0]))}
            for m in inputs]


def diff_trace(m_orig, m_flat, inputs, n: int, policy=None, seed=None) -> DiffReport:
    """Run both models in lockstep and report the first controlled-state difference."""
    policy = policy or FirstInOrder()
    a = run(m_orig, inputs, n, policy)
    b = run(m_flat, inputs, n, policy)
    rep = DiffReport(EQUIVALENT, status_original=a.status_line(), status_flattened=b.status_line(),
                     policy=str(policy), seed=seed, steps=n, inputs=_inputs_json(inputs[:n]))
    if a.serialize() == b.serialize():
        return rep
    rep.verdict = DIVERGED
    for i, (sa, sb) in enumerate(zip(a.states, b.states)):
        if sa == sb:
            continue
        for loc in sorted(set(sa) | set(sb), key=format_location):
            va, vb = sa.get(loc), sb.get(loc)
            if va is None or vb is None or format_value(va) != format_value(vb) or type(va) is not type(vb):
                rep.step = i
                rep.location = format_location(loc)
                rep.original = "absent" if va is None else format_value(va)
                rep.flattened = "absent" if vb is None else format_value(vb)
                return rep
    rep.step = min(len(a.states), len(b.states))
    return rep


def policies(seeds=(1, 2, 3, 4, 5)) -> list:
    """FirstInOrder followed by one SeededRandom per seed."""
    return [FirstInOrder()] + [SeededRandom(s) for s in seeds]


def diff_models(m_orig, m_flat, runs: int = 100, steps: int = 20, seed: int = 0,
                policy_list=None) -> list[DiffReport]:
    """``runs`` random input sequences, each tried under every policy."""
    t_orig = check(getattr(m_orig, "model", m_orig))
    t_flat = check(getattr(m_flat, "model", m_flat))
    rng = random.Random(seed)
    pols = policy_list if policy_list is not None else [FirstInOrder()]
    out = []
    for _ in range(runs):
        inputs = random_inputs(t_orig, steps, rng)
        for p in pols:
            out.append(diff_trace(t_orig, t_flat, inputs, steps, p, seed))
    return out
