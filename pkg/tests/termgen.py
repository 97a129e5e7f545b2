"""Random well-typed terms over a tiny signature, plus every state of it."""

from __future__ import annotations

import itertools
import random

from asmflat import check
from asmflat.core import Apply, BoolLit, Builtin, IntLit, IsDef, UndefLit
from asmflat.interp import State

from tests.helpers import make

SIGNATURE = """  monitored a : Boolean
  monitored b : Boolean
  monitored x : [0..2]
  controlled c : [0..2]
  static two : [0..2] = 2
  static inc([0..2]) : [0..3] = {0 -> 1, 1 -> 2, 2 -> 3}"""

MODEL = check(make(SIGNATURE, "    skip", "  c := 0"))


def all_states():
    """Every (state, inputs) pair: 2 * 2 * 3 * 3 = 36 combinations."""
    for va, vb, vx, vc in itertools.product([False, True], [False, True], range(3), range(3)):
        yield State({("c", ()): vc}), {("a", ()): va, ("b", ()): vb, ("x", ()): vx}


def bool_term(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice([BoolLit(True), BoolLit(False), Apply("a", ()), Apply("b", ())])
    pick = rng.randrange(5)
    if pick == 0:
        return Builtin("not", (bool_term(rng, depth - 1),))
    if pick == 1:
        return Builtin(rng.choice(["and", "or", "implies"]), (bool_term(rng, depth - 1), bool_term(rng, depth - 1)))
    if pick == 2:
        return Builtin(rng.choice(["=", "!=", "<", "<=", ">", ">="]), (int_term(rng, depth - 1), int_term(rng, depth - 1)))
    if pick == 3:
        return Builtin(rng.choice(["=", "!="]), (bool_term(rng, depth - 1), bool_term(rng, depth - 1)))
    return IsDef(int_term(rng, depth - 1))


def int_term(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([IntLit(rng.randrange(4)), IntLit(0), IntLit(1), Apply("x", ()), Apply("c", ()),
                           Apply("two", ()), UndefLit()] if rng.random() < 0.1 else
                          [IntLit(rng.randrange(4)), IntLit(0), IntLit(1), Apply("x", ()), Apply("c", ()),
                           Apply("two", ())])
    if rng.random() < 0.2:
        return Apply("inc", (IntLit(rng.randrange(3)),))
    return Builtin(rng.choice(["+", "-", "*"]), (int_term(rng, depth - 1), int_term(rng, depth - 1)))
