"""Parse, simulate and flatten finite Abstract State Machine models."""

from .core import count_rules, delta_percent, free_variables, is_normal_form, substitute
from .interp import FirstInOrder, SeededRandom, Trace, eval_term, initial_state, run, step, update_set
from .parser import ParseError, ParseErrors, parse, parse_rule, parse_term
from .printer import print_model
from .typecheck import TypeCheckError, TypedModel, check, domain_of, enumerate_domain
from .flatten import PassId, PassStats, flatten, flatten_pipeline

__version__ = "0.1.0"
