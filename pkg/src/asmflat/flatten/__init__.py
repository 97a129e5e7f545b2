"""Flattening transformations, simplifiers and the ordered pipeline."""

from .passes import FlattenError, ar, car, chr_, fr, lr, mcr, normalize, nr
from .pipeline import (
    ALL_PASSES, COLUMNS, PassId, PassStats, SelectionError, flatten, flatten_pipeline, parse_passes,
)
from .simplify import rs, simplify, simplify_term, ts

chr = chr_
