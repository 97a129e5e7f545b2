"""Ordered pass pipeline and per-pass statistics."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from enum import Enum

from ..core import Model, max_nesting
from ..typecheck import check
from . import passes
from .simplify import rs, ts


class PassId(str, Enum):
    MCR = "MCR"
    FR = "FR"
    ChR = "ChR"
    AR = "AR"
    LR = "LR"
    CaR = "CaR"
    NR = "NR"
    TS = "TS"
    RS = "RS"

    def __str__(self):
        return self.value


TRANSFORMS = (PassId.MCR, PassId.FR, PassId.ChR, PassId.AR, PassId.LR, PassId.CaR, PassId.NR)
ALL_PASSES = frozenset(PassId)
COLUMNS = tuple(p.value for p in PassId) + ("Time",)

_RUN = {
    PassId.MCR: passes.mcr,
    PassId.FR: passes.fr,
    PassId.ChR: passes.chr_,
    PassId.AR: passes.ar,
    PassId.LR: passes.lr,
    PassId.CaR: passes.car,
}


class SelectionError(ValueError):
    pass


def parse_passes(text: str) -> frozenset[PassId]:
    """``"MCR,FR"`` -> {MCR, FR}; names are case-insensitive."""
    by_name = {p.value.lower(): p for p in PassId}
    out = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if part.lower() == "all":
            out |= ALL_PASSES
            continue
        if part.lower() not in by_name:
            raise SelectionError(f"unknown pass {part!r}")
        out.add(by_name[part.lower()])
    return frozenset(out)


@dataclass
class PassStats:
    counts: dict = field(default_factory=lambda: dict.fromkeys(PassId, 0))
    times: dict = field(default_factory=lambda: dict.fromkeys(PassId, 0.0))
    total_time: float = 0.0

    @property
    def nr_levels(self) -> int:
        return self.counts[PassId.NR]

    def row(self) -> list[str]:
        return [str(self.counts[p]) for p in PassId] + [f"{self.total_time:.2f}"]

    def table(self, name: str | None = None) -> str:
        head = (["Model"] if name is not None else []) + list(COLUMNS)
        vals = ([name] if name is not None else []) + self.row()
        widths = [max(len(h), len(v)) for h, v in zip(head, vals)]
        fmt = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return fmt(head) + "\n" + fmt(vals) + "\n"

    def csv(self, name: str = "") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model"] + list(COLUMNS))
        w.writerow([name] + self.row())
        return buf.getvalue()


def _simplify(model, selected, stats):
    """TS and RS (whichever are selected) to a joint fixpoint."""
    if PassId.TS not in selected and PassId.RS not in selected:
        return model
    while True:
        changed = False
        for pid, fn in ((PassId.TS, ts), (PassId.RS, rs)):
            if pid not in selected:
                continue
            t0 = time.monotonic()
            model, n = fn(model)
            stats.times[pid] += time.monotonic() - t0
            stats.counts[pid] += n
            changed |= n > 0
        if not changed:
            return model


def flatten_pipeline(model: Model, selected=None) -> tuple[Model, PassStats]:
    """Run the selected passes in canonical order with TS/RS after each."""
    model = getattr(model, "model", model)
    selected = ALL_PASSES if selected is None else frozenset(PassId(p) for p in selected)
    if PassId.LR in selected and PassId.AR not in selected:
        raise SelectionError("LR requires AR")
    check(model)
    stats = PassStats()
    start = time.monotonic()
    before = max_nesting(model)
    for pid in TRANSFORMS:
        if pid not in selected:
            continue
        t0 = time.monotonic()
        if pid is PassId.NR:
            while True:
                new, _ = passes.nr(model)
                stats.times[pid] += time.monotonic() - t0
                new = _simplify(new, selected, stats)
                t0 = time.monotonic()
                if new == model:
                    break
                model = new
            stats.counts[pid] = max(0, before - max_nesting(model))
            continue
        model, n = _RUN[pid](model)
        stats.times[pid] += time.monotonic() - t0
        stats.counts[pid] += n
        model = _simplify(model, selected, stats)
    if not (selected & set(TRANSFORMS)):
        model = _simplify(model, selected, stats)
    stats.total_time = time.monotonic() - start
    return model, stats


def flatten(model: Model) -> Model:
    """Full pipeline, result only."""
    return flatten_pipeline(model)[0]
