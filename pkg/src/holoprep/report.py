"""Dataset arithmetic and tables: expansion factors, per-class and per-split
instance tables, and before/after metric ratio statements.

Displayed factors are the raw quotient rounded to 2 decimals with
round-half-away-from-zero; raw values are always retained alongside.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .model import Source, Split
from .prep import InstanceCounts

_SOURCE_LABELS = {Source.MANUAL: "Manual Labels", Source.AUTO: "Automated Labels"}
_SPLIT_COLUMNS = (Split.TRAIN, Split.VAL, Split.TEST)


def round_display(value: float, places: int = 2) -> str:
    """Round half away from zero at the given number of decimals."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class FactorReport:
    """Dataset growth: expanded count over baseline count."""

    baseline: int
    expanded: int
    raw: float
    display: str


def expansion_factor(baseline: int, expanded: int) -> FactorReport:
    """How many times larger the expanded count is than the baseline."""
    if baseline <= 0:
        raise ValueError(f"baseline count must be positive, got {baseline}")
    raw = expanded / baseline
    return FactorReport(baseline, expanded, raw, round_display(raw))


@dataclass(frozen=True)
class RatioReport:
    """Before/after comparison of one metric, labeled by direction."""

    baseline: float
    updated: float
    ratio: float
    display: str
    direction: str
    metric: str = ""


def compare_runs(baseline: float, updated: float, metric: str = "") -> RatioReport:
    """Ratio between two runs of the same metric.

    Improvements report updated/baseline, degradations baseline/updated, so the
    ratio is always >= 1 and the direction label says which way it went.
    """
    if baseline <= 0 or updated <= 0:
        raise ValueError("metric values must be positive to form a ratio")
    if updated == baseline:
        direction, ratio = "unchanged", 1.0
    elif updated > baseline:
        direction, ratio = "improvement", updated / baseline
    else:
        direction, ratio = "degradation", baseline / updated
    return RatioReport(baseline, updated, ratio, round_display(ratio), direction, metric)


@dataclass(frozen=True)
class Table:
    """A small rectangular table renderable as aligned text or CSV."""

    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    title: str = ""

    def to_text(self) -> str:
        widths = [len(h) for h in self.headers]
        for row in self.rows:
            widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
        out = io.StringIO()
        if self.title:
            out.write(self.title + "\n")
        header = "  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(self.headers, widths)))
        out.write(header + "\n")
        out.write("-" * len(header) + "\n")
        for row in self.rows:
            out.write(
                "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))) + "\n"
            )
        return out.getvalue()

    def to_csv(self) -> str:
        lines = [",".join(self.headers)]
        lines += [",".join(row) for row in self.rows]
        return "\n".join(lines) + "\n"


def table_instances(counts: InstanceCounts) -> Table:
    """Per-class instance table, one column per label source plus a totals row."""
    rows = []
    for cname in counts.classes:
        rows.append(
            (
                cname,
                str(counts.total(class_name=cname, source=Source.MANUAL)),
                str(counts.total(class_name=cname, source=Source.AUTO)),
            )
        )
    rows.append(
        (
            "Total",
            str(counts.total(source=Source.MANUAL)),
            str(counts.total(source=Source.AUTO)),
        )
    )
    return Table(
        headers=("Classes", "Manual Labels", "Automated Labels"),
        rows=tuple(rows),
        title="Instances per class",
    )


def table_splits(counts: InstanceCounts) -> Table:
    """Per-source split distribution with a total column.

    Every counted instance must carry a split assignment; anything unassigned
    means the split map and the manifest disagree, which is an error.
    """
    rows = []
    for source in (Source.MANUAL, Source.AUTO):
        total = counts.total(source=source)
        if total == 0:
            continue
        unassigned = counts.unassigned(source)
        if unassigned:
            raise ValueError(
                f"{unassigned} {source.value} instance(s) have no split assignment; totals would not match"
            )
        per_split = [counts.total(source=source, split=s) for s in _SPLIT_COLUMNS]
        if sum(per_split) != total:
            raise ValueError(f"split totals {sum(per_split)} != instance total {total} for {source.value}")
        rows.append((_SOURCE_LABELS[source], *[str(n) for n in per_split], str(total)))
    return Table(
        headers=("Annotation Method", "Training", "Validation", "Testing", "Total"),
        rows=tuple(rows),
        title="Data distribution across splits",
    )
