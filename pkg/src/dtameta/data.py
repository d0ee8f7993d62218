"""Study-level data model and CSV ingestion."""

from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .errors import ParseError


@dataclass(frozen=True)
class Study2x2:
    """One study's 2x2 diagnostic table: TP, FP, FN, TN cell counts."""

    n11: int  # true positives
    n10: int  # false positives
    n01: int  # false negatives
    n00: int  # true negatives
    label: Optional[str] = None
    cutoff: Optional[str] = None  # echoed in output, never interpreted

    def __post_init__(self):
        for name in ("n11", "n10", "n01", "n00"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise ValueError(f"cell {name} must be a non-negative integer, got {v!r}")
        if self.n1 < 1:
            raise ValueError(f"study {self.label!r}: no diseased subjects (TP+FN = 0)")
        if self.n0 < 1:
            raise ValueError(f"study {self.label!r}: no non-diseased subjects (FP+TN = 0)")

    @property
    def n1(self):
        """Number of diseased subjects."""
        return self.n11 + self.n01

    @property
    def n0(self):
        """Number of non-diseased subjects."""
        return self.n10 + self.n00

    def cells(self):
        return (self.n11, self.n10, self.n01, self.n00)

    @property
    def min_cell(self):
        return min(self.cells())


def counts_arrays(studies):
    """Stack study cell counts into float arrays (n11, n10, n01, n00)."""
    a = np.array([s.cells() for s in studies], dtype=float)
    return a[:, 0], a[:, 1], a[:, 2], a[:, 3]


_HEADER_FIELDS = ("label", "tp", "fp", "fn", "tn")


def parse_studies_csv(stream):
    """Parse a studies CSV: header then one study per line.

    Columns: label, TP, FP, FN, TN, and an optional trailing cut-off
    column that is preserved but never interpreted. Raises
    :class:`ParseError` naming the offending line and field.
    """
    lines = [ln for ln in stream]
    if not lines:
        raise ParseError("empty input: expected a header row")
    header = [h.strip().lower() for h in lines[0].strip().split(",")]
    if tuple(header[:5]) != _HEADER_FIELDS:
        raise ParseError(
            f"line 1: expected header starting with {','.join(_HEADER_FIELDS)}, "
            f"got {lines[0].strip()!r}"
        )
    has_cutoff = len(header) > 5

    studies = []
    seen = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        parts = [p.strip() for p in raw.strip().split(",")]
        if len(parts) < 5:
            raise ParseError(f"line {lineno}: expected at least 5 fields, got {len(parts)}")
        label = parts[0]
        if label in seen:
            raise ParseError(f"line {lineno}: duplicate study label {label!r}")
        seen.add(label)
        counts = []
        for field_name, text in zip(_HEADER_FIELDS[1:], parts[1:5]):
            try:
                v = int(text)
            except ValueError:
                raise ParseError(f"line {lineno}: field {field_name!r} is not an integer: {text!r}")
            if v < 0:
                raise ParseError(f"line {lineno}: field {field_name!r} is negative: {v}")
            counts.append(v)
        cutoff = parts[5] if has_cutoff and len(parts) > 5 else None
        try:
            studies.append(
                Study2x2(counts[0], counts[1], counts[2], counts[3], label=label, cutoff=cutoff)
            )
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}")
    return studies


def load_studies(path):
    """Read a studies CSV file from disk."""
    with open(path, encoding="utf-8") as fh:
        return parse_studies_csv(fh)


def load_cd64():
    """The bundled CD64 meta-analysis dataset (27 studies)."""
    text = resources.files("dtameta.datasets").joinpath("cd64.csv").read_text(encoding="utf-8")
    return parse_studies_csv(text.splitlines(keepends=True))
