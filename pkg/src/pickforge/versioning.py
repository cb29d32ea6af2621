"""Versions, version constraints, and calendar release versions.

Grammars
--------
version    :=  number ("." number)* ("-" tag)?
               number = "0" or a digit run without a leading zero
               tag    = one or more ASCII letters or digits
constraint :=  "*"  |  clause ("|" clause)*
               clause = atom ("," atom)*
               atom   = op version,  op in  =  !=  >=  >  <=  <
               whitespace between tokens is insignificant
calendar   :=  "YYYY.MM.P"  (4-digit year, zero-padded 2-digit month, patch)

Ordering: versions compare segment-wise with the shorter side zero-padded;
on equal numeric parts a version without a suffix is greater than one with
a suffix, and suffixes compare lexicographically.  Leading zeros are
rejected so that parse/render round-trips byte-exactly.

All values here are immutable and all functions are pure.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

from .errors import PickforgeError

LT, EQ, GT = -1, 0, 1

_OPS = ("!=", ">=", "<=", "=", ">", "<")
_OP_CHARS = set("=!<>")
_TAG_CHARS = set("0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


class ParseError(PickforgeError):
    """Malformed version or constraint text; carries the byte offset."""

    def __init__(self, text: str, offset: int, reason: str):
        self.text = text
        self.offset = offset
        self.reason = reason
        super().__init__(f"{reason} at offset {offset} in {text!r}")


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    """A dotted numeric version with an optional prerelease suffix."""

    segments: tuple[int, ...]
    suffix: str | None = None

    def __post_init__(self) -> None:
        if not self.segments or any(s < 0 for s in self.segments):
            raise ValueError("segments must be non-empty and non-negative")
        if self.suffix is not None and (
            not self.suffix or not set(self.suffix) <= _TAG_CHARS
        ):
            raise ValueError(f"invalid suffix {self.suffix!r}")

    @property
    def major(self) -> int:
        return self.segments[0]

    def __str__(self) -> str:
        text = ".".join(str(s) for s in self.segments)
        return text if self.suffix is None else f"{text}-{self.suffix}"

    def _cmp(self, other: Version) -> int:
        for i in range(max(len(self.segments), len(other.segments))):
            a = self.segments[i] if i < len(self.segments) else 0
            b = other.segments[i] if i < len(other.segments) else 0
            if a != b:
                return LT if a < b else GT
        if self.suffix == other.suffix:
            return EQ
        # a plain release outranks any suffixed prerelease
        if self.suffix is None:
            return GT
        if other.suffix is None:
            return LT
        return LT if self.suffix < other.suffix else GT

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self._cmp(other) == EQ

    def __lt__(self, other: Version) -> bool:
        return self._cmp(other) == LT

    def __hash__(self) -> int:
        # "1.0" == "1.0.0", so hash ignores trailing zero segments
        trimmed = list(self.segments)
        while len(trimmed) > 1 and trimmed[-1] == 0:
            trimmed.pop()
        return hash((tuple(trimmed), self.suffix))


def compare_versions(a: Version, b: Version) -> int:
    """Total order on versions; returns LT, EQ, or GT."""
    return a._cmp(b)


def parse_version(text: str) -> Version:
    version, end = _scan_version(text, 0)
    if end != len(text):
        raise ParseError(text, end, "unexpected trailing text")
    return version


def _scan_number(text: str, pos: int) -> tuple[int, int]:
    start = pos
    # ASCII digits only: str.isdigit admits Unicode digits, which int()
    # converts and rendering would not round-trip byte-exactly
    while pos < len(text) and "0" <= text[pos] <= "9":
        pos += 1
    if pos == start:
        raise ParseError(text, start, "expected a digit")
    if text[start] == "0" and pos - start > 1:
        raise ParseError(text, start, "leading zero in version segment")
    return int(text[start:pos]), pos


def _scan_version(text: str, pos: int) -> tuple[Version, int]:
    segments = []
    number, pos = _scan_number(text, pos)
    segments.append(number)
    while pos < len(text) and text[pos] == ".":
        number, pos = _scan_number(text, pos + 1)
        segments.append(number)
    suffix = None
    if pos < len(text) and text[pos] == "-":
        start = pos + 1
        pos = start
        while pos < len(text) and text[pos] in _TAG_CHARS:
            pos += 1
        if pos == start:
            raise ParseError(text, start, "empty suffix tag")
        suffix = text[start:pos]
    return Version(tuple(segments), suffix), pos


@dataclass(frozen=True)
class Constraint:
    """Disjunction of clauses; each clause is a conjunction of (op, version) atoms.

    The universal constraint is the single empty clause and renders as "*".
    """

    clauses: tuple[tuple[tuple[str, Version], ...], ...]

    def __str__(self) -> str:
        if self.clauses == ((),):
            return "*"
        return " | ".join(
            ", ".join(f"{op}{version}" for op, version in clause)
            for clause in self.clauses
        )


UNIVERSAL = Constraint(((),))


def parse_constraint(text: str) -> Constraint:
    pos = _skip_ws(text, 0)
    if pos == len(text):
        raise ParseError(text, pos, "empty constraint")
    if text[pos] == "*":
        pos = _skip_ws(text, pos + 1)
        if pos != len(text):
            raise ParseError(text, pos, "unexpected trailing text")
        return UNIVERSAL
    clauses = []
    while True:
        clause, pos = _scan_clause(text, pos)
        clauses.append(clause)
        pos = _skip_ws(text, pos)
        if pos == len(text):
            return Constraint(tuple(clauses))
        if text[pos] != "|":
            raise ParseError(text, pos, "expected '|' or end of constraint")
        pos = _skip_ws(text, pos + 1)


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _scan_clause(text: str, pos: int) -> tuple[tuple[tuple[str, Version], ...], int]:
    atoms = []
    while True:
        atom, pos = _scan_atom(text, pos)
        atoms.append(atom)
        next_pos = _skip_ws(text, pos)
        if next_pos < len(text) and text[next_pos] == ",":
            pos = _skip_ws(text, next_pos + 1)
            continue
        return tuple(atoms), pos


def _scan_atom(text: str, pos: int) -> tuple[tuple[str, Version], int]:
    start = pos
    while pos < len(text) and text[pos] in _OP_CHARS:
        pos += 1
    op = text[start:pos]
    if op not in _OPS:
        raise ParseError(text, start, f"unknown operator {op or text[start:start + 1]!r}")
    pos = _skip_ws(text, pos)
    version, pos = _scan_version(text, pos)
    return (op, version), pos


_OP_TESTS = {
    "=": lambda c: c == EQ,
    "!=": lambda c: c != EQ,
    ">=": lambda c: c != LT,
    ">": lambda c: c == GT,
    "<=": lambda c: c != GT,
    "<": lambda c: c == LT,
}


def satisfies(version: Version, constraint: Constraint) -> bool:
    """True iff some clause of the constraint holds for the version."""
    return any(
        all(_OP_TESTS[op](compare_versions(version, bound)) for op, bound in clause)
        for clause in constraint.clauses
    )


@dataclass(frozen=True, order=True)
class CalendarVersion:
    """A calendar-based release identifier, rendered as YYYY.MM.P."""

    year: int
    month: int
    patch: int

    def __post_init__(self) -> None:
        if self.year < 2000:
            raise ValueError(f"year {self.year} before 2000")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} outside 1-12")
        if self.patch < 0:
            raise ValueError("negative patch")

    def __str__(self) -> str:
        return f"{self.year:04d}.{self.month:02d}.{self.patch}"


def _ascii_digits(text: str) -> bool:
    return bool(text) and all("0" <= ch <= "9" for ch in text)


def parse_calendar_version(text: str) -> CalendarVersion:
    parts = text.split(".")
    if len(parts) != 3:
        raise ParseError(text, 0, f"expected 3 dotted fields, got {len(parts)}")
    year_text, month_text, patch_text = parts
    if len(year_text) != 4 or not _ascii_digits(year_text):
        raise ParseError(text, 0, "expected a 4-digit year")
    if len(month_text) != 2 or not _ascii_digits(month_text):
        raise ParseError(text, 5, "expected a 2-digit month")
    if not _ascii_digits(patch_text) or (patch_text != "0" and patch_text[0] == "0"):
        raise ParseError(text, 8, "expected a patch number without leading zeros")
    year, month, patch = int(year_text), int(month_text), int(patch_text)
    if year < 2000:
        raise ParseError(text, 0, f"year {year} before 2000")
    if not 1 <= month <= 12:
        raise ParseError(text, 5, f"month {month} outside 1-12")
    return CalendarVersion(year, month, patch)
