"""Regex detection of dates and years in evidence text.

Detected dates become pseudo-entities with ids in the reserved "date:"
namespace so that the same calendar date found in different evidences (or
given as a literal fact object) collapses to one graph node.

Supported patterns, normalized to ISO (YYYY-MM-DD or bare YYYY):
  - "14 May 2009"            day month-name year
  - "May 14, 2009"           month-name day year (comma optional)
  - "2009-05-14"             ISO year-month-day
  - "14.5.2009", "14/05/2009" numeric day-month-year
  - "05/14/2009"             numeric month-day-year (detected when the
                             second component cannot be a month)
  - "2009"                   bare four-digit year, 1000-2999

Ambiguous numeric dates (both components <= 12) are read day-month.
"""

import re

YEAR_MIN = 1000
YEAR_MAX = 2999

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5,
    "june": 6, "july": 7, "august": 8, "september": 9, "october": 10,
    "november": 11, "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7,
    "aug": 8, "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}

_MONTH_ALT = "|".join(sorted(_MONTHS, key=len, reverse=True))

_DAY_MONTH_YEAR = re.compile(
    rf"\b(\d{{1,2}})\s+({_MONTH_ALT})\.?,?\s+(\d{{4}})\b", re.IGNORECASE)
_MONTH_DAY_YEAR = re.compile(
    rf"\b({_MONTH_ALT})\.?\s+(\d{{1,2}}),?\s+(\d{{4}})\b", re.IGNORECASE)
_ISO_DATE = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_NUMERIC_DATE = re.compile(r"\b(\d{1,2})[./-](\d{1,2})[./-](\d{4})\b")
_BARE_YEAR = re.compile(r"\b([12]\d{3})\b")

_DAYS_IN_MONTH = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]


def _valid(year: int, month: int, day: int) -> bool:
    return (YEAR_MIN <= year <= YEAR_MAX
            and 1 <= month <= 12
            and 1 <= day <= _DAYS_IN_MONTH[month - 1])


def _iso(year: int, month: int, day: int) -> str:
    return f"{year:04d}-{month:02d}-{day:02d}"


def detect_temporal_expressions(text: str) -> list[tuple[str, tuple[int, int]]]:
    """Return (iso_form, (start, end)) for every date or year in ``text``.

    Full dates are matched first; years inside a matched date are not
    reported again. Results are ordered by span start.
    """
    found: list[tuple[str, tuple[int, int]]] = []
    covered: list[tuple[int, int]] = []

    def claim(iso: str, span: tuple[int, int]) -> None:
        for s, e in covered:
            if span[0] < e and s < span[1]:
                return
        covered.append(span)
        found.append((iso, span))

    for m in _DAY_MONTH_YEAR.finditer(text):
        day, month, year = int(m.group(1)), _MONTHS[m.group(2).lower()], int(m.group(3))
        if _valid(year, month, day):
            claim(_iso(year, month, day), m.span())
    for m in _MONTH_DAY_YEAR.finditer(text):
        month, day, year = _MONTHS[m.group(1).lower()], int(m.group(2)), int(m.group(3))
        if _valid(year, month, day):
            claim(_iso(year, month, day), m.span())
    for m in _ISO_DATE.finditer(text):
        year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if _valid(year, month, day):
            claim(_iso(year, month, day), m.span())
    for m in _NUMERIC_DATE.finditer(text):
        a, b, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if a > 12:
            day, month = a, b
        elif b > 12:
            month, day = a, b
        else:
            day, month = a, b
        if _valid(year, month, day):
            claim(_iso(year, month, day), m.span())
    for m in _BARE_YEAR.finditer(text):
        year = int(m.group(1))
        if YEAR_MIN <= year <= YEAR_MAX:
            claim(str(year), m.span())

    found.sort(key=lambda item: item[1])
    return found


def as_temporal_value(text: str) -> str | None:
    """ISO form when ``text`` as a whole is a single date or year, else None."""
    stripped = text.strip()
    hits = detect_temporal_expressions(stripped)
    if len(hits) == 1:
        iso, (start, end) = hits[0]
        if start == 0 and end == len(stripped):
            return iso
    return None
