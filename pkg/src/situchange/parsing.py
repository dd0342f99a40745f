"""Lenient parsing of numeric and clock answers out of model responses."""

from __future__ import annotations

import re
from typing import Optional

NUMBER_WORDS = (
    "zero", "one", "two", "three", "four", "five", "six",
    "seven", "eight", "nine", "ten", "eleven", "twelve",
)

_DIST_RE = re.compile(
    r"(-?\d+(?:\.\d+)?)\s*(m\b|meters?\b|metres?\b|cm\b|centimeters?\b|centimetres?\b)?",
    re.IGNORECASE,
)
_CLOCK_RE = re.compile(r"(\d{1,2})\s*o'?\s*clock", re.IGNORECASE)
_WORD_CLOCK_RE = re.compile(
    r"\b(" + "|".join(NUMBER_WORDS[1:]) + r")\s*o'?\s*clock", re.IGNORECASE
)


def number_word(n: int) -> str:
    """Spelled count for answers ("One", "Two"); digits beyond twelve."""
    if 0 <= n < len(NUMBER_WORDS):
        return NUMBER_WORDS[n].capitalize()
    return str(n)


def parse_distance_m(text: str) -> Optional[float]:
    """First distance in the text, normalized to meters.

    Accepts "1.6 m", "1.6m", "160 cm", and bare numbers (read as meters).
    """
    m = _DIST_RE.search(text)
    if not m:
        return None
    value = float(m.group(1))
    unit = (m.group(2) or "m").lower()
    if unit.startswith("c"):
        value /= 100.0
    return value


def parse_clock_hour(text: str) -> Optional[int]:
    """Clock hour from "11 o'clock" / "eleven o'clock" / a bare 1-12 integer."""
    m = _CLOCK_RE.search(text)
    if m:
        hour = int(m.group(1))
        return hour if 1 <= hour <= 12 else None
    m = _WORD_CLOCK_RE.search(text)
    if m:
        return NUMBER_WORDS.index(m.group(1).lower())
    m = re.fullmatch(r"\s*(\d{1,2})\s*", text)
    if m:
        hour = int(m.group(1))
        return hour if 1 <= hour <= 12 else None
    return None


def parse_count(text: str) -> Optional[int]:
    """Count from a spelled word or digits."""
    t = text.strip().lower().rstrip(".")
    if t in NUMBER_WORDS:
        return NUMBER_WORDS.index(t)
    m = re.fullmatch(r"(\d+)", t)
    if m:
        return int(m.group(1))
    m = re.match(r"(" + "|".join(NUMBER_WORDS) + r"|\d+)\b", t)
    if m:
        tok = m.group(1)
        return int(tok) if tok.isdigit() else NUMBER_WORDS.index(tok)
    return None


def normalize_text(text: str) -> str:
    return " ".join(text.strip().lower().split())


def pluralize(label: str) -> str:
    if label.endswith(("s", "x", "sh", "ch")):
        return label + "es"
    return label + "s"
